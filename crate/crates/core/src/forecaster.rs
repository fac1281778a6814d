//! The common forecaster interface, the algorithm catalog, and the run
//! driver that turns a payoff sequence into a verifiable trace.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Distribution, PayoffSequence, SequenceStats};
use crate::prod::{theorem_eta, Prod, ProdM, ProdMq, ProdQ};
use crate::translate::{Translated, TranslationRule};
use crate::wm::{Wm, WmSchedule};

/// A sequential forecaster: commit a distribution, then observe the round's
/// payoff vector. Implementations are single-owner state machines; distinct
/// instances can run on distinct threads with no coordination.
pub trait Forecaster {
    fn num_experts(&self) -> usize;

    /// The distribution the forecaster commits for the upcoming round.
    fn predict(&self) -> Distribution;

    /// Feeds the revealed payoffs of the round just predicted.
    fn observe(&mut self, x: &[f64]) -> Result<()>;

    /// Identifier of the epoch whose learning rate produced the upcoming
    /// prediction ("0" for restart-free forecasters, "r:s" for nested ones).
    fn epoch_label(&self) -> String {
        "0".to_owned()
    }

    /// Predict-then-observe convenience, returning the prediction that was
    /// in force for this round.
    fn step(&mut self, x: &[f64]) -> Result<Distribution> {
        let p = self.predict();
        self.observe(x)?;
        Ok(p)
    }
}

impl Forecaster for Box<dyn Forecaster> {
    fn num_experts(&self) -> usize {
        (**self).num_experts()
    }

    fn predict(&self) -> Distribution {
        (**self).predict()
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        (**self).observe(x)
    }

    fn epoch_label(&self) -> String {
        (**self).epoch_label()
    }
}

/// Algorithm identifier plus tuning parameters, as recorded in run traces
/// and matched by the bound verifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AlgoSpec {
    /// `prod(eta)` with an explicitly chosen learning rate.
    Prod { eta: f64 },
    /// `prod` tuned from a payoff bound and a quadratic budget via
    /// `eta = min{1/(2M), sqrt((ln N)/Q)}`.
    ProdTuned { magnitude: f64, quad: f64 },
    /// `prod-Q(M)`: doubling over the quadratic penalty.
    ProdQ { magnitude: f64 },
    /// `prod-M(Q)`: doubling over the payoff magnitude.
    ProdM { quad: f64 },
    /// `prod-MQ`: nested doubling, fully parameter-free.
    ProdMq,
    /// Weighted majority with a constant learning rate.
    WmFixed { eta: f64 },
    /// Weighted majority, variance-adaptive, range bound known.
    WmKnown { range: f64 },
    /// Weighted majority, variance-adaptive, nothing known.
    WmUnknown,
}

impl AlgoSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AlgoSpec::Prod { .. } => "prod",
            AlgoSpec::ProdTuned { .. } => "prod-tuned",
            AlgoSpec::ProdQ { .. } => "prod-q",
            AlgoSpec::ProdM { .. } => "prod-m",
            AlgoSpec::ProdMq => "prod-mq",
            AlgoSpec::WmFixed { .. } => "wm-fixed",
            AlgoSpec::WmKnown { .. } => "wm-known",
            AlgoSpec::WmUnknown => "wm-unknown",
        }
    }

    pub fn build(&self, num_experts: usize) -> Result<Box<dyn Forecaster>> {
        Ok(match *self {
            AlgoSpec::Prod { eta } => Box::new(Prod::new(num_experts, eta)?),
            AlgoSpec::ProdTuned { magnitude, quad } => Box::new(Prod::new(
                num_experts,
                theorem_eta(magnitude, quad, num_experts)?,
            )?),
            AlgoSpec::ProdQ { magnitude } => Box::new(ProdQ::new(num_experts, magnitude)?),
            AlgoSpec::ProdM { quad } => Box::new(ProdM::new(num_experts, quad)?),
            AlgoSpec::ProdMq => Box::new(ProdMq::new(num_experts)?),
            AlgoSpec::WmFixed { eta } => Box::new(Wm::new(num_experts, WmSchedule::Fixed(eta))?),
            AlgoSpec::WmKnown { range } => {
                Box::new(Wm::new(num_experts, WmSchedule::KnownRange(range))?)
            }
            AlgoSpec::WmUnknown => Box::new(Wm::new(num_experts, WmSchedule::UnknownRange)?),
        })
    }
}

/// One row of a run trace: everything the round revealed and produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub payoffs: Vec<f64>,
    pub probs: Vec<f64>,
    /// The forecaster's reward `xhat_t` this round.
    pub reward: f64,
    /// `X*_t` after this round.
    pub best_cum: f64,
    /// `X*_t - Xhat_t` after this round.
    pub regret: f64,
    /// `Var Z_t` of this round.
    pub variance: f64,
    /// Effective range `E_t` of this round.
    pub range: f64,
    /// Magnitude tracker `M_t` after this round.
    pub magnitude: Option<f64>,
    /// `Q*_t` after this round.
    pub q_star: f64,
    /// Epoch whose learning rate produced this round's prediction.
    pub epoch: String,
}

/// A complete recorded run: configuration, per-round rows, and the final
/// statistics over the original (untranslated) payoffs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub algo: AlgoSpec,
    pub translation: TranslationRule,
    pub num_experts: usize,
    pub stats: SequenceStats,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    /// Regret `X*_n - Xhat_n` of the recorded run.
    pub fn regret(&self) -> f64 {
        self.stats.regret()
    }
}

/// Runs `algo` (behind the given translation rule) over the whole sequence
/// and records the trace. Statistics are always computed on the original
/// payoffs; the translation only affects what the forecaster's update sees.
pub fn run(
    algo: &AlgoSpec,
    translation: TranslationRule,
    seq: &PayoffSequence,
) -> Result<RunTrace> {
    let mut forecaster = Translated::new(translation, algo.build(seq.num_experts())?);
    let mut stats = SequenceStats::new(seq.num_experts())?;
    let mut rows = Vec::with_capacity(seq.num_rounds());
    for t in 1..=seq.num_rounds() {
        let x = seq.round(t);
        let p = forecaster.predict();
        let epoch = forecaster.epoch_label();
        stats.update(x, &p)?;
        rows.push(TraceRow {
            t,
            payoffs: x.to_vec(),
            probs: p.probs().to_vec(),
            reward: p.expected_payoff(x),
            best_cum: stats.best_cum_payoff(),
            regret: stats.regret(),
            variance: p.payoff_variance(x),
            range: stats.last_range(),
            magnitude: stats.magnitude(),
            q_star: stats.q_star(),
            epoch,
        });
        forecaster.observe(x)?;
    }
    Ok(RunTrace {
        algo: *algo,
        translation,
        num_experts: seq.num_experts(),
        stats,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_records_one_row_per_round() {
        let seq = PayoffSequence::new(
            2,
            (0..10).map(|t| vec![0.1 * t as f64, -0.05]).collect(),
        )
        .unwrap();
        let trace = run(&AlgoSpec::WmUnknown, TranslationRule::None, &seq).unwrap();
        assert_eq!(trace.rows.len(), 10);
        assert_eq!(trace.rows[0].t, 1);
        assert_eq!(trace.rows[9].t, 10);
        // Probabilities in every row are a distribution.
        for row in &trace.rows {
            let sum: f64 = row.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_totals_match_row_sums() {
        let seq = PayoffSequence::new(
            3,
            (0..25)
                .map(|t| vec![(t % 3) as f64 * 0.2 - 0.2, 0.1, -0.3])
                .collect(),
        )
        .unwrap();
        let trace = run(
            &AlgoSpec::ProdQ { magnitude: 1.0 },
            TranslationRule::None,
            &seq,
        )
        .unwrap();
        let reward_sum: f64 = trace.rows.iter().map(|r| r.reward).sum();
        let var_sum: f64 = trace.rows.iter().map(|r| r.variance).sum();
        assert!((reward_sum - trace.stats.cum_reward()).abs() < 1e-9);
        assert!((var_sum - trace.stats.cum_variance()).abs() < 1e-9);
        assert!(
            (trace.regret() - (trace.stats.best_cum_payoff() - reward_sum)).abs() < 1e-9
        );
    }

    #[test]
    fn algo_spec_labels_and_build() {
        let specs = [
            AlgoSpec::Prod { eta: 0.1 },
            AlgoSpec::ProdTuned {
                magnitude: 1.0,
                quad: 10.0,
            },
            AlgoSpec::ProdQ { magnitude: 1.0 },
            AlgoSpec::ProdM { quad: 5.0 },
            AlgoSpec::ProdMq,
            AlgoSpec::WmFixed { eta: 0.5 },
            AlgoSpec::WmKnown { range: 2.0 },
            AlgoSpec::WmUnknown,
        ];
        for spec in specs {
            let f = spec.build(4).unwrap();
            assert_eq!(f.num_experts(), 4);
            assert!(!spec.label().is_empty());
        }
        assert!(AlgoSpec::Prod { eta: -1.0 }.build(4).is_err());
    }
}
