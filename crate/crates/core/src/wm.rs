//! Weighted majority (exponentially weighted average) forecaster with fixed
//! and variance-adaptive time-varying learning rates.
//!
//! Predictions are exponential in the cumulative payoffs,
//! `p_{i,t} = exp(eta_t X_{i,t-1}) / sum_j exp(eta_t X_{j,t-1})`, with round
//! one uniform. The adaptive schedules pick
//!
//! ```text
//! known range E:    eta_t = min{ 1/E,       C sqrt((ln N) / V_{t-1}) }
//! unknown range:    eta_t = min{ 1/E_{t-1}, C sqrt((ln N) / V_{t-1}) }
//! ```
//!
//! where `V_t` is the cumulative variance of the forecaster's payoff,
//! `E_t` the power-of-two tracker of the effective ranges seen so far, and
//! `C = sqrt(2(sqrt 2 - 1)/(e - 2)) ~ 1.07`. Both schedules are
//! nonincreasing in `t`, which the regret analysis requires.
//!
//! The per-round potential
//! `Phi(p, eta, x) = (1/eta) ln sum_i p_i exp(eta (x_i - xhat))`
//! is what the analysis charges each round; it is nonnegative, at most the
//! effective range, and at most `(e-2) eta Var Z_t` whenever
//! `eta * range <= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::Forecaster;
use crate::model::{range_tracker, stable_softmax, Distribution};

/// `C = sqrt(2 (sqrt 2 - 1) / (e - 2))`, the constant of the
/// variance-adaptive learning rates.
pub fn rate_constant() -> f64 {
    (2.0 * (std::f64::consts::SQRT_2 - 1.0) / (std::f64::consts::E - 2.0)).sqrt()
}

/// Learning-rate schedule of the weighted majority forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WmSchedule {
    /// Constant rate (the zero-order baseline).
    Fixed(f64),
    /// A bound `E` on all effective ranges is known beforehand.
    KnownRange(f64),
    /// Nothing is known; ranges are tracked on-line.
    UnknownRange,
}

/// Weighted majority forecaster state: cumulative payoffs `X_{i,t-1}` plus
/// the aggregates the next learning rate is computed from.
#[derive(Debug, Clone)]
pub struct Wm {
    schedule: WmSchedule,
    cum_payoffs: Vec<f64>,
    cum_variance: f64,
    range_guess: Option<f64>,
    rate_constant: f64,
    ln_experts: f64,
}

impl Wm {
    pub fn new(num_experts: usize, schedule: WmSchedule) -> Result<Self> {
        if num_experts < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 experts, got {num_experts}"
            )));
        }
        match schedule {
            WmSchedule::Fixed(eta) if !eta.is_finite() || eta <= 0.0 => {
                return Err(Error::InvalidInput(format!(
                    "fixed learning rate must be positive, got {eta}"
                )));
            }
            WmSchedule::KnownRange(e) if !e.is_finite() || e <= 0.0 => {
                return Err(Error::InvalidInput(format!(
                    "range bound must be positive, got {e}"
                )));
            }
            _ => {}
        }
        Ok(Self {
            schedule,
            cum_payoffs: vec![0.0; num_experts],
            cum_variance: 0.0,
            range_guess: None,
            rate_constant: rate_constant(),
            ln_experts: (num_experts as f64).ln(),
        })
    }

    pub fn schedule(&self) -> WmSchedule {
        self.schedule
    }

    /// Cumulative variance `V_{t-1}` accumulated so far.
    pub fn cum_variance(&self) -> f64 {
        self.cum_variance
    }

    /// Power-of-two range tracker `E_{t-1}`; `None` before any spread.
    pub fn range_guess(&self) -> Option<f64> {
        self.range_guess
    }

    /// The learning rate the next prediction will use. `None` is the
    /// +infinity sentinel of the unknown-range schedule before any payoff
    /// spread has been observed; prediction then falls back to uniform
    /// (cumulative payoffs are all equal in that case anyway).
    pub fn learning_rate(&self) -> Option<f64> {
        let variance_term = if self.cum_variance > 0.0 {
            Some(self.rate_constant * (self.ln_experts / self.cum_variance).sqrt())
        } else {
            None
        };
        match self.schedule {
            WmSchedule::Fixed(eta) => Some(eta),
            WmSchedule::KnownRange(e) => {
                let range_term = 1.0 / e;
                Some(variance_term.map_or(range_term, |v| v.min(range_term)))
            }
            WmSchedule::UnknownRange => {
                let range_term = self.range_guess.map(|e| 1.0 / e);
                match (range_term, variance_term) {
                    (Some(r), Some(v)) => Some(r.min(v)),
                    (Some(r), None) => Some(r),
                    (None, Some(v)) => Some(v),
                    (None, None) => None,
                }
            }
        }
    }
}

impl Forecaster for Wm {
    fn num_experts(&self) -> usize {
        self.cum_payoffs.len()
    }

    fn predict(&self) -> Distribution {
        match self.learning_rate() {
            None => Distribution::uniform(self.cum_payoffs.len()),
            Some(eta) => {
                let scores: Vec<f64> = self.cum_payoffs.iter().map(|x| eta * x).collect();
                Distribution::new(stable_softmax(&scores))
                    .expect("softmax output is a valid distribution")
            }
        }
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.cum_payoffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cum_payoffs.len(),
                got: x.len(),
            });
        }
        let p = self.predict();
        self.cum_variance += p.payoff_variance(x);
        self.range_guess = range_tracker(x, self.range_guess)?;
        for (cum, &v) in self.cum_payoffs.iter_mut().zip(x) {
            *cum += v;
        }
        Ok(())
    }
}

/// The round potential
/// `Phi(p, eta, x) = (1/eta) ln sum_i p_i exp(eta (x_i - xhat))`,
/// with `xhat = sum_i p_i x_i`.
///
/// Computed from max-shifted exponents over the support of `p`, with the
/// probability mass renormalized so that the tiny slack a softmax leaves in
/// `sum p_i` is not amplified by `1/eta`.
pub fn phi(p: &Distribution, eta: f64, x: &[f64]) -> Result<f64> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "phi needs a positive learning rate, got {eta}"
        )));
    }
    if x.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: x.len(),
        });
    }
    let mass: f64 = p.probs().iter().sum();
    let mean: f64 = p.probs().iter().zip(x).map(|(pi, xi)| pi / mass * xi).sum();
    let mut shift = f64::NEG_INFINITY;
    for (pi, xi) in p.probs().iter().zip(x) {
        if *pi > 0.0 {
            shift = shift.max(eta * (xi - mean));
        }
    }
    let total: f64 = p
        .probs()
        .iter()
        .zip(x)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, xi)| pi / mass * (eta * (xi - mean) - shift).exp())
        .sum();
    Ok((shift + total.ln()) / eta)
}
