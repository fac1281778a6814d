//! Closed-form evaluators for the regret bound catalog and a verifier that
//! compares them against measured regret.
//!
//! Every bound is evaluated as its full expression — every lower-order term,
//! explicit constants — never an O(.) simplification, so each report is a
//! falsifiable inequality. `bound_value` is the proven lower bound on
//! `Xhat_n - X*_n` (a nonpositive number); `measured` is the realized
//! difference; `holds` means `measured >= bound_value` up to a relative
//! floating-point tolerance. A `holds = false` on a valid run is a defect
//! in the forecaster or the evaluator, never an acceptable outcome.
//!
//! The catalog:
//!
//! | id  | forecaster                     | leading term                         |
//! |-----|--------------------------------|--------------------------------------|
//! | B1  | prod(eta)                      | (ln N)/eta + eta Q_{k,n}             |
//! | B2  | prod, tuned (M, Q)             | max{2 sqrt(Q ln N), 4 M ln N}        |
//! | B3  | prod-Q(M)                      | 8 sqrt((ln N) max_s Q*_s)            |
//! | B4  | prod-M(Q)                      | 2 sqrt(Q ln N) + 12 M (1 + ln N)     |
//! | B5  | prod-MQ                        | 32 M sqrt(q ln N)                    |
//! | B6  | wm, known range E              | 4 sqrt(V_n ln N) + 2 E ln N + E/2    |
//! | B7  | wm, unknown range              | 4 sqrt(V_n ln N) + 4 E ln N + 6 E    |
//! | B8  | wm, unknown range              | 2 sqrt((ln N) sum_t E_t^2)           |
//! | B9  | prod-Q(E), reward-translated   | 8 sqrt((ln N) max_s R*_s)            |
//! | B10 | wm, unknown range, one-sided   | 4 sqrt(|X*|(M - |X*|/n) ln N)        |
//! | B11 | prod-Q(2M), reward, one-sided  | 8 sqrt(2 M min{|X*|, Mn-|X*|} ln N)  |
//! | B12 | wm, unknown range, signed      | min of the two one-sided translations|
//!
//! B10 and B11 refuse signed inputs: the one-sidedness assumption cannot be
//! relaxed. B12 is their signed-game counterpart, obtained by applying the
//! one-sided bound to the two canonical translations (by the per-round min
//! and by the per-round max) and keeping the better of the two — the
//! weighted majority forecaster is translation invariant, so its realized
//! regret is simultaneously subject to both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{AlgoSpec, RunTrace};
use crate::prod::theorem_eta;
use crate::translate::TranslationRule;

/// Relative tolerance for `holds`: `slack >= -1e-9 * (1 + |measured|)`.
pub const HOLDS_TOLERANCE: f64 = 1e-9;

/// Relative slack accepted when checking run preconditions (payoff and
/// range bounds) against realized statistics.
const PRECONDITION_SLACK: f64 = 1e-12;

/// Identifier of one theorem/corollary in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundId {
    /// B1: the per-expert prod inequality, exact in eta.
    #[serde(rename = "B1")]
    ProdLemma,
    /// B2: tuned prod with known payoff bound and quadratic budget.
    #[serde(rename = "B2")]
    ProdTheorem,
    /// B3: prod-Q doubling on the quadratic penalty envelope.
    #[serde(rename = "B3")]
    ProdQDoubling,
    /// B4: prod-M doubling on the magnitude tracker.
    #[serde(rename = "B4")]
    ProdMDoubling,
    /// B5: prod-MQ nested doubling, scale free.
    #[serde(rename = "B5")]
    ProdMqNested,
    /// B6: weighted majority with a known range bound.
    #[serde(rename = "B6")]
    WmKnownRange,
    /// B7: weighted majority with tracked ranges.
    #[serde(rename = "B7")]
    WmUnknownRange,
    /// B8: the range corollary, sum of squared per-round ranges.
    #[serde(rename = "B8")]
    WmRangeSum,
    /// B9: reward-translated prod-Q phrased in translated penalties R*.
    #[serde(rename = "B9")]
    ProdQTranslated,
    /// B10: one-sided improvement for weighted majority.
    #[serde(rename = "B10")]
    OneSidedWm,
    /// B11: one-sided improvement for reward-translated prod-Q.
    #[serde(rename = "B11")]
    OneSidedProd,
    /// B12: signed-game min over the two one-sided translations.
    #[serde(rename = "B12")]
    SignedMin,
}

impl BoundId {
    pub fn code(&self) -> &'static str {
        match self {
            BoundId::ProdLemma => "B1",
            BoundId::ProdTheorem => "B2",
            BoundId::ProdQDoubling => "B3",
            BoundId::ProdMDoubling => "B4",
            BoundId::ProdMqNested => "B5",
            BoundId::WmKnownRange => "B6",
            BoundId::WmUnknownRange => "B7",
            BoundId::WmRangeSum => "B8",
            BoundId::ProdQTranslated => "B9",
            BoundId::OneSidedWm => "B10",
            BoundId::OneSidedProd => "B11",
            BoundId::SignedMin => "B12",
        }
    }

    pub fn all() -> [BoundId; 12] {
        [
            BoundId::ProdLemma,
            BoundId::ProdTheorem,
            BoundId::ProdQDoubling,
            BoundId::ProdMDoubling,
            BoundId::ProdMqNested,
            BoundId::WmKnownRange,
            BoundId::WmUnknownRange,
            BoundId::WmRangeSum,
            BoundId::ProdQTranslated,
            BoundId::OneSidedWm,
            BoundId::OneSidedProd,
            BoundId::SignedMin,
        ]
    }
}

impl std::str::FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        BoundId::all()
            .into_iter()
            .find(|b| b.code() == upper)
            .ok_or_else(|| Error::InvalidInput(format!("unknown bound id '{s}'")))
    }
}

impl std::fmt::Display for BoundId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// One evaluated bound against one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: BoundId,
    /// The proven lower bound on `Xhat_n - X_{k,n}` (nonpositive).
    pub bound_value: f64,
    /// The realized `Xhat_n - X*_n` (or `Xhat_n - X_{k,n}` for per-expert
    /// bounds, at the expert with the least slack).
    pub measured: f64,
    /// `measured - bound_value`.
    pub slack: f64,
    pub holds: bool,
    /// The comparison expert for per-expert bounds.
    pub expert: Option<usize>,
}

impl BoundReport {
    fn build(bound: BoundId, bound_value: f64, measured: f64, expert: Option<usize>) -> Self {
        let slack = measured - bound_value;
        BoundReport {
            bound,
            bound_value,
            measured,
            slack,
            holds: slack >= -HOLDS_TOLERANCE * (1.0 + measured.abs()),
            expert,
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form bound expressions. All return the (nonpositive) lower bound on
// the reward difference; `ln_experts` is ln N throughout.
// ---------------------------------------------------------------------------

/// B1: `-(ln N)/eta - eta Q_{k,n}`.
pub fn prod_lemma(eta: f64, ln_experts: f64, quad_k: f64) -> f64 {
    -(ln_experts / eta) - eta * quad_k
}

/// B2: `-max{2 sqrt(Q ln N), 4 M ln N}`.
pub fn prod_theorem(magnitude: f64, quad_bound: f64, ln_experts: f64) -> f64 {
    let leading = (2.0 * (quad_bound * ln_experts).sqrt()).max(4.0 * magnitude * ln_experts);
    -leading
}

/// Shared remainder of the quadratic doubling trick:
/// `2 scale (1 + log4 n + 2 (1 + floor((log2 ln N)/2)) ln N)`.
fn doubling_remainder(scale: f64, rounds: usize, ln_experts: f64) -> f64 {
    let log4_rounds = (rounds as f64).ln() / 4f64.ln();
    let depth = (ln_experts.log2() / 2.0).floor();
    2.0 * scale * (1.0 + log4_rounds + 2.0 * (1.0 + depth) * ln_experts)
}

/// B3: `-8 sqrt((ln N) max_s Q*_s) - 2M(1 + log4 n + 2(1 + floor((log2 ln N)/2)) ln N)`.
pub fn prod_q_doubling(magnitude: f64, ln_experts: f64, rounds: usize, q_star_env: f64) -> f64 {
    -(8.0 * (ln_experts * q_star_env).sqrt() + doubling_remainder(magnitude, rounds, ln_experts))
}

/// B4: `-2 sqrt(Q ln N) - 12 M (1 + ln N)` with `M` the realized magnitude.
pub fn prod_m_doubling(quad_bound: f64, realized_magnitude: f64, ln_experts: f64) -> f64 {
    -(2.0 * (quad_bound * ln_experts).sqrt() + 12.0 * realized_magnitude * (1.0 + ln_experts))
}

/// B5: `-32 M sqrt(q ln N) - 22 M (1 + ln N) - 2 M log2 n - 4 M ceil((log2 ln N)/2)`
/// with `q = max{1, max_s Q*_s / M_s^2}` and `M` the realized magnitude.
pub fn prod_mq_nested(
    realized_magnitude: f64,
    ratio_envelope: f64,
    rounds: usize,
    ln_experts: f64,
) -> f64 {
    let q = ratio_envelope.max(1.0);
    let m = realized_magnitude;
    -(32.0 * m * (q * ln_experts).sqrt()
        + 22.0 * m * (1.0 + ln_experts)
        + 2.0 * m * (rounds as f64).log2()
        + 4.0 * m * (ln_experts.log2() / 2.0).ceil())
}

/// B6: `-4 sqrt(V_n ln N) - 2 E ln N - E/2` for a declared range bound `E`.
pub fn wm_known_range(range_bound: f64, cum_variance: f64, ln_experts: f64) -> f64 {
    -(4.0 * (cum_variance * ln_experts).sqrt() + 2.0 * range_bound * ln_experts + range_bound / 2.0)
}

/// B7: `-4 sqrt(V_n ln N) - 4 E ln N - 6 E` with `E` the realized max range.
pub fn wm_unknown_range(realized_range: f64, cum_variance: f64, ln_experts: f64) -> f64 {
    -(4.0 * (cum_variance * ln_experts).sqrt()
        + 4.0 * realized_range * ln_experts
        + 6.0 * realized_range)
}

/// B8: `-2 sqrt((ln N) sum_t E_t^2) - 4 E ln N - 6 E`.
pub fn wm_range_sum(realized_range: f64, range_sq_sum: f64, ln_experts: f64) -> f64 {
    -(2.0 * (ln_experts * range_sq_sum).sqrt()
        + 4.0 * realized_range * ln_experts
        + 6.0 * realized_range)
}

/// B9: `-8 sqrt((ln N) max_s R*_s) - 2E(1 + log4 n + 2(1 + floor((log2 ln N)/2)) ln N)`.
pub fn prod_q_translated(range_bound: f64, ln_experts: f64, rounds: usize, r_star_env: f64) -> f64 {
    -(8.0 * (ln_experts * r_star_env).sqrt() + doubling_remainder(range_bound, rounds, ln_experts))
}

/// B10: `-4 sqrt(|X*|(M - |X*|/n) ln N) - 39 M max{1, ln N}` on one-sided
/// games, `M` the realized magnitude.
pub fn one_sided_wm(
    realized_magnitude: f64,
    best_abs: f64,
    rounds: usize,
    ln_experts: f64,
) -> f64 {
    let inner = (best_abs * (realized_magnitude - best_abs / rounds as f64)).max(0.0);
    -(4.0 * (inner * ln_experts).sqrt() + 39.0 * realized_magnitude * ln_experts.max(1.0))
}

/// The kappa remainder of the one-sided prod corollary:
/// `4M(1 + log4 n + 2(1 + floor((log2 ln N)/2)) ln N)`.
pub fn one_sided_prod_kappa(declared_magnitude: f64, rounds: usize, ln_experts: f64) -> f64 {
    2.0 * doubling_remainder(declared_magnitude, rounds, ln_experts)
}

/// B11: `-8 sqrt(2 M min{|X*|, Mn - |X*|} ln N) - 128 M ln N - kappa
/// - 8 sqrt(2 M (ln N) kappa)` for prod-Q(2M) under reward translation on a
/// one-sided game with declared payoff bound `M`.
pub fn one_sided_prod(
    declared_magnitude: f64,
    best_abs: f64,
    rounds: usize,
    ln_experts: f64,
) -> f64 {
    let m = declared_magnitude;
    let kappa = one_sided_prod_kappa(m, rounds, ln_experts);
    let inner = best_abs.min(m * rounds as f64 - best_abs).max(0.0);
    -(8.0 * (2.0 * m * inner * ln_experts).sqrt()
        + 128.0 * m * ln_experts
        + kappa
        + 8.0 * (2.0 * m * ln_experts * kappa).sqrt())
}

/// B12: the better of the two one-sided translations of a signed game.
///
/// `gain_mass = X*_n - sum_t min_j x_{j,t}` is the best cumulative payoff
/// after translating by the per-round minimum (a gain game);
/// `loss_mass = sum_t max_j x_{j,t} - X*_n` after translating by the
/// per-round maximum (a loss game). Both translated games have magnitude at
/// most the realized range sup, and the forecaster is translation
/// invariant, so the one-sided bound applies to each.
pub fn signed_min(
    realized_range: f64,
    gain_mass: f64,
    loss_mass: f64,
    rounds: usize,
    ln_experts: f64,
) -> f64 {
    let side = |mass: f64| -one_sided_wm(realized_range, mass.max(0.0), rounds, ln_experts);
    -side(gain_mass).min(side(loss_mass))
}

// ---------------------------------------------------------------------------
// Reference comparators, in the summary forms the overview chapter states
// them (no algorithm-specific constants). Reported alongside the catalog for
// tightness comparisons; never part of a pass/fail verdict.
// ---------------------------------------------------------------------------

/// Zero-order reference `-M sqrt(n ln N)`.
pub fn zero_order_reference(magnitude: f64, rounds: usize, ln_experts: f64) -> f64 {
    -(magnitude * (rounds as f64 * ln_experts).sqrt())
}

/// First-order reference `-(sqrt(M (ln N) max_s A*_s) + M ln N)`.
pub fn first_order_reference(magnitude: f64, abs_star_env: f64, ln_experts: f64) -> f64 {
    -((magnitude * ln_experts * abs_star_env).sqrt() + magnitude * ln_experts)
}

/// Second-order reference `-(sqrt((ln N) max_s Q*_s) + M ln N)`.
pub fn second_order_reference(magnitude: f64, q_star_env: f64, ln_experts: f64) -> f64 {
    -((ln_experts * q_star_env).sqrt() + magnitude * ln_experts)
}

// ---------------------------------------------------------------------------
// Verifier
// ---------------------------------------------------------------------------

fn require(condition: bool, bound: BoundId, message: &str) -> Result<()> {
    if condition {
        Ok(())
    } else {
        Err(Error::Config(format!("{}: {}", bound.code(), message)))
    }
}

fn require_translation(trace: &RunTrace, bound: BoundId, rule: TranslationRule) -> Result<()> {
    require(
        trace.translation == rule,
        bound,
        &format!(
            "needs translation rule '{}', run used '{}'",
            rule, trace.translation
        ),
    )
}

fn one_sidedness(trace: &RunTrace) -> Option<bool> {
    // true: gain game; false: loss game; None: signed.
    if trace.stats.min_payoff() >= 0.0 {
        Some(true)
    } else if trace.stats.max_payoff() <= 0.0 {
        Some(false)
    } else {
        None
    }
}

/// Smallest-slack report over a set of per-expert inequalities.
fn worst_expert_report(
    bound: BoundId,
    trace: &RunTrace,
    bound_for: impl Fn(usize) -> f64,
    qualifies: impl Fn(usize) -> bool,
) -> Result<BoundReport> {
    let stats = &trace.stats;
    let mut worst: Option<(usize, f64, f64)> = None;
    for k in 0..stats.num_experts() {
        if !qualifies(k) {
            continue;
        }
        let bound_value = bound_for(k);
        let measured = stats.cum_reward() - stats.cum_payoffs()[k];
        let slack = measured - bound_value;
        let tightest_so_far = match worst {
            None => true,
            Some((_, bv, ms)) => slack < ms - bv,
        };
        if tightest_so_far {
            worst = Some((k, bound_value, measured));
        }
    }
    let (expert, bound_value, measured) = worst.ok_or_else(|| {
        Error::Config(format!(
            "{}: no expert satisfies the bound's quadratic budget",
            bound.code()
        ))
    })?;
    Ok(BoundReport::build(bound, bound_value, measured, Some(expert)))
}

/// Evaluates the bound expression for a recorded run, without the verdict.
pub fn evaluate(trace: &RunTrace, bound: BoundId) -> Result<f64> {
    verify(trace, bound).map(|report| report.bound_value)
}

/// Fills a [`BoundReport`] for one catalog entry against one recorded run.
///
/// Mismatched algorithm, translation rule, or an unmet precondition (payoff
/// bound, range bound, one-sidedness) is a configuration error, not a
/// violation.
pub fn verify(trace: &RunTrace, bound: BoundId) -> Result<BoundReport> {
    let stats = &trace.stats;
    let rounds = stats.rounds();
    if rounds == 0 {
        return Err(Error::MissingStatistic("at least one recorded round"));
    }
    let ln_experts = (trace.num_experts as f64).ln();
    let regret_measured = stats.cum_reward() - stats.best_cum_payoff();

    match bound {
        BoundId::ProdLemma => {
            require_translation(trace, bound, TranslationRule::None)?;
            let eta = match trace.algo {
                AlgoSpec::Prod { eta } => eta,
                AlgoSpec::ProdTuned { magnitude, quad } => {
                    theorem_eta(magnitude, quad, trace.num_experts)?
                }
                other => {
                    return Err(Error::Config(format!(
                        "B1: needs a fixed-rate prod run, got {}",
                        other.label()
                    )))
                }
            };
            require(
                eta * stats.min_payoff() >= -0.5 * (1.0 + 1e-9),
                bound,
                "eta exceeds 1/(2M) for the realized payoffs",
            )?;
            worst_expert_report(
                bound,
                trace,
                |k| prod_lemma(eta, ln_experts, stats.quads()[k]),
                |_| true,
            )
        }
        BoundId::ProdTheorem => {
            require_translation(trace, bound, TranslationRule::None)?;
            let (magnitude, quad) = match trace.algo {
                AlgoSpec::ProdTuned { magnitude, quad } => (magnitude, quad),
                other => {
                    return Err(Error::Config(format!(
                        "B2: needs a tuned prod run, got {}",
                        other.label()
                    )))
                }
            };
            require(
                stats.min_payoff() >= -magnitude * (1.0 + PRECONDITION_SLACK),
                bound,
                "payoffs dropped below the declared -M",
            )?;
            let bound_value = prod_theorem(magnitude, quad, ln_experts);
            worst_expert_report(
                bound,
                trace,
                |_| bound_value,
                |k| stats.quads()[k] <= quad * (1.0 + PRECONDITION_SLACK),
            )
        }
        BoundId::ProdQDoubling => {
            require_translation(trace, bound, TranslationRule::None)?;
            let magnitude = match trace.algo {
                AlgoSpec::ProdQ { magnitude } => magnitude,
                other => {
                    return Err(Error::Config(format!(
                        "B3: needs a prod-Q run, got {}",
                        other.label()
                    )))
                }
            };
            let bound_value =
                prod_q_doubling(magnitude, ln_experts, rounds, stats.q_star_envelope());
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::ProdMDoubling => {
            require_translation(trace, bound, TranslationRule::None)?;
            let quad = match trace.algo {
                AlgoSpec::ProdM { quad } => quad,
                other => {
                    return Err(Error::Config(format!(
                        "B4: needs a prod-M run, got {}",
                        other.label()
                    )))
                }
            };
            let bound_value = prod_m_doubling(quad, stats.max_abs_payoff(), ln_experts);
            worst_expert_report(
                bound,
                trace,
                |_| bound_value,
                |k| stats.quads()[k] <= quad * (1.0 + PRECONDITION_SLACK),
            )
        }
        BoundId::ProdMqNested => {
            require_translation(trace, bound, TranslationRule::None)?;
            require(
                matches!(trace.algo, AlgoSpec::ProdMq),
                bound,
                "needs a prod-MQ run",
            )?;
            let bound_value = prod_mq_nested(
                stats.max_abs_payoff(),
                stats.ratio_envelope(),
                rounds,
                ln_experts,
            );
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::WmKnownRange => {
            require_translation(trace, bound, TranslationRule::None)?;
            let range = match trace.algo {
                AlgoSpec::WmKnown { range } => range,
                other => {
                    return Err(Error::Config(format!(
                        "B6: needs a known-range weighted majority run, got {}",
                        other.label()
                    )))
                }
            };
            require(
                stats.range_sup() <= range * (1.0 + PRECONDITION_SLACK),
                bound,
                "a realized range exceeded the declared bound E",
            )?;
            let bound_value = wm_known_range(range, stats.cum_variance(), ln_experts);
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::WmUnknownRange => {
            require_translation(trace, bound, TranslationRule::None)?;
            require(
                matches!(trace.algo, AlgoSpec::WmUnknown),
                bound,
                "needs an unknown-range weighted majority run",
            )?;
            let bound_value = wm_unknown_range(stats.range_sup(), stats.cum_variance(), ln_experts);
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::WmRangeSum => {
            require_translation(trace, bound, TranslationRule::None)?;
            require(
                matches!(trace.algo, AlgoSpec::WmUnknown),
                bound,
                "needs an unknown-range weighted majority run",
            )?;
            let bound_value = wm_range_sum(stats.range_sup(), stats.range_sq_sum(), ln_experts);
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::ProdQTranslated => {
            require_translation(trace, bound, TranslationRule::Reward)?;
            let range_bound = match trace.algo {
                AlgoSpec::ProdQ { magnitude } => magnitude,
                other => {
                    return Err(Error::Config(format!(
                        "B9: needs a prod-Q run, got {}",
                        other.label()
                    )))
                }
            };
            require(
                stats.range_sup() <= range_bound * (1.0 + PRECONDITION_SLACK),
                bound,
                "a realized range exceeded the declared bound E",
            )?;
            let bound_value =
                prod_q_translated(range_bound, ln_experts, rounds, stats.r_star_envelope());
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::OneSidedWm => {
            require_translation(trace, bound, TranslationRule::None)?;
            require(
                matches!(trace.algo, AlgoSpec::WmUnknown),
                bound,
                "needs an unknown-range weighted majority run",
            )?;
            require(
                one_sidedness(trace).is_some(),
                bound,
                "one-sidedness cannot be relaxed; refusing a signed input",
            )?;
            let bound_value = one_sided_wm(
                stats.max_abs_payoff(),
                stats.best_cum_payoff().abs(),
                rounds,
                ln_experts,
            );
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::OneSidedProd => {
            require_translation(trace, bound, TranslationRule::Reward)?;
            let doubled = match trace.algo {
                AlgoSpec::ProdQ { magnitude } => magnitude,
                other => {
                    return Err(Error::Config(format!(
                        "B11: needs a prod-Q run, got {}",
                        other.label()
                    )))
                }
            };
            require(
                one_sidedness(trace).is_some(),
                bound,
                "one-sidedness cannot be relaxed; refusing a signed input",
            )?;
            // The corollary runs prod-Q(2M) for payoffs bounded by M.
            let declared = doubled / 2.0;
            require(
                stats.max_abs_payoff() <= declared * (1.0 + PRECONDITION_SLACK),
                bound,
                "payoffs exceeded the declared bound M (prod-Q parameter must be 2M)",
            )?;
            let bound_value = one_sided_prod(
                declared,
                stats.best_cum_payoff().abs(),
                rounds,
                ln_experts,
            );
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
        BoundId::SignedMin => {
            require_translation(trace, bound, TranslationRule::None)?;
            require(
                matches!(trace.algo, AlgoSpec::WmUnknown),
                bound,
                "needs an unknown-range weighted majority run",
            )?;
            let gain_mass = stats.best_cum_payoff() - stats.sum_round_min();
            let loss_mass = stats.sum_round_max() - stats.best_cum_payoff();
            let bound_value =
                signed_min(stats.range_sup(), gain_mass, loss_mass, rounds, ln_experts);
            Ok(BoundReport::build(bound, bound_value, regret_measured, None))
        }
    }
}

/// Verifies a whole catalog slice, in order.
pub fn verify_all(trace: &RunTrace, bounds: &[BoundId]) -> Result<Vec<BoundReport>> {
    bounds.iter().map(|b| verify(trace, *b)).collect()
}

/// The catalog entries applicable to a recorded run, given its algorithm,
/// translation rule and realized sign regime.
pub fn compatible_bounds(trace: &RunTrace) -> Vec<BoundId> {
    let one_sided = one_sidedness(trace).is_some();
    let mut out = Vec::new();
    match (trace.algo, trace.translation) {
        (AlgoSpec::Prod { .. }, TranslationRule::None) => out.push(BoundId::ProdLemma),
        (AlgoSpec::ProdTuned { .. }, TranslationRule::None) => {
            out.push(BoundId::ProdLemma);
            out.push(BoundId::ProdTheorem);
        }
        (AlgoSpec::ProdQ { .. }, TranslationRule::None) => out.push(BoundId::ProdQDoubling),
        (AlgoSpec::ProdQ { .. }, TranslationRule::Reward) => {
            out.push(BoundId::ProdQTranslated);
            if one_sided {
                out.push(BoundId::OneSidedProd);
            }
        }
        (AlgoSpec::ProdM { .. }, TranslationRule::None) => out.push(BoundId::ProdMDoubling),
        (AlgoSpec::ProdMq, TranslationRule::None) => out.push(BoundId::ProdMqNested),
        (AlgoSpec::WmKnown { .. }, TranslationRule::None) => out.push(BoundId::WmKnownRange),
        (AlgoSpec::WmUnknown, TranslationRule::None) => {
            out.push(BoundId::WmUnknownRange);
            out.push(BoundId::WmRangeSum);
            if one_sided {
                out.push(BoundId::OneSidedWm);
            }
            out.push(BoundId::SignedMin);
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::run;
    use crate::model::PayoffSequence;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn formula_spot_values() {
        // B1 with eta = 1/2 and Q_k = 0 reduces to -2 ln N.
        let ln_n = 4f64.ln();
        assert_close(prod_lemma(0.5, ln_n, 0.0), -2.0 * ln_n, 1e-15);

        // B6 with V = 0, E = 1, ln N = 2: -(0 + 4 + 1/2).
        assert_close(wm_known_range(1.0, 0.0, 2.0), -4.5, 1e-15);

        // B3 remainder with n = 1 and ln N = 1: -2M(1 + 0 + 2*(1+0)*1) = -6M.
        for m in [1.0, 3.5] {
            assert_close(prod_q_doubling(m, 1.0, 1, 0.0), -6.0 * m, 1e-12);
        }

        // B2 picks the larger of the two branches.
        assert_close(
            prod_theorem(1.0, 16.0, 1.0),
            -8.0, // 2 sqrt(16) = 8 > 4
            1e-15,
        );
        assert_close(prod_theorem(10.0, 1.0, 1.0), -40.0, 1e-15);
    }

    #[test]
    fn kappa_matches_its_definition() {
        let ln_n = 8f64.ln();
        let m = 2.0;
        let n = 1000;
        let by_hand = 4.0
            * m
            * (1.0 + (n as f64).ln() / 4f64.ln() + 2.0 * (1.0 + (ln_n.log2() / 2.0).floor()) * ln_n);
        assert_close(one_sided_prod_kappa(m, n, ln_n), by_hand, 1e-12);
    }

    fn little_signed_sequence() -> PayoffSequence {
        PayoffSequence::new(
            3,
            (0..40)
                .map(|t| {
                    vec![
                        0.8 * ((t as f64) * 0.7).sin(),
                        0.5 - 0.02 * (t % 7) as f64,
                        -0.3 + 0.05 * (t % 5) as f64,
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn prod_lemma_holds_on_valid_runs() {
        let seq = little_signed_sequence();
        for eta in [0.1, 0.3, 0.5] {
            let trace = run(&AlgoSpec::Prod { eta }, TranslationRule::None, &seq).unwrap();
            let report = verify(&trace, BoundId::ProdLemma).unwrap();
            assert!(report.holds, "slack {}", report.slack);
            assert!(report.bound_value <= 0.0);
            assert!(report.expert.is_some());
        }
    }

    #[test]
    fn corrupted_trace_is_flagged() {
        let seq = little_signed_sequence();
        let mut trace = run(&AlgoSpec::Prod { eta: 0.25 }, TranslationRule::None, &seq).unwrap();
        let clean = verify(&trace, BoundId::ProdLemma).unwrap();
        assert!(clean.holds);
        trace
            .stats
            .inject_reward_error(-10.0 * clean.bound_value.abs() - 1.0);
        let corrupted = verify(&trace, BoundId::ProdLemma).unwrap();
        assert!(!corrupted.holds);
    }

    #[test]
    fn zero_payoff_runs_hold_everything_applicable() {
        let seq = PayoffSequence::new(2, vec![vec![0.0, 0.0]; 8]).unwrap();
        let cases = [
            (AlgoSpec::Prod { eta: 0.3 }, TranslationRule::None),
            (AlgoSpec::ProdQ { magnitude: 1.0 }, TranslationRule::None),
            (AlgoSpec::ProdM { quad: 1.0 }, TranslationRule::None),
            (AlgoSpec::ProdMq, TranslationRule::None),
            (AlgoSpec::WmKnown { range: 1.0 }, TranslationRule::None),
            (AlgoSpec::WmUnknown, TranslationRule::None),
            (AlgoSpec::ProdQ { magnitude: 1.0 }, TranslationRule::Reward),
        ];
        for (algo, rule) in cases {
            let trace = run(&algo, rule, &seq).unwrap();
            for bound in compatible_bounds(&trace) {
                let report = verify(&trace, bound).unwrap();
                assert!(report.holds, "{bound} on zero run: slack {}", report.slack);
                assert_eq!(report.measured, 0.0);
            }
        }
    }

    #[test]
    fn mismatches_are_configuration_errors() {
        let seq = little_signed_sequence();
        let wm = run(&AlgoSpec::WmUnknown, TranslationRule::None, &seq).unwrap();
        assert!(matches!(
            verify(&wm, BoundId::ProdQDoubling),
            Err(Error::Config(_))
        ));
        // Signed input against the one-sided improvement.
        assert!(matches!(
            verify(&wm, BoundId::OneSidedWm),
            Err(Error::Config(_))
        ));

        let prod = run(&AlgoSpec::Prod { eta: 0.1 }, TranslationRule::None, &seq).unwrap();
        assert!(matches!(
            verify(&prod, BoundId::WmUnknownRange),
            Err(Error::Config(_))
        ));

        // Translation mismatch: B9 needs the reward rule.
        let bare_prodq = run(
            &AlgoSpec::ProdQ { magnitude: 1.0 },
            TranslationRule::None,
            &seq,
        )
        .unwrap();
        assert!(matches!(
            verify(&bare_prodq, BoundId::ProdQTranslated),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn lemma_precondition_is_checked() {
        // A trace whose recorded eta does not match the run that produced it
        // (the running forecaster itself rejects rates outside the validity
        // window, so only a mislabeled trace can reach this state).
        let seq = PayoffSequence::new(2, vec![vec![-0.4, 0.1]; 5]).unwrap();
        let mut trace = run(&AlgoSpec::Prod { eta: 0.1 }, TranslationRule::None, &seq).unwrap();
        trace.algo = AlgoSpec::Prod { eta: 2.0 };
        assert!(matches!(
            verify(&trace, BoundId::ProdLemma),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn comparative_tightness_of_second_order_leading_term() {
        // max_s Q*_s <= M max_s A*_s pointwise, so the second-order leading
        // term can never exceed the first-order one.
        let seq = little_signed_sequence();
        let trace = run(&AlgoSpec::WmUnknown, TranslationRule::None, &seq).unwrap();
        let m = trace.stats.max_abs_payoff();
        let q_term = trace.stats.q_star_envelope();
        let a_term = m * trace.stats.abs_star_envelope();
        assert!(q_term <= a_term * (1.0 + 1e-12));
    }

    #[test]
    fn bound_id_round_trips_via_code() {
        for bound in BoundId::all() {
            let parsed: BoundId = bound.code().parse().unwrap();
            assert_eq!(parsed, bound);
            let lower: BoundId = bound.code().to_ascii_lowercase().parse().unwrap();
            assert_eq!(lower, bound);
        }
        assert!("B13".parse::<BoundId>().is_err());
    }
}
