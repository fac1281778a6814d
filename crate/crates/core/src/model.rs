//! Domain types for payoff streams, probability assignments and the running
//! sequence statistics every forecaster and bound verifier consumes.
//!
//! A prediction game over `N` experts proceeds in rounds. At round `t` the
//! forecaster commits a probability vector `p_t`, the adversary reveals the
//! payoff vector `x_t`, and the forecaster earns the expected payoff
//! `xhat_t = sum_i p_{i,t} x_{i,t}`. All quantities the regret bounds refer
//! to are aggregates of this stream:
//!
//! - `X_{k,t}` cumulative payoff of expert k, `X*_t` that of the best expert
//! - `Q_{k,t}` sum of squared payoffs, `Q*_t` that of the current best expert
//! - `A_{k,t}` sum of absolute payoffs
//! - `R_{k,t}` sum of squared reward-translated payoffs `(x_{k,s} - xhat_s)^2`
//! - `V_t` cumulative variance of the payoff under `p_s`, summed over rounds
//! - `E_t` effective range `max_i x_{i,t} - min_j x_{j,t}` of round t
//! - `M_t` power-of-two magnitude tracker `max_{s<=t,i} 2^ceil(log2 |x_{i,s}|)`
//!
//! `Q*_t` is not monotone in `t` (the best expert can change), so the types
//! below also carry the smallest nondecreasing envelopes that dominate the
//! raw sequences; the doubling-trick bounds are stated in terms of those.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed when checking that a probability vector sums to 1.
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-12;

/// Exponent-difference clamp used by the stable softmax. Differences below
/// this produce weights that are zero to double precision anyway.
const SOFTMAX_EXPONENT_FLOOR: f64 = -745.0;

/// A full adversarial input: per-round payoff vectors over `N >= 2` experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSequence {
    num_experts: usize,
    rounds: Vec<Vec<f64>>,
}

impl PayoffSequence {
    /// Validates shape and finiteness: every round must have exactly
    /// `num_experts` finite entries, and `num_experts >= 2`.
    pub fn new(num_experts: usize, rounds: Vec<Vec<f64>>) -> Result<Self> {
        if num_experts < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 experts, got {num_experts}"
            )));
        }
        for (t, round) in rounds.iter().enumerate() {
            if round.len() != num_experts {
                return Err(Error::DimensionMismatch {
                    expected: num_experts,
                    got: round.len(),
                });
            }
            if let Some(bad) = round.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite payoff {bad} at round {}",
                    t + 1
                )));
            }
        }
        Ok(Self {
            num_experts,
            rounds,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Vec<f64>] {
        &self.rounds
    }

    /// Payoff vector of round `t` (1-based, as in the usual game notation).
    pub fn round(&self, t: usize) -> &[f64] {
        &self.rounds[t - 1]
    }
}

/// Sign regime of a payoff sequence.
///
/// Loss games have all payoffs <= 0, gain games all >= 0; signed games are
/// unconstrained. Several one-sided improvements are only valid on one-sided
/// inputs, so verifiers inspect this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameKind {
    Loss,
    Gain,
    Signed,
}

impl GameKind {
    /// Classifies a sequence by its realized signs. An all-zero sequence is
    /// both a loss and a gain game; it classifies as `Gain`.
    pub fn classify(seq: &PayoffSequence) -> GameKind {
        let mut any_neg = false;
        let mut any_pos = false;
        for round in seq.rounds() {
            for &x in round {
                any_neg |= x < 0.0;
                any_pos |= x > 0.0;
            }
        }
        match (any_neg, any_pos) {
            (true, true) => GameKind::Signed,
            (true, false) => GameKind::Loss,
            _ => GameKind::Gain,
        }
    }

    pub fn is_one_sided(self) -> bool {
        !matches!(self, GameKind::Signed)
    }
}

/// A probability assignment over the experts: entries are nonnegative and
/// sum to 1 within [`DISTRIBUTION_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidInput(format!("invalid probability {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_experts: usize) -> Self {
        Self {
            probs: vec![1.0 / num_experts as f64; num_experts],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expected payoff `sum_i p_i x_i` under this assignment.
    pub fn expected_payoff(&self, x: &[f64]) -> f64 {
        self.probs.iter().zip(x).map(|(p, v)| p * v).sum()
    }

    /// Variance of the payoff drawn according to this assignment, computed
    /// in centered two-pass form so it is nonnegative by construction.
    pub fn payoff_variance(&self, x: &[f64]) -> f64 {
        let mean = self.expected_payoff(x);
        self.probs
            .iter()
            .zip(x)
            .map(|(p, v)| p * (v - mean) * (v - mean))
            .sum()
    }
}

/// Normalized exponentials of a score vector, computed from max-shifted
/// exponents. Scores may be any finite reals (log-weights, `eta * X`, ...).
pub(crate) fn stable_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| (s - max).max(SOFTMAX_EXPONENT_FLOOR).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Effective range of a payoff vector: `max_i x_i - min_j x_j`.
///
/// Zero exactly when all entries are equal; errors on an empty vector.
pub fn effective_range(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidInput(
            "effective range of an empty vector".into(),
        ));
    }
    let mut lo = x[0];
    let mut hi = x[0];
    for &v in &x[1..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Smallest power of two (integer exponent, possibly negative) that is
/// `>= v`. `None` for `v <= 0`.
pub fn pow2_dominating(v: f64) -> Option<f64> {
    if v <= 0.0 || !v.is_finite() {
        return None;
    }
    let mut k = v.log2().ceil() as i32;
    // log2+ceil can land one off at exact powers of two; settle exactly.
    while 2f64.powi(k) < v {
        k += 1;
    }
    while k > -1074 && 2f64.powi(k - 1) >= v {
        k -= 1;
    }
    Some(2f64.powi(k))
}

/// Power-of-two magnitude tracker `M_t = max_{s<=t,i} 2^ceil(log2 |x_{i,s}|)`.
///
/// Zero entries carry no magnitude information, so an all-zero history keeps
/// the tracker undefined (`None`) rather than forcing a bogus zero that
/// downstream learning rates would divide by.
pub fn magnitude_tracker(x: &[f64], prev: Option<f64>) -> Option<f64> {
    let mut best = prev;
    for &v in x {
        if let Some(p) = pow2_dominating(v.abs()) {
            best = Some(best.map_or(p, |b: f64| b.max(p)));
        }
    }
    best
}

/// Power-of-two range tracker: the smallest `2^k` dominating every effective
/// range seen so far. Stays `None` while all observed ranges are zero.
pub fn range_tracker(x: &[f64], prev: Option<f64>) -> Result<Option<f64>> {
    let range = effective_range(x)?;
    Ok(match (pow2_dominating(range), prev) {
        (Some(r), Some(p)) => Some(p.max(r)),
        (Some(r), None) => Some(r),
        (None, keep) => keep,
    })
}

/// Index of the best expert: argmax of cumulative payoff, ties broken by
/// the minimal associated quadratic term, remaining ties by smallest index.
pub(crate) fn best_index(cum: &[f64], quad: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..cum.len() {
        if cum[k] > cum[best] || (cum[k] == cum[best] && quad[k] < quad[best]) {
            best = k;
        }
    }
    best
}

/// Running per-expert and aggregate statistics of a payoff stream, advanced
/// one round at a time by [`SequenceStats::update`].
///
/// Restart-based forecasters reset their weights between epochs but never
/// these statistics: `Q*_t`, `M_t`, `X*_t` are defined over the whole history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    num_experts: usize,
    t: usize,
    cum_payoff: Vec<f64>,
    quad: Vec<f64>,
    abs_sum: Vec<f64>,
    translated_quad: Vec<f64>,
    best_index: usize,
    q_star: f64,
    q_star_envelope: f64,
    r_star: f64,
    r_star_envelope: f64,
    abs_star_envelope: f64,
    magnitude: Option<f64>,
    max_abs: f64,
    min_payoff: f64,
    max_payoff: f64,
    last_range: f64,
    range_sup: f64,
    range_sq_sum: f64,
    sum_round_min: f64,
    sum_round_max: f64,
    cum_variance: f64,
    cum_reward: f64,
    ratio_envelope: f64,
}

impl SequenceStats {
    pub fn new(num_experts: usize) -> Result<Self> {
        if num_experts < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 experts, got {num_experts}"
            )));
        }
        Ok(Self {
            num_experts,
            t: 0,
            cum_payoff: vec![0.0; num_experts],
            quad: vec![0.0; num_experts],
            abs_sum: vec![0.0; num_experts],
            translated_quad: vec![0.0; num_experts],
            best_index: 0,
            q_star: 0.0,
            q_star_envelope: 0.0,
            r_star: 0.0,
            r_star_envelope: 0.0,
            abs_star_envelope: 0.0,
            magnitude: None,
            max_abs: 0.0,
            min_payoff: 0.0,
            max_payoff: 0.0,
            last_range: 0.0,
            range_sup: 0.0,
            range_sq_sum: 0.0,
            sum_round_min: 0.0,
            sum_round_max: 0.0,
            cum_variance: 0.0,
            cum_reward: 0.0,
            ratio_envelope: 0.0,
        })
    }

    /// Advances every aggregate by one round played with assignment `p` and
    /// revealed payoffs `x`.
    pub fn update(&mut self, x: &[f64], p: &Distribution) -> Result<()> {
        if x.len() != self.num_experts {
            return Err(Error::DimensionMismatch {
                expected: self.num_experts,
                got: x.len(),
            });
        }
        if p.len() != self.num_experts {
            return Err(Error::DimensionMismatch {
                expected: self.num_experts,
                got: p.len(),
            });
        }

        let reward = p.expected_payoff(x);
        let variance = p.payoff_variance(x);

        let mut round_min = x[0];
        let mut round_max = x[0];
        for (k, &v) in x.iter().enumerate() {
            self.cum_payoff[k] += v;
            self.quad[k] += v * v;
            self.abs_sum[k] += v.abs();
            let d = v - reward;
            self.translated_quad[k] += d * d;
            round_min = round_min.min(v);
            round_max = round_max.max(v);
            self.max_abs = self.max_abs.max(v.abs());
        }

        self.t += 1;
        self.cum_reward += reward;
        self.cum_variance += variance;
        self.min_payoff = self.min_payoff.min(round_min);
        self.max_payoff = self.max_payoff.max(round_max);
        self.sum_round_min += round_min;
        self.sum_round_max += round_max;

        self.last_range = round_max - round_min;
        self.range_sup = self.range_sup.max(self.last_range);
        self.range_sq_sum += self.last_range * self.last_range;
        self.magnitude = magnitude_tracker(x, self.magnitude);

        self.best_index = best_index(&self.cum_payoff, &self.quad);
        self.q_star = self.quad[self.best_index];
        self.q_star_envelope = self.q_star_envelope.max(self.q_star);
        self.abs_star_envelope = self.abs_star_envelope.max(self.abs_sum[self.best_index]);

        let r_best = best_index(&self.cum_payoff, &self.translated_quad);
        self.r_star = self.translated_quad[r_best];
        self.r_star_envelope = self.r_star_envelope.max(self.r_star);

        // Before any nonzero payoff M_t is undefined and the homogeneous
        // ratio Q*/M^2 is taken to be zero (no payoff, no quadratic penalty).
        if let Some(m) = self.magnitude {
            self.ratio_envelope = self.ratio_envelope.max(self.q_star / (m * m));
        }
        Ok(())
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    /// Number of rounds accumulated so far.
    pub fn rounds(&self) -> usize {
        self.t
    }

    /// `X_{k,t}` for every expert.
    pub fn cum_payoffs(&self) -> &[f64] {
        &self.cum_payoff
    }

    /// `Q_{k,t}` for every expert.
    pub fn quads(&self) -> &[f64] {
        &self.quad
    }

    /// `A_{k,t}` for every expert.
    pub fn abs_sums(&self) -> &[f64] {
        &self.abs_sum
    }

    /// `R_{k,t} = sum_s (x_{k,s} - xhat_s)^2` for every expert.
    pub fn translated_quads(&self) -> &[f64] {
        &self.translated_quad
    }

    /// Index of the current best expert (argmax `X_{k,t}`, ties by minimal
    /// `Q_{k,t}`, then by smallest index).
    pub fn best_action(&self) -> usize {
        self.best_index
    }

    /// `X*_t`, the cumulative payoff of the best expert.
    pub fn best_cum_payoff(&self) -> f64 {
        self.cum_payoff[self.best_index]
    }

    /// `Q*_t`, the quadratic penalty of the current best expert.
    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    /// `max_{s<=t} Q*_s`, the monotone envelope the doubling bounds use.
    pub fn q_star_envelope(&self) -> f64 {
        self.q_star_envelope
    }

    /// `R*_t` under the translated-payoff tie-breaking (minimal `R_{k,t}`).
    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    /// `max_{s<=t} R*_s`.
    pub fn r_star_envelope(&self) -> f64 {
        self.r_star_envelope
    }

    /// `max_{s<=t} A*_s`, feeding the first-order reference bound.
    pub fn abs_star_envelope(&self) -> f64 {
        self.abs_star_envelope
    }

    /// Power-of-two magnitude tracker `M_t`; `None` before the first nonzero
    /// payoff.
    pub fn magnitude(&self) -> Option<f64> {
        self.magnitude
    }

    /// Realized `max_{s<=t,i} |x_{i,s}|` (not rounded to a power of two).
    pub fn max_abs_payoff(&self) -> f64 {
        self.max_abs
    }

    pub fn min_payoff(&self) -> f64 {
        self.min_payoff
    }

    pub fn max_payoff(&self) -> f64 {
        self.max_payoff
    }

    /// Effective range `E_t` of the most recent round.
    pub fn last_range(&self) -> f64 {
        self.last_range
    }

    /// Realized `max_{s<=t} E_s`.
    pub fn range_sup(&self) -> f64 {
        self.range_sup
    }

    /// `sum_{s<=t} E_s^2`.
    pub fn range_sq_sum(&self) -> f64 {
        self.range_sq_sum
    }

    /// `sum_{s<=t} min_j x_{j,s}` (gain-side translation mass).
    pub fn sum_round_min(&self) -> f64 {
        self.sum_round_min
    }

    /// `sum_{s<=t} max_j x_{j,s}` (loss-side translation mass).
    pub fn sum_round_max(&self) -> f64 {
        self.sum_round_max
    }

    /// `V_t`, the cumulative variance of the forecaster's payoff.
    pub fn cum_variance(&self) -> f64 {
        self.cum_variance
    }

    /// `Xhat_t`, the forecaster's cumulative reward.
    pub fn cum_reward(&self) -> f64 {
        self.cum_reward
    }

    /// `max_{s<=t} Q*_s / M_s^2`, zero while `M_s` is undefined.
    pub fn ratio_envelope(&self) -> f64 {
        self.ratio_envelope
    }

    /// Regret `X*_t - Xhat_t` of whatever produced the recorded rewards.
    pub fn regret(&self) -> f64 {
        self.best_cum_payoff() - self.cum_reward
    }

    /// Fault injection used by verifier self-tests: shifts the recorded
    /// cumulative reward so that a sound bound must report a violation.
    pub fn inject_reward_error(&mut self, delta: f64) {
        self.cum_reward += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn effective_range_examples() {
        assert_eq!(effective_range(&[3.0, -1.0, 0.0]).unwrap(), 4.0);
        assert_eq!(effective_range(&[2.5, 2.5, 2.5]).unwrap(), 0.0);
        assert!(effective_range(&[]).is_err());
    }

    #[test]
    fn effective_range_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
            // Independent scan: explicit max and min loops.
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for &v in &x {
                if v > max {
                    max = v;
                }
                if v < min {
                    min = v;
                }
            }
            assert_eq!(effective_range(&x).unwrap(), max - min);
        }
    }

    #[test]
    fn best_action_tie_breaking() {
        // Equal X: the smaller Q wins.
        assert_eq!(best_index(&[5.0, 5.0], &[2.0, 1.0]), 1);
        // Unique maximum.
        assert_eq!(best_index(&[1.0, 0.0], &[0.0, 0.0]), 0);
        // Equal X and equal Q: smallest index.
        assert_eq!(best_index(&[3.0, 3.0], &[1.0, 1.0]), 0);
    }

    #[test]
    fn best_action_two_expert_exhaustive() {
        // All orderings of (X, Q) pairs over two experts.
        let vals = [-1.0, 0.0, 1.0];
        for &x0 in &vals {
            for &x1 in &vals {
                for &q0 in &[0.5, 1.0] {
                    for &q1 in &[0.5, 1.0] {
                        let got = best_index(&[x0, x1], &[q0, q1]);
                        let want = usize::from(x1 > x0 || (x1 == x0 && q1 < q0));
                        assert_eq!(got, want);
                    }
                }
            }
        }
    }

    #[test]
    fn magnitude_tracker_hand_values() {
        // ceil(log2 0.7) = 0 and ceil(log2 1.5) = 1.
        assert_eq!(magnitude_tracker(&[0.7], None), Some(1.0));
        assert_eq!(magnitude_tracker(&[-1.5], None), Some(2.0));
        assert_eq!(magnitude_tracker(&[0.0, 0.0], None), None);
        // Exact powers of two stay put.
        assert_eq!(magnitude_tracker(&[1.0], None), Some(1.0));
        assert_eq!(magnitude_tracker(&[0.25], None), Some(0.25));
        // Tracker only ratchets upward.
        assert_eq!(magnitude_tracker(&[0.1], Some(4.0)), Some(4.0));
    }

    #[test]
    fn range_tracker_hand_values() {
        assert_eq!(range_tracker(&[3.0, 0.0], None).unwrap(), Some(4.0));
        assert_eq!(range_tracker(&[5.0, 5.0], None).unwrap(), None);
        // Range exactly 1 is dominated by 2^0.
        assert_eq!(range_tracker(&[1.0, 0.0], None).unwrap(), Some(1.0));
        // Sub-unit ranges give negative exponents.
        assert_eq!(range_tracker(&[0.3, 0.0], None).unwrap(), Some(0.5));
    }

    #[test]
    fn zero_round_changes_only_time_and_best_recount() {
        let mut stats = SequenceStats::new(3).unwrap();
        let p = Distribution::uniform(3);
        stats.update(&[1.0, -0.5, 0.25], &p).unwrap();
        let before = stats.clone();
        stats.update(&[0.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(stats.rounds(), before.rounds() + 1);
        assert_eq!(stats.q_star(), before.q_star());
        assert_eq!(stats.cum_variance(), before.cum_variance());
        assert_eq!(stats.abs_sums(), before.abs_sums());
        assert_eq!(stats.magnitude(), before.magnitude());
        assert_eq!(stats.range_sup(), before.range_sup());
    }

    #[test]
    fn symmetric_two_point_round() {
        let mut stats = SequenceStats::new(2).unwrap();
        let p = Distribution::uniform(2);
        stats.update(&[1.0, -1.0], &p).unwrap();
        assert_eq!(stats.cum_reward(), 0.0);
        assert_eq!(stats.cum_variance(), 1.0);
    }

    /// From-scratch recomputation of every aggregate from the raw stream.
    fn recompute(xs: &[Vec<f64>], ps: &[Distribution]) -> SequenceStats {
        let n = xs[0].len();
        let mut out = SequenceStats::new(n).unwrap();
        let mut rewards = Vec::new();
        for (x, p) in xs.iter().zip(ps) {
            rewards.push(p.probs().iter().zip(x).map(|(pi, xi)| pi * xi).sum::<f64>());
        }
        out.t = xs.len();
        for k in 0..n {
            out.cum_payoff[k] = xs.iter().map(|x| x[k]).sum();
            out.quad[k] = xs.iter().map(|x| x[k] * x[k]).sum();
            out.abs_sum[k] = xs.iter().map(|x| x[k].abs()).sum();
            out.translated_quad[k] = xs
                .iter()
                .zip(&rewards)
                .map(|(x, r)| (x[k] - r) * (x[k] - r))
                .sum();
        }
        out.cum_reward = rewards.iter().sum();
        out.cum_variance = xs
            .iter()
            .zip(ps)
            .map(|(x, p)| p.payoff_variance(x))
            .sum();
        for t in 1..=xs.len() {
            let prefix = &xs[..t];
            let mut cum = vec![0.0; n];
            let mut quad = vec![0.0; n];
            let mut tq = vec![0.0; n];
            let mut abss = vec![0.0; n];
            for (x, r) in prefix.iter().zip(&rewards) {
                for k in 0..n {
                    cum[k] += x[k];
                    quad[k] += x[k] * x[k];
                    abss[k] += x[k].abs();
                    tq[k] += (x[k] - r) * (x[k] - r);
                }
            }
            let b = best_index(&cum, &quad);
            out.q_star = quad[b];
            out.q_star_envelope = out.q_star_envelope.max(quad[b]);
            out.abs_star_envelope = out.abs_star_envelope.max(abss[b]);
            let rb = best_index(&cum, &tq);
            out.r_star = tq[rb];
            out.r_star_envelope = out.r_star_envelope.max(tq[rb]);
            out.best_index = b;
            out.magnitude = None;
            for x in prefix {
                out.magnitude = magnitude_tracker(x, out.magnitude);
            }
            if let Some(m) = out.magnitude {
                out.ratio_envelope = out.ratio_envelope.max(quad[b] / (m * m));
            }
        }
        for x in xs {
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.min_payoff = out.min_payoff.min(lo);
            out.max_payoff = out.max_payoff.max(hi);
            out.sum_round_min += lo;
            out.sum_round_max += hi;
            out.last_range = hi - lo;
            out.range_sup = out.range_sup.max(hi - lo);
            out.range_sq_sum += (hi - lo) * (hi - lo);
            out.max_abs = out.max_abs.max(lo.abs()).max(hi.abs());
        }
        out
    }

    #[test]
    fn update_matches_brute_force_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 5;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut stats = SequenceStats::new(n).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let p = Distribution::new(raw.into_iter().map(|v| v / total).collect()).unwrap();
            stats.update(&x, &p).unwrap();
            xs.push(x);
            ps.push(p);
        }
        let oracle = recompute(&xs, &ps);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        for k in 0..n {
            assert!(close(stats.cum_payoffs()[k], oracle.cum_payoffs()[k]));
            assert!(close(stats.quads()[k], oracle.quads()[k]));
            assert!(close(stats.abs_sums()[k], oracle.abs_sums()[k]));
            assert!(close(stats.translated_quads()[k], oracle.translated_quads()[k]));
        }
        assert_eq!(stats.best_action(), oracle.best_action());
        assert!(close(stats.q_star(), oracle.q_star()));
        assert!(close(stats.q_star_envelope(), oracle.q_star_envelope()));
        assert!(close(stats.r_star_envelope(), oracle.r_star_envelope()));
        assert!(close(stats.abs_star_envelope(), oracle.abs_star_envelope()));
        assert_eq!(stats.magnitude(), oracle.magnitude());
        assert!(close(stats.cum_variance(), oracle.cum_variance()));
        assert!(close(stats.cum_reward(), oracle.cum_reward()));
        assert!(close(stats.ratio_envelope(), oracle.ratio_envelope()));
        assert!(close(stats.range_sq_sum(), oracle.range_sq_sum()));
        assert_eq!(stats.range_sup(), oracle.range_sup());
        assert_eq!(stats.max_abs_payoff(), oracle.max_abs_payoff());
    }

    #[test]
    fn distribution_validates() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.6, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
    }

    #[test]
    fn payoff_sequence_validates() {
        assert!(PayoffSequence::new(2, vec![vec![0.0, 1.0]]).is_ok());
        assert!(PayoffSequence::new(1, vec![vec![0.0]]).is_err());
        assert!(PayoffSequence::new(2, vec![vec![0.0]]).is_err());
        assert!(PayoffSequence::new(2, vec![vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn game_kind_classification() {
        let gain = PayoffSequence::new(2, vec![vec![0.0, 1.0]]).unwrap();
        let loss = PayoffSequence::new(2, vec![vec![-1.0, 0.0]]).unwrap();
        let signed = PayoffSequence::new(2, vec![vec![-1.0, 1.0]]).unwrap();
        assert_eq!(GameKind::classify(&gain), GameKind::Gain);
        assert_eq!(GameKind::classify(&loss), GameKind::Loss);
        assert_eq!(GameKind::classify(&signed), GameKind::Signed);
        assert!(GameKind::Loss.is_one_sided());
        assert!(!GameKind::Signed.is_one_sided());
    }

    #[test]
    fn point_mass_variance_is_exactly_zero() {
        let p = Distribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.payoff_variance(&[100.0, -3.0, 55.0]), 0.0);
    }
}
