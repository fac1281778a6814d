//! Meta-forecasters that translate payoffs on-line before feeding an inner
//! forecaster, plus randomized action sampling with deviation diagnostics.
//!
//! A translation rule picks a per-round reference `mu_t` from information
//! available at update time and feeds `x_t - mu_t` to the inner forecaster.
//! Weighted-majority forecasters are invariant under any such translation;
//! prod-type forecasters are not, and translating by the forecaster's own
//! reward `xhat_t` is exactly what turns the prod-Q bound into one phrased
//! in effective ranges (the translated quadratic penalties `R_{k,t}`).
//!
//! Randomized play draws `I_t ~ p_t` instead of collecting the expected
//! payoff; a Bernstein band `sqrt(2 V_n ln(n/d)) + (2/3) M ln(n/d)` brackets
//! how far the realized reward may drift from `Xhat_n`. The band's constants
//! are the classical Freedman ones; it is a statistical diagnostic, not one
//! of the proven regret bounds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{Forecaster, RunTrace};
use crate::model::{effective_range, Distribution};

/// Per-round reference subtracted from all payoffs before the inner update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranslationRule {
    /// Identity wrapper.
    None,
    /// `mu_t = xhat_t`, the forecaster's own reward this round.
    Reward,
    /// `mu_t = min_j x_{j,t}` (maps any game to a gain game).
    MinPayoff,
    /// `mu_t = max_j x_{j,t}` (maps any game to a loss game).
    MaxPayoff,
    /// `mu_t = min_j x_{j,t} + E_t / 2`.
    Midrange,
}

impl TranslationRule {
    pub fn label(&self) -> &'static str {
        match self {
            TranslationRule::None => "none",
            TranslationRule::Reward => "reward",
            TranslationRule::MinPayoff => "min",
            TranslationRule::MaxPayoff => "max",
            TranslationRule::Midrange => "midrange",
        }
    }

    pub fn all() -> [TranslationRule; 5] {
        [
            TranslationRule::None,
            TranslationRule::Reward,
            TranslationRule::MinPayoff,
            TranslationRule::MaxPayoff,
            TranslationRule::Midrange,
        ]
    }
}

impl std::str::FromStr for TranslationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TranslationRule::None),
            "reward" => Ok(TranslationRule::Reward),
            "min" | "min-payoff" => Ok(TranslationRule::MinPayoff),
            "max" | "max-payoff" => Ok(TranslationRule::MaxPayoff),
            "midrange" => Ok(TranslationRule::Midrange),
            other => Err(Error::InvalidInput(format!(
                "unknown translation rule '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for TranslationRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Translation meta-forecaster: predictions pass through untouched, updates
/// see `x_t - mu_t`.
#[derive(Debug, Clone)]
pub struct Translated<F> {
    rule: TranslationRule,
    inner: F,
}

impl<F: Forecaster> Translated<F> {
    pub fn new(rule: TranslationRule, inner: F) -> Self {
        Self { rule, inner }
    }

    pub fn rule(&self) -> TranslationRule {
        self.rule
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn into_inner(self) -> F {
        self.inner
    }

    fn reference(&self, x: &[f64]) -> Result<f64> {
        Ok(match self.rule {
            TranslationRule::None => 0.0,
            // The reward needs this round's prediction, which is available
            // before the inner update runs.
            TranslationRule::Reward => self.inner.predict().expected_payoff(x),
            TranslationRule::MinPayoff => x.iter().cloned().fold(f64::INFINITY, f64::min),
            TranslationRule::MaxPayoff => x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            TranslationRule::Midrange => {
                let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
                min + effective_range(x)? / 2.0
            }
        })
    }
}

impl<F: Forecaster> Forecaster for Translated<F> {
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    fn predict(&self) -> Distribution {
        self.inner.predict()
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::InvalidInput("empty payoff vector".into()));
        }
        let mu = self.reference(x)?;
        let translated: Vec<f64> = x.iter().map(|v| v - mu).collect();
        self.inner.observe(&translated)
    }

    fn epoch_label(&self) -> String {
        self.inner.epoch_label()
    }
}

/// Draws an expert index distributed according to `p` by inverting the CDF.
pub fn sample_action<R: Rng>(p: &Distribution, rng: &mut R) -> usize {
    sample_from_probs(p.probs(), rng)
}

pub(crate) fn sample_from_probs<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave acc marginally below 1; charge the tail.
    last_positive
}

/// Bernstein/Freedman deviation band for the actual reward of randomized
/// play after `n` rounds: `sqrt(2 V_n ln(n/delta)) + (2/3) M ln(n/delta)`.
pub fn bernstein_band(variance: f64, magnitude: f64, rounds: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must be in (0, 1), got {delta}"
        )));
    }
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::InvalidInput(format!(
            "variance must be nonnegative, got {variance}"
        )));
    }
    if !magnitude.is_finite() || magnitude <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "magnitude must be positive, got {magnitude}"
        )));
    }
    if rounds == 0 {
        return Err(Error::InvalidInput("band needs at least one round".into()));
    }
    let log_term = (rounds as f64 / delta).ln();
    Ok((2.0 * variance * log_term).sqrt() + 2.0 / 3.0 * magnitude * log_term)
}

/// One randomized replay of a recorded run: the actions drawn per round and
/// the realized cumulative reward.
///
/// Draws come from a seeded ChaCha8 stream, so identical seeds reproduce
/// identical plays on any platform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomizedPlay {
    pub seed: u64,
    pub actions: Vec<usize>,
    pub actual_reward: f64,
}

impl RandomizedPlay {
    pub fn sample(trace: &RunTrace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actions = Vec::with_capacity(trace.rows.len());
        let mut actual_reward = 0.0;
        for row in &trace.rows {
            let i = sample_from_probs(&row.probs, &mut rng);
            actual_reward += row.payoffs[i];
            actions.push(i);
        }
        Self {
            seed,
            actions,
            actual_reward,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::{run, AlgoSpec};
    use crate::model::PayoffSequence;
    use crate::prod::ProdQ;
    use crate::wm::{Wm, WmSchedule};

    /// Records every payoff vector its update sees.
    struct Probe {
        n: usize,
        seen: Vec<Vec<f64>>,
    }

    impl Forecaster for Probe {
        fn num_experts(&self) -> usize {
            self.n
        }
        fn predict(&self) -> Distribution {
            Distribution::uniform(self.n)
        }
        fn observe(&mut self, x: &[f64]) -> Result<()> {
            self.seen.push(x.to_vec());
            Ok(())
        }
    }

    #[test]
    fn reward_rule_feeds_centered_payoffs() {
        // Uniform prediction over (2, 0): xhat = 1, so the update sees (1, -1).
        let mut t = Translated::new(TranslationRule::Reward, Probe { n: 2, seen: vec![] });
        t.observe(&[2.0, 0.0]).unwrap();
        assert_eq!(t.inner().seen[0], vec![1.0, -1.0]);
    }

    #[test]
    fn min_and_max_and_midrange_references() {
        let mut t = Translated::new(TranslationRule::MinPayoff, Probe { n: 3, seen: vec![] });
        t.observe(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.inner().seen[0], vec![2.0, 0.0, 1.0]);

        let mut t = Translated::new(TranslationRule::MaxPayoff, Probe { n: 3, seen: vec![] });
        t.observe(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.inner().seen[0], vec![0.0, -2.0, -1.0]);

        let mut t = Translated::new(TranslationRule::Midrange, Probe { n: 3, seen: vec![] });
        t.observe(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.inner().seen[0], vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn none_rule_is_transparent() {
        let seq = PayoffSequence::new(
            2,
            (0..30)
                .map(|t| vec![(t as f64 * 0.37).sin(), (t as f64 * 0.11).cos() * 0.5])
                .collect(),
        )
        .unwrap();
        let wrapped = run(
            &AlgoSpec::ProdQ { magnitude: 1.0 },
            TranslationRule::None,
            &seq,
        )
        .unwrap();
        let mut bare = ProdQ::new(2, 1.0).unwrap();
        for (t, row) in wrapped.rows.iter().enumerate() {
            let p = bare.predict();
            assert_eq!(row.probs, p.probs(), "round {}", t + 1);
            bare.observe(seq.round(t + 1)).unwrap();
        }
    }

    #[test]
    fn min_translation_shrinks_squares_in_gain_games() {
        // In a gain game (x >= 0), (x_j - min_j x_j)^2 <= x_j^2 entrywise.
        let rows = vec![
            vec![0.0, 1.0, 2.0],
            vec![3.0, 0.5, 1.0],
            vec![2.0, 2.0, 2.0],
        ];
        for x in &rows {
            let mu = x.iter().cloned().fold(f64::INFINITY, f64::min);
            for &v in x {
                assert!((v - mu) * (v - mu) <= v * v + 1e-15);
            }
        }
    }

    #[test]
    fn wm_is_translation_invariant_prod_is_not() {
        let seq = PayoffSequence::new(
            2,
            (0..40)
                .map(|t| vec![((t * 7) % 5) as f64 - 2.0, ((t * 3) % 4) as f64 - 1.0])
                .collect(),
        )
        .unwrap();
        for rule in TranslationRule::all() {
            let mut plain = Wm::new(2, WmSchedule::UnknownRange).unwrap();
            let mut wrapped = Translated::new(rule, Wm::new(2, WmSchedule::UnknownRange).unwrap());
            for t in 1..=seq.num_rounds() {
                let a = plain.predict();
                let b = wrapped.predict();
                for (pa, pb) in a.probs().iter().zip(b.probs()) {
                    assert!((pa - pb).abs() <= 1e-12);
                }
                plain.observe(seq.round(t)).unwrap();
                wrapped.observe(seq.round(t)).unwrap();
            }
        }

        // prod-type updates are not translation invariant: the reward rule
        // must change the distributions somewhere on this sequence. The
        // translated run feeds x - xhat, so the declared bound covers the
        // effective range rather than the payoff magnitude.
        let bare = run(
            &AlgoSpec::ProdQ { magnitude: 4.0 },
            TranslationRule::None,
            &seq,
        )
        .unwrap();
        let translated = run(
            &AlgoSpec::ProdQ { magnitude: 4.0 },
            TranslationRule::Reward,
            &seq,
        )
        .unwrap();
        let diverged = bare
            .rows
            .iter()
            .zip(&translated.rows)
            .any(|(a, b)| {
                a.probs
                    .iter()
                    .zip(&b.probs)
                    .any(|(pa, pb)| (pa - pb).abs() > 1e-9)
            });
        assert!(diverged);
    }

    #[test]
    fn sampling_point_mass_is_deterministic() {
        let p = Distribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_action(&p, &mut rng), 2);
        }
    }

    #[test]
    fn sampling_frequencies_match_uniform() {
        let p = Distribution::uniform(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_action(&p, &mut rng)] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn sampling_frequencies_match_skewed() {
        let p = Distribution::new(vec![0.9, 0.1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let mut zero = 0usize;
        for _ in 0..draws {
            if sample_action(&p, &mut rng) == 0 {
                zero += 1;
            }
        }
        let freq = zero as f64 / draws as f64;
        // Binomial 3-sigma band around 0.9.
        assert!((0.885..=0.915).contains(&freq), "freq {freq}");
    }

    #[test]
    fn bernstein_band_values() {
        // V = 0: only the range term remains.
        let b = bernstein_band(0.0, 2.0, 10, 0.1).unwrap();
        assert!((b - 2.0 / 3.0 * 2.0 * (100f64).ln()).abs() < 1e-12);

        // n/delta = e: sqrt(2) + 2/3.
        let b = bernstein_band(1.0, 1.0, 1, 1.0 / std::f64::consts::E).unwrap();
        assert!((b - (2f64.sqrt() + 2.0 / 3.0)).abs() < 1e-12);

        // Monotone in the variance and in 1/delta.
        assert!(bernstein_band(2.0, 1.0, 10, 0.1).unwrap() > bernstein_band(1.0, 1.0, 10, 0.1).unwrap());
        assert!(bernstein_band(1.0, 1.0, 10, 0.01).unwrap() > bernstein_band(1.0, 1.0, 10, 0.1).unwrap());

        assert!(bernstein_band(1.0, 1.0, 10, 0.0).is_err());
        assert!(bernstein_band(1.0, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn randomized_replays_reproduce_by_seed() {
        let seq = PayoffSequence::new(
            3,
            (0..50)
                .map(|t| vec![(t % 2) as f64, 0.25, ((t + 1) % 3) as f64 * 0.5])
                .collect(),
        )
        .unwrap();
        let trace = run(&AlgoSpec::WmUnknown, TranslationRule::None, &seq).unwrap();
        let a = RandomizedPlay::sample(&trace, 42);
        let b = RandomizedPlay::sample(&trace, 42);
        let c = RandomizedPlay::sample(&trace, 43);
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.actual_reward, b.actual_reward);
        assert_ne!(a.actions, c.actions);
    }
}
