//! The `prod` multiplicative forecaster and its parameter-free epoch
//! wrappers.
//!
//! `prod(eta)` keeps one weight per expert, starting at 1, and multiplies it
//! by `1 + eta * x_{i,t}` after each round; predictions are the normalized
//! weights. Unlike exponential weighting, the update is affine in the
//! payoff, which is what produces regret bounds in terms of the sum of
//! squared payoffs `Q_{k,n}` instead of first-order quantities:
//!
//! ```text
//! Xhat_n >= X_{k,n} - (ln N)/eta - eta * Q_{k,n}    for eta <= 1/(2M)
//! ```
//!
//! whenever all payoffs are `>= -M`. The update is only meaningful while
//! `eta * x >= -1/2` (so that `ln(1+z) >= z - z^2` applies); feeding a more
//! negative payoff is an error that signals a mis-declared bound.
//!
//! Three wrappers remove the need for prior knowledge by restarting `prod`
//! on a fresh learning rate when a doubling condition trips:
//!
//! - [`ProdQ`]: knows a payoff bound `M`, guesses the quadratic penalty.
//!   Epoch `r` ends the first time `Q*_t > 4^r M^2`.
//! - [`ProdM`]: knows a quadratic budget `Q`, guesses the payoff magnitude
//!   through the power-of-two tracker `M_t`. Epoch ends when `M_t` grows.
//! - [`ProdMq`]: knows nothing; runs nested epochs `(r, s)` over both the
//!   magnitude tracker and the homogeneous ratio `Q*_t / M_t^2`.
//!
//! Weights restart between epochs; the sequence statistics never do.

use crate::error::{Error, Result};
use crate::forecaster::Forecaster;
use crate::model::{stable_softmax, Distribution, SequenceStats};

/// Relative slack accepted on the `eta * x >= -1/2` validity boundary, so
/// that a payoff sitting exactly at `-M` with `eta = 1/(2M)` survives the
/// rounding of `eta`'s computation.
const VALIDITY_SLACK: f64 = 1e-9;

fn ln_experts(num_experts: usize) -> f64 {
    (num_experts as f64).ln()
}

/// The learning rate of the basic tuned forecaster:
/// `eta = min{ 1/(2M), sqrt((ln N)/Q) }`.
pub fn theorem_eta(magnitude: f64, quad_bound: f64, num_experts: usize) -> Result<f64> {
    if !magnitude.is_finite() || magnitude <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "payoff bound must be positive, got {magnitude}"
        )));
    }
    if !quad_bound.is_finite() || quad_bound <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "quadratic bound must be positive, got {quad_bound}"
        )));
    }
    if num_experts < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 experts, got {num_experts}"
        )));
    }
    Ok((0.5 / magnitude).min((ln_experts(num_experts) / quad_bound).sqrt()))
}

/// `prod(eta)`: weights `w_{i,1} = 1`, update `w_{i,t+1} = w_{i,t}(1 + eta x_{i,t})`,
/// prediction `p_{i,t} = w_{i,t} / W_t`.
///
/// Weights are kept in the log domain; a product of `1 + eta x` factors over
/// 1e5 rounds underflows long before the predictions lose meaning.
#[derive(Debug, Clone)]
pub struct Prod {
    eta: f64,
    log_weights: Vec<f64>,
}

impl Prod {
    pub fn new(num_experts: usize, eta: f64) -> Result<Self> {
        if num_experts < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 experts, got {num_experts}"
            )));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; num_experts],
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Adds `ln(1 + eta x_i)` to every log-weight. The whole round is
    /// validated before any weight moves, so a rejected update leaves the
    /// state untouched.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.log_weights.len(),
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            let z = self.eta * v;
            if z < -0.5 * (1.0 + VALIDITY_SLACK) {
                return Err(Error::ValidityViolation { expert: i, z });
            }
        }
        for (w, &v) in self.log_weights.iter_mut().zip(x) {
            *w += (self.eta * v).ln_1p();
        }
        Ok(())
    }
}

impl Forecaster for Prod {
    fn num_experts(&self) -> usize {
        self.log_weights.len()
    }

    fn predict(&self) -> Distribution {
        Distribution::new(stable_softmax(&self.log_weights))
            .expect("softmax output is a valid distribution")
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        self.update(x)
    }
}

/// `prod-Q(M)`: doubling trick over the quadratic penalty, for payoffs known
/// to satisfy `|x_{i,t}| <= M`.
///
/// Epoch `r` runs `prod(eta_r)` with `eta_r = min{1/(2M), sqrt(ln N)/(2^r M)}`
/// and ends at the first round where `Q*_t > 4^r M^2`. `Q*_t` is not
/// monotone, so consecutive epochs can be one round long until the threshold
/// catches up with the envelope.
#[derive(Debug, Clone)]
pub struct ProdQ {
    magnitude: f64,
    epoch: u32,
    inner: Prod,
    stats: SequenceStats,
}

impl ProdQ {
    pub fn new(num_experts: usize, magnitude: f64) -> Result<Self> {
        if !magnitude.is_finite() || magnitude <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "payoff bound must be positive, got {magnitude}"
            )));
        }
        let inner = Prod::new(num_experts, Self::epoch_eta(magnitude, num_experts, 0))?;
        Ok(Self {
            magnitude,
            epoch: 0,
            inner,
            stats: SequenceStats::new(num_experts)?,
        })
    }

    fn epoch_eta(magnitude: f64, num_experts: usize, epoch: u32) -> f64 {
        (0.5 / magnitude).min(ln_experts(num_experts).sqrt() / (2f64.powi(epoch as i32) * magnitude))
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn current_eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn stats(&self) -> &SequenceStats {
        &self.stats
    }
}

impl Forecaster for ProdQ {
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    fn predict(&self) -> Distribution {
        self.inner.predict()
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        // The bound is a hard input contract; violating it silently would
        // void every epoch threshold already crossed.
        for (i, &v) in x.iter().enumerate() {
            if v.abs() > self.magnitude * (1.0 + 1e-12) {
                return Err(Error::PayoffBoundExceeded {
                    expert: i,
                    value: v,
                    bound: self.magnitude,
                });
            }
        }
        let p = self.inner.predict();
        self.stats.update(x, &p)?;
        let threshold = 4f64.powi(self.epoch as i32) * self.magnitude * self.magnitude;
        if self.stats.q_star() > threshold {
            // Last round of the epoch: weights restart, statistics persist.
            self.epoch += 1;
            let n = self.inner.num_experts();
            self.inner = Prod::new(n, Self::epoch_eta(self.magnitude, n, self.epoch))?;
        } else {
            self.inner.update(x)?;
        }
        Ok(())
    }

    fn epoch_label(&self) -> String {
        self.epoch.to_string()
    }
}

/// `prod-M(Q)`: doubling trick over the payoff magnitude, for a known bound
/// `Q` on the quadratic penalty of the experts one competes against.
///
/// Starts from the implied scale `M_0 = sqrt(Q / (4 ln N))` with
/// `eta_0 = 1/(2 M_0)`, and whenever the power-of-two tracker `M_t` exceeds
/// the anchor recorded at the previous restart, closes the epoch and
/// restarts with `eta = 1/(2 M_t)`.
///
/// The closing round still enters all statistics, but its weight update is
/// skipped: its payoff may sit outside the old rate's validity window, and
/// the weights are discarded at the restart anyway.
#[derive(Debug, Clone)]
pub struct ProdM {
    epoch: u32,
    anchor: f64,
    inner: Prod,
    stats: SequenceStats,
}

impl ProdM {
    pub fn new(num_experts: usize, quad_bound: f64) -> Result<Self> {
        if !quad_bound.is_finite() || quad_bound <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "quadratic bound must be positive, got {quad_bound}"
            )));
        }
        let anchor = (quad_bound / (4.0 * ln_experts(num_experts))).sqrt();
        let inner = Prod::new(num_experts, 0.5 / anchor)?;
        Ok(Self {
            epoch: 0,
            anchor,
            inner,
            stats: SequenceStats::new(num_experts)?,
        })
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// `M_{t_{r-1}}`: the magnitude anchor of the running epoch (`M_0`
    /// before the first restart).
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn current_eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn stats(&self) -> &SequenceStats {
        &self.stats
    }
}

impl Forecaster for ProdM {
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    fn predict(&self) -> Distribution {
        self.inner.predict()
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        let p = self.inner.predict();
        self.stats.update(x, &p)?;
        match self.stats.magnitude() {
            Some(m_t) if m_t > self.anchor => {
                self.epoch += 1;
                self.anchor = m_t;
                let n = self.inner.num_experts();
                self.inner = Prod::new(n, 0.5 / m_t)?;
                Ok(())
            }
            // Within the epoch every payoff is covered by the tracker, which
            // the anchor dominates, so the update cannot leave its window.
            _ => self.inner.update(x),
        }
    }

    fn epoch_label(&self) -> String {
        self.epoch.to_string()
    }
}

/// `prod-MQ`: fully parameter-free nested doubling over both the magnitude
/// tracker and the scale-free ratio `Q*_t / M_t^2`.
///
/// Epochs carry a pair index `(r, s)` and run `prod(eta_{(r,s)})` with
///
/// ```text
/// eta_{(r,s)} = min{ 1/(2 M^(r)),  sqrt(ln N) / (2^(S_{r-1}+s) M^(r)) }
/// ```
///
/// An epoch ends the first time either (C2) `M_t > M^(r)` or (C1)
/// `Q*_t > 4^(S_{r-1}+s) M_t^2` holds; (C2) wins when both fire in the same
/// round, since a magnitude jump invalidates the rate's validity window
/// while a quadratic overflow does not. On (C2) the next epoch is
/// `(r+1, 0)` with `S_r = S_{r-1} + s` and `M^(r+1) = M_t`; on (C1) it is
/// `(r, s+1)`.
///
/// Until the first nonzero payoff there is no scale to anchor `M^(0)` to;
/// the forecaster predicts uniformly and defers epoch initialization.
#[derive(Debug, Clone)]
pub struct ProdMq {
    epoch_major: u32,
    epoch_minor: u32,
    s_prev: u32,
    anchor: Option<f64>,
    inner: Prod,
    stats: SequenceStats,
}

impl ProdMq {
    pub fn new(num_experts: usize) -> Result<Self> {
        // Placeholder rate: with the anchor unset only zero payoffs are fed
        // to the inner update, and those never move a weight.
        let inner = Prod::new(num_experts, 1.0)?;
        Ok(Self {
            epoch_major: 0,
            epoch_minor: 0,
            s_prev: 0,
            anchor: None,
            inner,
            stats: SequenceStats::new(num_experts)?,
        })
    }

    fn rate(&self, anchor: f64) -> f64 {
        let exponent = (self.s_prev + self.epoch_minor) as i32;
        (0.5 / anchor).min(ln_experts(self.inner.num_experts()).sqrt() / (2f64.powi(exponent) * anchor))
    }

    pub fn epoch(&self) -> (u32, u32) {
        (self.epoch_major, self.epoch_minor)
    }

    pub fn current_eta(&self) -> Option<f64> {
        self.anchor.map(|_| self.inner.eta())
    }

    pub fn stats(&self) -> &SequenceStats {
        &self.stats
    }
}

impl Forecaster for ProdMq {
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    fn predict(&self) -> Distribution {
        self.inner.predict()
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        let p = self.inner.predict();
        self.stats.update(x, &p)?;
        let n = self.inner.num_experts();
        match self.anchor {
            None => {
                if let Some(m) = self.stats.magnitude() {
                    // First informative round: epoch (0,0) starts here with
                    // M^(0) anchored to the tracker value this round set.
                    self.anchor = Some(m);
                    self.inner = Prod::new(n, self.rate(m))?;
                    // Neither condition can fire on the anchoring round:
                    // M_t equals the fresh anchor and Q*_t <= M_t^2.
                    debug_assert!(self.stats.q_star() <= m * m * (1.0 + 1e-9));
                    self.inner.update(x)?;
                }
                Ok(())
            }
            Some(m_r) => {
                let m_t = self
                    .stats
                    .magnitude()
                    .expect("anchored run has seen a nonzero payoff");
                if m_t > m_r {
                    // (C2): magnitude outgrew the epoch anchor.
                    self.s_prev += self.epoch_minor;
                    self.epoch_major += 1;
                    self.epoch_minor = 0;
                    self.anchor = Some(m_t);
                    self.inner = Prod::new(n, self.rate(m_t))?;
                    Ok(())
                } else if self.stats.q_star()
                    > 4f64.powi((self.s_prev + self.epoch_minor) as i32) * m_t * m_t
                {
                    // (C1): quadratic penalty outgrew the current guess.
                    self.epoch_minor += 1;
                    self.inner = Prod::new(n, self.rate(m_r))?;
                    Ok(())
                } else {
                    self.inner.update(x)
                }
            }
        }
    }

    fn epoch_label(&self) -> String {
        format!("{}:{}", self.epoch_major, self.epoch_minor)
    }
}
