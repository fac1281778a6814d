//! Forecasters for prediction with expert advice, their second-order regret
//! bounds, and the machinery to verify those bounds empirically on
//! adversarial payoff sequences.
//!
//! The library provides:
//!
//! - [`model`]: payoff sequences, probability assignments, and the running
//!   statistics (`X`, `Q`, `A`, `R`, `V`, range and magnitude trackers with
//!   their monotone envelopes) everything else consumes;
//! - [`prod`]: the multiplicative `prod(eta)` forecaster and its
//!   parameter-free doubling wrappers `prod-Q`, `prod-M`, `prod-MQ`;
//! - [`wm`]: weighted majority with fixed and variance-adaptive learning
//!   rates, plus the round potential `phi`;
//! - [`translate`]: on-line payoff-translation meta-forecasters, randomized
//!   action sampling, and the Bernstein deviation band;
//! - [`bounds`]: closed-form evaluators for the full regret-bound catalog
//!   (B1-B12) and a verifier comparing them to measured regret;
//! - [`adversary`]: seeded payoff generators and sequence transforms.
//!
//! Forecasters are single-owner state machines and all values are plain
//! data, so independent runs parallelize freely.

pub mod adversary;
pub mod bounds;
pub mod error;
pub mod forecaster;
pub mod model;
pub mod prod;
pub mod translate;
pub mod wm;

pub use adversary::{generate, transform, GenKind, GeneratorSpec, Transform};
pub use bounds::{compatible_bounds, evaluate, verify, verify_all, BoundId, BoundReport};
pub use error::{Error, Result};
pub use forecaster::{run, AlgoSpec, Forecaster, RunTrace, TraceRow};
pub use model::{
    effective_range, magnitude_tracker, pow2_dominating, range_tracker, Distribution, GameKind,
    PayoffSequence, SequenceStats,
};
pub use prod::{theorem_eta, Prod, ProdM, ProdMq, ProdQ};
pub use translate::{
    bernstein_band, sample_action, RandomizedPlay, Translated, TranslationRule,
};
pub use wm::{phi, rate_constant, Wm, WmSchedule};
