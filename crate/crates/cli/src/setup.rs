//! Translation of CLI flags into core run configurations.

use anyhow::{anyhow, bail, Context, Result};
use std::str::FromStr;

use advice_core::{AlgoSpec, BoundId, GenKind, GeneratorSpec, TranslationRule};

/// Tuning flags shared by `run`, `verify` and `sweep`.
#[derive(Debug, Clone, clap::Args)]
pub struct AlgoFlags {
    /// Forecaster: prod | prod-tuned | prod-q | prod-m | prod-mq |
    /// wm-fixed | wm-known | wm-unknown
    #[arg(long)]
    pub algo: Option<String>,

    /// Learning rate for `prod` and `wm-fixed`.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Payoff bound M for `prod-tuned` and `prod-q` (use 2M for the
    /// one-sided reward-translated corollary).
    #[arg(long)]
    pub bound_m: Option<f64>,

    /// Quadratic budget Q for `prod-tuned` and `prod-m`.
    #[arg(long)]
    pub bound_q: Option<f64>,

    /// Range bound E for `wm-known`.
    #[arg(long)]
    pub range_e: Option<f64>,

    /// Payoff translation rule: none | reward | min | max | midrange
    #[arg(long, default_value = "none")]
    pub translate: String,
}

impl AlgoFlags {
    pub fn algo_spec(&self) -> Result<AlgoSpec> {
        let name = self
            .algo
            .as_deref()
            .ok_or_else(|| anyhow!("--algo is required"))?;
        let need = |opt: Option<f64>, flag: &str| {
            opt.ok_or_else(|| anyhow!("algorithm '{name}' needs {flag}"))
        };
        Ok(match name {
            "prod" => AlgoSpec::Prod {
                eta: need(self.eta, "--eta")?,
            },
            "prod-tuned" => AlgoSpec::ProdTuned {
                magnitude: need(self.bound_m, "--bound-m")?,
                quad: need(self.bound_q, "--bound-q")?,
            },
            "prod-q" => AlgoSpec::ProdQ {
                magnitude: need(self.bound_m, "--bound-m")?,
            },
            "prod-m" => AlgoSpec::ProdM {
                quad: need(self.bound_q, "--bound-q")?,
            },
            "prod-mq" => AlgoSpec::ProdMq,
            "wm-fixed" => AlgoSpec::WmFixed {
                eta: need(self.eta, "--eta")?,
            },
            "wm-known" => AlgoSpec::WmKnown {
                range: need(self.range_e, "--range-e")?,
            },
            "wm-unknown" => AlgoSpec::WmUnknown,
            other => bail!("unknown algorithm '{other}'"),
        })
    }

    pub fn translation(&self) -> Result<TranslationRule> {
        TranslationRule::from_str(&self.translate).map_err(|e| anyhow!("{e}"))
    }
}

/// Parses a generator spec string:
/// `kind[,key=value]*` with kinds `uniform`, `bernoulli`, `loss`, `outlier`,
/// `leader-flip` and keys `N` (experts), `n` (rounds), `m` (magnitude),
/// `p` (probability), `spike`, `rate`, `period`.
///
/// Example: `--gen outlier,N=8,n=2000,m=1,spike=16,rate=0.01`
pub fn parse_generator(spec: &str, seed: u64) -> Result<GeneratorSpec> {
    let mut parts = spec.split(',');
    let kind_name = parts.next().unwrap_or_default();

    let mut experts = 4usize;
    let mut rounds = 100usize;
    let mut magnitude = 1.0f64;
    let mut prob = 0.5f64;
    let mut spike = 16.0f64;
    let mut rate = 0.01f64;
    let mut period = 10usize;

    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("malformed generator field '{part}' (expected key=value)"))?;
        match key {
            "N" => experts = value.parse().context("parsing N")?,
            "n" => rounds = value.parse().context("parsing n")?,
            "m" => magnitude = value.parse().context("parsing m")?,
            "p" => prob = value.parse().context("parsing p")?,
            "spike" => spike = value.parse().context("parsing spike")?,
            "rate" => rate = value.parse().context("parsing rate")?,
            "period" => period = value.parse().context("parsing period")?,
            other => bail!("unknown generator field '{other}'"),
        }
    }

    let kind = match kind_name {
        "uniform" => GenKind::UniformSigned { magnitude },
        "bernoulli" => GenKind::BernoulliGain { prob, magnitude },
        "loss" => GenKind::LossGame { magnitude },
        "outlier" => GenKind::Outlier {
            base: magnitude,
            spike,
            rate,
        },
        "leader-flip" => GenKind::LeaderFlip { magnitude, period },
        other => bail!("unknown generator kind '{other}'"),
    };
    Ok(GeneratorSpec {
        kind,
        num_experts: experts,
        rounds,
        seed,
    })
}

/// The tightest payoff magnitude a generator is contracted to respect.
pub fn generator_magnitude(kind: &GenKind) -> f64 {
    match *kind {
        GenKind::UniformSigned { magnitude } => magnitude,
        GenKind::BernoulliGain { magnitude, .. } => magnitude,
        GenKind::LossGame { magnitude } => magnitude,
        GenKind::Outlier { base, spike, .. } => base.max(spike),
        GenKind::LeaderFlip { magnitude, .. } => magnitude,
    }
}

/// Parses `--bounds`: `auto` (catalog entries compatible with the run) or a
/// comma-separated list of ids.
pub fn parse_bounds(arg: &str) -> Result<Option<Vec<BoundId>>> {
    if arg == "auto" {
        return Ok(None);
    }
    arg.split(',')
        .map(|s| BoundId::from_str(s.trim()).map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_strings_parse() {
        let spec = parse_generator("uniform,N=8,n=500,m=2", 7).unwrap();
        assert_eq!(spec.num_experts, 8);
        assert_eq!(spec.rounds, 500);
        assert_eq!(spec.seed, 7);
        assert!(matches!(
            spec.kind,
            GenKind::UniformSigned { magnitude } if magnitude == 2.0
        ));

        let spec = parse_generator("outlier,n=10,spike=32,rate=0.05", 0).unwrap();
        assert!(matches!(spec.kind, GenKind::Outlier { spike, .. } if spike == 32.0));
        assert_eq!(generator_magnitude(&spec.kind), 32.0);

        assert!(parse_generator("warp,N=2", 0).is_err());
        assert!(parse_generator("uniform,N", 0).is_err());
    }

    #[test]
    fn bound_lists_parse() {
        assert!(parse_bounds("auto").unwrap().is_none());
        let ids = parse_bounds("B1, b3,B12").unwrap().unwrap();
        assert_eq!(ids.len(), 3);
        assert!(parse_bounds("B99").is_err());
    }
}
