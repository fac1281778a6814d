//! Trace/summary emission and payoff CSV ingestion.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so a value
//! read back from a trace is bit-identical to the value that produced it,
//! and identical runs produce byte-identical files.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use advice_core::{
    bounds, AlgoSpec, BoundReport, GeneratorSpec, PayoffSequence, RunTrace, TranslationRule,
};

/// Writes `contents` atomically: to a sibling temp file, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn push_float(out: &mut String, v: f64) {
    write!(out, "{v}").expect("writing to string");
}

/// Per-round trace CSV:
/// `t,x_1..x_N,p_1..p_N,xhat,Xstar,regret,VarZ,E_t,M_t,Qstar,epoch`.
/// `M_t` is empty while the magnitude tracker is undefined.
pub fn trace_csv(trace: &RunTrace) -> String {
    let n = trace.num_experts;
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        write!(out, ",x_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",p_{i}").unwrap();
    }
    out.push_str(",xhat,Xstar,regret,VarZ,E_t,M_t,Qstar,epoch\n");
    for row in &trace.rows {
        write!(out, "{}", row.t).unwrap();
        for v in &row.payoffs {
            out.push(',');
            push_float(&mut out, *v);
        }
        for p in &row.probs {
            out.push(',');
            push_float(&mut out, *p);
        }
        for v in [row.reward, row.best_cum, row.regret, row.variance, row.range] {
            out.push(',');
            push_float(&mut out, v);
        }
        out.push(',');
        if let Some(m) = row.magnitude {
            push_float(&mut out, m);
        }
        out.push(',');
        push_float(&mut out, row.q_star);
        out.push(',');
        out.push_str(&row.epoch);
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct FinalStats {
    rounds: usize,
    reward: f64,
    best_payoff: f64,
    best_index: usize,
    regret: f64,
    cum_variance: f64,
    q_star_envelope: f64,
    r_star_envelope: f64,
    abs_star_envelope: f64,
    magnitude_tracker: Option<f64>,
    max_abs_payoff: f64,
    range_sup: f64,
    range_sq_sum: f64,
    ratio_envelope: f64,
}

#[derive(Debug, Serialize)]
struct References {
    zero_order: f64,
    first_order: f64,
    second_order: f64,
}

/// Machine-readable run summary: configuration echo, final statistics,
/// bound reports, and the order-of-magnitude reference bounds.
#[derive(Debug, Serialize)]
pub struct Summary {
    algo: AlgoSpec,
    translation: TranslationRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    num_experts: usize,
    totals: FinalStats,
    bounds: Vec<BoundReport>,
    references: References,
}

impl Summary {
    pub fn new(
        trace: &RunTrace,
        generator: Option<GeneratorSpec>,
        input: Option<String>,
        reports: Vec<BoundReport>,
    ) -> Self {
        let stats = &trace.stats;
        let ln_experts = (trace.num_experts as f64).ln();
        Summary {
            algo: trace.algo,
            translation: trace.translation,
            generator,
            input,
            num_experts: trace.num_experts,
            totals: FinalStats {
                rounds: stats.rounds(),
                reward: stats.cum_reward(),
                best_payoff: stats.best_cum_payoff(),
                best_index: stats.best_action(),
                regret: stats.regret(),
                cum_variance: stats.cum_variance(),
                q_star_envelope: stats.q_star_envelope(),
                r_star_envelope: stats.r_star_envelope(),
                abs_star_envelope: stats.abs_star_envelope(),
                magnitude_tracker: stats.magnitude(),
                max_abs_payoff: stats.max_abs_payoff(),
                range_sup: stats.range_sup(),
                range_sq_sum: stats.range_sq_sum(),
                ratio_envelope: stats.ratio_envelope(),
            },
            bounds: reports,
            references: References {
                zero_order: bounds::zero_order_reference(
                    stats.max_abs_payoff(),
                    stats.rounds(),
                    ln_experts,
                ),
                first_order: bounds::first_order_reference(
                    stats.max_abs_payoff(),
                    stats.abs_star_envelope(),
                    ln_experts,
                ),
                second_order: bounds::second_order_reference(
                    stats.max_abs_payoff(),
                    stats.q_star_envelope(),
                    ln_experts,
                ),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Reads an external payoff file with header `t,x_1,...,x_N`.
pub fn read_payoff_csv(path: &Path) -> Result<PayoffSequence> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty payoff file")?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.first() != Some(&"t") {
        bail!("payoff file must start with a 't' column, got '{header}'");
    }
    let n = fields.len() - 1;
    for (i, field) in fields.iter().skip(1).enumerate() {
        let expected = format!("x_{}", i + 1);
        if *field != expected {
            bail!("expected column '{expected}', got '{field}'");
        }
    }
    let mut rounds = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            bail!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                cells.len(),
                n + 1
            );
        }
        let row: Vec<f64> = cells[1..]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .with_context(|| format!("row {}: bad payoff '{c}'", lineno + 2))
            })
            .collect::<Result<_>>()?;
        rounds.push(row);
    }
    PayoffSequence::new(n, rounds).map_err(|e| anyhow::anyhow!("{e}"))
}
