//! The `run`, `verify` and `sweep` subcommands.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use advice_core::{
    bounds, compatible_bounds, generate, run, AlgoSpec, BoundId, BoundReport, GenKind,
    GeneratorSpec, PayoffSequence, RunTrace, TranslationRule,
};

use crate::output::{read_payoff_csv, trace_csv, write_atomic, Summary};
use crate::setup::{generator_magnitude, parse_bounds, parse_generator, AlgoFlags};

pub struct RunInputs {
    pub seq: PayoffSequence,
    pub generator: Option<GeneratorSpec>,
    pub input: Option<String>,
}

pub fn resolve_inputs(gen: &Option<String>, input: &Option<PathBuf>, seed: u64) -> Result<RunInputs> {
    match (gen, input) {
        (Some(_), Some(_)) => bail!("--gen and --input are mutually exclusive"),
        (Some(spec), None) => {
            let generator = parse_generator(spec, seed)?;
            let seq = generate(&generator)?;
            Ok(RunInputs {
                seq,
                generator: Some(generator),
                input: None,
            })
        }
        (None, Some(path)) => Ok(RunInputs {
            seq: read_payoff_csv(path)?,
            generator: None,
            input: Some(path.display().to_string()),
        }),
        (None, None) => bail!("one of --gen or --input is required"),
    }
}

fn requested_reports(trace: &RunTrace, bounds_arg: &str) -> Result<Vec<BoundReport>> {
    let explicit = parse_bounds(bounds_arg)?;
    let ids = explicit.unwrap_or_else(|| compatible_bounds(trace));
    ids.iter()
        .map(|id| bounds::verify(trace, *id).with_context(|| format!("verifying {id}")))
        .collect()
}

fn print_report_table(label: &str, reports: &[BoundReport]) {
    println!("{label}");
    println!("  BOUND        BOUND_VALUE           MEASURED              SLACK  HOLDS");
    for r in reports {
        println!(
            "  {:<5} {:>18.9} {:>18.9} {:>18.9}  {}",
            r.bound.code(),
            r.bound_value,
            r.measured,
            r.slack,
            if r.holds { "yes" } else { "NO" }
        );
    }
}

pub fn cmd_run(
    flags: &AlgoFlags,
    gen: &Option<String>,
    input: &Option<PathBuf>,
    seed: u64,
    bounds_arg: &str,
    out_dir: &Path,
) -> Result<u8> {
    let inputs = resolve_inputs(gen, input, seed)?;
    let algo = flags.algo_spec()?;
    let rule = flags.translation()?;
    let trace = run(&algo, rule, &inputs.seq)?;
    let reports = requested_reports(&trace, bounds_arg)?;

    write_atomic(&out_dir.join("trace.csv"), &trace_csv(&trace))?;
    let summary = Summary::new(&trace, inputs.generator, inputs.input, reports.clone());
    write_atomic(&out_dir.join("summary.json"), &summary.to_json()?)?;

    println!(
        "{} ({} experts, {} rounds): reward {:.6}, best {:.6}, regret {:.6}",
        algo.label(),
        trace.num_experts,
        trace.stats.rounds(),
        trace.stats.cum_reward(),
        trace.stats.best_cum_payoff(),
        trace.regret()
    );
    print_report_table("bounds:", &reports);
    println!("wrote {}", out_dir.join("trace.csv").display());
    println!("wrote {}", out_dir.join("summary.json").display());
    Ok(0)
}

/// A single verification cell: a run plus the bounds checked against it.
struct VerifyCell {
    label: String,
    algo: AlgoSpec,
    rule: TranslationRule,
    generator: GeneratorSpec,
    bounds: Vec<BoundId>,
}

/// The default catalog: every bound exercised on a matching generator.
fn default_catalog(seed: u64) -> Vec<VerifyCell> {
    let gen = |kind: GenKind| GeneratorSpec {
        kind,
        num_experts: 4,
        rounds: 400,
        seed,
    };
    let uniform = gen(GenKind::UniformSigned { magnitude: 1.0 });
    let leader = gen(GenKind::LeaderFlip {
        magnitude: 1.0,
        period: 10,
    });
    let outlier = gen(GenKind::Outlier {
        base: 1.0,
        spike: 16.0,
        rate: 0.01,
    });
    let gain = gen(GenKind::BernoulliGain {
        prob: 0.2,
        magnitude: 1.0,
    });
    let loss = gen(GenKind::LossGame { magnitude: 1.0 });

    let cell = |label: &str,
                algo: AlgoSpec,
                rule: TranslationRule,
                generator: GeneratorSpec,
                bounds: Vec<BoundId>| VerifyCell {
        label: label.to_owned(),
        algo,
        rule,
        generator,
        bounds,
    };
    vec![
        cell(
            "prod on uniform payoffs",
            AlgoSpec::Prod { eta: 0.5 },
            TranslationRule::None,
            uniform,
            vec![BoundId::ProdLemma],
        ),
        cell(
            "tuned prod on uniform payoffs",
            AlgoSpec::ProdTuned {
                magnitude: 1.0,
                quad: 400.0,
            },
            TranslationRule::None,
            uniform,
            vec![BoundId::ProdLemma, BoundId::ProdTheorem],
        ),
        cell(
            "prod-Q on uniform payoffs",
            AlgoSpec::ProdQ { magnitude: 1.0 },
            TranslationRule::None,
            uniform,
            vec![BoundId::ProdQDoubling],
        ),
        cell(
            "prod-Q on leader flips",
            AlgoSpec::ProdQ { magnitude: 1.0 },
            TranslationRule::None,
            leader,
            vec![BoundId::ProdQDoubling],
        ),
        cell(
            "prod-Q on outliers",
            AlgoSpec::ProdQ { magnitude: 16.0 },
            TranslationRule::None,
            outlier,
            vec![BoundId::ProdQDoubling],
        ),
        cell(
            "prod-M on uniform payoffs",
            AlgoSpec::ProdM { quad: 400.0 },
            TranslationRule::None,
            uniform,
            vec![BoundId::ProdMDoubling],
        ),
        cell(
            "prod-MQ on uniform payoffs",
            AlgoSpec::ProdMq,
            TranslationRule::None,
            uniform,
            vec![BoundId::ProdMqNested],
        ),
        cell(
            "prod-MQ on outliers",
            AlgoSpec::ProdMq,
            TranslationRule::None,
            outlier,
            vec![BoundId::ProdMqNested],
        ),
        cell(
            "weighted majority, known range",
            AlgoSpec::WmKnown { range: 2.0 },
            TranslationRule::None,
            uniform,
            vec![BoundId::WmKnownRange],
        ),
        cell(
            "weighted majority, unknown range",
            AlgoSpec::WmUnknown,
            TranslationRule::None,
            uniform,
            vec![
                BoundId::WmUnknownRange,
                BoundId::WmRangeSum,
                BoundId::SignedMin,
            ],
        ),
        cell(
            "reward-translated prod-Q",
            AlgoSpec::ProdQ { magnitude: 2.0 },
            TranslationRule::Reward,
            uniform,
            vec![BoundId::ProdQTranslated],
        ),
        cell(
            "weighted majority on a gain game",
            AlgoSpec::WmUnknown,
            TranslationRule::None,
            gain,
            vec![BoundId::OneSidedWm],
        ),
        cell(
            "weighted majority on a loss game",
            AlgoSpec::WmUnknown,
            TranslationRule::None,
            loss,
            vec![BoundId::OneSidedWm],
        ),
        cell(
            "reward-translated prod-Q on a gain game",
            AlgoSpec::ProdQ { magnitude: 2.0 },
            TranslationRule::Reward,
            gain,
            vec![BoundId::OneSidedProd],
        ),
        cell(
            "reward-translated prod-Q on a loss game",
            AlgoSpec::ProdQ { magnitude: 2.0 },
            TranslationRule::Reward,
            loss,
            vec![BoundId::OneSidedProd],
        ),
    ]
}

fn verify_cell(cell: &VerifyCell, corrupt: bool) -> Result<Vec<BoundReport>> {
    let seq = generate(&cell.generator)?;
    let mut trace = run(&cell.algo, cell.rule, &seq)?;
    if corrupt {
        // Fault injection: shift the recorded reward far below any bound so
        // a sound verifier must report the violation.
        let worst = cell
            .bounds
            .iter()
            .map(|id| bounds::verify(&trace, *id).map(|r| r.bound_value.abs()))
            .collect::<advice_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        trace.stats.inject_reward_error(-10.0 * (1.0 + worst));
    }
    cell.bounds
        .iter()
        .map(|id| bounds::verify(&trace, *id).with_context(|| format!("verifying {id}")))
        .collect()
}

pub fn cmd_verify(
    flags: &AlgoFlags,
    gen: &Option<String>,
    input: &Option<PathBuf>,
    seed: u64,
    bounds_arg: &str,
    corrupt: bool,
) -> Result<u8> {
    let mut failures: Vec<(String, BoundReport)> = Vec::new();

    if flags.algo.is_some() {
        // Single configured cell.
        let inputs = resolve_inputs(gen, input, seed)?;
        let algo = flags.algo_spec()?;
        let rule = flags.translation()?;
        let mut trace = run(&algo, rule, &inputs.seq)?;
        if corrupt {
            let explicit = parse_bounds(bounds_arg)?;
            let ids = explicit.unwrap_or_else(|| compatible_bounds(&trace));
            let worst = ids
                .iter()
                .map(|id| bounds::verify(&trace, *id).map(|r| r.bound_value.abs()))
                .collect::<advice_core::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0f64, f64::max);
            trace.stats.inject_reward_error(-10.0 * (1.0 + worst));
        }
        let reports = requested_reports(&trace, bounds_arg)?;
        print_report_table(&format!("{} run:", algo.label()), &reports);
        failures.extend(
            reports
                .into_iter()
                .filter(|r| !r.holds)
                .map(|r| (algo.label().to_owned(), r)),
        );
    } else {
        // Full default catalog.
        let explicit = parse_bounds(bounds_arg)?;
        for cell in default_catalog(seed) {
            let selected: Vec<BoundId> = match &explicit {
                None => cell.bounds.clone(),
                Some(wanted) => cell
                    .bounds
                    .iter()
                    .copied()
                    .filter(|b| wanted.contains(b))
                    .collect(),
            };
            if selected.is_empty() {
                continue;
            }
            let trimmed = VerifyCell {
                bounds: selected,
                ..cell
            };
            let reports = verify_cell(&trimmed, corrupt)?;
            print_report_table(&trimmed.label, &reports);
            failures.extend(
                reports
                    .into_iter()
                    .filter(|r| !r.holds)
                    .map(|r| (trimmed.label.clone(), r)),
            );
        }
    }

    if failures.is_empty() {
        println!("all bounds hold");
        Ok(0)
    } else {
        println!("{} bound violation(s):", failures.len());
        for (label, r) in &failures {
            println!("  {} on '{}': slack {:.9}", r.bound.code(), label, r.slack);
        }
        Ok(1)
    }
}

fn parse_grid<T: std::str::FromStr>(arg: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} value '{s}': {e}"))
        })
        .collect()
}

fn cell_generator(kind_name: &str, experts: usize, rounds: usize, magnitude: f64, seed: u64) -> Result<GeneratorSpec> {
    let kind = match kind_name {
        "uniform" => GenKind::UniformSigned { magnitude },
        "bernoulli" => GenKind::BernoulliGain {
            prob: 0.3,
            magnitude,
        },
        "loss" => GenKind::LossGame { magnitude },
        "outlier" => GenKind::Outlier {
            base: magnitude,
            spike: 32.0 * magnitude,
            rate: 0.002,
        },
        "leader-flip" => GenKind::LeaderFlip {
            magnitude,
            period: (rounds / 16).max(1),
        },
        other => bail!("unknown generator kind '{other}'"),
    };
    Ok(GeneratorSpec {
        kind,
        num_experts: experts,
        rounds,
        seed,
    })
}

/// Per-cell algorithm tuning: declared bounds follow the generator contract
/// unless the user pinned them explicitly.
fn cell_algo(flags: &AlgoFlags, generator: &GeneratorSpec, rule: TranslationRule) -> Result<AlgoSpec> {
    let name = flags
        .algo
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("--algo is required for sweeps"))?;
    let m = generator_magnitude(&generator.kind);
    let n = generator.rounds as f64;
    Ok(match name {
        "prod" => AlgoSpec::Prod {
            eta: flags.eta.unwrap_or(0.5 / m),
        },
        "prod-tuned" => AlgoSpec::ProdTuned {
            magnitude: flags.bound_m.unwrap_or(m),
            quad: flags.bound_q.unwrap_or(n * m * m),
        },
        "prod-q" => AlgoSpec::ProdQ {
            magnitude: flags.bound_m.unwrap_or(match rule {
                TranslationRule::None => m,
                _ => 2.0 * m,
            }),
        },
        "prod-m" => AlgoSpec::ProdM {
            quad: flags.bound_q.unwrap_or(n * m * m),
        },
        "prod-mq" => AlgoSpec::ProdMq,
        "wm-fixed" => AlgoSpec::WmFixed {
            eta: flags.eta.unwrap_or(0.5 / m),
        },
        "wm-known" => AlgoSpec::WmKnown {
            range: flags.range_e.unwrap_or(2.0 * m),
        },
        "wm-unknown" => AlgoSpec::WmUnknown,
        other => bail!("unknown algorithm '{other}'"),
    })
}

pub struct SweepGrid {
    pub kind: String,
    pub experts: String,
    pub rounds: String,
    pub magnitudes: String,
    pub seeds: u64,
    pub seed_base: u64,
}

pub fn cmd_sweep(
    flags: &AlgoFlags,
    grid: &SweepGrid,
    bounds_arg: &str,
    out_dir: &Path,
) -> Result<u8> {
    let experts: Vec<usize> = parse_grid(&grid.experts, "experts")?;
    let rounds: Vec<usize> = parse_grid(&grid.rounds, "rounds")?;
    let magnitudes: Vec<f64> = parse_grid(&grid.magnitudes, "magnitude")?;
    if grid.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let rule = flags.translation()?;
    let explicit = parse_bounds(bounds_arg)?;

    struct Cell {
        generator: GeneratorSpec,
        algo: AlgoSpec,
    }
    let mut cells = Vec::new();
    for &n_experts in &experts {
        for &n_rounds in &rounds {
            for &magnitude in &magnitudes {
                for s in 0..grid.seeds {
                    let generator = cell_generator(
                        &grid.kind,
                        n_experts,
                        n_rounds,
                        magnitude,
                        grid.seed_base.wrapping_add(s),
                    )?;
                    cells.push(Cell {
                        generator,
                        algo: cell_algo(flags, &generator, rule)?,
                    });
                }
            }
        }
    }

    // Cells are independent; run them in parallel and merge in cell order.
    let results: Vec<Result<(String, bool)>> = cells
        .par_iter()
        .map(|cell| {
            let seq = generate(&cell.generator)?;
            let trace = run(&cell.algo, rule, &seq)?;
            let ids = match &explicit {
                None => compatible_bounds(&trace),
                Some(wanted) => wanted.clone(),
            };
            let mut slack_by_bound: Vec<Option<f64>> = vec![None; BoundId::all().len()];
            let mut all_hold = true;
            for id in ids {
                let report = bounds::verify(&trace, id)
                    .with_context(|| format!("verifying {id} in sweep cell"))?;
                all_hold &= report.holds;
                let idx = BoundId::all().iter().position(|b| *b == id).unwrap();
                slack_by_bound[idx] = Some(report.slack);
            }
            let stats = &trace.stats;
            let ln_experts = (trace.num_experts as f64).ln();
            let mut row = String::new();
            write!(
                row,
                "{},{},{},{},{},{},{},{}",
                cell.algo.label(),
                rule,
                grid.kind,
                cell.generator.num_experts,
                cell.generator.rounds,
                generator_magnitude(&cell.generator.kind),
                cell.generator.seed,
                trace.regret()
            )
            .unwrap();
            for slack in &slack_by_bound {
                match slack {
                    Some(v) => write!(row, ",{v}").unwrap(),
                    None => row.push(','),
                }
            }
            write!(
                row,
                ",{},{},{}",
                bounds::zero_order_reference(stats.max_abs_payoff(), stats.rounds(), ln_experts),
                bounds::first_order_reference(
                    stats.max_abs_payoff(),
                    stats.abs_star_envelope(),
                    ln_experts
                ),
                bounds::second_order_reference(
                    stats.max_abs_payoff(),
                    stats.q_star_envelope(),
                    ln_experts
                ),
            )
            .unwrap();
            Ok((row, all_hold))
        })
        .collect();

    let mut csv = String::from("algo,translate,kind,experts,rounds,magnitude,seed,regret");
    for id in BoundId::all() {
        write!(csv, ",slack_{}", id.code()).unwrap();
    }
    csv.push_str(",bound_zero_order,bound_first_order,bound_second_order\n");
    let mut all_hold = true;
    for result in results {
        let (row, ok) = result?;
        all_hold &= ok;
        csv.push_str(&row);
        csv.push('\n');
    }

    let path = out_dir.join("sweep.csv");
    write_atomic(&path, &csv)?;
    println!("wrote {} ({} cells)", path.display(), cells.len());
    if all_hold {
        Ok(0)
    } else {
        println!("bound violations present; see slack columns");
        Ok(1)
    }
}
