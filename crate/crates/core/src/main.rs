use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fp4_rollout::harness::{
    cli_cost, cli_evt, cli_rank_report, cli_run, resolve_workers, run_recipe, with_workers, CostArgs, EvtArgs,
    ExperimentRecipe, HarnessError, RankArgs, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "fp4-rollout",
    version,
    about = "Two-stage FP4 rollout RL on a toy flow-matching task"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy and write its run directory.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set iterations=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sweep the exploration step count.
    AblateSteps {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 6, 8])]
        values: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sweep the candidate pool size.
    AblatePool {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![24, 48, 72, 96])]
        values: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Rank agreement between FP4 proxy rollouts and full-precision rollouts.
    RankReport {
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        groups: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 8, 12])]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Use the full-precision policy for the proxy rollouts as well.
        #[arg(long)]
        no_quantize: bool,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Monte Carlo check of range retention under bounded proxy noise.
    Evt {
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 96)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.25, 1.0])]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs/evt")]
        out: PathBuf,
    },
    /// Analytic rollout cost and speedup.
    Cost {
        #[arg(long, default_value_t = 96)]
        n: usize,
        #[arg(long, default_value_t = 24)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        t_explore: usize,
        #[arg(long, default_value_t = 10)]
        t_full: usize,
        #[arg(long, default_value_t = 0.25)]
        ratio: f64,
        /// Fixed per-iteration overhead in step units.
        #[arg(long, default_value_t = 0.0, conflicts_with = "iteration_ratio")]
        fixed_overhead: f64,
        /// Fit the overhead so a naive iteration costs this multiple of its rollout.
        #[arg(long)]
        iteration_ratio: Option<f64>,
        #[arg(long, default_value = "runs/cost")]
        out: PathBuf,
    },
}

fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::arg("config", format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| HarnessError::arg("--set", format!("expected KEY=VALUE, got `{o}`")))?;
        cfg.set(k.trim(), v.trim())
            .map_err(|m| HarnessError::arg(k.trim(), m))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let summary = with_workers(resolve_workers(cfg.worker_count)?, || cli_run(&cfg))??;
            match (summary.first_eval(), summary.final_eval()) {
                (Some(a), Some(b)) => println!("eval reward {a:.6} -> {b:.6} ({})", summary.metrics_path.display()),
                _ => println!("no iterations run ({})", summary.metrics_path.display()),
            }
        }
        Command::AblateSteps {
            config,
            values,
            repeats,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let recipe = ExperimentRecipe::steps(&values, repeats);
            let rows = with_workers(resolve_workers(cfg.worker_count)?, || run_recipe(&cfg, &recipe))??;
            for r in rows {
                println!(
                    "t_explore={} median_final_reward={:.6}",
                    r.values.join(","),
                    r.median_final_reward
                );
            }
        }
        Command::AblatePool {
            config,
            values,
            repeats,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let recipe = ExperimentRecipe::pool(&values, repeats);
            let rows = with_workers(resolve_workers(cfg.worker_count)?, || run_recipe(&cfg, &recipe))??;
            for r in rows {
                println!(
                    "N={} median_final_reward={:.6}",
                    r.values.join(","),
                    r.median_final_reward
                );
            }
        }
        Command::RankReport {
            config,
            checkpoint,
            groups,
            k,
            bins,
            no_quantize,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let args = RankArgs {
                groups,
                ks: k,
                bins,
                checkpoint,
                disable_quantization: no_quantize,
            };
            let (report, _) = with_workers(resolve_workers(cfg.worker_count)?, || cli_rank_report(&cfg, &args))??;
            println!(
                "groups={} kendall_tau={:.4} spearman_rho={:.4}",
                report.n_groups, report.kendall_tau, report.spearman_rho
            );
            for r in &report.per_k {
                println!(
                    "k={} top={:.4} bottom={:.4} cross_extreme={:.4}",
                    r.k, r.top, r.bottom, r.cross_extreme
                );
            }
        }
        Command::Evt {
            sigma,
            n,
            delta,
            trials,
            seed,
            out,
        } => {
            let args = EvtArgs {
                sigma,
                n,
                deltas: delta,
                trials,
                seed,
                output_dir: out,
            };
            let reports = with_workers(resolve_workers(0)?, || cli_evt(&args))??;
            for r in reports {
                println!(
                    "delta={} predicted_range={:.4} lower_bound={:.4} true_range={:.4} selected_range={:.4} violations={}/{}",
                    r.delta,
                    r.predicted_range,
                    r.lower_bound,
                    r.empirical_true_range,
                    r.empirical_selected_range,
                    r.violations,
                    r.trials
                );
            }
        }
        Command::Cost {
            n,
            k,
            t_explore,
            t_full,
            ratio,
            fixed_overhead,
            iteration_ratio,
            out,
        } => {
            let fixed_overhead = match iteration_ratio {
                Some(r) if r >= 1.0 => fp4_rollout::analysis::overhead_for_ratio(n as f64 * t_full as f64, r),
                Some(r) => {
                    return Err(HarnessError::arg(
                        "iteration_ratio",
                        format!("must be at least 1, got {r}"),
                    ))
                }
                None => fixed_overhead,
            };
            let r = cli_cost(&CostArgs {
                n,
                k,
                t_explore,
                t_full,
                ratio,
                fixed_overhead,
                output_dir: out,
            })?;
            println!(
                "naive={} ours={} rollout_speedup={} fixed_overhead={} end_to_end_speedup={:.4}",
                r.naive_units, r.ours_units, r.rollout_speedup, r.fixed_overhead_units, r.end_to_end_speedup
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
