use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::policy::checkpoint;
use crate::rl::StepMetrics;

use super::eval::{evaluate, EvalSpec};
use super::state::PipelineState;
use super::PipelineError;

pub const METRICS_HEADER: &str =
    "iteration,mode,eval_reward,mean_true_reward_selected,sigma_R,rollout_cost_units,wallclock_ms";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Write measured wall-clock times; otherwise the column is 0 so that
    /// repeated runs produce identical files.
    pub record_wallclock: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub evals: Vec<(u64, f64)>,
    pub metrics_path: PathBuf,
}

impl RunSummary {
    pub fn first_eval(&self) -> Option<f64> {
        self.evals.first().map(|e| e.1)
    }

    pub fn final_eval(&self) -> Option<f64> {
        self.evals.last().map(|e| e.1)
    }
}

/// Run `state.cfg.iterations` iterations, writing `config.snapshot`,
/// `metrics.csv`, `steps.csv` and `policy.ckpt` into `dir`.
pub fn run_training(
    state: &mut PipelineState,
    dir: &Path,
    snapshot: &str,
    opts: &RunOptions,
) -> Result<RunSummary, PipelineError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.snapshot"), snapshot)?;
    let metrics_path = dir.join("metrics.csv");
    let mut metrics = BufWriter::new(File::create(&metrics_path)?);
    let mut steps = BufWriter::new(File::create(dir.join("steps.csv"))?);
    writeln!(metrics, "{METRICS_HEADER}")?;
    writeln!(steps, "{}", StepMetrics::CSV_HEADER)?;
    metrics.flush()?;
    steps.flush()?;

    let eval_spec = EvalSpec::fixed(state.cfg.eval_seeds, state.cfg.t_full);
    let ckpt = dir.join("policy.ckpt");
    let mut evals = Vec::new();
    for _ in 0..state.cfg.iterations {
        let started = Instant::now();
        let m = state.train_iteration()?;
        let eval = if state.cfg.is_eval_iteration(m.iteration) {
            let r = evaluate(&state.policy, &state.reward, &eval_spec)?;
            evals.push((m.iteration, r));
            r.to_string()
        } else {
            String::new()
        };
        let wall = if opts.record_wallclock {
            started.elapsed().as_millis()
        } else {
            0
        };
        writeln!(
            metrics,
            "{},{},{},{},{},{},{}",
            m.iteration, m.mode, eval, m.mean_true_reward_selected, m.sigma_r, m.rollout_cost_units, wall
        )?;
        writeln!(steps, "{}", m.step.csv_row())?;
        metrics.flush()?;
        steps.flush()?;
        if m.iteration % state.cfg.eval_every == 0 || m.iteration == state.cfg.iterations {
            checkpoint::save(&state.policy, &ckpt)?;
        }
    }
    Ok(RunSummary { evals, metrics_path })
}
