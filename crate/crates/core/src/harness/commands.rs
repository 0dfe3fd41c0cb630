use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    cost_model, evt_bound_check, rank_density_map, rank_percentiles, ranking_report, CostReport, DensityMap, EvtReport,
    RankingReport,
};
use crate::pipeline::{draw_seeds, rollout_group, run_training, PipelineState, RunOptions, RunSummary};
use crate::policy::{checkpoint, mix64, quantize_policy, MlpPolicy, NoiseSeed, VectorField};

use super::plot::line_plot_svg;
use super::{HarnessError, RunConfig};

/// Train per `cfg`, writing the run directory under `cfg.output_dir`.
pub fn cli_run(cfg: &RunConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let mut state = PipelineState::new(
        cfg.pipeline.clone(),
        cfg.trainer.clone(),
        cfg.reward_spec(),
        &cfg.policy_shape(),
    )?;
    let opts = RunOptions {
        record_wallclock: cfg.record_wallclock,
    };
    let summary = run_training(&mut state, &cfg.output_dir, &cfg.to_text(), &opts)?;
    if cfg.plot {
        let svg = line_plot_svg(
            &format!("{} eval reward", cfg.pipeline.mode),
            "iteration",
            "eval reward",
            &summary.evals.iter().map(|&(i, r)| (i as f64, r)).collect::<Vec<_>>(),
        );
        std::fs::write(cfg.output_dir.join("metrics.svg"), svg)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankArgs {
    pub groups: usize,
    pub ks: Vec<usize>,
    pub bins: usize,
    pub checkpoint: Option<PathBuf>,
    /// Score proxies with the full-precision policy instead of the FP4 mirror.
    pub disable_quantization: bool,
}

impl Default for RankArgs {
    fn default() -> Self {
        RankArgs {
            groups: 64,
            ks: vec![4, 8, 12],
            bins: 10,
            checkpoint: None,
            disable_quantization: false,
        }
    }
}

const RANK_TAG: u64 = 0x7a2c_0000_0000_0003;

/// Compare proxy rankings (FP4 mirror at `t_explore` steps) with true
/// rankings (full precision at `t_full` steps) over shared seeds. Writes
/// `ranking.csv` and `density_map.csv` under `cfg.output_dir`.
pub fn cli_rank_report(cfg: &RunConfig, args: &RankArgs) -> Result<(RankingReport, DensityMap), HarnessError> {
    cfg.validate()?;
    if args.groups == 0 {
        return Err(HarnessError::arg("groups", "must be at least 1"));
    }
    if let Some(&k) = args.ks.iter().find(|&&k| k == 0 || 2 * k > cfg.pipeline.n) {
        return Err(HarnessError::arg(
            "k",
            format!("k = {k} must be in 1..={}", cfg.pipeline.n / 2),
        ));
    }
    if args.bins < 2 {
        return Err(HarnessError::arg("bins", "must be at least 2"));
    }
    let policy = match &args.checkpoint {
        Some(path) => checkpoint::load(path)?,
        None => {
            PipelineState::new(
                cfg.pipeline.clone(),
                cfg.trainer.clone(),
                cfg.reward_spec(),
                &cfg.policy_shape(),
            )?
            .policy
        }
    };
    if policy.num_contexts() != cfg.num_contexts {
        return Err(HarnessError::arg(
            "num_contexts",
            format!(
                "checkpoint has {} contexts, config has {}",
                policy.num_contexts(),
                cfg.num_contexts
            ),
        ));
    }
    let quantized = quantize_policy(&policy, cfg.pipeline.format, cfg.pipeline.quantize_activations)?;
    let proxy: &dyn VectorField = if args.disable_quantization { &policy } else { &quantized };
    let reward = cfg.reward_spec();

    let contexts: Vec<usize> = (0..args.groups).map(|g| g % cfg.num_contexts).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.pipeline.rng_seed ^ RANK_TAG));
    let seeds = draw_seeds(&mut rng, &contexts, cfg.pipeline.n);
    let mut groups = Vec::with_capacity(args.groups);
    let mut pairs = Vec::new();
    for (&c, seeds) in contexts.iter().zip(&seeds) {
        let (t, p) = paired_rewards(&policy, proxy, c, seeds, cfg, &reward)?;
        if t.len() < 2 * args.ks.iter().copied().max().unwrap_or(1) {
            continue;
        }
        pairs.extend(rank_percentiles(&t).into_iter().zip(rank_percentiles(&p)));
        groups.push((t, p));
    }
    if groups.is_empty() {
        return Err(HarnessError::Divergence(
            "every group lost too many seeds to divergence".into(),
        ));
    }
    let report = ranking_report(&groups, &args.ks)?;
    let map = rank_density_map(&pairs, args.bins)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("ranking.csv"), report.to_csv())?;
    std::fs::write(cfg.output_dir.join("density_map.csv"), map.to_csv())?;
    Ok((report, map))
}

/// True and proxy rewards for the seeds that survive both solves.
fn paired_rewards(
    policy: &MlpPolicy,
    proxy: &dyn VectorField,
    context: usize,
    seeds: &[NoiseSeed],
    cfg: &RunConfig,
    reward: &crate::pipeline::RewardSpec,
) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let truth = rollout_group(policy, context, seeds, cfg.pipeline.t_full, reward)?;
    let cheap = rollout_group(proxy, context, seeds, cfg.pipeline.t_explore, reward)?;
    let mut t = Vec::with_capacity(seeds.len());
    let mut p = Vec::with_capacity(seeds.len());
    let (mut i, mut j) = (0, 0);
    for s in seeds {
        let a = truth.records.get(i).filter(|r| r.seed == *s);
        let b = cheap.records.get(j).filter(|r| r.seed == *s);
        if a.is_some() {
            i += 1;
        }
        if b.is_some() {
            j += 1;
        }
        if let (Some(a), Some(b)) = (a, b) {
            t.push(a.reward);
            p.push(b.reward);
        }
    }
    Ok((t, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvtArgs {
    pub sigma: f64,
    pub n: usize,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for EvtArgs {
    fn default() -> Self {
        EvtArgs {
            sigma: 1.0,
            n: 96,
            deltas: vec![0.0, 0.1, 0.25, 1.0],
            trials: 10_000,
            seed: 0,
            output_dir: PathBuf::from("runs/evt"),
        }
    }
}

/// One Monte Carlo report per delta, written to `evt.csv`.
pub fn cli_evt(args: &EvtArgs) -> Result<Vec<EvtReport>, HarnessError> {
    if args.deltas.is_empty() {
        return Err(HarnessError::arg("delta", "give at least one value"));
    }
    let reports = args
        .deltas
        .iter()
        .map(|&d| evt_bound_check(args.sigma, args.n, d, args.trials, args.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::arg("evt", e.to_string()))?;
    let mut csv = format!("{}\n", EvtReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_report(&args.output_dir, "evt.csv", &csv)?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostArgs {
    pub n: usize,
    pub k: usize,
    pub t_explore: usize,
    pub t_full: usize,
    pub ratio: f64,
    pub fixed_overhead: f64,
    pub output_dir: PathBuf,
}

impl Default for CostArgs {
    fn default() -> Self {
        CostArgs {
            n: 96,
            k: 24,
            t_explore: 6,
            t_full: 10,
            ratio: 0.25,
            fixed_overhead: 0.0,
            output_dir: PathBuf::from("runs/cost"),
        }
    }
}

pub fn cli_cost(args: &CostArgs) -> Result<CostReport, HarnessError> {
    if args.n == 0 || args.k == 0 || args.t_full == 0 {
        return Err(HarnessError::arg("cost", "N, K and T_full must be positive"));
    }
    if args.k > args.n {
        return Err(HarnessError::arg("k", "K must not exceed N"));
    }
    if !(args.ratio > 0.0 && args.ratio.is_finite()) {
        return Err(HarnessError::arg("ratio", "must be positive"));
    }
    if !(args.fixed_overhead >= 0.0 && args.fixed_overhead.is_finite()) {
        return Err(HarnessError::arg("fixed_overhead", "must be non-negative"));
    }
    let r = cost_model(
        args.n,
        args.k,
        args.t_explore,
        args.t_full,
        args.ratio,
        args.fixed_overhead,
    );
    write_report(
        &args.output_dir,
        "cost.csv",
        &format!("{}\n{}\n", CostReport::CSV_HEADER, r.csv_row()),
    )?;
    Ok(r)
}

fn write_report(dir: &Path, name: &str, body: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), body)?;
    Ok(())
}
