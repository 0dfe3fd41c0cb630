use std::path::PathBuf;

use super::commands::cli_run;
use super::{HarnessError, RunConfig};

/// A sweep over config fields, each point repeated with consecutive seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecipe {
    pub name: String,
    pub sweep: Vec<(String, Vec<String>)>,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<String>,
    pub final_rewards: Vec<f64>,
    pub median_final_reward: f64,
}

impl ExperimentRecipe {
    pub fn steps(values: &[usize], repeats: usize) -> Self {
        ExperimentRecipe {
            name: "ablate_steps".into(),
            sweep: vec![("t_explore".into(), values.iter().map(usize::to_string).collect())],
            repeats,
        }
    }

    pub fn pool(values: &[usize], repeats: usize) -> Self {
        ExperimentRecipe {
            name: "ablate_pool".into(),
            sweep: vec![("n".into(), values.iter().map(usize::to_string).collect())],
            repeats,
        }
    }

    /// Header column used for a swept field in the summary.
    fn column(field: &str) -> String {
        match field {
            "n" => "N".into(),
            other => other.into(),
        }
    }

    /// Every sweep point as (field values, config per repeat). Fails before
    /// any run if a field or value is invalid.
    pub fn expand(&self, base: &RunConfig) -> Result<Vec<(Vec<String>, Vec<RunConfig>)>, HarnessError> {
        if self.repeats == 0 {
            return Err(HarnessError::arg("repeats", "must be at least 1"));
        }
        if self.sweep.is_empty() || self.sweep.iter().any(|(_, v)| v.is_empty()) {
            return Err(HarnessError::arg(
                "sweep",
                "needs at least one field with at least one value",
            ));
        }
        let mut points: Vec<Vec<String>> = vec![Vec::new()];
        for (_, values) in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        points
            .into_iter()
            .map(|values| {
                let label: Vec<String> = self
                    .sweep
                    .iter()
                    .zip(&values)
                    .map(|((f, _), v)| format!("{f}={v}"))
                    .collect();
                let runs = (0..self.repeats)
                    .map(|r| {
                        let mut cfg = base.clone();
                        for ((field, _), v) in self.sweep.iter().zip(&values) {
                            cfg.set(field, v).map_err(|m| HarnessError::arg(field, m))?;
                        }
                        cfg.pipeline.rng_seed = base.pipeline.rng_seed.wrapping_add(r as u64);
                        cfg.output_dir = base
                            .output_dir
                            .join(&self.name)
                            .join(label.join(","))
                            .join(format!("seed{r}"));
                        cfg.plot = false;
                        cfg.validate()?;
                        Ok(cfg)
                    })
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                Ok((values, runs))
            })
            .collect()
    }

    pub fn summary_path(&self, base: &RunConfig) -> PathBuf {
        base.output_dir.join(format!("{}.csv", self.name))
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Run every point of `recipe` and write the summary CSV.
pub fn run_recipe(base: &RunConfig, recipe: &ExperimentRecipe) -> Result<Vec<SweepRow>, HarnessError> {
    let plan = recipe.expand(base)?;
    let mut rows = Vec::with_capacity(plan.len());
    for (values, runs) in plan {
        let mut finals = Vec::with_capacity(runs.len());
        for cfg in &runs {
            let summary = cli_run(cfg)?;
            finals.push(summary.final_eval().unwrap_or(f64::NAN));
        }
        rows.push(SweepRow {
            values,
            median_final_reward: median(&finals),
            final_rewards: finals,
        });
    }
    let mut csv: Vec<String> = recipe.sweep.iter().map(|(f, _)| ExperimentRecipe::column(f)).collect();
    csv.push("median_final_reward".into());
    csv.push("seed_count".into());
    let mut text = csv.join(",") + "\n";
    for r in &rows {
        text.push_str(&format!(
            "{},{},{}\n",
            r.values.join(","),
            r.median_final_reward,
            r.final_rewards.len()
        ));
    }
    std::fs::create_dir_all(&base.output_dir)?;
    std::fs::write(recipe.summary_path(base), text)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn expansion_assigns_seeds_and_dirs() {
        let base = RunConfig::default();
        let plan = ExperimentRecipe::steps(&[2, 4], 3).expand(&base).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan[1].0, vec!["4".to_string()]);
        let seeds: Vec<u64> = plan[1].1.iter().map(|c| c.pipeline.rng_seed).collect();
        assert_eq!(seeds, vec![0, 1, 2]);
        assert!(plan[1].1.iter().all(|c| c.pipeline.t_explore == 4));
        assert!(plan[0].1[2].output_dir.ends_with("ablate_steps/t_explore=2/seed2"));
    }

    #[test]
    fn invalid_sweeps_fail_up_front() {
        let base = RunConfig::default();
        assert!(ExperimentRecipe::steps(&[12], 1).expand(&base).is_err());
        let bogus = ExperimentRecipe {
            name: "x".into(),
            sweep: vec![("nope".into(), vec!["1".into()])],
            repeats: 1,
        };
        assert!(bogus.expand(&base).is_err());
        assert!(ExperimentRecipe::pool(&[24], 0).expand(&base).is_err());
    }

    #[test]
    fn single_point_pool_sweep_runs_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = RunConfig::default();
        for (k, v) in [
            ("k", "4"),
            ("contexts_per_iter", "1"),
            ("iterations", "2"),
            ("eval_seeds", "8"),
        ] {
            base.set(k, v).unwrap();
        }
        base.output_dir = dir.path().to_path_buf();
        let rows = run_recipe(&base, &ExperimentRecipe::pool(&[4], 1)).unwrap();
        assert_eq!(rows.len(), 1);
        let text = std::fs::read_to_string(dir.path().join("ablate_pool.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "N,median_final_reward,seed_count");
        assert!(lines[1].starts_with("4,") && lines[1].ends_with(",1"));
    }
}
