use std::fmt;
use std::str::FromStr;

use crate::analysis::cost_model;
use crate::fp4::Fp4Format;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Quantized exploration, full-precision regeneration of the selection.
    TwoStage,
    /// Every rollout in full precision at the full step count.
    NaiveFull,
    /// Quantized exploration whose samples are trained on directly.
    DirectFp4,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::TwoStage, Mode::NaiveFull, Mode::DirectFp4];

    pub fn name(self) -> &'static str {
        match self {
            Mode::TwoStage => "two_stage",
            Mode::NaiveFull => "naive_full",
            Mode::DirectFp4 => "direct_fp4",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Candidate pool size per context.
    pub n: usize,
    /// Selected count per context; half top, half bottom.
    pub k: usize,
    pub t_explore: usize,
    pub t_full: usize,
    pub format: Fp4Format,
    pub quantize_activations: bool,
    pub contexts_per_iter: usize,
    pub iterations: u64,
    pub eval_every: u64,
    pub eval_seeds: usize,
    /// Training times drawn per update.
    pub t_batch_size: usize,
    pub rng_seed: u64,
    pub mode: Mode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n: 96,
            k: 24,
            t_explore: 6,
            t_full: 10,
            format: Fp4Format::Nvfp4,
            quantize_activations: true,
            contexts_per_iter: 8,
            iterations: 200,
            eval_every: 10,
            eval_seeds: 512,
            t_batch_size: 4,
            rng_seed: 0,
            mode: Mode::TwoStage,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        if self.n == 0 {
            return err("N must be at least 1".into());
        }
        if self.k == 0 || !self.k.is_multiple_of(2) {
            return err(format!("K = {} must be positive and even", self.k));
        }
        if self.k > self.n {
            return err(format!("K = {} exceeds N = {}", self.k, self.n));
        }
        if self.t_explore == 0 || self.t_full == 0 {
            return err("step counts must be at least 1".into());
        }
        if self.t_explore > self.t_full {
            return err(format!(
                "T_explore = {} exceeds T_full = {}",
                self.t_explore, self.t_full
            ));
        }
        if self.contexts_per_iter == 0 {
            return err("contexts_per_iter must be at least 1".into());
        }
        if self.eval_every == 0 {
            return err("eval_every must be at least 1".into());
        }
        if self.eval_seeds == 0 {
            return err("eval_seeds must be at least 1".into());
        }
        if self.t_batch_size == 0 {
            return err("t_batch_size must be at least 1".into());
        }
        Ok(())
    }

    /// Rollout cost of one group in full-precision step units.
    pub fn rollout_cost_units(&self) -> f64 {
        match self.mode {
            Mode::TwoStage => cost_model(self.n, self.k, self.t_explore, self.t_full, 0.25, 0.0).ours_units,
            Mode::NaiveFull => cost_model(self.n, self.k, self.t_explore, self.t_full, 0.25, 0.0).naive_units,
            Mode::DirectFp4 => self.n as f64 * self.t_explore as f64 * 0.25,
        }
    }

    /// Whether iteration `it` (1-based) ends with an evaluation.
    pub fn is_eval_iteration(&self, it: u64) -> bool {
        it == 1 || it.is_multiple_of(self.eval_every) || it == self.iterations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_are_checked() {
        let base = PipelineConfig::default();
        for bad in [
            PipelineConfig { k: 23, ..base.clone() },
            PipelineConfig { k: 98, ..base.clone() },
            PipelineConfig {
                t_explore: 11,
                ..base.clone()
            },
            PipelineConfig {
                eval_every: 0,
                ..base.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(PipelineError::Config(_))));
        }
    }

    #[test]
    fn cost_units_per_group() {
        let mut c = PipelineConfig::default();
        assert_eq!(c.rollout_cost_units(), 96.0 * 6.0 * 0.25 + 24.0 * 10.0);
        c.mode = Mode::NaiveFull;
        assert_eq!(c.rollout_cost_units(), 960.0);
        c.mode = Mode::DirectFp4;
        assert_eq!(c.rollout_cost_units(), 144.0);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("solrl".parse::<Mode>().is_err());
    }

    #[test]
    fn eval_schedule() {
        let c = PipelineConfig {
            iterations: 25,
            eval_every: 10,
            ..PipelineConfig::default()
        };
        let evals: Vec<u64> = (1..=25).filter(|&i| c.is_eval_iteration(i)).collect();
        assert_eq!(evals, vec![1, 10, 20, 25]);
    }
}
