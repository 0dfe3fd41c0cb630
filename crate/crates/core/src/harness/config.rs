use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::fp4::Fp4Format;
use crate::pipeline::{Mode, PipelineConfig, RewardKind, RewardSpec};
use crate::policy::{Activation, PolicyShape};
use crate::rl::{OptimizerKind, TrainerConfig};

use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every setting of a run. Parsed from `key = value` lines; unknown or
/// repeated keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub trainer: TrainerConfig,
    pub reward_kind: RewardKind,
    pub num_contexts: usize,
    pub target_radius: f64,
    pub domain_radius: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub context_dim: usize,
    pub output_dir: PathBuf,
    /// 0 lets the thread pool pick.
    pub worker_count: usize,
    pub plot: bool,
    pub record_wallclock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let shape = PolicyShape::default();
        RunConfig {
            pipeline: PipelineConfig::default(),
            trainer: TrainerConfig::default(),
            reward_kind: RewardKind::Quadratic,
            num_contexts: shape.num_contexts,
            target_radius: 2.0,
            domain_radius: 4.0,
            hidden: shape.hidden,
            activation: shape.activation,
            context_dim: shape.context_dim,
            output_dir: PathBuf::from("runs/default"),
            worker_count: 0,
            plot: false,
            record_wallclock: false,
        }
    }
}

/// Keys in snapshot order.
pub const KEYS: &[&str] = &[
    "mode",
    "n",
    "k",
    "t_explore",
    "t_full",
    "format",
    "quantize_activations",
    "contexts_per_iter",
    "iterations",
    "eval_every",
    "eval_seeds",
    "t_batch_size",
    "rng_seed",
    "learning_rate",
    "advantage_clip",
    "beta_kl",
    "clip_eps",
    "max_grad_norm",
    "weight_decay",
    "optimizer",
    "reference_refresh",
    "reward",
    "num_contexts",
    "target_radius",
    "domain_radius",
    "hidden",
    "activation",
    "context_dim",
    "output_dir",
    "worker_count",
    "plot",
    "record_wallclock",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a valid value for {key}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("{key} must be `true` or `false`, got `{v}`")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        let mut schema = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                line: line_no,
                key: String::new(),
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(HarnessError::config_at(line_no, key, "key given more than once"));
            }
            if key == "schema" {
                let v: u32 = parse_num(key, value).map_err(|m| HarnessError::config_at(line_no, key, &m))?;
                if v != SCHEMA_VERSION {
                    return Err(HarnessError::config_at(
                        line_no,
                        key,
                        &format!("unsupported schema {v}; this build reads schema {SCHEMA_VERSION}"),
                    ));
                }
                schema = Some(v);
                continue;
            }
            cfg.set(key, value)
                .map_err(|m| HarnessError::config_at(line_no, key, &m))?;
        }
        if schema.is_none() {
            return Err(HarnessError::config_at(
                0,
                "schema",
                &format!("missing `schema = {SCHEMA_VERSION}`"),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assign one field from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.pipeline;
        let t = &mut self.trainer;
        match key {
            "mode" => p.mode = v.parse::<Mode>().map_err(|e| e.to_string())?,
            "n" => p.n = parse_num(key, v)?,
            "k" => p.k = parse_num(key, v)?,
            "t_explore" => p.t_explore = parse_num(key, v)?,
            "t_full" => p.t_full = parse_num(key, v)?,
            "format" => p.format = v.parse::<Fp4Format>().map_err(|e| e.to_string())?,
            "quantize_activations" => p.quantize_activations = parse_bool(key, v)?,
            "contexts_per_iter" => p.contexts_per_iter = parse_num(key, v)?,
            "iterations" => p.iterations = parse_num(key, v)?,
            "eval_every" => p.eval_every = parse_num(key, v)?,
            "eval_seeds" => p.eval_seeds = parse_num(key, v)?,
            "t_batch_size" => p.t_batch_size = parse_num(key, v)?,
            "rng_seed" => p.rng_seed = parse_num(key, v)?,
            "learning_rate" => t.learning_rate = parse_num(key, v)?,
            "advantage_clip" => t.advantage_clip = parse_num(key, v)?,
            "beta_kl" => t.beta_kl = parse_num(key, v)?,
            "clip_eps" => t.clip_eps = parse_num(key, v)?,
            "max_grad_norm" => t.max_grad_norm = parse_num(key, v)?,
            "weight_decay" => t.weight_decay = parse_num(key, v)?,
            "optimizer" => t.optimizer = v.parse::<OptimizerKind>().map_err(|e| e.to_string())?,
            "reference_refresh" => t.reference_refresh = parse_num(key, v)?,
            "reward" => self.reward_kind = v.parse::<RewardKind>().map_err(|e| e.to_string())?,
            "num_contexts" => self.num_contexts = parse_num(key, v)?,
            "target_radius" => self.target_radius = parse_num(key, v)?,
            "domain_radius" => self.domain_radius = parse_num(key, v)?,
            "hidden" => {
                self.hidden = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|w| parse_num(key, w.trim()))
                        .collect::<Result<_, _>>()?
                }
            }
            "activation" => self.activation = v.parse::<Activation>().map_err(|e| e.to_string())?,
            "context_dim" => self.context_dim = parse_num(key, v)?,
            "output_dir" => {
                if v.is_empty() {
                    return Err("output_dir must not be empty".into());
                }
                self.output_dir = PathBuf::from(v)
            }
            "worker_count" => self.worker_count = parse_num(key, v)?,
            "plot" => self.plot = parse_bool(key, v)?,
            "record_wallclock" => self.record_wallclock = parse_bool(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.pipeline;
        let t = &self.trainer;
        Some(match key {
            "mode" => p.mode.to_string(),
            "n" => p.n.to_string(),
            "k" => p.k.to_string(),
            "t_explore" => p.t_explore.to_string(),
            "t_full" => p.t_full.to_string(),
            "format" => p.format.to_string(),
            "quantize_activations" => p.quantize_activations.to_string(),
            "contexts_per_iter" => p.contexts_per_iter.to_string(),
            "iterations" => p.iterations.to_string(),
            "eval_every" => p.eval_every.to_string(),
            "eval_seeds" => p.eval_seeds.to_string(),
            "t_batch_size" => p.t_batch_size.to_string(),
            "rng_seed" => p.rng_seed.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "advantage_clip" => t.advantage_clip.to_string(),
            "beta_kl" => t.beta_kl.to_string(),
            "clip_eps" => t.clip_eps.to_string(),
            "max_grad_norm" => t.max_grad_norm.to_string(),
            "weight_decay" => t.weight_decay.to_string(),
            "optimizer" => t.optimizer.to_string(),
            "reference_refresh" => t.reference_refresh.to_string(),
            "reward" => self.reward_kind.to_string(),
            "num_contexts" => self.num_contexts.to_string(),
            "target_radius" => self.target_radius.to_string(),
            "domain_radius" => self.domain_radius.to_string(),
            "hidden" => self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            "activation" => self.activation.to_string(),
            "context_dim" => self.context_dim.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "worker_count" => self.worker_count.to_string(),
            "plot" => self.plot.to_string(),
            "record_wallclock" => self.record_wallclock.to_string(),
            _ => return None,
        })
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = format!("schema = {SCHEMA_VERSION}\n");
        for key in KEYS {
            s.push_str(&format!(
                "{key} = {}\n",
                self.get(key).expect("every listed key has a getter")
            ));
        }
        s
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let field = |key: &str, message: String| HarnessError::Config {
            line: 0,
            key: key.to_string(),
            message,
        };
        self.pipeline.validate().map_err(|e| field("pipeline", e.to_string()))?;
        self.trainer.validate().map_err(|e| field("trainer", e.to_string()))?;
        if self.num_contexts == 0 {
            return Err(field("num_contexts", "must be at least 1".into()));
        }
        if self.context_dim == 0 {
            return Err(field("context_dim", "must be at least 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(field("hidden", "layer widths must be positive".into()));
        }
        if !(self.target_radius >= 0.0 && self.target_radius.is_finite()) {
            return Err(field("target_radius", "must be finite and non-negative".into()));
        }
        self.reward_spec()
            .validate()
            .map_err(|e| field("domain_radius", e.to_string()))?;
        Ok(())
    }

    pub fn reward_spec(&self) -> RewardSpec {
        RewardSpec::ring(
            self.reward_kind,
            self.num_contexts,
            self.target_radius,
            self.domain_radius,
        )
    }

    pub fn policy_shape(&self) -> PolicyShape {
        PolicyShape {
            hidden: self.hidden.clone(),
            num_contexts: self.num_contexts,
            context_dim: self.context_dim,
            activation: self.activation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("schema = 1\n").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = RunConfig::default();
        c.set("mode", "direct_fp4").unwrap();
        c.set("hidden", "32, 16").unwrap();
        c.set("learning_rate", "0.0025").unwrap();
        c.set("format", "mxfp4").unwrap();
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hidden, vec![32, 16]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("# toy\nschema = 1\n\nn = 48  # pool\n").unwrap();
        assert_eq!(c.pipeline.n, 48);
    }

    fn err(text: &str) -> (usize, String, String) {
        match RunConfig::parse(text) {
            Err(HarnessError::Config { line, key, message }) => (line, key, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn strict_rejections() {
        assert_eq!(err("schema = 1\nbogus = 3\n").1, "bogus");
        assert_eq!(err("schema = 1\nn = 4\nn = 5\n").0, 3);
        assert_eq!(err("schema = 2\n").1, "schema");
        assert_eq!(err("n = 4\n").1, "schema");
        assert_eq!(err("schema = 1\nk = many\n").1, "k");
        assert_eq!(err("schema = 1\nplot = yes\n").1, "plot");
        assert_eq!(err("schema = 1\njust words\n").0, 2);
        assert_eq!(err("schema = 1\nmode = solrl\n").1, "mode");
    }

    #[test]
    fn cross_field_invariants() {
        assert_eq!(err("schema = 1\nk = 25\n").1, "pipeline");
        assert_eq!(err("schema = 1\nt_explore = 12\n").1, "pipeline");
        assert_eq!(err("schema = 1\nlearning_rate = 0\n").1, "trainer");
        assert_eq!(err("schema = 1\nhidden = 8,0\n").1, "hidden");
    }

    #[test]
    fn every_key_is_settable() {
        let d = RunConfig::default();
        for key in KEYS {
            let mut c = d.clone();
            c.set(key, &d.get(key).unwrap()).unwrap();
            assert_eq!(c, d, "{key}");
        }
        assert!(d.get("nope").is_none());
    }
}
