use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    /// `-|x - mu_c|^2` toward the first mean of each context.
    Quadratic,
    /// Log density of an isotropic Gaussian mixture per context.
    MixtureLogDensity,
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::Quadratic => "quadratic",
            RewardKind::MixtureLogDensity => "mixture",
        })
    }
}

impl FromStr for RewardKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quadratic" => Ok(RewardKind::Quadratic),
            "mixture" => Ok(RewardKind::MixtureLogDensity),
            other => Err(PipelineError::Config(format!("unknown reward kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextTarget {
    pub means: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    pub kind: RewardKind,
    pub targets: Vec<ContextTarget>,
    pub domain_radius: f64,
}

impl RewardSpec {
    /// Targets evenly spaced on a circle of `radius`, one per context. The
    /// mixture variant splits each target into two components placed
    /// `spread` apart along the tangent.
    pub fn ring(kind: RewardKind, num_contexts: usize, radius: f64, domain_radius: f64) -> Self {
        let spread = 0.75;
        let targets = (0..num_contexts)
            .map(|c| {
                let a = 2.0 * PI * c as f64 / num_contexts as f64;
                let mu = [radius * a.cos(), radius * a.sin()];
                match kind {
                    RewardKind::Quadratic => ContextTarget {
                        means: vec![mu],
                        weights: vec![1.0],
                        std: 1.0,
                    },
                    RewardKind::MixtureLogDensity => {
                        let tang = [-a.sin() * spread, a.cos() * spread];
                        ContextTarget {
                            means: vec![[mu[0] + tang[0], mu[1] + tang[1]], [mu[0] - tang[0], mu[1] - tang[1]]],
                            weights: vec![0.5, 0.5],
                            std: 0.5,
                        }
                    }
                }
            })
            .collect();
        RewardSpec {
            kind,
            targets,
            domain_radius,
        }
    }

    pub fn num_contexts(&self) -> usize {
        self.targets.len()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.targets.is_empty() {
            return Err(PipelineError::Config("reward needs at least one context".into()));
        }
        if !(self.domain_radius > 0.0 && self.domain_radius.is_finite()) {
            return Err(PipelineError::Config("domain radius must be positive".into()));
        }
        for (c, t) in self.targets.iter().enumerate() {
            let finite = t.means.iter().flatten().all(|v| v.is_finite());
            if t.means.is_empty() || !finite {
                return Err(PipelineError::Config(format!(
                    "context {c}: means must be non-empty and finite"
                )));
            }
            if t.weights.len() != t.means.len() || t.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(PipelineError::Config(format!(
                    "context {c}: one positive weight per mean"
                )));
            }
            if !(t.std > 0.0 && t.std.is_finite()) {
                return Err(PipelineError::Config(format!("context {c}: std must be positive")));
            }
        }
        Ok(())
    }

    pub fn max_mean_norm(&self) -> f64 {
        self.targets
            .iter()
            .flat_map(|t| &t.means)
            .map(|m| m[0].hypot(m[1]))
            .fold(0.0, f64::max)
    }

    /// Lipschitz constant of the reward over the disc of radius B. For the
    /// quadratic reward this is `2 (B + max |mu|)`; for the mixture it bounds
    /// the score norm by `(B + max |mu|) / min std^2`.
    pub fn lipschitz(&self) -> f64 {
        let reach = self.domain_radius + self.max_mean_norm();
        match self.kind {
            RewardKind::Quadratic => 2.0 * reach,
            RewardKind::MixtureLogDensity => {
                let s = self.targets.iter().map(|t| t.std).fold(f64::INFINITY, f64::min);
                reach / (s * s)
            }
        }
    }

    fn eval(&self, x: [f64; 2], target: &ContextTarget) -> f64 {
        match self.kind {
            RewardKind::Quadratic => {
                let m = target.means[0];
                -((x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2))
            }
            RewardKind::MixtureLogDensity => {
                let total: f64 = target.weights.iter().sum();
                let var = target.std * target.std;
                // log-sum-exp over components
                let logs: Vec<f64> = target
                    .means
                    .iter()
                    .zip(&target.weights)
                    .map(|(m, w)| {
                        let d2 = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
                        (w / total).ln() - (2.0 * PI * var).ln() - d2 / (2.0 * var)
                    })
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
        }
    }
}

pub fn reward(x: [f64; 2], context: usize, spec: &RewardSpec) -> Result<f64, PipelineError> {
    let target = spec.targets.get(context).ok_or(PipelineError::UnknownContext {
        context,
        registered: spec.targets.len(),
    })?;
    Ok(spec.eval(x, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kind: RewardKind, means: Vec<[f64; 2]>, std: f64) -> RewardSpec {
        let n = means.len();
        RewardSpec {
            kind,
            targets: vec![ContextTarget {
                means,
                weights: vec![1.0; n],
                std,
            }],
            domain_radius: 4.0,
        }
    }

    #[test]
    fn quadratic_values() {
        let s = single(RewardKind::Quadratic, vec![[1.0, -2.0]], 1.0);
        assert_eq!(reward([1.0, -2.0], 0, &s).unwrap(), 0.0);
        assert_eq!(reward([1.0, 0.0], 0, &s).unwrap(), -4.0);
        assert!(matches!(
            reward([0.0, 0.0], 1, &s),
            Err(PipelineError::UnknownContext { .. })
        ));
    }

    #[test]
    fn mixture_matches_direct_density() {
        let s = single(RewardKind::MixtureLogDensity, vec![[0.0, 0.0], [2.0, 0.0]], 0.7);
        let x = [0.0, 0.0];
        let var: f64 = 0.49;
        let peak = 1.0 / (2.0 * PI * var);
        let other = peak * (-4.0 / (2.0 * var)).exp();
        let want = (0.5 * peak + 0.5 * other).ln();
        assert!((reward(x, 0, &s).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn mixture_is_stable_far_away() {
        let s = single(RewardKind::MixtureLogDensity, vec![[0.0, 0.0]], 0.1);
        let r = reward([300.0, 0.0], 0, &s).unwrap();
        assert!(r.is_finite());
        assert!((r - (-(2.0 * PI * 0.01f64).ln() - 90000.0 / 0.02)).abs() < 1e-6);
    }

    #[test]
    fn ring_layout() {
        let s = RewardSpec::ring(RewardKind::Quadratic, 8, 2.0, 4.0);
        s.validate().unwrap();
        assert_eq!(s.num_contexts(), 8);
        assert!((s.max_mean_norm() - 2.0).abs() < 1e-12);
        assert!((s.lipschitz() - 12.0).abs() < 1e-12);
        let m = RewardSpec::ring(RewardKind::MixtureLogDensity, 4, 2.0, 4.0);
        m.validate().unwrap();
        assert_eq!(m.targets[0].means.len(), 2);
    }

    #[test]
    fn validation_rejects_bad_targets() {
        let mut s = single(RewardKind::Quadratic, vec![[f64::NAN, 0.0]], 1.0);
        assert!(s.validate().is_err());
        s.targets[0].means[0] = [0.0, 0.0];
        s.targets[0].weights = vec![];
        assert!(s.validate().is_err());
    }
}
