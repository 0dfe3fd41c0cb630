use rayon::prelude::*;

use crate::policy::{MlpPolicy, PolicyError};

use super::optimizer::{Optimizer, OptimizerKind};
use super::{AdvantageSet, RlError, RolloutRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub advantage_clip: f64,
    pub beta_kl: f64,
    pub clip_eps: f64,
    pub max_grad_norm: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    /// Updates between refreshes of the frozen reference snapshot.
    pub reference_refresh: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 3e-4,
            advantage_clip: 5.0,
            beta_kl: 1e-4,
            clip_eps: 0.2,
            max_grad_norm: 1.0,
            weight_decay: 1e-4,
            optimizer: OptimizerKind::AdamW,
            reference_refresh: 50,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("advantage_clip", self.advantage_clip),
            ("clip_eps", self.clip_eps),
            ("max_grad_norm", self.max_grad_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RlError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta_kl", self.beta_kl), ("weight_decay", self.weight_decay)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(RlError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.reference_refresh == 0 {
            return Err(RlError::Config("reference_refresh must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mutable training state besides the policy itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub reference: MlpPolicy,
    pub optimizer: Optimizer,
    pub updates: u64,
}

impl TrainerState {
    pub fn new(policy: &MlpPolicy, cfg: &TrainerConfig) -> Self {
        TrainerState {
            reference: policy.clone(),
            optimizer: Optimizer::new(cfg.optimizer, policy.params().len()),
            updates: 0,
        }
    }
}

/// Records of one group with their advantages.
#[derive(Debug, Clone, Copy)]
pub struct TrainGroup<'a> {
    pub records: &'a [RolloutRecord],
    pub advantages: &'a AdvantageSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub iteration: u64,
    pub loss: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub mean_reward: f64,
    /// Mean of the per-group reward standard deviations.
    pub sigma_r: f64,
    pub n_selected: usize,
    pub grad_clipped: bool,
    /// Set when every weight was zero and the parameters were left untouched.
    pub noop: bool,
}

impl StepMetrics {
    pub const CSV_HEADER: &'static str = "iteration,loss,grad_norm,mean_reward,sigma_R,n_selected";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.iteration, self.loss, self.grad_norm, self.mean_reward, self.sigma_r, self.n_selected
        )
    }
}

/// Advantage-weighted flow-matching update.
///
/// Each record is regressed toward with weight `w_i = clip(A_i, ±advantage_clip)`;
/// the loss is `sum_i w_i L_i / sum_i |w_i| + beta_kl |theta - theta_ref|^2`.
/// The interpolation noise for record `i` is `seed_i.derive(iteration)`, so it
/// is independent of the noise that generated the sample. The policy is only
/// written if the whole step succeeds and yields finite parameters.
pub fn awfm_update(
    policy: &mut MlpPolicy,
    state: &mut TrainerState,
    groups: &[TrainGroup<'_>],
    cfg: &TrainerConfig,
    t_batch: &[f64],
    iteration: u64,
) -> Result<StepMetrics, RlError> {
    cfg.validate()?;
    let mut samples: Vec<(&RolloutRecord, f64)> = Vec::new();
    for g in groups {
        if g.records.len() != g.advantages.advantages.len() {
            return Err(RlError::LengthMismatch {
                left: g.records.len(),
                right: g.advantages.advantages.len(),
            });
        }
        for (r, &a) in g.records.iter().zip(&g.advantages.advantages) {
            samples.push((r, a.clamp(-cfg.advantage_clip, cfg.advantage_clip)));
        }
    }
    if samples.is_empty() {
        return Err(RlError::Empty("records"));
    }
    let n = samples.len();
    let mean_reward = samples.iter().map(|s| s.0.reward).sum::<f64>() / n as f64;
    let sigma_r = groups.iter().map(|g| g.advantages.sigma).sum::<f64>() / groups.len() as f64;
    let weight_sum: f64 = samples.iter().map(|s| s.1.abs()).sum();

    let finish = |state: &mut TrainerState, policy: &MlpPolicy| {
        state.updates += 1;
        if state.updates.is_multiple_of(cfg.reference_refresh) {
            state.reference = policy.clone();
        }
    };

    if weight_sum == 0.0 {
        finish(state, policy);
        return Ok(StepMetrics {
            iteration,
            loss: 0.0,
            grad_norm: 0.0,
            mean_reward,
            sigma_r,
            n_selected: n,
            grad_clipped: false,
            noop: true,
        });
    }

    let p = policy.params().len();
    let current: &MlpPolicy = policy;
    let parts: Vec<(f64, Vec<f64>)> = samples
        .par_iter()
        .map(|&(record, w)| {
            let mut grad = vec![0.0; p];
            let z = record.seed.derive(iteration).noise();
            let loss = current.accumulate_fm_grad(record.x0, z, record.context, t_batch, w / weight_sum, &mut grad)?;
            Ok::<_, PolicyError>((w / weight_sum * loss, grad))
        })
        .collect::<Result<_, _>>()?;

    let mut loss = 0.0;
    let mut grad = vec![0.0; p];
    for (l, g) in &parts {
        loss += l;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    if cfg.beta_kl > 0.0 {
        let mut sq = 0.0;
        for ((acc, &th), &r) in grad.iter_mut().zip(current.params()).zip(state.reference.params()) {
            let d = th - r;
            sq += d * d;
            *acc += 2.0 * cfg.beta_kl * d;
        }
        loss += cfg.beta_kl * sq;
    }

    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !grad_norm.is_finite() {
        return Err(RlError::NonFinite(grad_norm));
    }
    let grad_clipped = grad_norm > cfg.max_grad_norm;
    if grad_clipped {
        let s = cfg.max_grad_norm / grad_norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }

    let mut optimizer = state.optimizer.clone();
    let delta = optimizer.delta(current.params(), &grad, cfg.learning_rate, cfg.weight_decay);
    let next: Vec<f64> = current.params().iter().zip(&delta).map(|(a, d)| a + d).collect();
    if let Some(&bad) = next.iter().find(|v| !v.is_finite()) {
        return Err(RlError::NonFinite(bad));
    }
    policy.params_mut().copy_from_slice(&next);
    state.optimizer = optimizer;
    finish(state, policy);

    Ok(StepMetrics {
        iteration,
        loss,
        grad_norm,
        mean_reward,
        sigma_r,
        n_selected: n,
        grad_clipped,
        noop: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{fm_loss_and_grad, Activation, NoiseSeed, PolicyShape, Precision};
    use crate::rl::group_advantages;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_policy(seed: u64) -> MlpPolicy {
        let shape = PolicyShape {
            hidden: vec![16, 16],
            num_contexts: 2,
            context_dim: 4,
            activation: Activation::Gelu,
        };
        let mut p = MlpPolicy::new(&shape, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        // Give the zero-initialized output layer some weight so gradients reach
        // every layer.
        let (w, _) = p.layer_range(p.num_layers() - 1);
        for (i, v) in p.params_mut()[w].iter_mut().enumerate() {
            *v = 0.05 * ((i as f64) * 0.7).sin();
        }
        p
    }

    fn record(i: u64, reward: f64) -> RolloutRecord {
        RolloutRecord::new(
            (i % 2) as usize,
            NoiseSeed(100 + i),
            [1.0 + 0.3 * i as f64, -0.5 + 0.1 * i as f64],
            reward,
            Precision::Full,
            10,
        )
        .unwrap()
    }

    fn sgd(lr: f64, beta_kl: f64) -> TrainerConfig {
        TrainerConfig {
            learning_rate: lr,
            beta_kl,
            optimizer: OptimizerKind::Sgd,
            weight_decay: 0.0,
            max_grad_norm: 1e9,
            ..TrainerConfig::default()
        }
    }

    const T_BATCH: [f64; 3] = [0.2, 0.5, 0.8];

    #[test]
    fn zero_advantages_are_a_noop() {
        let mut p = small_policy(1);
        let before = p.clone();
        let cfg = TrainerConfig::default();
        let mut st = TrainerState::new(&p, &cfg);
        let records = vec![record(0, 1.0), record(1, 1.0)];
        let adv = group_advantages(&[1.0, 1.0]).unwrap();
        let groups = [TrainGroup {
            records: &records,
            advantages: &adv,
        }];
        let m = awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 0).unwrap();
        assert!(m.noop);
        assert_eq!(p, before);
        assert_eq!(st.optimizer.steps(), 0);
    }

    #[test]
    fn single_positive_record_descends_its_loss() {
        let mut p = small_policy(2);
        let before = p.clone();
        let cfg = sgd(1e-3, 0.0);
        let mut st = TrainerState::new(&p, &cfg);
        let records = vec![record(3, 0.0)];
        let adv = AdvantageSet {
            rewards: vec![0.0],
            mu: 0.0,
            sigma: 1.0,
            advantages: vec![1.0],
        };
        let groups = [TrainGroup {
            records: &records,
            advantages: &adv,
        }];
        awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 7).unwrap();
        let r = &records[0];
        let (_, g) = fm_loss_and_grad(&before, r.x0, r.seed.derive(7), r.context, &T_BATCH).unwrap();
        for ((a, b), gi) in p.params().iter().zip(before.params()).zip(&g) {
            let want = -1e-3 * gi;
            assert!((a - b - want).abs() <= 1e-15 + 1e-9 * want.abs());
        }
    }

    fn delta_for(adv: Vec<f64>, kind: OptimizerKind) -> Vec<f64> {
        let mut p = small_policy(3);
        let before = p.clone();
        let cfg = TrainerConfig {
            optimizer: kind,
            ..sgd(1e-3, 0.0)
        };
        let mut st = TrainerState::new(&p, &cfg);
        let records: Vec<_> = (0..4).map(|i| record(i, 0.0)).collect();
        let set = AdvantageSet {
            rewards: vec![0.0; 4],
            mu: 0.0,
            sigma: 1.0,
            advantages: adv,
        };
        let groups = [TrainGroup {
            records: &records,
            advantages: &set,
        }];
        let m = awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 1).unwrap();
        assert!(!m.grad_clipped);
        p.params().iter().zip(before.params()).map(|(a, b)| a - b).collect()
    }

    #[test]
    fn negated_advantages_negate_the_step() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::AdamW] {
            let a = vec![1.2, -0.4, 0.9, -1.7];
            let neg: Vec<f64> = a.iter().map(|x| -x).collect();
            let d1 = delta_for(a, kind);
            let d2 = delta_for(neg, kind);
            for (x, y) in d1.iter().zip(&d2) {
                assert!((x + y).abs() <= 1e-12 * (1.0 + x.abs()), "{kind}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn loss_decreases_on_fixed_positive_batch() {
        let mut p = small_policy(4);
        let cfg = TrainerConfig {
            learning_rate: 3e-3,
            beta_kl: 0.0,
            ..TrainerConfig::default()
        };
        let mut st = TrainerState::new(&p, &cfg);
        let records: Vec<_> = (0..6).map(|i| record(i, i as f64)).collect();
        let set = AdvantageSet {
            rewards: vec![0.0; 6],
            mu: 0.0,
            sigma: 1.0,
            advantages: vec![1.0, 0.5, 2.0, 1.0, 0.25, 1.5],
        };
        let groups = [TrainGroup {
            records: &records,
            advantages: &set,
        }];
        let losses: Vec<f64> = (0..50)
            .map(|_| awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 0).unwrap().loss)
            .collect();
        assert!(losses[49] < 0.5 * losses[0], "{} -> {}", losses[0], losses[49]);
        // Monotone apart from small wiggles in the final 10%.
        for w in losses[..45].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
        }
        let tail_max = losses[45..].iter().cloned().fold(f64::MIN, f64::max);
        assert!(tail_max <= losses[44] * 1.05);
    }

    #[test]
    fn kl_pull_and_reference_refresh() {
        let mut p = small_policy(5);
        let cfg = TrainerConfig {
            reference_refresh: 2,
            ..sgd(1e-2, 1.0)
        };
        let mut st = TrainerState::new(&p, &cfg);
        let mut shifted = p.clone();
        shifted.params_mut()[0] += 1.0;
        st.reference = shifted.clone();
        let records = vec![record(0, 0.0)];
        let set = AdvantageSet {
            rewards: vec![0.0],
            mu: 0.0,
            sigma: 1.0,
            advantages: vec![1.0],
        };
        let groups = [TrainGroup {
            records: &records,
            advantages: &set,
        }];
        let m = awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 0).unwrap();
        assert!(m.loss >= 1.0);
        assert_eq!(st.reference, shifted);
        awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 1).unwrap();
        assert_eq!(st.reference, p);
    }

    #[test]
    fn gradient_norm_is_clipped() {
        let mut p = small_policy(6);
        let before = p.clone();
        let cfg = TrainerConfig {
            max_grad_norm: 1e-6,
            ..sgd(1.0, 0.0)
        };
        let mut st = TrainerState::new(&p, &cfg);
        let records = vec![record(1, 0.0)];
        let set = AdvantageSet {
            rewards: vec![0.0],
            mu: 0.0,
            sigma: 1.0,
            advantages: vec![1.0],
        };
        let groups = [TrainGroup {
            records: &records,
            advantages: &set,
        }];
        let m = awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 0).unwrap();
        assert!(m.grad_clipped && m.grad_norm > 1e-6);
        let step: f64 = p
            .params()
            .iter()
            .zip(before.params())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((step - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn misaligned_groups_are_rejected() {
        let mut p = small_policy(7);
        let cfg = TrainerConfig::default();
        let mut st = TrainerState::new(&p, &cfg);
        let records = vec![record(0, 1.0)];
        let adv = group_advantages(&[1.0, 2.0]).unwrap();
        let groups = [TrainGroup {
            records: &records,
            advantages: &adv,
        }];
        assert!(matches!(
            awfm_update(&mut p, &mut st, &groups, &cfg, &T_BATCH, 0),
            Err(RlError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn metrics_row() {
        let m = StepMetrics {
            iteration: 3,
            loss: 0.5,
            grad_norm: 2.0,
            mean_reward: -1.25,
            sigma_r: 0.75,
            n_selected: 24,
            grad_clipped: true,
            noop: false,
        };
        assert_eq!(m.csv_row(), "3,0.5,2,-1.25,0.75,24");
        assert_eq!(
            StepMetrics::CSV_HEADER.split(',').count(),
            m.csv_row().split(',').count()
        );
    }
}
