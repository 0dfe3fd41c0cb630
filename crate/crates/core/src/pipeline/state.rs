use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::policy::{mix64, quantize_policy, MlpPolicy, PolicyShape, QuantizedPolicy};
use crate::rl::{
    awfm_update, group_advantages, select_contrastive_indices, AdvantageSet, RolloutRecord, StepMetrics, TrainGroup,
    TrainerConfig, TrainerState,
};

use super::config::{Mode, PipelineConfig};
use super::reward::RewardSpec;
use super::stages::{draw_seeds, rollout_group, stage2_regenerate, CandidatePool};
use super::PipelineError;

const INIT_TAG: u64 = 0x1217_0000_0000_0001;
const TRAIN_TAG: u64 = 0x7a17_0000_0000_0002;

/// What happened to one context in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTrace {
    pub context: usize,
    /// Exploration rollouts (or all full-precision rollouts in the naive mode).
    pub candidates: CandidatePool,
    /// Records handed to the update, in selection order.
    pub selected: Vec<RolloutRecord>,
    pub advantages: Option<AdvantageSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    /// 1-based index of the completed iteration.
    pub iteration: u64,
    pub mode: Mode,
    pub mean_true_reward_selected: f64,
    pub sigma_r: f64,
    pub rollout_cost_units: f64,
    pub diverged: usize,
    pub step: StepMetrics,
    pub groups: Vec<GroupTrace>,
}

impl IterationMetrics {
    pub fn training_records(&self) -> impl Iterator<Item = &RolloutRecord> {
        self.groups.iter().flat_map(|g| &g.selected)
    }
}

/// Everything the loop mutates. `train_iteration` either commits a whole
/// iteration or leaves the state untouched.
#[derive(Debug, Clone)]
pub struct PipelineState {
    pub cfg: PipelineConfig,
    pub trainer_cfg: TrainerConfig,
    pub reward: RewardSpec,
    pub policy: MlpPolicy,
    pub quantized: QuantizedPolicy,
    pub trainer: TrainerState,
    pub iteration: u64,
    rng: ChaCha8Rng,
    train_rng: ChaCha8Rng,
}

impl PipelineState {
    pub fn new(
        cfg: PipelineConfig,
        trainer_cfg: TrainerConfig,
        reward: RewardSpec,
        shape: &PolicyShape,
    ) -> Result<Self, PipelineError> {
        let mut init_rng = ChaCha8Rng::seed_from_u64(mix64(cfg.rng_seed ^ INIT_TAG));
        let policy = MlpPolicy::new(shape, &mut init_rng)?;
        Self::with_policy(cfg, trainer_cfg, reward, policy)
    }

    pub fn with_policy(
        cfg: PipelineConfig,
        trainer_cfg: TrainerConfig,
        reward: RewardSpec,
        policy: MlpPolicy,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        trainer_cfg.validate()?;
        reward.validate()?;
        if policy.num_contexts() != reward.num_contexts() {
            return Err(PipelineError::Config(format!(
                "policy has {} contexts but the reward defines {}",
                policy.num_contexts(),
                reward.num_contexts()
            )));
        }
        let quantized = quantize_policy(&policy, cfg.format, cfg.quantize_activations)?;
        let trainer = TrainerState::new(&policy, &trainer_cfg);
        Ok(PipelineState {
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            train_rng: ChaCha8Rng::seed_from_u64(mix64(cfg.rng_seed ^ TRAIN_TAG)),
            cfg,
            trainer_cfg,
            reward,
            policy,
            quantized,
            trainer,
            iteration: 0,
        })
    }

    /// Contexts visited by iteration `it` (0-based), cycled round-robin.
    pub fn contexts_for(&self, it: u64) -> Vec<usize> {
        let n = self.reward.num_contexts() as u64;
        let per = self.cfg.contexts_per_iter as u64;
        (0..per).map(|j| ((it * per + j) % n) as usize).collect()
    }

    pub fn train_iteration(&mut self) -> Result<IterationMetrics, PipelineError> {
        let cfg = &self.cfg;
        let mut rng = self.rng.clone();
        let mut train_rng = self.train_rng.clone();
        let contexts = self.contexts_for(self.iteration);
        let seeds = draw_seeds(&mut rng, &contexts, cfg.n);

        let mut groups = Vec::with_capacity(contexts.len());
        for (&c, seeds) in contexts.iter().zip(&seeds) {
            let candidates = match cfg.mode {
                Mode::TwoStage | Mode::DirectFp4 => {
                    rollout_group(&self.quantized, c, seeds, cfg.t_explore, &self.reward)?
                }
                Mode::NaiveFull => rollout_group(&self.policy, c, seeds, cfg.t_full, &self.reward)?,
            };
            let usable = candidates.records.len() / 2 * 2;
            if usable < 2 {
                groups.push(GroupTrace {
                    context: c,
                    candidates,
                    selected: Vec::new(),
                    advantages: None,
                });
                continue;
            }
            let picks = select_contrastive_indices(&candidates.rewards(), cfg.k.min(usable))?;
            let selected = match cfg.mode {
                Mode::TwoStage => {
                    let chosen: Vec<_> = picks.iter().map(|&i| candidates.records[i].seed).collect();
                    stage2_regenerate(&self.policy, c, &chosen, cfg, &self.reward)?.records
                }
                Mode::NaiveFull | Mode::DirectFp4 => picks.iter().map(|&i| candidates.records[i].clone()).collect(),
            };
            let advantages = if selected.is_empty() {
                None
            } else {
                Some(group_advantages(
                    &selected.iter().map(|r| r.reward).collect::<Vec<_>>(),
                )?)
            };
            groups.push(GroupTrace {
                context: c,
                candidates,
                selected,
                advantages,
            });
        }

        let t_batch: Vec<f64> = (0..cfg.t_batch_size)
            .map(|_| sample_unit_open(&mut train_rng))
            .collect();
        let train_groups: Vec<TrainGroup<'_>> = groups
            .iter()
            .filter_map(|g| {
                g.advantages.as_ref().map(|a| TrainGroup {
                    records: &g.selected,
                    advantages: a,
                })
            })
            .collect();

        let mut policy = self.policy.clone();
        let mut trainer = self.trainer.clone();
        let step = if train_groups.is_empty() {
            trainer.updates += 1;
            StepMetrics {
                iteration: self.iteration + 1,
                loss: 0.0,
                grad_norm: 0.0,
                mean_reward: f64::NAN,
                sigma_r: f64::NAN,
                n_selected: 0,
                grad_clipped: false,
                noop: true,
            }
        } else {
            let mut s = awfm_update(
                &mut policy,
                &mut trainer,
                &train_groups,
                &self.trainer_cfg,
                &t_batch,
                self.iteration,
            )?;
            s.iteration = self.iteration + 1;
            s
        };
        let quantized = quantize_policy(&policy, cfg.format, cfg.quantize_activations)?;

        let metrics = IterationMetrics {
            iteration: self.iteration + 1,
            mode: cfg.mode,
            mean_true_reward_selected: step.mean_reward,
            sigma_r: step.sigma_r,
            rollout_cost_units: cfg.rollout_cost_units(),
            diverged: groups.iter().map(|g| g.candidates.diverged.len()).sum(),
            step,
            groups,
        };

        self.policy = policy;
        self.quantized = quantized;
        self.trainer = trainer;
        self.rng = rng;
        self.train_rng = train_rng;
        self.iteration += 1;
        Ok(metrics)
    }
}

/// Uniform draw from the open interval (0, 1).
fn sample_unit_open(rng: &mut impl Rng) -> f64 {
    loop {
        let t: f64 = rng.random();
        if t > 0.0 {
            return t;
        }
    }
}
