//! Diagnostics for quantized exploration: rank agreement between proxy and
//! true rewards, the trajectory deviation and range bounds, and the rollout
//! cost model.

mod bounds;
mod cost;
mod evt;
mod rank;

pub use bounds::{estimate_lipschitz, gronwall_delta, per_step_errors};
pub use cost::{cost_model, overhead_for_ratio, CostReport, DEFAULT_FP4_FLOPS_RATIO};
pub use evt::{evt_bound_check, evt_expected_range, EvtReport, VIOLATION_SLACK};
pub use rank::{
    average_ranks, kendall_tau, rank_density_map, rank_percentiles, ranking_report, spearman_rho, topk_match,
    DensityMap, RankingReport, TopkRates,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("domain error: {0}")]
    Domain(String),
}
