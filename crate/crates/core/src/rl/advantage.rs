use super::RlError;

/// Group standard deviations below this are treated as zero.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// Rewards of one group with their statistics and standardized advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet {
    pub rewards: Vec<f64>,
    pub mu: f64,
    /// Population standard deviation (divisor N).
    pub sigma: f64,
    pub advantages: Vec<f64>,
}

impl AdvantageSet {
    pub fn is_degenerate(&self) -> bool {
        self.sigma < DEGENERATE_SIGMA
    }
}

/// `A_i = (R_i - mean) / std` over the group; all zeros when the group has
/// no spread.
pub fn group_advantages(rewards: &[f64]) -> Result<AdvantageSet, RlError> {
    if rewards.is_empty() {
        return Err(RlError::Empty("rewards"));
    }
    if let Some(&r) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(RlError::NonFinite(r));
    }
    let n = rewards.len() as f64;
    let mu = rewards.iter().sum::<f64>() / n;
    let sigma = (rewards.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / n).sqrt();
    let advantages = if sigma < DEGENERATE_SIGMA {
        vec![0.0; rewards.len()]
    } else {
        rewards.iter().map(|r| (r - mu) / sigma).collect()
    };
    Ok(AdvantageSet {
        rewards: rewards.to_vec(),
        mu,
        sigma,
        advantages,
    })
}
