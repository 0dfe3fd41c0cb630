use std::cmp::Ordering;

use crate::policy::NoiseSeed;

use super::RlError;

/// Indices of the `k / 2` highest and `k / 2` lowest rewards.
///
/// The top block comes first, best first; then the bottom block, worst first.
/// Equal rewards are ordered by ascending index, and an index picked for the
/// top block is never picked again for the bottom block.
pub fn select_contrastive_indices(rewards: &[f64], k: usize) -> Result<Vec<usize>, RlError> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(RlError::Config(format!(
            "selection size K = {k} must be positive and even"
        )));
    }
    if k > rewards.len() {
        return Err(RlError::Config(format!(
            "selection size K = {k} exceeds the candidate pool of {}",
            rewards.len()
        )));
    }
    if let Some(&r) = rewards.iter().find(|r| r.is_nan()) {
        return Err(RlError::NonFinite(r));
    }
    let half = k / 2;
    let mut order: Vec<usize> = (0..rewards.len()).collect();
    order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
    let top: Vec<usize> = order[..half].to_vec();

    let mut rest: Vec<usize> = order[half..].to_vec();
    rest.sort_by(|&a, &b| match rewards[a].total_cmp(&rewards[b]) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    let mut out = top;
    out.extend_from_slice(&rest[..half]);
    Ok(out)
}

/// Seeds of the contrastive subset of `(seed, proxy reward)` candidates.
pub fn select_contrastive(candidates: &[(NoiseSeed, f64)], k: usize) -> Result<Vec<NoiseSeed>, RlError> {
    let rewards: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    Ok(select_contrastive_indices(&rewards, k)?
        .into_iter()
        .map(|i| candidates[i].0)
        .collect())
}
