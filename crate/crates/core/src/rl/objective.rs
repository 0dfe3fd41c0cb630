use super::RlError;

/// PPO-style clipped surrogate averaged over the group, minus `beta * kl`:
/// `mean_i min(r_i A_i, clip(r_i, 1 - eps, 1 + eps) A_i) - beta * kl`.
pub fn grpo_clipped_objective(
    ratios: &[f64],
    advantages: &[f64],
    eps: f64,
    kl: f64,
    beta: f64,
) -> Result<f64, RlError> {
    if ratios.len() != advantages.len() {
        return Err(RlError::LengthMismatch {
            left: ratios.len(),
            right: advantages.len(),
        });
    }
    if ratios.is_empty() {
        return Err(RlError::Empty("ratios"));
    }
    if !(eps > 0.0) {
        return Err(RlError::Config(format!("clip epsilon must be positive, got {eps}")));
    }
    let sum: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| (r * a).min(r.clamp(1.0 - eps, 1.0 + eps) * a))
        .sum();
    Ok(sum / ratios.len() as f64 - beta * kl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ratios_give_mean_advantage() {
        let a = [0.5, -1.5, 2.0, 0.25];
        let got = grpo_clipped_objective(&[1.0; 4], &a, 0.2, 3.0, 0.0).unwrap();
        assert_eq!(got, 1.25 / 4.0);
    }

    #[test]
    fn clipping_examples() {
        assert_eq!(grpo_clipped_objective(&[2.0], &[1.0], 0.2, 0.0, 0.0).unwrap(), 1.2);
        assert_eq!(grpo_clipped_objective(&[0.5], &[-1.0], 0.2, 0.0, 0.0).unwrap(), -0.8);
    }

    #[test]
    fn kl_penalty_subtracts() {
        let got = grpo_clipped_objective(&[1.0], &[1.0], 0.2, 0.5, 0.1).unwrap();
        assert!((got - 0.95).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            grpo_clipped_objective(&[1.0, 1.0], &[1.0], 0.2, 0.0, 0.0),
            Err(RlError::LengthMismatch { .. })
        ));
        assert!(grpo_clipped_objective(&[1.0], &[1.0], 0.0, 0.0, 0.0).is_err());
        assert!(grpo_clipped_objective(&[], &[], 0.2, 0.0, 0.0).is_err());
    }
}
