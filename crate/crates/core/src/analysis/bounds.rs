use rand::Rng;

use crate::policy::{sample_ode, NoiseSeed, PolicyError, Precision, SamplerSpec, VectorField};

use super::AnalysisError;

/// Worst-case reward gap `L_R * exp(L_v * horizon) * sum_s e_s * dt`.
pub fn gronwall_delta(
    lipschitz_reward: f64,
    lipschitz_field: f64,
    horizon: f64,
    per_step_error: &[f64],
    dt: f64,
) -> Result<f64, AnalysisError> {
    let scalars = [lipschitz_reward, lipschitz_field, horizon, dt];
    if scalars
        .iter()
        .chain(per_step_error)
        .any(|v| !(*v >= 0.0) || !v.is_finite())
    {
        return Err(AnalysisError::Domain(
            "bound arguments must be finite and non-negative".into(),
        ));
    }
    let integral: f64 = per_step_error.iter().map(|e| e * dt).sum();
    Ok(lipschitz_reward * (lipschitz_field * horizon).exp() * integral)
}

/// Velocity discrepancy `|v_q(x, t) - v(x, t)|` at each state of the
/// full-precision trajectory. Multiplied by the step size this is the gap
/// between one quantized and one full-precision Euler step from the same
/// state.
pub fn per_step_errors<F, Q>(
    full: &F,
    quantized: &Q,
    seed: NoiseSeed,
    context: usize,
    steps: usize,
) -> Result<Vec<f64>, PolicyError>
where
    F: VectorField + ?Sized,
    Q: VectorField + ?Sized,
{
    let spec = SamplerSpec::new(steps, Precision::Full)?;
    let traj = sample_ode(full, seed, context, &spec)?;
    let grid = spec.time_grid();
    (0..steps)
        .map(|k| {
            let (x, t) = (traj.states[k], grid[k]);
            let a = full.velocity(x, t, context)?;
            let b = quantized.velocity(x, t, context)?;
            Ok((a[0] - b[0]).hypot(a[1] - b[1]))
        })
        .collect()
}

/// Empirical lower bound on the spatial Lipschitz constant of `field`: the
/// running maximum of `|v(x) - v(x')| / |x - x'|` over random probe pairs in
/// the square `[-probe_radius, probe_radius]^2`, with random times and
/// contexts. Each probe consumes the same number of draws, so a longer run
/// extends a shorter one.
pub fn estimate_lipschitz<F: VectorField + ?Sized>(
    field: &F,
    num_contexts: usize,
    n_probes: usize,
    probe_radius: f64,
    rng: &mut impl Rng,
) -> Result<f64, PolicyError> {
    if num_contexts == 0 || n_probes == 0 {
        return Err(PolicyError::InvalidSpec(
            "need at least one context and one probe".into(),
        ));
    }
    let mut best: f64 = 0.0;
    for _ in 0..n_probes {
        let mut point = || {
            [
                rng.random_range(-probe_radius..=probe_radius),
                rng.random_range(-probe_radius..=probe_radius),
            ]
        };
        let (x, y) = (point(), point());
        let t: f64 = rng.random();
        let c = rng.random_range(0..num_contexts);
        let dist = (x[0] - y[0]).hypot(x[1] - y[1]);
        if dist == 0.0 {
            continue;
        }
        let (vx, vy) = (field.velocity(x, t, c)?, field.velocity(y, t, c)?);
        best = best.max((vx[0] - vy[0]).hypot(vx[1] - vy[1]) / dist);
    }
    Ok(best)
}
