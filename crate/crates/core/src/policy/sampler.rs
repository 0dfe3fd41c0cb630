use super::{NoiseSeed, PolicyError, Precision, VectorField};

/// Euler sampler settings: `steps` uniform steps from t = 1 down to t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerSpec {
    pub steps: usize,
    pub precision: Precision,
}

impl SamplerSpec {
    pub fn new(steps: usize, precision: Precision) -> Result<Self, PolicyError> {
        if steps == 0 {
            return Err(PolicyError::InvalidSpec("sampler needs at least one step".into()));
        }
        Ok(SamplerSpec { steps, precision })
    }

    /// `steps + 1` descending times; endpoints are exactly 1 and 0.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.steps as f64;
        (0..=self.steps).map(|k| (self.steps - k) as f64 / n).collect()
    }
}

/// States visited by one ODE solve; `states[0] == z`, last state is `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub z: [f64; 2],
    pub states: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn x0(&self) -> [f64; 2] {
        *self.states.last().expect("trajectory includes the initial state")
    }
}

/// Integrate `dx/dt = v(x, t, c)` from `x(1) = z(seed)` to t = 0 with Euler steps.
pub fn sample_ode<F: VectorField + ?Sized>(
    field: &F,
    seed: NoiseSeed,
    context: usize,
    spec: &SamplerSpec,
) -> Result<Trajectory, PolicyError> {
    if field.precision() != spec.precision {
        return Err(PolicyError::PrecisionMismatch {
            field: field.precision(),
            spec: spec.precision,
        });
    }
    let z = seed.noise();
    let grid = spec.time_grid();
    let mut states = Vec::with_capacity(grid.len());
    let mut x = z;
    states.push(x);
    for (k, pair) in grid.windows(2).enumerate() {
        let (t, t_next) = (pair[0], pair[1]);
        let v = field.velocity(x, t, context)?;
        let dt = t - t_next;
        x = [x[0] - dt * v[0], x[1] - dt * v[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(PolicyError::Divergence { step: k + 1 });
        }
        states.push(x);
    }
    Ok(Trajectory { z, states })
}
