use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::AnalysisError;

/// Slack on the per-trial inequality for floating-point rounding.
pub const VIOLATION_SLACK: f64 = 1e-12;

/// Asymptotic expected range `2 sigma sqrt(2 ln N)` of N Gaussian draws.
pub fn evt_expected_range(sigma: f64, n: usize) -> f64 {
    2.0 * sigma * (2.0 * (n as f64).ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvtReport {
    pub sigma: f64,
    pub n: usize,
    pub delta: f64,
    pub predicted_range: f64,
    pub lower_bound: f64,
    pub empirical_true_range: f64,
    pub empirical_selected_range: f64,
    pub trials: usize,
    pub violations: usize,
}

impl EvtReport {
    pub const CSV_HEADER: &'static str =
        "sigma,N,delta,predicted_range,lower_bound,empirical_true_range,empirical_selected_range,trials,violations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sigma,
            self.n,
            self.delta,
            self.predicted_range,
            self.lower_bound,
            self.empirical_true_range,
            self.empirical_selected_range,
            self.trials,
            self.violations
        )
    }
}

struct Trial {
    true_range: f64,
    selected_range: f64,
    violated: bool,
}

fn run_trial(sigma: f64, n: usize, delta: f64, root: u64, index: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut best, mut worst) = ((f64::NEG_INFINITY, 0.0), (f64::INFINITY, 0.0));
    for _ in 0..n {
        let r: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
        let eps = delta * (2.0 * rng.random::<f64>() - 1.0);
        let p = r + eps;
        hi = hi.max(r);
        lo = lo.min(r);
        if p > best.0 {
            best = (p, r);
        }
        if p < worst.0 {
            worst = (p, r);
        }
    }
    let true_range = hi - lo;
    let selected_range = best.1 - worst.1;
    Trial {
        true_range,
        selected_range,
        violated: selected_range < true_range - 4.0 * delta - VIOLATION_SLACK,
    }
}

/// Monte Carlo check of selection under bounded proxy noise. Trial `i` uses
/// stream `i` of a ChaCha generator keyed by `root_seed`, so results do not
/// depend on how trials are spread over threads.
pub fn evt_bound_check(
    sigma: f64,
    n: usize,
    delta: f64,
    trials: usize,
    root_seed: u64,
) -> Result<EvtReport, AnalysisError> {
    if !(sigma >= 0.0 && sigma.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
        return Err(AnalysisError::Domain(
            "sigma and delta must be finite and non-negative".into(),
        ));
    }
    if n == 0 || trials == 0 {
        return Err(AnalysisError::Domain("N and trials must be at least 1".into()));
    }
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(sigma, n, delta, root_seed, i))
        .collect();
    let t = trials as f64;
    let predicted_range = evt_expected_range(sigma, n);
    Ok(EvtReport {
        sigma,
        n,
        delta,
        predicted_range,
        lower_bound: (predicted_range - 4.0 * delta).max(0.0),
        empirical_true_range: results.iter().map(|r| r.true_range).sum::<f64>() / t,
        empirical_selected_range: results.iter().map(|r| r.selected_range).sum::<f64>() / t,
        trials,
        violations: results.iter().filter(|r| r.violated).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptote_values() {
        assert_eq!(evt_expected_range(1.0, 1), 0.0);
        assert!((evt_expected_range(1.0, 96) - 6.0428).abs() < 1e-4);
        assert_eq!(evt_expected_range(2.0, 96), 2.0 * evt_expected_range(1.0, 96));
    }

    #[test]
    fn zero_delta_selects_the_true_extremes() {
        let r = evt_bound_check(1.0, 96, 0.0, 500, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.empirical_selected_range, r.empirical_true_range);
    }

    #[test]
    fn inequality_holds_per_trial() {
        for delta in [0.1, 0.25, 1.0, 3.0] {
            let r = evt_bound_check(1.0, 96, delta, 10_000, 7).unwrap();
            assert_eq!(r.violations, 0, "delta {delta}");
            assert!(r.empirical_selected_range >= r.empirical_true_range - 4.0 * delta);
            assert!(r.empirical_selected_range <= r.empirical_true_range);
        }
    }

    #[test]
    fn exact_finite_n_range_sits_below_the_asymptote() {
        // E[range of 96 standard normals] is about 4.986 by quadrature; the
        // asymptotic formula overshoots at this N.
        let r = evt_bound_check(1.0, 96, 0.0, 20_000, 3).unwrap();
        assert!(
            (r.empirical_true_range - 4.986).abs() < 0.03,
            "{}",
            r.empirical_true_range
        );
        assert!(r.empirical_true_range < r.predicted_range);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let a = evt_bound_check(1.0, 24, 0.3, 300, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| evt_bound_check(1.0, 24, 0.3, 300, 11).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(evt_bound_check(-1.0, 5, 0.0, 1, 0).is_err());
        assert!(evt_bound_check(1.0, 0, 0.0, 1, 0).is_err());
        assert!(evt_bound_check(1.0, 5, 0.0, 0, 0).is_err());
    }

    #[test]
    fn csv_row_matches_header() {
        let r = evt_bound_check(1.0, 4, 0.1, 2, 0).unwrap();
        assert_eq!(r.csv_row().split(',').count(), EvtReport::CSV_HEADER.split(',').count());
    }
}
