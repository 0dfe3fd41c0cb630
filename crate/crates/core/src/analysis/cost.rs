/// Rollout cost in full-precision step units, and speedups with a fixed
/// per-iteration overhead (backward pass, reward scoring) added to both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub naive_units: f64,
    pub ours_units: f64,
    pub rollout_speedup: f64,
    pub fixed_overhead_units: f64,
    pub end_to_end_speedup: f64,
}

impl CostReport {
    pub const CSV_HEADER: &'static str =
        "naive_units,ours_units,rollout_speedup,fixed_overhead_units,end_to_end_speedup";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.naive_units, self.ours_units, self.rollout_speedup, self.fixed_overhead_units, self.end_to_end_speedup
        )
    }
}

pub const DEFAULT_FP4_FLOPS_RATIO: f64 = 0.25;

pub fn cost_model(
    n: usize,
    k: usize,
    t_explore: usize,
    t_full: usize,
    fp4_flops_ratio: f64,
    fixed_overhead: f64,
) -> CostReport {
    let naive = n as f64 * t_full as f64;
    let ours = n as f64 * t_explore as f64 * fp4_flops_ratio + k as f64 * t_full as f64;
    CostReport {
        naive_units: naive,
        ours_units: ours,
        rollout_speedup: naive / ours,
        fixed_overhead_units: fixed_overhead,
        end_to_end_speedup: (naive + fixed_overhead) / (ours + fixed_overhead),
    }
}

/// Overhead that makes the naive iteration `ratio` times its rollout cost.
pub fn overhead_for_ratio(naive_units: f64, ratio: f64) -> f64 {
    naive_units * (ratio - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_setting() {
        let r = cost_model(96, 24, 6, 10, 0.25, 0.0);
        assert_eq!(r.naive_units, 960.0);
        assert_eq!(r.ours_units, 384.0);
        assert_eq!(r.rollout_speedup, 2.5);
        assert_eq!(r.end_to_end_speedup, 2.5);
    }

    #[test]
    fn degenerate_pool_has_no_speedup() {
        assert_eq!(cost_model(24, 24, 0, 10, 0.25, 0.0).rollout_speedup, 1.0);
    }

    #[test]
    fn fitted_overhead_brackets_measured_end_to_end() {
        let f = overhead_for_ratio(960.0, 274.0 / 184.0);
        let r = cost_model(96, 24, 6, 10, 0.25, f);
        assert!(((r.naive_units + f) / r.naive_units - 274.0 / 184.0).abs() < 1e-12);
        assert!((1.4..=1.7).contains(&r.end_to_end_speedup), "{}", r.end_to_end_speedup);
    }

    #[test]
    fn speedup_grows_with_pool_size() {
        let mut last = 0.0;
        for n in (24..=192).step_by(8) {
            let s = cost_model(n, 24, 6, 10, 0.25, 100.0).rollout_speedup;
            assert!(s > last);
            last = s;
        }
    }
}
