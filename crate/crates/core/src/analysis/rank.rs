use std::cmp::Ordering;

use super::AnalysisError;

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(AnalysisError::Domain("need at least two observations".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(AnalysisError::Domain("NaN in input".into()));
    }
    Ok(())
}

/// Kendall's tau-b over all pairs. Undefined (an error) when either input is
/// constant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(a, b)?;
    let n = a.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_a, mut ties_b) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i].partial_cmp(&a[j]).unwrap_or(Ordering::Equal);
            let db = b[i].partial_cmp(&b[j]).unwrap_or(Ordering::Equal);
            match (da, db) {
                (Ordering::Equal, Ordering::Equal) => {
                    ties_a += 1;
                    ties_b += 1;
                }
                (Ordering::Equal, _) => ties_a += 1,
                (_, Ordering::Equal) => ties_b += 1,
                (x, y) if x == y => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - ties_a) * (pairs - ties_b)) as f64).sqrt();
    if denom == 0.0 {
        return Err(AnalysisError::Domain("tau-b is undefined for constant input".into()));
    }
    Ok(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the average-rank vectors.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(a, b)?;
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(AnalysisError::Domain("zero rank variance".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Indices of the `k` largest values, ties to the lower index.
fn top_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
    idx.truncate(k);
    idx
}

fn bottom_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]).then(i.cmp(&j)));
    idx.truncate(k);
    idx
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|i| b.contains(i)).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopkRates {
    pub k: usize,
    pub top: f64,
    pub bottom: f64,
    /// Share of proxy-extreme picks that land in the opposite true extreme.
    pub cross_extreme: f64,
}

pub fn topk_match(true_r: &[f64], proxy_r: &[f64], k: usize) -> Result<TopkRates, AnalysisError> {
    check_pair(true_r, proxy_r)?;
    if k == 0 || 2 * k > true_r.len() {
        return Err(AnalysisError::Domain(format!(
            "k = {k} must be in 1..={}",
            true_r.len() / 2
        )));
    }
    let (tt, tb) = (top_indices(true_r, k), bottom_indices(true_r, k));
    let (pt, pb) = (top_indices(proxy_r, k), bottom_indices(proxy_r, k));
    Ok(TopkRates {
        k,
        top: overlap(&pt, &tt) as f64 / k as f64,
        bottom: overlap(&pb, &tb) as f64 / k as f64,
        cross_extreme: (overlap(&pt, &tb) + overlap(&pb, &tt)) as f64 / (2 * k) as f64,
    })
}

/// Within-group rank of each value scaled to [0, 1] (average ranks for ties).
pub fn rank_percentiles(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        return vec![0.5; values.len()];
    }
    let denom = (values.len() - 1) as f64;
    average_ranks(values).into_iter().map(|r| (r - 1.0) / denom).collect()
}

/// Histogram of (true, proxy) rank percentiles; `mass[y * bins + x]` with x
/// the true-rank bin and y the proxy-rank bin. Each non-empty column sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub bins: usize,
    pub mass: Vec<f64>,
    pub column_counts: Vec<usize>,
}

impl DensityMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mass[y * self.bins + x]
    }

    pub fn column_sum(&self, x: usize) -> f64 {
        (0..self.bins).map(|y| self.get(x, y)).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_x,bin_y,mass\n");
        for y in 0..self.bins {
            for x in 0..self.bins {
                s.push_str(&format!("{x},{y},{}\n", self.get(x, y)));
            }
        }
        s
    }
}

fn bin_of(p: f64, bins: usize) -> usize {
    ((p * bins as f64) as usize).min(bins - 1)
}

pub fn rank_density_map(pairs: &[(f64, f64)], bins: usize) -> Result<DensityMap, AnalysisError> {
    if bins < 2 {
        return Err(AnalysisError::Domain(format!("need at least 2 bins, got {bins}")));
    }
    let mut counts = vec![0usize; bins * bins];
    let mut columns = vec![0usize; bins];
    for &(t, p) in pairs {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&p) {
            return Err(AnalysisError::Domain(format!(
                "percentile pair ({t}, {p}) outside [0, 1]"
            )));
        }
        let (x, y) = (bin_of(t, bins), bin_of(p, bins));
        counts[y * bins + x] += 1;
        columns[x] += 1;
    }
    let mass = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let col = columns[i % bins];
            if col == 0 {
                0.0
            } else {
                c as f64 / col as f64
            }
        })
        .collect();
    Ok(DensityMap {
        bins,
        mass,
        column_counts: columns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    /// Mean per-group tau-b over groups where it is defined.
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub per_k: Vec<TopkRates>,
    pub n_groups: usize,
}

impl RankingReport {
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("k,top_match_rate,bottom_match_rate,cross_extreme_rate,kendall_tau,spearman_rho,n_groups\n");
        for r in &self.per_k {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.k, r.top, r.bottom, r.cross_extreme, self.kendall_tau, self.spearman_rho, self.n_groups
            ));
        }
        s
    }
}

/// Average the rank metrics over groups of (true, proxy) rewards.
pub fn ranking_report(groups: &[(Vec<f64>, Vec<f64>)], ks: &[usize]) -> Result<RankingReport, AnalysisError> {
    if groups.is_empty() {
        return Err(AnalysisError::Domain("no groups".into()));
    }
    let mut taus = Vec::new();
    let mut rhos = Vec::new();
    let mut sums = vec![(0.0, 0.0, 0.0); ks.len()];
    for (t, p) in groups {
        // Constant groups carry no ordering information.
        if let Ok(tau) = kendall_tau(t, p) {
            taus.push(tau);
        }
        if let Ok(rho) = spearman_rho(t, p) {
            rhos.push(rho);
        }
        for (acc, &k) in sums.iter_mut().zip(ks) {
            let r = topk_match(t, p, k)?;
            acc.0 += r.top;
            acc.1 += r.bottom;
            acc.2 += r.cross_extreme;
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let g = groups.len() as f64;
    Ok(RankingReport {
        kendall_tau: mean(&taus),
        spearman_rho: mean(&rhos),
        per_k: ks
            .iter()
            .zip(&sums)
            .map(|(&k, s)| TopkRates {
                k,
                top: s.0 / g,
                bottom: s.1 / g,
                cross_extreme: s.2 / g,
            })
            .collect(),
        n_groups: groups.len(),
    })
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn distinct(v: &[f64]) -> bool {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|w| w[0] != w[1])
    }

    proptest! {
        #[test]
        fn rank_statistics_ignore_monotone_maps(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30)
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(distinct(&a) && distinct(&b));
            let fa: Vec<f64> = a.iter().map(|x| x.exp()).collect();
            let fb: Vec<f64> = b.iter().map(|x| x.powi(3) + 2.0 * x).collect();
            prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&fa, &fb).unwrap());
            prop_assert!((spearman_rho(&a, &b).unwrap() - spearman_rho(&fa, &fb).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn tau_and_rho_agree_on_monotone_data(v in prop::collection::vec(-10.0f64..10.0, 3..30), up in any::<bool>()) {
            prop_assume!(distinct(&v));
            let w: Vec<f64> = v.iter().map(|x| if up { 3.0 * x + 1.0 } else { -x.exp() }).collect();
            let (t, r) = (kendall_tau(&v, &w).unwrap(), spearman_rho(&v, &w).unwrap());
            prop_assert_eq!(t.signum(), r.signum());
            prop_assert!(t.abs() == 1.0 && (r.abs() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn topk_ignores_common_affine_maps(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..30),
            a in 0.1f64..5.0,
            b in -3.0f64..3.0,
        ) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let k = t.len() / 4 + 1;
            let ft: Vec<f64> = t.iter().map(|x| a * x + b).collect();
            let fp: Vec<f64> = p.iter().map(|x| a * x + b).collect();
            prop_assume!(distinct(&t) && distinct(&p) && distinct(&ft) && distinct(&fp));
            prop_assert_eq!(topk_match(&t, &p, k).unwrap(), topk_match(&ft, &fp, k).unwrap());
        }
    }
}
