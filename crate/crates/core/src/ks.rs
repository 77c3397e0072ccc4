//! Kolmogorov-Smirnov statistics used for convergence metrics and
//! sampler/density consistency checks.

/// One-sample KS statistic. `sorted` must be sorted ascending.
pub fn ks_statistic_vs_cdf<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        let lo = (c - i as f64 / n).abs();
        let hi = ((i as f64 + 1.0) / n - c).abs();
        worst = worst.max(lo).max(hi);
    }
    worst
}

/// Two-sample KS statistic on unsorted data.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ks_two_sample_sorted(&xs, &ys)
}

/// Two-sample KS statistic; both slices must be sorted ascending.
pub fn ks_two_sample_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    assert!(n > 0 && m > 0);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    while i < n && j < m {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        let d = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        worst = worst.max(d);
    }
    worst
}

/// Two-sample KS acceptance threshold at confidence level `c_alpha`
/// (1.36 for 95%, 1.63 for 99%).
pub fn ks_two_sample_band(n: usize, m: usize, c_alpha: f64) -> f64 {
    c_alpha * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
