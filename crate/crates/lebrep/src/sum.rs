//! Deterministic reductions.
//!
//! Ensemble statistics are always reduced over a path-indexed `Vec` with
//! pairwise (cascade) summation. The reduction tree depends only on the
//! slice length, never on thread scheduling, so parallel and serial runs
//! agree bitwise while keeping the O(log n) error growth of cascade
//! summation.

/// Pairwise sum of a slice. Deterministic for a given slice content/length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean via pairwise summation.
pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and its Monte Carlo standard error (ddof = 1).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Sample standard deviation (ddof = 1).
pub fn std_dev(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_se(xs);
    se * (xs.len() as f64).sqrt()
}

/// Root mean square of a slice.
pub fn rms(xs: &[f64]) -> f64 {
    let sq: Vec<f64> = xs.iter().map(|&x| x * x).collect();
    mean(&sq).sqrt()
}

/// Column-wise mean and standard error of `rows[path][k]`: returns
/// `(means, ses)` indexed by `k`.
pub fn transpose_mean_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert!(!rows.is_empty());
    let width = rows[0].len();
    let mut means = Vec::with_capacity(width);
    let mut ses = Vec::with_capacity(width);
    let mut col = vec![0.0; rows.len()];
    for k in 0..width {
        for (p, row) in rows.iter().enumerate() {
            col[p] = row[k];
        }
        let (m, se) = mean_and_se(&col);
        means.push(m);
        ses.push(se);
    }
    (means, ses)
}

/// Ordinary least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    sxy / sxx
}
