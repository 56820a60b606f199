//! Small statistics helpers: rank correlation, polynomial regression.

use nalgebra::{DMatrix, DVector};

/// Ranks with ties averaged, 1-based.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Coefficient of determination of a least-squares polynomial fit of `y`
/// on `x`. `x` is standardized before building the Vandermonde matrix.
pub fn polyfit_r2(x: &[f64], y: &[f64], degree: usize) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    let vander = DMatrix::from_fn(n, degree + 1, |i, j| ((x[i] - mean) / scale).powi(j as i32));
    let target = DVector::from_column_slice(y);
    let svd = vander.clone().svd(true, true);
    let coef = svd.solve(&target, 1e-12).expect("svd computed with u and v");
    let fitted = vander * coef;
    let my = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        return 1.0;
    }
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_of_monotone_map_is_one() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert!((spearman(&x, &y) - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        assert!((spearman(&x, &z) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn polynomial_data_fits_exactly() {
        let x: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v * v - 1.0 + 0.3 * v.powi(5)).collect();
        assert!((polyfit_r2(&x, &y, 5) - 1.0).abs() < 1e-10);
        assert!(polyfit_r2(&x, &y, 1) < 0.5);
    }
}
