//! Principal components of degree-distribution snapshots.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_histogram, Graph};

/// Rows are normalized degree histograms, one per snapshot.
#[derive(Debug, Clone)]
pub struct HistogramMatrix {
    rows: DMatrix<f64>,
}

impl HistogramMatrix {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = graphs
            .into_iter()
            .map(|g| degree_histogram(g).normalized())
            .collect();
        HistogramMatrix::from_rows(&rows)
    }

    /// Validates nonnegative rows summing to 1.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if s == 0 || n == 0 {
            return Err(Error::Degenerate("empty histogram matrix".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dataset(format!("row {i} has length {}, expected {n}", r.len())));
            }
            if r.iter().any(|&x| x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Dataset(format!("row {i} is not a probability vector")));
            }
        }
        Ok(HistogramMatrix {
            rows: DMatrix::from_fn(s, n, |i, j| rows[i][j]),
        })
    }

    pub fn s(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcModel {
    pub centered: bool,
    /// Subtracted before projecting; zero when uncentered.
    pub mean: Vec<f64>,
    /// Orthonormal, in order of decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (`σ² / (s - 1)`).
    pub variances: Vec<f64>,
}

/// PCA through the SVD of the (optionally mean-centered) snapshot matrix.
///
/// Signs: each component has nonnegative inner product with the mean row;
/// when that product vanishes, its first nonzero coordinate is positive.
pub fn fit_pca(h: &HistogramMatrix, k: usize, centered: bool) -> Result<PcModel> {
    let (s, n) = (h.s(), h.n());
    if s < 2 {
        return Err(Error::param("snapshots", "need at least two rows"));
    }
    if k == 0 || k > s.min(n) {
        return Err(Error::param("k", format!("need 1 <= k <= {}", s.min(n))));
    }
    let mean_row: DVector<f64> = h.rows.row_mean().transpose();
    let mut x = h.rows.clone();
    if centered {
        for mut row in x.row_iter_mut() {
            row -= mean_row.transpose();
        }
    }
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total <= 1e-300 {
        return Err(Error::Degenerate("zero total variance".into()));
    }
    let svd = x
        .try_svd(false, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = vt.row(idx).iter().copied().collect();
        let dot: f64 = v.iter().zip(mean_row.iter()).map(|(a, b)| a * b).sum();
        let flip = if dot.abs() > 1e-12 {
            dot < 0.0
        } else {
            let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            v.iter().find(|x| x.abs() > 1e-12 * scale).is_some_and(|x| *x < 0.0)
        };
        if flip {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variances.push(svd.singular_values[idx].powi(2) / (s - 1) as f64);
    }
    Ok(PcModel {
        centered,
        mean: if centered { mean_row.iter().copied().collect() } else { vec![0.0; n] },
        components,
        variances,
    })
}

/// Coordinates of `h - mean` along each component.
pub fn project(model: &PcModel, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != model.mean.len() {
        return Err(Error::param(
            "histogram",
            format!("length {} does not match model length {}", h.len(), model.mean.len()),
        ));
    }
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(h).zip(&model.mean).map(|((ci, hi), mi)| ci * (hi - mi)).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::Rng as _;

    fn random_stochastic(s: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..s)
            .map(|_| {
                let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let t: f64 = r.iter().sum();
                r.into_iter().map(|x| x / t).collect()
            })
            .collect()
    }

    #[test]
    fn matches_covariance_eigenvectors() {
        let rows = random_stochastic(5, 4, 3);
        let h = HistogramMatrix::from_rows(&rows).unwrap();
        let model = fit_pca(&h, 3, true).unwrap();
        // oracle: eigenvectors of the sample covariance
        let x = DMatrix::from_fn(5, 4, |i, j| rows[i][j]);
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut r in c.row_iter_mut() {
            r -= &mean;
        }
        let cov = c.transpose() * &c / 4.0;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (k, &idx) in order.iter().take(3).enumerate() {
            let v = eig.eigenvectors.column(idx);
            let dot: f64 = v.iter().zip(&model.components[k]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-9, "component {k}: {dot}");
            assert!((eig.eigenvalues[idx] - model.variances[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn orthonormal_and_ordered() {
        let h = HistogramMatrix::from_rows(&random_stochastic(12, 7, 5)).unwrap();
        let model = fit_pca(&h, 7, true).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let dot: f64 = model.components[i].iter().zip(&model.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(model.variances.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reconstruction_with_all_components() {
        let rows = random_stochastic(6, 5, 9);
        let h = HistogramMatrix::from_rows(&rows).unwrap();
        let model = fit_pca(&h, 5, true).unwrap();
        for r in &rows {
            let p = project(&model, r).unwrap();
            for j in 0..5 {
                let rec: f64 = p.iter().zip(&model.components).map(|(a, c)| a * c[j]).sum();
                assert!((rec - (r[j] - model.mean[j])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_rows_give_their_difference() {
        let rows = vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]];
        let model = fit_pca(&HistogramMatrix::from_rows(&rows).unwrap(), 1, true).unwrap();
        let c = &model.components[0];
        let diff = [0.5f64, 0.0, -0.5];
        let norm = (0.5f64).sqrt();
        let dot: f64 = c.iter().zip(&diff).map(|(a, b)| a * b / norm).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
        assert!(model.variances[0] > 0.0);
    }

    #[test]
    fn rank_one_data_is_fully_explained() {
        let rows = vec![vec![0.2, 0.8], vec![0.4, 0.6], vec![0.7, 0.3]];
        let model = fit_pca(&HistogramMatrix::from_rows(&rows).unwrap(), 2, true).unwrap();
        let total: f64 = model.variances.iter().sum();
        assert!(model.variances[0] / total > 1.0 - 1e-12);
    }

    #[test]
    fn projection_properties() {
        let rows = random_stochastic(8, 6, 1);
        let model = fit_pca(&HistogramMatrix::from_rows(&rows).unwrap(), 3, true).unwrap();
        assert!(project(&model, &model.mean).unwrap().iter().all(|x| x.abs() < 1e-14));
        let shifted: Vec<f64> = model.mean.iter().zip(&model.components[0]).map(|(m, c)| m + 0.3 * c).collect();
        let p = project(&model, &shifted).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
        let a = 0.25;
        let mix: Vec<f64> = rows[0].iter().zip(&rows[1]).map(|(x, y)| a * x + (1.0 - a) * y).collect();
        let (p0, p1, pm) = (
            project(&model, &rows[0]).unwrap(),
            project(&model, &rows[1]).unwrap(),
            project(&model, &mix).unwrap(),
        );
        for i in 0..3 {
            assert!((pm[i] - (a * p0[i] + (1.0 - a) * p1[i])).abs() < 1e-12);
        }
        assert!(project(&model, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        let same = vec![vec![0.5, 0.5]; 3];
        assert!(matches!(
            fit_pca(&HistogramMatrix::from_rows(&same).unwrap(), 1, true),
            Err(Error::Degenerate(_))
        ));
        assert!(HistogramMatrix::from_rows(&[vec![0.5, 0.6]]).is_err());
        let one = HistogramMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(fit_pca(&one, 1, true).is_err());
    }

    #[test]
    fn uncentered_leading_component_follows_the_mean() {
        let rows = random_stochastic(10, 5, 4);
        let model = fit_pca(&HistogramMatrix::from_rows(&rows).unwrap(), 2, false).unwrap();
        assert!(model.mean.iter().all(|&x| x == 0.0));
        assert!(model.components[0].iter().all(|&x| x > 0.0));
    }
}
