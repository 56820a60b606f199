//! Spectral coarse embedding of a graph and the λ-grid distance.
//!
//! For adjacency `B = P D Pᵀ`, a graph is summarized by `l = Pᵀq̂`, the
//! eigenvalues `d` and `r = Pᵀp̂`, from which
//! `S(λ) = Σ_i l_i e^{λ d_i} r_i = q̂ᵀ e^{λB} p̂` is evaluated.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest admissible `|λ| · max|d_i|`; `e^700` is near the top of the f64 range.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// Product `λ · spectral radius` reached at the top of the default grid.
pub const DEFAULT_GRID_REACH: f64 = 5.0;

pub const DEFAULT_GRID_COUNT: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoarse {
    pub l: Vec<f64>,
    /// Adjacency eigenvalues, descending.
    pub d: Vec<f64>,
    pub r: Vec<f64>,
}

impl SpectralCoarse {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.d.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }
}

/// Strictly increasing, finite λ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    lambdas: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::param("lambdas", "grid needs at least one value"));
        }
        if lambdas.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("lambdas", "grid values must be finite"));
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("lambdas", "grid must be strictly increasing"));
        }
        Ok(LambdaGrid { lambdas })
    }

    /// `count` evenly spaced values from `min` to `max` inclusive.
    pub fn linspace(min: f64, max: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::param("lambda_count", "must be at least 1")),
            1 => LambdaGrid::new(vec![max]),
            _ => {
                let step = (max - min) / (count - 1) as f64;
                LambdaGrid::new((0..count).map(|i| min + step * i as f64).collect())
            }
        }
    }

    /// `count` values evenly spaced over `(0, 5/(n-1)]`, so that λ times
    /// the largest possible spectral radius (`n - 1`) stays at most 5.
    pub fn default_for(n: usize, count: usize) -> Result<Self> {
        let max = DEFAULT_GRID_REACH / (n.max(2) - 1) as f64;
        if count == 0 {
            return Err(Error::param("lambda_count", "must be at least 1"));
        }
        LambdaGrid::new((1..=count).map(|i| max * i as f64 / count as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Embedding with uniform `p̂ = q̂ = 1/n`.
pub fn spectral_coarse(g: &Graph) -> Result<SpectralCoarse> {
    let n = g.n();
    let uniform = vec![1.0 / n as f64; n];
    spectral_coarse_with(g, &uniform, &uniform)
}

/// Embedding with caller-chosen start (`p_hat`) and readout (`q_hat`)
/// vectors.
pub fn spectral_coarse_with(g: &Graph, p_hat: &[f64], q_hat: &[f64]) -> Result<SpectralCoarse> {
    let n = g.n();
    if p_hat.len() != n || q_hat.len() != n {
        return Err(Error::param("p_hat/q_hat", format!("length must equal n = {n}")));
    }
    let (values, vectors) = symmetric_eigen_desc(g.adjacency_matrix())?;
    let project = |x: &[f64]| -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (vectors.transpose() * x).iter().copied().collect()
    };
    let l = project(q_hat);
    let r = if p_hat == q_hat { l.clone() } else { project(p_hat) };
    Ok(SpectralCoarse { l, d: values, r })
}

/// Full symmetric eigendecomposition with eigenpairs sorted by eigenvalue,
/// descending. Columns of the returned matrix are the eigenvectors.
pub(crate) fn symmetric_eigen_desc(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `S(λ) = Σ l_i e^{λ d_i} r_i`.
pub fn s_value(c: &SpectralCoarse, lambda: f64) -> Result<f64> {
    let radius = c.spectral_radius();
    if !lambda.is_finite() || lambda.abs() * radius > OVERFLOW_GUARD {
        return Err(Error::Range {
            lambda,
            radius,
            guard: OVERFLOW_GUARD,
        });
    }
    Ok(c
        .l
        .iter()
        .zip(&c.d)
        .zip(&c.r)
        .map(|((l, d), r)| l * (lambda * d).exp() * r)
        .sum())
}

/// `S` evaluated over the grid.
pub fn s_values(c: &SpectralCoarse, grid: &LambdaGrid) -> Result<Vec<f64>> {
    grid.values().iter().map(|&lam| s_value(c, lam)).collect()
}

pub fn spectral_distance(a: &SpectralCoarse, b: &SpectralCoarse, grid: &LambdaGrid) -> Result<f64> {
    let sa = s_values(a, grid)?;
    let sb = s_values(b, grid)?;
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_er;
    use crate::rng::rng_from_seed;
    use rand::seq::SliceRandom;

    /// `q̂ᵀ (Σ_{k≤K} λ^k B^k / k!) p̂` by repeated dense products.
    fn taylor_oracle(g: &Graph, lambda: f64, terms: usize) -> f64 {
        let n = g.n();
        let b = g.adjacency_matrix();
        let mut v = DVector::from_element(n, 1.0 / n as f64);
        let q = v.clone();
        let mut total = q.dot(&v);
        for k in 1..=terms {
            v = &b * v * (lambda / k as f64);
            total += q.dot(&v);
        }
        total
    }

    #[test]
    fn empty_graph_is_flat() {
        let c = spectral_coarse(&Graph::empty(7)).unwrap();
        assert!(c.d.iter().all(|&x| x == 0.0));
        for lam in [0.0, 0.3, 2.0] {
            assert!((s_value(&c, lam).unwrap() - 1.0 / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn complete_graph_closed_form() {
        let c = spectral_coarse(&Graph::complete(2)).unwrap();
        assert!((s_value(&c, 1.0).unwrap() - 1f64.exp() / 2.0).abs() < 1e-12);
        let c = spectral_coarse(&Graph::complete(100)).unwrap();
        let s = s_value(&c, 0.01).unwrap();
        assert!((s - 0.99f64.exp() / 100.0).abs() < 1e-12);
        assert!((s - 0.026912).abs() < 5e-7);
    }

    #[test]
    fn l_equals_r_and_trace_vanishes() {
        let g = generate_er(30, 0.4, 2).unwrap();
        let c = spectral_coarse(&g).unwrap();
        assert_eq!(c.l, c.r);
        assert!(c.d.iter().sum::<f64>().abs() < 1e-9 * 30.0);
        assert!(c.d.windows(2).all(|w| w[0] >= w[1]));
        assert!((s_value(&c, 0.0).unwrap() - 1.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn matches_truncated_series() {
        for (seed, n, p) in [(1u64, 8usize, 0.3), (2, 15, 0.6), (3, 20, 0.9)] {
            let g = generate_er(n, p, seed).unwrap();
            let c = spectral_coarse(&g).unwrap();
            for lam in LambdaGrid::default_for(n, 10).unwrap().values() {
                let want = taylor_oracle(&g, *lam, 60);
                assert!((s_value(&c, *lam).unwrap() - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn overflow_guard_names_lambda() {
        let c = spectral_coarse(&Graph::complete(100)).unwrap();
        match s_value(&c, 8.0) {
            Err(Error::Range { lambda, radius, .. }) => {
                assert_eq!(lambda, 8.0);
                assert!((radius - 99.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let grid = LambdaGrid::new(vec![0.1, 8.0]).unwrap();
        assert!(spectral_distance(&c, &c, &grid).is_err());
    }

    #[test]
    fn permutation_invariance() {
        let grid = LambdaGrid::default_for(40, 100).unwrap();
        let mut rng = rng_from_seed(3);
        for seed in 0..5 {
            let g = generate_er(40, 0.35, seed).unwrap();
            let mut perm: Vec<usize> = (0..40).collect();
            perm.shuffle(&mut rng);
            let a = spectral_coarse(&g).unwrap();
            let b = spectral_coarse(&g.permuted(&perm)).unwrap();
            assert!(spectral_distance(&a, &b, &grid).unwrap() <= 1e-10);
            assert_eq!(spectral_distance(&a, &b, &grid).unwrap(), spectral_distance(&b, &a, &grid).unwrap());
        }
    }

    #[test]
    fn grid_validation() {
        assert!(LambdaGrid::new(vec![]).is_err());
        assert!(LambdaGrid::new(vec![0.1, 0.1]).is_err());
        assert!(LambdaGrid::new(vec![0.1, f64::NAN]).is_err());
        let g = LambdaGrid::default_for(100, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert!(g.values()[0] > 0.0);
        assert!((g.values()[99] - 5.0 / 99.0).abs() < 1e-15);
        let lin = LambdaGrid::linspace(0.0, 1.0, 5).unwrap();
        assert_eq!(lin.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn custom_start_and_readout_vectors() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = [1.0, 0.0, 0.0];
        let q = [0.0, 0.0, 1.0];
        let c = spectral_coarse_with(&g, &p, &q).unwrap();
        // q̂ᵀ B² p̂ / 2 is the first nonzero term: walk 0 -> 1 -> 2.
        let s = s_value(&c, 1e-3).unwrap();
        assert!((s - 1e-6 / 2.0).abs() < 1e-12);
        assert!(spectral_coarse_with(&g, &p[..2], &q).is_err());
    }
}
