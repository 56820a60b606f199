//! Diffusion maps over a graph dataset, with Nyström out-of-sample extension.
//!
//! Pipeline: pairwise feature distances, Gaussian kernel
//! `W_ij = exp(-d_ij² / ε²)`, row normalization `A = D⁻¹W`, and the leading
//! right eigenvectors of `A`. Eigenpairs come from the symmetric conjugate
//! `D^{-1/2} W D^{-1/2}`, so the spectrum is real; eigenvectors are mapped
//! back by `D^{-1/2}`, scaled to unit Euclidean norm and oriented so their
//! first nonzero entry is positive.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{common_n, GraphRecord};
use crate::error::{Error, Result};
use crate::metric::{feature_distance, Metric};
use crate::spectral::symmetric_eigen_desc;
use crate::stats::polyfit_r2;

/// Eigenvalues with magnitude below this cannot be used for Nyström.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub metric: Metric,
    pub values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    /// Fills the strict upper triangle from feature distances and mirrors it.
    pub fn from_features(ids: Vec<String>, features: &[Vec<f64>], metric: Metric) -> Self {
        let m = features.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..m)
                    .map(|j| feature_distance(&features[i], &features[j]))
                    .collect()
            })
            .collect();
        let mut values = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for (off, &d) in row.iter().enumerate() {
                let j = i + 1 + off;
                values[(i, j)] = d;
                values[(j, i)] = d;
            }
        }
        DistanceMatrix { ids, metric, values }
    }

    /// Off-diagonal distances (strict upper triangle), row-major.
    pub fn upper(&self) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
            .map(|(i, j)| self.values[(i, j)])
            .collect()
    }
}

/// Metric features of every graph, in parallel. All graphs must share `n`.
pub fn dataset_features(records: &[GraphRecord], metric: &Metric) -> Result<Vec<Vec<f64>>> {
    let graphs: Vec<_> = records.iter().map(|r| &r.graph).collect();
    common_n(&graphs)?;
    records.par_iter().map(|r| metric.features(&r.graph)).collect()
}

pub fn pairwise_distances(records: &[GraphRecord], metric: &Metric) -> Result<DistanceMatrix> {
    let features = dataset_features(records, metric)?;
    let ids = records.iter().map(|r| r.id.clone()).collect();
    Ok(DistanceMatrix::from_features(ids, &features, metric.clone()))
}

/// Median off-diagonal distance, the default kernel scale.
pub fn median_epsilon(d: &DistanceMatrix) -> Result<f64> {
    let mut upper = d.upper();
    if upper.is_empty() {
        return Err(Error::Degenerate("need at least two graphs to pick a kernel scale".into()));
    }
    upper.sort_by(f64::total_cmp);
    let k = upper.len();
    let med = if k % 2 == 1 {
        upper[k / 2]
    } else {
        0.5 * (upper[k / 2 - 1] + upper[k / 2])
    };
    if med <= 0.0 {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    Ok(med)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::param("epsilon", format!("{epsilon} must be positive and finite")))
    }
}

/// `W_ij = exp(-d_ij² / ε²)`, unit diagonal.
pub fn gaussian_kernel(d: &DistanceMatrix, epsilon: f64) -> Result<DMatrix<f64>> {
    check_epsilon(epsilon)?;
    let eps2 = epsilon * epsilon;
    let m = d.m();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            (-d.values[(i, j)].powi(2) / eps2).exp()
        }
    }))
}

#[derive(Debug, Clone)]
pub struct MarkovNormalization {
    pub w: DMatrix<f64>,
    pub row_sums: Vec<f64>,
    pub a: DMatrix<f64>,
    /// max_i |Σ_j A_ij - 1|
    pub row_sum_error: f64,
}

pub fn markov_normalize(w: DMatrix<f64>) -> MarkovNormalization {
    let row_sums: Vec<f64> = w.row_iter().map(|r| r.sum()).collect();
    let mut a = w.clone();
    for (i, mut row) in a.row_iter_mut().enumerate() {
        row /= row_sums[i];
    }
    let row_sum_error = a
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    MarkovNormalization {
        w,
        row_sums,
        a,
        row_sum_error,
    }
}

/// Leading `k` eigenpairs of the Markov matrix, eigenvalues descending.
/// Column `j` of the returned matrix is `φ_{j+1}`.
pub fn dmap_eigs(markov: &MarkovNormalization, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = markov.w.nrows();
    if k == 0 || k > m {
        return Err(Error::param("k", format!("need 1 <= k <= m = {m}, got {k}")));
    }
    let inv_sqrt: Vec<f64> = markov.row_sums.iter().map(|s| 1.0 / s.sqrt()).collect();
    let mut sym = DMatrix::from_fn(m, m, |i, j| inv_sqrt[i] * markov.w[(i, j)] * inv_sqrt[j]);
    // exact symmetry for the symmetric solver
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (sym[(i, j)] + sym[(j, i)]);
            sym[(i, j)] = avg;
            sym[(j, i)] = avg;
        }
    }
    let (values, vectors) = symmetric_eigen_desc(sym)?;
    let mut phi = DMatrix::zeros(m, k);
    for c in 0..k {
        let mut col: DVector<f64> = DVector::from_fn(m, |i, _| inv_sqrt[i] * vectors[(i, c)]);
        let norm = col.norm();
        col /= norm;
        let scale = col.amax();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        phi.set_column(c, &col);
    }
    Ok((values[..k].to_vec(), phi))
}

/// A fitted diffusion map, self-contained for Nyström use: it keeps the
/// reference ids and metric features alongside the eigenpairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMapModel {
    pub metric: Metric,
    pub epsilon: f64,
    pub epsilon_rule: EpsilonRule,
    pub ids: Vec<String>,
    /// `λ_1 ≥ λ_2 ≥ … ≥ λ_K`.
    pub eigenvalues: Vec<f64>,
    /// Row `i` holds `(φ_1(i), …, φ_K(i))`.
    pub coords: Vec<Vec<f64>>,
    /// Kernel row sums `D_ii`.
    pub row_sums: Vec<f64>,
    /// Metric feature vector of each reference graph.
    pub features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonRule {
    Median,
    Fixed,
}

impl DiffusionMapModel {
    pub fn m(&self) -> usize {
        self.ids.len()
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `φ_component(i)`; components are numbered from 1 (`φ_1` trivial).
    pub fn coord(&self, i: usize, component: usize) -> f64 {
        self.coords[i][component - 1]
    }

    pub fn column(&self, component: usize) -> Vec<f64> {
        self.coords.iter().map(|row| row[component - 1]).collect()
    }

    pub fn eigenvalue(&self, component: usize) -> f64 {
        self.eigenvalues[component - 1]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::from_features(self.ids.clone(), &self.features, self.metric.clone())
    }

    /// Distances from a feature vector to every reference graph.
    pub fn distances_to(&self, features: &[f64]) -> Vec<f64> {
        self.features.iter().map(|f| feature_distance(f, features)).collect()
    }
}

/// Fits a diffusion map. Inputs are reordered by id first, so the result
/// does not depend on the order of the dataset.
pub fn fit_dmap(
    ids: Vec<String>,
    features: Vec<Vec<f64>>,
    metric: Metric,
    epsilon: Option<f64>,
    k: usize,
) -> Result<DiffusionMapModel> {
    if ids.len() != features.len() {
        return Err(Error::Dataset("ids and features differ in length".into()));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    if let Some(w) = order.windows(2).find(|w| ids[w[0]] == ids[w[1]]) {
        return Err(Error::Dataset(format!("duplicate id {:?}", ids[w[0]])));
    }
    let ids: Vec<String> = order.iter().map(|&i| ids[i].clone()).collect();
    let features: Vec<Vec<f64>> = order.iter().map(|&i| features[i].clone()).collect();

    let dist = DistanceMatrix::from_features(ids.clone(), &features, metric.clone());
    let (epsilon, epsilon_rule) = match epsilon {
        Some(e) => (e, EpsilonRule::Fixed),
        None => (median_epsilon(&dist)?, EpsilonRule::Median),
    };
    let markov = markov_normalize(gaussian_kernel(&dist, epsilon)?);
    let (eigenvalues, phi) = dmap_eigs(&markov, k)?;
    let coords = phi.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(DiffusionMapModel {
        metric,
        epsilon,
        epsilon_rule,
        ids,
        eigenvalues,
        coords,
        row_sums: markov.row_sums,
        features,
    })
}

/// Fits a diffusion map to a graph dataset.
pub fn fit_dataset(
    records: &[GraphRecord],
    metric: &Metric,
    epsilon: Option<f64>,
    k: usize,
) -> Result<DiffusionMapModel> {
    let features = dataset_features(records, metric)?;
    let ids = records.iter().map(|r| r.id.clone()).collect();
    fit_dmap(ids, features, metric.clone(), epsilon, k)
}

/// Nyström coordinates of a new point from its distances to the reference
/// graphs: `φ_new(j) = (1/λ_j) Σ_i K_i φ_j(i)` with `K = W_new / Σ W_new`.
/// `components` are 1-based eigenvector numbers.
pub fn nystrom_extend(model: &DiffusionMapModel, d_new: &[f64], components: &[usize]) -> Result<Vec<f64>> {
    if d_new.len() != model.m() {
        return Err(Error::param(
            "d_new",
            format!("expected {} distances, got {}", model.m(), d_new.len()),
        ));
    }
    for &c in components {
        if c == 0 || c > model.k() {
            return Err(Error::param("components", format!("no eigenvector {c}")));
        }
        let lam = model.eigenvalue(c);
        if lam.abs() < DEGENERATE_EIGENVALUE {
            return Err(Error::DegenerateExtension { index: c, value: lam });
        }
    }
    let eps2 = model.epsilon * model.epsilon;
    let w: Vec<f64> = d_new.iter().map(|d| (-(d * d) / eps2).exp()).collect();
    let total: f64 = w.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(
            "query is beyond kernel range of every reference point".into(),
        ));
    }
    Ok(components
        .iter()
        .map(|&c| {
            let acc: f64 = w
                .iter()
                .zip(&model.coords)
                .map(|(wi, row)| wi * row[c - 1])
                .sum();
            acc / total / model.eigenvalue(c)
        })
        .collect())
}

/// Nyström coordinates of a new metric feature vector.
pub fn nystrom_features(model: &DiffusionMapModel, features: &[f64], components: &[usize]) -> Result<Vec<f64>> {
    nystrom_extend(model, &model.distances_to(features), components)
}

/// Contract checks of a fitted model, recomputed from its stored features.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DmapDiagnostics {
    pub row_sum_error: f64,
    pub lambda1_error: f64,
    pub max_abs_eigenvalue: f64,
    /// (max φ_1 - min φ_1) / mean |φ_1|
    pub phi1_spread: f64,
    /// max_j ‖Aφ_j − λ_j φ_j‖_∞
    pub eigen_residual: f64,
    /// max over reference points and non-degenerate components of the
    /// Nyström reproduction error.
    pub nystrom_error: f64,
    /// Largest symmetry error of the distance matrix.
    pub distance_asymmetry: f64,
}

pub fn diagnostics(model: &DiffusionMapModel) -> Result<DmapDiagnostics> {
    let dist = model.distance_matrix();
    let markov = markov_normalize(gaussian_kernel(&dist, model.epsilon)?);
    let m = model.m();
    let phi = DMatrix::from_fn(m, model.k(), |i, j| model.coords[i][j]);
    let mut eigen_residual: f64 = 0.0;
    for (j, lam) in model.eigenvalues.iter().enumerate() {
        let r = &markov.a * phi.column(j) - phi.column(j) * *lam;
        eigen_residual = eigen_residual.max(r.amax());
    }
    let phi1 = model.column(1);
    let mean_abs = phi1.iter().map(|x| x.abs()).sum::<f64>() / m as f64;
    let (lo, hi) = phi1
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));

    let components: Vec<usize> = (2..=model.k())
        .filter(|&c| model.eigenvalue(c).abs() >= DEGENERATE_EIGENVALUE)
        .collect();
    let nystrom_error = (0..m)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = dist.values.row(i).iter().copied().collect();
            let ext = nystrom_extend(model, &row, &components)?;
            Ok(components
                .iter()
                .zip(&ext)
                .map(|(&c, v)| (v - model.coord(i, c)).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let distance_asymmetry = (&dist.values - dist.values.transpose()).amax();

    Ok(DmapDiagnostics {
        row_sum_error: markov.row_sum_error,
        lambda1_error: (model.eigenvalues[0] - 1.0).abs(),
        max_abs_eigenvalue: model.eigenvalues.iter().fold(0.0, |a, b| a.max(b.abs())),
        phi1_spread: (hi - lo) / mean_abs,
        eigen_residual,
        nystrom_error,
        distance_asymmetry,
    })
}

/// R² of a degree-`degree` polynomial regression of each `φ_c`, `c ≥ 3`, on
/// `φ_2`. Values near 1 flag `φ_c` as a harmonic of `φ_2`.
pub fn harmonic_r2(model: &DiffusionMapModel, degree: usize) -> Vec<(usize, f64)> {
    if model.k() < 3 {
        return Vec::new();
    }
    let x = model.column(2);
    (3..=model.k())
        .map(|c| (c, polyfit_r2(&x, &model.column(c), degree)))
        .collect()
}

/// First eigenvector after `φ_2` that is not explained by `φ_2` (harmonic
/// R² below `threshold`), among `φ_3..=φ_max_component`. Falls back to the
/// least-explained candidate.
pub fn independent_partner(model: &DiffusionMapModel, degree: usize, threshold: f64, max_component: usize) -> Option<usize> {
    let cands: Vec<(usize, f64)> = harmonic_r2(model, degree)
        .into_iter()
        .filter(|&(c, _)| c <= max_component)
        .collect();
    cands
        .iter()
        .find(|&&(_, r2)| r2 < threshold)
        .or_else(|| cands.iter().min_by(|a, b| a.1.total_cmp(&b.1)))
        .map(|&(c, _)| c)
}
