use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local affine fit of two targets on two coordinates around one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianEstimate {
    /// `slopes[i][j]` = ∂ target_i / ∂ coord_j.
    pub slopes: [[f64; 2]; 2],
    pub det: f64,
    /// Points used in the fit (the point itself plus its neighbors).
    pub neighborhood: usize,
    /// Rank-deficient neighborhood; excluded from sign statistics.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianField {
    pub k_nn: usize,
    pub estimates: Vec<JacobianEstimate>,
}

impl JacobianField {
    pub fn unflagged(&self) -> impl Iterator<Item = &JacobianEstimate> {
        self.estimates.iter().filter(|e| !e.flagged)
    }

    /// Fraction of unflagged points whose determinant has the majority sign.
    /// Zero determinants count against consistency. `None` if every point is
    /// flagged.
    pub fn sign_consistency(&self) -> Option<f64> {
        let (mut pos, mut neg, mut total) = (0usize, 0usize, 0usize);
        for e in self.unflagged() {
            total += 1;
            if e.det > 0.0 {
                pos += 1;
            } else if e.det < 0.0 {
                neg += 1;
            }
        }
        (total > 0).then(|| pos.max(neg) as f64 / total as f64)
    }

    pub fn flagged_count(&self) -> usize {
        self.estimates.iter().filter(|e| e.flagged).count()
    }
}

/// For each point, fits `targets ≈ a + B coords` by least squares over the
/// point and its `k_nn` nearest neighbors in `coords` (Euclidean, ties by
/// index) and reports `B`.
pub fn jacobian_field(coords: &[[f64; 2]], targets: &[[f64; 2]], k_nn: usize) -> Result<JacobianField> {
    let m = coords.len();
    if targets.len() != m {
        return Err(Error::param(
            "targets",
            format!("{} targets for {m} coordinates", targets.len()),
        ));
    }
    if k_nn < 4 || k_nn >= m {
        return Err(Error::param("k_nn", format!("need 4 <= k_nn < m = {m}, got {k_nn}")));
    }
    if coords.iter().chain(targets).flatten().any(|x| !x.is_finite()) {
        return Err(Error::param("coords", "non-finite value"));
    }
    let estimates = (0..m)
        .into_par_iter()
        .map(|i| local_fit(coords, targets, i, k_nn))
        .collect::<Result<Vec<_>>>()?;
    Ok(JacobianField { k_nn, estimates })
}

fn local_fit(coords: &[[f64; 2]], targets: &[[f64; 2]], i: usize, k_nn: usize) -> Result<JacobianEstimate> {
    let c = coords[i];
    let mut order: Vec<(f64, usize)> = coords
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, x)| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2), j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let hood: Vec<usize> = std::iter::once(i).chain(order.iter().take(k_nn).map(|&(_, j)| j)).collect();
    let rows = hood.len();

    // Centre and scale the design so the rank test is scale-free.
    let scale = hood
        .iter()
        .map(|&j| (coords[j][0] - c[0]).abs().max((coords[j][1] - c[1]).abs()))
        .fold(0.0, f64::max);
    let flagged_estimate = JacobianEstimate {
        slopes: [[f64::NAN; 2]; 2],
        det: f64::NAN,
        neighborhood: rows,
        flagged: true,
    };
    if scale == 0.0 {
        return Ok(flagged_estimate);
    }
    let x = DMatrix::from_fn(rows, 3, |r, col| match col {
        0 => 1.0,
        k => (coords[hood[r]][k - 1] - c[k - 1]) / scale,
    });
    let svd = x
        .try_svd(true, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("SVD of local design did not converge".into()))?;
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax * rows as f64;
    if svd.singular_values.iter().filter(|&&s| s > tol).count() < 3 {
        return Ok(flagged_estimate);
    }
    let mut slopes = [[0.0; 2]; 2];
    for (t, row) in slopes.iter_mut().enumerate() {
        let y = DVector::from_fn(rows, |r, _| targets[hood[r]][t]);
        let beta = svd
            .solve(&y, tol)
            .map_err(|e| Error::Numerical(format!("local fit failed: {e}")))?;
        *row = [beta[1] / scale, beta[2] / scale];
    }
    let det = slopes[0][0] * slopes[1][1] - slopes[0][1] * slopes[1][0];
    Ok(JacobianEstimate {
        slopes,
        det,
        neighborhood: rows,
        flagged: false,
    })
}
