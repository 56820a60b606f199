use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ef::reference::ReferenceDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct LiftedMember {
    pub index: usize,
    pub id: String,
    pub coef: f64,
    pub graph: Graph,
}

/// Lifting result: `N` reference graphs with coefficients `c_i` such that
/// `Σ c_i φ_ref(G_i) = target` (exactly when the neighbor coordinates
/// have rank 2).
#[derive(Debug, Clone)]
pub struct LiftedEnsemble {
    pub target: [f64; 2],
    pub members: Vec<LiftedMember>,
    /// Rank of the 2×N neighbor coordinate matrix.
    pub rank: usize,
    /// ‖Σ c_i φ_ref(G_i) − target‖.
    pub residual: f64,
}

impl LiftedEnsemble {
    pub fn weighted(&self) -> Vec<(f64, &Graph)> {
        self.members.iter().map(|m| (m.coef, &m.graph)).collect()
    }

    pub fn coef_sum(&self) -> f64 {
        self.members.iter().map(|m| m.coef).sum()
    }
}

/// Picks the `neighbors` reference points nearest to `phi0` in coarse
/// coordinates (ties by index) and the minimum-norm `c` solving the 2×N
/// interpolation system, via the SVD pseudoinverse.
pub fn lift(phi0: [f64; 2], reference: &ReferenceDataset, neighbors: usize) -> Result<LiftedEnsemble> {
    if neighbors <= 2 {
        return Err(Error::param("neighbors", format!("need N > 2, got {neighbors}")));
    }
    if neighbors > reference.m() {
        return Err(Error::param(
            "neighbors",
            format!("N = {neighbors} exceeds the {} reference graphs", reference.m()),
        ));
    }
    if !phi0.iter().all(|x| x.is_finite()) {
        return Err(Error::param("phi0", format!("{phi0:?} is not finite")));
    }
    let coords = reference.all_coords();
    let mut order: Vec<(f64, usize)> = coords
        .iter()
        .enumerate()
        .map(|(i, c)| ((c[0] - phi0[0]).powi(2) + (c[1] - phi0[1]).powi(2), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = order.iter().take(neighbors).map(|&(_, i)| i).collect();

    let phi = DMatrix::from_fn(2, neighbors, |r, c| coords[chosen[c]][r]);
    let (coef, rank) = min_norm_solve(&phi, &DVector::from_column_slice(&phi0))?;
    if rank < 2 {
        log::warn!("lifting at {phi0:?}: neighbor coordinates have rank {rank}");
    }
    let fitted = &phi * &coef;
    let residual = ((fitted[0] - phi0[0]).powi(2) + (fitted[1] - phi0[1]).powi(2)).sqrt();
    let members = chosen
        .iter()
        .zip(coef.iter())
        .map(|(&i, &c)| LiftedMember {
            index: i,
            id: reference.records[i].id.clone(),
            coef: c,
            graph: reference.records[i].graph.clone(),
        })
        .collect();
    Ok(LiftedEnsemble {
        target: phi0,
        members,
        rank,
        residual,
    })
}

/// Minimum-norm least-squares solution of `a x = b` and the numerical rank
/// of `a`.
pub(crate) fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("SVD of lifting system did not converge".into()))?;
    let smax = svd.singular_values.max();
    let tol = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd
        .solve(b, tol)
        .map_err(|e| Error::Numerical(format!("lifting solve failed: {e}")))?;
    Ok((x, rank))
}

/// Coefficient-weighted sum of the members' Nyström coordinates.
pub fn restrict(weighted: &[(f64, &Graph)], reference: &ReferenceDataset) -> Result<[f64; 2]> {
    if let Some((c, _)) = weighted.iter().find(|(c, _)| !c.is_finite()) {
        return Err(Error::param("coefficients", format!("{c} is not finite")));
    }
    let parts: Vec<[f64; 2]> = weighted
        .par_iter()
        .map(|&(c, g)| {
            if c == 0.0 {
                return Ok([0.0, 0.0]);
            }
            let phi = reference.coarse_of(g)?;
            Ok([c * phi[0], c * phi[1]])
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]))
}
