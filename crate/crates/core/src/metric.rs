//! Graph similarity metrics.
//!
//! Both metrics reduce a graph to a Euclidean feature vector (9 motif
//! densities, or `S(λ_m)` over the grid) and compare graphs by the L2
//! distance between their features.

use serde::{Deserialize, Serialize};

use crate::census::census_matrix_fast;
use crate::error::Result;
use crate::graph::Graph;
use crate::spectral::{s_values, spectral_coarse, LambdaGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum Metric {
    Subgraph,
    Spectral { grid: LambdaGrid },
}

impl Metric {
    pub fn tag(&self) -> &'static str {
        match self {
            Metric::Subgraph => "subgraph",
            Metric::Spectral { .. } => "spectral",
        }
    }

    pub fn features(&self, g: &Graph) -> Result<Vec<f64>> {
        match self {
            Metric::Subgraph => Ok(census_matrix_fast(g)?.rho.to_vec()),
            Metric::Spectral { grid } => s_values(&spectral_coarse(g)?, grid),
        }
    }
}

/// L2 distance between feature vectors of equal length.
pub fn feature_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
