//! Diffusion maps over populations of graphs, with subgraph-census and
//! spectral graph metrics, and equation-free coarse projective integration
//! of a stochastic network evolution model on the resulting coordinates.

pub mod census;
pub mod dataset;
pub mod dmap;
pub mod dynamics;
pub mod ef;
pub mod error;
pub mod generators;
pub mod graph;
pub mod metric;
pub mod pca;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use census::{census, census_matrix_fast, subgraph_distance, DensityVector, MotifCounts, MotifId};
pub use dataset::{read_dataset, write_dataset, GraphRecord};
pub use dmap::{fit_dataset, fit_dmap, nystrom_extend, nystrom_features, DiffusionMapModel, DistanceMatrix};
pub use dynamics::{er_trajectory_ensemble, evolve_step, evolve_trajectory, EvolvingGraph};
pub use error::{Error, Result};
pub use generators::{generate_chung_lu, generate_er};
pub use graph::{degree_histogram, total_variation, DegreeHistogram, Graph};
pub use metric::Metric;
pub use pca::{fit_pca, project, HistogramMatrix, PcModel};
pub use spectral::{s_value, spectral_coarse, spectral_distance, LambdaGrid, SpectralCoarse};
