//! Equation-free coarse projective integration on diffusion coordinates.
//!
//! The coarse state is a pair of diffusion-map coordinates of a reference
//! dataset. Lifting maps a coarse point to a coefficient-weighted ensemble of
//! reference graphs; restriction maps a weighted ensemble back through
//! Nyström extension; CPI alternates short fine-grained bursts with Euler
//! projection of the coarse state.

mod cpi;
mod hull;
mod jacobian;
mod lifting;
mod reference;

pub use cpi::{
    coarse_burst, cpi_run, fine_run, BurstOutcome, CoarseOperators, CpiConfig, CpiStep, CpiTrajectory,
    EnsembleSummary, FineRun, ReferenceOperators,
};
pub use hull::ConvexHull;
pub use jacobian::{jacobian_field, JacobianEstimate, JacobianField};
pub use lifting::{lift, restrict, LiftedEnsemble, LiftedMember};
pub use reference::{build_reference, ReferenceDataset};
