//! Energy terms, their Jacobian, damped Gauss-Newton and the two-stage
//! reconstruction driver.

mod config;
mod correspondence;
mod energy;
mod gauss_newton;
mod reconstruct;

pub use config::SolverConfig;
pub use correspondence::{Correspondence, CorrespondenceSet};
pub use energy::{
    jacobian, residuals_obs, residuals_reg, residuals_rot, total_cost, Energy, EnergyWeights, SparseJacobian, TermCosts,
};
pub use gauss_newton::{gauss_newton_solve, GnReport};
pub use reconstruct::{
    compute_correspondences, mesh_silhouette, reconstruct, OuterIteration, ReconstructionResult, Timings,
};
