//! Age-of-information analysis for networks whose state is a finite
//! continuous-time Markov chain and whose monitor ages are reset by binary
//! assignment maps.
//!
//! - [`model`] declares models and assembles the `D`, `R`, `R̂` block matrices.
//! - [`linalg`] holds the dense solvers, the CTMC stationary distribution
//!   and the Perron-shift spectral abscissa.
//! - [`analytic`] computes stationary moments, the stationary MGF vector and
//!   transient trajectories.
//! - [`simulate`] is a discrete-event simulator used as an independent check.
//! - [`sampling`] covers renewal status-sampling line networks.

pub mod analytic;
pub mod linalg;
pub mod model;
pub mod sampling;
pub mod simulate;

pub use analytic::{
    mgf_radius, moments_via_mgf, stationary_mgf, stationary_moments, transient, Analysis,
    AnalysisError, MgfEvaluation, StationaryMoments, TransientInit, TransientSpec,
    TransientTrajectory,
};
pub use linalg::{
    perron_root, solve_linear, spectral_abscissa, stationary_distribution, DenseMatrix,
    LinalgError, PerronPair, Tolerances,
};
pub use model::{
    assignment_matrices, build_block_system, mm11_abandonment, preemptive_line, validate,
    AgeResetMap, Assignment, BlockSystem, ModelError, ShsModel, Transition, Violation,
};
pub use sampling::{
    equilibrium_age_pdf, gaussian_comparison, node_age_pdf, node_age_stats, renewal_age_moments,
    simulate_sampling_line, GaussianComparison, GridDensity, RenewalSpec, SamplingError,
    SamplingNetwork, SamplingSimConfig, SamplingSimResult, UniformGrid,
};
pub use simulate::{
    empirical_distribution, simulate, EmpiricalDistribution, Estimate, SimConfig, SimError,
    SimEstimates,
};
