//! Planted random CSPs and noisy k-XOR: instance sampling, Fourier
//! reduction to XOR, Kikuchi spectral refutation, and two-stage recovery of
//! the planted assignment.

pub mod approx_recovery;
pub mod error;
pub mod exact_rounding;
pub mod fourier;
pub mod instance;
pub mod io;
pub mod kikuchi;
pub mod linalg;
pub mod reduction;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{distribution_complexity, fourier_table, DistributionComplexity, FourierTable, Subset};
pub use instance::{
    clean, sample_planted_csp, sample_planted_xor, value, Assignment, CspInstance, CspPredicate,
    PlantingDistribution, Scope, XorInstance,
};
pub use reduction::{build_xor_side, restrict, Side};
pub use approx_recovery::{round_even, round_odd, solve_pseudo_expectation, BackendChoice, PseudoExpectation};
pub use exact_rounding::{build_cohyperedges, majority_round, CoHyperedgeIndex};
pub use kikuchi::{build_kikuchi, refutation_certificate, KikuchiMatrix, RefutationCertificate};
pub use solver::{pair_to_even, solve_csp, solve_csp_known, solve_xor, SolveReport, SolveStats, SolverConfig};
