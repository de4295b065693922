//! Sequential multivariate empirical processes under strong mixing.
//!
//! This crate evaluates the sequential empirical process
//! `B_n(s, u) = n^(-1/2) sum_{i <= floor(s n)} {1(U_i <= u) - C(u)}` of a
//! strictly stationary uniform-marginal sequence on finite grids, simulates
//! its Gaussian limit (Brownian motion in time, long-run covariance kernel
//! in space), verifies an Ottaviani-type maximal inequality for strongly
//! mixing partial sums both exactly and by Monte Carlo, and implements two
//! applications: a CUSUM change-point test and self-normalized confidence
//! intervals for the integral of the empirical CDF.
//!
//! Modules:
//!
//! * [`generators`] — stationary sequence families with exact joint CDFs
//!   and documented mixing bounds.
//! * [`empirical`] — grid evaluation of `B_n`, moduli of continuity, and
//!   derived fields.
//! * [`limit`] — covariance kernel estimation, limit simulation, and
//!   weak-convergence diagnostics.
//! * [`ottaviani`] — blocking plans, partial-sum suprema, and the two
//!   inequality verifiers.
//! * [`applications`] — change-point test and self-normalized intervals.
//!
//! All Monte Carlo loops address a ChaCha12 stream per replication
//! ([`rng::stream`]); with the default `parallel` feature they run on the
//! rayon pool and produce bit-identical results either way.

pub mod applications;
pub mod empirical;
pub mod error;
pub mod generators;
pub mod grid;
pub mod limit;
pub mod ottaviani;
pub mod par;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use generators::{CrossDependence, Family, MixingProfile, SequenceSpec, StationarySample};
pub use grid::{EvaluationGrid, ULattice};

pub use empirical::{
    cusum_field, eval_nonsequential, eval_sequential, modulus_of_continuity,
    rescale_identity_check, sup_norm, Centering, ProcessField,
};
pub use limit::{
    default_bandwidth, estimate_gamma, gamma_analytic_iid, simulate_limit,
    weak_convergence_diagnostic, CovKernelEstimate, DiagnosticOptions, DiagnosticReport,
    Functional, LagKernel, LimitField, LimitSimulator,
};
pub use ottaviani::{
    blocking_plan, verify_inequality_exact, verify_inequality_mc, verify_inequality_mc_grid,
    BlockingPlan, FiniteModel, IndexFamily, InequalityReport, McOptions, PartialSumFamily,
    StepLaw,
};
pub use applications::{
    changepoint_test, integral_functional, selfnorm_ci, selfnorm_critical_value,
    ChangepointCalib, CriticalValueCalib, SelfNormCI, TestResult,
};
