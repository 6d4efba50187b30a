//! Numerical laboratory for random Blaschke product cocycles.
//!
//! The crate is organised around the objects that appear when studying the
//! Lyapunov spectrum of transfer-operator cocycles driven by finite Blaschke
//! products:
//!
//! * [`blaschke`]: finite Blaschke products as maps of the extended plane,
//!   their derivatives, preimages and the expansion / admissibility bounds.
//! * [`cocycle`]: driving systems, coefficient fields, pullback random fixed
//!   points, the Lyapunov integral and the stability classifier.
//! * [`transfer`]: truncated Perron–Frobenius matrices in a Laurent basis and
//!   Lyapunov exponents of the operator cocycle by QR re-orthonormalisation.
//! * [`phi`]: the diffeomorphism `Φ(z) = z / sqrt(1 - |z|²)`, the linear
//!   structure it induces on monic quadratic cocycles, metrics and the
//!   λ-perturbation family.
//! * [`prevalence`]: geometry and Lebesgue measure of the set of perturbations
//!   that make a cocycle unstable.
//! * [`runner`]: configuration files, experiment orchestration and reports.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

// `!(x < bound)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blaschke;
pub mod cocycle;
pub mod error;
pub mod numeric;
pub mod phi;
pub mod prevalence;
pub mod runner;
pub mod transfer;

pub use num_complex::Complex64;

pub use blaschke::{admissibility_bound, BlaschkeProduct, ExpansionReport, MartinCheck};
pub use cocycle::{
    BasePoint, BlaschkeCocycle, CoefficientField, DomainKind, DrivingSystem, LambdaMethod, Smoothness, Stability,
    StabilityVerdict,
};
pub use error::{LabError, Result};
pub use transfer::{ExponentEstimate, LaurentTruncation, OperatorMatrix};
