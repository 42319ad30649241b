//! Simulation and certification toolkit for differential inclusions
//!
//! ```text
//!     ẋ(t) ∈ F(x(t)) − A(x(t)),   x(0) = x₀ ∈ closure(dom A),
//! ```
//!
//! where `A` is a maximal monotone operator on R^n and `F` is a Lipschitz
//! set-valued map with nonempty convex compact values. The crate provides
//!
//! * convex-set primitives (support functions, projections, normal and
//!   tangent cones) in [`geometry`],
//! * monotone operators with resolvents and minimal sections in
//!   [`operators`],
//! * set-valued right-hand sides with Lipschitz selections in [`cusco`],
//! * a catching-up (resolvent) time stepper in [`integrator`],
//! * strong/weak invariance certification and simulation-based
//!   falsification in [`invariance`],
//! * Lyapunov-pair certification, Pasch-Hausdorff envelopes and the
//!   epigraph lift in [`lyapunov`],
//! * scenario files, reports and canned systems in [`scenario`],
//!   [`report`] and [`canned`].
//!
//! All certification is sample-based: reports state the sampling regime and
//! are deterministic for a fixed scenario seed.

// Validation guards are written `!(x > 0.0)` on purpose: they must reject
// NaN inputs, which plain `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canned;
pub mod cusco;
pub mod functions;
pub mod geometry;
pub mod integrator;
pub mod invariance;
pub mod lyapunov;
pub mod numerics;
pub mod operators;
pub mod report;
pub mod scenario;

/// Dense column vector over f64; every state, direction and normal is one.
pub type Vector = nalgebra::DVector<f64>;
/// Dense square matrix over f64.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use cusco::{CuscoMap, Selection};
pub use functions::ScalarFn;
pub use geometry::{ClosedSet, ConvexBody};
pub use integrator::{IntegratorConfig, SteerObjective, StepMode, Trajectory};
pub use invariance::{CertifyOptions, CriterionVariant};
pub use lyapunov::{LyapunovPair, LyapunovVariant};
pub use operators::{MonotoneOperator, OperatorValue};
pub use report::{CertificateReport, Verdict};
pub use scenario::Scenario;

/// Builds a vector from a slice; test and example shorthand.
pub fn vec_from(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}
