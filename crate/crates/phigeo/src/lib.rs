//! Geometry of deformed-exponential families over finite sample spaces.
//!
//! The crate builds parametric families `p(t; θ) = φ(c + Σ θ^i u_i − ψ(θ) u0)`
//! for a deformation `φ` (exponential, Kaniadakis kappa-exponential, or a
//! custom bundle), and computes on them:
//!
//! - the generalized Fisher metric in both of its analytic forms,
//! - the dual connection pair and the full alpha-family of connections,
//! - the skewness tensor, Riemann curvature, geodesics and natural-gradient
//!   steps,
//! - the phi-divergence together with finite-difference recovery of the
//!   metric and connections from it,
//! - closed-form and ODE parallel transport.
//!
//! Every analytic formula is cross-checked against an independent
//! finite-difference or classical-formula route in the test suite and in
//! the [`checks`] battery.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! the `*64` aliases below fix `f64`, which is what the shipped tolerances
//! are calibrated for.

// index loops mirror the tensor index notation (i, j, k)
#![allow(clippy::needless_range_loop)]
// `!(x > y)` guards treat NaN as a violation; `x <= y` would let it through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod divergence;
pub mod error;
pub mod family;
pub mod geometry;
pub mod linalg;
pub mod phi;
mod scalar;
pub mod space;
pub mod transport;

pub use error::{GeomError, Result};
pub use family::{orthogonalize_direction, ManifoldPoint, PhiFamily};
pub use phi::{validate_phi, CustomPhi, PhiBundle, PhiFunction, ValidationReport};
pub use scalar::Scalar;
pub use space::{
    expectation, semi_inner_product, Density, ExpectationKernel, ExpectationOrder, FiniteSpace,
    TangentVector,
};

pub type PhiFunction64 = PhiFunction<f64>;
pub type FiniteSpace64 = FiniteSpace<f64>;
pub type Density64 = Density<f64>;
pub type TangentVector64 = TangentVector<f64>;
pub type PhiFamily64 = PhiFamily<f64>;
pub type MetricTensor64 = geometry::MetricTensor<f64>;
pub type ChristoffelTensor64 = geometry::ChristoffelTensor<f64>;
