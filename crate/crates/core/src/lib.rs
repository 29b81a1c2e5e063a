//! Exact symbolic engine for differential structures on quantum principal
//! bundles.
//!
//! The crate is organized bottom-up:
//!
//! * [`scalar`] — the exact coefficient fields: arbitrary-precision rationals
//!   and rational functions in the deformation parameter `q`.
//! * [`linalg`] — sparse exact linear algebra (fraction-free elimination,
//!   kernels, subspaces, quotients).
//! * [`algebra`] — presented *-algebras with rewriting normal forms, the
//!   universal value types [`algebra::AlgElement`] and
//!   [`algebra::TensorElement`].
//! * [`hopf`] — Hopf *-algebra structure maps, Sweedler-leg machinery and the
//!   adjoint action.
//! * [`fodc`] — first-order differential calculi as ideal quotients of
//!   `ker ε`, with the right module structure, coadjoint coaction and star.
//! * [`braided`] — the canonical flip, braided antisymmetrizers and the
//!   envelope/exterior algebras with their differentials.
//! * [`bundle`] — quantum principal bundles, horizontal forms, preconnections
//!   and their structure maps, annihilator ideals.
//! * [`vh`] — the vertical-horizontal algebra, its family of differentials,
//!   gauge isomorphisms, chart gluing and the pull-back homomorphism.
//! * [`presets`] — the shipped quantum groups and worked bundles.
//! * [`report`] — machine-readable check reports.
//!
//! All core types are generic over the scalar [`scalar::Field`]; the two
//! shipped instances are aliased below.

pub mod algebra;
pub mod braided;
pub mod bundle;
pub mod error;
pub mod fodc;
pub mod hopf;
pub mod linalg;
pub mod presets;
pub mod report;
pub mod scalar;
pub mod vh;

pub use error::Error;

/// Arbitrary-precision rational numbers, the field obtained after
/// specializing `q`.
pub type Rat = num_rational::BigRational;

/// Rational functions in `q` with rational coefficients, the default
/// symbolic coefficient field.
pub type QScalar = scalar::RatFun;

/// Algebra element over the symbolic field.
pub type QElement = algebra::AlgElement<QScalar>;

/// Tensor element over the symbolic field.
pub type QTensor = algebra::TensorElement<QScalar>;

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
