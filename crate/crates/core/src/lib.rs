//! Exact remainder identities for weighted Hardy and L²-Caffarelli-Kohn-Nirenberg
//! inequalities on homogeneous groups, checked numerically.
//!
//! Groups are realised in exponential coordinates on `R^n` with diagonal
//! dilations. The crate provides quasi-norms, the Euler and radial-derivative
//! operators, smooth compactly supported test fields, radial and Cartesian
//! quadrature, identity/inequality checks with residual reports, and a
//! Rayleigh-quotient solver that exhibits the sharp constant `|Q - 2 - 2α| / 2`.

// Negated float comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod group;
pub mod identities;
pub mod numerics;
pub mod operators;
pub mod quadrature;
pub mod sharpness;
pub mod tolerance;

pub use error::{Error, Result};
pub use fields::{Phase, RadialForm, RadialProfile, ScalarField, Support};
pub use group::{DilationAction, GroupSpec, NormFamily, QuasiNorm};
pub use identities::{IdentityReport, Verifier, WeightedNormTriple};
pub use quadrature::QuadratureSettings;
pub use sharpness::{EigenSettings, RayleighProblem, SharpnessScanResult};
pub use tolerance::ToleranceProfile;
