//! Exact machinery for quadratic and bilinear forms over prime fields,
//! stochastic isotropic subspaces, orthogonal stochastic groups, Clifford
//! tensor powers, their commutant semigroup, and black-box conjugation plans.
//!
//! Everything that matters runs over exact scalars: cyclotomic numbers with
//! rational coefficients and a tracked power of 1/sqrt(d). A floating-point
//! backend sits behind the same trait for tolerance-based checks at sizes
//! where exact arithmetic is pointless. Inner loops that are embarrassingly
//! parallel go through [`par`], which uses rayon under the default
//! `parallel` feature and plain iterators otherwise.

pub mod par;
pub mod scalars;
pub mod ratlin;
pub mod gflinear;
pub mod forms;
pub mod isotropic;
pub mod orthostoch;
pub mod cliffordrep;
pub mod commutant;
pub mod decompose;

/// Library version embedded in CLI reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
