//! Brute-force `p`-adic verification of the unramified local identities
//! behind the generating-function construction of standard L-functions on
//! metaplectic covers of `GL_r`.
//!
//! Layers, bottom up: exact arithmetic ([`exactsym`]), the local field
//! ([`padic`]), matrices and unipotent subgroups ([`matgroups`]), the
//! Iwasawa decomposition and unramified section ([`iwasawa`]), truncated
//! integration ([`integrator`]), closed forms ([`closedforms`]) and the
//! scenario runner ([`verify`]).

pub mod closedforms;
pub mod exactsym;
pub mod integrator;
pub mod iwasawa;
pub mod matgroups;
pub mod padic;
pub mod verify;

/// Exact rational scalar used throughout.
pub type BigRat = num_rational::BigRational;
/// Double-precision complex values returned by integrals.
pub type Complex64 = num_complex::Complex64;
/// Matrix over exact rationals viewed inside `GL_m(Q_p)`.
pub type GroupMatrix = matgroups::Matrix<BigRat>;
/// Matrix over machine-word rationals for small exact experiments.
pub type SmallMatrix = matgroups::Matrix<num_rational::Ratio<i64>>;
