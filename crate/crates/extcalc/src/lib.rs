//! Function calculus for rank-one extension theory.
//!
//! Starting from a Lebesgue-Stieltjes measure `mu` normalized by
//! `int dmu/(1+lambda^2) = 1`, this crate evaluates the whole family of
//! analytic objects attached to a symmetric operator with deficiency indices
//! (1,1), a self-adjoint reference extension, and a maximal dissipative
//! extension with von Neumann parameter `kappa`, `|kappa| < 1`:
//!
//! * the Weyl-Titchmarsh function `M` (Herglotz transform of `mu`),
//! * the Livsic function `s = (M - i)/(M + i)`, also computable from
//!   deficiency-element inner products,
//! * the characteristic function `S = (s - kappa)/(conj(kappa) s - 1)` of the
//!   dissipative triple, and the dissipative Weyl-Titchmarsh function
//!   `calM = i (1 + conj(kappa) s)/(1 - conj(kappa) s)`,
//! * the multiplication-operator model on `L^2(R; dmu)` for atomic measures,
//!   with domain decompositions, deficiency elements, and eigenfunctions,
//! * eigenvalue localization by the argument principle (eigenvalues of the
//!   dissipative extension are the zeros of `S` in the upper half-plane),
//! * Krein-type resolvent formulas with coefficient
//!   `p(z) = (M(z) + i(kappa+1)/(kappa-1))^{-1}` and the two-extension
//!   difference coefficient `q = p_2 - p_1`.
//!
//! Everything is numerically verifiable against finite atomic measures,
//! where each identity reduces to exact finite-sum arithmetic.

pub mod herglotz;
pub mod measure;
pub mod model;
pub mod resolvent;
pub mod spectral;
pub mod triple;
pub mod verify;

mod cjson;
mod error;
mod quad;

pub use error::{Error, Result};
pub use measure::{
    herglotz_kernel_integral, load_measure, normalization_defect, resolvent_inner_product, Atom,
    AtomFamily, Density, DensityPiece, Measure, Tolerances,
};
