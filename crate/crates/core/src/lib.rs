//! Constant of quantum motion for a charged particle in the plane under a
//! perpendicular magnetic field and a Gaussian-mixture electric potential.
//!
//! The Hamiltonian `H = H_La + V` is block-diagonalized over the Landau-level
//! projection family by a superconvergent (Newton-like) sequence of unitary
//! conjugations. The accumulated unitary `U` yields the conserved observable
//! `J = U† H_La U`, which commutes with `H` and is therefore constant along
//! the quantum flow `e^{-iHt}`.
//!
//! Module map:
//! - [`blockop`] — block-operator algebra and the weighted norms `‖·‖_l`
//! - [`homological`] — the commutator equation `[𝒟H, W] = 𝒪H`
//! - [`flow`] — the superconvergent iteration and its trace
//! - [`landau`] — Laguerre functions, Landau eigenfunctions, Gaussian matrix
//!   elements, magnetic translations, and bound audits
//! - [`potential`] — class-𝒢 mixtures (including Anderson-type disorder) and
//!   operator assembly
//! - [`invariant`] — the end-to-end invariant construction and dynamical checks
//! - [`quadratic`] — closed-form cross-checks for linear and quadratic
//!   potentials in ladder representation
//! - [`quadrature`] — Gauss–Legendre / adaptive Gauss–Kronrod integration used
//!   by the oracle tests

pub mod blockop;
pub mod error;
pub mod flow;
pub mod homological;
pub mod invariant;
pub mod landau;
pub mod potential;
pub mod quadratic;
pub mod quadrature;

mod linalg;

pub use blockop::BlockOperator;
pub use error::Error;
pub use landau::Truncation;
pub use potential::GaussianMixture;

/// `ζ(2) = π²/6`.
pub const ZETA_2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// The convolution constant `K = 3 + 2ζ(2)` governing `‖AB‖₁ ≤ K‖A‖₂‖B‖₁`.
pub const CONVOLUTION_K: f64 = 3.0 + 2.0 * ZETA_2;
