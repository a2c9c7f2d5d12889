//! Numerical information geometry on statistical manifolds.
//!
//! The crate builds Fisher–Rao metrics over parametric probability families,
//! evaluates the full curvature stack (Christoffel, Riemann, Ricci, sectional,
//! projective Weyl), integrates geodesic flow and the Jacobi–Levi-Civita
//! equation, and turns statistical volume growth into a regular-vs-chaotic
//! regime classifier. A small exact-diagonalization module for open Ising
//! chains grounds the regime labels in quantum level-spacing statistics.
//!
//! Modules:
//! - [`models`]: probability families with densities, scores, sampling and
//!   change-of-variable transforms.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration used throughout.
//! - [`geometry`]: metric fields and curvature tensors.
//! - [`dynamics`]: geodesic and Jacobi-field integration, growth-rate fits.
//! - [`ige`]: statistical volumes and entropic growth classification.
//! - [`spectra`]: spin-chain spectra, unfolding and level-spacing fits.

pub mod dynamics;
pub mod geometry;
pub mod ige;
pub mod models;
pub mod quadrature;
pub mod spectra;
