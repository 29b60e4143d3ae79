//! Numerical models for Raman sideband cooling of trapped-ion chains.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! - [`chain`]: equilibrium positions, axial and radial normal modes, and
//!   Lamb-Dicke parameters of a linear Coulomb crystal.
//! - [`specfun`]: generalized Laguerre polynomials, displacement-operator
//!   matrix elements, thermal phonon statistics.
//! - [`crsc`]: continuous sideband cooling of one ion with a four-level
//!   Lindblad model driven by a thermally averaged red sideband.
//! - [`prsc`]: pulsed sideband cooling population recursion and pulse-length
//!   search.
//! - [`scaling`]: parallel versus sequential cooling time of an N-ion chain.
//! - [`sideband`]: exact spin-phonon simulation of red/blue sideband flopping
//!   and sideband-ratio thermometry.
//! - [`carrier`]: carrier flopping under thermal motion and COM-mode fits.
//! - [`limits`]: heating and recoil budgets.
//!
//! File formats, configuration and the command line live in the companion
//! `rsc-tools` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod carrier;
pub mod chain;
pub mod constants;
pub mod crsc;
mod error;
pub mod fit;
pub mod limits;
pub mod linalg;
pub mod prsc;
pub mod scaling;
pub mod sideband;
pub mod specfun;

pub use error::{Error, Result};
