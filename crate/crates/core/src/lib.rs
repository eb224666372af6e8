//! Numerical core for preparing mechanical cat-like states in a hybrid
//! magnon-phonon-photon system.
//!
//! The protocol runs in two stages:
//!
//! 1. [`gaussian`]: a two-tone microwave drive on the magnon mode squeezes
//!    the mechanics. The linearized dynamics are Gaussian, so the steady
//!    state follows from a Lyapunov equation for the 4x4 covariance matrix.
//! 2. [`subtraction`]: a weak red-detuned optical pulse swaps a few phonons
//!    into the cavity. Counting `k` anti-Stokes photons heralds a
//!    `k`-phonon-subtracted squeezed state in a truncated Fock basis.
//!
//! [`fock`] bridges the two representations and [`analysis`] characterises
//! the heralded states (Wigner function, negativity, parity, cat fidelity).
//!
//! The crate is `no_std` with `alloc`; IO, configuration and the CLI live in
//! the companion `omcat` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod consts;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod optimize;
pub mod params;
pub mod subtraction;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense complex matrix used for all Fock-space operators.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector used for pure states.
pub type CVector = nalgebra::DVector<Complex64>;
