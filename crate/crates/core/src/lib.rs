//! Numerical laboratory for one-dimensional coined quantum walks.
//!
//! The walk lives on `C^2 ⊗ l^2(Z)`, represented in the relabeled basis
//! `e_{2k} = |up> ⊗ |k>`, `e_{2k+1} = |down> ⊗ |k>`. In that basis the one-step
//! operator is the five-diagonal band matrix `U = D_ω S`, where `S` is the
//! deterministic coin-and-shift and `D_ω` a diagonal of random phases.
//!
//! Three regimes are covered:
//!
//! * deterministic coin: ballistic spreading, analysed in Fourier space
//!   ([`fourier`]);
//! * phases frozen in space: dynamical localization, probed through transfer
//!   matrices and Lyapunov exponents ([`transfer`]) and fractional moments of
//!   the Green's function ([`greens`]);
//! * phases renewed in time: diffusion, reduced exactly to a persistent
//!   classical random walk ([`temporal`]).

pub mod banded;
pub mod coin;
pub mod error;
pub mod evolution;
pub mod fourier;
pub mod greens;
pub mod linalg;
pub mod seeds;
pub mod state;
pub mod stats;
pub mod temporal;
pub mod transfer;

pub use error::{Error, Result};

/// Double precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
