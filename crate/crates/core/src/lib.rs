//! Two coherently coupled, driven, dissipative quantum oscillators used as a
//! reservoir computer.
//!
//! [`fock`] holds dense operators on truncated two-mode Fock space.
//! [`lindblad`] builds the Hamiltonian and collapse operators and integrates
//! the master equation with RK4, with a matrix-exponential reference.
//! [`readout`] covers input encoding, basis-state features, the
//! pseudo-inverse readout and the nonlinearity and memory metrics.
//! [`config`] and [`experiments`] sit behind the `qrc` command-line tool.

pub mod error;
pub mod fock;
pub mod lindblad;
pub mod readout;
pub mod config;
pub mod experiments;

pub use error::{Error, Result};
