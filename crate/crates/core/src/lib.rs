//! Simulation and fitting toolkit for Bi donor spins in Si driven by
//! elliptically polarized microwaves.
//!
//! * [`spin`]: hyperfine Hamiltonian, diagonalization, `|F, mF>` labels
//! * [`transitions`]: frequencies, field gradients, clock fields, helicity
//! * [`fieldmap`]: quasi-static CPW microwave field over the donor implant
//! * [`echo`]: polarization-resolved echo amplitudes, phase sweeps, fitting
//! * [`spectro`]: echo traces, spectra and doublet fitting
//! * [`cli`]: the `biclock` command-line driver

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod constants;
pub mod csvio;
pub mod echo;
pub mod error;
pub mod fieldmap;
pub mod lsq;
pub mod roots;
pub mod spectro;
pub mod spin;
pub mod transitions;

pub use error::{Error, Result};
