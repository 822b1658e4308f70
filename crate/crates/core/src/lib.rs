//! Simulator for the synthetic energy lattice of laser-modulated free
//! electrons.
//!
//! An electron crossing an optically driven grating exchanges photons with
//! the near field, and its energy spectrum develops discrete sidebands
//! spaced by the photon energy. Those sidebands behave like the sites of a
//! one-dimensional tight-binding lattice: the drive strength sets the
//! hopping, and the phase mismatch between the optical cycle and the
//! grating period acts as a constant force. This crate implements three
//! mutually cross-validating descriptions of that lattice:
//!
//! * [`tba`]: coupled-mode integration of the sideband amplitudes,
//! * [`analytic`]: closed-form Bessel propagators, Wannier-Stark ladders,
//!   and band quantities,
//! * [`tdse`]: a real-space Crank-Nicolson solver for the slow envelope,
//!
//! plus a [`protocols`] layer that packages the interesting experiments
//! (Bloch oscillation and breathing, detuning sweeps, acceleration,
//! diffraction management, refraction, spectral lensing, Talbot
//! self-imaging) as reproducible runs.
//!
//! Units are fs / μm / eV throughout; angular frequencies are rad/fs.

// validation guards use `!(x > 0.0)` so that NaN inputs are rejected
// together with the out-of-range ones
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]
// frozen reference values keep all digits they were generated with
#![allow(clippy::excessive_precision)]

pub mod analytic;
pub mod bessel;
pub mod constants;
pub mod error;
pub mod params;
pub mod protocols;
pub mod tba;
pub mod tdse;

pub use constants::PhysicalConstants;
pub use error::{Error, Result, Validity};
pub use num_complex::Complex64;
pub use params::{derive_kinematics, derive_lattice, BeamKinematics, DriveParams, LatticeModel};
pub use tba::{SidebandState, TraceRecord, Window};
