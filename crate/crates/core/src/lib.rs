//! Simulation and inverse estimation for the two-pulse write/read protocol on a
//! quantum-dot neutral exciton.
//!
//! A first, resonant pulse writes its polarization onto the exciton spin. The
//! spin then precesses about the H–V axis at the fine-structure frequency while
//! the population decays radiatively. A second, delayed pulse tuned to the
//! electron-singlet/hole-triplet biexciton resonance is absorbed with a
//! probability set by the projection of the spin onto the polarization
//! orthogonal to the probe. The modules here cover each stage:
//!
//! - [`polarization`]: Jones vectors, Poincaré angles, Stokes vectors and the
//!   two-retarder preparation optics.
//! - [`dynamics`]: the write map and free evolution, plus a density-matrix
//!   integrator used as an independent check.
//! - [`readout`]: projection probability, PL signal, delay/angle scans, noise.
//! - [`curve`]: the `SignalCurve` exchange type and its CSV format.
//! - [`tomography`]: curve fitting, maxima location and written-state recovery.
//!
//! Sign conventions are collected in `CONVENTIONS.md` at the repository root.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod dynamics;
mod error;
pub mod oracle;
pub mod polarization;
pub mod readout;
pub mod tomography;

pub use curve::{CurveMeta, ScanKind, SignalCurve};
pub use dynamics::{
    evolve, precession_period, write_state, DotParameters, ExcitonState, WritePath, HBAR_UEV_PS,
};
pub use error::{Error, Result};
pub use oracle::evolve_oracle;
pub use polarization::{
    angles_from_jones, apply_retarder, jones_from_angles, orthogonal, solve_lcvr_pair,
    stokes_from_jones, NamedPolarization, PoincareAngles, PolarizationState, Retarder,
    StokesVector,
};
pub use readout::{
    add_noise, angle_scan, angle_scan_with, delay_scan, pl_signal, projection_probability,
    AngleSweep, Noise, SignalParams, WriteOptics,
};
pub use tomography::{
    estimate_state, fit_delay_curve, locate_maxima, FitModel, FitResult, StateEstimate,
};
