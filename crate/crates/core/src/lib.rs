//! Spontaneous time-reversal symmetry breaking and exceptional points in a
//! linearized two-mode bosonic system.
//!
//! A cavity mode `a` (frequency `omega_c`) is coupled to a negative-mass
//! oscillator `b` (frequency `-omega_s`, the collective spin of an inverted
//! atomic ensemble) through `chi (a† + a)(b† + b)`. The first moments of
//! `(a, b, a†, b†)` obey `dv/dt = i M v` with a 4×4 matrix `M`, and this crate
//! analyses that matrix:
//!
//! - [`model`]: parameters, the dynamical matrix (optionally with decay), and
//!   the commutator metric.
//! - [`spectral`]: discriminant, closed-form and numerical spectra, phase
//!   classification, critical detuning and branch tracking.
//! - [`modes`]: hybrid-mode amplitudes, Bloch angles and time-reversal
//!   partners.
//! - [`evolution`]: RK4 propagation at fixed parameters and around loops in
//!   the `(delta, gamma)` plane, with instantaneous-mode projection.
//! - [`sweep`]: phase diagrams, spectra along detuning, Riemann-surface grids
//!   and the instability onset used for sensing.
//!
//! All frequencies are in units of `omega_s`, which is 1 by convention.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod modes;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};

pub use model::{build_matrix, effective_coupling, CommutatorMetric, DynMatrix, SystemParams};
pub use modes::{bloch_angles, mode_coefficients, time_reversal_partner, HybridMode};
pub use spectral::{
    classify_phase, closed_form_frequencies, critical_detuning, discriminant, eigendecompose,
    track_branches, Branch, EigenSystem, Family, Phase, PhaseLabel, Sign,
};
pub use evolution::{
    dominant_mode, project_intensities, propagate_fixed, propagate_loop, propagate_loop_with,
    switching_outcome, LoopOptions, LoopSpec, Trajectory,
};
