//! Simulation core for a collectively charged quantum battery under
//! sinusoidal energy-level modulation.
//!
//! The battery is a symmetric ensemble of `N` two-level cells (kept in the
//! maximal-spin Dicke sector), the charger a single truncated bosonic mode.
//! The crate provides:
//!
//! * [`hilbert`] — space layouts, collective-spin and bosonic ladder
//!   operators, tensor products, basis states, and partial traces;
//! * [`model`] — the lab-frame, exact interaction-picture, Bessel-reduced
//!   effective, and Tavis-Cummings Hamiltonians, plus Bessel-function
//!   evaluation and `J0` zeros;
//! * [`dynamics`] — fixed-step fourth-order propagation of pure states,
//!   of the joint amplitude ladder, and of Lindblad master equations;
//! * [`observables`] — mean energy, passive states, ergotropy, charging
//!   efficiency, entropies, relative-entropy coherence, and peak detection;
//! * [`noise`] — Lorentzian bath spectra, modulation-engineered decay
//!   rates, and the collective dephasing/dissipation channels.
//!
//! Conventions: `omega0` (the battery gap) is the energy unit, time is in
//! units of `1/omega0`, and joint-space indices are battery-first,
//! `index = m_index * (n_max + 1) + n`.

mod error;
pub(crate) mod linalg;

pub mod dynamics;
pub mod hilbert;
pub mod model;
pub mod noise;
pub mod observables;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
