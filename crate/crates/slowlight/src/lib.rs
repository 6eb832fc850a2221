//! Weak-probe pulse propagation in a three-level Λ medium.
//!
//! A probe field couples the ground state |0⟩ to the excited state |2⟩ while a
//! strong control field couples |1⟩ ↔ |2⟩. In the weak-probe limit the medium
//! responds linearly and the physics reduces to two coherences per atom,
//! σ₂₀ (optical) and σ₁₀ (ground-state "spin wave"), driven by the probe Rabi
//! envelope Ω_p(z, t):
//!
//! ```text
//!   ∂t σ₂₀ = −[γ₂₀ − i(Δ + u + δ)] σ₂₀ + (i/2) Ω_p + (i/2) Ω_c(t) σ₁₀
//!   ∂t σ₁₀ = −[γ₁₀ − i δ] σ₁₀ + (i/2) Ω_c*(t) σ₂₀
//!   ∂z Ω_p = i κ ⟨σ₂₀⟩_u,          κ = OD·γ₂₀ / L
//! ```
//!
//! where Δ is the one-photon detuning, δ the two-photon detuning, u the
//! velocity-class Doppler shift, and ⟨·⟩_u the thermal average. Two regimes of
//! slow light are covered by the same equations: on-resonance transparency
//! (Δ = 0, destructive interference opens a narrow transmission window) and
//! the far-detuned two-photon scheme (|Δ| ≫ Ω_c, the probe rides a narrow
//! Raman resonance). Both support group-velocity reduction and — with a
//! time-dependent control — storage of the pulse as a spin wave and its later
//! retrieval.
//!
//! Module map:
//!
//! - [`model`] — domain types, validation, pulse construction, closed-form
//!   helpers.
//! - [`doppler`] — Gauss–Hermite velocity quadrature and deterministic
//!   reductions.
//! - [`response`] — steady-state linear response kernel K(ω) and dispersion
//!   quantities (group delay / group velocity).
//! - [`spectral`] — frequency-domain propagation for static control and pulse
//!   metrics extraction.
//! - [`solver`] — time-domain Maxwell–Bloch integration with time-dependent
//!   control; storage and multi-window retrieval.
//! - [`scenarios`] — experiment drivers: optical-depth calibration, scheme
//!   comparison, detuning/power sweeps, storage sequences.
//!
//! The two propagators ([`spectral`] and [`solver`]) are independent
//! implementations of the same linear physics and are cross-checked against
//! each other in the test suite.
//!
//! With the default `parallel` feature, embarrassingly parallel loops
//! (frequency grids, sweep points, independent scheme runs) fan out over
//! rayon; disabling the feature yields a fully sequential build with
//! bit-identical results.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form is also true for NaN, which must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doppler;
pub mod error;
pub mod model;
pub mod par;
pub mod response;
pub mod scenarios;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

/// Complex double, the scalar type of every field amplitude and coherence.
pub type C64 = num_complex::Complex64;

/// Vacuum speed of light in m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
