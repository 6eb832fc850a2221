//! Domain types, parameter validation, pulse construction, and closed-form
//! helper quantities shared by both propagators.
//!
//! Conventions (fixed across the crate):
//!
//! - Rabi frequencies are Ω = dipole·field/ħ in rad/s; coupling terms enter
//!   the equations of motion as Ω/2.
//! - Detunings are positive when the laser is above the atomic resonance.
//!   Δ (`delta_one_photon`) is the control's offset from its transition;
//!   δ (`delta_two_photon`) is the offset of the probe−control difference
//!   frequency from the ground-state splitting, exactly 0 for strict
//!   two-photon resonance.
//! - The optical depth OD is the resonant two-level *intensity* attenuation
//!   exponent: on resonance with no control, intensity transmission over the
//!   cell is exp(−OD). The field coupling constant is κ = OD·γ₂₀/L.
//! - Probe pulses are Gaussian envelopes whose *intensity* FWHM is τ:
//!   A(t) = peak·exp(−(t−t₀)²/2σ²) with σ = τ/(2√ln2).

use crate::doppler::{pairwise_sum, VelocityGrid};
use crate::error::{Error, Result};
use crate::C64;

/// Atomic/optical description of the medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumParams {
    /// Cell length L in meters.
    pub length: f64,
    /// Resonant two-level intensity attenuation exponent (dimensionless).
    pub optical_depth: f64,
    /// Optical coherence decay rate γ₂₀ of |0⟩↔|2⟩ in rad/s (homogeneous).
    pub gamma20: f64,
    /// Ground coherence decay rate γ₁₀ in rad/s.
    pub gamma10: f64,
    /// FWHM of the one-photon Doppler shift distribution in rad/s (0 = cold).
    pub doppler_fwhm: f64,
    /// Gauss–Hermite quadrature order; 0 disables Doppler averaging.
    pub doppler_nodes: usize,
}

impl MediumParams {
    /// Field coupling constant κ = OD·γ₂₀/L in rad/(s·m).
    pub fn kappa(&self) -> f64 {
        self.optical_depth * self.gamma20 / self.length
    }

    /// Velocity quadrature grid implied by the Doppler settings.
    pub fn velocity_grid(&self) -> VelocityGrid {
        VelocityGrid::new(self.doppler_fwhm, self.doppler_nodes)
    }

    fn check(&self, out: &mut Vec<String>) {
        if !(self.length > 0.0) {
            out.push(format!("length must be > 0 m (got {})", self.length));
        }
        if !(self.optical_depth >= 0.0) {
            out.push(format!("optical_depth must be >= 0 (got {})", self.optical_depth));
        }
        if !(self.gamma20 > 0.0) {
            out.push(format!("gamma20 must be > 0 rad/s (got {})", self.gamma20));
        }
        if !(self.gamma10 >= 0.0) {
            out.push(format!("gamma10 must be >= 0 rad/s (got {})", self.gamma10));
        }
        if !(self.doppler_fwhm >= 0.0) {
            out.push(format!("doppler_fwhm must be >= 0 rad/s (got {})", self.doppler_fwhm));
        }
        if self.doppler_fwhm > 0.0 && self.doppler_nodes == 0 {
            out.push("doppler_fwhm > 0 requires doppler_nodes >= 1".into());
        }
    }
}

/// One plateau of a control schedule with smooth entry.
///
/// The control sits at `level` (fraction of the nominal Rabi frequency)
/// over `[t_start, t_end]`. Transitions into and out of the plateau are
/// raised-cosine blends of width `ramp_time` centered on the boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSegment {
    pub t_start: f64,
    pub t_end: f64,
    /// Fraction of the nominal control Rabi frequency in [0, 1].
    pub level: f64,
    /// Full duration of the raised-cosine blend at each boundary, seconds.
    pub ramp_time: f64,
}

/// Piecewise control amplitude schedule.
///
/// Outside all segments the control sits at its nominal level (fraction 1);
/// an empty schedule is a constant, always-on control.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlProfile {
    pub segments: Vec<ControlSegment>,
}

/// A level transition at `time`: blend from the previous level to `level`
/// over a raised cosine of width `ramp`.
#[derive(Debug, Clone, Copy)]
struct Transition {
    time: f64,
    level: f64,
    ramp: f64,
}

impl ControlProfile {
    /// Always-on control at the nominal Rabi frequency.
    pub fn constant() -> Self {
        ControlProfile { segments: Vec::new() }
    }

    /// True if some segment drops the control to (essentially) zero.
    pub fn has_off_phase(&self) -> bool {
        self.segments.iter().any(|s| s.level <= 1e-3)
    }

    fn transitions(&self) -> Vec<Transition> {
        let mut ev = Vec::with_capacity(2 * self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            ev.push(Transition {
                time: seg.t_start,
                level: seg.level,
                ramp: seg.ramp_time,
            });
            // A segment's exit returns to the nominal level unless the next
            // segment starts exactly where this one ends, in which case that
            // segment's own entry transition takes over.
            let contiguous = self
                .segments
                .get(i + 1)
                .is_some_and(|n| n.t_start <= seg.t_end);
            if !contiguous {
                ev.push(Transition {
                    time: seg.t_end,
                    level: 1.0,
                    ramp: seg.ramp_time,
                });
            }
        }
        ev
    }

    /// Control amplitude as a fraction of nominal at time `t`.
    pub fn fraction_at(&self, t: f64) -> f64 {
        let mut level = 1.0;
        for tr in self.transitions() {
            let half = 0.5 * tr.ramp;
            if t <= tr.time - half {
                break;
            }
            if t >= tr.time + half || tr.ramp == 0.0 {
                level = tr.level;
                continue;
            }
            let x = (t - (tr.time - half)) / tr.ramp;
            let w = 0.5 - 0.5 * (std::f64::consts::PI * x).cos();
            return level + (tr.level - level) * w;
        }
        level
    }

    /// Level before the first transition (the static-kernel operating point).
    pub fn initial_fraction(&self) -> f64 {
        1.0
    }

    fn check(&self, out: &mut Vec<String>) {
        for (i, seg) in self.segments.iter().enumerate() {
            if !seg.t_start.is_finite() || !seg.t_end.is_finite() {
                out.push(format!("control segment {i}: times must be finite"));
                return;
            }
            if !(seg.t_end > seg.t_start) {
                out.push(format!(
                    "control segment {i}: t_end must exceed t_start (got [{}, {}])",
                    seg.t_start, seg.t_end
                ));
            }
            if !(0.0..=1.0).contains(&seg.level) {
                out.push(format!("control segment {i}: level must lie in [0, 1] (got {})", seg.level));
            }
            if !(seg.ramp_time >= 0.0) {
                out.push(format!("control segment {i}: ramp_time must be >= 0 (got {})", seg.ramp_time));
            }
            if i + 1 < self.segments.len() {
                let next = &self.segments[i + 1];
                if next.t_start < seg.t_end - 1e-12 * seg.t_end.abs().max(1.0) {
                    out.push(format!(
                        "control segments {i} and {} overlap (t_end {} > next t_start {})",
                        i + 1,
                        seg.t_end,
                        next.t_start
                    ));
                }
            }
        }
        // Raised-cosine blends must not overlap: consecutive transitions need
        // at least half of each ramp between them.
        let ev = self.transitions();
        for w in ev.windows(2) {
            let gap = w[1].time - w[0].time;
            let need = 0.5 * (w[0].ramp + w[1].ramp);
            if gap + 1e-15 < need {
                out.push(format!(
                    "control ramps overlap near t = {}: transition spacing {gap} s is below \
                     the combined half-ramps {need} s",
                    w[1].time
                ));
            }
        }
    }
}

/// Control and probe field parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    /// Nominal control Rabi frequency Ω_c in rad/s (≥ 0).
    pub omega_c: f64,
    /// Peak probe Rabi frequency in rad/s.
    pub omega_p_peak: f64,
    /// One-photon detuning Δ in rad/s.
    pub delta_one_photon: f64,
    /// Two-photon detuning δ in rad/s; exactly 0 enforces two-photon resonance.
    pub delta_two_photon: f64,
    /// Time profile of the control amplitude.
    pub control: ControlProfile,
}

impl DriveConfig {
    /// Control Rabi frequency at time `t` under the schedule.
    pub fn control_rabi_at(&self, t: f64) -> f64 {
        self.omega_c * self.control.fraction_at(t)
    }

    /// Static control amplitude used by the steady-state response.
    pub fn static_control_rabi(&self) -> f64 {
        self.omega_c * self.control.initial_fraction()
    }

    fn check(&self, gamma20: f64, out: &mut Vec<String>) {
        if !(self.omega_c >= 0.0) {
            out.push(format!("omega_c must be >= 0 rad/s (got {})", self.omega_c));
        }
        if !(self.omega_p_peak >= 0.0) {
            out.push(format!("omega_p_peak must be >= 0 rad/s (got {})", self.omega_p_peak));
        }
        if !self.delta_one_photon.is_finite() || !self.delta_two_photon.is_finite() {
            out.push("detunings must be finite".into());
        }
        // Weak-probe linearization: probe well below the control. With the
        // control off the medium is two-level and exactly linear in the probe;
        // the bound then compares to the optical linewidth instead.
        let bound = if self.omega_c > 0.0 {
            0.2 * self.omega_c
        } else {
            0.2 * gamma20
        };
        if self.omega_p_peak > bound {
            out.push(format!(
                "weak-probe bound violated: omega_p_peak = {} rad/s exceeds 0.2 x {} = {} rad/s",
                self.omega_p_peak,
                if self.omega_c > 0.0 { "omega_c" } else { "gamma20" },
                bound
            ));
        }
        self.control.check(out);
    }
}

/// Uniform time grid specification: `n` samples covering `[0, span)`.
///
/// Sample k sits at t = k·span/n; the implied discrete Fourier frequencies
/// are ω_j = 2π·j/span with j wrapped to ±n/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub n: usize,
    pub span: f64,
}

impl TimeGrid {
    pub fn dt(&self) -> f64 {
        self.span / self.n as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n).map(|k| k as f64 * dt).collect()
    }

    /// Discrete Fourier frequencies in rad/s, in DFT storage order
    /// (non-negative first, then negative).
    pub fn dft_frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        let d_omega = 2.0 * std::f64::consts::PI / self.span;
        (0..n)
            .map(|j| {
                let j_signed = if j <= (n - 1) / 2 { j } else { j - n };
                j_signed as f64 * d_omega
            })
            .collect()
    }
}

/// Complex probe envelope sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    /// Sample times in seconds, uniformly spaced.
    pub t_grid: Vec<f64>,
    /// Complex Rabi amplitude samples in rad/s.
    pub amplitude: Vec<C64>,
    /// Characteristic duration (intensity FWHM) in seconds.
    pub tau: f64,
}

impl PulseEnvelope {
    pub fn dt(&self) -> f64 {
        if self.t_grid.len() < 2 {
            return 0.0;
        }
        (self.t_grid[self.t_grid.len() - 1] - self.t_grid[0]) / (self.t_grid.len() - 1) as f64
    }

    /// Time-integrated |amplitude|², in rad²/s.
    pub fn energy(&self) -> f64 {
        let terms: Vec<f64> = self.amplitude.iter().map(|a| a.norm_sqr()).collect();
        pairwise_sum(&terms) * self.dt()
    }

    pub fn peak_abs(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    fn check(&self, out: &mut Vec<String>) {
        if self.t_grid.len() != self.amplitude.len() {
            out.push("pulse grid and amplitude lengths differ".into());
            return;
        }
        if self.t_grid.len() < 16 {
            out.push("pulse grid needs at least 16 samples".into());
            return;
        }
        if !(self.tau > 0.0) {
            out.push(format!("pulse tau must be > 0 s (got {})", self.tau));
        }
        let dt = self.dt();
        for w in self.t_grid.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
                out.push("pulse time grid must be uniform".into());
                break;
            }
        }
        let span = dt * self.t_grid.len() as f64;
        if span < 8.0 * self.tau {
            out.push(format!(
                "pulse window too short: span {} s is below 8 x tau = {} s",
                span,
                8.0 * self.tau
            ));
        }
        let peak = self.peak_abs();
        if peak > 0.0 {
            let edge = self.amplitude[0].norm().max(self.amplitude[self.amplitude.len() - 1].norm());
            if edge > 1e-6 * peak {
                out.push(format!(
                    "pulse not negligible at window edges: edge/peak = {:.3e} exceeds 1e-6",
                    edge / peak
                ));
            }
        }
    }
}

/// Scalar observables comparing an output pulse to its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Output/input time-integrated |amplitude|².
    pub energy_transmission: f64,
    /// Shift of the intensity peak, seconds (positive = slowed).
    pub peak_delay: f64,
    /// Output intensity FWHM / input intensity FWHM.
    pub fwhm_ratio: f64,
    /// L / (L/c + peak_delay), m/s.
    pub group_velocity: f64,
    /// Set when the output energy is below 10⁻⁸ of the input and the shape
    /// metrics are dominated by numerical residue.
    pub unreliable: bool,
}

/// Non-fatal regime diagnostics from [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeFlags {
    /// |Δ| ≥ 10·Ω_c: the far-detuned (Raman) operating regime.
    pub far_detuned: bool,
    /// Δ_ac·τ > 1: the control's ac Stark shift accumulates more than one
    /// radian of phase over the pulse.
    pub stark_phase_exceeds_one: bool,
}

/// Build a Gaussian probe pulse with intensity FWHM `tau`, centered at the
/// midpoint of the grid window.
///
/// The amplitude is peak·exp(−(t−t₀)²/2σ²) with σ = τ/(2√ln2) so that
/// |A|² has full width `tau` at half maximum.
pub fn make_gaussian_pulse(tau: f64, peak: f64, grid: &TimeGrid) -> Result<PulseEnvelope> {
    let mut violations = Vec::new();
    if !(tau > 0.0) {
        violations.push(format!("tau must be > 0 s (got {tau})"));
    }
    if !(peak >= 0.0) {
        violations.push(format!("peak amplitude must be >= 0 rad/s (got {peak})"));
    }
    if grid.n < 16 {
        violations.push(format!("time grid needs at least 16 samples (got {})", grid.n));
    }
    if tau > 0.0 && grid.span < 8.0 * tau {
        violations.push(format!(
            "time grid span {} s is below the 8 x tau = {} s minimum for a negligible-edge pulse",
            grid.span,
            8.0 * tau
        ));
    }
    if !violations.is_empty() {
        return Err(Error::Validation { violations });
    }
    let sigma = tau / (2.0 * std::f64::consts::LN_2.sqrt());
    let t_grid = grid.times();
    // The normalized offset is built from the sample index, not the sample
    // time: (j − n/2) is exact in f64, so mirror samples share bitwise-equal
    // |x| and the envelope is symmetric about its center to the last bit.
    let step = grid.dt() / sigma;
    let half = 0.5 * grid.n as f64;
    let amplitude = (0..grid.n)
        .map(|j| {
            let x = (j as f64 - half) * step;
            C64::new(peak * (-0.5 * x * x).exp(), 0.0)
        })
        .collect();
    Ok(PulseEnvelope { t_grid, amplitude, tau })
}

/// ac Stark shift |Ω_c|²/Δ of the ground coherence induced by a detuned
/// control field, signed by the detuning.
pub fn ac_stark_shift(omega_c: f64, delta_one_photon: f64) -> Result<f64> {
    if delta_one_photon == 0.0 {
        return Err(Error::validation(
            "ac Stark shift |omega_c|^2/delta is singular at zero one-photon detuning",
        ));
    }
    Ok(omega_c * omega_c / delta_one_photon)
}

/// Check every hard invariant of a parameter bundle; on success report the
/// non-fatal regime flags.
pub fn validate(
    medium: &MediumParams,
    drive: &DriveConfig,
    pulse: &PulseEnvelope,
) -> Result<RegimeFlags> {
    let mut violations = Vec::new();
    medium.check(&mut violations);
    drive.check(medium.gamma20, &mut violations);
    pulse.check(&mut violations);
    if !violations.is_empty() {
        return Err(Error::Validation { violations });
    }
    let far_detuned = drive.omega_c > 0.0 && drive.delta_one_photon.abs() >= 10.0 * drive.omega_c;
    let stark_phase_exceeds_one = drive.delta_one_photon != 0.0
        && drive.omega_c > 0.0
        && (drive.omega_c * drive.omega_c / drive.delta_one_photon.abs()) * pulse.tau > 1.0;
    Ok(RegimeFlags {
        far_detuned,
        stark_phase_exceeds_one,
    })
}

/// Validate medium and drive invariants only (no pulse at hand).
pub fn validate_medium_drive(medium: &MediumParams, drive: &DriveConfig) -> Result<()> {
    let mut violations = Vec::new();
    medium.check(&mut violations);
    drive.check(medium.gamma20, &mut violations);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation { violations })
    }
}
