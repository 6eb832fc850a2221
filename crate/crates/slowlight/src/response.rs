//! Steady-state linear response of the Λ medium.
//!
//! For a weak probe at envelope frequency ω (offset from the carrier) the
//! complex propagation exponent per unit length is
//!
//! ```text
//!   K(ω) = (κ/2) · D₁₀(ω) / [ D₂₀(ω)·D₁₀(ω) + |Ω_c|²/4 ]
//!   D₂₀(ω) = γ₂₀ − i(Δ + u + δ + ω),      D₁₀(ω) = γ₁₀ − i(δ + ω)
//! ```
//!
//! with κ = OD·γ₂₀/L, so that the amplitude transfer over length L is
//! exp(−K(ω)·L): Re K is attenuation, −Im K the accumulated phase per meter.
//! Doppler broadening replaces Δ by Δ + u per velocity class and averages
//! *K itself* (the polarization) over the thermal distribution — every atom
//! radiates coherently into the probe mode. The two-photon detuning is left
//! unshifted: for co-propagating, near-degenerate beams the two-photon
//! Doppler shift is negligible.
//!
//! Structure of K: at exact two-photon resonance (δ = 0, γ₁₀ = 0) the
//! numerator vanishes at ω = 0 for *every* velocity class, so the medium is
//! perfectly transparent at line center regardless of Δ — on resonance this
//! is the usual transparency window, far off resonance it is the narrow
//! two-photon (Raman) line at ω ≈ Ω_c²/4(Δ+u). The dispersion slope at ω = 0
//! is 2κ/|Ω_c|² in both regimes, giving the group delay 2·OD·γ₂₀/|Ω_c|².
//!
//! Group delay is extracted by central differences with step-halving and
//! Richardson extrapolation rather than an analytic derivative, keeping the
//! kernel expression single-sourced.

use crate::doppler::{KahanC64, VelocityGrid};
use crate::error::{Error, Result};
use crate::model::{validate_medium_drive, DriveConfig, MediumParams};
use crate::{par, C64, C_LIGHT};

/// Sampled response kernel, retaining the parameters that generated it so
/// that derivative quantities can re-evaluate K at off-grid frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseKernel {
    /// Envelope frequency offsets from the probe carrier, rad/s.
    pub omega_grid: Vec<f64>,
    /// Complex propagation exponent per meter at each grid frequency.
    pub k: Vec<C64>,
    /// Generating medium parameters.
    pub medium: MediumParams,
    /// Generating drive parameters (control at its static level).
    pub drive: DriveConfig,
}

/// Evaluate the Doppler-averaged kernel at a single envelope frequency.
///
/// Convenience wrapper that rebuilds the velocity grid per call; use
/// [`response_kernel`] for whole grids.
pub fn kernel_at(medium: &MediumParams, drive: &DriveConfig, omega: f64) -> C64 {
    let grid = medium.velocity_grid();
    kernel_at_with(medium, drive, &grid, omega)
}

fn kernel_at_with(
    medium: &MediumParams,
    drive: &DriveConfig,
    velocity: &VelocityGrid,
    omega: f64,
) -> C64 {
    let kappa = medium.kappa();
    let oc = drive.static_control_rabi();
    let coupling = 0.25 * oc * oc;
    let delta = drive.delta_one_photon;
    let delta2 = drive.delta_two_photon;
    // D₁₀ does not depend on the velocity class.
    let d10 = C64::new(medium.gamma10, -(delta2 + omega));
    let mut acc = KahanC64::new();
    for (&u, &w) in velocity.shifts.iter().zip(&velocity.weights) {
        let d20 = C64::new(medium.gamma20, -(delta + u + delta2 + omega));
        let k = 0.5 * kappa * d10 / (d20 * d10 + coupling);
        acc.add(w * k);
    }
    acc.value()
}

/// Doppler-averaged response kernel on an envelope-frequency grid.
///
/// The control amplitude is taken at its static (initial) schedule level.
pub fn response_kernel(
    medium: &MediumParams,
    drive: &DriveConfig,
    omega_grid: &[f64],
) -> Result<ResponseKernel> {
    validate_medium_drive(medium, drive)?;
    let velocity = medium.velocity_grid();
    let k = par::map(omega_grid, |&omega| {
        kernel_at_with(medium, drive, &velocity, omega)
    });
    Ok(ResponseKernel {
        omega_grid: omega_grid.to_vec(),
        k,
        medium: medium.clone(),
        drive: drive.clone(),
    })
}

/// Frequency scale of the narrowest spectral feature around ω = 0, used to
/// seed the derivative step. The step-halving loop shrinks it further if the
/// seed turns out too coarse.
fn derivative_scale(medium: &MediumParams, drive: &DriveConfig) -> f64 {
    let oc = drive.static_control_rabi();
    let sigma_u = crate::doppler::sigma_from_fwhm(medium.doppler_fwhm);
    let broad = medium.gamma20
        + drive.delta_one_photon.abs()
        + drive.delta_two_photon.abs()
        + 2.0 * sigma_u
        + 0.5 * oc;
    if oc > 0.0 {
        (oc * oc / (4.0 * broad)).min(broad)
    } else {
        broad
    }
}

/// Group delay −L · d(Im K)/dω at ω = 0 (positive = slow light).
///
/// Central differences with step halving: the step is halved until two
/// successive slope estimates agree to 10⁻³ relative, then the Richardson
/// extrapolation of the final pair is returned. Fails with a convergence
/// error if agreement is never reached (cancellation floor).
pub fn group_delay(kernel: &ResponseKernel, length: f64) -> Result<f64> {
    let medium = &kernel.medium;
    let drive = &kernel.drive;
    if medium.optical_depth == 0.0 {
        return Ok(0.0);
    }
    let velocity = medium.velocity_grid();
    let slope_at = |h: f64| -> f64 {
        let kp = kernel_at_with(medium, drive, &velocity, h);
        let km = kernel_at_with(medium, drive, &velocity, -h);
        (kp.im - km.im) / (2.0 * h)
    };
    let mut h = 0.05 * derivative_scale(medium, drive);
    let mut d_prev = slope_at(h);
    for _ in 0..48 {
        h *= 0.5;
        let d = slope_at(h);
        if (d - d_prev).abs() <= 1e-3 * d.abs().max(f64::MIN_POSITIVE) {
            // Richardson extrapolation of the last halving pair.
            let refined = (4.0 * d - d_prev) / 3.0;
            return Ok(-length * refined);
        }
        d_prev = d;
    }
    Err(Error::Convergence {
        message: format!(
            "group-delay derivative did not stabilize under step halving \
             (last step {h:.3e} rad/s); the kernel is too sharp at omega = 0 \
             for finite differences at this parameter set"
        ),
    })
}

/// Group velocity L / (L/c + group_delay), including the vacuum transit.
pub fn group_velocity(kernel: &ResponseKernel, length: f64) -> Result<f64> {
    let delay = group_delay(kernel, length)?;
    Ok(length / (length / C_LIGHT + delay))
}

/// Per-frequency intensity transmission exp(−2·Re K·L) over length L.
pub fn transmission_spectrum(kernel: &ResponseKernel, length: f64) -> Vec<f64> {
    kernel.k.iter().map(|k| (-2.0 * k.re * length).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ControlProfile;
    use approx::assert_relative_eq;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn medium(od: f64, doppler: bool) -> MediumParams {
        MediumParams {
            length: 0.10,
            optical_depth: od,
            gamma20: TWO_PI * 3e6,
            gamma10: 1.0 / 300e-6,
            doppler_fwhm: if doppler { TWO_PI * 560e6 } else { 0.0 },
            doppler_nodes: if doppler { 64 } else { 0 },
        }
    }

    fn drive(omega_c: f64, delta: f64) -> DriveConfig {
        DriveConfig {
            omega_c,
            omega_p_peak: TWO_PI * 1.3e6,
            delta_one_photon: delta,
            delta_two_photon: 0.0,
            control: ControlProfile::constant(),
        }
    }

    #[test]
    fn empty_medium_has_zero_kernel_and_zero_delay() {
        let m = medium(0.0, true);
        let d = drive(TWO_PI * 15e6, TWO_PI * 774e6);
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 1e5).collect();
        let kernel = response_kernel(&m, &d, &grid).unwrap();
        assert!(kernel.k.iter().all(|k| k.norm() == 0.0));
        assert_eq!(group_delay(&kernel, 0.10).unwrap(), 0.0);
        assert_eq!(group_velocity(&kernel, 0.10).unwrap(), C_LIGHT);
        assert!(transmission_spectrum(&kernel, 0.10).iter().all(|&t| t == 1.0));
    }

    #[test]
    fn no_control_reduces_to_the_two_level_lorentzian() {
        // With Ω_c = 0 and δ = 0 the kernel must equal (κ/2)/(γ₂₀ − i(Δ+ω)).
        let m = medium(0.1, false);
        let d = drive(0.0, TWO_PI * 5e6);
        let kappa = m.kappa();
        for omega in [-2e7, -3e6, 0.0, 1e5, 4e7] {
            let k = kernel_at(&m, &d, omega);
            let expect =
                0.5 * kappa / C64::new(m.gamma20, -(d.delta_one_photon + omega));
            assert_relative_eq!(k.re, expect.re, max_relative = 1e-12);
            assert_relative_eq!(k.im, expect.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn resonant_two_level_transmission_is_exp_minus_od() {
        let m = medium(0.1, false);
        let mut d = drive(0.0, 0.0);
        // With the control off the weak-probe bound tightens to 0.2·γ₂₀.
        d.omega_p_peak = TWO_PI * 0.1e6;
        let kernel = response_kernel(&m, &d, &[0.0]).unwrap();
        let t = transmission_spectrum(&kernel, m.length)[0];
        assert_relative_eq!(t, (-0.1_f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn line_center_is_perfectly_transparent_without_ground_decoherence() {
        // γ₁₀ = 0, δ = 0 → K(0) = 0 exactly: the numerator D₁₀(0) vanishes
        // identically for every velocity class and every Δ.
        for doppler in [false, true] {
            for delta in [0.0, TWO_PI * 774e6, -TWO_PI * 300e6] {
                let mut m = medium(800.0, doppler);
                m.gamma10 = 0.0;
                let d = drive(TWO_PI * 15e6, delta);
                let k0 = kernel_at(&m, &d, 0.0);
                assert_eq!(k0.re, 0.0);
                assert_eq!(k0.im, 0.0);
            }
        }
    }

    #[test]
    fn transparency_limit_group_delay_matches_closed_form() {
        // δ = Δ = 0, γ₁₀ = 0, Doppler off: expanding K to first order in ω
        // gives dK/dω|₀ = −2iκ/Ω_c², hence delay = 2·OD·γ₂₀/Ω_c².
        let mut m = medium(800.0, false);
        m.gamma10 = 0.0;
        let d = drive(TWO_PI * 15e6, 0.0);
        let kernel = response_kernel(&m, &d, &[0.0]).unwrap();
        let delay = group_delay(&kernel, m.length).unwrap();
        let expect = 2.0 * m.optical_depth * m.gamma20 / (d.omega_c * d.omega_c);
        assert_relative_eq!(delay, expect, max_relative = 1e-4);
        assert!(delay > 0.0, "slow light must have positive delay");
    }

    #[test]
    fn doubling_control_power_halves_the_delay_in_the_detuned_scheme() {
        let m = medium(800.0, true);
        let d1 = drive(TWO_PI * 15e6, TWO_PI * 774e6);
        let d2 = drive(TWO_PI * 15e6 * std::f64::consts::SQRT_2, TWO_PI * 774e6);
        let k1 = response_kernel(&m, &d1, &[0.0]).unwrap();
        let k2 = response_kernel(&m, &d2, &[0.0]).unwrap();
        let ratio = group_delay(&k2, m.length).unwrap() / group_delay(&k1, m.length).unwrap();
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-2);
    }

    #[test]
    fn group_delay_is_insensitive_to_the_one_photon_detuning() {
        // The dispersion slope 2κ/Ω_c² carries no Δ; delays across the
        // detuned operating range must agree to 1%.
        let m = medium(800.0, true);
        let delays: Vec<f64> = [500e6, 750e6, 1000e6]
            .iter()
            .map(|&d_hz| {
                let d = drive(TWO_PI * 15e6, TWO_PI * d_hz);
                let k = response_kernel(&m, &d, &[0.0]).unwrap();
                group_delay(&k, m.length).unwrap()
            })
            .collect();
        for w in delays.windows(2) {
            assert_relative_eq!(w[0], w[1], max_relative = 1e-2);
        }
    }

    #[test]
    fn detuned_and_resonant_delays_share_the_same_dispersion_slope() {
        let m = medium(800.0, true);
        let k_res = response_kernel(&m, &drive(TWO_PI * 15e6, 0.0), &[0.0]).unwrap();
        let k_det =
            response_kernel(&m, &drive(TWO_PI * 15e6, TWO_PI * 774e6), &[0.0]).unwrap();
        let d_res = group_delay(&k_res, m.length).unwrap();
        let d_det = group_delay(&k_det, m.length).unwrap();
        assert_relative_eq!(d_res, d_det, max_relative = 2e-2);
    }

    #[test]
    fn single_velocity_node_equals_the_unaveraged_kernel() {
        let mut m1 = medium(800.0, true);
        m1.doppler_nodes = 1;
        let m0 = medium(800.0, false);
        let d = drive(TWO_PI * 15e6, TWO_PI * 774e6);
        for omega in [-1e6, 0.0, 3e5, 2e7] {
            let k1 = kernel_at(&m1, &d, omega);
            let k0 = kernel_at(&m0, &d, omega);
            assert_eq!(k1, k0);
        }
    }

    #[test]
    fn doppler_quadrature_is_converged_at_64_nodes() {
        // Doubling 32 → 64 changes K(0) by < 10⁻⁴ relative at the detuned
        // operating point.
        let d = drive(TWO_PI * 15e6, TWO_PI * 774e6);
        let mut m32 = medium(800.0, true);
        m32.doppler_nodes = 32;
        let mut m64 = medium(800.0, true);
        m64.doppler_nodes = 64;
        let k32 = kernel_at(&m32, &d, 0.0);
        let k64 = kernel_at(&m64, &d, 0.0);
        assert!(
            (k32 - k64).norm() < 1e-4 * k64.norm(),
            "32 vs 64 node change {:.3e} too large",
            (k32 - k64).norm() / k64.norm()
        );
    }

    /// Half-depth full width of the transparency window around ω = 0.
    fn window_width(m: &MediumParams, d: &DriveConfig) -> f64 {
        let len = m.length;
        let t_at = |omega: f64| (-2.0 * kernel_at(m, d, omega).re * len).exp();
        let t0 = t_at(0.0);
        // Scan outward for the minimum transmission within the dressed-state
        // splitting, then find the half-depth crossing by bisection.
        let scan_max = d.omega_c.max(m.gamma20);
        let n = 2000;
        let mut t_min = t0;
        for i in 1..=n {
            t_min = t_min.min(t_at(scan_max * i as f64 / n as f64));
        }
        let level = 0.5 * (t0 + t_min);
        let mut lo = 0.0;
        let mut hi = scan_max;
        for i in 1..=n {
            let w = scan_max * i as f64 / n as f64;
            if t_at(w) <= level {
                hi = w;
                lo = scan_max * (i - 1) as f64 / n as f64;
                break;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if t_at(mid) <= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo + hi // full width = 2 × half width
    }

    #[test]
    fn transparency_window_narrows_with_optical_depth() {
        let d = drive(TWO_PI * 15e6, 0.0);
        let widths: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&od| window_width(&medium(od, true), &d))
            .collect();
        assert!(
            widths[0] > widths[1] && widths[1] > widths[2],
            "window FWHM must decrease monotonically with OD: {widths:?}"
        );
    }

    #[test]
    fn kernel_is_passive_at_two_photon_resonance() {
        // Spot check of the no-gain property; the property test sweeps wider.
        let m = medium(3000.0, true);
        let d = drive(TWO_PI * 15e6, TWO_PI * 774e6);
        for omega in [-5e7, -4.6e5, 0.0, 4.6e5, 5e7] {
            assert!(kernel_at(&m, &d, omega).re >= 0.0);
        }
    }
}
