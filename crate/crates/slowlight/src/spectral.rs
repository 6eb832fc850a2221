//! Frequency-domain propagation for a static control field, and extraction
//! of pulse observables.
//!
//! For linear response the propagation over length L is a transfer function:
//! analyze the input envelope into spectral components Ã(ω), multiply by
//! exp(−K(ω)·L), and synthesize back. The envelope analysis transform is
//!
//! ```text
//!   Ã(ω) = ∫ A(t) e^{+iωt} dt
//! ```
//!
//! (note the +i sign: with it, a dispersion slope d(Im K)/dω < 0 delays the
//! pulse, matching the group-delay convention). On the discrete grid this is
//! the *inverse*-direction FFT without normalization; synthesis is the
//! forward-direction FFT with a single 1/N. The vacuum phase e^{iωL/c} is
//! deliberately omitted so outputs live in the retarded frame: reported
//! delays are medium-induced only.
//!
//! Pulse metrics interpolate below the grid: peak positions by a three-point
//! parabolic fit of the intensity maximum (grid steps would otherwise
//! dominate the delay error), widths by linear interpolation of the half-max
//! crossings of the intensity profile.

use crate::doppler::pairwise_sum;
use crate::error::{Error, Result};
use crate::model::{Metrics, PulseEnvelope};
use crate::response::ResponseKernel;
use crate::{C64, C_LIGHT};
use rustfft::FftPlanner;

/// Unnormalized analysis spectrum Σₙ A[n]·e^{+2πi·kn/N} on the DFT grid.
pub fn analysis_spectrum(amplitude: &[C64]) -> Vec<C64> {
    let mut buf = amplitude.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf
}

/// Synthesis transform: inverse of [`analysis_spectrum`] (forward FFT / N).
fn synthesize(mut spectrum: Vec<C64>) -> Vec<C64> {
    let n = spectrum.len();
    FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut spectrum);
    let scale = 1.0 / n as f64;
    for v in &mut spectrum {
        *v *= scale;
    }
    spectrum
}

fn check_kernel_grid(pulse: &PulseEnvelope, kernel: &ResponseKernel) -> Result<()> {
    let n = pulse.amplitude.len();
    if kernel.omega_grid.len() != n {
        return Err(Error::validation(format!(
            "kernel grid has {} points but the pulse grid implies {} DFT frequencies",
            kernel.omega_grid.len(),
            n
        )));
    }
    let span = pulse.dt() * n as f64;
    let d_omega = std::f64::consts::TAU / span;
    for (j, &w) in kernel.omega_grid.iter().enumerate() {
        let j_signed = if j <= (n - 1) / 2 { j as f64 } else { j as f64 - n as f64 };
        let expect = j_signed * d_omega;
        if (w - expect).abs() > 1e-9 * d_omega.max(expect.abs()) {
            return Err(Error::validation(format!(
                "kernel not sampled on the pulse grid's DFT frequencies \
                 (index {j}: got {w} rad/s, expected {expect} rad/s)"
            )));
        }
    }
    Ok(())
}

/// Propagate an envelope through a static-control medium of length L.
///
/// The kernel must be evaluated on the DFT frequencies implied by the pulse
/// grid (see [`crate::model::TimeGrid::dft_frequencies`]). Output is in the
/// retarded frame. Fails with a window error when the output is not
/// negligible at the window edges (wrap-around: the grid span is too short
/// for the accumulated delay).
pub fn propagate_spectral(
    pulse: &PulseEnvelope,
    kernel: &ResponseKernel,
    length: f64,
) -> Result<PulseEnvelope> {
    check_kernel_grid(pulse, kernel)?;
    let peak_in = pulse.peak_abs();
    if peak_in > 0.0 {
        let edge = pulse.amplitude[0]
            .norm()
            .max(pulse.amplitude[pulse.amplitude.len() - 1].norm());
        if edge > 1e-3 * peak_in {
            return Err(Error::Window {
                message: format!(
                    "input envelope is not negligible at the window edges \
                     (edge/peak = {:.3e}); enlarge the time-grid span",
                    edge / peak_in
                ),
            });
        }
    }
    let mut spectrum = analysis_spectrum(&pulse.amplitude);
    for (s, &k) in spectrum.iter_mut().zip(&kernel.k) {
        *s *= (-k * length).exp();
    }
    let out = synthesize(spectrum);
    let peak_out = out.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if peak_out > 0.0 {
        let edge = out[0].norm().max(out[out.len() - 1].norm());
        if edge > 1e-3 * peak_out {
            return Err(Error::Window {
                message: format!(
                    "output wraps around the time window (edge/peak = {:.3e}); \
                     enlarge the time-grid span to hold the delayed pulse",
                    edge / peak_out
                ),
            });
        }
    }
    Ok(PulseEnvelope {
        t_grid: pulse.t_grid.clone(),
        amplitude: out,
        tau: pulse.tau,
    })
}

/// Energy transmission through exp(−K·L) computed entirely in the spectral
/// domain via Parseval — immune to time-window wrap-around, so usable even
/// when the delayed pulse would not fit the window.
pub fn kernel_energy_transmission(
    pulse: &PulseEnvelope,
    kernel: &ResponseKernel,
    length: f64,
) -> Result<f64> {
    check_kernel_grid(pulse, kernel)?;
    let spectrum = analysis_spectrum(&pulse.amplitude);
    let power_in: Vec<f64> = spectrum.iter().map(|s| s.norm_sqr()).collect();
    let power_out: Vec<f64> = spectrum
        .iter()
        .zip(&kernel.k)
        .map(|(s, k)| s.norm_sqr() * (-2.0 * k.re * length).exp())
        .collect();
    let denom = pairwise_sum(&power_in);
    if denom == 0.0 {
        return Err(Error::validation("input pulse has zero energy"));
    }
    Ok(pairwise_sum(&power_out) / denom)
}

/// Intensity-peak time via a three-point parabolic fit around the maximum.
pub(crate) fn intensity_peak_time(t: &[f64], intensity: &[f64]) -> f64 {
    let mut k = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in intensity.iter().enumerate() {
        if v > best {
            best = v;
            k = i;
        }
    }
    if k == 0 || k + 1 == intensity.len() {
        return t[k];
    }
    let (y0, y1, y2) = (intensity[k - 1], intensity[k], intensity[k + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return t[k];
    }
    let shift = 0.5 * (y0 - y2) / denom;
    t[k] + shift * (t[1] - t[0])
}

/// Full width at half maximum of an intensity profile by linear
/// interpolation of the half-max crossings.
pub(crate) fn intensity_fwhm(t: &[f64], intensity: &[f64]) -> f64 {
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * peak;
    let first = intensity.iter().position(|&v| v >= half).unwrap();
    let last = intensity.iter().rposition(|&v| v >= half).unwrap();
    let dt = t[1] - t[0];
    let t_lo = if first == 0 {
        t[0]
    } else {
        let (y0, y1) = (intensity[first - 1], intensity[first]);
        t[first - 1] + (half - y0) / (y1 - y0) * dt
    };
    let t_hi = if last + 1 == intensity.len() {
        t[last]
    } else {
        let (y0, y1) = (intensity[last], intensity[last + 1]);
        t[last] + (half - y0) / (y1 - y0) * dt
    };
    t_hi - t_lo
}

/// Compare an output envelope to its input.
pub fn pulse_metrics(
    input: &PulseEnvelope,
    output: &PulseEnvelope,
    length: f64,
) -> Result<Metrics> {
    if input.t_grid.len() != output.t_grid.len()
        || (input.dt() - output.dt()).abs() > 1e-12 * input.dt()
    {
        return Err(Error::validation(
            "input and output envelopes must share one time grid",
        ));
    }
    let e_in = input.energy();
    if e_in == 0.0 {
        return Err(Error::validation("input pulse has zero energy"));
    }
    let e_out = output.energy();
    let energy_transmission = e_out / e_in;
    let unreliable = e_out < 1e-8 * e_in;
    let int_in: Vec<f64> = input.amplitude.iter().map(|a| a.norm_sqr()).collect();
    let int_out: Vec<f64> = output.amplitude.iter().map(|a| a.norm_sqr()).collect();
    let (peak_delay, fwhm_ratio) = if e_out == 0.0 {
        (0.0, 1.0)
    } else {
        let delay = intensity_peak_time(&output.t_grid, &int_out)
            - intensity_peak_time(&input.t_grid, &int_in);
        let widths =
            intensity_fwhm(&output.t_grid, &int_out) / intensity_fwhm(&input.t_grid, &int_in);
        (delay, widths)
    };
    let group_velocity = length / (length / C_LIGHT + peak_delay);
    Ok(Metrics {
        energy_transmission,
        peak_delay,
        fwhm_ratio,
        group_velocity,
        unreliable,
    })
}
