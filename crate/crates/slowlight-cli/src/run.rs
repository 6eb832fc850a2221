//! Command drivers: each takes the resolved configuration, writes its CSV
//! artifacts plus `manifest.json` into the output directory, and returns.
//!
//! Every command writes one manifest containing the full resolved
//! configuration (both as structured JSON and as canonical TOML text — a
//! run is reproducible from the manifest alone), the tool version, the grid
//! sizes and quadrature order actually used, and every computed metric.

use std::path::Path;

use serde_json::{json, Value};

use slowlight::model::{make_gaussian_pulse, Metrics};
use slowlight::response::{group_delay, group_velocity, response_kernel};
use slowlight::scenarios::{
    calibrate_od, default_storage_schedule, detuning_sweep, power_sweep, scheme_comparison,
    storage_sequence, Baseline, StaticRun, StorageRun,
};
use slowlight::solver::{evolve, GridSpec};
use slowlight::spectral::{propagate_spectral, pulse_metrics};

use crate::config::{emit, Config};
use crate::error::CliError;
use crate::output::{write_csv, write_manifest};

/// The eight commands of the tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Response,
    Propagate,
    Evolve,
    Calibrate,
    Fig2,
    SweepDetuning,
    SweepPower,
    Storage,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Response => "response",
            CommandKind::Propagate => "propagate",
            CommandKind::Evolve => "evolve",
            CommandKind::Calibrate => "calibrate",
            CommandKind::Fig2 => "fig2",
            CommandKind::SweepDetuning => "sweep-detuning",
            CommandKind::SweepPower => "sweep-power",
            CommandKind::Storage => "storage",
        }
    }

    /// Defaults used to fill unset config fields. Storage runs default to
    /// the dedicated time-domain baseline (8192 samples over 48 pulse
    /// widths, 16 velocity nodes); everything else to the spectral scenario
    /// baseline (2¹⁶ samples over 512 pulse widths, 64 nodes).
    pub fn defaults(self) -> Baseline {
        match self {
            CommandKind::Storage => Baseline::for_storage(),
            _ => Baseline::default(),
        }
    }
}

/// Run one command; on success the output directory holds the CSV artifacts
/// and `manifest.json`.
pub fn execute(kind: CommandKind, config: &Config, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", out.display())))?;
    match kind {
        CommandKind::Response => response(config, out),
        CommandKind::Propagate => propagate(config, out),
        CommandKind::Evolve => run_evolve(config, out),
        CommandKind::Calibrate => calibrate(config, out),
        CommandKind::Fig2 => fig2(config, out),
        CommandKind::SweepDetuning => sweep_detuning(config, out),
        CommandKind::SweepPower => sweep_power(config, out),
        CommandKind::Storage => storage(config, out),
    }
}

// --- commands ------------------------------------------------------------------

/// Steady-state response kernel K(ω) on the configured frequency grid.
fn response(config: &Config, out: &Path) -> Result<(), CliError> {
    let kernel = response_kernel(&config.medium, &config.drive, &config.grid_t.dft_frequencies())?;
    let mut rows: Vec<Vec<f64>> = kernel
        .omega_grid
        .iter()
        .zip(&kernel.k)
        .map(|(&w, k)| {
            let transmission = (-2.0 * k.re * config.medium.length).exp();
            vec![w, k.re, k.im, transmission]
        })
        .collect();
    rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("finite frequencies"));
    write_csv(
        &out.join("response.csv"),
        &["omega[rad/s]", "re_k[1/m]", "im_k[1/m]", "intensity_transmission[1]"],
        &rows,
    )?;

    let delay = group_delay(&kernel, config.medium.length)?;
    let velocity = group_velocity(&kernel, config.medium.length)?;
    let k0 = slowlight::response::kernel_at(&config.medium, &config.drive, 0.0);
    let results = json!({
        "kernel_at_line_center": {"re_per_m": k0.re, "im_per_m": k0.im},
        "kernel_delay_s": delay,
        "kernel_group_velocity_m_per_s": velocity,
    });
    finish(CommandKind::Response, config, out, &["response.csv"], results)
}

/// Spectral propagation of the configured pulse through the static medium.
fn propagate(config: &Config, out: &Path) -> Result<(), CliError> {
    let pulse = make_gaussian_pulse(config.pulse_tau, config.drive.omega_p_peak, &config.grid_t)?;
    let kernel = response_kernel(&config.medium, &config.drive, &config.grid_t.dft_frequencies())?;
    let output = propagate_spectral(&pulse, &kernel, config.medium.length)?;
    let metrics = pulse_metrics(&pulse, &output, config.medium.length)?;

    let rows: Vec<Vec<f64>> = pulse
        .t_grid
        .iter()
        .zip(pulse.amplitude.iter().zip(&output.amplitude))
        .map(|(&t, (a, b))| vec![t, a.re, a.im, b.re, b.im])
        .collect();
    write_csv(
        &out.join("propagate.csv"),
        &[
            "t[s]",
            "re_probe_in[rad/s]",
            "im_probe_in[rad/s]",
            "re_probe_out[rad/s]",
            "im_probe_out[rad/s]",
        ],
        &rows,
    )?;

    let delay = group_delay(&kernel, config.medium.length)?;
    let velocity = group_velocity(&kernel, config.medium.length)?;
    let results = json!({
        "kernel_delay_s": delay,
        "kernel_group_velocity_m_per_s": velocity,
        "metrics": metrics_json(&metrics),
    });
    finish(CommandKind::Propagate, config, out, &["propagate.csv"], results)
}

/// Time-domain propagation with the configured control schedule.
fn run_evolve(config: &Config, out: &Path) -> Result<(), CliError> {
    let pulse = make_gaussian_pulse(config.pulse_tau, config.drive.omega_p_peak, &config.grid_t)?;
    let grid = GridSpec { n_z: config.n_z, store_history: false, snapshot_times: Vec::new() };
    let history = evolve(&config.medium, &config.drive, &pulse, &grid)?;
    let metrics = pulse_metrics(&pulse, &history.output, config.medium.length)?;

    let rows: Vec<Vec<f64>> = history
        .t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let a = history.boundary.amplitude[i];
            let b = history.output.amplitude[i];
            vec![t, history.control_trace[i], a.re, a.im, b.re, b.im]
        })
        .collect();
    write_csv(
        &out.join("evolve.csv"),
        &[
            "t[s]",
            "control_rabi[rad/s]",
            "re_probe_in[rad/s]",
            "im_probe_in[rad/s]",
            "re_probe_out[rad/s]",
            "im_probe_out[rad/s]",
        ],
        &rows,
    )?;

    let results = json!({ "metrics": metrics_json(&metrics) });
    finish(CommandKind::Evolve, config, out, &["evolve.csv"], results)
}

/// Bisect the optical depth to the configured on-resonance loss target.
fn calibrate(config: &Config, out: &Path) -> Result<(), CliError> {
    let cal = calibrate_od(config.target_eit_loss, &config.baseline())?;
    write_csv(
        &out.join("calibrate.csv"),
        &["optical_depth[1]", "transmission[1]", "target_transmission[1]", "evaluations[1]"],
        &[vec![
            cal.optical_depth,
            cal.transmission,
            cal.target_transmission,
            cal.evaluations as f64,
        ]],
    )?;
    let results = json!({
        "optical_depth": cal.optical_depth,
        "transmission": cal.transmission,
        "target_transmission": cal.target_transmission,
        "evaluations": cal.evaluations,
    });
    finish(CommandKind::Calibrate, config, out, &["calibrate.csv"], results)
}

/// On-resonance vs far-detuned scheme comparison: two intensity trace CSVs
/// plus all metrics.
fn fig2(config: &Config, out: &Path) -> Result<(), CliError> {
    let cmp = scheme_comparison(&config.baseline(), config.medium.optical_depth)?;
    let trace = |run: &StaticRun| -> Vec<Vec<f64>> {
        cmp.input
            .t_grid
            .iter()
            .zip(cmp.input.amplitude.iter().zip(&run.output.amplitude))
            .map(|(&t, (a, b))| vec![t, a.norm_sqr(), b.norm_sqr()])
            .collect()
    };
    let columns = ["t[s]", "intensity_in[(rad/s)^2]", "intensity_out[(rad/s)^2]"];
    write_csv(&out.join("fig2_on_resonance.csv"), &columns, &trace(&cmp.eit))?;
    write_csv(&out.join("fig2_detuned.csv"), &columns, &trace(&cmp.raman))?;

    let results = json!({
        "optical_depth": cmp.optical_depth,
        "on_resonance": static_run_json(&cmp.eit),
        "detuned": static_run_json(&cmp.raman),
    });
    finish(
        CommandKind::Fig2,
        config,
        out,
        &["fig2_detuned.csv", "fig2_on_resonance.csv"],
        results,
    )
}

/// Pulse and kernel observables across the configured one-photon detunings.
fn sweep_detuning(config: &Config, out: &Path) -> Result<(), CliError> {
    let points =
        detuning_sweep(&config.baseline(), config.medium.optical_depth, &config.detunings)?;
    let mut rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            vec![
                p.delta,
                p.run.metrics.energy_transmission,
                p.run.metrics.peak_delay,
                p.run.metrics.fwhm_ratio,
                p.run.metrics.group_velocity,
                p.run.kernel_delay,
                p.run.kernel_group_velocity,
            ]
        })
        .collect();
    rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("finite detunings"));
    write_csv(
        &out.join("sweep_detuning.csv"),
        &[
            "delta[rad/s]",
            "transmission[1]",
            "peak_delay[s]",
            "fwhm_ratio[1]",
            "group_velocity[m/s]",
            "kernel_delay[s]",
            "kernel_group_velocity[m/s]",
        ],
        &rows,
    )?;

    // The detuning at which the pulse group velocity starts to rise: the
    // smallest Δ whose v_g exceeds the sweep minimum by more than 10%.
    // Null when the sweep stays flat.
    let v_min = rows
        .iter()
        .map(|r| r[4])
        .fold(f64::INFINITY, f64::min);
    let crossover = rows
        .iter()
        .find(|r| r[4] > 1.1 * v_min)
        .map(|r| r[0]);
    let results = json!({
        "points": rows
            .iter()
            .map(|r| json!({
                "delta_rad_per_s": r[0],
                "transmission": r[1],
                "peak_delay_s": r[2],
                "fwhm_ratio": r[3],
                "group_velocity_m_per_s": r[4],
                "kernel_delay_s": r[5],
                "kernel_group_velocity_m_per_s": r[6],
            }))
            .collect::<Vec<_>>(),
        "min_group_velocity_m_per_s": v_min,
        "crossover_delta_rad_per_s": crossover,
    });
    finish(CommandKind::SweepDetuning, config, out, &["sweep_detuning.csv"], results)
}

/// Group velocity vs control power with the linear fit.
fn sweep_power(config: &Config, out: &Path) -> Result<(), CliError> {
    let sweep = power_sweep(
        &config.baseline(),
        config.medium.optical_depth,
        &config.power_multipliers,
    )?;
    let rows: Vec<Vec<f64>> = sweep
        .points
        .iter()
        .map(|p| {
            vec![
                p.multiplier,
                p.omega_c,
                p.run.metrics.energy_transmission,
                p.run.metrics.peak_delay,
                p.run.metrics.fwhm_ratio,
                p.run.metrics.group_velocity,
                p.run.kernel_delay,
                p.run.kernel_group_velocity,
            ]
        })
        .collect();
    write_csv(
        &out.join("sweep_power.csv"),
        &[
            "multiplier[1]",
            "omega_c[rad/s]",
            "transmission[1]",
            "peak_delay[s]",
            "fwhm_ratio[1]",
            "group_velocity[m/s]",
            "kernel_delay[s]",
            "kernel_group_velocity[m/s]",
        ],
        &rows,
    )?;
    let results = json!({
        "slope_m_per_s_per_rad2_s2": sweep.slope,
        "r_squared": sweep.r_squared,
        "intercept_m_per_s": sweep.intercept,
        "intercept_fraction": sweep.intercept_fraction,
    });
    finish(CommandKind::SweepPower, config, out, &["sweep_power.csv"], results)
}

/// Store-and-retrieve comparison of both schemes on one control schedule.
fn storage(config: &Config, out: &Path) -> Result<(), CliError> {
    let base = config.baseline();
    // An explicitly configured schedule wins; otherwise derive the default
    // (switch-off at mid-window plus half the kernel delay, three
    // retrieval windows) from the configuration — deterministically.
    let schedule = if config.drive.control.segments.is_empty() {
        default_storage_schedule(&base, config.medium.optical_depth)?
    } else {
        config.drive.control.clone()
    };
    let seq = storage_sequence(&base, config.medium.optical_depth, &schedule)?;

    let trace = |run: &StorageRun| -> Vec<Vec<f64>> {
        run.history
            .t_grid
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                vec![
                    t,
                    run.history.control_trace[i],
                    run.history.boundary.amplitude[i].norm_sqr(),
                    run.history.output.amplitude[i].norm_sqr(),
                ]
            })
            .collect()
    };
    let columns = [
        "t[s]",
        "control_rabi[rad/s]",
        "intensity_in[(rad/s)^2]",
        "intensity_out[(rad/s)^2]",
    ];
    write_csv(&out.join("storage_on_resonance.csv"), &columns, &trace(&seq.eit))?;
    write_csv(&out.join("storage_detuned.csv"), &columns, &trace(&seq.raman))?;

    let results = json!({
        "schedule_segments": schedule
            .segments
            .iter()
            .map(|s| json!({
                "t_start_s": s.t_start,
                "t_end_s": s.t_end,
                "level": s.level,
                "ramp_time_s": s.ramp_time,
            }))
            .collect::<Vec<_>>(),
        "on_resonance": storage_json(&seq.eit),
        "detuned": storage_json(&seq.raman),
    });
    finish(
        CommandKind::Storage,
        config,
        out,
        &["storage_detuned.csv", "storage_on_resonance.csv"],
        results,
    )
}

// --- manifest helpers ------------------------------------------------------------

fn metrics_json(m: &Metrics) -> Value {
    json!({
        "energy_transmission": m.energy_transmission,
        "peak_delay_s": m.peak_delay,
        "fwhm_ratio": m.fwhm_ratio,
        "group_velocity_m_per_s": m.group_velocity,
        "unreliable": m.unreliable,
    })
}

fn static_run_json(run: &StaticRun) -> Value {
    json!({
        "metrics": metrics_json(&run.metrics),
        "kernel_delay_s": run.kernel_delay,
        "kernel_group_velocity_m_per_s": run.kernel_group_velocity,
    })
}

fn storage_json(run: &StorageRun) -> Value {
    let retrieved: f64 = run.report.windows.iter().map(|w| w.energy_fraction).sum();
    json!({
        "windows": run.report.windows.iter().map(|w| json!({
            "t_start_s": w.t_start,
            "t_end_s": w.t_end,
            "energy_fraction": w.energy_fraction,
            "peak_time_s": w.peak_time,
            "fwhm_s": w.fwhm,
        })).collect::<Vec<_>>(),
        "spin_norm_at_switches": run.report.spin_norm_at_switches.iter().map(|s| json!({
            "t_s": s.t,
            "norm": s.norm,
        })).collect::<Vec<_>>(),
        "leaked_fraction": run.report.leaked_fraction,
        "retrieved_fraction": retrieved,
        "total_output_fraction": run.report.total_output_fraction,
    })
}

fn config_json(c: &Config) -> Value {
    json!({
        "medium": {
            "length_m": c.medium.length,
            "optical_depth": c.medium.optical_depth,
            "gamma20_rad_per_s": c.medium.gamma20,
            "gamma10_rad_per_s": c.medium.gamma10,
            "doppler_fwhm_rad_per_s": c.medium.doppler_fwhm,
            "doppler_nodes": c.medium.doppler_nodes,
        },
        "drive": {
            "omega_c_rad_per_s": c.drive.omega_c,
            "omega_p_peak_rad_per_s": c.drive.omega_p_peak,
            "delta_one_photon_rad_per_s": c.drive.delta_one_photon,
            "delta_two_photon_rad_per_s": c.drive.delta_two_photon,
            "control_segments": c.drive.control.segments.iter().map(|s| json!({
                "t_start_s": s.t_start,
                "t_end_s": s.t_end,
                "level": s.level,
                "ramp_time_s": s.ramp_time,
            })).collect::<Vec<_>>(),
        },
        "pulse": {"tau_s": c.pulse_tau},
        "grid": {"n_t": c.grid_t.n, "span_s": c.grid_t.span, "n_z": c.n_z},
        "scenario": {
            "target_eit_loss": c.target_eit_loss,
            "detunings_rad_per_s": c.detunings.clone(),
            "power_multipliers": c.power_multipliers.clone(),
        },
    })
}

fn finish(
    kind: CommandKind,
    config: &Config,
    out: &Path,
    outputs: &[&str],
    results: Value,
) -> Result<(), CliError> {
    let manifest = json!({
        "command": kind.name(),
        "config": config_json(config),
        "config_toml": emit(config),
        "grid": {
            "n_t": config.grid_t.n,
            "span_s": config.grid_t.span,
            "dt_s": config.grid_t.dt(),
            "n_z": config.n_z,
            "doppler_nodes": config.medium.doppler_nodes,
        },
        "outputs": outputs,
        "results": results,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_manifest(&out.join("manifest.json"), &manifest)
}
