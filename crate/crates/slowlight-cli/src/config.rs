//! Configuration: unit-annotated TOML in, SI out, canonical re-emission.
//!
//! Every dimensioned value in a config file is a string `"<number> <unit>"`
//! (`"774 MHz"`, `"7.3 us"`, `"10 cm"`). Frequencies, rates, and detunings
//! convert to *angular* rad/s — a quoted `MHz` is an ordinary frequency and
//! picks up a factor 2π — while `rad/s` passes through untouched; times
//! convert to seconds, lengths to meters. Dimensionless quantities (optical
//! depth, node counts, power multipliers, control levels) are plain TOML
//! numbers. Unknown keys are rejected so a typo cannot silently fall back to
//! a default.
//!
//! [`emit`] writes a fully resolved configuration back in canonical form —
//! SI units only, every float with 17 significant digits — and
//! `resolve(parse(emit(c))) == c` holds bit for bit, which is what makes
//! byte-identical reruns from a manifest's embedded config possible.

use serde::Deserialize;
use slowlight::model::{
    ControlProfile, ControlSegment, DriveConfig, MediumParams, TimeGrid,
};
use slowlight::scenarios::Baseline;

use crate::error::CliError;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Format a float with 17 significant digits (byte-stable round trip).
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}

// --- unit-annotated quantities -------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Angular frequency / rate / detuning, SI rad/s.
    Frequency,
    /// Time, SI seconds.
    Time,
    /// Length, SI meters.
    Length,
}

impl Kind {
    fn si_unit(self) -> &'static str {
        match self {
            Kind::Frequency => "rad/s",
            Kind::Time => "s",
            Kind::Length => "m",
        }
    }

    fn accepted(self) -> &'static str {
        match self {
            Kind::Frequency => "rad/s, Hz, kHz, MHz, GHz",
            Kind::Time => "s, ms, us, ns",
            Kind::Length => "m, cm, mm",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Kind::Frequency, "rad/s") => 1.0,
            (Kind::Frequency, "Hz") => TWO_PI,
            (Kind::Frequency, "kHz") => TWO_PI * 1e3,
            (Kind::Frequency, "MHz") => TWO_PI * 1e6,
            (Kind::Frequency, "GHz") => TWO_PI * 1e9,
            (Kind::Time, "s") => 1.0,
            (Kind::Time, "ms") => 1e-3,
            (Kind::Time, "us") | (Kind::Time, "µs") => 1e-6,
            (Kind::Time, "ns") => 1e-9,
            (Kind::Length, "m") => 1.0,
            (Kind::Length, "cm") => 1e-2,
            (Kind::Length, "mm") => 1e-3,
            _ => return None,
        };
        Some(f)
    }
}

/// Parse `"<number> <unit>"` into SI; errors name the offending key.
fn quantity(key: &str, raw: &str, kind: Kind) -> Result<f64, CliError> {
    let mut parts = raw.split_whitespace();
    let (Some(number), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(CliError::Config(format!(
            "{key}: expected \"<number> <unit>\" (e.g. \"774 MHz\"), got {raw:?}"
        )));
    };
    let value: f64 = number.parse().map_err(|_| {
        CliError::Config(format!("{key}: {number:?} is not a number"))
    })?;
    let factor = kind.factor(unit).ok_or_else(|| {
        CliError::Config(format!(
            "{key}: unknown unit {unit:?}; accepted units: {}",
            kind.accepted()
        ))
    })?;
    Ok(value * factor)
}

/// SI value back to its canonical `"<17-digit number> <SI unit>"` string.
fn quantity_string(value: f64, kind: Kind) -> String {
    format!("\"{} {}\"", fmt_sci(value), kind.si_unit())
}

// --- file schema ---------------------------------------------------------------

/// Raw config file: every field optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    medium: MediumSection,
    #[serde(default)]
    drive: DriveSection,
    #[serde(default)]
    pulse: PulseSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    control: ControlSection,
    #[serde(default)]
    scenario: ScenarioSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediumSection {
    length: Option<String>,
    optical_depth: Option<f64>,
    gamma20: Option<String>,
    gamma10: Option<String>,
    doppler_fwhm: Option<String>,
    doppler_nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveSection {
    omega_c: Option<String>,
    omega_p_peak: Option<String>,
    delta_one_photon: Option<String>,
    delta_two_photon: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseSection {
    tau: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n_t: Option<usize>,
    span: Option<String>,
    n_z: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlSection {
    #[serde(default)]
    segments: Vec<SegmentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSection {
    t_start: String,
    t_end: String,
    level: f64,
    ramp_time: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    target_eit_loss: Option<f64>,
    detunings: Option<Vec<String>>,
    power_multipliers: Option<Vec<f64>>,
}

/// Parse config text; TOML errors carry line/column positions.
pub fn parse(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
}

impl FileConfig {
    /// Apply command-line overrides as if the file had set the values.
    pub fn with_overrides(
        mut self,
        doppler_nodes: Option<usize>,
        grid_t: Option<usize>,
        grid_z: Option<usize>,
    ) -> Self {
        if doppler_nodes.is_some() {
            self.medium.doppler_nodes = doppler_nodes;
        }
        if grid_t.is_some() {
            self.grid.n_t = grid_t;
        }
        if grid_z.is_some() {
            self.grid.n_z = grid_z;
        }
        self
    }
}

// --- resolved configuration ------------------------------------------------------

/// Fully resolved run configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub medium: MediumParams,
    pub drive: DriveConfig,
    /// Probe intensity FWHM in seconds.
    pub pulse_tau: f64,
    pub grid_t: TimeGrid,
    /// z-steps for time-domain runs.
    pub n_z: usize,
    /// On-resonance loss target for the `calibrate` command.
    pub target_eit_loss: f64,
    /// One-photon detunings for `sweep-detuning`, rad/s.
    pub detunings: Vec<f64>,
    /// Control power multipliers for `sweep-power`.
    pub power_multipliers: Vec<f64>,
}

impl Config {
    /// The scenario baseline this configuration describes.
    pub fn baseline(&self) -> Baseline {
        Baseline {
            medium: self.medium.clone(),
            drive: self.drive.clone(),
            pulse_tau: self.pulse_tau,
            grid_t: self.grid_t,
            n_z: self.n_z,
        }
    }
}

/// Default sweep detunings: the operating band 2π×[500, 1000] MHz in
/// 100 MHz steps plus the far point 2π×1.2 GHz.
fn default_detunings() -> Vec<f64> {
    let mut d: Vec<f64> = (5..=10).map(|k| TWO_PI * k as f64 * 100e6).collect();
    d.push(TWO_PI * 1.2e9);
    d
}

/// Fill every unset field from `defaults` and convert to SI.
pub fn resolve(file: &FileConfig, defaults: &Baseline) -> Result<Config, CliError> {
    let m = &file.medium;
    let medium = MediumParams {
        length: match &m.length {
            Some(s) => quantity("medium.length", s, Kind::Length)?,
            None => defaults.medium.length,
        },
        optical_depth: m.optical_depth.unwrap_or(defaults.medium.optical_depth),
        gamma20: match &m.gamma20 {
            Some(s) => quantity("medium.gamma20", s, Kind::Frequency)?,
            None => defaults.medium.gamma20,
        },
        gamma10: match &m.gamma10 {
            Some(s) => quantity("medium.gamma10", s, Kind::Frequency)?,
            None => defaults.medium.gamma10,
        },
        doppler_fwhm: match &m.doppler_fwhm {
            Some(s) => quantity("medium.doppler_fwhm", s, Kind::Frequency)?,
            None => defaults.medium.doppler_fwhm,
        },
        doppler_nodes: m.doppler_nodes.unwrap_or(defaults.medium.doppler_nodes),
    };

    let d = &file.drive;
    let segments = file
        .control
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(ControlSegment {
                t_start: quantity(&format!("control.segments[{i}].t_start"), &s.t_start, Kind::Time)?,
                t_end: quantity(&format!("control.segments[{i}].t_end"), &s.t_end, Kind::Time)?,
                level: s.level,
                ramp_time: quantity(
                    &format!("control.segments[{i}].ramp_time"),
                    &s.ramp_time,
                    Kind::Time,
                )?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let drive = DriveConfig {
        omega_c: match &d.omega_c {
            Some(s) => quantity("drive.omega_c", s, Kind::Frequency)?,
            None => defaults.drive.omega_c,
        },
        omega_p_peak: match &d.omega_p_peak {
            Some(s) => quantity("drive.omega_p_peak", s, Kind::Frequency)?,
            None => defaults.drive.omega_p_peak,
        },
        delta_one_photon: match &d.delta_one_photon {
            Some(s) => quantity("drive.delta_one_photon", s, Kind::Frequency)?,
            None => defaults.drive.delta_one_photon,
        },
        delta_two_photon: match &d.delta_two_photon {
            Some(s) => quantity("drive.delta_two_photon", s, Kind::Frequency)?,
            None => defaults.drive.delta_two_photon,
        },
        control: if segments.is_empty() {
            ControlProfile::constant()
        } else {
            ControlProfile { segments }
        },
    };

    let pulse_tau = match &file.pulse.tau {
        Some(s) => quantity("pulse.tau", s, Kind::Time)?,
        None => defaults.pulse_tau,
    };
    if !(pulse_tau > 0.0) {
        return Err(CliError::Config(format!(
            "pulse.tau must be > 0 s (got {pulse_tau})"
        )));
    }

    let grid_t = TimeGrid {
        n: file.grid.n_t.unwrap_or(defaults.grid_t.n),
        span: match &file.grid.span {
            Some(s) => quantity("grid.span", s, Kind::Time)?,
            None => defaults.grid_t.span,
        },
    };
    if grid_t.n == 0 || !(grid_t.span > 0.0) {
        return Err(CliError::Config(format!(
            "grid: n_t must be >= 1 and span > 0 s (got n_t = {}, span = {})",
            grid_t.n, grid_t.span
        )));
    }
    let n_z = file.grid.n_z.unwrap_or(defaults.n_z);
    if n_z == 0 {
        return Err(CliError::Config("grid.n_z must be >= 1".into()));
    }

    let sc = &file.scenario;
    let target_eit_loss = sc.target_eit_loss.unwrap_or(0.99);
    let detunings = match &sc.detunings {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, s)| quantity(&format!("scenario.detunings[{i}]"), s, Kind::Frequency))
            .collect::<Result<Vec<_>, _>>()?,
        None => default_detunings(),
    };
    let power_multipliers = sc
        .power_multipliers
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 1.5, 2.0]);

    // Hard physical invariants, reported all at once through the library.
    slowlight::model::validate_medium_drive(&medium, &drive).map_err(CliError::from)?;

    Ok(Config {
        medium,
        drive,
        pulse_tau,
        grid_t,
        n_z,
        target_eit_loss,
        detunings,
        power_multipliers,
    })
}

/// Canonical TOML for a resolved configuration: every field explicit, SI
/// units, floats at 17 significant digits. `resolve(parse(emit(c)), _) == c`
/// bit for bit regardless of the defaults passed to `resolve`.
pub fn emit(c: &Config) -> String {
    let mut s = String::new();
    s.push_str("[medium]\n");
    s.push_str(&format!("length = {}\n", quantity_string(c.medium.length, Kind::Length)));
    s.push_str(&format!("optical_depth = {}\n", fmt_sci(c.medium.optical_depth)));
    s.push_str(&format!("gamma20 = {}\n", quantity_string(c.medium.gamma20, Kind::Frequency)));
    s.push_str(&format!("gamma10 = {}\n", quantity_string(c.medium.gamma10, Kind::Frequency)));
    s.push_str(&format!(
        "doppler_fwhm = {}\n",
        quantity_string(c.medium.doppler_fwhm, Kind::Frequency)
    ));
    s.push_str(&format!("doppler_nodes = {}\n", c.medium.doppler_nodes));
    s.push_str("\n[drive]\n");
    s.push_str(&format!("omega_c = {}\n", quantity_string(c.drive.omega_c, Kind::Frequency)));
    s.push_str(&format!(
        "omega_p_peak = {}\n",
        quantity_string(c.drive.omega_p_peak, Kind::Frequency)
    ));
    s.push_str(&format!(
        "delta_one_photon = {}\n",
        quantity_string(c.drive.delta_one_photon, Kind::Frequency)
    ));
    s.push_str(&format!(
        "delta_two_photon = {}\n",
        quantity_string(c.drive.delta_two_photon, Kind::Frequency)
    ));
    s.push_str("\n[pulse]\n");
    s.push_str(&format!("tau = {}\n", quantity_string(c.pulse_tau, Kind::Time)));
    s.push_str("\n[grid]\n");
    s.push_str(&format!("n_t = {}\n", c.grid_t.n));
    s.push_str(&format!("span = {}\n", quantity_string(c.grid_t.span, Kind::Time)));
    s.push_str(&format!("n_z = {}\n", c.n_z));
    s.push_str("\n[scenario]\n");
    s.push_str(&format!("target_eit_loss = {}\n", fmt_sci(c.target_eit_loss)));
    let detunings: Vec<String> = c
        .detunings
        .iter()
        .map(|&v| quantity_string(v, Kind::Frequency))
        .collect();
    s.push_str(&format!("detunings = [{}]\n", detunings.join(", ")));
    let multipliers: Vec<String> = c.power_multipliers.iter().map(|&m| fmt_sci(m)).collect();
    s.push_str(&format!("power_multipliers = [{}]\n", multipliers.join(", ")));
    for seg in &c.drive.control.segments {
        s.push_str("\n[[control.segments]]\n");
        s.push_str(&format!("t_start = {}\n", quantity_string(seg.t_start, Kind::Time)));
        s.push_str(&format!("t_end = {}\n", quantity_string(seg.t_end, Kind::Time)));
        s.push_str(&format!("level = {}\n", fmt_sci(seg.level)));
        s.push_str(&format!("ramp_time = {}\n", quantity_string(seg.ramp_time, Kind::Time)));
    }
    s
}
