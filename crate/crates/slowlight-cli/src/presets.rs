//! Bundled configuration presets.

/// Far-detuned operating point: 7.3 µs probe pulse through a 10 cm cell at
/// optical depth 800, control 2π×15 MHz, one-photon detuning 2π×774 MHz,
/// Doppler FWHM 2π×560 MHz. This is the configuration behind the `fig2`
/// scheme-comparison traces; it matches the library defaults field for
/// field and exists so the exact numbers are visible (and editable) as a
/// config file.
pub const FIG2_RAMAN: &str = r#"# Far-detuned slow-light operating point.

[medium]
length = "10 cm"
optical_depth = 800.0
gamma20 = "3 MHz"
gamma10 = "3333.3333333333335 rad/s"  # 1/(300 us)
doppler_fwhm = "560 MHz"
doppler_nodes = 64

[drive]
omega_c = "15 MHz"
omega_p_peak = "1.3 MHz"
delta_one_photon = "774 MHz"
delta_two_photon = "0 Hz"

[pulse]
tau = "7.3e-6 s"
"#;

/// Look up a bundled preset by name.
pub fn lookup(name: &str) -> Option<&'static str> {
    match name {
        "fig2_raman" => Some(FIG2_RAMAN),
        _ => None,
    }
}

/// Names for the "unknown preset" error message.
pub const PRESET_NAMES: &[&str] = &["fig2_raman"];
