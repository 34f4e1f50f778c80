//! Command-line front end: preset/config ingestion, pipeline
//! orchestration, figure-data emission, and the consistency audit.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical-integrity
//! error, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use ion_cavity::audit::run_audit;
use ion_cavity::dynamics::{
    integrate_langevin, transfer_function_check, unit_energy_gaussian, IntegrationConfig,
    LangevinSystem, Method,
};
use ion_cavity::optimize::{fidelity_scan, maximize_fidelity};
use ion_cavity::params::{load_preset, PresetData, SystemParams, PRESET_NAMES};
use ion_cavity::protocol::{run_protocol, DephasingPolicy, ProtocolErrors};
use ion_cavity::readout::{readout_report, ReadoutSpec};
use ion_cavity::reflection::spectrum_sweep;
use ion_cavity::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "ion-cavity",
    about = "Single rare-earth ion in a one-sided cavity: reflection spectra, \
             detection-protocol fidelities, readout statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Parameter preset name.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// JSON config file; CLI flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for curve-producing commands.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Superposition hold-time multiplier alpha (T_sp = alpha * T_p).
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Pulse duration in microseconds.
    #[arg(long, global = true)]
    t_p_us: Option<f64>,

    /// Detection photon threshold n_M.
    #[arg(long, global = true)]
    n_m: Option<u32>,

    /// Detector efficiency p_det.
    #[arg(long, global = true)]
    p_det: Option<f64>,

    /// Omit the timestamp field for byte-stable output.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived parameters (field, coupling, linewidth, cooperativity, Purcell).
    Derive,
    /// Reflection spectra for the resonant and far-detuned ion (normalized units).
    Spectrum,
    /// Time-domain Langevin integration and steady-state cross-check.
    Dynamics,
    /// Protocol density-matrix pipeline and fidelities at one pulse duration.
    Protocol,
    /// Emission probability, detection efficiency, false positives, cycling.
    Readout,
    /// Fidelity-optimal pulse duration and fidelity-vs-duration scans.
    Optimize,
    /// Recompute every headline number and verdict it against the quoted value.
    Audit,
}

/// File-level configuration; every field is optional and CLI flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    alpha: Option<f64>,
    t_p_us: Option<f64>,
    n_m: Option<u32>,
    p_det: Option<f64>,
    /// Cavity quality-factor override.
    quality_factor: Option<f64>,
    /// Spin dephasing rate in plain Hz (multiplied by 2π on ingestion).
    spin_dephasing_rate_hz: Option<f64>,
    /// Cycling drive Rabi frequency in plain Hz (multiplied by 2π).
    rabi_frequency_hz: Option<f64>,
    n_cyc_override: Option<f64>,
    /// Preparation rotation angle error, rad.
    phi_p: Option<f64>,
    /// Readout rotation angle error, rad.
    phi_r: Option<f64>,
}

/// Fully resolved settings after merging defaults, file, and flags.
struct Settings {
    preset: PresetData,
    alpha: f64,
    t_p: f64,
    n_m: u32,
    p_det: f64,
    rabi_frequency: f64,
    n_cyc_override: Option<f64>,
    spin_rate_override: Option<f64>,
    errors: ProtocolErrors,
}

fn resolve(cli: &Cli) -> Result<Settings, CliError> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("parsing config {}: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };
    let preset_name = cli
        .preset
        .clone()
        .or(file.preset)
        .unwrap_or_else(|| PRESET_NAMES[0].to_string());
    let mut preset = load_preset(&preset_name)?;
    if let Some(q) = file.quality_factor {
        preset.cavity.quality_factor = q;
    }
    if let Some(hz) = file.spin_dephasing_rate_hz {
        preset.spin.spin_dephasing_rate = ion_cavity::constants::TWO_PI * hz;
    }
    preset.cavity.validate()?;
    preset.ion.validate()?;
    preset.spin.validate()?;

    let alpha = cli
        .alpha
        .or(file.alpha)
        .unwrap_or(DephasingPolicy::DEFAULT_MULTIPLIER);
    let t_p_us = cli.t_p_us.or(file.t_p_us).unwrap_or(13.0);
    if !(t_p_us > 0.0) {
        return Err(CliError::Validation(format!(
            "t_p_us must be positive, got {t_p_us}"
        )));
    }
    let n_m = cli.n_m.or(file.n_m).unwrap_or(2);
    let p_det = cli.p_det.or(file.p_det).unwrap_or(0.9);
    let rabi_frequency = file
        .rabi_frequency_hz
        .map(|hz| ion_cavity::constants::TWO_PI * hz)
        .unwrap_or(preset.ion.optical_dephasing_rate);
    let errors = ProtocolErrors {
        prep_angle_error: file.phi_p.unwrap_or(0.0),
        readout_angle_error: file.phi_r.unwrap_or(0.0),
    };
    errors.validate()?;
    Ok(Settings {
        preset,
        alpha,
        t_p: t_p_us * 1e-6,
        n_m,
        p_det,
        rabi_frequency,
        n_cyc_override: file.n_cyc_override,
        spin_rate_override: file
            .spin_dephasing_rate_hz
            .map(|hz| ion_cavity::constants::TWO_PI * hz),
        errors,
    })
}

impl Settings {
    fn policy(&self) -> Result<DephasingPolicy, Error> {
        let policy = DephasingPolicy {
            spin_dephasing_rate: self.preset.spin.spin_dephasing_rate,
            superposition_time_multiplier: self.alpha,
        };
        policy.validate()?;
        Ok(policy)
    }

    fn readout_spec(&self) -> Result<ReadoutSpec, Error> {
        let derived = self.preset.derived()?;
        let spec = ReadoutSpec {
            branching_ratio: self.preset.ion.branching_ratio,
            purcell_factor: derived.purcell_factor,
            detector_efficiency: self.p_det,
            min_photons: self.n_m,
            rabi_frequency: self.rabi_frequency,
            n_cyc_override: self.n_cyc_override,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn eta_det(&self) -> Result<f64, Error> {
        let spec = self.readout_spec()?;
        let report = readout_report(
            &spec,
            self.preset.ion.detuning_offstate,
            self.preset.ion.coupling_ratio_sq,
        )?;
        Ok(report.eta_det)
    }
}

enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::UnknownPreset { .. }
            | Error::RegimeViolation(_)
            | Error::StepSize(_) => CliError::Validation(e.to_string()),
            Error::NumericalIntegrity(_) | Error::UnboundedOptimum(_) | Error::NonUnimodal(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

/// RFC-4180 field quoting: wrap and double quotes when the field contains
/// a comma, quote, or line break.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn timestamp(cli: &Cli) -> Option<u64> {
    if cli.no_timestamp {
        None
    } else {
        Some(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        )
    }
}

fn to_pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("report serialization cannot fail")
}

fn cmd_derive(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    let derived = settings.preset.derived()?;
    let report = json!({
        "preset": settings.preset.name,
        "cavity": settings.preset.cavity,
        "ion": settings.preset.ion,
        "spin": settings.preset.spin,
        "derived": derived,
        "generated_at_unix_s": timestamp(cli),
    });
    emit(&cli.out, &to_pretty(&report))
}

fn cmd_spectrum(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    // normalized units (g = 1): kappa = 10g, gamma = 0.01g, Delta = 20g
    let (g, kappa, gamma, big_delta) = (1.0, 10.0, 0.01, 20.0);
    let range = (-30.0, 30.0);
    let n = 1201;
    let resonant = spectrum_sweep(0.0, g, kappa, gamma, range, n)?;
    let detuned = spectrum_sweep(big_delta, g, kappa, gamma, range, n)?;
    for amp in resonant.iter().chain(&detuned) {
        if amp.value.norm() > 1.0 + 1e-9 {
            return Err(CliError::Numerical(format!(
                "passivity violated at delta = {}: |r| = {}",
                amp.detuning,
                amp.value.norm()
            )));
        }
    }
    match cli.format {
        Format::Csv => {
            let mut lines = vec![csv_line(&[
                "case".into(),
                "delta_over_g".into(),
                "re".into(),
                "im".into(),
                "abs".into(),
                "phase_rad".into(),
            ])];
            for (case, sweep) in [("resonant", &resonant), ("detuned", &detuned)] {
                for a in sweep {
                    lines.push(csv_line(&[
                        case.to_string(),
                        format!("{}", a.detuning),
                        format!("{}", a.value.re),
                        format!("{}", a.value.im),
                        format!("{}", a.value.norm()),
                        format!("{}", a.value.arg()),
                    ]));
                }
            }
            emit(&cli.out, &lines.join("\n"))
        }
        Format::Json => {
            let report = json!({
                "normalized_units": {"g": g, "kappa": kappa, "gamma": gamma,
                                     "ion_detuning": big_delta},
                "resonant": resonant,
                "detuned": detuned,
                "generated_at_unix_s": timestamp(cli),
            });
            let _ = settings;
            emit(&cli.out, &to_pretty(&report))
        }
    }
}

fn cmd_dynamics(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    // normalized bad-cavity system; the integrator is a cross-check on
    // the adiabatic formulas, not a preset-scale solver
    let system = LangevinSystem {
        coupling_rate: 1.0,
        cavity_linewidth: 10.0,
        optical_dephasing_rate: 0.01,
        ion_detuning: 0.0,
    };
    let (pulse, t_span) = unit_energy_gaussian(100.0, 0.0, 12.0);
    let cfg = IntegrationConfig {
        dt: 4e-3,
        t_span,
        method: Method::Rk4,
    };
    let trace = integrate_langevin(&system, &pulse, &cfg)?;
    let transfer = transfer_function_check(&system, &[0.0, 2.0, -5.0, 10.0, -20.0])?;
    let max_rel_err = transfer
        .iter()
        .map(|p| p.relative_error)
        .fold(0.0, f64::max);
    let scattered = trace.scattered_energy(system.optical_dephasing_rate);
    match cli.format {
        Format::Csv => {
            let mut lines = vec![csv_line(&[
                "time".into(),
                "in_re".into(),
                "in_im".into(),
                "out_re".into(),
                "out_im".into(),
                "cavity_abs".into(),
                "atomic_abs".into(),
            ])];
            for i in 0..trace.times.len() {
                lines.push(csv_line(&[
                    format!("{}", trace.times[i]),
                    format!("{}", trace.input[i].re),
                    format!("{}", trace.input[i].im),
                    format!("{}", trace.output[i].re),
                    format!("{}", trace.output[i].im),
                    format!("{}", trace.cavity_amplitude[i].norm()),
                    format!("{}", trace.atomic_amplitude[i].norm()),
                ]));
            }
            emit(&cli.out, &lines.join("\n"))
        }
        Format::Json => {
            let report = json!({
                "system": system,
                "pulse_duration": pulse.t_p,
                "input_energy": trace.input_energy(),
                "output_energy": trace.output_energy(),
                "scattered_energy": scattered,
                "residual_excitation": trace.residual_excitation(),
                "transfer_function": transfer,
                "transfer_max_relative_error": max_rel_err,
                "scattered_fraction_first_order_2_over_c":
                    2.0 * system.cavity_linewidth * system.optical_dephasing_rate
                        / (system.coupling_rate * system.coupling_rate),
                "generated_at_unix_s": timestamp(cli),
            });
            let _ = settings;
            emit(&cli.out, &to_pretty(&report))
        }
    }
}

fn cmd_protocol(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    let params = settings.preset.system_params()?;
    let policy = settings.policy()?;
    let eta_det = settings.eta_det()?;
    let run = run_protocol(&params, &policy, &settings.errors, eta_det, settings.t_p)?;
    let report = json!({
        "preset": settings.preset.name,
        "pulse_duration_s": settings.t_p,
        "alpha": settings.alpha,
        "eta_det": eta_det,
        "run": run,
        "generated_at_unix_s": timestamp(cli),
    });
    emit(&cli.out, &to_pretty(&report))
}

fn cmd_readout(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    let spec = settings.readout_spec()?;
    let report = readout_report(
        &spec,
        settings.preset.ion.detuning_offstate,
        settings.preset.ion.coupling_ratio_sq,
    )?;
    let out = json!({
        "preset": settings.preset.name,
        "spec": spec,
        "report": report,
        "generated_at_unix_s": timestamp(cli),
    });
    emit(&cli.out, &to_pretty(&out))
}

fn preset_scan_setup(
    name: &str,
    alpha: f64,
    p_det: f64,
    n_m: u32,
    spin_rate_override: Option<f64>,
) -> Result<(SystemParams, DephasingPolicy, f64), Error> {
    let data = load_preset(name)?;
    let params = data.system_params()?;
    let policy = DephasingPolicy {
        spin_dephasing_rate: spin_rate_override.unwrap_or(data.spin.spin_dephasing_rate),
        superposition_time_multiplier: alpha,
    };
    policy.validate()?;
    let derived = data.derived()?;
    let p_cav =
        ion_cavity::readout::cavity_emission_probability(data.ion.branching_ratio, derived.purcell_factor)?;
    let eta = ion_cavity::readout::detection_efficiency(p_cav, p_det, n_m)?;
    Ok((params, policy, eta))
}

fn cmd_optimize(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    let errors = settings.errors;
    let mut optima = serde_json::Map::new();
    let mut curves: Vec<(String, Vec<ion_cavity::optimize::ScanPoint>)> = Vec::new();
    let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 1e-6).collect();
    for name in PRESET_NAMES {
        let (params, policy, eta) =
            preset_scan_setup(
                name,
                settings.alpha,
                settings.p_det,
                settings.n_m,
                settings.spin_rate_override,
            )?;
        let opt = maximize_fidelity(&params, &policy, &errors, eta, None)?;
        optima.insert(
            name.to_string(),
            serde_json::to_value(&opt).expect("optimum serialization cannot fail"),
        );
        curves.push((
            name.to_string(),
            fidelity_scan(&params, &policy, &errors, eta, &grid)?,
        ));
    }
    match cli.format {
        Format::Csv => {
            let mut lines = vec![csv_line(&[
                "preset".into(),
                "t_p_us".into(),
                "fidelity".into(),
            ])];
            for (name, scan) in &curves {
                for p in scan {
                    lines.push(csv_line(&[
                        name.clone(),
                        format!("{}", p.t_p * 1e6),
                        format!("{}", p.fidelity),
                    ]));
                }
            }
            emit(&cli.out, &lines.join("\n"))
        }
        Format::Json => {
            let report = json!({
                "optima": optima,
                "generated_at_unix_s": timestamp(cli),
            });
            emit(&cli.out, &to_pretty(&report))
        }
    }
}

fn cmd_audit(cli: &Cli) -> Result<(), CliError> {
    let report = run_audit()?;
    let out = json!({
        "entries": report.entries,
        "flagged": report.flagged().iter().map(|e| e.quantity.clone()).collect::<Vec<_>>(),
        "generated_at_unix_s": timestamp(cli),
    });
    emit(&cli.out, &to_pretty(&out))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let settings = resolve(cli)?;
    match cli.command {
        Command::Derive => cmd_derive(cli, &settings),
        Command::Spectrum => cmd_spectrum(cli, &settings),
        Command::Dynamics => cmd_dynamics(cli, &settings),
        Command::Protocol => cmd_protocol(cli, &settings),
        Command::Readout => cmd_readout(cli, &settings),
        Command::Optimize => cmd_optimize(cli, &settings),
        Command::Audit => cmd_audit(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}

