//! `biclock` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 numerical failure. Outputs are computed in full before anything is
//! written, and each file is renamed into place only once complete.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_normalization, RabiMode, RunConfig};
use crate::csvio::{read_columns, write_csv, Report};
use crate::echo::{
    contrast, ensemble_echo, fit_phase_dependence, phase_grid, phase_sweep, FitParams, FixedDrive,
    Pairing, PhasePoint, RabiModel,
};
use crate::error::Error;
use crate::fieldmap::{cross_section, field_stats, sample_donors, Cpw, FieldSample};
use crate::spectro::{fit_doublet_with, spectrum_from_echo, synthesize_echo, DoubletModel};
use crate::spin::{level_energies, SpinSystem};
use crate::transitions::{
    find_clock_field, list_transitions, matrix_elements, transition_frequency, TransitionData,
    TransitionSpec, CLOCKWISE_HELICITY,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "biclock",
    version,
    about = "Bi donor clock-transition simulator"
)]
pub struct Cli {
    /// INI configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level energies versus field (breit_rabi.csv)
    BreitRabi {
        #[arg(long, default_value_t = 0.0)]
        b_min: f64,
        #[arg(long, default_value_t = 0.2)]
        b_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Field where df/dB vanishes (clock.txt)
    Clock {
        /// allowed, forbidden, or F,mF:F,mF with the upper level first
        #[arg(long, default_value = "allowed")]
        transition: String,
        #[arg(long, default_value_t = 0.010)]
        b_low: f64,
        #[arg(long, default_value_t = 0.200)]
        b_high: f64,
    },
    /// Echo amplitudes versus relative drive phase (phase_sweep.csv)
    PhaseSweep {
        #[arg(long, default_value_t = 25)]
        phases: usize,
        /// per-point, global or none (default from config)
        #[arg(long)]
        normalization: Option<String>,
    },
    /// Fit the echo model to a phase sweep (fit_report.txt, fit_residuals.csv)
    Fit {
        /// CSV with phi_rad, e_forbidden (or e_f_norm), e_allowed (or e_a_norm)
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        #[command(flatten)]
        init: FitInit,
    },
    /// Echo trace, spectrum and doublet fit (echo_trace.csv, spectrum.csv, peaks.txt)
    Spectrum {
        /// Static field, T (default from config)
        #[arg(long)]
        b0: Option<f64>,
    },
    /// CPW field cross-section and donor ensemble (fieldmap.csv, donors.csv, fieldmap_report.txt)
    Fieldmap {
        #[arg(long, default_value_t = 241)]
        nx: usize,
        #[arg(long, default_value_t = 41)]
        nz: usize,
        /// Half width of the cross-section, m
        #[arg(long, default_value_t = 60e-6)]
        x_half: f64,
        #[arg(long, default_value_t = 5e-9)]
        z_min: f64,
        #[arg(long, default_value_t = 2e-6)]
        z_max: f64,
    },
    /// Allowed lines near a frequency (transitions.csv)
    Transitions {
        #[arg(long)]
        b0: Option<f64>,
        /// Window center, Hz (default: excitation frequency)
        #[arg(long)]
        center: Option<f64>,
        /// Window half width, Hz
        #[arg(long)]
        window: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct FitInit {
    /// Initial |B1,D|, T (default: matched drive)
    #[arg(long)]
    pub init_b1_dielectric: Option<f64>,
    #[arg(long)]
    pub init_cpw_scale: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub init_phase_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Summary on success, diagnostic otherwise.
    pub message: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotHermitian { .. }
            | Error::NotConverged { .. }
            | Error::AmbiguousProjection { .. }
            | Error::Labeling(_)
            | Error::InvertedTransition { .. }
            | Error::LabelCrossing { .. }
            | Error::NoSignChange { .. }
            | Error::RootNotFound { .. }
            | Error::ZeroSignal
            | Error::PeakCount(_) => Failure::Numerical(msg),
            Error::InvalidParameter(_)
            | Error::UnknownLabel(_)
            | Error::InsideConductor { .. }
            | Error::ImplantOverlapsConductor { .. }
            | Error::Empty(_)
            | Error::NonFinite(_)
            | Error::Config { .. }
            | Error::Data { .. }
            | Error::Io(_)
            | Error::TraceTooShort { .. } => Failure::Data(msg),
        }
    }
}

type Outcome = std::result::Result<(Vec<PathBuf>, String), Failure>;

/// Parses `args` (program name first) and runs one command.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            return CommandResult {
                exit_code: code,
                artifacts: Vec::new(),
                message: e.render().to_string(),
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> CommandResult {
    let outcome = load_config(cli).and_then(|(cfg, out)| dispatch(&cli.command, &cfg, &out));
    match outcome {
        Ok((artifacts, message)) => CommandResult {
            exit_code: EXIT_OK,
            artifacts,
            message,
        },
        Err(f) => {
            let (exit_code, message) = match f {
                Failure::Usage(m) => (EXIT_USAGE, format!("usage error: {m}")),
                Failure::Data(m) => (EXIT_DATA, format!("data error: {m}")),
                Failure::Numerical(m) => (EXIT_NUMERICAL, format!("numerical failure: {m}")),
            };
            CommandResult {
                exit_code,
                artifacts: Vec::new(),
                message,
            }
        }
    }
}

fn load_config(cli: &Cli) -> std::result::Result<(RunConfig, PathBuf), Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &Path) -> Outcome {
    match cmd {
        Command::BreitRabi {
            b_min,
            b_max,
            points,
        } => cmd_breit_rabi(cfg, out, *b_min, *b_max, *points),
        Command::Clock {
            transition,
            b_low,
            b_high,
        } => cmd_clock(cfg, out, transition, (*b_low, *b_high)),
        Command::PhaseSweep {
            phases,
            normalization,
        } => cmd_phase_sweep(cfg, out, *phases, normalization.as_deref()),
        Command::Fit { data, init } => cmd_fit(cfg, out, data, init),
        Command::Spectrum { b0 } => cmd_spectrum(cfg, out, b0.unwrap_or(cfg.spectrum.field_b0)),
        Command::Fieldmap {
            nx,
            nz,
            x_half,
            z_min,
            z_max,
        } => cmd_fieldmap(cfg, out, (*nx, *nz), *x_half, (*z_min, *z_max)),
        Command::Transitions { b0, center, window } => cmd_transitions(
            cfg,
            out,
            b0.unwrap_or(cfg.spectrum.field_b0),
            center.unwrap_or(cfg.spectrum.excitation_freq),
            window.unwrap_or(cfg.spectrum.window),
        ),
    }
}

fn label_column(l: crate::spin::StateLabel) -> String {
    format!("e_{}_{}_hz", l.f, l.mf)
}

fn cmd_breit_rabi(cfg: &RunConfig, out: &Path, b_min: f64, b_max: f64, points: usize) -> Outcome {
    if !(b_min >= 0.0 && b_min < b_max && b_max.is_finite()) {
        return Err(Failure::Usage(format!(
            "need 0 <= b-min < b-max, got {b_min} and {b_max}"
        )));
    }
    if points < 2 {
        return Err(Failure::Usage(format!(
            "need at least 2 points, got {points}"
        )));
    }
    let labels = cfg.spin.all_labels();
    let mut header = vec!["b0_t".to_string()];
    header.extend(labels.iter().map(|&l| label_column(l)));
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let b = b_min + (b_max - b_min) * k as f64 / (points - 1) as f64;
        let levels = level_energies(&cfg.spin, b)?;
        let mut row = vec![b];
        for l in &labels {
            let e = levels
                .iter()
                .find(|(m, _)| m == l)
                .map(|(_, e)| *e)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            row.push(e);
        }
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let path = write_csv(&out.join("breit_rabi.csv"), &header, &rows)?;
    Ok((
        vec![path],
        format!("{points} fields x {} levels", labels.len()),
    ))
}

fn parse_transition(s: &str, system: &SpinSystem) -> std::result::Result<TransitionSpec, Failure> {
    let t: TransitionSpec = s
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let labels = system.all_labels();
    for l in [t.upper, t.lower] {
        if !labels.contains(&l) {
            return Err(Failure::Usage(format!(
                "state {l} does not exist for this spin system"
            )));
        }
    }
    Ok(t)
}

fn cmd_clock(cfg: &RunConfig, out: &Path, transition: &str, bracket: (f64, f64)) -> Outcome {
    let t = parse_transition(transition, &cfg.spin)?;
    if !(bracket.0 > 0.0 && bracket.0 < bracket.1) {
        return Err(Failure::Usage(format!(
            "need 0 < b-low < b-high, got {} and {}",
            bracket.0, bracket.1
        )));
    }
    let ct = find_clock_field(&cfg.spin, &t, bracket)?;
    let b_ref = cfg.spectrum.field_b0;
    let f_ref = transition_frequency(&cfg.spin, b_ref, &t)?;
    let mut r = Report::new();
    r.text("transition", t)
        .num("b_ct_t", ct.field_bct)
        .num("f_ct_hz", ct.frequency_fct)
        .num("curvature_hz_per_t2", ct.curvature)
        .num("reference_b0_t", b_ref)
        .num("reference_f_hz", f_ref)
        .num("f_above_clock_hz", f_ref - ct.frequency_fct)
        .num("b_distance_t", (ct.field_bct - b_ref).abs());
    let path = r.write(&out.join("clock.txt"))?;
    Ok((
        vec![path],
        format!(
            "B_ct = {:.6} mT, f_ct = {:.6} GHz",
            ct.field_bct * 1e3,
            ct.frequency_fct * 1e-9
        ),
    ))
}

struct Experiment {
    samples: Vec<FieldSample>,
    allowed: TransitionData,
    forbidden: TransitionData,
    pairing: Pairing,
    rabi: RabiModel,
}

fn experiment(cfg: &RunConfig, b0: f64) -> std::result::Result<Experiment, Failure> {
    let samples = sample_donors(&cfg.geometry, &cfg.implant, cfg.n_lateral, cfg.n_depth)?;
    let allowed = matrix_elements(&cfg.spin, b0, &TransitionSpec::bismuth_allowed())?;
    let forbidden = matrix_elements(&cfg.spin, b0, &TransitionSpec::bismuth_forbidden())?;
    let pairing = Pairing::from_transitions(&allowed, &forbidden)?;
    let dominant = |d: &TransitionData| d.mel_sigma_plus.max(d.mel_sigma_minus);
    let rabi = match cfg.drive.rabi {
        RabiMode::Bare => RabiModel::Bare,
        RabiMode::MatrixElement => RabiModel::MatrixElement {
            allowed: dominant(&allowed),
            forbidden: dominant(&forbidden),
        },
    };
    Ok(Experiment {
        samples,
        allowed,
        forbidden,
        pairing,
        rabi,
    })
}

fn cmd_phase_sweep(
    cfg: &RunConfig,
    out: &Path,
    phases: usize,
    normalization: Option<&str>,
) -> Outcome {
    if phases < 2 {
        return Err(Failure::Usage(format!(
            "need at least 2 phases, got {phases}"
        )));
    }
    let norm = match normalization {
        Some(s) => parse_normalization(s)
            .ok_or_else(|| Failure::Usage(format!("unknown normalization '{s}'")))?,
        None => cfg.drive.normalization,
    };
    let ex = experiment(cfg, cfg.spectrum.field_b0)?;
    let drive = cfg.drive_config(&ex.samples, ex.rabi)?;
    let sweep = phase_sweep(&ex.samples, &drive, &phase_grid(phases), norm, ex.pairing)?;
    let rows: Vec<Vec<f64>> = sweep
        .iter()
        .map(|(phi, p)| vec![*phi, p.e_forbidden, p.e_allowed])
        .collect();
    let header: &[&str] = match norm {
        crate::echo::Normalization::PerPoint => &["phi_rad", "e_f_norm", "e_a_norm"],
        _ => &["phi_rad", "e_forbidden", "e_allowed"],
    };
    let csv = write_csv(&out.join("phase_sweep.csv"), header, &rows)?;
    let mut r = Report::new();
    r.num("b1_dielectric_t", drive.b1_dielectric)
        .num("b1_cpw_scale", drive.b1_cpw_scale)
        .num("tau_pi_s", drive.tau_pi)
        .num("g_drive", drive.g_drive)
        .text("allowed_drive", ex.pairing.allowed)
        .text("forbidden_drive", ex.pairing.forbidden())
        .text("clockwise_helicity", format!("{CLOCKWISE_HELICITY:?}"))
        .num("allowed_selectivity", ex.allowed.selectivity())
        .num("forbidden_selectivity", ex.forbidden.selectivity())
        .text("donor_samples", ex.samples.len())
        .num("contrast", contrast(&sweep));
    let rep = r.write(&out.join("phase_sweep_report.txt"))?;
    Ok((vec![csv, rep], format!("{phases} phases")))
}

fn cmd_fit(cfg: &RunConfig, out: &Path, data: &Path, init: &FitInit) -> Outcome {
    let cols = read_columns(
        data,
        &[
            &["phi_rad"],
            &["e_forbidden", "e_f_norm"],
            &["e_allowed", "e_a_norm"],
        ],
    )?;
    let points: Vec<PhasePoint> = (0..cols[0].len())
        .map(|k| PhasePoint {
            phi: cols[0][k],
            e_forbidden: cols[1][k],
            e_allowed: cols[2][k],
        })
        .collect();
    let ex = experiment(cfg, cfg.spectrum.field_b0)?;
    let drive = cfg.drive_config(&ex.samples, ex.rabi)?;
    let start = FitParams {
        b1_dielectric: init.init_b1_dielectric.unwrap_or(drive.b1_dielectric),
        b1_cpw_scale: init.init_cpw_scale.unwrap_or(drive.b1_cpw_scale),
        phase_offset: init.init_phase_offset,
        residual_sse: f64::NAN,
    };
    let fixed = FixedDrive {
        tau_pi: drive.tau_pi,
        g_drive: drive.g_drive,
        rabi: ex.rabi,
        pairing: ex.pairing,
    };
    let fit = fit_phase_dependence(&points, &ex.samples, fixed, start)?;
    let p = fit.params;
    let mut r = Report::new();
    r.num("b1_dielectric_t", p.b1_dielectric)
        .num("b1_cpw_scale", p.b1_cpw_scale)
        .num("phase_offset_rad", p.phase_offset)
        .num("residual_sse", p.residual_sse)
        .num("initial_sse", fit.initial_sse)
        .text("improved", fit.improved)
        .text("degenerate", fit.degenerate)
        .text("iterations", fit.iterations)
        .text("points", points.len())
        .text("allowed_drive", ex.pairing.allowed);
    let rows: Vec<Vec<f64>> = fit
        .residuals
        .iter()
        .map(|&(phi, f, a)| vec![phi, f, a])
        .collect();
    let csv = write_csv(
        &out.join("fit_residuals.csv"),
        &["phi_rad", "residual_forbidden", "residual_allowed"],
        &rows,
    )?;
    let rep = r.write(&out.join("fit_report.txt"))?;
    let mut msg = format!("SSE {:.3e}", p.residual_sse);
    if fit.degenerate {
        msg.push_str(" (degenerate)");
    }
    if !fit.improved {
        msg.push_str(" (no improvement over init)");
    }
    Ok((vec![rep, csv], msg))
}

fn cmd_spectrum(cfg: &RunConfig, out: &Path, b0: f64) -> Outcome {
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Failure::Usage(format!("b0 must be > 0, got {b0}")));
    }
    let sp = &cfg.spectrum;
    let lines = list_transitions(&cfg.spin, b0, sp.excitation_freq, sp.window, sp.min_mel)?;
    if lines.len() != 2 {
        return Err(Failure::Numerical(format!(
            "expected 2 transitions within {:.3e} Hz of {:.6e} Hz at B0 = {b0} T, found {}",
            sp.window,
            sp.excitation_freq,
            lines.len()
        )));
    }
    let ex = experiment(cfg, b0)?;
    let drive = cfg.drive_config(&ex.samples, ex.rabi)?;
    let echo = ensemble_echo(&ex.samples, &drive, ex.pairing)?.normalize()?;

    let allowed = TransitionSpec::bismuth_allowed();
    let weight = |t: &TransitionSpec| {
        if *t == allowed {
            echo.e_allowed
        } else {
            echo.e_forbidden
        }
    };
    let model = DoubletModel {
        offsets: [
            lines[0].1.frequency - sp.excitation_freq,
            lines[1].1.frequency - sp.excitation_freq,
        ],
        amplitudes: [weight(&lines[0].0), weight(&lines[1].0)],
        linewidth_fwhm: sp.linewidth,
        lineshape: sp.lineshape,
        excitation_freq: sp.excitation_freq,
        train: sp.train,
    };
    let trace = synthesize_echo(&model, sp.duration, sp.dt)?;
    let spectrum = spectrum_from_echo(&trace, sp.zero_pad)?;
    let peaks = fit_doublet_with(&spectrum, sp.lineshape)?;

    let trace_rows: Vec<Vec<f64>> = trace
        .times()
        .into_iter()
        .zip(trace.inphase.iter().zip(&trace.quadrature))
        .map(|(t, (i, q))| vec![t, *i, *q])
        .collect();
    let spec_rows: Vec<Vec<f64>> = spectrum
        .freq_axis
        .iter()
        .zip(&spectrum.amplitude)
        .map(|(f, a)| vec![*f, *a])
        .collect();
    let mut r = Report::new();
    r.num("b0_t", b0)
        .num("excitation_freq_hz", sp.excitation_freq);
    for (k, ((t, d), p)) in lines.iter().zip(&peaks).enumerate() {
        let n = k + 1;
        r.text(&format!("line{n}_transition"), t)
            .num(
                &format!("line{n}_model_offset_hz"),
                d.frequency - sp.excitation_freq,
            )
            .num(&format!("line{n}_weight"), weight(t))
            .num(&format!("peak{n}_center_hz"), p.center)
            .num(&format!("peak{n}_fwhm_hz"), p.fwhm)
            .num(&format!("peak{n}_height"), p.height);
    }
    r.num("separation_hz", peaks[1].center - peaks[0].center)
        .num("e_forbidden", echo.e_forbidden)
        .num("e_allowed", echo.e_allowed)
        .num("train_tau_s", sp.train.tau)
        .text("train_echoes", sp.train.echoes)
        .text("lineshape", format!("{:?}", sp.lineshape).to_lowercase());
    let a = write_csv(
        &out.join("echo_trace.csv"),
        &["t_s", "inphase", "quadrature"],
        &trace_rows,
    )?;
    let b = write_csv(
        &out.join("spectrum.csv"),
        &["offset_hz", "amplitude"],
        &spec_rows,
    )?;
    let c = r.write(&out.join("peaks.txt"))?;
    Ok((
        vec![a, b, c],
        format!(
            "separation {:.1} kHz",
            (peaks[1].center - peaks[0].center) * 1e-3
        ),
    ))
}

fn cmd_fieldmap(
    cfg: &RunConfig,
    out: &Path,
    (nx, nz): (usize, usize),
    x_half: f64,
    (z_min, z_max): (f64, f64),
) -> Outcome {
    if nx < 2 || nz < 2 || !(x_half > 0.0) || !(z_min < z_max) {
        return Err(Failure::Usage(
            "need nx, nz >= 2, x-half > 0 and z-min < z-max".into(),
        ));
    }
    let cpw = Cpw::new(&cfg.geometry)?;
    let xs: Vec<f64> = (0..nx)
        .map(|k| -x_half + 2.0 * x_half * k as f64 / (nx - 1) as f64)
        .collect();
    let zs: Vec<f64> = (0..nz)
        .map(|k| z_min + (z_max - z_min) * k as f64 / (nz - 1) as f64)
        .collect();
    let grid = cross_section(&cpw, &xs, &zs);
    let donors = sample_donors(&cfg.geometry, &cfg.implant, cfg.n_lateral, cfg.n_depth)?;
    let stats = field_stats(&donors)?;
    let row = |s: &FieldSample| vec![s.x, s.z, s.bx, s.bz, s.magnitude, s.angle_from_normal];
    let header = ["x_m", "z_m", "bx_t", "bz_t", "b_t", "angle_from_normal_rad"];
    let a = write_csv(
        &out.join("fieldmap.csv"),
        &header,
        &grid.iter().map(row).collect::<Vec<_>>(),
    )?;
    let mut dheader = header.to_vec();
    dheader.push("weight");
    let drows: Vec<Vec<f64>> = donors
        .iter()
        .map(|s| {
            let mut r = row(s);
            r.push(s.weight);
            r
        })
        .collect();
    let b = write_csv(&out.join("donors.csv"), &dheader, &drows)?;
    let mut r = Report::new();
    r.num("drive_current_a", cfg.geometry.drive_current_total)
        .text(
            "profile",
            format!("{:?}", cfg.geometry.profile).to_lowercase(),
        )
        .text("filaments_per_strip", cfg.geometry.filaments_per_strip)
        .text("donor_samples", donors.len())
        .num("mean_b_t", stats.mean)
        .num("std_b_t", stats.std)
        .num("relative_std", stats.relative_std())
        .num("min_b_t", stats.min)
        .num("max_b_t", stats.max)
        .num("mean_angle_from_normal_rad", stats.mean_angle_from_normal);
    let c = r.write(&out.join("fieldmap_report.txt"))?;
    Ok((
        vec![a, b, c],
        format!(
            "{} grid points, donor spread {:.2}%",
            grid.len(),
            100.0 * stats.relative_std()
        ),
    ))
}

fn cmd_transitions(cfg: &RunConfig, out: &Path, b0: f64, center: f64, window: f64) -> Outcome {
    if !(b0 > 0.0) || !(window > 0.0) {
        return Err(Failure::Usage("need b0 > 0 and window > 0".into()));
    }
    let lines = list_transitions(&cfg.spin, b0, center, window, cfg.spectrum.min_mel)?;
    let rows: Vec<Vec<f64>> = lines
        .iter()
        .map(|(t, d)| {
            vec![
                t.upper.f.value(),
                t.upper.mf.value(),
                t.lower.f.value(),
                t.lower.mf.value(),
                d.frequency,
                d.df_db,
                d.mel_sigma_plus,
                d.mel_sigma_minus,
                d.mel_linear_x,
            ]
        })
        .collect();
    let path = write_csv(
        &out.join("transitions.csv"),
        &[
            "upper_f",
            "upper_mf",
            "lower_f",
            "lower_mf",
            "frequency_hz",
            "df_db_hz_per_t",
            "mel_sigma_plus",
            "mel_sigma_minus",
            "mel_linear_x",
        ],
        &rows,
    )?;
    Ok((vec![path], format!("{} transitions", lines.len())))
}
