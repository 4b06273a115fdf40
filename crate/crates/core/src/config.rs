//! Run configuration in a flat INI dialect.
//!
//! ```text
//! # comment (also ';')
//! [spin]
//! hyperfine_a = 1.4754e9
//! ```
//!
//! Sections and keys are fixed; anything unknown, duplicated or unparsable is
//! rejected with its line number. Every key is optional. Units are SI (Hz, T,
//! m, s, A, rad).

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::echo::{DriveConfig, Normalization, RabiModel, DEFAULT_TAU_PI};
use crate::error::{Error, Result};
use crate::fieldmap::{CpwGeometry, FieldSample, ImplantRegion};
use crate::spectro::{EchoTrain, Lineshape};
use crate::spin::SpinSystem;
use crate::transitions::DEFAULT_MIN_MEL;

/// Whether the Rabi angle carries the transition matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RabiMode {
    #[default]
    Bare,
    MatrixElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSettings {
    /// `None`: matched to the pi/2 circular field.
    pub b1_dielectric: Option<f64>,
    /// `None`: mean CPW field equal to the matched field.
    pub b1_cpw_scale: Option<f64>,
    /// Relative phase for single-setting commands; sweeps ignore it.
    pub phase: f64,
    pub tau_pi: f64,
    /// `None`: use the spin system's `g_electron`.
    pub g_drive: Option<f64>,
    pub rabi: RabiMode,
    pub normalization: Normalization,
}

impl Default for DriveSettings {
    fn default() -> Self {
        Self {
            b1_dielectric: None,
            b1_cpw_scale: None,
            // equal circular components: both lines excited
            phase: std::f64::consts::FRAC_PI_2,
            tau_pi: DEFAULT_TAU_PI,
            g_drive: None,
            rabi: RabiMode::Bare,
            normalization: Normalization::PerPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSettings {
    pub field_b0: f64,
    pub excitation_freq: f64,
    /// Half width of the search window around the excitation, Hz.
    pub window: f64,
    pub min_mel: f64,
    pub linewidth: f64,
    pub lineshape: Lineshape,
    pub duration: f64,
    pub dt: f64,
    pub zero_pad: usize,
    pub train: EchoTrain,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            field_b0: 50.19e-3,
            excitation_freq: 7.0805e9,
            window: 10e6,
            min_mel: DEFAULT_MIN_MEL,
            linewidth: 300e3,
            lineshape: Lineshape::Gaussian,
            duration: 40e-6,
            dt: 10e-9,
            zero_pad: 8,
            train: EchoTrain::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spin: SpinSystem,
    pub geometry: CpwGeometry,
    pub implant: ImplantRegion,
    pub n_lateral: usize,
    pub n_depth: usize,
    pub drive: DriveSettings,
    pub spectrum: SpectrumSettings,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spin: SpinSystem::bismuth(),
            geometry: CpwGeometry::default(),
            implant: ImplantRegion::default(),
            n_lateral: 32,
            n_depth: 8,
            drive: DriveSettings::default(),
            spectrum: SpectrumSettings::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse '{raw}' for '{key}'"),
    })
}

fn parsed<T: FromStr<Err = Error>>(line: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|e: Error| Error::Config {
        line,
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Data {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen = HashSet::new();
        for (k, raw_line) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw_line.trim();
            if content.is_empty() || content.starts_with('#') || content.starts_with(';') {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    message: format!("malformed section header '{content}'"),
                })?;
                let name = name.trim();
                if !matches!(
                    name,
                    "spin" | "geometry" | "implant" | "drive" | "spectrum" | "output"
                ) {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown section [{name}]"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, val) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, val) = (key.trim(), val.trim());
            let sec = section.as_deref().ok_or_else(|| Error::Config {
                line,
                message: format!("key '{key}' appears before any section"),
            })?;
            if !seen.insert(format!("{sec}.{key}")) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key '{key}' in [{sec}]"),
                });
            }
            cfg.set(sec, key, val, line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, sec: &str, key: &str, v: &str, line: usize) -> Result<()> {
        let (s, g, i, d, sp) = (
            &mut self.spin,
            &mut self.geometry,
            &mut self.implant,
            &mut self.drive,
            &mut self.spectrum,
        );
        match (sec, key) {
            ("spin", "electron_spin") => s.electron_spin = parsed(line, v)?,
            ("spin", "nuclear_spin") => s.nuclear_spin = parsed(line, v)?,
            ("spin", "hyperfine_a") => s.hyperfine_a = value(line, key, v)?,
            ("spin", "g_electron") => s.g_electron = value(line, key, v)?,
            ("spin", "gyromag_nuclear") => s.gyromag_nuclear = value(line, key, v)?,

            ("geometry", "center_width") => g.center_width = value(line, key, v)?,
            ("geometry", "gap_width") => g.gap_width = value(line, key, v)?,
            ("geometry", "ground_width") => g.ground_width = value(line, key, v)?,
            ("geometry", "film_thickness") => g.film_thickness = value(line, key, v)?,
            ("geometry", "drive_current") => g.drive_current_total = value(line, key, v)?,
            ("geometry", "profile") => g.profile = parsed(line, v)?,
            ("geometry", "filaments_per_strip") => g.filaments_per_strip = value(line, key, v)?,

            ("implant", "strip_width") => i.strip_width = value(line, key, v)?,
            ("implant", "strip_length") => i.strip_length = value(line, key, v)?,
            ("implant", "depth_min") => i.depth_min = value(line, key, v)?,
            ("implant", "depth_max") => i.depth_max = value(line, key, v)?,
            ("implant", "lateral_center") => i.lateral_center = Some(value(line, key, v)?),
            ("implant", "n_lateral") => self.n_lateral = value(line, key, v)?,
            ("implant", "n_depth") => self.n_depth = value(line, key, v)?,

            ("drive", "b1_dielectric") => d.b1_dielectric = Some(value(line, key, v)?),
            ("drive", "b1_cpw_scale") => d.b1_cpw_scale = Some(value(line, key, v)?),
            ("drive", "phase") => d.phase = value(line, key, v)?,
            ("drive", "tau_pi") => d.tau_pi = value(line, key, v)?,
            ("drive", "g_drive") => d.g_drive = Some(value(line, key, v)?),
            ("drive", "rabi") => {
                d.rabi = match v {
                    "bare" => RabiMode::Bare,
                    "matrix-element" => RabiMode::MatrixElement,
                    _ => {
                        return Err(Error::Config {
                            line,
                            message: format!("rabi must be 'bare' or 'matrix-element', got '{v}'"),
                        })
                    }
                }
            }
            ("drive", "normalization") => {
                d.normalization = parse_normalization(v).ok_or_else(|| Error::Config {
                    line,
                    message: format!("normalization must be per-point, global or none, got '{v}'"),
                })?
            }

            ("spectrum", "field_b0") => sp.field_b0 = value(line, key, v)?,
            ("spectrum", "excitation_freq") => sp.excitation_freq = value(line, key, v)?,
            ("spectrum", "window") => sp.window = value(line, key, v)?,
            ("spectrum", "min_mel") => sp.min_mel = value(line, key, v)?,
            ("spectrum", "linewidth") => sp.linewidth = value(line, key, v)?,
            ("spectrum", "lineshape") => sp.lineshape = parsed(line, v)?,
            ("spectrum", "duration") => sp.duration = value(line, key, v)?,
            ("spectrum", "dt") => sp.dt = value(line, key, v)?,
            ("spectrum", "zero_pad") => sp.zero_pad = value(line, key, v)?,
            ("spectrum", "train_tau") => sp.train.tau = value(line, key, v)?,
            ("spectrum", "train_echoes") => sp.train.echoes = value(line, key, v)?,

            ("output", "dir") => self.output_dir = PathBuf::from(v),

            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{key}' in [{sec}]"),
                })
            }
        }
        Ok(())
    }

    /// Cross-section checks; any failure is a data error.
    pub fn validate(&self) -> Result<()> {
        self.spin.validate()?;
        self.geometry.validate()?;
        self.implant.validate(&self.geometry)?;
        if self.n_lateral == 0 || self.n_depth == 0 {
            return Err(Error::InvalidParameter(
                "n_lateral and n_depth must be >= 1".into(),
            ));
        }
        let d = &self.drive;
        if !(d.tau_pi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau_pi must be > 0, got {}",
                d.tau_pi
            )));
        }
        if d.b1_dielectric.is_some_and(|b| !(b >= 0.0)) {
            return Err(Error::InvalidParameter("b1_dielectric must be >= 0".into()));
        }
        let sp = &self.spectrum;
        if !(sp.linewidth > 0.0 && sp.dt > 0.0 && sp.duration > 0.0 && sp.window > 0.0) {
            return Err(Error::InvalidParameter(
                "linewidth, dt, duration and window must be > 0".into(),
            ));
        }
        if !(sp.field_b0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectrum field_b0 must be > 0, got {}",
                sp.field_b0
            )));
        }
        Ok(())
    }

    pub fn g_drive(&self) -> f64 {
        self.drive.g_drive.unwrap_or(self.spin.g_electron)
    }

    /// Drive settings with defaults resolved against the donor ensemble.
    pub fn drive_config(&self, samples: &[FieldSample], rabi: RabiModel) -> Result<DriveConfig> {
        let matched = DriveConfig::matched(samples, self.g_drive(), self.drive.tau_pi)?;
        let drive = DriveConfig {
            b1_dielectric: self.drive.b1_dielectric.unwrap_or(matched.b1_dielectric),
            b1_cpw_scale: self.drive.b1_cpw_scale.unwrap_or(matched.b1_cpw_scale),
            phase_phi: self.drive.phase,
            rabi,
            ..matched
        };
        drive.validate()?;
        Ok(drive)
    }
}

pub fn parse_normalization(s: &str) -> Option<Normalization> {
    match s {
        "per-point" => Some(Normalization::PerPoint),
        "global" => Some(Normalization::Global),
        "none" => Some(Normalization::None),
        _ => None,
    }
}
