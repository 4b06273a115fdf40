//! Polarization-resolved echo amplitudes of the allowed/forbidden pair.
//!
//! The CPW and dielectric resonator fields are orthogonal and both normal to
//! `B0`. With relative phase `phi` they split into circular components
//!
//! ```text
//! B_cw,ccw = 1/2 sqrt(B_D² + B_C² ± 2 B_D B_C cos(phi))
//! ```
//!
//! and each donor contributes `B_C · sin³(g muB tau_pi B_sigma / (2 hbar))`
//! to the transition driven by `sigma`, where the `B_C` prefactor is its
//! coupling back to the CPW detector. Ensemble amplitudes are weighted sums
//! over the field-map samples.

use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fieldmap::FieldSample;
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::transitions::{DriveSense, TransitionData};

/// How the Rabi angle depends on the transition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RabiModel {
    /// Bare `g` for both lines.
    #[default]
    Bare,
    /// Angle scaled by each line's dominant circular matrix element
    /// (a free electron spin flip has element 1).
    MatrixElement { allowed: f64, forbidden: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// `|B1,D|`, T.
    pub b1_dielectric: f64,
    /// Multiplies field-map samples (T/A) into tesla.
    pub b1_cpw_scale: f64,
    pub phase_phi: f64,
    pub tau_pi: f64,
    pub g_drive: f64,
    pub rabi: RabiModel,
}

/// Default pi-pulse length, s.
pub const DEFAULT_TAU_PI: f64 = 100e-9;

/// Rabi angle per unit circular field, `g muB tau_pi / (2 hbar)`, rad/T.
pub fn rabi_angle_per_tesla(g: f64, tau_pi: f64) -> f64 {
    let c = PhysicalConstants::CODATA2018;
    g * c.bohr_magneton * tau_pi / (2.0 * c.hbar)
}

/// Circular field amplitude that makes the sine argument `pi/2`.
pub fn matched_circular_field(g: f64, tau_pi: f64) -> f64 {
    0.5 * PI / rabi_angle_per_tesla(g, tau_pi)
}

impl DriveConfig {
    /// Equal dielectric and mean CPW amplitudes, each at the field that gives
    /// a `pi/2` sine argument under pure circular drive.
    pub fn matched(samples: &[FieldSample], g_drive: f64, tau_pi: f64) -> Result<Self> {
        let b = matched_circular_field(g_drive, tau_pi);
        let mean = mean_magnitude(samples)?;
        Ok(Self {
            b1_dielectric: b,
            b1_cpw_scale: b / mean,
            phase_phi: 0.0,
            tau_pi,
            g_drive,
            rabi: RabiModel::Bare,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b1_dielectric >= 0.0 && self.b1_dielectric.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "b1_dielectric must be >= 0, got {}",
                self.b1_dielectric
            )));
        }
        if !(self.tau_pi > 0.0 && self.tau_pi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau_pi must be > 0, got {}",
                self.tau_pi
            )));
        }
        if !(self.b1_cpw_scale.is_finite()
            && self.phase_phi.is_finite()
            && self.g_drive.is_finite())
        {
            return Err(Error::InvalidParameter(
                "drive parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    fn angle_factor(&self, allowed: bool) -> f64 {
        match self.rabi {
            RabiModel::Bare => 1.0,
            RabiModel::MatrixElement {
                allowed: a,
                forbidden: f,
            } => {
                if allowed {
                    a
                } else {
                    f
                }
            }
        }
    }
}

pub fn mean_magnitude(samples: &[FieldSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("field samples"));
    }
    let w: f64 = samples.iter().map(|s| s.weight).sum();
    Ok(samples.iter().map(|s| s.weight * s.magnitude).sum::<f64>() / w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularPair {
    pub b_sigma_cw: f64,
    pub b_sigma_ccw: f64,
}

impl CircularPair {
    pub fn get(&self, sense: DriveSense) -> f64 {
        match sense {
            DriveSense::Clockwise => self.b_sigma_cw,
            DriveSense::Counterclockwise => self.b_sigma_ccw,
        }
    }
}

pub fn circular_components(b1_d: f64, b1_cpw: f64, phi: f64) -> CircularPair {
    let sum = b1_d * b1_d + b1_cpw * b1_cpw;
    let cross = 2.0 * b1_d * b1_cpw * phi.cos();
    CircularPair {
        b_sigma_cw: 0.5 * (sum + cross).max(0.0).sqrt(),
        b_sigma_ccw: 0.5 * (sum - cross).max(0.0).sqrt(),
    }
}

/// One donor's echo contribution, `B_C sin³(g muB tau_pi B_sigma / 2 hbar)`.
pub fn single_spin_echo(drive: &DriveConfig, b1_cpw_i: f64, b_sigma: f64) -> f64 {
    spin_echo(
        rabi_angle_per_tesla(drive.g_drive, drive.tau_pi),
        b1_cpw_i,
        b_sigma,
    )
}

fn spin_echo(k: f64, b1_cpw_i: f64, b_sigma: f64) -> f64 {
    b1_cpw_i * (k * b_sigma).sin().powi(3)
}

/// Which circular sense drives the allowed line; the forbidden line takes
/// the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pairing {
    pub allowed: DriveSense,
}

impl Pairing {
    pub fn from_transitions(allowed: &TransitionData, forbidden: &TransitionData) -> Result<Self> {
        let (a, f) = (allowed.drive_sense(), forbidden.drive_sense());
        if a == f {
            return Err(Error::InvalidParameter(format!(
                "allowed and forbidden lines share the {a} sense"
            )));
        }
        Ok(Self { allowed: a })
    }

    pub fn forbidden(&self) -> DriveSense {
        self.allowed.opposite()
    }

    pub fn swapped(&self) -> Self {
        Self {
            allowed: self.forbidden(),
        }
    }
}

impl Default for Pairing {
    /// Bi at the operating field: the allowed line is `sigma-` dominated.
    fn default() -> Self {
        Self {
            allowed: DriveSense::Counterclockwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPair {
    pub e_forbidden: f64,
    pub e_allowed: f64,
    pub normalized: bool,
}

impl EchoPair {
    pub fn total(&self) -> f64 {
        self.e_forbidden + self.e_allowed
    }

    /// Scales so that `E_f + E_a = 1`.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::ZeroSignal);
        }
        let e_allowed = self.e_allowed / total;
        Ok(Self {
            e_forbidden: 1.0 - e_allowed,
            e_allowed,
            normalized: true,
        })
    }

    fn scaled_raw(&self, by: f64) -> Self {
        Self {
            e_forbidden: self.e_forbidden / by,
            e_allowed: self.e_allowed / by,
            normalized: false,
        }
    }
}

/// Ensemble amplitudes for a drive setting.
pub fn ensemble_echo(
    samples: &[FieldSample],
    drive: &DriveConfig,
    pairing: Pairing,
) -> Result<EchoPair> {
    if samples.is_empty() {
        return Err(Error::Empty("field samples"));
    }
    drive.validate()?;
    let k = rabi_angle_per_tesla(drive.g_drive, drive.tau_pi);
    let (ka, kf) = (k * drive.angle_factor(true), k * drive.angle_factor(false));
    let (mut ea, mut ef) = (0.0, 0.0);
    for s in samples {
        let bc = drive.b1_cpw_scale.abs() * s.magnitude;
        let pair = circular_components(drive.b1_dielectric, bc, drive.phase_phi);
        ea += s.weight * spin_echo(ka, bc, pair.get(pairing.allowed));
        ef += s.weight * spin_echo(kf, bc, pair.get(pairing.forbidden()));
    }
    Ok(EchoPair {
        e_forbidden: ef,
        e_allowed: ea,
        normalized: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `E_f + E_a = 1` at every phase.
    #[default]
    PerPoint,
    /// One factor for the whole sweep: mean of `E_f + E_a` becomes 1.
    Global,
    None,
}

/// `n` phases evenly spanning `[0, 2 pi]`, both ends included.
pub fn phase_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| 2.0 * PI * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn phase_sweep(
    samples: &[FieldSample],
    base: &DriveConfig,
    phases: &[f64],
    normalization: Normalization,
    pairing: Pairing,
) -> Result<Vec<(f64, EchoPair)>> {
    if phases.is_empty() {
        return Err(Error::Empty("phase list"));
    }
    let raw: Vec<(f64, EchoPair)> = phases
        .iter()
        .map(|&phi| {
            let drive = DriveConfig {
                phase_phi: phi,
                ..*base
            };
            ensemble_echo(samples, &drive, pairing).map(|p| (phi, p))
        })
        .collect::<Result<_>>()?;
    match normalization {
        Normalization::None => Ok(raw),
        Normalization::PerPoint => raw
            .into_iter()
            .map(|(phi, p)| p.normalize().map(|p| (phi, p)))
            .collect(),
        Normalization::Global => {
            let mean = raw.iter().map(|(_, p)| p.total()).sum::<f64>() / raw.len() as f64;
            if !(mean > 0.0) {
                return Err(Error::ZeroSignal);
            }
            Ok(raw
                .into_iter()
                .map(|(phi, p)| (phi, p.scaled_raw(mean)))
                .collect())
        }
    }
}

/// Difference between the largest and smallest normalized allowed amplitude.
pub fn contrast(sweep: &[(f64, EchoPair)]) -> f64 {
    let (lo, hi) = sweep
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, p)| {
            let a = p.e_allowed / p.total();
            (lo.min(a), hi.max(a))
        });
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub phi: f64,
    pub e_forbidden: f64,
    pub e_allowed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub b1_dielectric: f64,
    pub b1_cpw_scale: f64,
    /// Model phase is `phi_data - phase_offset`.
    pub phase_offset: f64,
    pub residual_sse: f64,
}

/// Drive settings held fixed during a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedDrive {
    pub tau_pi: f64,
    pub g_drive: f64,
    pub rabi: RabiModel,
    pub pairing: Pairing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: FitParams,
    pub initial_sse: f64,
    /// The fit lowered the SSE below its value at `init`.
    pub improved: bool,
    /// The data do not pin the parameters down (no contrast, or a flat
    /// direction in the residual surface).
    pub degenerate: bool,
    pub iterations: usize,
    /// `(phi, model - data forbidden, model - data allowed)`.
    pub residuals: Vec<(f64, f64, f64)>,
}

/// Amplitude multipliers tried around the initial guess. The model is nearly
/// symmetric under exchanging `B_D` with the mean CPW field, which leaves a
/// second shallow basin; the grid plus the exchanged start reach the right one.
const START_GRID: [f64; 4] = [0.7, 0.85, 1.15, 1.3];

/// Below this SSE the remaining grid starts are skipped.
const EXACT_FIT_SSE: f64 = 1e-24;

struct FitProblem<'a> {
    data: Vec<PhasePoint>,
    samples: &'a [FieldSample],
    fixed: FixedDrive,
}

impl FitProblem<'_> {
    fn model(&self, p: &[f64]) -> Option<Vec<(f64, f64)>> {
        let base = DriveConfig {
            b1_dielectric: p[0].abs(),
            b1_cpw_scale: p[1].abs(),
            phase_phi: 0.0,
            tau_pi: self.fixed.tau_pi,
            g_drive: self.fixed.g_drive,
            rabi: self.fixed.rabi,
        };
        self.data
            .iter()
            .map(|d| {
                let drive = DriveConfig {
                    phase_phi: d.phi - p[2],
                    ..base
                };
                let pair = ensemble_echo(self.samples, &drive, self.fixed.pairing).ok()?;
                let n = pair.normalize().ok()?;
                Some((n.e_forbidden, n.e_allowed))
            })
            .collect()
    }

    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let m = self.model(p)?;
        let mut r = Vec::with_capacity(2 * m.len());
        for ((f, a), d) in m.iter().zip(&self.data) {
            r.push(f - d.e_forbidden);
            r.push(a - d.e_allowed);
        }
        Some(r)
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Fits `(B_D, CPW scale, phase offset)` to normalized phase-sweep data.
///
/// Data are normalized per point before fitting. The fit is deterministic
/// for a given `init` and never returns a higher SSE than `init` has.
pub fn fit_phase_dependence(
    data: &[PhasePoint],
    samples: &[FieldSample],
    fixed: FixedDrive,
    init: FitParams,
) -> Result<FitOutcome> {
    if data.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "need at least 6 phase points, got {}",
            data.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::Empty("field samples"));
    }
    for (k, d) in data.iter().enumerate() {
        if !(d.phi.is_finite() && d.e_forbidden.is_finite() && d.e_allowed.is_finite()) {
            return Err(Error::NonFinite(format!("data point {k}")));
        }
    }
    for v in [init.b1_dielectric, init.b1_cpw_scale, init.phase_offset] {
        if !v.is_finite() {
            return Err(Error::NonFinite("initial parameters".into()));
        }
    }
    let normalized: Vec<PhasePoint> = data
        .iter()
        .map(|d| {
            let s = d.e_forbidden + d.e_allowed;
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "E_f + E_a must be positive at phi = {}",
                    d.phi
                )));
            }
            Ok(PhasePoint {
                phi: d.phi,
                e_forbidden: d.e_forbidden / s,
                e_allowed: d.e_allowed / s,
            })
        })
        .collect::<Result<_>>()?;

    let problem = FitProblem {
        data: normalized,
        samples,
        fixed,
    };
    let mean = mean_magnitude(samples)?;
    let x0 = [init.b1_dielectric, init.b1_cpw_scale, init.phase_offset];
    let matched = matched_circular_field(fixed.g_drive, fixed.tau_pi);
    let scales = [
        x0[0].abs().max(1e-3 * matched),
        x0[1].abs().max(1e-3 * matched / mean),
        1.0,
    ];

    let mut starts = vec![x0];
    starts.push([x0[1] * mean, x0[0] / mean, x0[2]]);
    for &u in &START_GRID {
        for &v in &START_GRID {
            starts.push([x0[0] * u, x0[1] * v, x0[2]]);
        }
    }

    let opts = LmOptions::default();
    let mut best: Option<crate::lsq::LmReport> = None;
    let mut initial_sse = f64::NAN;
    for (k, s) in starts.iter().enumerate() {
        let rep = match levenberg_marquardt(|p| problem.residuals(p), s, &scales, &opts) {
            Ok(r) => r,
            Err(e) if k == 0 => return Err(e),
            Err(_) => continue,
        };
        if k == 0 {
            initial_sse = rep.initial_sse;
        }
        if best.as_ref().is_none_or(|b| rep.sse < b.sse) {
            best = Some(rep);
        }
        if k >= 1 && best.as_ref().is_some_and(|b| b.sse < EXACT_FIT_SSE) {
            break;
        }
    }
    let best = best.expect("first start always yields a report");

    let p = &best.params;
    let model = problem.model(p).ok_or(Error::ZeroSignal)?;
    let (lo, hi) = model
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
            (lo.min(m.1), hi.max(m.1))
        });
    let degenerate = hi - lo < 1e-4 || best.condition > 1e14;
    let residuals = model
        .iter()
        .zip(&problem.data)
        .map(|(m, d)| (d.phi, m.0 - d.e_forbidden, m.1 - d.e_allowed))
        .collect();

    Ok(FitOutcome {
        params: FitParams {
            b1_dielectric: p[0].abs(),
            b1_cpw_scale: p[1].abs(),
            phase_offset: wrap_phase(p[2]),
            residual_sse: best.sse,
        },
        initial_sse,
        improved: best.sse < initial_sse,
        degenerate,
        iterations: best.iterations,
        residuals,
    })
}
