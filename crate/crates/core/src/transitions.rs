//! Transition frequencies, field sensitivities, clock fields and circular
//! polarization matrix elements.
//!
//! Helicity convention: `mel_sigma_plus = |<lower|S+|upper>|` and
//! `mel_sigma_minus = |<lower|S-|upper>|`. Since `<lower|S+|upper>` is the
//! conjugate of `<upper|S-|lower>`, a transition whose upper state has the
//! *smaller* `mF` couples through `S+`. The drive sense that excites a
//! transition is fixed by [`CLOCKWISE_HELICITY`]: transitions dominated by
//! that helicity respond to the clockwise (`+`) circular component of the
//! echo model, the others to the counterclockwise one. Only the pairing is
//! observable, so flipping the constant flips both transitions together.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::roots::brent;
use crate::spin::{build_operators, solve, LabeledEigenSystem, SpinSystem, StateLabel};

/// Central-difference step for field gradients, T.
pub const GRADIENT_STEP: f64 = 10e-6;
/// Root-finder field tolerance, T.
pub const CLOCK_FIELD_TOL: f64 = 1e-7;
pub const CLOCK_MAX_ITER: usize = 60;
/// Default dark-transition cut, relative to the stretched-transition `|<Sx>|`.
pub const DEFAULT_MIN_MEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Helicity {
    Plus,
    Minus,
}

/// Circular drive sense as named by the echo model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveSense {
    Clockwise,
    Counterclockwise,
}

impl DriveSense {
    pub fn opposite(self) -> Self {
        match self {
            Self::Clockwise => Self::Counterclockwise,
            Self::Counterclockwise => Self::Clockwise,
        }
    }
}

impl fmt::Display for DriveSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Clockwise => "clockwise",
            Self::Counterclockwise => "counterclockwise",
        })
    }
}

/// Helicity that the clockwise circular component drives.
pub const CLOCKWISE_HELICITY: Helicity = Helicity::Plus;

impl Helicity {
    pub fn drive_sense(self) -> DriveSense {
        if self == CLOCKWISE_HELICITY {
            DriveSense::Clockwise
        } else {
            DriveSense::Counterclockwise
        }
    }
}

impl fmt::Display for Helicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plus => "sigma+",
            Self::Minus => "sigma-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionSpec {
    pub upper: StateLabel,
    pub lower: StateLabel,
}

impl TransitionSpec {
    pub const fn new(upper: StateLabel, lower: StateLabel) -> Self {
        Self { upper, lower }
    }

    /// Bi `|5,-1> <-> |4,-2>` ("allowed").
    pub const fn bismuth_allowed() -> Self {
        Self::new(StateLabel::new(5, -1), StateLabel::new(4, -2))
    }

    /// Bi `|5,-2> <-> |4,-1>` ("forbidden").
    pub const fn bismuth_forbidden() -> Self {
        Self::new(StateLabel::new(5, -2), StateLabel::new(4, -1))
    }

    /// Highest-`mF` ESR line `|I+S, I+S> <-> |I+S-1, I+S-1>`.
    pub fn stretched(system: &SpinSystem) -> Self {
        let spins = system.total_spins();
        let top = spins[0];
        let next = spins.get(1).copied().unwrap_or(top);
        Self::new(
            StateLabel { f: top, mf: top },
            StateLabel {
                f: next,
                mf: crate::spin::HalfInt::from_twice(top.twice() - 2),
            },
        )
    }

    /// `+1` when the upper state has the larger (or equal) `mF`, else `-1`.
    pub fn orientation(&self) -> f64 {
        if self.upper.mf >= self.lower.mf {
            1.0
        } else {
            -1.0
        }
    }

    fn validate(&self, system: &SpinSystem) -> Result<()> {
        let labels = system.all_labels();
        for l in [self.upper, self.lower] {
            if !labels.contains(&l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        if self.upper == self.lower {
            return Err(Error::InvalidParameter(format!(
                "transition endpoints coincide: {}",
                self.upper
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for TransitionSpec {
    type Err = Error;

    /// `"allowed"`, `"forbidden"` (the Bi pair) or `"F,mF:F,mF"` (upper first).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "allowed" => Ok(Self::bismuth_allowed()),
            "forbidden" => Ok(Self::bismuth_forbidden()),
            other => {
                let (u, l) = other.split_once(':').ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "transition '{other}' must be allowed, forbidden or 'F,mF:F,mF'"
                    ))
                })?;
                Ok(Self::new(u.parse()?, l.parse()?))
            }
        }
    }
}

impl fmt::Display for TransitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <-> {}", self.upper, self.lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionData {
    /// `E_upper - E_lower`, Hz.
    pub frequency: f64,
    /// Effective gyromagnetic ratio, Hz/T; see [`transition_gradient`].
    pub df_db: f64,
    pub mel_sigma_plus: f64,
    pub mel_sigma_minus: f64,
    pub mel_linear_x: f64,
}

impl TransitionData {
    pub fn dominant_helicity(&self) -> Helicity {
        if self.mel_sigma_plus >= self.mel_sigma_minus {
            Helicity::Plus
        } else {
            Helicity::Minus
        }
    }

    /// `max(mel+, mel-) / min(mel+, mel-)`; infinite for a pure helicity.
    pub fn selectivity(&self) -> f64 {
        let hi = self.mel_sigma_plus.max(self.mel_sigma_minus);
        let lo = self.mel_sigma_plus.min(self.mel_sigma_minus);
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn drive_sense(&self) -> DriveSense {
        self.dominant_helicity().drive_sense()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockTransition {
    pub field_bct: f64,
    pub frequency_fct: f64,
    /// `d2f/dB2` at the clock field, Hz/T^2.
    pub curvature: f64,
    pub transition: TransitionSpec,
}

fn frequency_in(sys: &LabeledEigenSystem, t: &TransitionSpec) -> Result<f64> {
    let f = sys.energy(t.upper)? - sys.energy(t.lower)?;
    if f < 0.0 {
        return Err(Error::InvertedTransition {
            upper: t.upper.to_string(),
            lower: t.lower.to_string(),
        });
    }
    Ok(f)
}

pub fn transition_frequency(system: &SpinSystem, b0: f64, t: &TransitionSpec) -> Result<f64> {
    t.validate(system)?;
    frequency_in(&solve(system, b0)?, t)
}

fn raw_frequency(system: &SpinSystem, b0: f64, t: &TransitionSpec) -> Result<f64> {
    let sys = solve(system, b0)?;
    Ok(sys.energy(t.upper)? - sys.energy(t.lower)?)
}

fn central_difference(system: &SpinSystem, b0: f64, t: &TransitionSpec, h: f64) -> Result<f64> {
    Ok((raw_frequency(system, b0 + h, t)? - raw_frequency(system, b0 - h, t)?) / (2.0 * h))
}

/// `d(E_upper - E_lower)/dB` by one Richardson step over central differences
/// at `step` and `step / 2`.
pub fn frequency_slope(system: &SpinSystem, b0: f64, t: &TransitionSpec, step: f64) -> Result<f64> {
    t.validate(system)?;
    if !(step > 0.0 && b0 > step) {
        return Err(Error::InvalidParameter(format!(
            "gradient needs B0 > step (B0 = {b0} T, step = {step} T)"
        )));
    }
    let coarse = central_difference(system, b0, t, step)?;
    let fine = central_difference(system, b0, t, step / 2.0)?;
    // Truncation error on smooth levels is many orders below this; a jump
    // means a label changed identity inside the stencil.
    if (coarse - fine).abs() > 1e-4 * system.electron_zeeman() {
        return Err(Error::LabelCrossing { b0, coarse, fine });
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Effective gyromagnetic ratio of a transition, Hz/T.
///
/// The frequency is oriented by `mF`: this is the field derivative of
/// `E(higher mF) - E(lower mF)`, i.e. `orientation * d(E_upper - E_lower)/dB`.
/// Its sign is the sense of precession that the transition responds to, so
/// the Bi allowed/forbidden pair have opposite signs even though both
/// frequencies fall with field below the clock point.
pub fn transition_gradient(system: &SpinSystem, b0: f64, t: &TransitionSpec) -> Result<f64> {
    Ok(t.orientation() * frequency_slope(system, b0, t, GRADIENT_STEP)?)
}

pub fn find_clock_field(
    system: &SpinSystem,
    t: &TransitionSpec,
    bracket: (f64, f64),
) -> Result<ClockTransition> {
    let (low, high) = bracket;
    if !(low < high) {
        return Err(Error::InvalidParameter(format!(
            "bracket must satisfy low < high, got [{low}, {high}]"
        )));
    }
    let slope = |b: f64| frequency_slope(system, b, t, GRADIENT_STEP);
    let field = brent(slope, low, high, CLOCK_FIELD_TOL, CLOCK_MAX_ITER)?;
    let h = 1e-3;
    let curvature = (slope(field + h)? - slope(field - h)?) / (2.0 * h);
    if curvature == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "df/dB root at {field} T is not an extremum"
        )));
    }
    Ok(ClockTransition {
        field_bct: field,
        frequency_fct: transition_frequency(system, field, t)?,
        curvature,
        transition: *t,
    })
}

struct Elements {
    plus: f64,
    minus: f64,
    x: f64,
}

fn elements(
    sys: &LabeledEigenSystem,
    ops: &crate::spin::SpinOperatorSet,
    t: &TransitionSpec,
) -> Result<Elements> {
    let upper: DVector<C64> = sys.state(t.upper)?;
    let lower: DVector<C64> = sys.state(t.lower)?;
    let mel = |op: &nalgebra::DMatrix<C64>| lower.dotc(&(op * &upper)).norm();
    Ok(Elements {
        plus: mel(&ops.s_plus),
        minus: mel(&ops.s_minus),
        x: mel(&ops.sx),
    })
}

/// Frequency, effective gyromagnetic ratio and drive matrix elements.
///
/// The nuclear drive term is omitted; only electron `S` operators couple.
pub fn matrix_elements(system: &SpinSystem, b0: f64, t: &TransitionSpec) -> Result<TransitionData> {
    t.validate(system)?;
    let sys = solve(system, b0)?;
    let ops = build_operators(system);
    let el = elements(&sys, &ops, t)?;
    Ok(TransitionData {
        frequency: frequency_in(&sys, t)?,
        df_db: transition_gradient(system, b0, t)?,
        mel_sigma_plus: el.plus,
        mel_sigma_minus: el.minus,
        mel_linear_x: el.x,
    })
}

/// All transitions with frequency in `f_center +- f_window` and
/// `|<Sx>|` at least `min_mel` times the stretched transition's, sorted by
/// frequency.
pub fn list_transitions(
    system: &SpinSystem,
    b0: f64,
    f_center: f64,
    f_window: f64,
    min_mel: f64,
) -> Result<Vec<(TransitionSpec, TransitionData)>> {
    if !(f_window > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency window must be positive, got {f_window}"
        )));
    }
    let sys = solve(system, b0)?;
    let ops = build_operators(system);
    let reference = elements(&sys, &ops, &TransitionSpec::stretched(system))?.x;

    let n = sys.labels.len();
    let mut found = Vec::new();
    for u in 0..n {
        for l in 0..u {
            let freq = sys.energies[u] - sys.energies[l];
            if (freq - f_center).abs() > f_window {
                continue;
            }
            let t = TransitionSpec::new(sys.labels[u], sys.labels[l]);
            let el = elements(&sys, &ops, &t)?;
            if el.x < min_mel * reference {
                continue;
            }
            found.push((t, freq, el));
        }
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));

    found
        .into_iter()
        .map(|(t, freq, el)| {
            let df_db = if b0 > GRADIENT_STEP {
                transition_gradient(system, b0, &t)?
            } else {
                f64::NAN
            };
            Ok((
                t,
                TransitionData {
                    frequency: freq,
                    df_db,
                    mel_sigma_plus: el.plus,
                    mel_sigma_minus: el.minus,
                    mel_linear_x: el.x,
                },
            ))
        })
        .collect()
}
