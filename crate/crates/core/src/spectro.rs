//! Echo traces of the doublet, their spectra, and two-peak fitting.
//!
//! Conventions:
//!
//! * The trace is `x(t) = Σ a_k exp(2πi f_k (t - t_c)) env(t - t_c)` with
//!   all components in phase at the echo center `t_c`, so the magnitude
//!   spectrum is exactly the sum of the individual lines.
//! * Gaussian envelope `exp(-(t - t_c)² / (2 σ_t²))` with `σ_t = 1 / (2π σ_f)`
//!   and `σ_f = FWHM / (2 sqrt(2 ln 2))`. Equivalently the time-domain FWHM is
//!   `8 ln 2 / (2π FWHM_f)`.
//! * Lorentzian envelope `exp(-π Γ |t - t_c|)` gives a Lorentzian of FWHM `Γ`.
//! * `X_k = dt Σ_n x_n exp(-2πi k n / N)`, so a tone `exp(+2πi f t)` appears
//!   at `+f` and `Σ |x|² dt = Σ |X|² df`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};

pub const MIN_TRACE_SAMPLES: usize = 64;

/// CPMG train used for the measured echoes. Identical echoes only scale the
/// summed trace, so the train is kept as metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoTrain {
    pub tau: f64,
    pub echoes: usize,
}

impl Default for EchoTrain {
    fn default() -> Self {
        Self {
            tau: 60e-6,
            echoes: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lineshape {
    #[default]
    Gaussian,
    Lorentzian,
}

impl std::str::FromStr for Lineshape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "lorentzian" => Ok(Self::Lorentzian),
            other => Err(Error::InvalidParameter(format!(
                "unknown lineshape '{other}'"
            ))),
        }
    }
}

impl Lineshape {
    /// Peak profile with unit height.
    pub fn profile(&self, f: f64, center: f64, fwhm: f64) -> f64 {
        let u = (f - center) / fwhm;
        match self {
            Self::Gaussian => (-4.0 * LN_2 * u * u).exp(),
            Self::Lorentzian => 1.0 / (1.0 + 4.0 * u * u),
        }
    }

    fn envelope(&self, t: f64, fwhm: f64) -> f64 {
        match self {
            Self::Gaussian => {
                let sigma_f = fwhm / (2.0 * (2.0 * LN_2).sqrt());
                let sigma_t = 1.0 / (2.0 * PI * sigma_f);
                (-0.5 * (t / sigma_t).powi(2)).exp()
            }
            Self::Lorentzian => (-PI * fwhm * t.abs()).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubletModel {
    /// Line offsets from the excitation frequency, Hz.
    pub offsets: [f64; 2],
    pub amplitudes: [f64; 2],
    pub linewidth_fwhm: f64,
    pub lineshape: Lineshape,
    /// Metadata only, Hz.
    pub excitation_freq: f64,
    pub train: EchoTrain,
}

impl Default for DoubletModel {
    fn default() -> Self {
        Self {
            offsets: [-0.35e6, 0.31e6],
            amplitudes: [1.0, 1.0],
            linewidth_fwhm: 300e3,
            lineshape: Lineshape::Gaussian,
            excitation_freq: 7.0805e9,
            train: EchoTrain::default(),
        }
    }
}

impl DoubletModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_fwhm > 0.0 && self.linewidth_fwhm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "linewidth must be > 0, got {}",
                self.linewidth_fwhm
            )));
        }
        for a in self.amplitudes {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "amplitudes must be >= 0, got {a}"
                )));
            }
        }
        if self.offsets.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("line offsets".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoTrace {
    pub dt: f64,
    pub inphase: Vec<f64>,
    pub quadrature: Vec<f64>,
}

impl EchoTrace {
    pub fn new(dt: f64, inphase: Vec<f64>, quadrature: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if inphase.len() != quadrature.len() {
            return Err(Error::InvalidParameter(format!(
                "in-phase has {} samples, quadrature {}",
                inphase.len(),
                quadrature.len()
            )));
        }
        if inphase.is_empty() {
            return Err(Error::Empty("echo trace"));
        }
        Ok(Self {
            dt,
            inphase,
            quadrature,
        })
    }

    pub fn len(&self) -> usize {
        self.inphase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inphase.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn energy(&self) -> f64 {
        self.inphase
            .iter()
            .zip(&self.quadrature)
            .map(|(i, q)| i * i + q * q)
            .sum::<f64>()
            * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Offsets from the excitation frequency, Hz, ascending and uniform.
    pub freq_axis: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Filled by [`fit_doublet`]; sorted by center.
    pub peaks: Vec<Peak>,
}

impl Spectrum {
    pub fn df(&self) -> f64 {
        self.freq_axis[1] - self.freq_axis[0]
    }
}

/// Echo centered mid-trace, `floor(duration / dt)` samples.
pub fn synthesize_echo(model: &DoubletModel, duration: f64, dt: f64) -> Result<EchoTrace> {
    synthesize_echo_at(model, duration, dt, 0.5 * duration)
}

/// As [`synthesize_echo`] with the echo center at `center` seconds.
pub fn synthesize_echo_at(
    model: &DoubletModel,
    duration: f64,
    dt: f64,
    center: f64,
) -> Result<EchoTrace> {
    model.validate()?;
    if !(dt > 0.0 && duration > 0.0 && center.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need duration > 0 and dt > 0, got {duration} and {dt}"
        )));
    }
    let n = (duration / dt + 1e-9).floor() as usize;
    if n < MIN_TRACE_SAMPLES {
        return Err(Error::TraceTooShort {
            samples: n,
            min: MIN_TRACE_SAMPLES,
        });
    }
    let mut inphase = Vec::with_capacity(n);
    let mut quadrature = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt - center;
        let env = model.lineshape.envelope(t, model.linewidth_fwhm);
        let z: Complex64 = model
            .offsets
            .iter()
            .zip(&model.amplitudes)
            .map(|(&f, &a)| Complex64::from_polar(a * env, 2.0 * PI * f * t))
            .sum();
        inphase.push(z.re);
        quadrature.push(z.im);
    }
    EchoTrace::new(dt, inphase, quadrature)
}

/// Magnitude spectrum on a DFT of length `next_pow2(len * zero_pad_factor)`.
pub fn spectrum_from_echo(trace: &EchoTrace, zero_pad_factor: usize) -> Result<Spectrum> {
    if trace.is_empty() {
        return Err(Error::Empty("echo trace"));
    }
    let n = (trace.len() * zero_pad_factor.max(1)).next_power_of_two();
    let mut buf: Vec<Complex64> = trace
        .inphase
        .iter()
        .zip(&trace.quadrature)
        .map(|(&i, &q)| Complex64::new(i, q))
        .collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = 1.0 / (n as f64 * trace.dt);
    let half = n / 2;
    let mut freq_axis = Vec::with_capacity(n);
    let mut amplitude = Vec::with_capacity(n);
    for j in 0..n {
        let k = (j + half) % n;
        freq_axis.push((j as f64 - half as f64) * df);
        amplitude.push(buf[k].norm() * trace.dt);
    }
    Ok(Spectrum {
        freq_axis,
        amplitude,
        peaks: Vec::new(),
    })
}

/// Local maxima above `rel_floor` of the global maximum, highest first.
pub fn find_peaks(spectrum: &Spectrum, rel_floor: f64) -> Vec<usize> {
    let a = &spectrum.amplitude;
    let max = a.iter().cloned().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (1..a.len().saturating_sub(1))
        .filter(|&j| a[j] > a[j - 1] && a[j] >= a[j + 1] && a[j] > rel_floor * max)
        .collect();
    idx.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    idx
}

/// Peaks below this fraction of the largest are ignored.
pub const PEAK_FLOOR: f64 = 0.01;

/// Width at half height around `j`, linearly interpolated.
fn half_width(spectrum: &Spectrum, j: usize) -> f64 {
    let a = &spectrum.amplitude;
    let f = &spectrum.freq_axis;
    let half = 0.5 * a[j];
    let mut lo = j;
    while lo > 0 && a[lo] > half {
        lo -= 1;
    }
    let mut hi = j;
    while hi + 1 < a.len() && a[hi] > half {
        hi += 1;
    }
    let cross = |p: usize, q: usize| {
        let (ap, aq) = (a[p], a[q]);
        if (aq - ap).abs() < f64::MIN_POSITIVE {
            f[p]
        } else {
            f[p] + (half - ap) / (aq - ap) * (f[q] - f[p])
        }
    };
    let left = if lo < j { cross(lo, lo + 1) } else { f[j] };
    let right = if hi > j { cross(hi - 1, hi) } else { f[j] };
    (right - left).max(spectrum.df())
}

/// Two-Gaussian least-squares fit.
pub fn fit_doublet(spectrum: &Spectrum) -> Result<[Peak; 2]> {
    fit_doublet_with(spectrum, Lineshape::Gaussian)
}

pub fn fit_doublet_with(spectrum: &Spectrum, shape: Lineshape) -> Result<[Peak; 2]> {
    if spectrum.freq_axis.len() < 3 || spectrum.freq_axis.len() != spectrum.amplitude.len() {
        return Err(Error::InvalidParameter(
            "spectrum needs at least 3 matching points".into(),
        ));
    }
    let peaks = find_peaks(spectrum, PEAK_FLOOR);
    if peaks.len() < 2 {
        return Err(Error::PeakCount(peaks.len()));
    }
    let (j1, j2) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
    let f = &spectrum.freq_axis;
    let a = &spectrum.amplitude;
    let (w1, w2) = (half_width(spectrum, j1), half_width(spectrum, j2));
    let sep = f[j2] - f[j1];
    let (w1, w2) = (w1.min(sep), w2.min(sep));

    let reach = 4.0 * w1.max(w2);
    let window: Vec<usize> = (0..f.len())
        .filter(|&j| f[j] >= f[j1] - reach && f[j] <= f[j2] + reach)
        .collect();
    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        Some(
            window
                .iter()
                .map(|&j| {
                    p[2] * shape.profile(f[j], p[0], p[1].abs())
                        + p[5] * shape.profile(f[j], p[3], p[4].abs())
                        - a[j]
                })
                .collect(),
        )
    };
    let x0 = [f[j1], w1, a[j1], f[j2], w2, a[j2]];
    let hmax = a[j1].max(a[j2]);
    let scales = [w1, w1, hmax, w2, w2, hmax];
    let rep = levenberg_marquardt(residuals, &x0, &scales, &LmOptions::default())?;
    let p = rep.params;
    let mut out = [
        Peak {
            center: p[0],
            fwhm: p[1].abs(),
            height: p[2],
        },
        Peak {
            center: p[3],
            fwhm: p[4].abs(),
            height: p[5],
        },
    ];
    if out
        .iter()
        .any(|q| !(q.center.is_finite() && q.fwhm.is_finite() && q.height.is_finite()))
    {
        return Err(Error::NonFinite("doublet fit".into()));
    }
    out.sort_by(|x, y| x.center.total_cmp(&y.center));
    Ok(out)
}
