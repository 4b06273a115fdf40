//! Quasi-static microwave field of a coplanar waveguide cross-section.
//!
//! Coordinates: `x` across the line (center strip centered on `x = 0`),
//! `z` depth into the substrate (positive downward). The metal film occupies
//! `-t <= z <= 0`. Each strip is replaced by infinite line filaments at
//! `z = -t/2`; the field is the superposition of their Biot-Savart fields.
//! Current flows along `+y` in the center strip and returns equally through
//! the two grounds, so the structure is mirror symmetric about `x = 0`: `Bx`
//! is even in `x` and the surface-normal `Bz` is odd, which is the sign flip
//! between the two gaps.

use std::f64::consts::PI;

use crate::constants::MU0;
use crate::error::{Error, Result};

/// Transverse sheet-current profile across the strips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurrentProfile {
    /// Thin-film Meissner-state distribution of the whole coupled line,
    /// `K(x) ∝ 1/sqrt|(x²-a²)(x²-b²)(x²-c²)|` with `a`, `b`, `c` the
    /// center-strip half width, inner ground edge and outer ground edge.
    #[default]
    Meissner,
    /// Each strip independently `∝ 1/sqrt(1 - (2u/w)²)`.
    EdgePeaked,
    Uniform,
}

impl std::str::FromStr for CurrentProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meissner" => Ok(Self::Meissner),
            "edge" | "edge-peaked" => Ok(Self::EdgePeaked),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidParameter(format!(
                "unknown current profile '{other}' (meissner, edge, uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpwGeometry {
    pub center_width: f64,
    pub gap_width: f64,
    pub ground_width: f64,
    pub film_thickness: f64,
    /// Center-strip current, A.
    pub drive_current_total: f64,
    pub profile: CurrentProfile,
    pub filaments_per_strip: usize,
}

impl Default for CpwGeometry {
    fn default() -> Self {
        Self {
            center_width: 30e-6,
            gap_width: 17.4e-6,
            ground_width: 200e-6,
            film_thickness: 100e-9,
            drive_current_total: 1.0,
            profile: CurrentProfile::Meissner,
            filaments_per_strip: 400,
        }
    }
}

impl CpwGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("center_width", self.center_width),
            ("gap_width", self.gap_width),
            ("ground_width", self.ground_width),
            ("film_thickness", self.film_thickness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !self.drive_current_total.is_finite() {
            return Err(Error::InvalidParameter(
                "drive current must be finite".into(),
            ));
        }
        if self.filaments_per_strip == 0 {
            return Err(Error::InvalidParameter(
                "need at least one filament per strip".into(),
            ));
        }
        Ok(())
    }

    fn half_center(&self) -> f64 {
        self.center_width / 2.0
    }

    fn inner_ground_edge(&self) -> f64 {
        self.half_center() + self.gap_width
    }

    fn outer_ground_edge(&self) -> f64 {
        self.inner_ground_edge() + self.ground_width
    }

    /// `x` at the middle of the left (`x < 0`) gap.
    pub fn left_gap_center(&self) -> f64 {
        -(self.half_center() + self.gap_width / 2.0)
    }

    /// Strip footprints `(x_left, x_right)`.
    pub fn strips(&self) -> [(f64, f64); 3] {
        let (a, b, c) = (
            self.half_center(),
            self.inner_ground_edge(),
            self.outer_ground_edge(),
        );
        [(-c, -b), (-a, a), (b, c)]
    }

    fn inside_conductor(&self, x: f64, z: f64) -> bool {
        (-self.film_thickness..=0.0).contains(&z)
            && self.strips().iter().any(|&(l, r)| (l..=r).contains(&x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplantRegion {
    pub strip_width: f64,
    /// Along the line; unused by the 2D cross-section.
    pub strip_length: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    /// `None` centers the strip in the left gap.
    pub lateral_center: Option<f64>,
}

impl Default for ImplantRegion {
    fn default() -> Self {
        Self {
            strip_width: 9e-6,
            strip_length: 1.6e-3,
            depth_min: 0.0,
            depth_max: 100e-9,
            lateral_center: None,
        }
    }
}

impl ImplantRegion {
    pub fn x_range(&self, geometry: &CpwGeometry) -> (f64, f64) {
        let c = self
            .lateral_center
            .unwrap_or_else(|| geometry.left_gap_center());
        (c - self.strip_width / 2.0, c + self.strip_width / 2.0)
    }

    pub fn validate(&self, geometry: &CpwGeometry) -> Result<()> {
        if !(self.strip_width > 0.0 && self.depth_min >= 0.0 && self.depth_max > self.depth_min) {
            return Err(Error::InvalidParameter(format!(
                "implant needs width > 0 and depth_max > depth_min >= 0 \
                 (width {}, depths {}..{})",
                self.strip_width, self.depth_min, self.depth_max
            )));
        }
        let (x_min, x_max) = self.x_range(geometry);
        let (a, b) = (geometry.half_center(), geometry.inner_ground_edge());
        let in_left = x_min > -b && x_max < -a;
        let in_right = x_min > a && x_max < b;
        if !(in_left || in_right) {
            return Err(Error::ImplantOverlapsConductor { x_min, x_max });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub z: f64,
    /// T per A of drive current (per unit `drive_current_total`).
    pub bx: f64,
    pub bz: f64,
    pub magnitude: f64,
    /// Angle between the field and the surface normal, rad.
    pub angle_from_normal: f64,
    pub weight: f64,
}

impl FieldSample {
    pub fn new(x: f64, z: f64, bx: f64, bz: f64, weight: f64) -> Self {
        Self {
            x,
            z,
            bx,
            bz,
            magnitude: bx.hypot(bz),
            angle_from_normal: bx.abs().atan2(bz.abs()),
            weight,
        }
    }
}

/// Filament discretization of one CPW geometry.
#[derive(Debug, Clone)]
pub struct Cpw {
    geometry: CpwGeometry,
    xs: Vec<f64>,
    currents: Vec<f64>,
    z_film: f64,
}

/// Gauss-Chebyshev nodes on `[l, r]`, mirrored so `nodes(-r, -l) = -nodes(l, r)`.
fn chebyshev_nodes(l: f64, r: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (l + r);
    let half = 0.5 * (r - l);
    let u: Vec<f64> = (0..n)
        .map(|k| {
            if 2 * k + 1 == n {
                0.0
            } else if k < n / 2 {
                (((k as f64) + 0.5) * PI / n as f64).cos()
            } else {
                -((((n - 1 - k) as f64) + 0.5) * PI / n as f64).cos()
            }
        })
        .collect();
    u.into_iter().map(|u| mid + half * u).collect()
}

impl Cpw {
    pub fn new(geometry: &CpwGeometry) -> Result<Self> {
        geometry.validate()?;
        let n = geometry.filaments_per_strip;
        let (a, b, c) = (
            geometry.half_center(),
            geometry.inner_ground_edge(),
            geometry.outer_ground_edge(),
        );
        let i0 = geometry.drive_current_total;

        // right ground and center; the left ground mirrors the right one
        let (center_x, center_w) = Self::strip(geometry.profile, -a, a, n, |x| {
            1.0 / ((b * b - x * x) * (c * c - x * x)).sqrt()
        });
        let (ground_x, ground_w) = Self::strip(geometry.profile, b, c, n, |x| {
            1.0 / ((x * x - a * a) * (x + b) * (x + c)).sqrt()
        });

        let mut xs = Vec::with_capacity(3 * n);
        let mut currents = Vec::with_capacity(3 * n);
        let norm = |w: &[f64]| w.iter().sum::<f64>();
        let (sc, sg) = (norm(&center_w), norm(&ground_w));
        for k in (0..n).rev() {
            xs.push(-ground_x[k]);
            currents.push(-0.5 * i0 * ground_w[k] / sg);
        }
        for k in 0..n {
            xs.push(center_x[k]);
            currents.push(i0 * center_w[k] / sc);
        }
        for k in 0..n {
            xs.push(ground_x[k]);
            currents.push(-0.5 * i0 * ground_w[k] / sg);
        }
        Ok(Self {
            geometry: geometry.clone(),
            xs,
            currents,
            z_film: -geometry.film_thickness / 2.0,
        })
    }

    /// Filament positions and relative weights on one strip. `smooth` is the
    /// Meissner profile with the strip's own edge singularities divided out.
    fn strip(
        profile: CurrentProfile,
        l: f64,
        r: f64,
        n: usize,
        smooth: impl Fn(f64) -> f64,
    ) -> (Vec<f64>, Vec<f64>) {
        match profile {
            CurrentProfile::Uniform => {
                let w = (r - l) / n as f64;
                let xs = (0..n).map(|k| l + (k as f64 + 0.5) * w).collect();
                (xs, vec![1.0; n])
            }
            CurrentProfile::EdgePeaked => (chebyshev_nodes(l, r, n), vec![1.0; n]),
            CurrentProfile::Meissner => {
                let xs = chebyshev_nodes(l, r, n);
                let w = xs.iter().map(|&x| smooth(x)).collect();
                (xs, w)
            }
        }
    }

    pub fn geometry(&self) -> &CpwGeometry {
        &self.geometry
    }

    /// `(x, current)` for every filament.
    pub fn filaments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.currents.iter().copied())
    }

    /// `(Bx, Bz)` in T at `(x, z)`.
    pub fn field_at(&self, x: f64, z: f64) -> Result<(f64, f64)> {
        if self.geometry.inside_conductor(x, z) {
            return Err(Error::InsideConductor { x, z });
        }
        let dz = z - self.z_film;
        let (mut bx, mut bz) = (0.0, 0.0);
        for (xf, i) in self.filaments() {
            let dx = x - xf;
            let s = i / (dx * dx + dz * dz);
            bx += s * dz;
            bz -= s * dx;
        }
        let k = MU0 / (2.0 * PI);
        Ok((k * bx, k * bz))
    }
}

/// Field vector at one point; builds the filament set on every call.
pub fn cpw_field_at(geometry: &CpwGeometry, position: (f64, f64)) -> Result<(f64, f64)> {
    Cpw::new(geometry)?.field_at(position.0, position.1)
}

/// Uniform-weight midpoint grid over the implant box, lateral index outer.
pub fn sample_donors(
    geometry: &CpwGeometry,
    implant: &ImplantRegion,
    n_lateral: usize,
    n_depth: usize,
) -> Result<Vec<FieldSample>> {
    if n_lateral == 0 || n_depth == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample counts must be >= 1, got {n_lateral} x {n_depth}"
        )));
    }
    implant.validate(geometry)?;
    let cpw = Cpw::new(geometry)?;
    let (x_min, x_max) = implant.x_range(geometry);
    let dx = (x_max - x_min) / n_lateral as f64;
    let dz = (implant.depth_max - implant.depth_min) / n_depth as f64;
    let weight = 1.0 / (n_lateral * n_depth) as f64;
    let mut out = Vec::with_capacity(n_lateral * n_depth);
    for i in 0..n_lateral {
        let x = x_min + (i as f64 + 0.5) * dx;
        for j in 0..n_depth {
            let z = implant.depth_min + (j as f64 + 0.5) * dz;
            let (bx, bz) = cpw.field_at(x, z)?;
            out.push(FieldSample::new(x, z, bx, bz, weight));
        }
    }
    Ok(out)
}

/// Field samples on a rectangular grid, skipping points inside metal.
pub fn cross_section(cpw: &Cpw, xs: &[f64], zs: &[f64]) -> Vec<FieldSample> {
    let w = 1.0 / (xs.len() * zs.len()).max(1) as f64;
    let mut out = Vec::with_capacity(xs.len() * zs.len());
    for &z in zs {
        for &x in xs {
            if let Ok((bx, bz)) = cpw.field_at(x, z) {
                out.push(FieldSample::new(x, z, bx, bz, w));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub mean_angle_from_normal: f64,
}

impl FieldStats {
    pub fn relative_std(&self) -> f64 {
        self.std / self.mean
    }
}

/// Weighted statistics of `|B1|`, two-pass, in sample order.
pub fn field_stats(samples: &[FieldSample]) -> Result<FieldStats> {
    if samples.is_empty() {
        return Err(Error::Empty("field samples"));
    }
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let mean = samples.iter().map(|s| s.weight * s.magnitude).sum::<f64>() / total;
    let var = samples
        .iter()
        .map(|s| s.weight * (s.magnitude - mean).powi(2))
        .sum::<f64>()
        / total;
    let angle = samples
        .iter()
        .map(|s| s.weight * s.angle_from_normal)
        .sum::<f64>()
        / total;
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.magnitude), hi.max(s.magnitude))
        });
    Ok(FieldStats {
        mean,
        std: var.sqrt(),
        min,
        max,
        mean_angle_from_normal: angle,
    })
}
