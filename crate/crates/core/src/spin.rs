//! Electron-nuclear spin Hamiltonian of a donor in a static field along z.
//!
//! The product basis is `electron ⊗ nuclear`, each factor ordered by
//! descending projection (`m = j, j-1, ..., -j`), so the basis index is
//! `e * (2I+1) + n`. All energies are frequencies, E/h in Hz.
//!
//! ```text
//! H/h = (g muB / h) B0 Sz - gamma_n B0 Iz + A (Sx Ix + Sy Iy + Sz Iz)
//! ```
//!
//! `gamma_n` is the signed nuclear gyromagnetic ratio in Hz/T and enters with
//! an explicit minus sign, so a positive `gamma_n` lowers the `mI = +I` level.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Lowest field at which states are labeled; zero-field callers use this.
pub const MIN_LABEL_FIELD: f64 = 1e-6;

/// Angular-momentum quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        Self(twice)
    }

    pub const fn integer(n: i32) -> Self {
        Self(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::str::FromStr for HalfInt {
    type Err = Error;

    /// Accepts `"9/2"`, `"4"` or a decimal such as `"4.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("'{s}' is not an integer or half-integer"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| bad())?;
            return match den.trim() {
                "2" => Ok(Self(num)),
                "1" => Ok(Self(2 * num)),
                _ => Err(bad()),
            };
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        let twice = 2.0 * v;
        if twice.fract() != 0.0 || twice.abs() > f64::from(i32::MAX) {
            return Err(bad());
        }
        Ok(Self(twice as i32))
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// A `|F, mF>` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    pub f: HalfInt,
    pub mf: HalfInt,
}

impl StateLabel {
    /// Integer `F`, `mF` (the Bi case).
    pub const fn new(f: i32, mf: i32) -> Self {
        Self {
            f: HalfInt::integer(f),
            mf: HalfInt::integer(mf),
        }
    }
}

impl std::str::FromStr for StateLabel {
    type Err = Error;

    /// Parses `"F,mF"`, optionally wrapped as `"|F,mF>"`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('|').trim_end_matches('>');
        let (f, mf) = inner
            .split_once(',')
            .ok_or_else(|| Error::InvalidParameter(format!("state label '{s}' must be 'F,mF'")))?;
        Ok(Self {
            f: f.parse()?,
            mf: mf.parse()?,
        })
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.f, self.mf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub electron_spin: HalfInt,
    pub nuclear_spin: HalfInt,
    /// Isotropic hyperfine constant, Hz.
    pub hyperfine_a: f64,
    pub g_electron: f64,
    /// Signed nuclear gyromagnetic ratio, Hz/T.
    pub gyromag_nuclear: f64,
    pub constants: PhysicalConstants,
}

impl SpinSystem {
    /// 209Bi donor in Si: S = 1/2, I = 9/2, A = 1.4754 GHz, g = 2.0003,
    /// gamma_n = 6.963 MHz/T.
    pub fn bismuth() -> Self {
        Self {
            electron_spin: HalfInt::from_twice(1),
            nuclear_spin: HalfInt::from_twice(9),
            hyperfine_a: 1.4754e9,
            g_electron: 2.0003,
            gyromag_nuclear: 6.963e6,
            constants: PhysicalConstants::CODATA2018,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.electron_spin.twice() <= 0 {
            return Err(Error::InvalidParameter("electron spin must be > 0".into()));
        }
        if self.nuclear_spin.twice() < 0 {
            return Err(Error::InvalidParameter("nuclear spin must be >= 0".into()));
        }
        if !(self.hyperfine_a.is_finite() && self.hyperfine_a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperfine A must be positive, got {}",
                self.hyperfine_a
            )));
        }
        if !self.g_electron.is_finite() || !self.gyromag_nuclear.is_finite() {
            return Err(Error::InvalidParameter("g-factors must be finite".into()));
        }
        Ok(())
    }

    pub fn electron_dim(&self) -> usize {
        (self.electron_spin.twice() + 1) as usize
    }

    pub fn nuclear_dim(&self) -> usize {
        (self.nuclear_spin.twice() + 1) as usize
    }

    /// Hilbert-space dimension `(2S+1)(2I+1)`.
    pub fn dim(&self) -> usize {
        self.electron_dim() * self.nuclear_dim()
    }

    /// Electron Zeeman coefficient `g muB / h`, Hz/T.
    pub fn electron_zeeman(&self) -> f64 {
        self.g_electron * self.constants.bohr_magneton / self.constants.planck_h
    }

    /// All `F` values `|I-S| ..= I+S`, descending.
    pub fn total_spins(&self) -> Vec<HalfInt> {
        let hi = self.electron_spin.twice() + self.nuclear_spin.twice();
        let lo = (self.electron_spin.twice() - self.nuclear_spin.twice()).abs();
        (lo..=hi)
            .rev()
            .step_by(2)
            .map(HalfInt::from_twice)
            .collect()
    }

    /// Every valid `|F, mF>` label.
    pub fn all_labels(&self) -> Vec<StateLabel> {
        let mut out = Vec::with_capacity(self.dim());
        for f in self.total_spins() {
            for mf in (-f.twice()..=f.twice()).rev().step_by(2) {
                out.push(StateLabel {
                    f,
                    mf: HalfInt::from_twice(mf),
                });
            }
        }
        out
    }
}

impl Default for SpinSystem {
    fn default() -> Self {
        Self::bismuth()
    }
}

/// Spin operators on the product space (electron factor first).
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub sx: DMatrix<C64>,
    pub sy: DMatrix<C64>,
    pub sz: DMatrix<C64>,
    pub ix: DMatrix<C64>,
    pub iy: DMatrix<C64>,
    pub iz: DMatrix<C64>,
    pub s_plus: DMatrix<C64>,
    pub s_minus: DMatrix<C64>,
}

impl SpinOperatorSet {
    /// `Sz + Iz`.
    pub fn fz(&self) -> DMatrix<C64> {
        &self.sz + &self.iz
    }

    /// `S . I`.
    pub fn s_dot_i(&self) -> DMatrix<C64> {
        &self.sx * &self.ix + &self.sy * &self.iy + &self.sz * &self.iz
    }
}

/// `(Jx, Jy, Jz, J+)` for a single spin `j` in the `m = j..-j` basis.
fn single_spin(j: HalfInt) -> [DMatrix<C64>; 4] {
    let d = (j.twice() + 1) as usize;
    let jv = j.value();
    let m = |k: usize| jv - k as f64;
    let jz = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(m(r), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    // <m+1| J+ |m> sits at (k-1, k) since row k-1 has the larger m.
    let jp = DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            let mk = m(c);
            C64::new((jv * (jv + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let jm = jp.adjoint();
    let jx = (&jp + &jm).scale(0.5);
    let jy = (&jp - &jm) * C64::new(0.0, -0.5);
    [jx, jy, jz, jp]
}

pub fn build_operators(system: &SpinSystem) -> SpinOperatorSet {
    let [sx, sy, sz, sp] = single_spin(system.electron_spin);
    let [ix, iy, iz, _] = single_spin(system.nuclear_spin);
    let e1 = DMatrix::<C64>::identity(system.electron_dim(), system.electron_dim());
    let n1 = DMatrix::<C64>::identity(system.nuclear_dim(), system.nuclear_dim());
    let s_plus = sp.kronecker(&n1);
    SpinOperatorSet {
        sx: sx.kronecker(&n1),
        sy: sy.kronecker(&n1),
        sz: sz.kronecker(&n1),
        ix: e1.kronecker(&ix),
        iy: e1.kronecker(&iy),
        iz: e1.kronecker(&iz),
        s_minus: s_plus.adjoint(),
        s_plus,
    }
}

fn hamiltonian_with(system: &SpinSystem, ops: &SpinOperatorSet, b0: f64) -> DMatrix<C64> {
    let zeeman =
        ops.sz.scale(system.electron_zeeman() * b0) - ops.iz.scale(system.gyromag_nuclear * b0);
    zeeman + ops.s_dot_i().scale(system.hyperfine_a)
}

/// Spin Hamiltonian in Hz at field `b0` (T, along +z).
pub fn hamiltonian(system: &SpinSystem, b0: f64) -> Result<DMatrix<C64>> {
    system.validate()?;
    if !(b0.is_finite() && b0 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "B0 must be a non-negative field magnitude, got {b0}"
        )));
    }
    Ok(hamiltonian_with(system, &build_operators(system), b0))
}

/// Unlabeled eigensystem: ascending energies, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn diagonalize(h: &DMatrix<C64>) -> Result<EigenSystem> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "Hamiltonian must be square and non-empty".into(),
        ));
    }
    let scale = max_abs(h).max(f64::MIN_POSITIVE);
    let deviation = max_abs(&(h - h.adjoint()));
    if deviation > 1e-10 * scale {
        return Err(Error::NotHermitian { deviation, scale });
    }

    let eig =
        SymmetricEigen::try_new(h.clone(), f64::EPSILON, 10_000).ok_or(Error::NotConverged {
            residual: f64::NAN,
            limit: 1e-9 * scale,
        })?;

    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let norm = h.norm();
    let limit = 1e-9 * norm.max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for (c, &e) in energies.iter().enumerate() {
        let v = vectors.column(c);
        let r = h * v - v * C64::new(e, 0.0);
        residual = residual.max(r.norm());
    }
    if residual > limit {
        return Err(Error::NotConverged { residual, limit });
    }
    Ok(EigenSystem { energies, vectors })
}

/// Eigenstates labeled by `|F, mF>` at field `field_b0`.
///
/// Ordering is ascending energy; exactly degenerate levels are ordered by
/// ascending `mF`.
#[derive(Debug, Clone)]
pub struct LabeledEigenSystem {
    pub field_b0: f64,
    pub energies: Vec<f64>,
    pub states: DMatrix<C64>,
    pub labels: Vec<StateLabel>,
}

impl LabeledEigenSystem {
    pub fn index_of(&self, label: StateLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn energy(&self, label: StateLabel) -> Result<f64> {
        Ok(self.energies[self.index_of(label)?])
    }

    pub fn state(&self, label: StateLabel) -> Result<DVector<C64>> {
        Ok(self.states.column(self.index_of(label)?).into_owned())
    }
}

fn expectation(op: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    v.dotc(&(op * v)).re
}

/// Rotates each block of (near-)degenerate eigenvectors so that `Fz` is
/// diagonal inside it, making `mF` sharp even at level crossings.
fn resolve_degeneracies(
    energies: &mut [f64],
    vectors: &mut DMatrix<C64>,
    h: &DMatrix<C64>,
    fz: &DMatrix<C64>,
    tol: f64,
) -> Vec<(usize, usize)> {
    let n = energies.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] <= tol {
            end += 1;
        }
        blocks.push((start, end));
        if end - start > 1 {
            let k = end - start;
            let sub = vectors.columns(start, k).into_owned();
            let proj = sub.adjoint() * fz * &sub;
            let proj = (&proj + proj.adjoint()).scale(0.5);
            let local = SymmetricEigen::new(proj);
            let rotated = &sub * &local.eigenvectors;
            for c in 0..k {
                let v = rotated.column(c).into_owned();
                energies[start + c] = expectation(h, &v);
                vectors.set_column(start + c, &v);
            }
        }
        start = end;
    }
    blocks
}

/// Assigns `|F, mF>` labels to an eigensystem computed at `b0 > 0`.
///
/// `mF` comes from rounding `<Sz+Iz>`. `F` is assigned by adiabatic
/// continuation from zero field: within an `mF` sector the levels keep the
/// zero-field `F` ordering, highest energy = largest `F`, because levels of
/// equal `mF` never cross. For Bi this means the upper state of each sector
/// is `F = 5`; the stretched states `mF = +-5` are pure `F = 5`.
pub fn label_states(eig: &EigenSystem, system: &SpinSystem, b0: f64) -> Result<LabeledEigenSystem> {
    if !(b0.is_finite() && b0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "state labeling needs B0 > 0 (use {MIN_LABEL_FIELD} T for zero-field labels), got {b0}"
        )));
    }
    let n = system.dim();
    if eig.energies.len() != n || eig.vectors.ncols() != n || eig.vectors.nrows() != n {
        return Err(Error::Labeling(format!(
            "eigensystem dimension {} does not match system dimension {n}",
            eig.energies.len()
        )));
    }
    let ops = build_operators(system);
    let h = hamiltonian_with(system, &ops, b0);
    let fz = ops.fz();

    let mut energies = eig.energies.clone();
    let mut vectors = eig.vectors.clone();
    let scale = energies
        .iter()
        .fold(system.hyperfine_a, |m, e| m.max(e.abs()));
    let blocks = resolve_degeneracies(&mut energies, &mut vectors, &h, &fz, 1e-9 * scale);

    let parity = (system.electron_spin.twice() + system.nuclear_spin.twice()).rem_euclid(2);
    let mut mfs = Vec::with_capacity(n);
    for c in 0..n {
        let v = vectors.column(c).into_owned();
        let value = expectation(&fz, &v);
        let mut twice = (2.0 * value).round() as i32;
        if twice.rem_euclid(2) != parity {
            // nearest projection of the right parity
            twice += if 2.0 * value > f64::from(twice) {
                1
            } else {
                -1
            };
        }
        if (value - f64::from(twice) / 2.0).abs() > 0.01 {
            return Err(Error::AmbiguousProjection { value });
        }
        mfs.push(HalfInt::from_twice(twice));
    }

    // ascending energy, degenerate blocks by ascending mF
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for &(s, e) in &blocks {
        let mut block: Vec<usize> = (s..e).collect();
        block.sort_by_key(|&i| mfs[i]);
        order.extend(block);
    }

    let spins = system.total_spins();
    let mut labels = vec![None; n];
    let mut sectors: Vec<HalfInt> = mfs.clone();
    sectors.sort();
    sectors.dedup();
    for mf in sectors {
        let mut members: Vec<usize> = (0..n).filter(|&i| mfs[i] == mf).collect();
        members.sort_by(|&a, &b| energies[b].total_cmp(&energies[a]));
        let allowed: Vec<HalfInt> = spins
            .iter()
            .copied()
            .filter(|f| f.twice() >= mf.twice().abs())
            .collect();
        if allowed.len() != members.len() {
            return Err(Error::Labeling(format!(
                "sector mF = {mf} has {} states, expected {}",
                members.len(),
                allowed.len()
            )));
        }
        for (i, f) in members.into_iter().zip(allowed) {
            labels[i] = Some(StateLabel { f, mf });
        }
    }

    let labels: Vec<StateLabel> = order
        .iter()
        .map(|&i| labels[i].expect("every sector member is labeled"))
        .collect();
    let states = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    let energies = order.iter().map(|&i| energies[i]).collect();
    Ok(LabeledEigenSystem {
        field_b0: b0,
        energies,
        states,
        labels,
    })
}

/// Hamiltonian, diagonalization and labeling in one call.
pub fn solve(system: &SpinSystem, b0: f64) -> Result<LabeledEigenSystem> {
    let h = hamiltonian(system, b0)?;
    let eig = diagonalize(&h)?;
    label_states(&eig, system, b0)
}

/// Labeled level energies, also defined at `b0 = 0`.
///
/// At zero field `mF` is degenerate, so levels are assigned by manifold only:
/// every `|F, mF>` of one `F` gets that manifold's energy.
pub fn level_energies(system: &SpinSystem, b0: f64) -> Result<Vec<(StateLabel, f64)>> {
    if b0 > 0.0 {
        let sys = solve(system, b0)?;
        return Ok(sys.labels.into_iter().zip(sys.energies).collect());
    }
    let eig = diagonalize(&hamiltonian(system, b0)?)?;
    let mut out = Vec::with_capacity(system.dim());
    let mut k = 0;
    // A > 0: zero-field energy increases with F
    for f in system.total_spins().into_iter().rev() {
        for mf in (-f.twice()..=f.twice()).step_by(2) {
            out.push((
                StateLabel {
                    f,
                    mf: HalfInt::from_twice(mf),
                },
                eig.energies[k],
            ));
            k += 1;
        }
    }
    Ok(out)
}

/// Closed-form Breit-Rabi levels for `S = 1/2`, ascending in energy.
///
/// Independent of the matrix route; used to cross-check it.
pub fn analytic_breit_rabi(system: &SpinSystem, b0: f64) -> Result<Vec<(StateLabel, f64)>> {
    system.validate()?;
    if system.electron_spin.twice() != 1 {
        return Err(Error::InvalidParameter(
            "Breit-Rabi formula requires S = 1/2".into(),
        ));
    }
    let a = system.hyperfine_a;
    let ge = system.electron_zeeman();
    let gn = system.gyromag_nuclear;
    let i = system.nuclear_spin.value();
    let top = system.nuclear_spin.twice() + 1;
    let f_hi = HalfInt::from_twice(top);
    let f_lo = HalfInt::from_twice(top - 2);

    let mut out = Vec::with_capacity(system.dim());
    for twice_m in (-top..=top).step_by(2) {
        let m = f64::from(twice_m) / 2.0;
        let mf = HalfInt::from_twice(twice_m);
        if twice_m.abs() == top {
            let sign = m.signum();
            out.push((
                StateLabel { f: f_hi, mf },
                a * i / 2.0 + sign * (ge / 2.0 - gn * i) * b0,
            ));
        } else {
            let x = (ge + gn) * b0 + a * m;
            let root = 0.5 * (x * x + a * a * ((i + 0.5).powi(2) - m * m)).sqrt();
            let base = -a / 4.0 - gn * b0 * m;
            out.push((StateLabel { f: f_hi, mf }, base + root));
            out.push((StateLabel { f: f_lo, mf }, base - root));
        }
    }
    out.sort_by(|p, q| p.1.total_cmp(&q.1).then(p.0.mf.cmp(&q.0.mf)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    #[test]
    fn spin_half_pair_sz_is_product_ordered() {
        let sys = SpinSystem {
            nuclear_spin: HalfInt::from_twice(1),
            ..SpinSystem::bismuth()
        };
        let ops = build_operators(&sys);
        let diag: Vec<f64> = (0..4).map(|k| ops.sz[(k, k)].re).collect();
        assert_eq!(diag, vec![0.5, 0.5, -0.5, -0.5]);
        let idiag: Vec<f64> = (0..4).map(|k| ops.iz[(k, k)].re).collect();
        assert_eq!(idiag, vec![0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn bismuth_operators_are_20_dimensional() {
        let ops = build_operators(&SpinSystem::bismuth());
        for m in [
            &ops.sx,
            &ops.sy,
            &ops.sz,
            &ops.ix,
            &ops.iy,
            &ops.iz,
            &ops.s_plus,
        ] {
            assert_eq!(m.shape(), (20, 20));
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        let ops = build_operators(&SpinSystem::bismuth());
        let i = C64::new(0.0, 1.0);
        let cases = [
            (&ops.sx, &ops.sy, &ops.sz),
            (&ops.sy, &ops.sz, &ops.sx),
            (&ops.sz, &ops.sx, &ops.sy),
            (&ops.ix, &ops.iy, &ops.iz),
            (&ops.iy, &ops.iz, &ops.ix),
            (&ops.iz, &ops.ix, &ops.iy),
        ];
        for (a, b, c) in cases {
            assert!(max_abs(&(commutator(a, b) - c * i)) < 1e-12);
        }
        for s in [&ops.sx, &ops.sy, &ops.sz] {
            for n in [&ops.ix, &ops.iy, &ops.iz] {
                assert!(max_abs(&commutator(s, n)) < 1e-12);
            }
        }
        let sys = SpinSystem::bismuth();
        let h = hamiltonian(&sys, 0.3).unwrap();
        assert!(max_abs(&commutator(&ops.fz(), &h)) < 1e-12 * max_abs(&h));
    }

    #[test]
    fn zero_field_spectrum_is_two_manifolds() {
        let sys = SpinSystem::bismuth();
        let a = sys.hyperfine_a;
        let h = hamiltonian(&sys, 0.0).unwrap();
        let trace: C64 = h.trace();
        assert!(trace.norm() < 1e-12 * a);
        let eig = diagonalize(&h).unwrap();
        for e in &eig.energies[..9] {
            assert!((e + 2.75 * a).abs() < 1e-9 * a, "{e}");
        }
        for e in &eig.energies[9..] {
            assert!((e - 2.25 * a).abs() < 1e-9 * a, "{e}");
        }
        assert!((eig.energies[19] - eig.energies[0] - 5.0 * a).abs() < 1e-9 * a);
    }

    #[test]
    fn diagonal_matrix_is_its_own_eigensystem() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let eig = diagonalize(&h).unwrap();
        assert_eq!(eig.energies.len(), 3);
        for (k, e) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((eig.energies[k] - e).abs() < 1e-14);
        }
        // columns are unit vectors on indices 1, 2, 0
        for (c, r) in [1usize, 2, 0].iter().enumerate() {
            assert!((eig.vectors[(*r, c)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian_and_negative_field() {
        let mut h = DMatrix::<C64>::identity(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian { .. })));
        let sys = SpinSystem::bismuth();
        assert!(hamiltonian(&sys, -1e-3).is_err());
        let eig = diagonalize(&hamiltonian(&sys, 0.0).unwrap()).unwrap();
        assert!(label_states(&eig, &sys, 0.0).is_err());
    }

    #[test]
    fn labels_cover_every_state_once() {
        let sys = SpinSystem::bismuth();
        let lab = solve(&sys, 0.1).unwrap();
        let mut got = lab.labels.clone();
        got.sort();
        let mut want = sys.all_labels();
        want.sort();
        assert_eq!(got, want);
        let stretched = lab.index_of(StateLabel::new(5, 5)).unwrap();
        let ops = build_operators(&sys);
        let v = lab.states.column(stretched).into_owned();
        assert!((expectation(&ops.fz(), &v) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn clock_pair_labels_exist_at_operating_field() {
        let lab = solve(&SpinSystem::bismuth(), 0.05019).unwrap();
        for l in [
            StateLabel::new(5, -1),
            StateLabel::new(4, -2),
            StateLabel::new(5, -2),
            StateLabel::new(4, -1),
        ] {
            lab.index_of(l).unwrap();
        }
    }

    #[test]
    fn labels_agree_with_breit_rabi_branches() {
        let sys = SpinSystem::bismuth();
        for b in [1e-6, 0.01, 0.05019, 0.2, 0.8] {
            let lab = solve(&sys, b).unwrap();
            for (label, e) in analytic_breit_rabi(&sys, b).unwrap() {
                let num = lab.energy(label).unwrap();
                assert!(
                    (num - e).abs() < 1e-6 * sys.hyperfine_a,
                    "{label} at {b}: {num} vs {e}"
                );
            }
        }
    }

    #[test]
    fn breit_rabi_paschen_back_slopes() {
        let sys = SpinSystem::bismuth();
        let ge = sys.electron_zeeman();
        let (b1, b2) = (50.0, 50.001);
        let e1 = analytic_breit_rabi(&sys, b1).unwrap();
        let e2 = analytic_breit_rabi(&sys, b2).unwrap();
        for ((l, a), (_, b)) in e1.iter().zip(&e2) {
            let slope = (b - a) / (b2 - b1);
            let nuclear = sys.gyromag_nuclear * sys.nuclear_spin.value();
            assert!(
                (slope.abs() - ge / 2.0).abs() < nuclear + 1e-3 * ge,
                "{l}: slope {slope}"
            );
        }
    }

    #[test]
    fn breit_rabi_requires_spin_half() {
        let sys = SpinSystem {
            electron_spin: HalfInt::integer(1),
            ..SpinSystem::bismuth()
        };
        assert!(analytic_breit_rabi(&sys, 0.1).is_err());
    }

    #[test]
    fn zero_field_level_energies_use_manifolds() {
        let sys = SpinSystem::bismuth();
        let a = sys.hyperfine_a;
        let levels = level_energies(&sys, 0.0).unwrap();
        assert_eq!(levels.len(), 20);
        for (l, e) in levels {
            let want = if l.f == HalfInt::integer(5) {
                2.25 * a
            } else {
                -2.75 * a
            };
            assert!((e - want).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn half_int_display() {
        assert_eq!(HalfInt::from_twice(9).to_string(), "9/2");
        assert_eq!(StateLabel::new(4, -2).to_string(), "|4,-2>");
    }
}
