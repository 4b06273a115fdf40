//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use biclock::echo::{
    circular_components, contrast, fit_phase_dependence, matched_circular_field, phase_grid,
    phase_sweep, DriveConfig, FitParams, FixedDrive, Normalization, Pairing, PhasePoint, RabiModel,
    DEFAULT_TAU_PI,
};
use biclock::fieldmap::{
    cpw_field_at, sample_donors, Cpw, CpwGeometry, FieldSample, ImplantRegion,
};
use biclock::spectro::{fit_doublet, spectrum_from_echo, synthesize_echo, DoubletModel};
use biclock::spin::{analytic_breit_rabi, level_energies, SpinSystem};
use biclock::transitions::{
    find_clock_field, matrix_elements, transition_frequency, TransitionSpec,
};

const B_OP: f64 = 50.19e-3;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_frequency_anchor() -> Check {
    let f = transition_frequency(
        &SpinSystem::bismuth(),
        B_OP,
        &TransitionSpec::bismuth_allowed(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (f - 7.0805e9).abs() <= 5e6,
        format!("f_allowed = {:.6} GHz (target 7.0805 +- 0.005)", f * 1e-9),
    )
}

fn c2_doublet_splitting() -> Check {
    let sys = SpinSystem::bismuth();
    let fa = transition_frequency(&sys, B_OP, &TransitionSpec::bismuth_allowed())
        .map_err(|e| e.to_string())?;
    let ff = transition_frequency(&sys, B_OP, &TransitionSpec::bismuth_forbidden())
        .map_err(|e| e.to_string())?;
    let d = (fa - ff).abs();
    ensure(
        (d - 660e3).abs() <= 60e3,
        format!("|f_a - f_f| = {:.1} kHz (target 660 +- 60)", d * 1e-3),
    )
}

fn c3_clock_transition() -> Check {
    let ct = find_clock_field(
        &SpinSystem::bismuth(),
        &TransitionSpec::bismuth_allowed(),
        (0.010, 0.200),
    )
    .map_err(|e| e.to_string())?;
    let dist = (ct.field_bct - B_OP).abs();
    ensure(
        (ct.frequency_fct - 7.0315e9).abs() <= 10e6 && (dist - 30e-3).abs() <= 5e-3,
        format!(
            "f_ct = {:.6} GHz (7.0315 +- 0.010), |B_ct - B0| = {:.3} mT (30 +- 5)",
            ct.frequency_fct * 1e-9,
            dist * 1e3
        ),
    )
}

fn c4_opposite_helicity() -> Check {
    let sys = SpinSystem::bismuth();
    let a = matrix_elements(&sys, B_OP, &TransitionSpec::bismuth_allowed())
        .map_err(|e| e.to_string())?;
    let f = matrix_elements(&sys, B_OP, &TransitionSpec::bismuth_forbidden())
        .map_err(|e| e.to_string())?;
    let opposite_slopes = a.df_db.signum() != f.df_db.signum() && a.df_db != 0.0 && f.df_db != 0.0;
    let swapped = a.dominant_helicity() != f.dominant_helicity();
    let selective = a.selectivity() >= 10.0 && f.selectivity() >= 10.0;
    ensure(
        opposite_slopes && swapped && selective,
        format!(
            "df/dB {:+.3e} / {:+.3e} Hz/T, dominant {:?} / {:?}, selectivity {:.2e} / {:.2e}",
            a.df_db,
            f.df_db,
            a.dominant_helicity(),
            f.dominant_helicity(),
            a.selectivity(),
            f.selectivity()
        ),
    )
}

fn c5_breit_rabi_oracle() -> Check {
    let sys = SpinSystem::bismuth();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 0..=100 {
        let b = k as f64 * 0.01;
        let num = level_energies(&sys, b).map_err(|e| e.to_string())?;
        let ana = analytic_breit_rabi(&sys, b).map_err(|e| e.to_string())?;
        for (label, e) in &ana {
            let n = num
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, v)| *v)
                .ok_or(format!("{label} missing at {b} T"))?;
            worst = worst.max((n - e).abs() / e.abs());
            count += 1;
        }
    }
    ensure(
        worst < 1e-9 && count == 101 * 20,
        format!("{count} level comparisons, max relative error {worst:.3e} (< 1e-9)"),
    )
}

fn c6_circular_decomposition() -> Check {
    let b_max = 4.0 * matched_circular_field(2.0003, DEFAULT_TAU_PI);
    let axis: Vec<f64> = (0..100).map(|k| b_max * k as f64 / 99.0).collect();
    let (mut worst_par, mut worst_lin, mut worst_circ): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &d in &axis {
        for &c in &axis {
            for k in 0..36 {
                let phi = 2.0 * PI * k as f64 / 36.0;
                let p = circular_components(d, c, phi);
                let lhs = p.b_sigma_cw.powi(2) + p.b_sigma_ccw.powi(2);
                let rhs = 0.5 * (d * d + c * c);
                if rhs > 0.0 {
                    worst_par = worst_par.max((lhs - rhs).abs() / rhs);
                } else {
                    worst_par = worst_par.max(lhs);
                }
            }
        }
        let lin = circular_components(0.0, d, 1.0);
        worst_lin = worst_lin.max((lin.b_sigma_cw - lin.b_sigma_ccw).abs());
        let circ = circular_components(d, d, 0.0);
        worst_circ = worst_circ.max((circ.b_sigma_cw - d).abs().max(circ.b_sigma_ccw));
    }
    ensure(
        worst_par <= 1e-12 && worst_lin == 0.0 && worst_circ <= 1e-12 * b_max,
        format!(
            "100x100x36 grid: parallelogram {worst_par:.2e}, B_D=0 split {worst_lin:.1e}, pure circular residual {worst_circ:.1e} T"
        ),
    )
}

/// Normalized allowed amplitude of the default 25-point sweep.
const GOLDEN_SWEEP: [f64; 25] = [
    4.1988758993558619e-4,
    9.7799320746007473e-3,
    6.1203789683310736e-2,
    1.5942665200113823e-1,
    2.7732076996859018e-1,
    3.9216476128015842e-1,
    5.0000000000000000e-1,
    6.0783523871984135e-1,
    7.2267923003140966e-1,
    8.4057334799886174e-1,
    9.3879621031668925e-1,
    9.9022006792539918e-1,
    9.9958011241006439e-1,
    9.9022006792539929e-1,
    9.3879621031668936e-1,
    8.4057334799886207e-1,
    7.2267923003140999e-1,
    6.0783523871984135e-1,
    5.0000000000000000e-1,
    3.9216476128015876e-1,
    2.7732076996859018e-1,
    1.5942665200113829e-1,
    6.1203789683310944e-2,
    9.7799320746008410e-3,
    4.1988758993558619e-4,
];

fn c7_phase_contrast() -> Check {
    let samples = sample_donors(&CpwGeometry::default(), &ImplantRegion::default(), 32, 8)
        .map_err(|e| e.to_string())?;
    let mean = samples.iter().map(|s| s.magnitude * s.weight).sum::<f64>();
    let homogeneous: Vec<FieldSample> = samples
        .iter()
        .map(|s| FieldSample::new(s.x, s.z, 0.0, mean, s.weight))
        .collect();
    let phases = phase_grid(25);
    let sweep = |s: &[FieldSample]| {
        let d = DriveConfig::matched(s, 2.0003, DEFAULT_TAU_PI).map_err(|e| e.to_string())?;
        phase_sweep(s, &d, &phases, Normalization::PerPoint, Pairing::default())
            .map_err(|e| e.to_string())
    };
    let hom = sweep(&homogeneous)?;
    let cpw = sweep(&samples)?;
    let ea: Vec<f64> = hom.iter().map(|(_, p)| p.e_allowed).collect();
    let lo = ea.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ea.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = 4.0 * f64::EPSILON;
    let full = lo.abs() <= eps && (hi - 1.0).abs() <= eps;
    let (c_hom, c_cpw) = (contrast(&hom), contrast(&cpw));
    let golden = cpw
        .iter()
        .zip(GOLDEN_SWEEP)
        .map(|((_, p), g)| (p.e_allowed - g).abs())
        .fold(0.0, f64::max);
    ensure(
        full && c_cpw < c_hom && golden <= 1e-9,
        format!(
            "homogeneous min/max {lo:.1e}/{hi:.15}, contrast {c_hom:.6} -> {c_cpw:.6} with CPW spread, golden deviation {golden:.1e}"
        ),
    )
}

fn c8_fit_round_trip() -> Check {
    let samples = sample_donors(&CpwGeometry::default(), &ImplantRegion::default(), 32, 8)
        .map_err(|e| e.to_string())?;
    let m = DriveConfig::matched(&samples, 2.0003, DEFAULT_TAU_PI).map_err(|e| e.to_string())?;
    let fixed = FixedDrive {
        tau_pi: DEFAULT_TAU_PI,
        g_drive: 2.0003,
        rabi: RabiModel::Bare,
        pairing: Pairing::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(20_170_101);
    let phases = phase_grid(25);
    let (mut worst_amp, mut worst_phase): (f64, f64) = (0.0, 0.0);
    let mut failures = 0;
    for _ in 0..20 {
        let truth = (
            m.b1_dielectric * rng.random_range(0.5..1.5),
            m.b1_cpw_scale * rng.random_range(0.5..1.5),
            rng.random_range(-1.0..1.0),
        );
        let base = DriveConfig {
            b1_dielectric: truth.0,
            b1_cpw_scale: truth.1,
            ..m
        };
        let model_phases: Vec<f64> = phases.iter().map(|p| p - truth.2).collect();
        let data: Vec<PhasePoint> = phase_sweep(
            &samples,
            &base,
            &model_phases,
            Normalization::PerPoint,
            Pairing::default(),
        )
        .map_err(|e| e.to_string())?
        .into_iter()
        .zip(&phases)
        .map(|((_, p), &phi)| PhasePoint {
            phi,
            e_forbidden: p.e_forbidden,
            e_allowed: p.e_allowed,
        })
        .collect();
        let init = FitParams {
            b1_dielectric: truth.0 * (1.0 + rng.random_range(-0.2..0.2)),
            b1_cpw_scale: truth.1 * (1.0 + rng.random_range(-0.2..0.2)),
            phase_offset: truth.2 + rng.random_range(-0.2..0.2),
            residual_sse: 0.0,
        };
        let p = fit_phase_dependence(&data, &samples, fixed, init)
            .map_err(|e| e.to_string())?
            .params;
        let amp = (p.b1_dielectric / truth.0 - 1.0)
            .abs()
            .max((p.b1_cpw_scale / truth.1 - 1.0).abs());
        let dphi = (p.phase_offset - truth.2).abs();
        worst_amp = worst_amp.max(amp);
        worst_phase = worst_phase.max(dphi);
        if amp > 0.05 || dphi > 0.01 {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!(
            "20 trials, {failures} failed; worst amplitude error {:.2e}%, worst phase error {worst_phase:.2e} rad",
            100.0 * worst_amp
        ),
    )
}

fn c9_spectrum_round_trip() -> Check {
    let model = DoubletModel::default();
    let trace = synthesize_echo(&model, 40e-6, 10e-9).map_err(|e| e.to_string())?;
    let spectrum = spectrum_from_echo(&trace, 8).map_err(|e| e.to_string())?;
    let [a, b] = fit_doublet(&spectrum).map_err(|e| e.to_string())?;
    let sep = b.center - a.center;
    let truth = model.offsets[1] - model.offsets[0];
    ensure(
        (sep - truth).abs() <= 30e3
            && (a.fwhm - 300e3).abs() <= 15e3
            && (b.fwhm - 300e3).abs() <= 15e3,
        format!(
            "separation {:.3} kHz (synthesized {:.0}), widths {:.3} / {:.3} kHz",
            sep * 1e-3,
            truth * 1e-3,
            a.fwhm * 1e-3,
            b.fwhm * 1e-3
        ),
    )
}

fn c10_fieldmap() -> Check {
    let g = CpwGeometry::default();
    let implant = ImplantRegion::default();
    let coarse = sample_donors(&g, &implant, 32, 8).map_err(|e| e.to_string())?;
    let fine_g = CpwGeometry {
        filaments_per_strip: 2 * g.filaments_per_strip,
        ..g.clone()
    };
    let fine = sample_donors(&fine_g, &implant, 32, 8).map_err(|e| e.to_string())?;
    let refine = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a.magnitude / b.magnitude - 1.0).abs())
        .fold(0.0, f64::max);
    let cpw = Cpw::new(&g).map_err(|e| e.to_string())?;
    let mut mirror: f64 = 0.0;
    for s in &coarse {
        let (bx, bz) = cpw.field_at(-s.x, s.z).map_err(|e| e.to_string())?;
        mirror = mirror.max(((bx - s.bx).abs().max((bz + s.bz).abs())) / s.magnitude);
    }
    let (bx, bz) = cpw_field_at(&g, (g.left_gap_center(), 50e-9)).map_err(|e| e.to_string())?;
    let normal = bz.abs() / bx.hypot(bz);
    ensure(
        refine < 5e-3 && mirror <= 1e-12 && normal > 0.8,
        format!(
            "N {} -> {}: max change {:.3e}%, mirror antisymmetry {mirror:.1e}, mid-gap |Bz|/|B| = {normal:.4}",
            g.filaments_per_strip,
            fine_g.filaments_per_strip,
            100.0 * refine
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 frequency anchor", c1_frequency_anchor),
        ("2 doublet splitting", c2_doublet_splitting),
        ("3 clock transition", c3_clock_transition),
        ("4 opposite helicity", c4_opposite_helicity),
        ("5 Breit-Rabi oracle", c5_breit_rabi_oracle),
        ("6 circular decomposition", c6_circular_decomposition),
        ("7 phase-sweep contrast", c7_phase_contrast),
        ("8 fit round trip", c8_fit_round_trip),
        ("9 spectrum round trip", c9_spectrum_round_trip),
        ("10 field map", c10_fieldmap),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
