use std::f64::consts::PI;

use proptest::prelude::*;

use biclock::echo::{
    circular_components, ensemble_echo, matched_circular_field, phase_sweep, DriveConfig,
    Normalization, Pairing, RabiModel, DEFAULT_TAU_PI,
};
use biclock::fieldmap::{Cpw, CpwGeometry, FieldSample};
use biclock::spectro::{fit_doublet, spectrum_from_echo, synthesize_echo, DoubletModel};
use biclock::spin::{analytic_breit_rabi, level_energies, SpinSystem};

fn b_pi() -> f64 {
    matched_circular_field(2.0003, DEFAULT_TAU_PI)
}

fn ensemble(mags: &[f64]) -> Vec<FieldSample> {
    let w = 1.0 / mags.len() as f64;
    mags.iter()
        .enumerate()
        .map(|(k, &m)| FieldSample::new(k as f64, 0.0, 0.0, m, w))
        .collect()
}

fn drive(d: f64, scale: f64, phi: f64) -> DriveConfig {
    DriveConfig {
        b1_dielectric: d,
        b1_cpw_scale: scale,
        phase_phi: phi,
        tau_pi: DEFAULT_TAU_PI,
        g_drive: 2.0003,
        rabi: RabiModel::Bare,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parallelogram_identity(d in 0.0..1e-3f64, c in 0.0..1e-3f64, phi in -10.0..10.0f64) {
        let p = circular_components(d, c, phi);
        prop_assert!(p.b_sigma_cw >= 0.0 && p.b_sigma_ccw >= 0.0);
        let rhs = 0.5 * (d * d + c * c);
        let lhs = p.b_sigma_cw.powi(2) + p.b_sigma_ccw.powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn echo_symmetries(
        mags in prop::collection::vec(0.5..1.5f64, 1..12),
        d in 0.2..2.0f64,
        phi in 0.0..(2.0 * PI),
    ) {
        let s = ensemble(&mags);
        let dr = drive(d * b_pi(), b_pi(), phi);
        let p = ensemble_echo(&s, &dr, Pairing::default()).unwrap();
        let q = ensemble_echo(&s, &dr, Pairing::default().swapped()).unwrap();
        prop_assert_eq!(p.e_allowed, q.e_forbidden);
        prop_assert_eq!(p.e_forbidden, q.e_allowed);

        let later = drive(d * b_pi(), b_pi(), phi + 2.0 * PI);
        let r = ensemble_echo(&s, &later, Pairing::default()).unwrap();
        prop_assert!((r.e_allowed - p.e_allowed).abs() <= 1e-12 * p.total().abs().max(1e-300));

        if let Ok(n) = p.normalize() {
            prop_assert!((n.e_forbidden + n.e_allowed - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sweep_rows_sum_to_one(mags in prop::collection::vec(0.8..1.2f64, 1..8), d in 0.3..1.7f64) {
        let s = ensemble(&mags);
        let phases: Vec<f64> = (0..9).map(|k| 0.7 * k as f64).collect();
        let sweep = phase_sweep(&s, &drive(d * b_pi(), b_pi(), 0.0), &phases, Normalization::PerPoint, Pairing::default());
        for (_, p) in sweep.unwrap() {
            prop_assert!((p.e_forbidden + p.e_allowed - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn level_energies_are_traceless_and_match_closed_form(b in 0.0..1.0f64) {
        let sys = SpinSystem::bismuth();
        let num = level_energies(&sys, b).unwrap();
        let scale = sys.hyperfine_a * 5.0;
        let trace: f64 = num.iter().map(|(_, e)| e).sum();
        prop_assert!(trace.abs() < 1e-9 * scale);
        for (label, e) in analytic_breit_rabi(&sys, b).unwrap() {
            let n = num.iter().find(|(l, _)| *l == label).unwrap().1;
            prop_assert!((n - e).abs() <= 1e-9 * e.abs());
        }
    }

    #[test]
    fn cpw_field_mirror_and_linearity(x in 1e-6..60e-6f64, z in 1e-9..5e-6f64, current in 0.1..5.0f64) {
        let g = CpwGeometry { filaments_per_strip: 64, ..CpwGeometry::default() };
        let scaled = CpwGeometry { drive_current_total: current, ..g.clone() };
        let (c1, c2) = (Cpw::new(&g).unwrap(), Cpw::new(&scaled).unwrap());
        let (bx, bz) = c1.field_at(x, z).unwrap();
        let (mx, mz) = c1.field_at(-x, z).unwrap();
        let m = bx.hypot(bz);
        prop_assert!((mx - bx).abs() <= 1e-12 * m && (mz + bz).abs() <= 1e-12 * m);
        let (sx, sz) = c2.field_at(x, z).unwrap();
        prop_assert!((sx - current * bx).abs() <= 1e-12 * current * m);
        prop_assert!((sz - current * bz).abs() <= 1e-12 * current * m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn doublet_round_trip(
        center in -0.5e6..0.5e6f64,
        width in 100e3..500e3f64,
        gap in 2.0..4.0f64,
        ratio in 0.2..5.0f64,
    ) {
        let half = 0.5 * gap * width;
        let model = DoubletModel {
            offsets: [center - half, center + half],
            amplitudes: [1.0, ratio],
            linewidth_fwhm: width,
            ..DoubletModel::default()
        };
        let trace = synthesize_echo(&model, 60e-6, 10e-9).unwrap();
        let sp = spectrum_from_echo(&trace, 8).unwrap();
        let [a, b] = fit_doublet(&sp).unwrap();
        prop_assert!((a.center - model.offsets[0]).abs() < 5e3);
        prop_assert!((b.center - model.offsets[1]).abs() < 5e3);
        prop_assert!((a.fwhm / width - 1.0).abs() < 0.05 && (b.fwhm / width - 1.0).abs() < 0.05);
        prop_assert!((b.height / a.height / ratio - 1.0).abs() < 0.02);
    }
}
