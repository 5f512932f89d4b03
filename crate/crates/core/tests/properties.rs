use nalgebra::DMatrix;
use nilkl::algebra::{change_frame, realify, validate, HermitianLieData};
use nilkl::catalog::{from_coframe, random_two_step_with, to_coframe, TwoStepMode};
use nilkl::classify::{classify_ckl, classify_rkl, classify_skl, simultaneous_diagonalize_seeded};
use nilkl::connections::{connection, curvature, ConnectionKind};
use nilkl::exec::Execution;
use nilkl::forms::d_squared_residual;
use nilkl::linalg::{unitary_deviation, CMat};
use nilkl::{Complex64, DEFAULT_TOL};
use proptest::prelude::*;

fn mode_strategy() -> impl Strategy<Value = TwoStepMode> {
    prop_oneof![
        Just(TwoStepMode::Full),
        Just(TwoStepMode::Holomorphic),
        Just(TwoStepMode::AbelianJ),
    ]
}

/// `(n, r, seed, mode)` for the two-step generator.
fn structure() -> impl Strategy<Value = HermitianLieData> {
    (2usize..=4)
        .prop_flat_map(|n| (Just(n), 1..=n, any::<u64>(), mode_strategy()))
        .prop_map(|(n, r, seed, mode)| random_two_step_with(n, r, seed, mode).unwrap())
}

fn unitary(n: usize, entries: &[(f64, f64)]) -> CMat {
    let a = DMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        Complex64::new(re, im)
    });
    a.qr().q()
}

fn frobenius(r: &ndarray::Array4<f64>) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_squared_vanishes(data in structure()) {
        prop_assert!(d_squared_residual(&data, Execution::Sequential) < 1e-12 * (1.0 + data.scale().powi(2)));
    }

    #[test]
    fn coframe_round_trip(data in structure()) {
        let back = from_coframe(&to_coframe(&data)).unwrap();
        prop_assert!(back.distance(&data) <= 1e-15 * (1.0 + data.scale()));
    }

    #[test]
    fn curvature_is_antisymmetric(data in structure()) {
        let real = realify(&data).unwrap();
        for kind in ConnectionKind::ALL {
            let r = curvature(&connection(&data, kind).unwrap(), &real).unwrap();
            let (a, b) = r.antisymmetry_residuals();
            let bound = 1e-12 * (1.0 + data.scale().powi(2));
            prop_assert!(a < bound && b < bound, "{kind}: {a} {b}");
        }
    }

    #[test]
    fn verdicts_are_scale_invariant(data in structure(), exp in -3.0f64..3.0) {
        let scaled = data.scaled(10f64.powf(exp));
        prop_assert_eq!(
            classify_skl(&data, DEFAULT_TOL).unwrap().verdict,
            classify_skl(&scaled, DEFAULT_TOL).unwrap().verdict
        );
        prop_assert_eq!(
            classify_ckl(&data, DEFAULT_TOL).unwrap().verdict,
            classify_ckl(&scaled, DEFAULT_TOL).unwrap().verdict
        );
        prop_assert_eq!(
            classify_rkl(&data, DEFAULT_TOL).unwrap().verdict,
            classify_rkl(&scaled, DEFAULT_TOL).unwrap().verdict
        );
    }

    #[test]
    fn frame_changes_preserve_geometry(
        data in structure(),
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let n = data.n();
        let u = unitary(n, &entries);
        prop_assume!(unitary_deviation(&u) < 1e-12);
        let moved = change_frame(&data, &u).unwrap();
        prop_assert!(validate(&moved, 1e-10 * (1.0 + data.scale().powi(2))).valid);

        let (ra, rb) = (realify(&data).unwrap(), realify(&moved).unwrap());
        for kind in ConnectionKind::ALL {
            let a = frobenius(&curvature(&connection(&data, kind).unwrap(), &ra).unwrap().r);
            let b = frobenius(&curvature(&connection(&moved, kind).unwrap(), &rb).unwrap().r);
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a), "{kind}: {a} vs {b}");
        }

        let (sa, sb) = (classify_skl(&data, DEFAULT_TOL).unwrap(), classify_skl(&moved, DEFAULT_TOL).unwrap());
        prop_assert_eq!(sa.verdict, sb.verdict);
        if let (Some(x), Some(y)) = (sa.normal_form, sb.normal_form) {
            prop_assert_eq!((x.r, x.s), (y.r, y.s));
            for (p, q) in x.lambdas.iter().zip(&y.lambdas) {
                prop_assert!((p - q).abs() < 1e-9 * (1.0 + p));
            }
        }
        prop_assert_eq!(
            classify_ckl(&data, DEFAULT_TOL).unwrap().verdict,
            classify_ckl(&moved, DEFAULT_TOL).unwrap().verdict
        );
        prop_assert_eq!(
            classify_rkl(&data, DEFAULT_TOL).unwrap().verdict,
            classify_rkl(&moved, DEFAULT_TOL).unwrap().verdict
        );
    }

    #[test]
    fn hidden_diagonal_families_are_recovered(
        n in 1usize..=5,
        k in 1usize..=3,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 25),
        spectrum in prop::collection::vec((-2i32..=2, -2i32..=2), 15),
        seed in any::<u64>(),
    ) {
        // small integer spectra make repeated eigenvalues common
        let w = unitary(n, &entries[..n * n]);
        prop_assume!(unitary_deviation(&w) < 1e-12);
        let mats: Vec<CMat> = (0..k)
            .map(|m| {
                let d = CMat::from_fn(n, n, |i, j| {
                    if i == j {
                        let (re, im) = spectrum[m * 5 + i];
                        Complex64::new(re as f64, im as f64)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                w.adjoint() * d * &w
            })
            .collect();
        let diag = simultaneous_diagonalize_seeded(&mats, 1e-9, seed).unwrap();
        prop_assert!(unitary_deviation(&diag.u) < 1e-10);
        prop_assert!(diag.residual < 1e-8, "{}", diag.residual);
    }
}
