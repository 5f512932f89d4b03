//! Strominger Kähler-like decision and normal-form extraction for nilpotent
//! groups.

use nalgebra::DVector;
use num_complex::Complex64;

use super::diag::simultaneous_diagonalize_seeded;
use super::{kl_max, linear, quadratic, KLDecision, ALL_PASSED};
use crate::algebra::{
    change_frame_unchecked, ensure_valid, forms_with_d_in_ideal, frame_from_coframe, lower_central_series_real,
    realify_unchecked, HermitianLieData,
};
use crate::catalog::{from_coframe_unchecked, CoframeDifferentials};
use crate::connections::{torsion_derivative_unchecked, ConnectionKind};
use crate::forms::metric_residuals_unchecked;
use crate::linalg::{complete_basis, max_abs, standard_adapted, unit, CMat, CVec, RVec};
use crate::{Error, Result, RANK_TOL};

/// Coframe `dφ_i = 0` (`i ≤ r`), `dφ_α = Σ_i Y_{iα} φ_i∧φ̄_i` (`α > r`)
/// reached from the input by `e' = U e`.
#[derive(Debug, Clone, PartialEq)]
pub struct SKLNormalForm {
    pub n: usize,
    /// Dimension of the closed `(1,0)`-forms.
    pub r: usize,
    /// Number of nonzero rows of `y`; these come first.
    pub s: usize,
    /// `r × (n − r)`, column `α − r − 1`.
    pub y: CMat,
    /// Descending, one per nonzero row.
    pub lambdas: Vec<f64>,
    /// Unit vectors with `[ε_i, ε_{n+i}] = λ_i X_i`, coordinates in `ε`.
    pub x: Vec<RVec>,
    pub u: CMat,
}

impl SKLNormalForm {
    pub fn to_coframe(&self) -> CoframeDifferentials {
        let mut cd = CoframeDifferentials::new(self.n);
        for i in 0..self.r {
            for col in 0..(self.n - self.r) {
                let v = self.y[(i, col)];
                if v != Complex64::new(0.0, 0.0) {
                    cd.add_mixed(self.r + 1 + col, i + 1, i + 1, v);
                }
            }
        }
        cd
    }

    /// Always a Lie algebra: every bracket lands in the center.
    pub fn to_data(&self) -> Result<HermitianLieData> {
        from_coframe_unchecked(&self.to_coframe())
    }
}

/// Unitary `Q` such that `Y Q†` has its zero columns first, followed by
/// linearly independent ones; returns `Q` and the number of zero columns.
pub fn prune_zero_columns(y: &CMat, scale: f64) -> (CMat, usize) {
    let m = y.ncols();
    if m == 0 {
        return (CMat::identity(0, 0), 0);
    }
    // eigenvectors of Y†Y: zero eigenvalues give the null columns
    let gram = y.adjoint() * y;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = RANK_TOL * top.sqrt().max(scale);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let zeros = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i].max(0.0).sqrt() <= cut)
        .count();
    if zeros == 0 {
        return (CMat::identity(m, m), 0);
    }
    // Q† has the chosen eigenvectors as columns
    let q_adj = CMat::from_fn(m, m, |a, b| eig.eigenvectors[(a, order[b])]);
    (q_adj.adjoint(), zeros)
}

fn block_diag(head: &CMat, tail: &CMat) -> CMat {
    let (p, q) = (head.nrows(), tail.nrows());
    let mut out = CMat::zeros(p + q, p + q);
    out.view_mut((0, 0), (p, p)).copy_from(head);
    out.view_mut((p, p), (q, q)).copy_from(tail);
    out
}

/// Largest entry outside `C^α_{ik}`, `D^i_{αk}` with `i, k < r ≤ α`.
fn split_violation(data: &HermitianLieData, r: usize) -> f64 {
    let n = data.n();
    let (c, d) = (data.c_array(), data.d_array());
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                if !(j >= r && i < r && k < r) {
                    worst = worst.max(c[[j, i, k]].norm());
                }
                if !(j < r && i >= r && k < r) {
                    worst = worst.max(d[[j, i, k]].norm());
                }
            }
        }
    }
    worst
}

pub fn classify_skl(data: &HermitianLieData, tol: f64) -> Result<KLDecision> {
    classify_skl_seeded(data, tol, 0)
}

/// Runs the normal-form pipeline and cross-checks its verdict against the
/// Strominger curvature symmetries. The seed drives the simultaneous
/// diagonalization.
pub fn classify_skl_seeded(data: &HermitianLieData, tol: f64, seed: u64) -> Result<KLDecision> {
    ensure_valid(data)?;
    if !lower_central_series_real(&realify_unchecked(data)).nilpotent {
        return Err(Error::NotNilpotent);
    }
    let m = data.scale();
    let mut out = KLDecision::new();
    let direct = quadratic(kl_max(data, ConnectionKind::Strominger)?, m);
    let direct_ok = direct < tol;

    pipeline(data, tol, seed, m, &mut out)?;
    out.residuals.insert("strominger-kl".into(), direct);
    if out.stage.is_empty() {
        out.stage = ALL_PASSED.into();
    }
    let pipeline_ok = out.stage == ALL_PASSED;
    if pipeline_ok != direct_ok {
        return Err(Error::TheoremViolation(format!(
            "normal-form pipeline says {pipeline_ok} (stage {}), Strominger curvature residual is {direct:e}",
            out.stage
        )));
    }
    out.verdict = pipeline_ok;
    if !out.verdict {
        out.normal_form = None;
    }
    Ok(out)
}

fn pipeline(data: &HermitianLieData, tol: f64, seed: u64, m: f64, out: &mut KLDecision) -> Result<()> {
    let n = data.n();
    if m == 0.0 {
        out.normal_form = Some(SKLNormalForm {
            n,
            r: n,
            s: 0,
            y: CMat::zeros(n, 0),
            lambdas: Vec::new(),
            x: Vec::new(),
            u: CMat::identity(n, n),
        });
        return Ok(());
    }

    if !out.check("abelian-J", linear(data.c_norm(), m), tol) {
        return Ok(());
    }
    if !out.check(
        "pluriclosed",
        quadratic(metric_residuals_unchecked(data)?.pluriclosed, m),
        tol,
    ) {
        return Ok(());
    }
    let td = torsion_derivative_unchecked(data, ConnectionKind::Strominger)?;
    if !out.check(
        "torsion-parallel",
        quadratic(td.plain_norm().max(td.bar_norm()), m),
        tol,
    ) {
        return Ok(());
    }

    // closed (1,0)-forms first
    let ident: Vec<CVec> = (0..n).map(|i| unit::<Complex64>(n, i)).collect();
    let closed = forms_with_d_in_ideal(data, &ident, 0);
    let r = closed.len();
    let rows = complete_basis(&standard_adapted(&closed, n), n);
    let u1 = frame_from_coframe(&rows);
    let reduced = change_frame_unchecked(data, &u1);
    if !out.check("closed-frame", linear(split_violation(&reduced, r), m), tol) {
        return Ok(());
    }

    // D_α(i, j) = D^j_{αi}
    let d = reduced.d_array();
    let dm: Vec<CMat> = (r..n).map(|a| CMat::from_fn(r, r, |i, j| d[[j, a, i]])).collect();
    let mut comm: f64 = 0.0;
    for a in &dm {
        for b in &dm {
            comm = comm.max(max_abs(&(a * b - b * a)));
            comm = comm.max(max_abs(&(a.adjoint() * b - b * a.adjoint())));
        }
    }
    if !out.check("commuting-normal", quadratic(comm, m), tol) {
        return Ok(());
    }

    let diag = simultaneous_diagonalize_seeded(&dm, tol * m * m, seed)?;
    if !out.check("diagonalize", linear(diag.residual, m), tol) {
        return Ok(());
    }
    let u2 = block_diag(&diag.u, &CMat::identity(n - r, n - r));
    let diagonal = change_frame_unchecked(&reduced, &u2);
    let d = diagonal.d_array();
    let y_raw = CMat::from_fn(r, n - r, |i, col| -d[[i, r + col, i]].conj());

    // columns of Y that vanish belong to closed forms; none are expected
    // once r counts all closed forms, but the step keeps the shape honest
    let (q, zeros) = prune_zero_columns(&y_raw, m);
    let u3 = block_diag(&CMat::identity(r, r), &q);
    let y_pruned = &y_raw * q.adjoint();
    let rt = r + zeros;
    let y = CMat::from_fn(rt, n - rt, |i, col| {
        if i < r {
            y_pruned[(i, zeros + col)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });

    let mut orth: f64 = 0.0;
    for i in 0..rt {
        for k in 0..rt {
            if i != k {
                let s: Complex64 = (0..(n - rt))
                    .map(|a| y[(i, a)] * y[(k, a)].conj() + y[(k, a)] * y[(i, a)].conj())
                    .sum();
                orth = orth.max(s.norm());
            }
        }
    }
    if !out.check("y-orthogonality", quadratic(orth, m), tol) {
        return Ok(());
    }

    // x_i = (−v_i, u_i); nonzero rows first, then λ descending
    let norms: Vec<f64> = (0..rt)
        .map(|i| y.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let cut = RANK_TOL * m;
    let mut perm: Vec<usize> = (0..rt).collect();
    perm.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s = perm.iter().filter(|&&i| norms[i] > cut).count();
    let mut p = CMat::identity(n, n);
    for (a, &b) in perm.iter().enumerate() {
        for col in 0..rt {
            p[(a, col)] = Complex64::new(if col == b { 1.0 } else { 0.0 }, 0.0);
        }
    }
    let y = CMat::from_fn(rt, n - rt, |i, col| y[(perm[i], col)]);
    let mut lambdas = Vec::with_capacity(s);
    let mut xs = Vec::with_capacity(s);
    for i in 0..s {
        let lambda = std::f64::consts::SQRT_2 * norms[perm[i]];
        let mut x = DVector::<f64>::zeros(2 * n);
        for col in 0..(n - rt) {
            let v = y[(i, col)];
            x[rt + col] = -std::f64::consts::SQRT_2 * v.im / lambda;
            x[n + rt + col] = std::f64::consts::SQRT_2 * v.re / lambda;
        }
        lambdas.push(lambda);
        xs.push(x);
    }
    if !(n - rt <= s && s <= rt.min(2 * (n - rt))) {
        return Err(Error::TheoremViolation(format!(
            "s = {s} outside its range for n = {n}, r = {rt}"
        )));
    }

    let nf = SKLNormalForm {
        n,
        r: rt,
        s,
        y,
        lambdas,
        x: xs,
        u: p * u3 * u2 * u1,
    };
    let rebuilt = nf.to_data()?;
    let round_trip = change_frame_unchecked(data, &nf.u).distance(&rebuilt);
    out.check("normal-form", linear(round_trip, m), tol);
    out.normal_form = Some(nf);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{change_frame, realify};
    use crate::catalog::from_coframe;
    use crate::catalog::{
        build_family, random_theorem_shape, random_two_step_with, Cor12Params, Cor12Variant, Family, TwoStepMode,
    };
    use crate::linalg::{c, unitary_deviation};
    use crate::DEFAULT_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cor12(variant: Cor12Variant, pairs: &[(&str, f64)]) -> HermitianLieData {
        let mut p = Cor12Params::default();
        for (k, v) in pairs {
            p.set(k, *v).unwrap();
        }
        build_family(&Family::Cor12 { variant, params: p }).unwrap()
    }

    fn check_normal_form(data: &HermitianLieData, nf: &SKLNormalForm) {
        assert!(unitary_deviation(&nf.u) < 1e-12);
        let rebuilt = nf.to_data().unwrap();
        assert!(change_frame(data, &nf.u).unwrap().distance(&rebuilt) < 1e-10 * (1.0 + data.scale()));
        // λ_i X_i is the bracket [ε_i, ε_{n+i}]
        let real = realify(&rebuilt).unwrap();
        let n = nf.n;
        for (i, x) in nf.x.iter().enumerate() {
            assert!((x.norm() - 1.0).abs() < 1e-12);
            for a in 0..(2 * n) {
                let b = real.bracket[[i, n + i, a]];
                assert!(
                    (b - nf.lambdas[i] * x[a]).abs() < 1e-10 * (1.0 + data.scale()),
                    "{b} vs {}",
                    x[a]
                );
            }
            for y in &nf.x[..i] {
                assert!(x.dot(y).abs() < 1e-10);
            }
        }
        for w in nf.lambdas.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn kodaira_normal_form() {
        for l in [0.5, 1.0, 2.0] {
            let data = build_family(&Family::Kodaira { lambda: l }).unwrap();
            let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
            assert!(dec.verdict, "{dec:?}");
            assert_eq!(dec.stage, ALL_PASSED);
            let nf = dec.normal_form.as_ref().unwrap();
            assert_eq!((nf.r, nf.s), (1, 1));
            assert!((nf.lambdas[0] - std::f64::consts::SQRT_2 * l).abs() < 1e-12);
            let mut e4 = DVector::<f64>::zeros(4);
            e4[3] = 1.0;
            assert!((&nf.x[0] - e4).norm() < 1e-12);
            check_normal_form(&data, nf);
        }
    }

    #[test]
    fn three_dimensional_family() {
        let data = cor12(Cor12Variant::N3, &[("lambda", 1.0), ("a", 1.0)]);
        let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
        let nf = dec.normal_form.as_ref().unwrap();
        assert_eq!((nf.r, nf.s), (2, 2));
        for l in &nf.lambdas {
            assert!((l - std::f64::consts::SQRT_2).abs() < 1e-12);
        }
        check_normal_form(&data, nf);
    }

    #[test]
    fn iwasawa_fails_abelian_j() {
        let data = build_family(&Family::Iwasawa).unwrap();
        let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
        assert!(!dec.verdict);
        assert_eq!(dec.stage, "abelian-J");
        assert!(dec.normal_form.is_none());
    }

    #[test]
    fn every_family_has_expected_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for variant in Cor12Variant::ALL {
            for _ in 0..5 {
                let mut p = Cor12Params::default();
                for name in variant.param_names() {
                    let v = if name.starts_with("lambda") {
                        rng.random_range(0.1..10.0)
                    } else {
                        rng.random_range(-5.0..5.0)
                    };
                    if *name != "y" {
                        p.set(name, v).unwrap();
                    }
                }
                let Ok(data) = build_family(&Family::Cor12 { variant, params: p }) else {
                    continue;
                };
                let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
                assert!(dec.verdict, "{variant}: {dec:?}");
                let nf = dec.normal_form.as_ref().unwrap();
                assert_eq!((nf.r, nf.s), variant.expected_rs(), "{variant}");
                check_normal_form(&data, nf);
            }
        }
    }

    #[test]
    fn hidden_normal_form_is_recovered() {
        // theorem-shaped data in a scrambled unitary frame
        let data = cor12(
            Cor12Variant::N5b,
            &[("lambda1", 1.0), ("lambda2", 2.0), ("a", 0.5), ("b", -1.0), ("c", 0.3)],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = CMat::from_fn(5, 5, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let w = a.qr().q();
        let scrambled = change_frame(&data, &w).unwrap();
        let dec = classify_skl(&scrambled, DEFAULT_TOL).unwrap();
        assert!(dec.verdict, "{dec:?}");
        let nf = dec.normal_form.as_ref().unwrap();
        assert_eq!((nf.r, nf.s), Cor12Variant::N5b.expected_rs());
        check_normal_form(&scrambled, nf);
        let direct = classify_skl(&data, DEFAULT_TOL).unwrap();
        for (a, b) in nf.lambdas.iter().zip(&direct.normal_form.unwrap().lambdas) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_control_fails_pluriclosed() {
        let mut cd = crate::catalog::cor12_coframe(
            Cor12Variant::N5b,
            &Cor12Params {
                lambda1: Some(1.0),
                lambda2: Some(1.0),
                a: Some(1.0),
                b: Some(1.0),
                c: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        // drop the compensating φ_3φ̄_3 term of dφ_5
        cd.mixed[4].retain(|t| !(t.i == 3 && t.k == 3));
        let data = from_coframe(&cd).unwrap();
        let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
        assert!(!dec.verdict);
        assert_eq!(dec.stage, "pluriclosed");
        assert!(dec.residual("pluriclosed").unwrap() >= 0.5);
    }

    #[test]
    fn random_theorem_shapes_follow_orthogonality() {
        for seed in 0..30 {
            let (data, _) = random_theorem_shape(4, 2, seed).unwrap();
            let dec = classify_skl(&data, DEFAULT_TOL).unwrap();
            if let Some(nf) = &dec.normal_form {
                check_normal_form(&data, nf);
            }
            let y_ok = dec.residual("pluriclosed").unwrap() < DEFAULT_TOL;
            assert_eq!(dec.verdict, y_ok);
        }
    }

    #[test]
    fn abelian_is_trivially_positive() {
        let dec = classify_skl(&HermitianLieData::zeros(3), DEFAULT_TOL).unwrap();
        assert!(dec.verdict);
        let nf = dec.normal_form.unwrap();
        assert_eq!((nf.r, nf.s), (3, 0));
    }

    #[test]
    fn non_nilpotent_is_rejected() {
        let mut data = HermitianLieData::zeros(1);
        data.set_d(1, 1, 1, c(1.0, 0.0));
        assert_eq!(classify_skl(&data, DEFAULT_TOL), Err(Error::NotNilpotent));
    }

    #[test]
    fn random_two_step_agrees_with_direct_check() {
        for seed in 0..10 {
            for mode in [TwoStepMode::Full, TwoStepMode::AbelianJ] {
                let data = random_two_step_with(4, 2, seed, mode).unwrap();
                // a disagreement would surface as an error
                classify_skl(&data, DEFAULT_TOL).unwrap();
            }
        }
    }

    #[test]
    fn rescaling_keeps_verdict_and_shape() {
        let data = cor12(Cor12Variant::N4b, &[("lambda1", 1.0), ("lambda2", 3.0), ("a", 2.0)]);
        for f in [1e-5, 1e-2, 10.0, 1e4] {
            let dec = classify_skl(&data.scaled(f), DEFAULT_TOL).unwrap();
            assert!(dec.verdict, "{f}: {dec:?}");
            let nf = dec.normal_form.unwrap();
            assert_eq!((nf.r, nf.s), Cor12Variant::N4b.expected_rs());
        }
    }

    #[test]
    fn prune_moves_null_columns_first() {
        let y = CMat::from_row_slice(
            2,
            3,
            &[
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let (q, zeros) = prune_zero_columns(&y, 1.0);
        assert_eq!(zeros, 2);
        assert!(unitary_deviation(&q) < 1e-12);
        let yq = &y * q.adjoint();
        for i in 0..2 {
            for col in 0..2 {
                assert!(yq[(i, col)].norm() < 1e-12);
            }
        }
        assert!(yq[(0, 2)].norm() > 1.0);
        let (q, zeros) = prune_zero_columns(&CMat::identity(2, 2), 1.0);
        assert_eq!((zeros, q), (0, CMat::identity(2, 2)));
    }
}
