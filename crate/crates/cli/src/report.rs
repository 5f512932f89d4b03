//! The analysis report and its renderings.
//!
//! All residuals are scale-normalized (divided by `M` or `M²`, with `M` the
//! largest structure constant, as the decision procedures do), and every
//! decision boolean is exactly `residual < tol` for the residual next to it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nilkl::algebra::{is_nilpotent_j, lower_central_series, realify, standard_j, validate, HermitianLieData};
use nilkl::classify::{classify_ckl, classify_rkl, classify_skl_seeded, KLDecision};
use nilkl::connections::{chern_torsion, connection, curvature, kl_residual, ConnectionKind};
use nilkl::forms::metric_form_residuals;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA: &str = "nilkl/1";

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    /// SHA-256 of the canonical constants, see [`input_digest`].
    pub input_digest: String,
    pub n: usize,
    pub tol: f64,
    pub seed: u64,
    /// Largest structure constant `M`.
    pub scale: f64,
    pub validity: Validity,
    pub algebra: Algebra,
    pub metric: Metric,
    pub connections: BTreeMap<String, ConnectionBlock>,
    pub skl: Skl,
    pub ckl: Decision,
    pub rkl: Decision,
}

#[derive(Debug, Clone, Serialize)]
pub struct Validity {
    pub valid: bool,
    pub antisymmetry_ok: bool,
    pub jacobi_residual: f64,
    pub jacobi_breakdown: [f64; 3],
    pub real_jacobi_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Algebra {
    pub nilpotent: bool,
    pub step: Option<usize>,
    pub lower_central_series: Vec<usize>,
    pub nilpotent_j: bool,
    pub j_series: Vec<usize>,
    pub abelian_j: bool,
    pub c_norm: f64,
    pub d_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub kahler: bool,
    pub kahler_residual: f64,
    pub pluriclosed: bool,
    pub pluriclosed_residual: f64,
    pub balanced: bool,
    pub balanced_residual: f64,
    pub torsion_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionBlock {
    pub curvature_norm: f64,
    pub flat: bool,
    pub kl_sym_residual: f64,
    pub kl_j_invariance_residual: f64,
    pub kahler_like: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub name: String,
    pub indices: Vec<usize>,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Decision {
    pub verdict: bool,
    pub stage: String,
    pub residuals: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skl {
    /// `false` for non-nilpotent groups, where no verdict is given.
    pub applicable: bool,
    pub verdict: Option<bool>,
    pub stage: String,
    pub residuals: BTreeMap<String, f64>,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub lambdas: Vec<f64>,
    /// Rows of `Y`, entries as `[re, im]`.
    pub y: Vec<Vec<[f64; 2]>>,
    /// `X_i` in the real orthonormal frame.
    pub x: Vec<Vec<f64>>,
}

impl From<KLDecision> for Decision {
    fn from(d: KLDecision) -> Self {
        Decision {
            verdict: d.verdict,
            stage: d.stage,
            residuals: d.residuals,
            diagnostics: d.diagnostics,
            witness: d.witness.map(|w| Witness {
                name: w.name,
                indices: w.indices,
                value: [w.value.re, w.value.im],
            }),
        }
    }
}

fn canonical_bits(x: f64) -> String {
    // fold −0 into +0
    format!("{:016x}", (x + 0.0).to_bits())
}

/// Hex SHA-256 of the nonzero constants `C^j_{ik}` (`i < k`) and `D^j_{ik}`
/// in index order, with coefficients as IEEE bit patterns.
pub fn input_digest(data: &HermitianLieData) -> String {
    let n = data.n();
    let mut text = format!("n {n}\n");
    for j in 1..=n {
        for i in 1..=n {
            for k in 1..=n {
                let z = data.c(j, i, k);
                if i < k && z.norm() != 0.0 {
                    let _ = writeln!(text, "C {j} {i} {k} {} {}", canonical_bits(z.re), canonical_bits(z.im));
                }
            }
        }
    }
    for j in 1..=n {
        for i in 1..=n {
            for k in 1..=n {
                let z = data.d(j, i, k);
                if z.norm() != 0.0 {
                    let _ = writeln!(text, "D {j} {i} {k} {} {}", canonical_bits(z.re), canonical_bits(z.im));
                }
            }
        }
    }
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn lin(x: f64, m: f64) -> f64 {
    if m > 0.0 {
        x / m
    } else {
        x
    }
}

fn quad(x: f64, m: f64) -> f64 {
    if m > 0.0 {
        x / (m * m)
    } else {
        x
    }
}

pub fn analyze(data: &HermitianLieData, tol: f64, seed: u64) -> Result<AnalysisReport> {
    let ctx = data.label().unwrap_or("input").to_string();
    let sem = |e| CliError::semantic(ctx.clone(), e);
    let m = data.scale();
    let v = validate(data, nilkl::DEFAULT_TOL * (1.0 + m * m));
    if !v.valid {
        return Err(sem(nilkl::Error::InvalidStructure {
            antisymmetry_ok: v.antisymmetry_ok,
            jacobi_residual: v.jacobi_residual.max(v.real_jacobi_residual),
        }));
    }
    let validity = Validity {
        valid: v.valid,
        antisymmetry_ok: v.antisymmetry_ok,
        jacobi_residual: v.jacobi_residual,
        jacobi_breakdown: v.jacobi_breakdown,
        real_jacobi_residual: v.real_jacobi_residual,
    };

    let lcs = lower_central_series(data).map_err(sem)?;
    let nj = is_nilpotent_j(data).map_err(sem)?;
    let c_norm = lin(data.c_norm(), m);
    let algebra = Algebra {
        nilpotent: lcs.nilpotent,
        step: lcs.step,
        lower_central_series: lcs.dims,
        nilpotent_j: nj.nilpotent,
        j_series: nj.dims,
        abelian_j: c_norm < tol,
        c_norm,
        d_norm: lin(data.d_norm(), m),
    };

    let mr = metric_form_residuals(data).map_err(sem)?;
    let (kahler, pluriclosed, balanced) = (lin(mr.kahler, m), quad(mr.pluriclosed, m), lin(mr.balanced, m));
    let metric = Metric {
        kahler: kahler < tol,
        kahler_residual: kahler,
        pluriclosed: pluriclosed < tol,
        pluriclosed_residual: pluriclosed,
        balanced: balanced < tol,
        balanced_residual: balanced,
        torsion_norm: lin(chern_torsion(data).map_err(sem)?.norm(), m),
    };

    let real = realify(data).map_err(sem)?;
    let j = standard_j(data.n());
    let mut connections = BTreeMap::new();
    for kind in ConnectionKind::ALL {
        let r = curvature(&connection(data, kind).map_err(sem)?, &real).map_err(sem)?;
        let kl = kl_residual(&r, &j).map_err(sem)?;
        let norm = quad(r.norm(), m);
        let (sym, jinv) = (quad(kl.sym, m), quad(kl.j_invariance, m));
        connections.insert(
            kind.as_str().to_string(),
            ConnectionBlock {
                curvature_norm: norm,
                flat: norm < tol,
                kl_sym_residual: sym,
                kl_j_invariance_residual: jinv,
                kahler_like: sym.max(jinv) < tol,
            },
        );
    }

    let skl = match classify_skl_seeded(data, tol, seed) {
        Ok(d) => {
            let nf = d.normal_form.as_ref();
            Skl {
                applicable: true,
                verdict: Some(d.verdict),
                stage: d.stage.clone(),
                residuals: d.residuals.clone(),
                r: nf.map(|f| f.r),
                s: nf.map(|f| f.s),
                lambdas: nf.map(|f| f.lambdas.clone()).unwrap_or_default(),
                y: nf
                    .map(|f| {
                        (0..f.y.nrows())
                            .map(|i| (0..f.y.ncols()).map(|c| [f.y[(i, c)].re, f.y[(i, c)].im]).collect())
                            .collect()
                    })
                    .unwrap_or_default(),
                x: nf
                    .map(|f| f.x.iter().map(|x| x.iter().copied().collect()).collect())
                    .unwrap_or_default(),
            }
        }
        Err(nilkl::Error::NotNilpotent) => Skl {
            applicable: false,
            verdict: None,
            stage: "not-nilpotent".into(),
            residuals: BTreeMap::new(),
            r: None,
            s: None,
            lambdas: Vec::new(),
            y: Vec::new(),
            x: Vec::new(),
        },
        Err(e) => return Err(sem(e)),
    };

    Ok(AnalysisReport {
        schema: SCHEMA,
        input_digest: input_digest(data),
        n: data.n(),
        tol,
        seed,
        scale: m,
        validity,
        algebra,
        metric,
        connections,
        skl,
        ckl: classify_ckl(data, tol).map_err(sem)?.into(),
        rkl: classify_rkl(data, tol).map_err(sem)?.into(),
    })
}

pub fn render_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is always serializable");
    s.push('\n');
    s
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render_text(report: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digest      {}", report.input_digest);
    let _ = writeln!(
        s,
        "n           {}   scale {:e}   tol {:e}",
        report.n, report.scale, report.tol
    );
    let a = &report.algebra;
    let _ = writeln!(
        s,
        "algebra     nilpotent {} (series {:?})   nilpotent J {}   abelian J {}",
        yes(a.nilpotent),
        a.lower_central_series,
        yes(a.nilpotent_j),
        yes(a.abelian_j)
    );
    let m = &report.metric;
    let _ = writeln!(
        s,
        "metric      kahler {} ({:.3e})   pluriclosed {} ({:.3e})   balanced {} ({:.3e})",
        yes(m.kahler),
        m.kahler_residual,
        yes(m.pluriclosed),
        m.pluriclosed_residual,
        yes(m.balanced),
        m.balanced_residual
    );
    let _ = writeln!(
        s,
        "connection  curvature    flat  kl-sym       kl-J         kahler-like"
    );
    for (name, c) in &report.connections {
        let _ = writeln!(
            s,
            "{:<11} {:<12.3e} {:<5} {:<12.3e} {:<12.3e} {}",
            name,
            c.curvature_norm,
            yes(c.flat),
            c.kl_sym_residual,
            c.kl_j_invariance_residual,
            yes(c.kahler_like)
        );
    }
    let k = &report.skl;
    match k.verdict {
        Some(v) => {
            let _ = write!(s, "SKL         {}   stage {}", yes(v), k.stage);
            if let (Some(r), Some(sv)) = (k.r, k.s) {
                let _ = write!(s, "   r {r}   s {sv}   lambdas {:?}", k.lambdas);
            }
            let _ = writeln!(s);
        }
        None => {
            let _ = writeln!(s, "SKL         not decided (group is not nilpotent)");
        }
    }
    let _ = writeln!(
        s,
        "CKL         {}   stage {}",
        yes(report.ckl.verdict),
        report.ckl.stage
    );
    if let Some(w) = &report.ckl.witness {
        let _ = writeln!(
            s,
            "            witness {} at {:?} = {} + {}i",
            w.name, w.indices, w.value[0], w.value[1]
        );
    }
    let _ = writeln!(
        s,
        "RKL         {}   stage {}",
        yes(report.rkl.verdict),
        report.rkl.stage
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilkl::catalog::{build_family, Family};

    fn report(f: Family) -> AnalysisReport {
        analyze(&build_family(&f).unwrap(), nilkl::DEFAULT_TOL, 0).unwrap()
    }

    #[test]
    fn kodaira_verdicts() {
        let r = report(Family::Kodaira { lambda: 1.0 });
        assert_eq!(r.skl.verdict, Some(true));
        assert!(!r.ckl.verdict);
        assert!(!r.rkl.verdict);
    }

    #[test]
    fn abelian_verdicts() {
        let r = report(Family::Abelian { n: 3 });
        assert_eq!(r.skl.verdict, Some(true));
        assert!(r.ckl.verdict && r.rkl.verdict);
        assert!(r.connections.values().all(|c| c.curvature_norm == 0.0));
    }

    #[test]
    fn iwasawa_verdicts() {
        let r = report(Family::Iwasawa);
        assert!(r.ckl.verdict);
        assert_eq!(r.connections["chern"].curvature_norm, 0.0);
        assert_eq!(r.skl.verdict, Some(false));
        assert!(!r.rkl.verdict);
    }

    #[test]
    fn booleans_follow_residuals() {
        let data = nilkl::catalog::random_two_step(3, 2, 1).unwrap();
        let r = analyze(&data, 1e-8, 0).unwrap();
        assert_eq!(r.metric.pluriclosed, r.metric.pluriclosed_residual < r.tol);
        for c in r.connections.values() {
            assert_eq!(c.flat, c.curvature_norm < r.tol);
            assert_eq!(c.kahler_like, c.kl_sym_residual.max(c.kl_j_invariance_residual) < r.tol);
        }
        for d in [&r.ckl, &r.rkl] {
            assert_eq!(d.verdict, d.residuals.values().all(|&v| v < r.tol));
        }
    }

    #[test]
    fn non_nilpotent_skl_is_not_applicable() {
        let mut data = HermitianLieData::zeros(1);
        data.set_d(1, 1, 1, nilkl::Complex64::new(1.0, 0.0));
        let r = analyze(&data, 1e-8, 0).unwrap();
        assert!(!r.skl.applicable);
        assert_eq!(r.skl.verdict, None);
    }

    #[test]
    fn digest_ignores_negative_zero_and_label() {
        let a = HermitianLieData::zeros(2);
        let mut b = HermitianLieData::zeros(2).with_label("other");
        b.set_d(1, 2, 1, nilkl::Complex64::new(-0.0, 0.0));
        assert_eq!(input_digest(&a), input_digest(&b));
    }
}
