//! Decision procedures for the Strominger, Chern and Riemannian Kähler-like
//! conditions.
//!
//! Every decision compares scale-normalized residuals with `tol`: with
//! `M = data.scale()`, residuals linear in the structure constants are
//! divided by `M` and quadratic ones by `M²`, so verdicts do not change when
//! the metric is rescaled. A [`KLDecision`] is positive exactly when every
//! entry of `residuals` is below `tol`; `diagnostics` carry extra numbers
//! that do not enter the verdict.

mod diag;
mod skl;

pub use diag::{simultaneous_diagonalize, simultaneous_diagonalize_seeded, Diagonalization};
pub use skl::{classify_skl, classify_skl_seeded, prune_zero_columns, SKLNormalForm};

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::{
    ensure_valid, is_nilpotent_j_real, lower_central_series_real, realify_unchecked, standard_j, HermitianLieData,
};
use crate::connections::{
    connection_unchecked, curvature, kl_residual, rkl_necessary_unchecked, theta2_residual,
    torsion_derivative_unchecked, ConnectionKind,
};
use crate::{Error, Result};

/// A tensor component certifying a negative verdict, 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub name: String,
    pub indices: Vec<usize>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KLDecision {
    pub verdict: bool,
    /// First failing stage, or `"all-passed"`.
    pub stage: String,
    pub residuals: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
    pub normal_form: Option<SKLNormalForm>,
}

pub const ALL_PASSED: &str = "all-passed";

impl KLDecision {
    fn new() -> Self {
        KLDecision {
            verdict: false,
            stage: String::new(),
            residuals: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            witness: None,
            normal_form: None,
        }
    }

    /// Records a residual and reports whether it passes.
    fn check(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.residuals.insert(name.to_string(), value);
        let ok = value < tol;
        if !ok && self.stage.is_empty() {
            self.stage = name.to_string();
        }
        ok
    }

    fn finish(&mut self) {
        if self.stage.is_empty() {
            self.stage = ALL_PASSED.to_string();
        }
        self.verdict = self.stage == ALL_PASSED;
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.get(name).copied()
    }
}

pub(crate) fn linear(x: f64, m: f64) -> f64 {
    if m > 0.0 {
        x / m
    } else {
        x
    }
}

pub(crate) fn quadratic(x: f64, m: f64) -> f64 {
    if m > 0.0 {
        x / (m * m)
    } else {
        x
    }
}

pub(crate) fn kl_max(data: &HermitianLieData, kind: ConnectionKind) -> Result<f64> {
    let real = realify_unchecked(data);
    let conn = connection_unchecked(data, kind);
    let r = curvature(&conn, &real)?;
    Ok(kl_residual(&r, &standard_j(data.n()))?.max())
}

fn curvature_norm(data: &HermitianLieData, kind: ConnectionKind) -> Result<f64> {
    let real = realify_unchecked(data);
    Ok(curvature(&connection_unchecked(data, kind), &real)?.norm())
}

/// Chern Kähler-likeness, decided by `T^j_{ik;ℓ̄} = 0` and cross-checked
/// against the Chern curvature symmetries.
pub fn classify_ckl(data: &HermitianLieData, tol: f64) -> Result<KLDecision> {
    ensure_valid(data)?;
    let m = data.scale();
    let td = torsion_derivative_unchecked(data, ConnectionKind::Chern)?;
    let kl = kl_max(data, ConnectionKind::Chern)?;

    let mut out = KLDecision::new();
    let by_torsion = out.check("chern-tbar", quadratic(td.bar_norm(), m), tol);
    let by_curvature = out.check("chern-kl", quadratic(kl, m), tol);
    out.finish();
    if by_torsion != by_curvature {
        return Err(Error::TheoremViolation(format!(
            "Chern torsion criterion says {by_torsion}, curvature symmetry says {by_curvature}"
        )));
    }
    if by_torsion {
        out.stage = ALL_PASSED.to_string();
        out.verdict = true;
    } else {
        out.stage = "chern-torsion-derivative".to_string();
    }

    let flat = quadratic(curvature_norm(data, ConnectionKind::Chern)?, m);
    let d_norm = linear(data.d_norm(), m);
    out.diagnostics.insert("chern-flat".into(), flat);
    out.diagnostics.insert("d-norm".into(), d_norm);

    if !out.verdict {
        let peak = td.bar_norm();
        if let Some(((j, i, k, l), v)) = td.bar.indexed_iter().find(|(_, v)| v.norm() == peak) {
            out.witness = Some(Witness {
                name: "chern T^j_{ik;l-bar}".into(),
                indices: vec![j + 1, i + 1, k + 1, l + 1],
                value: *v,
            });
        }
    }
    if out.verdict && lower_central_series_real(&realify_unchecked(data)).nilpotent && (flat >= tol || d_norm >= tol) {
        return Err(Error::TheoremViolation(format!(
            "nilpotent Chern Kähler-like structure with curvature {flat:e} and D norm {d_norm:e}"
        )));
    }
    Ok(out)
}

/// Riemannian Kähler-likeness, decided on the Levi-Civita curvature and
/// cross-checked against `Θ₂ = 0` and the necessary torsion identities.
pub fn classify_rkl(data: &HermitianLieData, tol: f64) -> Result<KLDecision> {
    ensure_valid(data)?;
    let m = data.scale();
    let mut out = KLDecision::new();
    let by_curvature = out.check(
        "riemannian-kl",
        quadratic(kl_max(data, ConnectionKind::Riemannian)?, m),
        tol,
    );
    let by_theta = out.check("theta2", quadratic(theta2_residual(data)?, m), tol);
    let nec = rkl_necessary_unchecked(data);
    out.check("lemma-first", quadratic(nec.lemma_first, m), tol);
    out.check("lemma-second", quadratic(nec.lemma_second, m), tol);
    out.check("tcbar", quadratic(nec.tcbar, m), tol);
    out.finish();
    if by_curvature != by_theta || (by_curvature && !out.verdict) {
        return Err(Error::TheoremViolation(format!(
            "Riemannian curvature criterion says {by_curvature}, theta2 says {by_theta}, \
             necessary conditions {}",
            out.verdict
        )));
    }

    let bracket = linear(realify_unchecked(data).bracket_norm(), m);
    let nil_j = is_nilpotent_j_real(&realify_unchecked(data)).nilpotent;
    out.diagnostics.insert("bracket-norm".into(), bracket);
    out.diagnostics
        .insert("nilpotent-J".into(), if nil_j { 1.0 } else { 0.0 });
    if out.verdict && nil_j && bracket >= tol {
        return Err(Error::TheoremViolation(format!(
            "Riemannian Kähler-like structure with nilpotent J has bracket norm {bracket:e}"
        )));
    }
    Ok(out)
}
