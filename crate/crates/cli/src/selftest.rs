//! The acceptance suite behind `nilkl selftest`.
//!
//! Each criterion recomputes its quantities from the public library API and
//! compares them with an independent route (a second criterion, a closed
//! formula or a hand transcription), never with the decision it is testing.

use std::path::PathBuf;
use std::time::Instant;

use nilkl::algebra::{change_frame, is_nilpotent_j, realify, standard_j, HermitianLieData};
use nilkl::catalog::{
    build_family, cor12_coframe, cor12_uncompensated, from_coframe, from_coframe_unchecked, perturb,
    random_theorem_shape, random_two_step_with, to_coframe, CoframeDifferentials, Cor12Params, Cor12Variant, Family,
    TwoStepMode,
};
use nilkl::classify::{classify_ckl, classify_rkl, classify_skl, classify_skl_seeded, KLDecision};
use nilkl::connections::{
    connection, curvature, d8_expansion, kl_residual, theta2_residual, torsion_covariant_derivative, ConnectionKind,
};
use nilkl::exec::{self, Execution};
use nilkl::forms::{d_squared_residual, ddbar_omega, metric_form_residuals, InvariantForm};
use nilkl::linalg::CMat;
use nilkl::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::input::{constants_json, parse_structure_str};
use crate::report::{analyze, render_json};

/// Decision tolerance.
pub const TAU: f64 = 1e-8;
/// Identities that hold exactly up to rounding.
pub const EXACT: f64 = 1e-12;
/// Normal-form reconstruction.
pub const ROUND_TRIP: f64 = 1e-10;
/// Residuals inside this band are too close to `TAU` to decide.
pub const BAND: (f64, f64) = (1e-10, 1e-6);
/// Minimum normalized residual of a negative control.
pub const NEG_MIN: f64 = 0.5;

/// Environment variable naming the reference document for the table check.
pub const REFERENCE_ENV: &str = "NILKL_REFERENCE_DOC";

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Document holding the normal-form tables, for the transcription check.
    pub reference: Option<PathBuf>,
    pub exec: Execution,
}

impl SelftestOptions {
    fn reference_path(&self) -> Option<PathBuf> {
        self.reference
            .clone()
            .or_else(|| std::env::var_os(REFERENCE_ENV).map(PathBuf::from))
            .or_else(|| option_env!("NILKL_REFERENCE_DOC").map(PathBuf::from))
    }
}

pub fn run_all(opts: &SelftestOptions) -> Vec<CriterionOutcome> {
    let criteria: [&dyn Fn() -> CriterionOutcome; 10] = [
        &|| normal_forms(opts),
        &negative_control,
        &|| chern_sweep(opts.exec),
        &|| riemannian_sweep(opts.exec),
        &|| cross_oracle(opts.exec),
        &kahler_collapse,
        &|| forms_engine(opts.exec),
        &|| curvature_invariants(opts.exec),
        &|| normal_form_round_trip(opts.exec),
        &|| report_determinism(opts.exec),
    ];
    criteria
        .iter()
        .map(|c| {
            let start = Instant::now();
            let mut o = c();
            o.seconds = start.elapsed().as_secs_f64();
            o
        })
        .collect()
}

fn outcome(id: usize, title: &'static str, failures: &[String], summary: String) -> CriterionOutcome {
    let detail = match failures.first() {
        None => summary,
        Some(first) => format!("{summary}; {} failure(s), first: {first}", failures.len()),
    };
    CriterionOutcome {
        id,
        title,
        passed: failures.is_empty(),
        detail,
        seconds: 0.0,
    }
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

/// Bound for quantities quadratic in the constants.
fn quad_bound(tol: f64, m: f64) -> f64 {
    tol * m.max(1.0).powi(2)
}

// ---------------------------------------------------------------------------
// populations

const VARIANTS: [Cor12Variant; 9] = [
    Cor12Variant::N2,
    Cor12Variant::N3,
    Cor12Variant::N4a,
    Cor12Variant::N4b,
    Cor12Variant::N5a,
    Cor12Variant::N5b,
    Cor12Variant::N6a,
    Cor12Variant::N6b,
    Cor12Variant::N6c,
];

const MODES: [TwoStepMode; 3] = [TwoStepMode::Full, TwoStepMode::Holomorphic, TwoStepMode::AbelianJ];

/// λ's uniform in `[0.1, 10]`, the rest in `[−5, 5]`; for `6b` the coupling
/// `y` is solved and the draw repeated until `|y| ≤ 5`.
pub fn draw_params(variant: Cor12Variant, rng: &mut ChaCha8Rng) -> Cor12Params {
    loop {
        let mut p = Cor12Params::default();
        for &name in variant.param_names() {
            if name == "y" {
                continue;
            }
            let v = if name.starts_with("lambda") {
                rng.random_range(0.1..=10.0)
            } else {
                rng.random_range(-5.0..=5.0)
            };
            p.set(name, v).expect("known parameter");
        }
        if variant != Cor12Variant::N6b {
            return p;
        }
        let solved = Cor12Params::solve_6b_y(
            p.lambda2.unwrap(),
            p.a.unwrap(),
            p.b.unwrap(),
            p.c.unwrap(),
            p.x.unwrap(),
        );
        if let Some(y) = solved.filter(|y| y.abs() <= 5.0) {
            p.y = Some(y);
            return p;
        }
    }
}

/// Twenty seeded parameter draws per normal-form table.
pub fn normal_form_draws() -> Vec<(Cor12Variant, Cor12Params)> {
    let mut out = Vec::new();
    for (v, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + v as u64);
        for _ in 0..20 {
            out.push((*variant, draw_params(*variant, &mut rng)));
        }
    }
    out
}

fn cor12(variant: Cor12Variant, p: &Cor12Params) -> HermitianLieData {
    build_family(&Family::Cor12 { variant, params: *p })
        .expect("in-range parameters")
        .with_label(format!("cor12({variant})"))
}

fn unit_params() -> Cor12Params {
    let mut p = Cor12Params::default();
    for name in ["lambda", "lambda1", "lambda2", "lambda3", "a", "b", "c", "x"] {
        p.set(name, 1.0).unwrap();
    }
    p
}

/// Named structures: abelian, Kodaira, Iwasawa, one draw of every table,
/// the tables with their compensating terms removed, and perturbed tables.
pub fn catalog() -> Vec<HermitianLieData> {
    let mut out = Vec::new();
    for n in 1..=6 {
        out.push(
            build_family(&Family::Abelian { n })
                .unwrap()
                .with_label(format!("abelian({n})")),
        );
    }
    for lambda in [0.5, 1.0, 2.0] {
        out.push(
            build_family(&Family::Kodaira { lambda })
                .unwrap()
                .with_label(format!("kodaira({lambda})")),
        );
    }
    out.push(build_family(&Family::Iwasawa).unwrap().with_label("iwasawa"));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for variant in VARIANTS {
        let data = cor12(variant, &draw_params(variant, &mut rng));
        out.push(
            perturb(&data, 0.5, 11)
                .unwrap()
                .with_label(format!("perturbed cor12({variant})")),
        );
        out.push(data);
    }
    let mut p = unit_params();
    p.y = Cor12Params::solve_6b_y(1.0, 1.0, 1.0, 1.0, 1.0);
    for variant in [Cor12Variant::N5b, Cor12Variant::N6b, Cor12Variant::N6c] {
        let cd = cor12_uncompensated(variant, &p).unwrap();
        out.push(
            from_coframe(&cd)
                .unwrap()
                .with_label(format!("uncompensated cor12({variant})")),
        );
    }
    out
}

/// Seeded two-step structures over `n ∈ 2..=5`, every `1 ≤ r ≤ n` and all
/// three sparsity modes; at least `count` of them.
pub fn two_step_population(count: usize, seed_base: u64) -> Vec<HermitianLieData> {
    let mut shapes = Vec::new();
    for n in 2..=5 {
        for r in 1..=n {
            for mode in MODES {
                shapes.push((n, r, mode));
            }
        }
    }
    let per_shape = count.div_ceil(shapes.len()) as u64;
    let mut out = Vec::new();
    for (n, r, mode) in shapes {
        for s in 0..per_shape {
            out.push(random_two_step_with(n, r, seed_base + s, mode).unwrap());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 1. normal-form tables

/// Hand transcription of a table as it is typeset in the reference.
fn transcription(variant: Cor12Variant) -> &'static [&'static str] {
    use Cor12Variant::*;
    match variant {
        N2 => &[r"d\varphi_1=0", r"d\varphi_2=\lambda \,\varphi_1 \overline{\varphi}_1"],
        N3 => &[
            r"d\varphi_1=d\varphi_2=0",
            r"d\varphi_3=\lambda \,\varphi_1 \overline{\varphi}_1 + ia\,\varphi_2 \overline{\varphi}_2",
        ],
        N4a => &[
            r"d\varphi_1=d\varphi_2= d\varphi_3=0",
            r"d\varphi_4=\lambda \,\varphi_1 \overline{\varphi}_1 + ia\, \varphi_2 \overline{\varphi}_2",
        ],
        N4b => &[
            r"d\varphi_1=d\varphi_2= 0",
            r"d\varphi_3=\lambda_1 \,\varphi_1 \overline{\varphi}_1  + ia\,\varphi_2 \overline{\varphi}_2",
            r"d\varphi_4= \lambda_2\, \varphi_2 \overline{\varphi}_2",
        ],
        N5a => &[
            r"d\varphi_1=d\varphi_2= d\varphi_3=d\varphi_4=0",
            r"d\varphi_5=\lambda \,\varphi_1 \overline{\varphi}_1 + ia\, \varphi_2 \overline{\varphi}_2",
        ],
        N5b => &[
            r"d\varphi_1=d\varphi_2= d\varphi_3=0",
            r"d\varphi_4=\lambda_1 \,\varphi_1 \overline{\varphi}_1 + ia\, \varphi_2 \overline{\varphi}_2 + ib\, \varphi_3 \overline{\varphi}_3",
            r"d\varphi_5 = \lambda_2\, \varphi_2 \overline{\varphi}_2 + (ic\!-\!\frac{ab}{\lambda_2})\, \varphi_3 \overline{\varphi}_3",
        ],
        N6a => &[
            r"d\varphi_1=d\varphi_2= d\varphi_3=d\varphi_4= d\varphi_5= 0",
            r"d\varphi_6=\lambda \,\varphi_1 \overline{\varphi}_1 + ia\, \varphi_2 \overline{\varphi}_2",
        ],
        N6b => &[
            r"d\varphi_1=d\varphi_2=d\varphi_3=d\varphi_4= 0",
            r"d\varphi_5 = \lambda_1 \,\varphi_1 \overline{\varphi}_1  + ia\, \varphi_2 \overline{\varphi}_2 + ib\, \varphi_3 \overline{\varphi}_3  + ic\, \varphi_4 \overline{\varphi}_4",
            r"d\varphi_6=  \lambda_2\, \varphi_2 \overline{\varphi}_2 +(ix\!-\!\frac{ab}{\lambda_2}) \, \varphi_3 \overline{\varphi}_3 + (iy\!-\!\frac{ac}{\lambda_2})\, \varphi_4 \overline{\varphi}_4",
        ],
        N6c => &[
            r"d\varphi_1=d\varphi_2=d\varphi_3= 0",
            r"d\varphi_4 =\lambda_1 \,\varphi_1 \overline{\varphi}_1 + ia\, \varphi_2 \overline{\varphi}_2 + ib\, \varphi_3 \overline{\varphi}_3",
            r"d\varphi_5 = \lambda_2 \,\varphi_2 \overline{\varphi}_2 + (ic\!-\!\frac{ab}{\lambda_2}) \varphi_3 \overline{\varphi}_3",
            r"d\varphi_6= \lambda_3\, \varphi_3 \overline{\varphi}_3",
        ],
    }
}

/// Drops TeX spacing commands and whitespace.
pub fn normalize_tex(s: &str) -> String {
    let mut s = s.to_string();
    for cmd in [r"\qquad", r"\quad", r"\,", r"\!", r"\;", r"\ "] {
        s = s.replace(cmd, "");
    }
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Evaluates a transcription into coframe differentials.
fn evaluate_transcription(n: usize, lines: &[&str], p: &Cor12Params) -> Result<CoframeDifferentials, String> {
    let mut cd = CoframeDifferentials::new(n);
    for line in lines {
        let line = normalize_tex(line);
        let parts: Vec<&str> = line.split('=').collect();
        let (rhs, lhs) = parts.split_last().ok_or("empty line")?;
        let mut targets = Vec::new();
        for l in lhs {
            let j = l
                .strip_prefix(r"d\varphi_")
                .and_then(|j| j.parse::<usize>().ok())
                .ok_or_else(|| format!("bad left side `{l}`"))?;
            targets.push(j);
        }
        if *rhs == "0" {
            continue;
        }
        let [j] = targets[..] else {
            return Err(format!("several targets for a nonzero right side in `{line}`"));
        };
        for term in split_top(rhs, &['+']) {
            let (coef, rest) = term
                .1
                .find(r"\varphi_")
                .map(|at| term.1.split_at(at))
                .ok_or_else(|| format!("no form in term `{}`", term.1))?;
            let (i, k) = parse_mixed(rest).ok_or_else(|| format!("bad form `{rest}`"))?;
            cd.add_mixed(j, i, k, tex_value(coef, p)?);
        }
    }
    Ok(cd)
}

/// `\varphi_i\overline{\varphi}_k`
fn parse_mixed(s: &str) -> Option<(usize, usize)> {
    let rest = s.strip_prefix(r"\varphi_")?;
    let (i, rest) = rest.split_once(r"\overline{\varphi}_")?;
    Some((i.parse().ok()?, rest.parse().ok()?))
}

/// Splits at top-level separators, keeping the sign that precedes each part.
fn split_top<'a>(s: &'a str, seps: &[char]) -> Vec<(char, &'a str)> {
    let mut out = Vec::new();
    let (mut depth, mut start, mut sign) = (0i32, 0usize, '+');
    for (at, ch) in s.char_indices() {
        match ch {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            c if depth == 0 && seps.contains(&c) => {
                if at > start {
                    out.push((sign, &s[start..at]));
                }
                sign = c;
                start = at + 1;
            }
            _ => {}
        }
    }
    if start < s.len() {
        out.push((sign, &s[start..]));
    }
    out
}

fn tex_value(s: &str, p: &Cor12Params) -> Result<Complex64, String> {
    let s = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s);
    let mut total = Complex64::new(0.0, 0.0);
    for (sign, part) in split_top(s, &['+', '-']) {
        let v = tex_product(part, p)?;
        total += if sign == '-' { -v } else { v };
    }
    Ok(total)
}

fn tex_product(mut s: &str, p: &Cor12Params) -> Result<Complex64, String> {
    let param = |name: &str| p.get(name).ok_or_else(|| format!("parameter `{name}` not set"));
    let mut v = Complex64::new(1.0, 0.0);
    while !s.is_empty() {
        if let Some(rest) = s.strip_prefix(r"\frac{") {
            let (num, rest) = rest.split_once('}').ok_or("unclosed numerator")?;
            let rest = rest.strip_prefix('{').ok_or("missing denominator")?;
            let (den, rest) = rest.split_once('}').ok_or("unclosed denominator")?;
            v *= tex_product(num, p)? / tex_product(den, p)?;
            s = rest;
        } else if let Some(rest) = s.strip_prefix(r"\lambda") {
            match rest.strip_prefix('_') {
                Some(idx) => {
                    let digit = idx.get(..1).ok_or("dangling subscript")?;
                    v *= param(&format!("lambda{digit}"))?;
                    s = &idx[1..];
                }
                None => {
                    v *= param("lambda")?;
                    s = rest;
                }
            }
        } else {
            let ch = &s[..1];
            v *= match ch {
                "i" => Complex64::new(0.0, 1.0),
                "a" | "b" | "c" | "x" | "y" => Complex64::new(param(ch)?, 0.0),
                _ => return Err(format!("unexpected `{s}`")),
            };
            s = &s[1..];
        }
    }
    Ok(v)
}

fn quote_check(opts: &SelftestOptions, draws: &[(Cor12Variant, Cor12Params)]) -> Result<String, String> {
    let path = opts
        .reference_path()
        .ok_or_else(|| format!("no reference document (pass --reference or set {REFERENCE_ENV})"))?;
    let doc = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let doc = normalize_tex(&doc);
    let mut lines = 0;
    for variant in VARIANTS {
        for line in transcription(variant) {
            if !doc.contains(&normalize_tex(line)) {
                return Err(format!(
                    "cor12({variant}) line `{line}` not found in {}",
                    path.display()
                ));
            }
            lines += 1;
        }
    }
    for (variant, p) in draws {
        let cd = evaluate_transcription(variant.n(), transcription(*variant), p)?;
        let ours = from_coframe_unchecked(&cor12_coframe(*variant, p).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let theirs = from_coframe_unchecked(&cd).map_err(|e| e.to_string())?;
        let gap = ours.distance(&theirs);
        if gap > EXACT * (1.0 + ours.scale()) {
            return Err(format!("cor12({variant}) differs from its transcription by {gap:e}"));
        }
    }
    Ok(format!("{lines} table lines found verbatim and matched"))
}

pub fn normal_forms(opts: &SelftestOptions) -> CriterionOutcome {
    let draws = normal_form_draws();
    let mut failures: Vec<String> = exec::map(opts.exec, &draws, |(variant, p)| {
        let data = cor12(*variant, p);
        let d = match classify_skl(&data, TAU) {
            Ok(d) => d,
            Err(e) => return Some(format!("cor12({variant}) {p:?}: {e}")),
        };
        let nf = d.normal_form.as_ref().map(|f| (f.r, f.s));
        let residuals = ["pluriclosed", "torsion-parallel", "strominger-kl"].map(|k| d.residual(k).unwrap_or(f64::NAN));
        let ok = d.verdict && nf == Some(variant.expected_rs()) && residuals.iter().all(|&r| r < TAU);
        (!ok).then(|| {
            format!(
                "cor12({variant}) {p:?}: stage {}, (r,s) {nf:?}, residuals {residuals:?}",
                d.stage
            )
        })
    })
    .into_iter()
    .flatten()
    .collect();
    let quotes = quote_check(opts, &draws);
    if let Err(e) = &quotes {
        failures.push(format!("table check: {e}"));
    }
    outcome(
        1,
        "normal-form tables are SKL with the expected (r, s)",
        &failures,
        format!(
            "{} draws over {} tables; {}",
            draws.len(),
            VARIANTS.len(),
            quotes.unwrap_or_else(|_| "table check failed".into())
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. negative control

/// Coefficients `Y_{iα}` of `dφ_α = Σ Y_{iα} φ_i∧φ̄_i`; `None` unless the
/// coframe has exactly that shape.
pub fn y_matrix(cd: &CoframeDifferentials) -> Option<Vec<Vec<Complex64>>> {
    let n = cd.n;
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, (hol, mixed)) in cd.hol.iter().zip(&cd.mixed).enumerate() {
        if !hol.is_empty() {
            return None;
        }
        for t in mixed {
            if t.i != t.k {
                return None;
            }
            y[t.i - 1][j] += t.coefficient;
        }
    }
    Some(y)
}

/// `max_{i≠k} |Σ_α (Y_{iα} conj(Y_{kα}) + Y_{kα} conj(Y_{iα}))|`
pub fn y_pair_defect(y: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..y.len() {
        for k in 0..y.len() {
            if i != k {
                let s: Complex64 = (0..y[i].len())
                    .map(|a| y[i][a] * y[k][a].conj() + y[k][a] * y[i][a].conj())
                    .sum();
                worst = worst.max(s.norm());
            }
        }
    }
    worst
}

pub fn negative_control() -> CriterionOutcome {
    let mut p = unit_params();
    p.y = Cor12Params::solve_6b_y(1.0, 1.0, 1.0, 1.0, 1.0);
    let mut failures = Vec::new();
    let mut seen = Vec::new();
    for variant in [Cor12Variant::N5b, Cor12Variant::N6b, Cor12Variant::N6c] {
        let cd = cor12_uncompensated(variant, &p).unwrap();
        let raw = y_matrix(&cd).map(|y| y_pair_defect(&y)).unwrap_or(f64::NAN);
        let data = match from_coframe(&cd) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("{variant}: {e}"));
                continue;
            }
        };
        match classify_skl(&data, TAU) {
            Ok(d) => {
                let normalized = d.residual("pluriclosed").unwrap_or(f64::NAN);
                seen.push(format!("{variant}: raw {raw}, normalized {normalized:.3}"));
                if d.verdict || d.stage != "pluriclosed" || normalized < NEG_MIN || (raw - 2.0).abs() > EXACT {
                    failures.push(format!(
                        "{variant}: verdict {}, stage {}, raw {raw}",
                        d.verdict, d.stage
                    ));
                }
            }
            Err(e) => failures.push(format!("{variant}: {e}")),
        }
    }
    outcome(
        2,
        "uncompensated tables fail at the pluriclosed stage",
        &failures,
        seen.join(", "),
    )
}

// ---------------------------------------------------------------------------
// 3, 4. equivalence sweeps

struct ChernProbe {
    tbar: f64,
    flat: f64,
    d_norm: f64,
}

fn chern_probe(data: &HermitianLieData) -> nilkl::Result<ChernProbe> {
    let m = data.scale();
    let td = torsion_covariant_derivative(data, ConnectionKind::Chern)?;
    let r = curvature(&connection(data, ConnectionKind::Chern)?, &realify(data)?)?;
    Ok(ChernProbe {
        tbar: quad(td.bar_norm(), m),
        flat: quad(r.norm(), m),
        d_norm: lin(data.d_norm(), m),
    })
}

pub fn chern_sweep(exec_mode: Execution) -> CriterionOutcome {
    let population = two_step_population(1000, 0);
    let failures: Vec<String> = exec::map(exec_mode, &population, |data| match chern_probe(data) {
        Ok(p) => {
            let v = [p.tbar < TAU, p.flat < TAU, p.d_norm < TAU];
            (v[0] != v[1] || v[1] != v[2]).then(|| {
                format!(
                    "{}: tbar {:e}, curvature {:e}, D {:e}",
                    data.label().unwrap_or("?"),
                    p.tbar,
                    p.flat,
                    p.d_norm
                )
            })
        }
        Err(e) => Some(format!("{}: {e}", data.label().unwrap_or("?"))),
    })
    .into_iter()
    .flatten()
    .collect();
    let positives = exec::map(exec_mode, &population, |d| d.d_norm() == 0.0)
        .into_iter()
        .filter(|&b| b)
        .count();

    let mut failures = failures;
    let iw = build_family(&Family::Iwasawa).unwrap();
    match chern_probe(&iw) {
        Ok(p) if p.tbar == 0.0 && p.flat == 0.0 && p.d_norm == 0.0 => {}
        Ok(p) => failures.push(format!(
            "iwasawa: tbar {:e}, curvature {:e}, D {:e}",
            p.tbar, p.flat, p.d_norm
        )),
        Err(e) => failures.push(format!("iwasawa: {e}")),
    }
    outcome(
        3,
        "Chern: tbar = 0 iff flat iff D = 0",
        &failures,
        format!(
            "{} structures ({positives} with D = 0), iwasawa exactly 0",
            population.len()
        ),
    )
}

pub fn riemannian_sweep(exec_mode: Execution) -> CriterionOutcome {
    let population = two_step_population(1000, 0);
    let results = exec::map(exec_mode, &population, |data| -> Result<bool, String> {
        let label = data.label().unwrap_or("?");
        let m = data.scale();
        let nil_j = is_nilpotent_j(data).map_err(|e| format!("{label}: {e}"))?.nilpotent;
        if !nil_j {
            return Err(format!("{label}: J is not nilpotent"));
        }
        let real = realify(data).map_err(|e| e.to_string())?;
        let r = curvature(
            &connection(data, ConnectionKind::Riemannian).map_err(|e| e.to_string())?,
            &real,
        )
        .map_err(|e| e.to_string())?;
        let kl = quad(
            kl_residual(&r, &standard_j(data.n())).map_err(|e| e.to_string())?.max(),
            m,
        );
        let bracket = lin(real.bracket_norm(), m);
        if (kl < TAU) != (bracket < TAU) {
            return Err(format!("{label}: KL residual {kl:e}, bracket {bracket:e}"));
        }
        Ok(kl < TAU)
    });
    let abelian = results.iter().filter(|r| matches!(r, Ok(true))).count();
    let failures: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();
    outcome(
        4,
        "Riemannian: KL iff abelian, on nilpotent J",
        &failures,
        format!(
            "{} structures, all with nilpotent J ({abelian} abelian)",
            population.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. cross-oracle

/// `(curvature decision, criterion decision)` residual pairs for SKL, CKL and
/// RKL, all scale-normalized.
fn decision_pairs(data: &HermitianLieData) -> nilkl::Result<[(f64, f64); 3]> {
    let m = data.scale();
    let real = realify(data)?;
    let j = standard_j(data.n());
    let kl = |kind| -> nilkl::Result<f64> {
        let r = curvature(&connection(data, kind)?, &real)?;
        Ok(quad(kl_residual(&r, &j)?.max(), m))
    };
    let st = torsion_covariant_derivative(data, ConnectionKind::Strominger)?;
    let pluri = quad(metric_form_residuals(data)?.pluriclosed, m);
    let skl = quad(st.plain_norm().max(st.bar_norm()), m).max(pluri);
    let ckl = quad(torsion_covariant_derivative(data, ConnectionKind::Chern)?.bar_norm(), m);
    let rkl = quad(theta2_residual(data)?, m);
    Ok([
        (kl(ConnectionKind::Strominger)?, skl),
        (kl(ConnectionKind::Chern)?, ckl),
        (kl(ConnectionKind::Riemannian)?, rkl),
    ])
}

pub fn cross_oracle(exec_mode: Execution) -> CriterionOutcome {
    let mut population = catalog();
    let catalog_len = population.len();
    population.extend(two_step_population(1000, 5000));
    let names = ["SKL", "CKL", "RKL"];
    let results = exec::map(exec_mode, &population, |data| -> Result<(bool, [bool; 3]), String> {
        let label = data.label().unwrap_or("?");
        let pairs = decision_pairs(data).map_err(|e| format!("{label}: {e}"))?;
        let in_band = pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .any(|x| (BAND.0..=BAND.1).contains(&x));
        if in_band {
            return Ok((true, [false; 3]));
        }
        for (name, (a, b)) in names.iter().zip(pairs) {
            if (a < TAU) != (b < TAU) {
                return Err(format!("{label}: {name} curvature {a:e} vs criterion {b:e}"));
            }
        }
        Ok((false, pairs.map(|(a, _)| a < TAU)))
    });
    let excluded = results.iter().filter(|r| matches!(r, Ok((true, _)))).count();
    let mut positives = [0usize; 3];
    for (_, v) in results.iter().flatten() {
        for (p, b) in positives.iter_mut().zip(v) {
            *p += *b as usize;
        }
    }
    let mut failures: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();
    if excluded > 0 {
        failures.push(format!("{excluded} structure(s) had a residual inside the band"));
    }
    outcome(
        5,
        "curvature decisions agree with the torsion criteria",
        &failures,
        format!(
            "{catalog_len} catalog + {} random, positives SKL {} CKL {} RKL {}, {excluded} in band",
            population.len() - catalog_len,
            positives[0],
            positives[1],
            positives[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Kähler collapse

pub fn kahler_collapse() -> CriterionOutcome {
    let mut failures = Vec::new();
    for n in 1..=6 {
        let data = HermitianLieData::zeros(n);
        let real = realify(&data).unwrap();
        for kind in ConnectionKind::ALL {
            let norm = curvature(&connection(&data, kind).unwrap(), &real).unwrap().norm();
            if norm >= EXACT {
                failures.push(format!("abelian({n}) {kind} curvature {norm:e}"));
            }
        }
        let verdicts = [
            classify_skl(&data, TAU).map(|d| d.verdict),
            classify_ckl(&data, TAU).map(|d| d.verdict),
            classify_rkl(&data, TAU).map(|d| d.verdict),
        ];
        if !verdicts.iter().all(|v| matches!(v, Ok(true))) {
            failures.push(format!("abelian({n}) verdicts {verdicts:?}"));
        }
    }
    outcome(
        6,
        "abelian groups are flat and Kähler-like",
        &failures,
        "n = 1..6".into(),
    )
}

// ---------------------------------------------------------------------------
// 7. forms engine

/// `∂∂̄ω = −i Σ_α Σ_{i,k} Y_{iα} conj(Y_{kα}) φ_i∧φ̄_i∧φ_k∧φ̄_k`
pub fn ddbar_closed_formula(y: &[Vec<Complex64>]) -> InvariantForm {
    let n = y.len();
    let mut out = InvariantForm::zero(n);
    for i in 0..n {
        for k in 0..n {
            let s: Complex64 = (0..n).map(|a| y[i][a] * y[k][a].conj()).sum();
            if s.norm() == 0.0 {
                continue;
            }
            let term = InvariantForm::phi(n, i + 1)
                .wedge(&InvariantForm::phi_bar(n, i + 1))
                .and_then(|f| f.wedge(&InvariantForm::phi(n, k + 1)))
                .and_then(|f| f.wedge(&InvariantForm::phi_bar(n, k + 1)))
                .expect("same dimension");
            out = out + term * (Complex64::new(0.0, -1.0) * s);
        }
    }
    out
}

pub fn forms_engine(exec_mode: Execution) -> CriterionOutcome {
    let mut randoms = Vec::new();
    for seed in 0..100u64 {
        let n = 2 + (seed % 4) as usize;
        let r = 1 + (seed / 4) as usize % n;
        randoms.push(random_two_step_with(n, r, 7000 + seed, MODES[(seed % 3) as usize]).unwrap());
    }
    let mut failures: Vec<String> = exec::map(exec_mode, &randoms, |data| {
        let res = d_squared_residual(data, Execution::Sequential);
        (res >= EXACT).then(|| format!("{}: d² residual {res:e}", data.label().unwrap_or("?")))
    })
    .into_iter()
    .flatten()
    .collect();

    let mut shaped = Vec::new();
    for n in 2..=6 {
        for r in 1..n {
            for seed in 0..4 {
                shaped.push(random_theorem_shape(n, r, seed).unwrap().0);
            }
        }
    }
    shaped.extend(normal_form_draws().iter().map(|(v, p)| cor12(*v, p)));
    failures.extend(
        exec::map(exec_mode, &shaped, |data| {
            let label = data.label().unwrap_or("?");
            let y = y_matrix(&to_coframe(data))?;
            let ours = match ddbar_omega(data) {
                Ok(f) => f,
                Err(e) => return Some(format!("{label}: {e}")),
            };
            let gap = ours.distance(&ddbar_closed_formula(&y));
            (gap >= quad_bound(EXACT, data.scale())).then(|| format!("{label}: ∂∂̄ω off by {gap:e}"))
        })
        .into_iter()
        .flatten(),
    );
    outcome(
        7,
        "d² = 0 and ∂∂̄ω matches the closed formula",
        &failures,
        format!(
            "d² on {} structures, ∂∂̄ω on {} two-step normal shapes",
            randoms.len(),
            shaped.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. curvature invariants

fn test_structures() -> Vec<HermitianLieData> {
    let mut out = catalog();
    for seed in 0..100u64 {
        let n = 2 + (seed % 4) as usize;
        let r = 1 + (seed / 4) as usize % n;
        out.push(random_two_step_with(n, r, 8000 + seed, MODES[(seed % 3) as usize]).unwrap());
    }
    out
}

pub fn curvature_invariants(exec_mode: Execution) -> CriterionOutcome {
    let population = test_structures();
    let failures: Vec<String> = exec::map(exec_mode, &population, |data| -> Option<String> {
        let label = data.label().unwrap_or("?");
        let bound = quad_bound(EXACT, data.scale());
        let real = realify(data).ok()?;
        for kind in ConnectionKind::ALL {
            let r = match connection(data, kind).and_then(|c| curvature(&c, &real)) {
                Ok(r) => r,
                Err(e) => return Some(format!("{label}: {e}")),
            };
            let (a, b) = r.antisymmetry_residuals();
            if a >= bound || b >= bound {
                return Some(format!("{label} {kind}: antisymmetry {a:e} {b:e}"));
            }
        }
        let td = match torsion_covariant_derivative(data, ConnectionKind::Chern) {
            Ok(t) => t,
            Err(e) => return Some(format!("{label}: {e}")),
        };
        let d8 = d8_expansion(data);
        let gap = d8
            .iter()
            .zip(td.bar.iter())
            .map(|(x, y)| (x - y * 2.0).norm())
            .fold(0.0, f64::max);
        (gap >= bound).then(|| format!("{label}: D expansion off by {gap:e}"))
    })
    .into_iter()
    .flatten()
    .collect();
    outcome(
        8,
        "curvature antisymmetry and the D expansion of the Chern tbar",
        &failures,
        format!("{} structures, four connections each", population.len()),
    )
}

// ---------------------------------------------------------------------------
// 9. normal-form round trip

fn random_unitary(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    a.qr().q()
}

fn round_trip_gap(data: &HermitianLieData, d: &KLDecision) -> Result<f64, String> {
    let nf = d.normal_form.as_ref().ok_or("no normal form")?;
    let rebuilt = nf.to_data().map_err(|e| e.to_string())?;
    let back = change_frame(&rebuilt, &nf.u.adjoint()).map_err(|e| e.to_string())?;
    Ok(back.distance(data) / data.scale().max(1.0))
}

pub fn normal_form_round_trip(exec_mode: Execution) -> CriterionOutcome {
    let mut population: Vec<HermitianLieData> = catalog();
    for (idx, (variant, p)) in normal_form_draws().iter().enumerate() {
        let data = cor12(*variant, p);
        let u = random_unitary(data.n(), 9000 + idx as u64);
        let moved = change_frame(&data, &u)
            .unwrap()
            .with_label(format!("rotated cor12({variant})"));
        population.push(data);
        population.push(moved);
    }
    population.extend(two_step_population(200, 9500));

    let results = exec::map(exec_mode, &population, |data| -> Result<bool, String> {
        let label = data.label().unwrap_or("?");
        let d = classify_skl_seeded(data, TAU, 0).map_err(|e| format!("{label}: {e}"))?;
        if !d.verdict {
            return Ok(false);
        }
        let gap = round_trip_gap(data, &d).map_err(|e| format!("{label}: {e}"))?;
        if gap >= ROUND_TRIP {
            return Err(format!("{label}: round trip off by {gap:e}"));
        }
        Ok(true)
    });
    let positives = results.iter().filter(|r| matches!(r, Ok(true))).count();
    let mut failures: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();

    for lambda in [0.5, 1.0, 2.0] {
        let data = build_family(&Family::Kodaira { lambda }).unwrap();
        let got = classify_skl(&data, TAU)
            .ok()
            .and_then(|d| d.normal_form)
            .and_then(|nf| nf.lambdas.first().copied());
        match got {
            Some(l) if (l - 2f64.sqrt() * lambda).abs() < EXACT => {}
            other => failures.push(format!("kodaira({lambda}): lambda_1 {other:?}")),
        }
    }
    outcome(
        9,
        "normal forms rebuild the input",
        &failures,
        format!(
            "{positives} SKL-positive structures of {}, kodaira lambda_1 = √2 λ",
            population.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. report determinism

fn shuffled_file(data: &HermitianLieData, seed: u64) -> String {
    let mut body = constants_json(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for key in ["C", "D"] {
        if let Some(Value::Array(list)) = body.get_mut(key) {
            list.shuffle(&mut rng);
        }
    }
    serde_json::json!({ "structure_constants": body }).to_string()
}

pub fn report_determinism(exec_mode: Execution) -> CriterionOutcome {
    let population = catalog();
    let failures: Vec<String> = exec::map(exec_mode, &population, |data| -> Option<String> {
        let label = data.label().unwrap_or("?").to_string();
        let path = std::path::Path::new("catalog.json");
        let render = |text: &str| -> Result<String, String> {
            let parsed = parse_structure_str(text, path).map_err(|e| e.to_string())?;
            analyze(&parsed, TAU, 0)
                .map(|r| render_json(&r))
                .map_err(|e| e.to_string())
        };
        let base = shuffled_file(data, 0);
        let first = match render(&base) {
            Ok(s) => s,
            Err(e) => return Some(format!("{label}: {e}")),
        };
        if render(&base).as_ref() != Ok(&first) {
            return Some(format!("{label}: repeated runs differ"));
        }
        for seed in 1..=4 {
            if render(&shuffled_file(data, seed)).as_ref() != Ok(&first) {
                return Some(format!("{label}: permutation {seed} changes the report"));
            }
        }
        None
    })
    .into_iter()
    .flatten()
    .collect();
    outcome(
        10,
        "JSON reports are byte-identical across runs and entry orders",
        &failures,
        format!("{} catalog structures, 2 runs + 4 permutations each", population.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcriptions_evaluate_to_the_builder() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for variant in VARIANTS {
            let p = draw_params(variant, &mut rng);
            let cd = evaluate_transcription(variant.n(), transcription(variant), &p).unwrap();
            let a = from_coframe_unchecked(&cd).unwrap();
            let b = cor12(variant, &p);
            assert!(a.distance(&b) < 1e-12 * (1.0 + b.scale()), "{variant}");
        }
    }

    #[test]
    fn evaluator_handles_fractions_and_signs() {
        let mut p = Cor12Params::default();
        for (k, v) in [("a", 2.0), ("b", 3.0), ("c", 0.5), ("lambda2", 4.0)] {
            p.set(k, v).unwrap();
        }
        let v = tex_value(&normalize_tex(r"(ic\!-\!\frac{ab}{\lambda_2})"), &p).unwrap();
        assert_eq!(v, Complex64::new(-1.5, 0.5));
        assert!(tex_value("q", &p).is_err());
    }

    #[test]
    fn normalization_strips_spacing() {
        assert_eq!(
            normalize_tex(r"d\varphi_5 =  \qquad   \lambda_2\, \varphi_2"),
            r"d\varphi_5=\lambda_2\varphi_2"
        );
    }

    #[test]
    fn closed_formula_sign() {
        // dφ_3 = φ_1φ̄_1 + φ_2φ̄_2 gives i(Y_1Ȳ_2 + Y_2Ȳ_1) = 2i on φ_1φ_2φ̄_1φ̄_2
        let mut y = vec![vec![Complex64::new(0.0, 0.0); 3]; 3];
        y[0][2] = Complex64::new(1.0, 0.0);
        y[1][2] = Complex64::new(1.0, 0.0);
        let f = ddbar_closed_formula(&y);
        assert_eq!(f.coefficient(&[1, 2], &[1, 2]), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn y_defect_of_uncompensated_tables() {
        let mut p = unit_params();
        p.y = Cor12Params::solve_6b_y(1.0, 1.0, 1.0, 1.0, 1.0);
        for variant in [Cor12Variant::N5b, Cor12Variant::N6b, Cor12Variant::N6c] {
            let good = y_matrix(&cor12_coframe(variant, &p).unwrap()).unwrap();
            let bad = y_matrix(&cor12_uncompensated(variant, &p).unwrap()).unwrap();
            assert!(y_pair_defect(&good) < 1e-15);
            assert_eq!(y_pair_defect(&bad), 2.0);
        }
    }

    #[test]
    fn population_sizes() {
        assert!(two_step_population(1000, 0).len() >= 1000);
        assert!(normal_form_draws()
            .iter()
            .all(|(v, p)| v.param_names().iter().all(|k| p.get(k).is_some())));
    }

    #[test]
    fn missing_reference_fails_the_table_check() {
        let opts = SelftestOptions {
            reference: Some(PathBuf::from("/nonexistent/reference.md")),
            exec: Execution::Sequential,
        };
        assert!(quote_check(&opts, &[]).is_err());
    }
}
