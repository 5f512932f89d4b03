//! Exterior calculus on left-invariant complex forms.
//!
//! A monomial `φ_I ∧ φ̄_J` is a bitmask over the `2n` generators
//! `φ_1, …, φ_n, φ̄_1, …, φ̄_n` (bit `a` for `φ_{a+1}`, bit `n + a` for
//! `φ̄_{a+1}`), always written with generators in increasing bit order.
//! Forms evaluate on vectors with the determinant convention, so
//! `α∧β(X, Y) = α(X)β(Y) − α(Y)β(X)`, and `dα(X, Y) = −α([X, Y])` on
//! invariant 1-forms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::algebra::{ensure_valid, HermitianLieData};
use crate::exec::{self, Execution};
use crate::{Error, Result};

/// Generators are stored in a `u64`.
pub const MAX_N: usize = 32;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantForm {
    n: usize,
    terms: BTreeMap<u64, Complex64>,
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Sign of `mono(a) ∧ mono(b)` relative to `mono(a | b)`; zero on overlap.
fn wedge_sign(a: u64, b: u64) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        rest &= rest - 1;
        // generators of `a` sitting after y
        let above = if y >= 63 { 0 } else { a >> (y + 1) };
        inversions += above.count_ones();
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl InvariantForm {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_N, "complex dimension {n} exceeds {MAX_N}");
        InvariantForm {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, v: Complex64) -> Self {
        let mut f = Self::zero(n);
        f.add_term(0, v);
        f
    }

    /// `φ_i` (1-based).
    pub fn phi(n: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i));
        let mut f = Self::zero(n);
        f.add_term(1 << (i - 1), Complex64::new(1.0, 0.0));
        f
    }

    /// `φ̄_i` (1-based).
    pub fn phi_bar(n: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i));
        let mut f = Self::zero(n);
        f.add_term(1 << (n + i - 1), Complex64::new(1.0, 0.0));
        f
    }

    /// `v · φ_{hol[0]} ∧ … ∧ φ̄_{anti[0]} ∧ …` with 1-based indices in any
    /// order; the reordering sign is applied.
    pub fn monomial(n: usize, hol: &[usize], anti: &[usize], v: Complex64) -> Self {
        let mut f = Self::constant(n, v);
        for &i in hol {
            f = f.wedge_unchecked(&Self::phi(n, i));
        }
        for &i in anti {
            f = f.wedge_unchecked(&Self::phi_bar(n, i));
        }
        f
    }

    /// Raw monomial from a generator bitmask.
    pub fn from_mask(n: usize, mask: u64, v: Complex64) -> Self {
        assert!(mask & !low_mask(2 * n) == 0, "mask uses generators past 2n");
        let mut f = Self::zero(n);
        f.add_term(mask, v);
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn split_mask(&self, mask: u64) -> (u64, u64) {
        let lo = low_mask(self.n);
        (mask & lo, (mask >> self.n) & lo)
    }

    fn indices(bits: u64) -> Vec<usize> {
        (0..64).filter(|b| bits >> b & 1 == 1).map(|b| b + 1).collect()
    }

    /// Canonical terms as `(hol, anti, coefficient)` with sorted 1-based
    /// index lists.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &v)| {
            let (h, a) = self.split_mask(m);
            (Self::indices(h), Self::indices(a), v)
        })
    }

    pub fn masks(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &v)| (m, v))
    }

    /// Coefficient of the canonical monomial with the given sorted index sets.
    pub fn coefficient(&self, hol: &[usize], anti: &[usize]) -> Complex64 {
        let mut mask = 0u64;
        for &i in hol {
            mask |= 1 << (i - 1);
        }
        for &i in anti {
            mask |= 1 << (self.n + i - 1);
        }
        self.terms.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|m| m.count_ones() as usize);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// `(p, q)` of every term present.
    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .terms
            .keys()
            .map(|&m| {
                let (h, a) = self.split_mask(m);
                (h.count_ones() as usize, a.count_ones() as usize)
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The `(p, q)` component.
    pub fn component(&self, p: usize, q: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, &v) in &self.terms {
            let (h, a) = self.split_mask(m);
            if h.count_ones() as usize == p && a.count_ones() as usize == q {
                out.terms.insert(m, v);
            }
        }
        out
    }

    /// Max absolute canonical coefficient.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn add_term(&mut self, mask: u64, v: Complex64) {
        if v == ZERO {
            return;
        }
        let slot = self.terms.entry(mask).or_insert(ZERO);
        *slot += v;
        if *slot == ZERO {
            self.terms.remove(&mask);
        }
    }

    fn check_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        Ok(self.wedge_unchecked(other))
    }

    fn wedge_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (&a, &x) in &self.terms {
            for (&b, &y) in &other.terms {
                let s = wedge_sign(a, b);
                if s != 0 {
                    out.add_term(a | b, x * y * s as f64);
                }
            }
        }
        out
    }

    /// Complex conjugate: `conj(c φ_I∧φ̄_J) = conj(c) (−1)^{|I||J|} φ_J∧φ̄_I`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, &v) in &self.terms {
            let (h, a) = self.split_mask(m);
            let sign = if (h.count_ones() * a.count_ones()) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.add_term(a | (h << self.n), v.conj() * sign);
        }
        out
    }

    pub fn scale(&self, v: Complex64) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, &x) in &self.terms {
            out.add_term(m, x * v);
        }
        out
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (&m, &v) in &other.terms {
            out.add_term(m, v);
        }
        Ok(out)
    }

    /// Value on the frame vectors `f_{x_1}, …, f_{x_k}` where `f_x = e_{x+1}`
    /// for `x < n` and `ē_{x−n+1}` otherwise (0-based).
    pub fn eval(&self, vectors: &[usize]) -> Complex64 {
        let mut mask = 0u64;
        for &x in vectors {
            if x >= 2 * self.n || mask >> x & 1 == 1 {
                return ZERO;
            }
            mask |= 1 << x;
        }
        let Some(&v) = self.terms.get(&mask) else {
            return ZERO;
        };
        // sign of the permutation sorting `vectors`
        let mut inversions = 0;
        for a in 0..vectors.len() {
            for b in (a + 1)..vectors.len() {
                if vectors[a] > vectors[b] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            v
        } else {
            -v
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.clone() - other.clone()).norm()
    }
}

impl Add for InvariantForm {
    type Output = InvariantForm;

    fn add(self, rhs: Self) -> Self {
        self.checked_add(&rhs).expect("forms of different dimension")
    }
}

impl Neg for InvariantForm {
    type Output = InvariantForm;

    fn neg(self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for InvariantForm {
    type Output = InvariantForm;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul<Complex64> for InvariantForm {
    type Output = InvariantForm;

    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}

impl fmt::Display for InvariantForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (hol, anti, v)) in self.terms().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", v.re, v.im)?;
            for i in hol {
                write!(f, " φ{i}")?;
            }
            for i in anti {
                write!(f, " φ̄{i}")?;
            }
        }
        Ok(())
    }
}

/// The exterior derivative of a structure, with `dφ_j` and `dφ̄_j`
/// precomputed.
#[derive(Debug, Clone)]
pub struct Differential {
    n: usize,
    /// `d` of generator `a` (bit order).
    gens: Vec<InvariantForm>,
}

impl Differential {
    /// `dφ_j = −½ Σ C^j_{ik} φ_i∧φ_k − Σ conj(D^i_{jk}) φ_i∧φ̄_k`.
    ///
    /// Works for any constants; `d² = 0` exactly when they satisfy Jacobi.
    pub fn new(data: &HermitianLieData) -> Self {
        let n = data.n();
        let c = data.c_array();
        let d = data.d_array();
        let mut gens = Vec::with_capacity(2 * n);
        for j in 0..n {
            let mut f = InvariantForm::zero(n);
            for i in 0..n {
                for k in (i + 1)..n {
                    // −½(C^j_{ik} − C^j_{ki}) φ_i∧φ_k, without assuming antisymmetry
                    let v = -(c[[j, i, k]] - c[[j, k, i]]) * 0.5;
                    f.add_term((1 << i) | (1 << k), v);
                }
                for k in 0..n {
                    f.add_term((1 << i) | (1 << (n + k)), -d[[i, j, k]].conj());
                }
            }
            gens.push(f);
        }
        let bars: Vec<InvariantForm> = gens.iter().map(InvariantForm::conj).collect();
        gens.extend(bars);
        Differential { n, gens }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `dφ_j` (1-based).
    pub fn d_phi(&self, j: usize) -> &InvariantForm {
        &self.gens[j - 1]
    }

    fn d_mask(&self, mask: u64, v: Complex64, out: &mut InvariantForm) {
        let mut rest = mask;
        let mut position = 0;
        while rest != 0 {
            let g = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            // dg is even, so it can be pulled to the front after the sign
            let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
            let others = mask & !(1u64 << g);
            for (&m, &x) in &self.gens[g].terms {
                let s = wedge_sign(m, others);
                if s != 0 {
                    out.add_term(m | others, v * x * (sign * s as f64));
                }
            }
            position += 1;
        }
    }

    pub fn apply(&self, form: &InvariantForm) -> Result<InvariantForm> {
        if form.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: form.n,
            });
        }
        let mut out = InvariantForm::zero(self.n);
        for (&m, &v) in &form.terms {
            self.d_mask(m, v, &mut out);
        }
        Ok(out)
    }

    /// `(∂form, ∂̄form)`: per term, the `d`-terms raising the holomorphic
    /// degree go to `∂`, the rest to `∂̄`.
    pub fn split(&self, form: &InvariantForm) -> Result<(InvariantForm, InvariantForm)> {
        if form.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: form.n,
            });
        }
        let lo = low_mask(self.n);
        let mut del = InvariantForm::zero(self.n);
        let mut delbar = InvariantForm::zero(self.n);
        for (&m, &v) in &form.terms {
            let p = (m & lo).count_ones();
            let mut dm = InvariantForm::zero(self.n);
            self.d_mask(m, v, &mut dm);
            for (&t, &x) in &dm.terms {
                if (t & lo).count_ones() > p {
                    del.add_term(t, x);
                } else {
                    delbar.add_term(t, x);
                }
            }
        }
        Ok((del, delbar))
    }

    pub fn del(&self, form: &InvariantForm) -> Result<InvariantForm> {
        Ok(self.split(form)?.0)
    }

    pub fn delbar(&self, form: &InvariantForm) -> Result<InvariantForm> {
        Ok(self.split(form)?.1)
    }
}

/// `d(form)` for the structure `data`.
pub fn d_operator(form: &InvariantForm, data: &HermitianLieData) -> Result<InvariantForm> {
    Differential::new(data).apply(form)
}

/// `(∂form, ∂̄form)` for the structure `data`.
pub fn bidegree_split(form: &InvariantForm, data: &HermitianLieData) -> Result<(InvariantForm, InvariantForm)> {
    Differential::new(data).split(form)
}

pub fn wedge(a: &InvariantForm, b: &InvariantForm) -> Result<InvariantForm> {
    a.wedge(b)
}

/// Largest coefficient of `d(d(φ_I∧φ̄_J))` over all `2^{2n}` basis monomials.
pub fn d_squared_residual(data: &HermitianLieData, exec: Execution) -> f64 {
    let diff = Differential::new(data);
    let n = data.n();
    let count = 1usize << (2 * n);
    exec::map_range(exec, count, |mask| {
        let f = InvariantForm::from_mask(n, mask as u64, Complex64::new(1.0, 0.0));
        let once = diff.apply(&f).expect("same n");
        diff.apply(&once).expect("same n").norm()
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// `ω = i Σ φ_k∧φ̄_k`.
pub fn kahler_form(n: usize) -> InvariantForm {
    let mut w = InvariantForm::zero(n);
    for k in 1..=n {
        w = w + InvariantForm::monomial(n, &[k], &[k], Complex64::new(0.0, 1.0));
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricResiduals {
    /// `‖dω‖`
    pub kahler: f64,
    /// `‖∂∂̄ω‖`
    pub pluriclosed: f64,
    /// `‖d(ω^{n−1})‖`, zero for `n = 1`
    pub balanced: f64,
}

pub fn metric_form_residuals(data: &HermitianLieData) -> Result<MetricResiduals> {
    ensure_valid(data)?;
    metric_residuals_unchecked(data)
}

pub(crate) fn metric_residuals_unchecked(data: &HermitianLieData) -> Result<MetricResiduals> {
    let n = data.n();
    let diff = Differential::new(data);
    let omega = kahler_form(n);
    let kahler = diff.apply(&omega)?.norm();
    let ddbar = diff.del(&diff.delbar(&omega)?)?;
    let balanced = if n == 1 {
        0.0
    } else {
        let mut power = omega.clone();
        for _ in 2..n {
            power = power.wedge(&omega)?;
        }
        diff.apply(&power)?.norm()
    };
    Ok(MetricResiduals {
        kahler,
        pluriclosed: ddbar.norm(),
        balanced,
    })
}

/// `∂∂̄ω` itself.
pub fn ddbar_omega(data: &HermitianLieData) -> Result<InvariantForm> {
    let diff = Differential::new(data);
    diff.del(&diff.delbar(&kahler_form(data.n()))?)
}

/// An `n × n` matrix of forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixForm {
    n: usize,
    entries: Vec<InvariantForm>,
}

impl MatrixForm {
    pub fn zero(n: usize) -> Self {
        MatrixForm {
            n,
            entries: vec![InvariantForm::zero(n); n * n],
        }
    }

    /// Builds entry `(i, j)` (0-based) from `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> InvariantForm) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = f(i, j);
                assert_eq!(e.n(), n, "entry dimension");
                entries.push(e);
            }
        }
        MatrixForm { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &InvariantForm {
        &self.entries[i * self.n + j]
    }

    /// `(A∧B)_{ij} = Σ_k A_{ik} ∧ B_{kj}`.
    pub fn wedge(&self, other: &MatrixForm) -> Result<MatrixForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        Ok(MatrixForm::from_fn(n, |i, j| {
            (0..n).fold(InvariantForm::zero(n), |acc, k| {
                acc + self.get(i, k).wedge_unchecked(other.get(k, j))
            })
        }))
    }

    pub fn add(&self, other: &MatrixForm) -> MatrixForm {
        MatrixForm::from_fn(self.n, |i, j| self.get(i, j).clone() + other.get(i, j).clone())
    }

    pub fn sub(&self, other: &MatrixForm) -> MatrixForm {
        MatrixForm::from_fn(self.n, |i, j| self.get(i, j).clone() - other.get(i, j).clone())
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> MatrixForm {
        MatrixForm::from_fn(self.n, |i, j| self.get(i, j).conj())
    }

    pub fn d(&self, diff: &Differential) -> Result<MatrixForm> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(diff.apply(e)?);
        }
        Ok(MatrixForm { n: self.n, entries })
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(InvariantForm::norm).fold(0.0, f64::max)
    }
}
