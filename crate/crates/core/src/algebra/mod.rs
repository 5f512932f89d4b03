//! Structure constants of a Lie-Hermitian structure and their validation.
//!
//! The frame `e_1, …, e_n` is unitary and of type `(1,0)`; the metric and
//! `J` are implicit (identity metric, `Je_i = i e_i`). Brackets are rebuilt
//! from `(C, D)` as
//!
//! ```text
//! [e_i, e_k]  = Σ_j C^j_{ik} e_j
//! [ē_j, e_k]  = Σ_i −conj(D^k_{ij}) e_i + Σ_i D^j_{ik} ē_i
//! ```
//!
//! with the remaining brackets fixed by conjugation. The `e`-part of
//! `[ē_j, e_k]` follows from `[ē_k, e_j] = −conj([ē_j, e_k]̄)`. Since
//! `[e_i, e_k]` has no `(0,1)`-part, `J` is integrable by construction.
//!
//! Exterior derivatives of invariant forms use `dα(X, Y) = −α([X, Y])`.

mod real;
mod series;

pub(crate) use real::f_to_real3;
#[cfg(test)]
pub(crate) use real::real_to_f3;
pub use real::{complexify, eps_in_f, f_in_eps, realify, realify_unchecked, standard_j, RealLieData};
pub(crate) use series::{forms_with_d_in_ideal, frame_from_coframe, is_nilpotent_j_real, lower_central_series_real};
pub use series::{
    is_nilpotent_j, lower_central_series, salamon_coframe, salamon_violation, LowerCentralSeries, NilpotentJ,
    SalamonCoframe,
};

use std::sync::OnceLock;

use ndarray::{Array3, Array4};
use num_complex::Complex64;

use crate::linalg::{unitary_deviation, CMat};
use crate::tensor::{contract3, max_abs3, max_abs4};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub struct HermitianLieData {
    n: usize,
    /// `c[[j, i, k]] = C^{j+1}_{i+1, k+1}`
    c: Array3<Complex64>,
    /// `d[[j, i, k]] = D^{j+1}_{i+1, k+1}`
    d: Array3<Complex64>,
    label: Option<String>,
    /// Set once [`ensure_valid`] has passed; the setters clear it.
    gate: OnceLock<()>,
}

impl PartialEq for HermitianLieData {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.c == other.c && self.d == other.d && self.label == other.label
    }
}

impl HermitianLieData {
    /// The abelian structure of complex dimension `n`.
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "complex dimension must be positive");
        HermitianLieData {
            n,
            c: Array3::zeros((n, n, n)),
            d: Array3::zeros((n, n, n)),
            label: None,
            gate: OnceLock::new(),
        }
    }

    /// Wraps raw arrays without enforcing antisymmetry; use [`validate`] to
    /// check them.
    pub fn from_arrays(c: Array3<Complex64>, d: Array3<Complex64>) -> Result<Self> {
        let n = c.dim().0;
        for (name, t) in [("C", &c), ("D", &d)] {
            let dim = t.dim();
            if dim != (n, n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: if dim.0 != n {
                        dim.0
                    } else if dim.1 != n {
                        dim.1
                    } else {
                        dim.2
                    },
                });
            }
            if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::ParamOutOfRange {
                    name: name.to_string(),
                    reason: "non-finite entry".to_string(),
                });
            }
        }
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(HermitianLieData {
            n,
            c,
            d,
            label: None,
            gate: OnceLock::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `C^j_{ik}`, 1-based.
    pub fn c(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.c[[j - 1, i - 1, k - 1]]
    }

    /// `D^j_{ik}`, 1-based.
    pub fn d(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.d[[j - 1, i - 1, k - 1]]
    }

    /// Sets `C^j_{ik} = v` and `C^j_{ki} = −v` (1-based).
    pub fn set_c(&mut self, j: usize, i: usize, k: usize, v: Complex64) {
        assert!(i != k || v == ZERO, "C^j_{{ii}} must vanish");
        self.c[[j - 1, i - 1, k - 1]] = v;
        self.c[[j - 1, k - 1, i - 1]] = -v;
        self.gate = OnceLock::new();
    }

    /// Sets `D^j_{ik} = v` (1-based).
    pub fn set_d(&mut self, j: usize, i: usize, k: usize, v: Complex64) {
        self.d[[j - 1, i - 1, k - 1]] = v;
        self.gate = OnceLock::new();
    }

    /// 0-based `[[j, i, k]]` view of `C`.
    pub fn c_array(&self) -> &Array3<Complex64> {
        &self.c
    }

    /// 0-based `[[j, i, k]]` view of `D`.
    pub fn d_array(&self) -> &Array3<Complex64> {
        &self.d
    }

    pub fn c_norm(&self) -> f64 {
        max_abs3(&self.c)
    }

    pub fn d_norm(&self) -> f64 {
        max_abs3(&self.d)
    }

    /// `max(‖C‖_∞, ‖D‖_∞)`, the scale used to normalize decision residuals.
    pub fn scale(&self) -> f64 {
        self.c_norm().max(self.d_norm())
    }

    /// Multiplies every structure constant by `f`; this corresponds to
    /// rescaling the metric by `1/f²`.
    pub fn scaled(&self, f: f64) -> Self {
        HermitianLieData {
            n: self.n,
            c: self.c.mapv(|z| z * f),
            d: self.d.mapv(|z| z * f),
            label: self.label.clone(),
            gate: OnceLock::new(),
        }
    }

    /// Max absolute difference of all constants.
    pub fn distance(&self, other: &HermitianLieData) -> f64 {
        assert_eq!(self.n, other.n);
        let dc = (&self.c - &other.c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dd = (&self.d - &other.d).iter().map(|z| z.norm()).fold(0.0, f64::max);
        dc.max(dd)
    }

    /// Structure constants on the complex basis `f = (e_1..e_n, ē_1..ē_n)`:
    /// `[f_x, f_y] = Σ_z b[[x, y, z]] f_z`.
    pub fn complex_bracket(&self) -> Array3<Complex64> {
        let n = self.n;
        let mut b = Array3::<Complex64>::zeros((2 * n, 2 * n, 2 * n));
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let cc = self.c[[j, i, k]];
                    b[[i, k, j]] = cc;
                    b[[n + i, n + k, n + j]] = cc.conj();
                }
            }
        }
        // [ē_j, e_k] = Σ_i −conj(D^k_{ij}) e_i + Σ_i D^j_{ik} ē_i
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    let e_part = -self.d[[k, i, j]].conj();
                    let ebar_part = self.d[[j, i, k]];
                    b[[n + j, k, i]] = e_part;
                    b[[n + j, k, n + i]] = ebar_part;
                    b[[k, n + j, i]] = -e_part;
                    b[[k, n + j, n + i]] = -ebar_part;
                }
            }
        }
        b
    }
}

/// Max modulus and Frobenius norm of the Jacobi tensor
/// `Σ_cyc [[x_a, x_b], x_c]` of a bracket tensor `[x_a, x_b] = Σ_c b[[a, b, c]] x_c`.
/// Entries are produced one at a time, nothing of size `m⁴` is allocated.
pub(crate) fn jacobi_stats<T>(b: &Array3<T>, norm_sqr: impl Fn(T) -> f64) -> (f64, f64)
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    let m = b.dim().0;
    let b = b.as_standard_layout();
    let flat = b.as_slice().expect("standard layout");
    let at = |x: usize, y: usize, z: usize| flat[(x * m + y) * m + z];
    let (mut max, mut sum) = (0.0f64, 0.0f64);
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                for w in 0..m {
                    let mut acc = T::default();
                    for r in 0..m {
                        acc = acc + at(x, y, r) * at(r, z, w) + at(y, z, r) * at(r, x, w) + at(z, x, r) * at(r, y, w);
                    }
                    let q = norm_sqr(acc);
                    max = max.max(q);
                    sum += q;
                }
            }
        }
    }
    (max.sqrt(), sum.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub antisymmetry_ok: bool,
    /// Max of the three identity families below.
    pub jacobi_residual: f64,
    /// `[CC, CD + DD, CD̄ + DD̄]` family residuals.
    pub jacobi_breakdown: [f64; 3],
    /// Max residual of the real Jacobi identity on the realification.
    pub real_jacobi_residual: f64,
    /// Frobenius norms of the complex-basis and real-basis Jacobi tensors;
    /// equal up to rounding since the change of basis is unitary.
    pub jacobi_frobenius_complex: f64,
    pub jacobi_frobenius_real: f64,
    pub valid: bool,
}

/// The three families of identities equivalent to Jacobi (and `d² = 0`),
/// each as an `n⁴` tensor indexed `[[i, j, k, l]]`.
pub fn jacobi_families(data: &HermitianLieData) -> [Array4<Complex64>; 3] {
    let n = data.n;
    let c = &data.c;
    let d = &data.d;
    let cc = |j: usize, i: usize, k: usize| c[[j, i, k]];
    let dd = |j: usize, i: usize, k: usize| d[[j, i, k]];
    let f1 = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        (0..n).fold(ZERO, |acc, r| {
            acc + cc(r, i, j) * cc(l, r, k) + cc(r, j, k) * cc(l, r, i) + cc(r, k, i) * cc(l, r, j)
        })
    });
    let f2 = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        (0..n).fold(ZERO, |acc, r| {
            acc + cc(r, i, k) * dd(l, j, r) + dd(r, j, i) * dd(l, r, k) - dd(r, j, k) * dd(l, r, i)
        })
    });
    let f3 = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        (0..n).fold(ZERO, |acc, r| {
            acc + cc(r, i, k) * dd(r, j, l).conj() - cc(j, r, k) * dd(i, r, l).conj() + cc(j, r, i) * dd(k, r, l).conj()
                - dd(l, r, i) * dd(k, j, r).conj()
                + dd(l, r, k) * dd(i, j, r).conj()
        })
    });
    [f1, f2, f3]
}

fn antisymmetry_ok(data: &HermitianLieData) -> bool {
    let n = data.n;
    (0..n).all(|j| (0..n).all(|i| (0..n).all(|k| data.c[[j, i, k]] == -data.c[[j, k, i]])))
}

pub fn validate(data: &HermitianLieData, tol: f64) -> ValidationReport {
    validate_impl(data, tol, true)
}

fn validate_impl(data: &HermitianLieData, tol: f64, complex_frobenius: bool) -> ValidationReport {
    let antisymmetry_ok = antisymmetry_ok(data);
    let families = jacobi_families(data);
    let breakdown = [max_abs4(&families[0]), max_abs4(&families[1]), max_abs4(&families[2])];
    let jacobi_residual = breakdown.iter().cloned().fold(0.0, f64::max);

    let jacobi_frobenius_complex = if complex_frobenius {
        jacobi_stats(&data.complex_bracket(), |z: Complex64| z.norm_sqr()).1
    } else {
        f64::NAN
    };
    let real = realify_unchecked(data);
    let (real_jacobi_residual, jacobi_frobenius_real) = jacobi_stats(&real.bracket, |x: f64| x * x);

    ValidationReport {
        antisymmetry_ok,
        jacobi_residual,
        jacobi_breakdown: breakdown,
        real_jacobi_residual,
        jacobi_frobenius_complex,
        jacobi_frobenius_real,
        valid: antisymmetry_ok && jacobi_residual < tol && real_jacobi_residual < tol,
    }
}

/// Gate used by every downstream operation.
pub(crate) fn ensure_valid(data: &HermitianLieData) -> Result<()> {
    if data.gate.get().is_some() {
        return Ok(());
    }
    let report = validate_impl(data, crate::DEFAULT_TOL * (1.0 + data.scale().powi(2)), false);
    if report.valid {
        let _ = data.gate.set(());
        Ok(())
    } else {
        Err(Error::InvalidStructure {
            antisymmetry_ok: report.antisymmetry_ok,
            jacobi_residual: report.jacobi_residual.max(report.real_jacobi_residual),
        })
    }
}

/// Expresses the structure in the frame `e' = U e`, i.e. `e'_a = Σ_b U_ab e_b`.
pub fn change_frame(data: &HermitianLieData, u: &CMat) -> Result<HermitianLieData> {
    let n = data.n;
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.nrows(),
        });
    }
    let dev = unitary_deviation(u);
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    Ok(change_frame_unchecked(data, u))
}

pub(crate) fn change_frame_unchecked(data: &HermitianLieData, u: &CMat) -> HermitianLieData {
    let u_conj = u.map(|z| z.conj());
    let transform = |t: &Array3<Complex64>| {
        let t = contract3(t, u, 1);
        let t = contract3(&t, u, 2);
        contract3(&t, &u_conj, 0)
    };
    // rounding breaks the antisymmetry of C; restore it bit-exactly
    let c = transform(&data.c);
    let c = Array3::from_shape_fn(c.dim(), |(j, i, k)| (c[[j, i, k]] - c[[j, k, i]]) * 0.5);
    HermitianLieData {
        n: data.n,
        c,
        d: transform(&data.d),
        label: data.label.clone(),
        gate: OnceLock::new(),
    }
}
