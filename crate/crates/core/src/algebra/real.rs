//! Realification on the orthonormal basis `ε_1, …, ε_{2n}` with
//! `e_a = (ε_a − iε_{n+a})/√2` and `Jε_a = ε_{n+a}`.

use nalgebra::DMatrix;
use ndarray::Array3;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use super::{ensure_valid, HermitianLieData};
use crate::linalg::RMat;
use crate::tensor::{contract3, to_complex3};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct RealLieData {
    pub n: usize,
    /// `[ε_a, ε_b] = Σ_c bracket[[a, b, c]] ε_c`
    pub bracket: Array3<f64>,
    /// Column `a` holds the coordinates of `Jε_a`.
    pub j: RMat,
}

impl RealLieData {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn bracket_norm(&self) -> f64 {
        self.bracket.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// `M` with `ε_a = Σ_x M[(a, x)] f_x`, `f = (e, ē)`.
pub fn eps_in_f(n: usize) -> DMatrix<Complex64> {
    let s = FRAC_1_SQRT_2;
    let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for a in 0..n {
        m[(a, a)] = Complex64::new(s, 0.0);
        m[(a, n + a)] = Complex64::new(s, 0.0);
        m[(n + a, a)] = Complex64::new(0.0, s);
        m[(n + a, n + a)] = Complex64::new(0.0, -s);
    }
    m
}

/// `P` with `f_x = Σ_a P[(x, a)] ε_a`; the inverse of [`eps_in_f`].
pub fn f_in_eps(n: usize) -> DMatrix<Complex64> {
    let s = FRAC_1_SQRT_2;
    let mut p = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for a in 0..n {
        p[(a, a)] = Complex64::new(s, 0.0);
        p[(a, n + a)] = Complex64::new(0.0, -s);
        p[(n + a, a)] = Complex64::new(s, 0.0);
        p[(n + a, n + a)] = Complex64::new(0.0, s);
    }
    p
}

/// `J` on the ε-basis: `Jε_a = ε_{n+a}`, `Jε_{n+a} = −ε_a`.
pub fn standard_j(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(n + a, a)] = 1.0;
        j[(a, n + a)] = -1.0;
    }
    j
}

/// Rewrites a `(2,1)` tensor given on `f` (two lower slots, one upper) on
/// the ε-basis and drops the (vanishing) imaginary part.
pub(crate) fn f_to_real3(t: &Array3<Complex64>, n: usize) -> (Array3<f64>, f64) {
    let m = eps_in_f(n);
    let p_t = f_in_eps(n).transpose();
    let t = contract3(t, &m, 0);
    let t = contract3(&t, &m, 1);
    let t = contract3(&t, &p_t, 2);
    let imag = t.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    (t.mapv(|z| z.re), imag)
}

pub(crate) fn real_to_f3(t: &Array3<f64>, n: usize) -> Array3<Complex64> {
    let p = f_in_eps(n);
    let m_t = eps_in_f(n).transpose();
    let t = to_complex3(t);
    let t = contract3(&t, &p, 0);
    let t = contract3(&t, &p, 1);
    contract3(&t, &m_t, 2)
}

/// Realification without the validity gate (used by validation itself).
pub fn realify_unchecked(data: &HermitianLieData) -> RealLieData {
    let n = data.n();
    let (bracket, _) = f_to_real3(&data.complex_bracket(), n);
    RealLieData {
        n,
        bracket,
        j: standard_j(n),
    }
}

pub fn realify(data: &HermitianLieData) -> Result<RealLieData> {
    ensure_valid(data)?;
    Ok(realify_unchecked(data))
}

/// Reads `(C, D)` back off a real bracket.
pub fn complexify(real: &RealLieData) -> HermitianLieData {
    let n = real.n;
    let b = real_to_f3(&real.bracket, n);
    let c = Array3::from_shape_fn((n, n, n), |(j, i, k)| b[[i, k, j]]);
    let d = Array3::from_shape_fn((n, n, n), |(j, i, k)| b[[n + j, k, n + i]]);
    HermitianLieData::from_arrays(c, d).expect("shapes match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn frame_matrices_are_inverse() {
        let n = 3;
        let prod = eps_in_f(n) * f_in_eps(n);
        let id = DMatrix::<Complex64>::identity(2 * n, 2 * n);
        assert!((prod - id).norm() < 1e-15);
    }

    #[test]
    fn abelian_realifies_to_zero() {
        let r = realify(&HermitianLieData::zeros(4)).unwrap();
        assert_eq!(r.bracket_norm(), 0.0);
        assert_eq!(r.dim(), 8);
    }

    #[test]
    fn kodaira_real_brackets() {
        let mut h = HermitianLieData::zeros(2);
        h.set_d(1, 2, 1, c(-1.0, 0.0));
        let r = realify(&h).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        // [ε_1, ε_3] = √2 ε_4
        assert!((r.bracket[[0, 2, 3]] - s2).abs() < 1e-15);
        assert!((r.bracket[[2, 0, 3]] + s2).abs() < 1e-15);
        let mut others = r.bracket.clone();
        others[[0, 2, 3]] = 0.0;
        others[[2, 0, 3]] = 0.0;
        assert!(others.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn iwasawa_round_trip() {
        let mut h = HermitianLieData::zeros(3);
        h.set_c(3, 1, 2, c(1.0, 0.0));
        let back = complexify(&realify(&h).unwrap());
        assert!(h.distance(&back) < 1e-15);
    }

    #[test]
    fn j_squares_to_minus_one() {
        let j = standard_j(3);
        assert!((&j * &j + RMat::identity(6, 6)).norm() == 0.0);
    }
}
