//! Small dense linear-algebra helpers: rank, kernels, adapted bases.
//!
//! Rank decisions keep singular values above
//! `RANK_TOL * max(sigma_max, scale)`, where `scale` is the magnitude of the
//! structure constants the matrix was built from.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::RANK_TOL;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn threshold(sigma_max: f64, scale: f64) -> f64 {
    RANK_TOL * sigma_max.max(scale)
}

fn padded<T: ComplexField>(a: &DMatrix<T>) -> DMatrix<T> {
    let (m, n) = a.shape();
    if m >= n {
        return a.clone();
    }
    let mut p = DMatrix::<T>::zeros(n, n);
    p.view_mut((0, 0), (m, n)).copy_from(a);
    p
}

/// Orthonormal basis of the right null space of `a`.
pub fn kernel<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, scale: f64) -> Vec<DVector<T>> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    if a.nrows() == 0 {
        return (0..n).map(|i| unit::<T>(n, i)).collect();
    }
    let svd = padded(a).svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = threshold(sigma_max, scale);
    (0..n)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| v_t.row(i).adjoint())
        .collect()
}

/// Rank of `a`.
pub fn rank<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, scale: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let thr = threshold(sigma_max, scale);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, scale: f64) -> Vec<DVector<T>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = threshold(sigma_max, scale);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > thr)
        .map(|i| u.column(i).into_owned())
        .collect()
}

pub fn unit<T: ComplexField>(n: usize, i: usize) -> DVector<T> {
    let mut v = DVector::<T>::zeros(n);
    v[i] = T::one();
    v
}

fn orthogonalize<T: ComplexField<RealField = f64>>(v: &mut DVector<T>, basis: &[DVector<T>]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(v);
            v.axpy(-proj, b, T::one());
        }
    }
}

/// Orthonormal basis of `span(sub)` made from projections of the standard
/// basis vectors, preferring low indices. When `sub` is spanned by standard
/// vectors the result consists of exactly those vectors.
pub fn standard_adapted<T: ComplexField<RealField = f64>>(sub: &[DVector<T>], n: usize) -> Vec<DVector<T>> {
    extend_adapted(sub, &[], n)
}

/// Orthonormal basis of `span(sub) ∩ span(prior)^⊥`, assuming `prior` is an
/// orthonormal family inside `span(sub)`. Same standard-vector preference as
/// [`standard_adapted`].
pub fn extend_adapted<T: ComplexField<RealField = f64>>(
    sub: &[DVector<T>],
    prior: &[DVector<T>],
    n: usize,
) -> Vec<DVector<T>> {
    let want = sub.len().saturating_sub(prior.len());
    let mut chosen: Vec<DVector<T>> = prior.to_vec();
    let mut used = vec![false; n];
    while chosen.len() < prior.len() + want {
        let mut best: Option<(usize, DVector<T>, f64)> = None;
        for i in (0..n).filter(|&i| !used[i]) {
            let mut v = DVector::<T>::zeros(n);
            for b in sub {
                let p = b[i].clone().conjugate();
                v.axpy(p, b, T::one());
            }
            orthogonalize(&mut v, &chosen);
            let nv = v.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| nv > *bn + 1e-12) {
                best = Some((i, v, nv));
            }
        }
        let (i, mut v, nv) = best.expect("subspace dimension exceeds ambient dimension");
        used[i] = true;
        v.unscale_mut(nv);
        chosen.push(v);
    }
    chosen.split_off(prior.len())
}

/// Completes an orthonormal family to an orthonormal basis of the ambient
/// space, appending projections of standard vectors in index order.
pub fn complete_basis<T: ComplexField<RealField = f64>>(head: &[DVector<T>], n: usize) -> Vec<DVector<T>> {
    let mut basis: Vec<DVector<T>> = head.to_vec();
    while basis.len() < n {
        let mut best: Option<(DVector<T>, f64)> = None;
        for i in 0..n {
            let mut v = unit::<T>(n, i);
            orthogonalize(&mut v, &basis);
            let nv = v.norm();
            if best.as_ref().is_none_or(|(_, bn)| nv > *bn + 1e-12) {
                best = Some((v, nv));
            }
        }
        let (mut v, nv) = best.expect("n > 0");
        v.unscale_mut(nv);
        basis.push(v);
    }
    basis
}

/// `max |U†U − I|`.
pub fn unitary_deviation(u: &CMat) -> f64 {
    let n = u.ncols();
    let g = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - c(target, 0.0)).norm());
        }
    }
    if u.nrows() != n {
        return f64::INFINITY;
    }
    dev
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_rank_one() {
        let a = RMat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = kernel(&a, 0.0);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!((a.clone() * v).norm() < 1e-14);
        }
        assert_eq!(rank(&a, 0.0), 1);
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let a = CMat::zeros(4, 3);
        assert_eq!(kernel(&a, 0.0).len(), 3);
        assert_eq!(rank(&a, 0.0), 0);
        assert!(column_space(&a, 0.0).is_empty());
    }

    #[test]
    fn adapted_basis_prefers_standard_vectors() {
        let sub = vec![
            CVec::from_vec(vec![c(0.6, 0.0), c(0.8, 0.0), c(0.0, 0.0)]),
            CVec::from_vec(vec![c(0.8, 0.0), c(-0.6, 0.0), c(0.0, 0.0)]),
        ];
        let b = standard_adapted(&sub, 3);
        assert!((b[0].clone() - unit::<Complex64>(3, 0)).norm() < 1e-14);
        assert!((b[1].clone() - unit::<Complex64>(3, 1)).norm() < 1e-14);
        let full = complete_basis(&b, 3);
        assert!((full[2].clone() - unit::<Complex64>(3, 2)).norm() < 1e-14);
    }

    #[test]
    fn unitary_check() {
        let mut u = CMat::identity(2, 2);
        assert_eq!(unitary_deviation(&u), 0.0);
        u[(0, 1)] = c(0.1, 0.0);
        assert!(unitary_deviation(&u) > 0.05);
    }
}
