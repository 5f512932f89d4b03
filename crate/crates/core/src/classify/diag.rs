//! Simultaneous unitary diagonalization of commuting normal matrices.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{max_abs, CMat, CVec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    /// Unitary with `U M U†` diagonal for every input `M`.
    pub u: CMat,
    /// Diagonal of `U M U†`, per input matrix.
    pub diagonals: Vec<Vec<Complex64>>,
    /// Largest off-diagonal magnitude over all `U M U†`.
    pub residual: f64,
}

fn off_diagonal(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn simultaneous_diagonalize(mats: &[CMat], tol: f64) -> Result<Diagonalization> {
    simultaneous_diagonalize_seeded(mats, tol, 0)
}

/// As [`simultaneous_diagonalize`], with an explicit seed for the random
/// Hermitian combinations.
pub fn simultaneous_diagonalize_seeded(mats: &[CMat], tol: f64, seed: u64) -> Result<Diagonalization> {
    let n = mats.first().map_or(0, |m| m.nrows());
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
    }
    for (index, m) in mats.iter().enumerate() {
        let residual = max_abs(&(m * m.adjoint() - m.adjoint() * m));
        if residual > tol {
            return Err(Error::NotNormal { index, residual });
        }
    }
    for a in 0..mats.len() {
        for b in (a + 1)..mats.len() {
            let residual = max_abs(&(&mats[a] * &mats[b] - &mats[b] * &mats[a]));
            if residual > tol {
                return Err(Error::NotCommuting {
                    first: a,
                    second: b,
                    residual,
                });
            }
        }
    }

    let u = if mats.iter().all(|m| off_diagonal(m) == 0.0) {
        CMat::identity(n, n)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = mats.iter().map(max_abs).fold(0.0, f64::max);
        let start: Vec<CVec> = (0..n).map(|i| crate::linalg::unit::<Complex64>(n, i)).collect();
        let vectors = refine(mats, &start, scale, tol, &mut rng, 0);
        // rows of U are the conjugated common eigenvectors
        CMat::from_fn(n, n, |a, b| vectors[a][b].conj())
    };

    let mut diagonals = Vec::with_capacity(mats.len());
    let mut residual: f64 = 0.0;
    for m in mats {
        let d = &u * m * u.adjoint();
        residual = residual.max(off_diagonal(&d));
        diagonals.push((0..n).map(|i| d[(i, i)]).collect());
    }
    Ok(Diagonalization { u, diagonals, residual })
}

const MAX_DEPTH: usize = 12;

/// Splits `span(basis)` into common eigenspaces.
fn refine(mats: &[CMat], basis: &[CVec], scale: f64, tol: f64, rng: &mut ChaCha8Rng, depth: usize) -> Vec<CVec> {
    let k = basis.len();
    if k <= 1 || depth >= MAX_DEPTH {
        return basis.to_vec();
    }
    let v = CMat::from_columns(basis);
    let restricted: Vec<CMat> = mats.iter().map(|m| v.adjoint() * m * &v).collect();
    if restricted.iter().all(|r| is_scalar(r, tol)) {
        return basis.to_vec();
    }
    let mut h = CMat::zeros(k, k);
    for r in &restricted {
        let t: f64 = rng.random_range(-1.0..1.0);
        let s: f64 = rng.random_range(-1.0..1.0);
        let herm = r + r.adjoint();
        let skew = (r - r.adjoint()) * Complex64::new(0.0, 1.0);
        h += herm * Complex64::new(t, 0.0) + skew * Complex64::new(s, 0.0);
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let gap = 1e-6 * scale.max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(k);
    let mut cluster: Vec<CVec> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &idx in &order {
        let lambda = eig.eigenvalues[idx];
        if !cluster.is_empty() && lambda - last > gap {
            out.extend(refine(mats, &cluster, scale, tol, rng, depth + 1));
            cluster.clear();
        }
        cluster.push(&v * eig.eigenvectors.column(idx));
        last = lambda;
    }
    out.extend(refine(mats, &cluster, scale, tol, rng, depth + 1));
    out
}

fn is_scalar(m: &CMat, tol: f64) -> bool {
    let k = m.nrows();
    let d0 = m[(0, 0)];
    off_diagonal(m) <= tol && (0..k).all(|i| (m[(i, i)] - d0).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, unitary_deviation};

    fn random_unitary(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a.qr().q()
    }

    #[test]
    fn diagonal_input_keeps_identity() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
        let d = simultaneous_diagonalize(&[m], 1e-10).unwrap();
        assert_eq!(d.u, CMat::identity(3, 3));
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn rejects_non_normal() {
        let mut nil = CMat::zeros(2, 2);
        nil[(0, 1)] = c(1.0, 0.0);
        let err = simultaneous_diagonalize(&[nil, CMat::identity(2, 2)], 1e-10).unwrap_err();
        assert!(matches!(err, Error::NotNormal { index: 0, .. }));
    }

    #[test]
    fn rejects_non_commuting() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            simultaneous_diagonalize(&[a, b], 1e-10),
            Err(Error::NotCommuting {
                first: 0,
                second: 1,
                ..
            })
        ));
    }

    #[test]
    fn recovers_hidden_common_basis() {
        for seed in 0..20 {
            let n = 4;
            let w = random_unitary(n, seed);
            // degenerate spectra force refinement
            let d1 = CMat::from_diagonal(&CVec::from_vec(vec![
                c(1.0, 1.0),
                c(1.0, 1.0),
                c(-2.0, 0.0),
                c(0.0, 0.0),
            ]));
            let d2 = CMat::from_diagonal(&CVec::from_vec(vec![
                c(0.0, 0.0),
                c(3.0, 0.0),
                c(3.0, 0.0),
                c(0.0, 0.0),
            ]));
            let m1 = w.adjoint() * &d1 * &w;
            let m2 = w.adjoint() * &d2 * &w;
            let d = simultaneous_diagonalize_seeded(&[m1, m2], 1e-10, seed).unwrap();
            assert!(d.residual < 1e-12, "{}", d.residual);
            assert!(unitary_deviation(&d.u) < 1e-12);
        }
    }

    #[test]
    fn zero_matrices() {
        let d = simultaneous_diagonalize(&[CMat::zeros(3, 3)], 1e-10).unwrap();
        assert_eq!(d.u, CMat::identity(3, 3));
        let d = simultaneous_diagonalize(&[], 1e-10).unwrap();
        assert_eq!(d.u.nrows(), 0);
    }
}
