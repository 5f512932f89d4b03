//! Nilpotency tests and adapted coframes.

use num_complex::Complex64;

use super::{change_frame_unchecked, ensure_valid, realify_unchecked, HermitianLieData, RealLieData};
use crate::linalg::{column_space, extend_adapted, kernel, CMat, CVec, RMat, RVec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerCentralSeries {
    /// Real dimensions of `g ⊇ [g,g] ⊇ [[g,g],g] ⊇ …`, ending at 0 or at
    /// the first repeated value.
    pub dims: Vec<usize>,
    pub nilpotent: bool,
    /// Nilpotency step (`dims.len() − 1` when nilpotent).
    pub step: Option<usize>,
}

fn bracket_with(real: &RealLieData, a: usize, v: &RVec) -> RVec {
    let m = real.dim();
    RVec::from_fn(m, |c, _| (0..m).map(|b| v[b] * real.bracket[[a, b, c]]).sum())
}

pub(crate) fn lower_central_series_real(real: &RealLieData) -> LowerCentralSeries {
    let m = real.dim();
    let scale = real.bracket_norm();
    let mut basis: Vec<RVec> = (0..m).map(|i| crate::linalg::unit::<f64>(m, i)).collect();
    let mut dims = vec![m];
    loop {
        let cols: Vec<RVec> = (0..m)
            .flat_map(|a| basis.iter().map(move |v| (a, v)))
            .map(|(a, v)| bracket_with(real, a, v))
            .collect();
        basis = if cols.is_empty() {
            Vec::new()
        } else {
            column_space(&RMat::from_columns(&cols), scale)
        };
        let dim = basis.len();
        let prev = *dims.last().unwrap();
        dims.push(dim);
        if dim == 0 || dim == prev {
            break;
        }
    }
    let nilpotent = *dims.last().unwrap() == 0;
    let step = nilpotent.then(|| dims.len() - 1);
    if !nilpotent {
        dims.pop();
    }
    LowerCentralSeries { dims, nilpotent, step }
}

pub fn lower_central_series(data: &HermitianLieData) -> Result<LowerCentralSeries> {
    ensure_valid(data)?;
    Ok(lower_central_series_real(&realify_unchecked(data)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentJ {
    pub nilpotent: bool,
    /// Dimensions of `a_1 ⊆ a_2 ⊆ …` (the trivial `a_0 = 0` omitted).
    pub dims: Vec<usize>,
}

/// `a_l = {X : [X, g] ⊆ a_{l−1} and [JX, g] ⊆ a_{l−1}}`, `a_0 = 0`.
pub(crate) fn is_nilpotent_j_real(real: &RealLieData) -> NilpotentJ {
    let m = real.dim();
    let scale = real.bracket_norm();
    let mut current: Vec<RVec> = Vec::new();
    let mut dims = Vec::new();
    loop {
        // complement of the current subspace
        let comp: Vec<RVec> = if current.is_empty() {
            (0..m).map(|i| crate::linalg::unit::<f64>(m, i)).collect()
        } else {
            kernel(
                &RMat::from_rows(&current.iter().map(|v| v.transpose()).collect::<Vec<_>>()),
                0.0,
            )
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for q in &comp {
            for b in 0..m {
                // coefficient of X_a in <q, [X, ε_b]>
                let direct: Vec<f64> = (0..m)
                    .map(|a| (0..m).map(|c| q[c] * real.bracket[[a, b, c]]).sum())
                    .collect();
                // coefficient of X_a' in <q, [JX, ε_b]>
                let via_j: Vec<f64> = (0..m)
                    .map(|ap| (0..m).map(|a| real.j[(a, ap)] * direct[a]).sum())
                    .collect();
                rows.push(direct);
                rows.push(via_j);
            }
        }
        let next = if rows.is_empty() {
            (0..m).map(|i| crate::linalg::unit::<f64>(m, i)).collect()
        } else {
            let mat = RMat::from_row_iterator(rows.len(), m, rows.into_iter().flatten());
            kernel(&mat, scale)
        };
        let dim = next.len();
        let prev = current.len();
        dims.push(dim);
        current = next;
        if dim == m {
            return NilpotentJ { nilpotent: true, dims };
        }
        if dim == prev {
            return NilpotentJ { nilpotent: false, dims };
        }
    }
}

pub fn is_nilpotent_j(data: &HermitianLieData) -> Result<NilpotentJ> {
    ensure_valid(data)?;
    Ok(is_nilpotent_j_real(&realify_unchecked(data)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalamonCoframe {
    pub success: bool,
    /// Frame change `e' = U e` exhibiting the triangular pattern (identity
    /// padding past the point where the filtration stalled).
    pub u: CMat,
    /// `dim W_1, dim W_2, …`
    pub filtration: Vec<usize>,
}

/// `U` whose new coframe is `φ'_a = Σ_b w_a[b] φ_b`.
pub(crate) fn frame_from_coframe(rows: &[CVec]) -> CMat {
    let n = rows.len();
    CMat::from_fn(n, n, |a, b| rows[a][b].conj())
}

/// Orthonormal coefficient vectors `x` (with `α = Σ x_b φ_b`) of the
/// `(1,0)`-forms whose differential lies in the ideal generated by the first
/// `w` forms of the coframe `basis`.
pub(crate) fn forms_with_d_in_ideal(data: &HermitianLieData, basis: &[CVec], w: usize) -> Vec<CVec> {
    let n = data.n();
    let u = frame_from_coframe(basis);
    let rotated = change_frame_unchecked(data, &u);
    let c = rotated.c_array();
    let d = rotated.d_array();
    // unknown y with α = Σ_c y_c φ'_c
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for i in w..n {
        for k in (i + 1)..n {
            rows.push((0..n).map(|cc| c[[cc, i, k]]).collect());
        }
        for k in 0..n {
            rows.push((0..n).map(|cc| d[[i, cc, k]].conj()).collect());
        }
    }
    let ys: Vec<CVec> = if rows.is_empty() {
        (0..n).map(|i| crate::linalg::unit::<Complex64>(n, i)).collect()
    } else {
        let mat = CMat::from_row_iterator(rows.len(), n, rows.into_iter().flatten());
        kernel(&mat, data.scale())
    };
    ys.iter()
        .map(|y| {
            let mut x = CVec::zeros(n);
            for (cc, b) in basis.iter().enumerate() {
                x.axpy(y[cc], b, Complex64::new(1.0, 0.0));
            }
            x
        })
        .collect()
}

/// Ascending filtration `W_l = {α : dα ∈ ideal(W_{l−1})}` and the adapted
/// unitary frame.
pub fn salamon_coframe(data: &HermitianLieData) -> Result<SalamonCoframe> {
    ensure_valid(data)?;
    let n = data.n();
    let mut ordered: Vec<CVec> = Vec::new();
    let mut filtration = Vec::new();
    loop {
        let full = crate::linalg::complete_basis(&ordered, n);
        let space = forms_with_d_in_ideal(data, &full, ordered.len());
        let dim = space.len();
        filtration.push(dim);
        if dim <= ordered.len() {
            let full = crate::linalg::complete_basis(&ordered, n);
            return Ok(SalamonCoframe {
                success: false,
                u: frame_from_coframe(&full),
                filtration,
            });
        }
        let fresh = extend_adapted(&space, &ordered, n);
        ordered.extend(fresh);
        if dim == n {
            return Ok(SalamonCoframe {
                success: true,
                u: frame_from_coframe(&ordered),
                filtration,
            });
        }
    }
}

/// Largest entry violating `C^j_{ik} = 0 unless j > i or j > k` and
/// `D^i_{jk} = 0 unless j > i`.
pub fn salamon_violation(data: &HermitianLieData) -> f64 {
    let n = data.n();
    let c = data.c_array();
    let d = data.d_array();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                if !(j > i || j > k) {
                    worst = worst.max(c[[j, i, k]].norm());
                }
                // d[[i, j, k]] = D^i_{jk}
                if j <= i {
                    worst = worst.max(d[[i, j, k]].norm());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::change_frame;
    use crate::linalg::c;

    fn iwasawa() -> HermitianLieData {
        let mut h = HermitianLieData::zeros(3);
        h.set_c(3, 1, 2, c(1.0, 0.0));
        h
    }

    fn kodaira(lambda: f64) -> HermitianLieData {
        let mut h = HermitianLieData::zeros(2);
        h.set_d(1, 2, 1, c(-lambda, 0.0));
        h
    }

    fn solvable_line() -> HermitianLieData {
        let mut h = HermitianLieData::zeros(1);
        h.set_d(1, 1, 1, c(1.0, 0.0));
        h
    }

    #[test]
    fn series_examples() {
        let ab = lower_central_series(&HermitianLieData::zeros(3)).unwrap();
        assert_eq!(ab.dims, vec![6, 0]);
        assert_eq!(ab.step, Some(1));
        let k = lower_central_series(&kodaira(1.3)).unwrap();
        assert_eq!(k.dims, vec![4, 1, 0]);
        assert_eq!(k.step, Some(2));
        let s = lower_central_series(&solvable_line()).unwrap();
        assert!(!s.nilpotent);
        assert_eq!(s.dims, vec![2, 1]);
        assert_eq!(s.step, None);
    }

    #[test]
    fn nilpotent_j_examples() {
        let ab = is_nilpotent_j(&HermitianLieData::zeros(2)).unwrap();
        assert!(ab.nilpotent);
        assert_eq!(ab.dims, vec![4]);
        let k = is_nilpotent_j(&kodaira(2.0)).unwrap();
        assert!(k.nilpotent);
        assert_eq!(k.dims, vec![2, 4]);
        let s = is_nilpotent_j(&solvable_line()).unwrap();
        assert!(!s.nilpotent);
        assert_eq!(s.dims, vec![0]);
    }

    #[test]
    fn salamon_examples() {
        let ab = salamon_coframe(&HermitianLieData::zeros(3)).unwrap();
        assert!(ab.success);
        assert_eq!(ab.filtration, vec![3]);
        assert_eq!(ab.u, CMat::identity(3, 3));

        let iw = salamon_coframe(&iwasawa()).unwrap();
        assert!(iw.success);
        assert_eq!(iw.filtration, vec![2, 3]);
        let rotated = change_frame(&iwasawa(), &iw.u).unwrap();
        assert!(salamon_violation(&rotated) < 1e-12);

        let s = salamon_coframe(&solvable_line()).unwrap();
        assert!(!s.success);
        assert_eq!(s.filtration, vec![0]);
    }

    #[test]
    fn salamon_reorders_a_scrambled_frame() {
        // Iwasawa with e_1 and e_3 swapped: dφ_1 = −φ_3∧φ_2
        let mut p = CMat::zeros(3, 3);
        p[(0, 2)] = c(1.0, 0.0);
        p[(1, 1)] = c(1.0, 0.0);
        p[(2, 0)] = c(1.0, 0.0);
        let scrambled = change_frame(&iwasawa(), &p).unwrap();
        assert!(salamon_violation(&scrambled) > 0.5);
        let s = salamon_coframe(&scrambled).unwrap();
        assert!(s.success);
        let fixed = change_frame(&scrambled, &s.u).unwrap();
        assert!(salamon_violation(&fixed) < 1e-12);
    }
}
