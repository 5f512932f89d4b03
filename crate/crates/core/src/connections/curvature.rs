use nalgebra::DMatrix;
use ndarray::Array4;
use num_complex::Complex64;

use super::ConnectionCoefficients;
use crate::algebra::{f_in_eps, RealLieData};
use crate::exec::{self, Execution};
use crate::linalg::RMat;
use crate::tensor::contract4;
use crate::{Error, Result};

/// `R(a, b, c, d) = <R(ε_a, ε_b) ε_c, ε_d>` with
/// `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    pub n: usize,
    pub r: Array4<f64>,
}

impl CurvatureTensor {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.r[[a, b, c, d]]
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &CurvatureTensor) -> f64 {
        self.r
            .iter()
            .zip(other.r.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// `(max |R(a,b,c,d) + R(b,a,c,d)|, max |R(a,b,c,d) + R(a,b,d,c)|)`.
    pub fn antisymmetry_residuals(&self) -> (f64, f64) {
        let r = &self.r;
        let mut first: f64 = 0.0;
        let mut last: f64 = 0.0;
        for ((a, b, c, d), v) in r.indexed_iter() {
            first = first.max((v + r[[b, a, c, d]]).abs());
            last = last.max((v + r[[a, b, d, c]]).abs());
        }
        (first, last)
    }

    /// `<R(f_x, f_y) f_z, f_w>` on `f = (e, ē)`, extended complex-bilinearly.
    pub fn on_complex_frame(&self) -> Array4<Complex64> {
        let p = f_in_eps(self.n);
        let mut t = self.r.mapv(|x| Complex64::new(x, 0.0));
        for axis in 0..4 {
            t = contract4(&t, &p, axis);
        }
        t
    }
}

pub fn curvature(conn: &ConnectionCoefficients, real: &RealLieData) -> Result<CurvatureTensor> {
    curvature_with(conn, real, Execution::default())
}

/// Curvature with an explicit execution mode; both modes give identical
/// bits since every entry is summed in ascending index order.
pub fn curvature_with(conn: &ConnectionCoefficients, real: &RealLieData, exec: Execution) -> Result<CurvatureTensor> {
    if conn.n != real.n {
        return Err(Error::DimensionMismatch {
            expected: real.n,
            found: conn.n,
        });
    }
    let m = real.dim();
    let g = conn.real.as_standard_layout();
    let g = g.as_slice().expect("standard layout");
    let br = real.bracket.as_standard_layout();
    let br = br.as_slice().expect("standard layout");
    let at = |x: usize, y: usize, z: usize| (x * m + y) * m + z;
    let mut flat = vec![0.0f64; m * m * m * m];
    let block = m * m * m;
    exec::fill_chunks(exec, &mut flat, block, |a, out| {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut acc = 0.0;
                    for e in 0..m {
                        acc += g[at(b, c, e)] * g[at(a, e, d)] - g[at(a, c, e)] * g[at(b, e, d)];
                    }
                    for e in 0..m {
                        acc -= br[at(a, b, e)] * g[at(e, c, d)];
                    }
                    out[(b * m + c) * m + d] = acc;
                }
            }
        }
    });
    let r = Array4::from_shape_vec((m, m, m, m), flat).expect("sized above");
    Ok(CurvatureTensor { n: real.n, r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KLResidual {
    /// `max |R(x,ȳ,z,w̄) − R(z,ȳ,x,w̄)|` over `x, y, z, w` of type `(1,0)`
    pub sym: f64,
    /// `max |R(a,b,Jc,Jd) − R(a,b,c,d)|`
    pub j_invariance: f64,
}

impl KLResidual {
    pub fn max(&self) -> f64 {
        self.sym.max(self.j_invariance)
    }

    pub fn is_kahler_like(&self, tol: f64) -> bool {
        self.sym < tol && self.j_invariance < tol
    }
}

/// `J` has column `a` equal to the coordinates of `Jε_a`.
///
/// The symmetry in the first and third slot is tested on type-projected
/// arguments: a tensor skew in both pairs and symmetric under swapping the
/// first and third slot over all real vectors is zero.
pub fn kl_residual(r: &CurvatureTensor, j: &RMat) -> Result<KLResidual> {
    let m = r.r.dim().0;
    if j.nrows() != m || j.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: j.nrows(),
        });
    }
    let t = &r.r;
    let flat = t.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    // nonzero entries of each column of J
    let cols: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|c| (0..m).filter(|&x| j[(x, c)] != 0.0).map(|x| (x, j[(x, c)])).collect())
        .collect();
    let mut jinv: f64 = 0.0;
    for ab in 0..m * m {
        let block = &flat[ab * m * m..(ab + 1) * m * m];
        for c in 0..m {
            for d in 0..m {
                let mut acc = 0.0;
                for &(cp, jc) in &cols[c] {
                    for &(dp, jd) in &cols[d] {
                        acc += jc * jd * block[cp * m + dp];
                    }
                }
                jinv = jinv.max((acc - block[c * m + d]).abs());
            }
        }
    }

    // (1,0) projector (I − iJ)/2 and its conjugate, applied slot by slot
    let half = Complex64::new(0.5, 0.0);
    let p10 = DMatrix::<Complex64>::from_fn(m, m, |a, b| {
        let id = if a == b { 1.0 } else { 0.0 };
        Complex64::new(id, -j[(a, b)]) * half
    });
    let p01 = p10.map(|z| z.conj());
    let mut s = t.mapv(|x| Complex64::new(x, 0.0));
    for (axis, p) in [(0, &p10), (1, &p01), (2, &p10), (3, &p01)] {
        s = contract4(&s, &p.transpose(), axis);
    }
    let mut sym: f64 = 0.0;
    for ((a, b, c, d), v) in s.indexed_iter() {
        sym = sym.max((v - s[[c, b, a, d]]).norm());
    }
    Ok(KLResidual {
        sym,
        j_invariance: jinv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{realify, standard_j, HermitianLieData};
    use crate::catalog::{build_family, random_two_step, Cor12Params, Cor12Variant, Family};
    use crate::connections::{connection, ConnectionKind};

    fn curv(data: &HermitianLieData, kind: ConnectionKind) -> CurvatureTensor {
        let real = realify(data).unwrap();
        curvature(&connection(data, kind).unwrap(), &real).unwrap()
    }

    #[test]
    fn abelian_curvatures_vanish() {
        let data = HermitianLieData::zeros(3);
        for kind in ConnectionKind::ALL {
            let r = curv(&data, kind);
            assert_eq!(r.norm(), 0.0);
            let kl = kl_residual(&r, &standard_j(3)).unwrap();
            assert_eq!((kl.sym, kl.j_invariance), (0.0, 0.0));
        }
    }

    #[test]
    fn iwasawa_is_chern_flat() {
        let data = build_family(&Family::Iwasawa).unwrap();
        assert_eq!(curv(&data, ConnectionKind::Chern).norm(), 0.0);
    }

    #[test]
    fn kodaira_sectional_curvature() {
        for l in [0.5, 1.0, 2.0] {
            let data = build_family(&Family::Kodaira { lambda: l }).unwrap();
            let r = curv(&data, ConnectionKind::Riemannian);
            // ε_1 and ε_3 span the plane of the bracket
            assert!((r.get(0, 2, 2, 0).abs() - 1.5 * l * l).abs() < 1e-12);
            let kl = kl_residual(&r, &standard_j(2)).unwrap();
            assert!(kl.sym > 1e-2);
        }
    }

    #[test]
    fn strominger_flat_symmetry_on_normal_form() {
        let p = Cor12Params {
            lambda: Some(1.0),
            a: Some(1.0),
            ..Default::default()
        };
        let data = build_family(&Family::Cor12 {
            variant: Cor12Variant::N3,
            params: p,
        })
        .unwrap();
        let r = curv(&data, ConnectionKind::Strominger);
        let kl = kl_residual(&r, &standard_j(3)).unwrap();
        assert!(kl.max() < 1e-10);
    }

    #[test]
    fn antisymmetries_hold() {
        for seed in 0..4 {
            let data = random_two_step(4, 2, seed).unwrap();
            for kind in ConnectionKind::ALL {
                let (a, b) = curv(&data, kind).antisymmetry_residuals();
                assert!(a < 1e-12 && b < 1e-12, "{kind}: {a} {b}");
            }
        }
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let data = random_two_step(5, 3, 9).unwrap();
        let real = realify(&data).unwrap();
        let conn = connection(&data, ConnectionKind::Strominger).unwrap();
        let a = curvature_with(&conn, &real, Execution::Sequential).unwrap();
        let b = curvature_with(&conn, &real, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kahler_structures_have_one_curvature() {
        // solvable, with vanishing torsion
        let mut data = HermitianLieData::zeros(1);
        data.set_d(1, 1, 1, Complex64::new(1.0, 0.0));
        let curves: Vec<_> = ConnectionKind::ALL.iter().map(|k| curv(&data, *k)).collect();
        assert!(curves[0].norm() > 0.1);
        for c in &curves[1..] {
            assert!(c.distance(&curves[0]) < 1e-10);
        }
    }

    #[test]
    fn dimension_checks() {
        let conn = connection(&HermitianLieData::zeros(2), ConnectionKind::Chern).unwrap();
        let real = realify(&HermitianLieData::zeros(3)).unwrap();
        assert!(matches!(curvature(&conn, &real), Err(Error::DimensionMismatch { .. })));
        let r = curvature(&conn, &realify(&HermitianLieData::zeros(2)).unwrap()).unwrap();
        assert!(kl_residual(&r, &standard_j(3)).is_err());
    }
}
