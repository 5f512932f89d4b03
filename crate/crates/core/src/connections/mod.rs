//! Chern torsion, the four canonical metric connections and their curvature.
//!
//! Complex coefficients are `A^j_{ik} = <∇_{e_k} e_i, ē_j>`. A Hermitian
//! connection preserves types, and metric compatibility then forces
//! `<∇_{ē_k} e_i, ē_j> = −conj(A^i_{jk})`. Real coefficients live on the
//! orthonormal basis: `Γ(a, b, c) = <∇_{ε_a} ε_b, ε_c>`.

mod curvature;
mod torsion;

pub use curvature::{curvature, curvature_with, kl_residual, CurvatureTensor, KLResidual};
pub use torsion::{
    d8_expansion, rkl_necessary_residuals, tcbar_tensor, theta1, theta2, theta2_curvature, theta2_residual,
    torsion_covariant_derivative, RklNecessary, TorsionDerivatives,
};
pub(crate) use torsion::{rkl_necessary_unchecked, torsion_derivative_unchecked};

use std::fmt;
use std::str::FromStr;

use ndarray::Array3;
use num_complex::Complex64;

use crate::algebra::{ensure_valid, f_to_real3, realify_unchecked, HermitianLieData, RealLieData};
use crate::tensor::max_abs3;
use crate::{Error, Result};

/// `T^j_{ik}` with `2T^j_{ik} = −C^j_{ik} − D^j_{ik} + D^j_{ki}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernTorsion {
    t: Array3<Complex64>,
}

impl ChernTorsion {
    pub fn n(&self) -> usize {
        self.t.dim().0
    }

    /// `T^j_{ik}`, 1-based.
    pub fn get(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.t[[j - 1, i - 1, k - 1]]
    }

    /// Indexed `[[j, i, k]]`, 0-based.
    pub fn array(&self) -> &Array3<Complex64> {
        &self.t
    }

    pub fn norm(&self) -> f64 {
        max_abs3(&self.t)
    }
}

pub(crate) fn chern_torsion_unchecked(data: &HermitianLieData) -> ChernTorsion {
    let n = data.n();
    let c = data.c_array();
    let d = data.d_array();
    let t = Array3::from_shape_fn((n, n, n), |(j, i, k)| {
        // written so that T^j_{ik} = −T^j_{ki} holds bit for bit
        let a = -c[[j, i, k]] - d[[j, i, k]] + d[[j, k, i]];
        let b = -c[[j, k, i]] - d[[j, k, i]] + d[[j, i, k]];
        (a - b) * 0.25
    });
    ChernTorsion { t }
}

pub fn chern_torsion(data: &HermitianLieData) -> Result<ChernTorsion> {
    ensure_valid(data)?;
    Ok(chern_torsion_unchecked(data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConnectionKind {
    Chern,
    Strominger,
    Gauduchon0,
    Riemannian,
}

impl ConnectionKind {
    pub const ALL: [ConnectionKind; 4] = [
        ConnectionKind::Chern,
        ConnectionKind::Strominger,
        ConnectionKind::Gauduchon0,
        ConnectionKind::Riemannian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConnectionKind::Chern => "chern",
            ConnectionKind::Strominger => "strominger",
            ConnectionKind::Gauduchon0 => "gauduchon0",
            ConnectionKind::Riemannian => "riemannian",
        }
    }

    pub fn is_hermitian(self) -> bool {
        self != ConnectionKind::Riemannian
    }
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConnectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chern" => Ok(ConnectionKind::Chern),
            "strominger" | "bismut" => Ok(ConnectionKind::Strominger),
            "gauduchon0" | "lichnerowicz" => Ok(ConnectionKind::Gauduchon0),
            "riemannian" | "levi-civita" => Ok(ConnectionKind::Riemannian),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub kind: ConnectionKind,
    pub n: usize,
    /// `A^j_{ik}` indexed `[[j, i, k]]`; `None` for the Riemannian connection.
    pub complex: Option<Array3<Complex64>>,
    /// `Γ(a, b, c) = <∇_{ε_a} ε_b, ε_c>`.
    pub real: Array3<f64>,
}

impl ConnectionCoefficients {
    /// `A^j_{ik}`, 1-based.
    pub fn complex_coefficient(&self, j: usize, i: usize, k: usize) -> Option<Complex64> {
        self.complex.as_ref().map(|a| a[[j - 1, i - 1, k - 1]])
    }

    /// Largest `|Γ(a,b,c) + Γ(a,c,b)|`.
    pub fn metric_residual(&self) -> f64 {
        let m = 2 * self.n;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    worst = worst.max((self.real[[a, b, c]] + self.real[[a, c, b]]).abs());
                }
            }
        }
        worst
    }

    /// Real torsion `<T(ε_a, ε_b), ε_c>` with `T(X,Y) = ∇_X Y − ∇_Y X − [X,Y]`.
    pub fn torsion(&self, real: &RealLieData) -> Array3<f64> {
        let g = &self.real;
        Array3::from_shape_fn(g.dim(), |(a, b, c)| {
            g[[a, b, c]] - g[[b, a, c]] - real.bracket[[a, b, c]]
        })
    }
}

/// `G(x, y, z)`: the `f_z` component of `∇_{f_x} f_y` for a Hermitian
/// connection with coefficients `A`.
pub(crate) fn hermitian_f_tensor(a: &Array3<Complex64>) -> Array3<Complex64> {
    let n = a.dim().0;
    let mut g = Array3::<Complex64>::zeros((2 * n, 2 * n, 2 * n));
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                let v = a[[j, i, k]];
                // ∇_{e_k} e_i and its conjugate
                g[[k, i, j]] = v;
                g[[n + k, n + i, n + j]] = v.conj();
                // ∇_{ē_k} e_i has e_j component −conj(A^i_{jk}), and the conjugate
                g[[n + k, i, j]] = -a[[i, j, k]].conj();
                g[[k, n + i, n + j]] = -a[[i, j, k]];
            }
        }
    }
    g
}

fn complex_coefficients(data: &HermitianLieData, kind: ConnectionKind) -> Option<Array3<Complex64>> {
    let n = data.n();
    let c = data.c_array();
    let d = data.d_array();
    match kind {
        ConnectionKind::Chern => Some(d.clone()),
        ConnectionKind::Strominger => Some(Array3::from_shape_fn((n, n, n), |(j, i, k)| {
            -c[[j, i, k]] + d[[j, k, i]]
        })),
        ConnectionKind::Gauduchon0 => {
            let t = chern_torsion_unchecked(data);
            Some(Array3::from_shape_fn((n, n, n), |(j, i, k)| {
                d[[j, i, k]] + t.t[[j, i, k]]
            }))
        }
        ConnectionKind::Riemannian => None,
    }
}

/// Koszul: `2<∇_X Y, Z> = <[X,Y],Z> − <[Y,Z],X> + <[Z,X],Y>`.
pub(crate) fn levi_civita(real: &RealLieData) -> Array3<f64> {
    let b = &real.bracket;
    Array3::from_shape_fn(b.dim(), |(x, y, z)| 0.5 * (b[[x, y, z]] - b[[y, z, x]] + b[[z, x, y]]))
}

pub(crate) fn connection_unchecked(data: &HermitianLieData, kind: ConnectionKind) -> ConnectionCoefficients {
    let n = data.n();
    let complex = complex_coefficients(data, kind);
    let real = match &complex {
        Some(a) => f_to_real3(&hermitian_f_tensor(a), n).0,
        None => levi_civita(&realify_unchecked(data)),
    };
    ConnectionCoefficients { kind, n, complex, real }
}

pub fn connection(data: &HermitianLieData, kind: ConnectionKind) -> Result<ConnectionCoefficients> {
    ensure_valid(data)?;
    let conn = connection_unchecked(data, kind);
    if kind == ConnectionKind::Gauduchon0 {
        let ch = complex_coefficients(data, ConnectionKind::Chern).expect("hermitian");
        let st = complex_coefficients(data, ConnectionKind::Strominger).expect("hermitian");
        let mean = (&ch + &st) * Complex64::new(0.5, 0.0);
        let gap = max_abs3(&(conn.complex.as_ref().expect("hermitian") - &mean));
        if gap > 1e-12 * (1.0 + data.scale()) {
            return Err(Error::TheoremViolation(format!(
                "0-Gauduchon coefficients differ from the Chern/Strominger mean by {gap:e}"
            )));
        }
    }
    Ok(conn)
}

/// Connection by name; unknown names give [`Error::UnknownKind`].
pub fn connection_named(data: &HermitianLieData, kind: &str) -> Result<ConnectionCoefficients> {
    connection(data, kind.parse()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{realify, standard_j};
    use crate::catalog::{build_family, random_two_step, Family};
    use crate::linalg::c;

    fn kodaira(l: f64) -> HermitianLieData {
        build_family(&Family::Kodaira { lambda: l }).unwrap()
    }

    fn iwasawa() -> HermitianLieData {
        build_family(&Family::Iwasawa).unwrap()
    }

    fn random_general(seed: u64) -> HermitianLieData {
        random_two_step(4, 2, seed).unwrap()
    }

    #[test]
    fn torsion_examples() {
        let t = chern_torsion(&kodaira(2.0)).unwrap();
        assert_eq!(t.get(1, 1, 2), c(-1.0, 0.0));
        assert_eq!(t.get(1, 2, 1), c(1.0, 0.0));
        assert_eq!(t.norm(), 1.0);
        let t = chern_torsion(&iwasawa()).unwrap();
        assert_eq!(t.get(3, 1, 2), c(-0.5, 0.0));
        assert_eq!(chern_torsion(&HermitianLieData::zeros(3)).unwrap().norm(), 0.0);
    }

    #[test]
    fn torsion_is_antisymmetric() {
        for seed in 0..5 {
            let t = chern_torsion(&random_general(seed)).unwrap();
            let a = t.array();
            for ((j, i, k), v) in a.indexed_iter() {
                assert_eq!(*v, -a[[j, k, i]]);
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let s = connection(&kodaira(1.5), ConnectionKind::Strominger).unwrap();
        let a = s.complex.as_ref().unwrap();
        assert_eq!(a[[0, 0, 1]], c(-1.5, 0.0));
        assert_eq!(max_abs3(a), 1.5);
        let ch = connection(&iwasawa(), ConnectionKind::Chern).unwrap();
        assert_eq!(max_abs3(ch.complex.as_ref().unwrap()), 0.0);
        for kind in ConnectionKind::ALL {
            let z = connection(&HermitianLieData::zeros(2), kind).unwrap();
            assert!(z.real.iter().all(|x| *x == 0.0));
        }
        assert!(matches!("weyl".parse::<ConnectionKind>(), Err(Error::UnknownKind(_))));
    }

    #[test]
    fn real_coefficients_are_metric() {
        for seed in 0..5 {
            let data = random_general(seed);
            for kind in ConnectionKind::ALL {
                assert!(connection(&data, kind).unwrap().metric_residual() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn gauduchon0_is_hermitian_part_of_levi_civita() {
        for seed in 0..5 {
            let data = random_general(seed);
            let lc = connection(&data, ConnectionKind::Riemannian).unwrap().real;
            let g0 = connection(&data, ConnectionKind::Gauduchon0).unwrap().real;
            let j = standard_j(data.n());
            let m = 2 * data.n();
            for a in 0..m {
                for b in 0..m {
                    for cc in 0..m {
                        // <J ∇_a (J ε_b), ε_c>
                        let mut jnj = 0.0;
                        for bp in 0..m {
                            for e in 0..m {
                                jnj += j[(bp, b)] * lc[[a, bp, e]] * j[(cc, e)];
                            }
                        }
                        let expect = 0.5 * (lc[[a, b, cc]] - jnj);
                        assert!((g0[[a, b, cc]] - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn strominger_has_totally_skew_torsion() {
        for seed in 0..5 {
            let data = random_general(seed);
            let real = realify(&data).unwrap();
            let lc = connection(&data, ConnectionKind::Riemannian).unwrap();
            let s = connection(&data, ConnectionKind::Strominger).unwrap();
            let tor = s.torsion(&real);
            for ((a, b, cc), v) in tor.indexed_iter() {
                assert!((v + tor[[a, cc, b]]).abs() < 1e-12);
                assert!((v + tor[[b, a, cc]]).abs() < 1e-12);
                assert!((s.real[[a, b, cc]] - lc.real[[a, b, cc]] - 0.5 * v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chern_torsion_has_no_mixed_part() {
        for seed in 0..5 {
            let data = random_general(seed);
            let n = data.n();
            let real = realify(&data).unwrap();
            let ch = connection(&data, ConnectionKind::Chern).unwrap();
            let tor = crate::algebra::real_to_f3(&ch.torsion(&real), n);
            let t = chern_torsion(&data).unwrap();
            for i in 0..n {
                for k in 0..n {
                    for z in 0..2 * n {
                        assert!(tor[[i, n + k, z]].norm() < 1e-12);
                    }
                    for j in 0..n {
                        assert!((tor[[i, k, j]] - t.array()[[j, i, k]] * 2.0).norm() < 1e-12);
                        assert!(tor[[i, k, n + j]].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn levi_civita_in_complex_frame() {
        for seed in 0..5 {
            let data = random_general(seed);
            let n = data.n();
            let lc = connection(&data, ConnectionKind::Riemannian).unwrap();
            // G(x, y, z): f_z component of ∇_{f_x} f_y
            let g = crate::algebra::real_to_f3(&lc.real, n);
            let t = chern_torsion(&data).unwrap();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        // <∇ e_i, e_j> is the ē_j component
                        assert!((g[[n + k, i, n + j]] - t.array()[[k, i, j]]).norm() < 1e-12);
                        assert!(g[[k, i, n + j]].norm() < 1e-12);
                    }
                }
            }
        }
    }
}
