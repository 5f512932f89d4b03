use ndarray::{Array3, Array4};
use num_complex::Complex64;

use super::{chern_torsion_unchecked, complex_coefficients, ConnectionKind};
use crate::algebra::{ensure_valid, HermitianLieData};
use crate::forms::{Differential, InvariantForm, MatrixForm};
use crate::tensor::max_abs4;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Covariant derivatives of the Chern torsion, indexed `[[j, i, k, l]]`:
/// `plain = T^j_{ik,ℓ}`, `bar = T^j_{ik,ℓ̄}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionDerivatives {
    pub kind: ConnectionKind,
    pub plain: Array4<Complex64>,
    pub bar: Array4<Complex64>,
}

impl TorsionDerivatives {
    /// `T^j_{ik,ℓ}`, 1-based.
    pub fn get(&self, j: usize, i: usize, k: usize, l: usize) -> Complex64 {
        self.plain[[j - 1, i - 1, k - 1, l - 1]]
    }

    /// `T^j_{ik,ℓ̄}`, 1-based.
    pub fn get_bar(&self, j: usize, i: usize, k: usize, l: usize) -> Complex64 {
        self.bar[[j - 1, i - 1, k - 1, l - 1]]
    }

    pub fn plain_norm(&self) -> f64 {
        max_abs4(&self.plain)
    }

    pub fn bar_norm(&self) -> f64 {
        max_abs4(&self.bar)
    }
}

fn derivatives(t: &Array3<Complex64>, a: &Array3<Complex64>) -> (Array4<Complex64>, Array4<Complex64>) {
    let n = t.dim().0;
    let plain = Array4::from_shape_fn((n, n, n, n), |(j, i, k, l)| {
        (0..n).fold(ZERO, |acc, p| {
            acc - t[[j, p, k]] * a[[p, i, l]] - t[[j, i, p]] * a[[p, k, l]] + t[[p, i, k]] * a[[j, p, l]]
        })
    });
    let bar = Array4::from_shape_fn((n, n, n, n), |(j, i, k, l)| {
        (0..n).fold(ZERO, |acc, p| {
            acc + t[[j, p, k]] * a[[i, p, l]].conj() + t[[j, i, p]] * a[[k, p, l]].conj()
                - t[[p, i, k]] * a[[p, j, l]].conj()
        })
    });
    (plain, bar)
}

pub(crate) fn torsion_derivative_unchecked(
    data: &HermitianLieData,
    kind: ConnectionKind,
) -> Result<TorsionDerivatives> {
    let a = complex_coefficients(data, kind).ok_or_else(|| Error::UnknownKind(kind.to_string()))?;
    let t = chern_torsion_unchecked(data);
    let (plain, bar) = derivatives(t.array(), &a);
    Ok(TorsionDerivatives { kind, plain, bar })
}

/// Derivatives of the Chern torsion along a Hermitian connection; the
/// Riemannian kind is rejected.
pub fn torsion_covariant_derivative(data: &HermitianLieData, kind: ConnectionKind) -> Result<TorsionDerivatives> {
    ensure_valid(data)?;
    torsion_derivative_unchecked(data, kind)
}

/// `2T^j_{ik;ℓ̄}` for the Chern connection, written purely in `D` after
/// eliminating `C` with the mixed Jacobi identity.
pub fn d8_expansion(data: &HermitianLieData) -> Array4<Complex64> {
    let n = data.n();
    let d = data.d_array();
    Array4::from_shape_fn((n, n, n, n), |(j, i, k, l)| {
        (0..n).fold(ZERO, |acc, r| {
            acc - (d[[j, r, k]] - d[[j, k, r]]) * d[[i, r, l]].conj()
                - (d[[j, i, r]] - d[[j, r, i]]) * d[[k, r, l]].conj()
                + (d[[r, i, k]] - d[[r, k, i]]) * d[[r, j, l]].conj()
                + (d[[l, r, i]] * d[[k, j, r]].conj() - d[[l, r, k]] * d[[i, j, r]].conj())
        })
    })
}

/// `T^j_{ik,ℓ̄} − T^ℓ_{ik,j̄}` for `∇⁰`, expanded with `Γ − ᵗΓ = −C`.
pub fn tcbar_tensor(data: &HermitianLieData) -> Array4<Complex64> {
    let n = data.n();
    let t = chern_torsion_unchecked(data);
    let t = t.array();
    let g = complex_coefficients(data, ConnectionKind::Gauduchon0).expect("hermitian");
    let c = data.c_array();
    Array4::from_shape_fn((n, n, n, n), |(j, i, k, l)| {
        (0..n).fold(ZERO, |acc, r| {
            acc + t[[j, r, k]] * g[[i, r, l]].conj()
                + t[[j, i, r]] * g[[k, r, l]].conj()
                + t[[r, i, k]] * c[[r, j, l]].conj()
                - t[[l, r, k]] * g[[i, r, j]].conj()
                - t[[l, i, r]] * g[[k, r, j]].conj()
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RklNecessary {
    /// `max |T^j_{ik,ℓ} − Σ_r T^r_{ik} T^j_{rℓ}|` for `∇⁰`
    pub lemma_first: f64,
    /// `max |T^j_{ik,ℓ̄} − T^ℓ_{ik,j̄}|` for `∇⁰`
    pub lemma_second: f64,
    /// `max` of [`tcbar_tensor`]
    pub tcbar: f64,
}

impl RklNecessary {
    pub fn max(&self) -> f64 {
        self.lemma_first.max(self.lemma_second).max(self.tcbar)
    }
}

pub(crate) fn rkl_necessary_unchecked(data: &HermitianLieData) -> RklNecessary {
    let n = data.n();
    let t = chern_torsion_unchecked(data);
    let t = t.array();
    let der = torsion_derivative_unchecked(data, ConnectionKind::Gauduchon0).expect("hermitian");
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for ((j, i, k, l), v) in der.plain.indexed_iter() {
        let quad = (0..n).fold(ZERO, |acc, r| acc + t[[r, i, k]] * t[[j, r, l]]);
        first = first.max((v - quad).norm());
        second = second.max((der.bar[[j, i, k, l]] - der.bar[[l, i, k, j]]).norm());
    }
    RklNecessary {
        lemma_first: first,
        lemma_second: second,
        tcbar: max_abs4(&tcbar_tensor(data)),
    }
}

pub fn rkl_necessary_residuals(data: &HermitianLieData) -> Result<RklNecessary> {
    ensure_valid(data)?;
    Ok(rkl_necessary_unchecked(data))
}

fn one_form(n: usize, hol: impl Fn(usize) -> Complex64, anti: impl Fn(usize) -> Complex64) -> InvariantForm {
    let mut f = InvariantForm::zero(n);
    for k in 1..=n {
        f = f + InvariantForm::phi(n, k) * hol(k - 1) + InvariantForm::phi_bar(n, k) * anti(k - 1);
    }
    f
}

/// `θ₁ = θ^c + γ` with `θ^c_{ij} = D^j_{ik} φ_k − conj(D^i_{jk}) φ̄_k` and
/// `γ_{ij} = T^j_{ik} φ_k − conj(T^i_{jk}) φ̄_k`.
pub fn theta1(data: &HermitianLieData) -> MatrixForm {
    let n = data.n();
    let d = data.d_array();
    let t = chern_torsion_unchecked(data);
    let t = t.array();
    MatrixForm::from_fn(n, |i, j| {
        one_form(
            n,
            |k| d[[j, i, k]] + t[[j, i, k]],
            |k| -(d[[i, j, k]] + t[[i, j, k]]).conj(),
        )
    })
}

/// `(θ₂)_{ij} = conj(T^k_{ij}) φ_k`.
pub fn theta2(data: &HermitianLieData) -> MatrixForm {
    let n = data.n();
    let t = chern_torsion_unchecked(data);
    let t = t.array();
    MatrixForm::from_fn(n, |i, j| one_form(n, |k| t[[k, i, j]].conj(), |_| ZERO))
}

/// `Θ₂ = dθ₂ − θ₂∧θ₁ − θ̄₁∧θ₂`.
pub fn theta2_curvature(data: &HermitianLieData) -> Result<MatrixForm> {
    ensure_valid(data)?;
    let diff = Differential::new(data);
    let t1 = theta1(data);
    let t2 = theta2(data);
    let d2 = t2.d(&diff)?;
    Ok(d2.sub(&t2.wedge(&t1)?).sub(&t1.conj().wedge(&t2)?))
}

pub fn theta2_residual(data: &HermitianLieData) -> Result<f64> {
    Ok(theta2_curvature(data)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::realify;
    use crate::catalog::{
        build_family, random_two_step, random_two_step_with, Cor12Params, Cor12Variant, Family, TwoStepMode,
    };
    use crate::connections::{connection, curvature};
    use crate::linalg::c;

    fn kodaira(l: f64) -> HermitianLieData {
        build_family(&Family::Kodaira { lambda: l }).unwrap()
    }

    fn iwasawa() -> HermitianLieData {
        build_family(&Family::Iwasawa).unwrap()
    }

    fn samples() -> Vec<HermitianLieData> {
        let mut out = vec![kodaira(1.3), iwasawa()];
        for seed in 0..4 {
            out.push(random_two_step(4, 2, seed).unwrap());
            out.push(random_two_step(5, 3, seed).unwrap());
        }
        let mut solv = HermitianLieData::zeros(1);
        solv.set_d(1, 1, 1, c(1.0, 0.5));
        out.push(solv);
        out
    }

    #[test]
    fn abelian_derivatives_vanish() {
        let data = HermitianLieData::zeros(3);
        for kind in [
            ConnectionKind::Chern,
            ConnectionKind::Strominger,
            ConnectionKind::Gauduchon0,
        ] {
            let t = torsion_covariant_derivative(&data, kind).unwrap();
            assert_eq!(t.plain_norm() + t.bar_norm(), 0.0);
        }
        assert!(matches!(
            torsion_covariant_derivative(&data, ConnectionKind::Riemannian),
            Err(Error::UnknownKind(_))
        ));
        let r = rkl_necessary_residuals(&data).unwrap();
        assert_eq!(r.max(), 0.0);
        assert_eq!(theta2_residual(&data).unwrap(), 0.0);
    }

    #[test]
    fn strominger_parallel_torsion_on_normal_form() {
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
        let t = torsion_covariant_derivative(&data, ConnectionKind::Strominger).unwrap();
        assert!(t.plain_norm() < 1e-12 && t.bar_norm() < 1e-12);
    }

    #[test]
    fn kodaira_chern_witness() {
        for l in [0.5, 1.0, 2.0] {
            let t = torsion_covariant_derivative(&kodaira(l), ConnectionKind::Chern).unwrap();
            assert!((t.get_bar(2, 1, 2, 1) - c(-l * l / 2.0, 0.0)).norm() < 1e-14);
            assert!((t.get_bar(2, 2, 1, 1) - c(l * l / 2.0, 0.0)).norm() < 1e-14);
            assert_eq!(t.get_bar(1, 1, 1, 1), c(0.0, 0.0));
            assert!((t.bar_norm() - l * l / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn d8_is_twice_the_chern_derivative() {
        for data in samples() {
            let t = torsion_covariant_derivative(&data, ConnectionKind::Chern).unwrap();
            let gap = max_abs4(&(&d8_expansion(&data) - &(&t.bar * c(2.0, 0.0))));
            assert!(gap < 1e-12, "{gap}");
        }
    }

    #[test]
    fn tcbar_matches_lemma_second() {
        for data in samples() {
            let r = rkl_necessary_residuals(&data).unwrap();
            assert!((r.tcbar - r.lemma_second).abs() < 1e-12);
        }
    }

    #[test]
    fn kodaira_and_iwasawa_fail_rkl_conditions() {
        let r = rkl_necessary_residuals(&kodaira(1.0)).unwrap();
        assert!(r.max() > 1e-3);
        assert!(theta2_residual(&kodaira(1.0)).unwrap() > 1e-3);
        assert!(theta2_residual(&iwasawa()).unwrap() > 1e-3);
    }

    #[test]
    fn theta2_is_a_curvature_block() {
        for data in samples() {
            let n = data.n();
            let real = realify(&data).unwrap();
            let lc = connection(&data, ConnectionKind::Riemannian).unwrap();
            let rf = curvature(&lc, &real).unwrap().on_complex_frame();
            let big = theta2_curvature(&data).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let form = big.get(i, j).conj();
                    for x in 0..2 * n {
                        for y in 0..2 * n {
                            let gap = (rf[[x, y, i, j]] - form.eval(&[x, y])).norm();
                            assert!(gap < 1e-12, "{gap}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn theta1_is_the_gauduchon0_matrix() {
        let data = random_two_step_with(4, 2, 3, TwoStepMode::Full).unwrap();
        let g = connection(&data, ConnectionKind::Gauduchon0).unwrap();
        let a = g.complex.unwrap();
        let t1 = theta1(&data);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!((t1.get(i, j).eval(&[k]) - a[[j, i, k]]).norm() < 1e-15);
                }
            }
        }
    }
}
