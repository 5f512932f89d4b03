//! Named structures, coframe-differential conversion and seeded generators.
//!
//! # Two-step generators
//!
//! [`random_two_step`] only fills `C^α_{ik}` and `D^i_{αk}` with
//! `i, k ≤ r < α`. Every bracket then lands in `span(e_α, ē_α)`, and those
//! vectors are central: `[ē_α, e_k]` would need `D^α_{··}` or `D^k_{·α}`,
//! both structurally zero. So every double bracket vanishes and the Jacobi
//! identity holds exactly, independent of the drawn values.

mod families;

pub use families::{build_family, cor12_coframe, cor12_uncompensated, Cor12Params, Cor12Variant, Family};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{validate, HermitianLieData};
use crate::{Error, Result};

/// A term `coefficient · φ_i ∧ φ_k` (holomorphic) or `coefficient · φ_i ∧ φ̄_k`
/// (mixed), 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub i: usize,
    pub k: usize,
    pub coefficient: Complex64,
}

/// `dφ_j` for each `j`, as lists of `φ_i∧φ_k` (i < k) and `φ_i∧φ̄_k` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoframeDifferentials {
    pub n: usize,
    pub hol: Vec<Vec<Term>>,
    pub mixed: Vec<Vec<Term>>,
}

impl CoframeDifferentials {
    pub fn new(n: usize) -> Self {
        CoframeDifferentials {
            n,
            hol: vec![Vec::new(); n],
            mixed: vec![Vec::new(); n],
        }
    }

    /// Adds `v · φ_i∧φ_k` to `dφ_j`.
    pub fn add_hol(&mut self, j: usize, i: usize, k: usize, v: Complex64) -> &mut Self {
        self.hol[j - 1].push(Term { i, k, coefficient: v });
        self
    }

    /// Adds `v · φ_i∧φ̄_k` to `dφ_j`.
    pub fn add_mixed(&mut self, j: usize, i: usize, k: usize, v: Complex64) -> &mut Self {
        self.mixed[j - 1].push(Term { i, k, coefficient: v });
        self
    }
}

fn check_index(n: usize, idx: usize) -> Result<()> {
    if idx == 0 || idx > n {
        return Err(Error::BadRange(format!("index {idx} outside 1..={n}")));
    }
    Ok(())
}

/// Reads `dφ_j = −½ Σ C^j_{ik} φ_i∧φ_k − Σ conj(D^i_{jk}) φ_i∧φ̄_k` backwards.
/// Repeated terms add up.
pub fn from_coframe_unchecked(cd: &CoframeDifferentials) -> Result<HermitianLieData> {
    let n = cd.n;
    if n == 0 || cd.hol.len() != n || cd.mixed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cd.hol.len().min(cd.mixed.len()),
        });
    }
    let mut data = HermitianLieData::zeros(n);
    for j in 1..=n {
        for t in &cd.hol[j - 1] {
            check_index(n, t.i)?;
            check_index(n, t.k)?;
            if t.i == t.k {
                return Err(Error::BadRange(format!("φ_{0}∧φ_{0} term in dφ_{j}", t.i)));
            }
            let (i, k, v) = if t.i < t.k {
                (t.i, t.k, t.coefficient)
            } else {
                (t.k, t.i, -t.coefficient)
            };
            let cur = data.c(j, i, k);
            data.set_c(j, i, k, cur - v);
        }
        for t in &cd.mixed[j - 1] {
            check_index(n, t.i)?;
            check_index(n, t.k)?;
            // D^i_{jk} = −conj(coefficient)
            let cur = data.d(t.i, j, t.k);
            data.set_d(t.i, j, t.k, cur - t.coefficient.conj());
        }
    }
    Ok(data)
}

pub fn from_coframe(cd: &CoframeDifferentials) -> Result<HermitianLieData> {
    let data = from_coframe_unchecked(cd)?;
    let report = validate(&data, crate::DEFAULT_TOL * (1.0 + data.scale().powi(2)));
    if !report.valid {
        return Err(Error::JacobiViolation(
            report.jacobi_residual.max(report.real_jacobi_residual),
        ));
    }
    Ok(data)
}

/// Inverse of [`from_coframe`]; emits only nonzero terms.
pub fn to_coframe(data: &HermitianLieData) -> CoframeDifferentials {
    let n = data.n();
    let mut cd = CoframeDifferentials::new(n);
    for j in 1..=n {
        for i in 1..=n {
            for k in (i + 1)..=n {
                let v = data.c(j, i, k);
                if v != Complex64::new(0.0, 0.0) {
                    cd.add_hol(j, i, k, -v);
                }
            }
            for k in 1..=n {
                let v = data.d(i, j, k);
                if v != Complex64::new(0.0, 0.0) {
                    cd.add_mixed(j, i, k, -v.conj());
                }
            }
        }
    }
    cd
}

/// Which entries of the two-step pattern [`random_two_step_with`] fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwoStepMode {
    #[default]
    Full,
    /// `D = 0`: complex Lie groups.
    Holomorphic,
    /// `C = 0`: abelian complex structures.
    AbelianJ,
}

fn draw(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub fn random_two_step(n: usize, r: usize, seed: u64) -> Result<HermitianLieData> {
    random_two_step_with(n, r, seed, TwoStepMode::Full)
}

pub fn random_two_step_with(n: usize, r: usize, seed: u64, mode: TwoStepMode) -> Result<HermitianLieData> {
    if n == 0 || r == 0 || r > n {
        return Err(Error::BadRange(format!("need 1 <= r <= n, got n={n}, r={r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = HermitianLieData::zeros(n);
    for alpha in (r + 1)..=n {
        for i in 1..=r {
            for k in (i + 1)..=r {
                let v = draw(&mut rng);
                if mode != TwoStepMode::AbelianJ {
                    data.set_c(alpha, i, k, v);
                }
            }
        }
        for i in 1..=r {
            for k in 1..=r {
                let v = draw(&mut rng);
                if mode != TwoStepMode::Holomorphic {
                    data.set_d(i, alpha, k, v);
                }
            }
        }
    }
    Ok(data.with_label(format!("random_two_step(n={n}, r={r}, seed={seed}, {mode:?})")))
}

/// Random structure of the shape `dφ_i = 0 (i ≤ r)`,
/// `dφ_α = Σ_i Y_{iα} φ_i∧φ̄_i`, with `Y` drawn like [`random_two_step`].
/// Returns the data and `Y` (row `i`, column `α − r − 1`).
pub fn random_theorem_shape(n: usize, r: usize, seed: u64) -> Result<(HermitianLieData, Vec<Vec<Complex64>>)> {
    if n == 0 || r == 0 || r > n {
        return Err(Error::BadRange(format!("need 1 <= r <= n, got n={n}, r={r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<Vec<Complex64>> = (0..r).map(|_| (r..n).map(|_| draw(&mut rng)).collect()).collect();
    let mut cd = CoframeDifferentials::new(n);
    for (i, row) in y.iter().enumerate() {
        for (col, &v) in row.iter().enumerate() {
            cd.add_mixed(r + 1 + col, i + 1, i + 1, v);
        }
    }
    Ok((from_coframe(&cd)?, y))
}

/// Largest `r` such that only `C^α_{ik}` and `D^i_{αk}` (`i, k ≤ r < α`)
/// are nonzero.
pub fn two_step_split(data: &HermitianLieData) -> Option<usize> {
    let n = data.n();
    let c = data.c_array();
    let d = data.d_array();
    (1..=n).rev().find(|&r| {
        (0..n).all(|j| {
            (0..n).all(|i| {
                (0..n).all(|k| {
                    let c_ok = c[[j, i, k]].norm() == 0.0 || (j >= r && i < r && k < r);
                    let d_ok = d[[j, i, k]].norm() == 0.0 || (j < r && i >= r && k < r);
                    c_ok && d_ok
                })
            })
        })
    })
}

/// Adds seeded uniform noise of the given magnitude to every admissible
/// `D^i_{αk}` of the two-step pattern; Jacobi stays exact.
pub fn perturb(data: &HermitianLieData, magnitude: f64, seed: u64) -> Result<HermitianLieData> {
    crate::algebra::ensure_valid(data)?;
    let r = two_step_split(data).ok_or(Error::InvalidStructure {
        antisymmetry_ok: true,
        jacobi_residual: 0.0,
    })?;
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for alpha in (r + 1)..=n {
        for i in 1..=r {
            for k in 1..=r {
                let v = draw(&mut rng) * magnitude;
                out.set_d(i, alpha, k, out.d(i, alpha, k) + v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{is_nilpotent_j, lower_central_series};
    use crate::linalg::c;

    #[test]
    fn empty_coframe_is_abelian() {
        let h = from_coframe(&CoframeDifferentials::new(3)).unwrap();
        assert_eq!(h, HermitianLieData::zeros(3));
    }

    #[test]
    fn kodaira_coframe() {
        let mut cd = CoframeDifferentials::new(2);
        cd.add_mixed(2, 1, 1, c(1.5, 0.0));
        let h = from_coframe(&cd).unwrap();
        assert_eq!(h.d(1, 2, 1), c(-1.5, 0.0));
        assert_eq!(h.c_norm(), 0.0);
        assert_eq!(h.d_norm(), 1.5);
    }

    #[test]
    fn solvable_coframe_is_accepted() {
        // dφ_2 = φ_2∧φ̄_1: d² vanishes on every generator, so it is a Lie algebra
        let mut cd = CoframeDifferentials::new(2);
        cd.add_mixed(2, 2, 1, c(1.0, 0.0));
        let h = from_coframe(&cd).unwrap();
        assert!(!lower_central_series(&h).unwrap().nilpotent);
    }

    #[test]
    fn non_closing_coframe_is_rejected() {
        let mut cd = CoframeDifferentials::new(3);
        cd.add_mixed(2, 1, 1, c(1.0, 0.0));
        cd.add_mixed(3, 2, 2, c(1.0, 0.0));
        assert!(matches!(from_coframe(&cd), Err(Error::JacobiViolation(_))));
    }

    #[test]
    fn coframe_round_trip() {
        let h = random_two_step(4, 2, 11).unwrap();
        let back = from_coframe(&to_coframe(&h)).unwrap();
        assert!(h.distance(&back) < 1e-15);
    }

    #[test]
    fn two_step_full_rank_is_abelian() {
        assert_eq!(random_two_step(3, 3, 5).unwrap().scale(), 0.0);
        assert!(matches!(random_two_step(3, 4, 5), Err(Error::BadRange(_))));
        assert!(matches!(random_two_step(3, 0, 5), Err(Error::BadRange(_))));
    }

    #[test]
    fn two_step_is_exact_and_deterministic() {
        for seed in 0..20 {
            for (n, r) in [(2, 1), (3, 2), (4, 2), (5, 3)] {
                let h = random_two_step(n, r, seed).unwrap();
                let rep = validate(&h, 1e-8);
                assert!(rep.valid);
                assert!(rep.jacobi_residual < 1e-14, "{}", rep.jacobi_residual);
                assert!(rep.real_jacobi_residual < 1e-14);
                assert!((rep.jacobi_frobenius_complex - rep.jacobi_frobenius_real).abs() < 1e-12);
                assert_eq!(h, random_two_step(n, r, seed).unwrap());
                let lcs = lower_central_series(&h).unwrap();
                assert!(lcs.nilpotent && lcs.dims.len() <= 3);
                assert!(is_nilpotent_j(&h).unwrap().nilpotent);
            }
        }
    }

    #[test]
    fn perturbation() {
        let mut k = HermitianLieData::zeros(2);
        k.set_d(1, 2, 1, c(-1.0, 0.0));
        assert_eq!(perturb(&k, 0.0, 3).unwrap(), k);
        let p = perturb(&k, 1.0, 3).unwrap();
        assert!(p.distance(&k) > 0.0);
        assert!(validate(&p, 1e-8).jacobi_residual < 1e-14);
        assert_eq!(two_step_split(&k), Some(1));
    }

    #[test]
    fn theorem_shape_is_valid() {
        let (h, y) = random_theorem_shape(5, 3, 9).unwrap();
        assert_eq!(y.len(), 3);
        assert_eq!(y[0].len(), 2);
        assert_eq!(h.d(2, 4, 2), -y[1][0].conj());
    }
}
