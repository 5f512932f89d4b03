//! Named families: abelian, Kodaira, Iwasawa and the low-dimensional
//! Strominger Kähler-like normal forms.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{from_coframe, CoframeDifferentials};
use crate::algebra::HermitianLieData;
use crate::{Error, Result};

/// The nine normal forms in complex dimensions 2 to 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cor12Variant {
    N2,
    N3,
    N4a,
    N4b,
    N5a,
    N5b,
    N6a,
    N6b,
    N6c,
}

impl Cor12Variant {
    pub const ALL: [Cor12Variant; 9] = [
        Cor12Variant::N2,
        Cor12Variant::N3,
        Cor12Variant::N4a,
        Cor12Variant::N4b,
        Cor12Variant::N5a,
        Cor12Variant::N5b,
        Cor12Variant::N6a,
        Cor12Variant::N6b,
        Cor12Variant::N6c,
    ];

    pub fn n(self) -> usize {
        use Cor12Variant::*;
        match self {
            N2 => 2,
            N3 => 3,
            N4a | N4b => 4,
            N5a | N5b => 5,
            N6a | N6b | N6c => 6,
        }
    }

    /// `(r, s)` for generic parameters: `r` closed `(1,0)`-forms and `s`
    /// nonzero bracket directions.
    pub fn expected_rs(self) -> (usize, usize) {
        use Cor12Variant::*;
        match self {
            N2 => (1, 1),
            N3 => (2, 2),
            N4a => (3, 2),
            N4b => (2, 2),
            N5a => (4, 2),
            N5b => (3, 3),
            N6a => (5, 2),
            N6b => (4, 4),
            N6c => (3, 3),
        }
    }

    /// Parameter names, in the order the variant uses them.
    pub fn param_names(self) -> &'static [&'static str] {
        use Cor12Variant::*;
        match self {
            N2 => &["lambda"],
            N3 | N4a | N5a | N6a => &["lambda", "a"],
            N4b => &["lambda1", "lambda2", "a"],
            N5b => &["lambda1", "lambda2", "a", "b", "c"],
            N6b => &["lambda1", "lambda2", "a", "b", "c", "x", "y"],
            N6c => &["lambda1", "lambda2", "lambda3", "a", "b", "c"],
        }
    }

    /// Short letter used on the command line (`""` for single-variant `n`).
    pub fn letter(self) -> &'static str {
        use Cor12Variant::*;
        match self {
            N2 | N3 => "",
            N4a | N5a | N6a => "a",
            N4b | N5b | N6b => "b",
            N6c => "c",
        }
    }

    pub fn from_parts(n: usize, letter: &str) -> Result<Self> {
        use Cor12Variant::*;
        let v = match (n, letter) {
            (2, "" | "a") => N2,
            (3, "" | "a") => N3,
            (4, "a") => N4a,
            (4, "b") => N4b,
            (5, "a") => N5a,
            (5, "b") => N5b,
            (6, "a") => N6a,
            (6, "b") => N6b,
            (6, "c") => N6c,
            _ => return Err(Error::UnknownFamily(format!("cor12(n={n}, variant={letter:?})"))),
        };
        Ok(v)
    }
}

impl fmt::Display for Cor12Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.n(), self.letter())
    }
}

/// Real parameters of a normal form; unused ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cor12Params {
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda3: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub x: Option<f64>,
    /// For the `6b` form, solved from the pluriclosed constraint when absent.
    pub y: Option<f64>,
}

impl Cor12Params {
    /// Value of a named parameter; `None` if unset or unknown.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "lambda" => self.lambda,
            "lambda1" => self.lambda1,
            "lambda2" => self.lambda2,
            "lambda3" => self.lambda3,
            "a" => self.a,
            "b" => self.b,
            "c" => self.c,
            "x" => self.x,
            "y" => self.y,
            _ => None,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "lambda" => &mut self.lambda,
            "lambda1" => &mut self.lambda1,
            "lambda2" => &mut self.lambda2,
            "lambda3" => &mut self.lambda3,
            "a" => &mut self.a,
            "b" => &mut self.b,
            "c" => &mut self.c,
            "x" => &mut self.x,
            "y" => &mut self.y,
            _ => {
                return Err(Error::ParamOutOfRange {
                    name: name.to_string(),
                    reason: "unknown parameter".to_string(),
                })
            }
        };
        *slot = Some(value);
        Ok(())
    }

    /// The `6b` coupling `y` that makes the form pluriclosed:
    /// `xy + bc(1 + a²/λ₂²) = 0`.
    pub fn solve_6b_y(lambda2: f64, a: f64, b: f64, c: f64, x: f64) -> Option<f64> {
        let rhs = -b * c * (1.0 + a * a / (lambda2 * lambda2));
        if x != 0.0 {
            Some(rhs / x)
        } else if rhs == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Abelian {
        n: usize,
    },
    /// Primary Kodaira surface, `dφ_2 = λ φ_1∧φ̄_1`.
    Kodaira {
        lambda: f64,
    },
    /// Complex Heisenberg group, `dφ_3 = −φ_1∧φ_2`.
    Iwasawa,
    Cor12 {
        variant: Cor12Variant,
        params: Cor12Params,
    },
}

impl Family {
    /// Builds a family from a name and `key=value` pairs as used on the
    /// command line.
    pub fn parse(name: &str, params: &[(String, String)]) -> Result<Self> {
        let real = |key: &str, value: &str| -> Result<f64> {
            f64::from_str(value).map_err(|_| Error::ParamOutOfRange {
                name: key.to_string(),
                reason: format!("`{value}` is not a number"),
            })
        };
        let find = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        match name {
            "abelian" => {
                let n = find("n").ok_or_else(|| missing("n"))?;
                let n = usize::from_str(n).map_err(|_| Error::ParamOutOfRange {
                    name: "n".into(),
                    reason: format!("`{n}` is not a positive integer"),
                })?;
                Ok(Family::Abelian { n })
            }
            "kodaira" => {
                let lambda = real("lambda", find("lambda").ok_or_else(|| missing("lambda"))?)?;
                Ok(Family::Kodaira { lambda })
            }
            "iwasawa" => Ok(Family::Iwasawa),
            "cor12" => {
                let n = find("n").ok_or_else(|| missing("n"))?;
                let n = usize::from_str(n).map_err(|_| Error::UnknownFamily(format!("cor12(n={n})")))?;
                let variant = Cor12Variant::from_parts(n, find("variant").unwrap_or(""))?;
                let mut p = Cor12Params::default();
                for (k, v) in params {
                    if k != "n" && k != "variant" {
                        p.set(k, real(k, v)?)?;
                    }
                }
                Ok(Family::Cor12 { variant, params: p })
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Abelian { n } => format!("abelian(n={n})"),
            Family::Kodaira { lambda } => format!("kodaira(lambda={lambda})"),
            Family::Iwasawa => "iwasawa".to_string(),
            Family::Cor12 { variant, .. } => format!("cor12({variant})"),
        }
    }
}

fn missing(name: &str) -> Error {
    Error::ParamOutOfRange {
        name: name.to_string(),
        reason: "required".to_string(),
    }
}

fn need(value: Option<f64>, name: &str) -> Result<f64> {
    value.ok_or_else(|| missing(name))
}

fn positive(value: Option<f64>, name: &str) -> Result<f64> {
    let v = need(value, name)?;
    if v.is_nan() || v <= 0.0 || !v.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: name.to_string(),
            reason: format!("must be > 0, got {v}"),
        });
    }
    Ok(v)
}

fn nonnegative(value: Option<f64>, name: &str) -> Result<f64> {
    let v = need(value, name)?;
    if v.is_nan() || v < 0.0 || !v.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: name.to_string(),
            reason: format!("must be >= 0, got {v}"),
        });
    }
    Ok(v)
}

fn real_or_zero(value: Option<f64>, name: &str) -> Result<f64> {
    let v = value.unwrap_or(0.0);
    if !v.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: name.to_string(),
            reason: "must be finite".to_string(),
        });
    }
    Ok(v)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

/// `dφ` table of a normal form. Closed forms get no entries; every nonzero
/// term is `Y_{iα} φ_i∧φ̄_i`.
pub fn cor12_coframe(variant: Cor12Variant, p: &Cor12Params) -> Result<CoframeDifferentials> {
    use Cor12Variant::*;
    let n = variant.n();
    let mut cd = CoframeDifferentials::new(n);
    let a = real_or_zero(p.a, "a")?;
    let b = real_or_zero(p.b, "b")?;
    let c = real_or_zero(p.c, "c")?;
    match variant {
        N2 => {
            let l = nonnegative(p.lambda, "lambda")?;
            cd.add_mixed(2, 1, 1, re(l));
        }
        N3 | N4a | N5a | N6a => {
            let l = nonnegative(p.lambda, "lambda")?;
            cd.add_mixed(n, 1, 1, re(l)).add_mixed(n, 2, 2, im(a));
        }
        N4b => {
            let l1 = positive(p.lambda1, "lambda1")?;
            let l2 = positive(p.lambda2, "lambda2")?;
            cd.add_mixed(3, 1, 1, re(l1)).add_mixed(3, 2, 2, im(a));
            cd.add_mixed(4, 2, 2, re(l2));
        }
        N5b | N6c => {
            let l1 = positive(p.lambda1, "lambda1")?;
            let l2 = positive(p.lambda2, "lambda2")?;
            cd.add_mixed(4, 1, 1, re(l1))
                .add_mixed(4, 2, 2, im(a))
                .add_mixed(4, 3, 3, im(b));
            cd.add_mixed(5, 2, 2, re(l2))
                .add_mixed(5, 3, 3, Complex64::new(-a * b / l2, c));
            if variant == N6c {
                let l3 = positive(p.lambda3, "lambda3")?;
                cd.add_mixed(6, 3, 3, re(l3));
            }
        }
        N6b => {
            let l1 = positive(p.lambda1, "lambda1")?;
            let l2 = positive(p.lambda2, "lambda2")?;
            let x = real_or_zero(p.x, "x")?;
            let y = match p.y {
                Some(y) => {
                    let defect = x * y + b * c * (1.0 + a * a / (l2 * l2));
                    let scale = 1.0 + (x * y).abs() + (b * c * (1.0 + a * a / (l2 * l2))).abs();
                    if defect.abs() > 1e-12 * scale {
                        return Err(Error::ParamOutOfRange {
                            name: "y".to_string(),
                            reason: format!(
                                "x*y + b*c*(1 + a^2/lambda2^2) = {defect:e}, must vanish for a pluriclosed metric"
                            ),
                        });
                    }
                    y
                }
                None => Cor12Params::solve_6b_y(l2, a, b, c, x).ok_or_else(|| Error::ParamOutOfRange {
                    name: "x".to_string(),
                    reason: "x = 0 requires b*c = 0".to_string(),
                })?,
            };
            cd.add_mixed(5, 1, 1, re(l1))
                .add_mixed(5, 2, 2, im(a))
                .add_mixed(5, 3, 3, im(b))
                .add_mixed(5, 4, 4, im(c));
            cd.add_mixed(6, 2, 2, re(l2))
                .add_mixed(6, 3, 3, Complex64::new(-a * b / l2, x))
                .add_mixed(6, 4, 4, Complex64::new(-a * c / l2, y));
        }
    }
    Ok(cd)
}

/// The `n = 5, 6` normal forms with the real parts `−ab/λ₂`, `−ac/λ₂`
/// removed. The result is still a Lie algebra but is not pluriclosed once
/// `ab ≠ 0` or `ac ≠ 0`.
pub fn cor12_uncompensated(variant: Cor12Variant, p: &Cor12Params) -> Result<CoframeDifferentials> {
    use Cor12Variant::*;
    let targets: &[(usize, usize)] = match variant {
        N5b | N6c => &[(5, 3)],
        N6b => &[(6, 3), (6, 4)],
        _ => {
            return Err(Error::UnknownFamily(format!(
                "cor12 {variant} has no compensating terms"
            )))
        }
    };
    let mut cd = cor12_coframe(variant, p)?;
    for &(alpha, i) in targets {
        for t in cd.mixed[alpha - 1].iter_mut().filter(|t| t.i == i && t.k == i) {
            t.coefficient.re = 0.0;
        }
    }
    Ok(cd)
}

pub fn build_family(family: &Family) -> Result<HermitianLieData> {
    let data = match family {
        Family::Abelian { n } => {
            if *n == 0 {
                return Err(Error::ParamOutOfRange {
                    name: "n".into(),
                    reason: "must be >= 1".into(),
                });
            }
            HermitianLieData::zeros(*n)
        }
        Family::Kodaira { lambda } => {
            let l = positive(Some(*lambda), "lambda")?;
            let mut cd = CoframeDifferentials::new(2);
            cd.add_mixed(2, 1, 1, re(l));
            from_coframe(&cd)?
        }
        Family::Iwasawa => {
            let mut cd = CoframeDifferentials::new(3);
            cd.add_hol(3, 1, 2, re(-1.0));
            from_coframe(&cd)?
        }
        Family::Cor12 { variant, params } => from_coframe(&cor12_coframe(*variant, params)?)?,
    };
    Ok(data.with_label(family.name()))
}
