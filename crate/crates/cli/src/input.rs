//! Structure files.
//!
//! Three layouts are accepted, all with 1-based indices and complex numbers
//! as separate real and imaginary parts:
//!
//! ```text
//! {"n": 2, "C": [[j, i, k, re, im], ...], "D": [[j, i, k, re, im], ...]}
//! {"structure_constants": {"n": ..., "C": ..., "D": ...}}
//! {"dphi": {"n": 2, "terms": {"2": {"hol": [[i, k, re, im]], "mixed": [[i, k, re, im]]}}}}
//! ```
//!
//! `C` lists only `i < k`; the antisymmetric partner is implied. Every index
//! tuple may appear once, so the parsed constants never depend on the order
//! of the lists.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nilkl::algebra::{validate, HermitianLieData};
use nilkl::catalog::{from_coframe, CoframeDifferentials};
use nilkl::{Complex64, DEFAULT_TOL};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Largest accepted complex dimension.
pub const MAX_N: usize = 32;

pub fn parse_structure_file(path: &Path) -> Result<HermitianLieData> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_structure_str(&text, path)
}

pub fn parse_structure_str(text: &str, path: &Path) -> Result<HermitianLieData> {
    let p = Parser { path };
    let root: Value = serde_json::from_str(text).map_err(|e| p.err(format!("invalid JSON: {e}")))?;
    let obj = root.as_object().ok_or_else(|| p.err("top level must be an object"))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let data = if let Some(dphi) = obj.get("dphi") {
        let cd = p.dphi(dphi)?;
        from_coframe(&cd).map_err(|e| CliError::semantic(path.display().to_string(), e))?
    } else {
        let body = obj.get("structure_constants").unwrap_or(&root);
        let data = p.constants(body)?;
        let report = validate(&data, DEFAULT_TOL * (1.0 + data.scale().powi(2)));
        if !report.valid {
            return Err(CliError::semantic(
                path.display().to_string(),
                nilkl::Error::JacobiViolation(report.jacobi_residual.max(report.real_jacobi_residual)),
            ));
        }
        data
    };
    Ok(data.with_label(label))
}

struct Parser<'a> {
    path: &'a Path,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: PathBuf::from(self.path),
            message: message.into(),
        }
    }

    fn n(&self, obj: &serde_json::Map<String, Value>) -> Result<usize> {
        let n = obj.get("n").ok_or_else(|| self.err("missing `n`"))?;
        let n = n.as_u64().ok_or_else(|| self.err("`n` must be a positive integer"))? as usize;
        if n == 0 || n > MAX_N {
            return Err(self.err(format!("`n` must be in 1..={MAX_N}, got {n}")));
        }
        Ok(n)
    }

    fn index(&self, v: &Value, n: usize, what: &str) -> Result<usize> {
        let i = v
            .as_u64()
            .ok_or_else(|| self.err(format!("{what}: indices must be positive integers")))? as usize;
        if i == 0 || i > n {
            return Err(self.err(format!("{what}: index {i} outside 1..={n}")));
        }
        Ok(i)
    }

    fn number(&self, v: &Value, what: &str) -> Result<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(format!("{what}: coefficients must be finite numbers"))),
        }
    }

    /// Splits `[idx.., re, im]` with `count` indices.
    fn entry(&self, v: &Value, count: usize, n: usize, what: &str) -> Result<(Vec<usize>, Complex64)> {
        let arr = v
            .as_array()
            .filter(|a| a.len() == count + 2)
            .ok_or_else(|| self.err(format!("{what}: entries must have {} elements", count + 2)))?;
        let idx = arr[..count]
            .iter()
            .map(|x| self.index(x, n, what))
            .collect::<Result<Vec<_>>>()?;
        let z = Complex64::new(self.number(&arr[count], what)?, self.number(&arr[count + 1], what)?);
        Ok((idx, z))
    }

    fn list<'v>(&self, obj: &'v serde_json::Map<String, Value>, key: &str) -> Result<&'v [Value]> {
        match obj.get(key) {
            None => Ok(&[]),
            Some(v) => v
                .as_array()
                .map(|a| a.as_slice())
                .ok_or_else(|| self.err(format!("`{key}` must be a list"))),
        }
    }

    fn constants(&self, body: &Value) -> Result<HermitianLieData> {
        let obj = body
            .as_object()
            .ok_or_else(|| self.err("structure constants must be an object"))?;
        let n = self.n(obj)?;
        let mut data = HermitianLieData::zeros(n);

        let c_entries = self
            .list(obj, "C")?
            .iter()
            .map(|e| self.entry(e, 3, n, "C"))
            .collect::<Result<Vec<_>>>()?;
        let listed: BTreeSet<Vec<usize>> = c_entries.iter().map(|(idx, _)| idx.clone()).collect();
        let mut seen = BTreeSet::new();
        for (idx, z) in &c_entries {
            let (j, i, k) = (idx[0], idx[1], idx[2]);
            if i == k {
                return Err(self.err(format!("C entry [{j},{i},{k}]: lower indices must differ")));
            }
            if i > k {
                if listed.contains(&vec![j, k, i]) {
                    return Err(self.err(format!(
                        "C entries [{j},{k},{i}] and [{j},{i},{k}] form a duplicate or conflicting antisymmetric pair"
                    )));
                }
                return Err(self.err(format!("C entry [{j},{i},{k}]: only i < k is allowed")));
            }
            if !seen.insert(idx.clone()) {
                return Err(self.err(format!("duplicate C entry [{j},{i},{k}]")));
            }
            data.set_c(j, i, k, *z);
        }

        let mut seen = BTreeSet::new();
        for e in self.list(obj, "D")? {
            let (idx, z) = self.entry(e, 3, n, "D")?;
            if !seen.insert(idx.clone()) {
                return Err(self.err(format!("duplicate D entry [{},{},{}]", idx[0], idx[1], idx[2])));
            }
            data.set_d(idx[0], idx[1], idx[2], z);
        }
        Ok(data)
    }

    fn dphi(&self, body: &Value) -> Result<CoframeDifferentials> {
        let obj = body.as_object().ok_or_else(|| self.err("`dphi` must be an object"))?;
        let n = self.n(obj)?;
        let mut cd = CoframeDifferentials::new(n);
        let terms = match obj.get("terms") {
            None => return Ok(cd),
            Some(t) => t.as_object().ok_or_else(|| self.err("`terms` must be an object"))?,
        };
        for (key, table) in terms {
            let j: usize = key
                .parse()
                .ok()
                .filter(|j| (1..=n).contains(j))
                .ok_or_else(|| self.err(format!("`terms` key `{key}` is not an index in 1..={n}")))?;
            let table = table
                .as_object()
                .ok_or_else(|| self.err(format!("terms for d phi_{j} must be an object")))?;
            let mut seen = BTreeSet::new();
            for e in self.list(table, "hol")? {
                let (idx, z) = self.entry(e, 2, n, "hol")?;
                if idx[0] >= idx[1] {
                    return Err(self.err(format!("hol term [{},{}] of d phi_{j}: need i < k", idx[0], idx[1])));
                }
                if !seen.insert(idx.clone()) {
                    return Err(self.err(format!("duplicate hol term [{},{}] of d phi_{j}", idx[0], idx[1])));
                }
                cd.add_hol(j, idx[0], idx[1], z);
            }
            let mut seen = BTreeSet::new();
            for e in self.list(table, "mixed")? {
                let (idx, z) = self.entry(e, 2, n, "mixed")?;
                if !seen.insert(idx.clone()) {
                    return Err(self.err(format!("duplicate mixed term [{},{}] of d phi_{j}", idx[0], idx[1])));
                }
                cd.add_mixed(j, idx[0], idx[1], z);
            }
        }
        Ok(cd)
    }
}

/// The `structure_constants` body of `data`: nonzero entries, `C` with
/// `i < k`, in index order.
pub fn constants_json(data: &HermitianLieData) -> Value {
    let n = data.n();
    let mut c = Vec::new();
    let mut d = Vec::new();
    for j in 1..=n {
        for i in 1..=n {
            for k in 1..=n {
                let z = data.c(j, i, k);
                if i < k && z != Complex64::new(0.0, 0.0) {
                    c.push(serde_json::json!([j, i, k, z.re, z.im]));
                }
                let z = data.d(j, i, k);
                if z != Complex64::new(0.0, 0.0) {
                    d.push(serde_json::json!([j, i, k, z.re, z.im]));
                }
            }
        }
    }
    serde_json::json!({ "n": n, "C": c, "D": d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilkl::catalog::{build_family, Family};

    fn parse(text: &str) -> Result<HermitianLieData> {
        parse_structure_str(text, Path::new("t.json"))
    }

    #[test]
    fn kodaira_file() {
        let data = parse(r#"{"n":2,"C":[],"D":[[1,2,1,-1.0,0.0]]}"#).unwrap();
        let k = build_family(&Family::Kodaira { lambda: 1.0 }).unwrap();
        assert_eq!(data.distance(&k), 0.0);
    }

    #[test]
    fn abelian_file() {
        let data = parse(r#"{"structure_constants":{"n":3,"C":[],"D":[]}}"#).unwrap();
        assert_eq!(data.scale(), 0.0);
        assert_eq!(data.n(), 3);
    }

    #[test]
    fn dphi_file() {
        let data = parse(r#"{"dphi":{"n":3,"terms":{"3":{"hol":[[1,2,-1,0]]}}}}"#).unwrap();
        let iw = build_family(&Family::Iwasawa).unwrap();
        assert_eq!(data.distance(&iw), 0.0);
    }

    #[test]
    fn conflicting_pair_is_a_parse_error() {
        let err = parse(r#"{"n":3,"C":[[3,1,2,1,0],[3,2,1,-1,0]],"D":[]}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("antisymmetric pair"), "{err}");
    }

    #[test]
    fn format_errors() {
        for bad in [
            "not json",
            "[]",
            r#"{"C":[]}"#,
            r#"{"n":0}"#,
            r#"{"n":2,"C":[[1,1,1,0,0]]}"#,
            r#"{"n":2,"C":[[1,2,1,1,0]]}"#,
            r#"{"n":2,"D":[[1,2,1,1,0],[1,2,1,2,0]]}"#,
            r#"{"n":2,"D":[[1,3,1,1,0]]}"#,
            r#"{"n":2,"D":[[1,2,1,1]]}"#,
            r#"{"n":2,"D":[[1,2,1,"x",0]]}"#,
            r#"{"n":2,"D":[[1.5,2,1,1,0]]}"#,
            r#"{"dphi":{"n":2,"terms":{"5":{}}}}"#,
            r#"{"dphi":{"n":3,"terms":{"3":{"hol":[[2,1,1,0]]}}}}"#,
        ] {
            let err = parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn jacobi_failure_is_semantic() {
        let err =
            parse(r#"{"dphi":{"n":3,"terms":{"2":{"mixed":[[1,1,1,0]]},"3":{"mixed":[[2,2,1,0]]}}}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }

    #[test]
    fn constants_round_trip() {
        let data = nilkl::catalog::random_two_step(4, 2, 3).unwrap();
        let text = serde_json::json!({ "structure_constants": constants_json(&data) }).to_string();
        assert_eq!(parse(&text).unwrap().distance(&data), 0.0);
    }
}
