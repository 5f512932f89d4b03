//! Subcommands. [`run`] never exits the process; it writes to the given
//! streams and returns the exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nilkl::algebra::validate;
use nilkl::catalog::{build_family, random_two_step_with, Family, TwoStepMode};
use nilkl::classify::classify_skl_seeded;
use nilkl::exec::Execution;
use nilkl::DEFAULT_TOL;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};
use crate::input::{constants_json, parse_structure_file};
use crate::report::{analyze, render_json, render_text, AnalysisReport, SCHEMA};
use crate::selftest::{run_all, SelftestOptions};

#[derive(Debug, Parser)]
#[command(
    name = "nilkl",
    version,
    about = "Kähler-like checks for left-invariant Hermitian structures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report for one or more structure files.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check antisymmetry and the Jacobi identities.
    Validate { file: PathBuf },
    /// Strominger Kähler-like decision and normal form.
    ClassifySkl {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Structure file of a named family.
    Generate {
        /// abelian, kodaira, iwasawa or cor12
        #[arg(long)]
        family: String,
        /// Comma-separated `key=value` pairs, e.g. `n=5,variant=b,lambda1=1`.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Random two-step nilpotent structure.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Document with the normal-form tables for the transcription check.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Holomorphic,
    AbelianJ,
}

impl From<Mode> for TwoStepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => TwoStepMode::Full,
            Mode::Holomorphic => TwoStepMode::Holomorphic,
            Mode::AbelianJ => TwoStepMode::AbelianJ,
        }
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match cli.command {
        Command::Analyze { files, tol, json, seed } => analyze_files(&files, tol, json, seed, out, err),
        command => match dispatch(command, out) {
            Ok(code) => code,
            Err(e) => {
                let _ = writeln!(err, "nilkl: {e}");
                e.exit_code()
            }
        },
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must be a positive number, got {tol}")))
    }
}

fn analyze_one(path: &Path, tol: f64, seed: u64) -> Result<AnalysisReport> {
    let data = parse_structure_file(path)?;
    analyze(&data, tol, seed)
}

/// Files are analyzed concurrently; reports are written whole, in input
/// order. Exit code is the worst over all files.
fn analyze_files(files: &[PathBuf], tol: f64, json: bool, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(e) = check_tol(tol) {
        let _ = writeln!(err, "nilkl: {e}");
        return e.exit_code();
    }
    let results: Vec<Result<AnalysisReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| s.spawn(move || analyze_one(f, tol, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("analysis thread panicked"))
            .collect()
    });

    let mut code = 0;
    let mut reports = Vec::new();
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok(report) => reports.push((path, report)),
            Err(e) => {
                let _ = writeln!(err, "nilkl: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    let text = if json {
        if files.len() == 1 {
            reports.first().map(|(_, r)| render_json(r)).unwrap_or_default()
        } else {
            let all: Vec<&AnalysisReport> = reports.iter().map(|(_, r)| r).collect();
            let mut s = serde_json::to_string_pretty(&all).expect("reports are serializable");
            s.push('\n');
            s
        }
    } else {
        let many = files.len() > 1;
        reports
            .iter()
            .map(|(p, r)| {
                if many {
                    format!("== {} ==\n{}", p.display(), render_text(r))
                } else {
                    render_text(r)
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let _ = out.write_all(text.as_bytes());
    code
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match command {
        Command::Analyze { .. } => unreachable!("handled by run"),
        Command::Validate { file } => {
            // parsing already rejects invalid structures
            let data = parse_structure_file(&file)?;
            let m = data.scale();
            let v = validate(&data, DEFAULT_TOL * (1.0 + m * m));
            writeln!(out, "valid                 {}", v.valid).map_err(io)?;
            writeln!(out, "antisymmetric         {}", v.antisymmetry_ok).map_err(io)?;
            writeln!(out, "jacobi residual       {:e}", v.jacobi_residual).map_err(io)?;
            writeln!(out, "  by family           {:?}", v.jacobi_breakdown).map_err(io)?;
            writeln!(out, "real jacobi residual  {:e}", v.real_jacobi_residual).map_err(io)?;
            Ok(0)
        }
        Command::ClassifySkl { file, tol, json, seed } => {
            check_tol(tol)?;
            let data = parse_structure_file(&file)?;
            let d = classify_skl_seeded(&data, tol, seed).map_err(|e| match e {
                nilkl::Error::NotNilpotent => CliError::semantic(
                    format!(
                        "{}: the group is not nilpotent, no Strominger classification",
                        file.display()
                    ),
                    e,
                ),
                e => CliError::semantic(file.display().to_string(), e),
            })?;
            let nf = d.normal_form.as_ref();
            if json {
                let body = json!({
                    "schema": SCHEMA,
                    "verdict": d.verdict,
                    "stage": d.stage,
                    "residuals": d.residuals,
                    "r": nf.map(|f| f.r),
                    "s": nf.map(|f| f.s),
                    "lambdas": nf.map(|f| f.lambdas.clone()).unwrap_or_default(),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serializable")).map_err(io)?;
            } else {
                writeln!(out, "verdict  {}", if d.verdict { "yes" } else { "no" }).map_err(io)?;
                writeln!(out, "stage    {}", d.stage).map_err(io)?;
                if let Some(f) = nf {
                    writeln!(out, "r {}  s {}  lambdas {:?}", f.r, f.s, f.lambdas).map_err(io)?;
                }
                for (k, v) in &d.residuals {
                    writeln!(out, "  {k:<20} {v:e}").map_err(io)?;
                }
            }
            Ok(0)
        }
        Command::Generate { family, params } => {
            let pairs = parse_params(&params)?;
            let fam = Family::parse(&family, &pairs).map_err(|e| CliError::Usage(e.to_string()))?;
            let data = build_family(&fam).map_err(|e| match e {
                nilkl::Error::JacobiViolation(_) | nilkl::Error::InvalidStructure { .. } => {
                    CliError::semantic(fam.name(), e)
                }
                e => CliError::Usage(e.to_string()),
            })?;
            let mut p = Map::new();
            for (k, v) in &pairs {
                let value = v
                    .parse::<f64>()
                    .ok()
                    .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number));
                p.insert(k.clone(), value.unwrap_or_else(|| Value::String(v.clone())));
            }
            let body = json!({
                "schema": SCHEMA,
                "family": fam.name(),
                "params": p,
                "structure_constants": constants_json(&data),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serializable")).map_err(io)?;
            Ok(0)
        }
        Command::Random { n, r, seed, mode } => {
            let data = random_two_step_with(n, r, seed, mode.into()).map_err(|e| CliError::Usage(e.to_string()))?;
            let body = json!({
                "schema": SCHEMA,
                "generator": "random_two_step",
                "params": { "n": n, "r": r, "seed": seed, "mode": format!("{:?}", TwoStepMode::from(mode)) },
                "structure_constants": constants_json(&data),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serializable")).map_err(io)?;
            Ok(0)
        }
        Command::Selftest { reference, sequential } => {
            let opts = SelftestOptions {
                reference,
                exec: if sequential {
                    Execution::Sequential
                } else {
                    Execution::default()
                },
            };
            let outcomes = run_all(&opts);
            for o in &outcomes {
                writeln!(out, "{}", o.line()).map_err(io)?;
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            writeln!(out, "{} of {} criteria passed", outcomes.len() - failed, outcomes.len()).map_err(io)?;
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

/// `k=v,k=v` into pairs; empty input gives no pairs.
pub fn parse_params(text: &str) -> Result<Vec<(String, String)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| CliError::Usage(format!("parameter `{kv}` is not of the form key=value")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params() {
        assert_eq!(
            parse_params("n=5, variant=b,lambda1=1").unwrap(),
            vec![
                ("n".to_string(), "5".to_string()),
                ("variant".to_string(), "b".to_string()),
                ("lambda1".to_string(), "1".to_string())
            ]
        );
        assert!(parse_params("").unwrap().is_empty());
        assert!(parse_params("x").is_err());
        assert!(parse_params("=1").is_err());
    }

    #[test]
    fn bad_tol_is_usage() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["nilkl", "analyze", "x.json", "--tol", "-1"], &mut out, &mut err),
            2
        );
    }

    #[test]
    fn unknown_family_is_usage() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["nilkl", "generate", "--family", "nope"], &mut out, &mut err), 2);
    }
}
