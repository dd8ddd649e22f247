//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failures, 2 malformed input,
//! 3 solver faults.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::geometry::{Quadrilateral, VertexName};
use crate::io::{parse_quad, Table};
use crate::pde_oracle::{self, FemLadder, MarkedPolygon, PdeError};
use crate::sc_solver::{self, ScConfig};
use crate::verify::{self, CheckConfig, MethodChoice, RegionSpec, VerifyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "quadmod",
    version,
    about = "Conformal moduli of polygonal quadrilaterals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Sc,
    Fem,
    Both,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sc => MethodChoice::Sc,
            MethodArg::Fem => MethodChoice::Fem,
            MethodArg::Both => MethodChoice::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Modulus of one quadrilateral.
    Modulus {
        /// `{"a":[x,y],"b":[x,y],"c":[x,y],"d":[x,y]}`
        #[arg(long)]
        quad: String,
        #[arg(long, value_enum, default_value = "sc")]
        method: MethodArg,
        /// Target accuracy; for `fem` alone it is the bracket width.
        #[arg(long)]
        tol: Option<f64>,
        /// FEM bracket width when combined with `--method both`.
        #[arg(long)]
        fem_tol: Option<f64>,
        /// Write the finest FEM mesh as JSON.
        #[arg(long)]
        mesh_dump: Option<PathBuf>,
    },
    /// Run a named check and print its report.
    Verify {
        /// Check id, e.g. `th4.1`.
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = verify::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, value_enum, default_value = "sc")]
        method: MethodArg,
        /// Error-budget multiple separating pass, inconclusive and fail.
        #[arg(long, default_value_t = verify::DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Moduli over a parameter grid of a named family, as CSV.
    Sweep {
        /// Family name: qlambda, q1, q2, g, cor2 or notch.
        #[arg(long)]
        family: String,
        /// Family parameters as a JSON object.
        #[arg(long)]
        params: String,
        /// Number of grid points.
        #[arg(long)]
        grid: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sc")]
        method: MethodArg,
    },
    /// Sign of the modulus change when one vertex moves, as CSV.
    RegionMap {
        /// `{"a":[x,y],"b":[x,y],"c":[x,y],"d":[x,y]}`
        #[arg(long)]
        quad: String,
        /// Vertex to move: a, b, c or d.
        #[arg(long)]
        vertex: VertexName,
        /// Number of probe directions.
        #[arg(long)]
        grid: usize,
        /// Outer probe radius.
        #[arg(long)]
        rho: f64,
        /// Probe radii rho·k/rings for k = 1..=rings.
        #[arg(long, default_value_t = 1)]
        rings: usize,
        /// Restrict directions to cell centres of [theta-min, theta-max].
        #[arg(long, requires = "theta_max")]
        theta_min: Option<f64>,
        #[arg(long, requires = "theta_min")]
        theta_max: Option<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sc")]
        method: MethodArg,
        /// Error-budget multiple separating pass, inconclusive and fail.
        #[arg(long, default_value_t = verify::DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Gather numerical evidence on an open problem.
    Explore {
        /// Problem name: op63a, op63b or op65.
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_enum, default_value = "sc")]
        method: MethodArg,
    },
}

/// An error with its exit code.
struct Failure {
    code: i32,
    msg: String,
}

fn bad_input(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_BAD_INPUT,
        msg: msg.to_string(),
    }
}

fn solver(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_SOLVER,
        msg: msg.to_string(),
    }
}

fn from_verify(e: VerifyError) -> Failure {
    match e {
        VerifyError::Solver(_) | VerifyError::CrossMethodMismatch { .. } => solver(e),
        _ => bad_input(e),
    }
}

fn from_pde(e: PdeError) -> Failure {
    match e {
        PdeError::Geometry(_) => bad_input(e),
        _ => solver(e),
    }
}

fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    bad_input(format!("cannot write {}: {e}", path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| solver(format!("cannot write output: {e}")))
}

fn write_table(table: &Table, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, table.to_csv()).map_err(|e| io_failure(p, e)),
        None => out
            .write_all(table.to_csv().as_bytes())
            .map_err(|e| solver(e)),
    }
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad_input(format!(
            "--{name} must be a positive number, got {x}"
        )))
    }
}

fn modulus(
    q: &Quadrilateral,
    method: MethodChoice,
    tol: Option<f64>,
    fem_tol: Option<f64>,
    mesh_dump: Option<&PathBuf>,
    err: &mut dyn Write,
) -> Result<Value, Failure> {
    let tol = tol.map(|t| positive("tol", t)).transpose()?;
    let fem_tol = fem_tol.map(|t| positive("fem-tol", t)).transpose()?;
    let sc_tol = tol.unwrap_or(sc_solver::DEFAULT_TOL);
    let fem_tol = match method {
        MethodChoice::Fem => fem_tol.or(tol),
        _ => fem_tol,
    }
    .unwrap_or(verify::FEM_TOL);

    let sc = || {
        sc_solver::modulus_sc_with(
            q,
            &ScConfig {
                tol: sc_tol,
                ..ScConfig::default()
            },
        )
        .map_err(solver)
    };
    let fem = || -> Result<_, Failure> {
        let poly = MarkedPolygon::from_quad(q);
        let (est, bracket) = pde_oracle::modulus_fem_polygon(
            &poly,
            fem_tol,
            pde_oracle::MAX_LEVELS,
            pde_oracle::DEFAULT_GRADING,
        )
        .map_err(from_pde)?;
        if let Some(path) = mesh_dump {
            let mesh = FemLadder::new(poly, pde_oracle::DEFAULT_GRADING)
                .and_then(|l| l.mesh(bracket.levels - 1))
                .map_err(from_pde)?;
            std::fs::write(path, mesh.to_json()).map_err(|e| io_failure(path, e))?;
        }
        Ok((est, bracket))
    };
    let value = match method {
        MethodChoice::Sc => serde_json::to_value(sc()?).expect("serializable"),
        MethodChoice::Fem => {
            let (est, bracket) = fem()?;
            json!({"value": est.value, "err": est.err, "method": est.method, "bracket": bracket})
        }
        MethodChoice::Both => {
            let s = sc()?;
            let (f, bracket) = fem()?;
            if s.value < bracket.lower - s.err || s.value > bracket.upper + s.err {
                return Err(solver(VerifyError::CrossMethodMismatch {
                    sc: s.value,
                    lower: bracket.lower,
                    upper: bracket.upper,
                }));
            }
            json!({"value": s.value, "err": s.err, "method": "both", "sc": s, "fem": f, "bracket": bracket})
        }
    };
    let v = value["value"].as_f64().unwrap_or(f64::NAN);
    if !(1e-3..=1e3).contains(&v) {
        let _ = writeln!(
            err,
            "warning: modulus {v} is extreme; accuracy may be reduced"
        );
    }
    Ok(value)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Modulus {
            quad,
            method,
            tol,
            fem_tol,
            mesh_dump,
        } => {
            let q = parse_quad(&quad).map_err(bad_input)?;
            let v = modulus(&q, method.into(), tol, fem_tol, mesh_dump.as_ref(), err)?;
            emit(
                out,
                &serde_json::to_string_pretty(&v).expect("serializable"),
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            id,
            seed,
            samples,
            method,
            margin,
        } => {
            let cfg = CheckConfig {
                seed,
                samples,
                method: method.into(),
                margin,
            };
            let report = verify::verify(&id, &cfg).map_err(from_verify)?;
            emit(out, &report.to_json())?;
            Ok(if !report.failures.is_empty() {
                EXIT_VERIFY_FAILED
            } else if !report.solver_faults.is_empty() {
                EXIT_SOLVER
            } else {
                EXIT_OK
            })
        }
        Command::Sweep {
            family,
            params,
            grid,
            out: path,
            method,
        } => {
            let p: Value =
                serde_json::from_str(&params).map_err(|e| bad_input(format!("--params: {e}")))?;
            let table = verify::sweep(&family, &p, grid, method.into()).map_err(from_verify)?;
            write_table(&table, path.as_ref(), out)?;
            Ok(EXIT_OK)
        }
        Command::RegionMap {
            quad,
            vertex,
            grid,
            rho,
            rings,
            theta_min,
            theta_max,
            out: path,
            method,
            margin,
        } => {
            let q = parse_quad(&quad).map_err(bad_input)?;
            if grid == 0 {
                return Err(bad_input("--grid must be positive"));
            }
            let spec = match (theta_min, theta_max) {
                (Some(t0), Some(t1)) => RegionSpec::sector(t0, t1, grid, rho),
                _ => RegionSpec::compass(grid, rho),
            }
            .with_rings(rings);
            let map = verify::region_map(&q, vertex, &spec, method.into(), margin)
                .map_err(from_verify)?;
            write_table(&map.to_table(), path.as_ref(), out)?;
            Ok(EXIT_OK)
        }
        Command::Explore {
            problem,
            seed,
            samples,
            method,
        } => {
            let cfg = CheckConfig {
                seed,
                samples,
                method: method.into(),
                margin: verify::DEFAULT_MARGIN,
            };
            let report = verify::explore(&problem, &cfg).map_err(from_verify)?;
            emit(
                out,
                &serde_json::to_string_pretty(&report).expect("serializable"),
            )?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() {
                EXIT_BAD_INPUT
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["quadmod"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    const SQUARE: &str = r#"{"a":[0,0],"b":[1,0],"c":[1,1],"d":[0,1]}"#;

    #[test]
    fn modulus_of_square() {
        let (code, out, _) = run_str(&["modulus", "--quad", SQUARE]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(v["method"], "sc");
    }

    #[test]
    fn missing_vertex_is_bad_input() {
        let (code, _, err) = run_str(&["modulus", "--quad", r#"{"a":[0,0],"b":[1,0],"c":[1,1]}"#]);
        assert_eq!(code, EXIT_BAD_INPUT);
        assert!(err.contains("missing vertex d"), "{err}");
    }

    #[test]
    fn usage_errors_are_bad_input() {
        assert_eq!(run_str(&["modulus"]).0, EXIT_BAD_INPUT);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_BAD_INPUT);
        assert_eq!(run_str(&["verify", "--id", "nope"]).0, EXIT_BAD_INPUT);
        assert_eq!(
            run_str(&["modulus", "--quad", SQUARE, "--tol", "-1"]).0,
            EXIT_BAD_INPUT
        );
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn sweep_to_stdout() {
        let (code, out, _) = run_str(&[
            "sweep",
            "--family",
            "g",
            "--params",
            r#"{"h":1,"k":0.5,"t_min":-1,"t_max":0}"#,
            "--grid",
            "3",
        ]);
        assert_eq!(code, 0);
        let t = Table::from_csv(&out).unwrap();
        assert_eq!(t.header, vec!["t", "modulus", "err"]);
        assert_eq!(t.rows.len(), 3);
    }
}
