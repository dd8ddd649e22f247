//! Parameter sweeps over the named quadrilateral families.

use serde_json::Value;

use super::{evaluate, MethodChoice, VerifyError};
use crate::geometry::{tangency_phi0, Quadrilateral};
use crate::io::{get_f64, get_point, ParseError, Table};
use crate::transforms::{
    cor2_quad, g_quad, notch_quad, q1_quad, q2_quad, symmetrize_lambda, RaySideSpec,
    TransformError, TrapezoidSpec,
};

pub const SWEEP_FAMILIES: [&str; 6] = ["qlambda", "q1", "q2", "g", "cor2", "notch"];

fn bad(e: ParseError) -> VerifyError {
    VerifyError::InvalidConfig(e.to_string())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// `n` interior points of the open interval `(lo, hi)`.
fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * (k + 1) as f64 / (n + 1) as f64)
        .collect()
}

type Builder = Box<dyn Fn(f64) -> Result<Quadrilateral, TransformError>>;

/// Parameter name, grid and quad builder for `family`.
fn family(
    name: &str,
    p: &Value,
    n: usize,
) -> Result<(&'static str, Vec<f64>, Builder), VerifyError> {
    let f = |k: &str| get_f64(p, k).map_err(bad);
    Ok(match name {
        "qlambda" => {
            let spec = TrapezoidSpec::new(f("alpha")?, f("beta")?, f("gamma")?, f("delta")?)?;
            (
                "lambda",
                linspace(0.0, 1.0, n),
                Box::new(move |l| symmetrize_lambda(&spec, l).map(|s| s.quad())),
            )
        }
        "q1" => {
            let (beta, gamma) = (f("beta")?, f("gamma")?);
            (
                "y",
                open_grid(-gamma, beta, n),
                Box::new(move |y| q1_quad(y, beta, gamma)),
            )
        }
        "q2" => {
            let spec = RaySideSpec::new(f("phi")?, f("r1")?, f("r2")?)?;
            let (lo, hi) = spec.r_range();
            (
                "r",
                open_grid(lo, hi, n),
                Box::new(move |r| q2_quad(r, &spec)),
            )
        }
        "g" => {
            let (h, k) = (f("h")?, f("k")?);
            (
                "t",
                linspace(f("t_min")?, f("t_max")?, n),
                Box::new(move |t| g_quad(t, h, k)),
            )
        }
        "cor2" => {
            let r = f("r")?;
            let b = get_point(p, "b").map_err(bad)?;
            let phi0 = tangency_phi0(r, b)?;
            (
                "phi",
                linspace(0.0, phi0, n),
                Box::new(move |phi| cor2_quad(r, b, phi)),
            )
        }
        "notch" => {
            let (m, phi) = (f("M")?, f("phi")?);
            (
                "h",
                linspace(0.0, f("h_max")?, n),
                Box::new(move |h| notch_quad(m, phi, h)),
            )
        }
        _ => return Err(VerifyError::UnknownFamily(name.into())),
    })
}

/// Moduli of `family` over a grid of `n` parameter values.
///
/// Columns: the family parameter, `modulus`, `err`.
pub fn sweep(
    name: &str,
    params: &Value,
    n: usize,
    method: MethodChoice,
) -> Result<Table, VerifyError> {
    if n == 0 {
        return Err(VerifyError::InvalidConfig(
            "grid must have at least one point".into(),
        ));
    }
    let (param, grid, build) = family(name, params, n)?;
    let quads: Vec<Quadrilateral> = grid.iter().map(|&t| build(t)).collect::<Result<_, _>>()?;
    let evals: Result<Vec<_>, VerifyError> = {
        use rayon::prelude::*;
        quads.par_iter().map(|q| evaluate(q, method)).collect()
    };
    let mut table = Table::new(&[param, "modulus", "err"]);
    for (t, e) in grid.iter().zip(evals?) {
        table.push(vec![*t, e.value, e.err]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn qlambda_endpoints() {
        let p = json!({"alpha": 0.0, "beta": 1.0, "gamma": 2.0, "delta": 0.5});
        let t = sweep("qlambda", &p, 3, MethodChoice::Sc).unwrap();
        assert_eq!(t.header, vec!["lambda", "modulus", "err"]);
        assert_eq!(t.column("lambda").unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn notch_starts_at_the_rectangle() {
        let p = json!({"M": 2.0, "phi": 0.7, "h_max": 0.2});
        let t = sweep("notch", &p, 3, MethodChoice::Sc).unwrap();
        assert!((t.rows[0][1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn diagnostics() {
        assert!(matches!(
            sweep("spiral", &json!({}), 3, MethodChoice::Sc),
            Err(VerifyError::UnknownFamily(_))
        ));
        let e = sweep("g", &json!({"h": 1.0}), 3, MethodChoice::Sc).unwrap_err();
        assert!(e.to_string().contains("field k"));
    }
}
