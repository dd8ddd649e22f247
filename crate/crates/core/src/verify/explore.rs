//! Randomized evidence gathering for conjectured inequalities.
//!
//! Nothing here passes or fails. A sample supports the conjecture when its
//! margin exceeds the margin multiple of its error budget, is a candidate
//! counterexample when its margin is negative, and is inconclusive otherwise.
//! Configurations outside the conjecture's hypotheses are skipped.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::sampling::{sample_rng, uniform, SampleRng};
use super::{evaluate, Assertion, CheckConfig, Failure, MethodChoice, Verdict, VerifyError};
use crate::geometry::Point2;
use crate::io::{point_json, quad_to_value};
use crate::transforms::{op63_pair, op65_triple, Op63Variant};

pub const EXPLORE_PROBLEMS: [&str; 3] = ["op63a", "op63b", "op65"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub problem: String,
    pub seed: u64,
    pub samples: usize,
    pub supported: usize,
    pub inconclusive: usize,
    pub candidate_counterexamples: Vec<Failure>,
    pub skipped: usize,
    pub worst_margin: f64,
    pub error_budget: f64,
    pub runtime_ms: u64,
    pub summary: String,
}

enum Outcome {
    Skipped,
    Fault,
    Tested { input: Value, assertion: Assertion },
}

/// `(a, b, 0, 1)` with `Im a, Im b > 0` and `arg b > arg a`.
fn op63_sample(rng: &mut SampleRng, variant: Op63Variant, method: MethodChoice) -> Outcome {
    let a = Point2::new(1.0, 0.0)
        + Point2::from_polar(uniform(rng, 0.2, 2.0), uniform(rng, 0.05, PI - 0.05));
    let b = Point2::from_polar(uniform(rng, 0.2, 2.0), uniform(rng, 0.05, PI - 0.05));
    let Ok((q, qp)) = op63_pair(a, b, variant) else {
        return Outcome::Skipped;
    };
    let (Ok(e), Ok(ep)) = (evaluate(&q, method), evaluate(&qp, method)) else {
        return Outcome::Fault;
    };
    Outcome::Tested {
        input: json!({"quad": quad_to_value(&q), "comparison": quad_to_value(&qp)}),
        assertion: Assertion::greater(ep.value, e.value, e.err + ep.err),
    }
}

/// `c1` lies between `c2` and `c3`; margin is the distance to the nearer end.
fn op65_sample(rng: &mut SampleRng, method: MethodChoice) -> Outcome {
    let (alpha, beta) = (uniform(rng, 0.05, PI - 0.05), uniform(rng, 0.05, PI - 0.05));
    let (r, s) = (uniform(rng, 0.2, 2.0), uniform(rng, 0.2, 2.0));
    let Ok((q, q1, q3)) = op65_triple(alpha, beta, r, s) else {
        return Outcome::Skipped;
    };
    let evals: Result<Vec<_>, _> = [q, q1, q3].iter().map(|x| evaluate(x, method)).collect();
    let Ok(e) = evals else {
        return Outcome::Fault;
    };
    let a = Point2::new(1.0, 0.0) + Point2::from_polar(r, alpha);
    let b = Point2::from_polar(s, beta);
    let (c1, c2, c3) = (e[0].value, e[1].value, e[2].value);
    let (lo, hi) = (c2.min(c3), c2.max(c3));
    let (below, above) = (c1 - lo, hi - c1);
    let budget = e.iter().map(|x| x.err).sum::<f64>();
    let (lhs, rhs) = if below < above { (c1, lo) } else { (hi, c1) };
    Outcome::Tested {
        input: json!({
            "A": point_json(a), "B": point_json(b),
            "quad": quad_to_value(&q), "q1": quad_to_value(&q1), "q3": quad_to_value(&q3),
            "c1": c1, "c2": c2, "c3": c3,
        }),
        assertion: Assertion::greater(lhs, rhs, budget),
    }
}

/// Samples the open problem `problem` (`op63a`, `op63b` or `op65`).
pub fn explore(problem: &str, cfg: &CheckConfig) -> Result<ExploreReport, VerifyError> {
    cfg.validate()?;
    let sample: fn(&mut SampleRng, MethodChoice) -> Outcome = match problem {
        "op63a" => |r, m| op63_sample(r, Op63Variant::A, m),
        "op63b" => |r, m| op63_sample(r, Op63Variant::B, m),
        "op65" => op65_sample,
        _ => return Err(VerifyError::UnknownProblem(problem.into())),
    };
    let start = Instant::now();
    let outcomes: Vec<Outcome> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| sample(&mut sample_rng(cfg.seed, i as u64), cfg.method))
        .collect();
    let mut rep = ExploreReport {
        problem: problem.into(),
        seed: cfg.seed,
        samples: cfg.samples,
        supported: 0,
        inconclusive: 0,
        candidate_counterexamples: Vec::new(),
        skipped: 0,
        worst_margin: f64::NAN,
        error_budget: 0.0,
        runtime_ms: 0,
        summary: String::new(),
    };
    let mut worst = f64::INFINITY;
    let mut faults = 0;
    for o in outcomes {
        match o {
            Outcome::Skipped => rep.skipped += 1,
            Outcome::Fault => faults += 1,
            Outcome::Tested {
                input,
                assertion: a,
            } => {
                if a.margin() < worst {
                    worst = a.margin();
                    rep.worst_margin = a.margin();
                    rep.error_budget = a.budget;
                }
                // any negative margin is reported; support needs the full margin
                let verdict = if a.margin() < 0.0 {
                    Verdict::Fail
                } else if a.margin() > cfg.margin * a.budget {
                    Verdict::Pass
                } else {
                    Verdict::Inconclusive
                };
                match verdict {
                    Verdict::Pass => rep.supported += 1,
                    Verdict::Inconclusive => rep.inconclusive += 1,
                    Verdict::Fail => rep.candidate_counterexamples.push(Failure {
                        input,
                        lhs: a.lhs,
                        rhs: a.rhs,
                        margin: a.margin(),
                    }),
                }
            }
        }
    }
    // solver faults count as skipped samples, and the summary says so
    rep.skipped += faults;
    let tested = rep.samples - rep.skipped;
    let faults_note = if faults > 0 {
        format!(" ({faults} skipped after solver faults)")
    } else {
        String::new()
    };
    rep.summary = if !rep.candidate_counterexamples.is_empty() {
        format!(
            "{} candidate counterexamples among {tested} tested samples{faults_note}",
            rep.candidate_counterexamples.len()
        )
    } else {
        format!(
            "no counterexample: {} of {tested} tested samples support the conjecture, {} inconclusive{faults_note}",
            rep.supported, rep.inconclusive
        )
    };
    rep.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_add_up_and_are_reproducible() {
        let cfg = CheckConfig::new(5, 12);
        let r = explore("op65", &cfg).unwrap();
        assert_eq!(
            r.supported + r.inconclusive + r.candidate_counterexamples.len() + r.skipped,
            r.samples
        );
        let again = explore("op65", &cfg).unwrap();
        assert_eq!(
            (r.supported, r.skipped, r.worst_margin),
            (again.supported, again.skipped, again.worst_margin)
        );
        assert!(matches!(
            explore("op99", &cfg),
            Err(VerifyError::UnknownProblem(_))
        ));
    }
}
