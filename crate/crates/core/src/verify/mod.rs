//! Randomized and grid-based numerical checks of modulus inequalities.
//!
//! Every comparison carries an error budget, the sum of the solver error
//! estimates of the moduli involved. With margin multiplier `m`, a strict
//! inequality `lhs > rhs` passes only when `lhs − rhs > m·budget`, fails when
//! `lhs − rhs < −m·budget` and is inconclusive in between. A non-strict
//! inequality `lhs ≥ rhs` passes when `lhs − rhs ≥ −m·budget`.
//!
//! Sample `i` of a run draws from its own ChaCha stream keyed by `(seed, i)`,
//! so reports are reproducible regardless of thread count.

mod checks;
mod explore;
mod region;
pub mod sampling;
mod sweep;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{GeometryError, Quadrilateral};
use crate::pde_oracle::{self, Bracket, MarkedPolygon, PdeError};
use crate::sc_solver::{self, ScConfig};
use crate::transforms::TransformError;

pub use explore::{explore, ExploreReport, EXPLORE_PROBLEMS};
pub use region::{region_map, slope_2_3, RegionMap, RegionProbe, RegionSpec, SlopeEstimate};
pub use sweep::{sweep, SWEEP_FAMILIES};

/// Default margin multiplier.
pub const DEFAULT_MARGIN: f64 = 3.0;
pub const DEFAULT_SAMPLES: usize = 50;
/// FEM bracket width targeted by the harness.
pub const FEM_TOL: f64 = 5e-3;
/// Deepest FEM level used by the harness.
pub const FEM_MAX_LEVELS: usize = 5;

pub const CHECK_IDS: [&str; 13] = [
    "prop1", "prop2", "th2.1", "cor2", "th3.1", "th4.1", "remark2", "th5.1", "cor5.2", "th5.3",
    "th5.4", "q6.1", "q6.2",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown check id {0:?}")]
    UnknownCheck(String),
    #[error("unknown sweep family {0:?}")]
    UnknownFamily(String),
    #[error("unknown open problem {0:?}")]
    UnknownProblem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("SC value {sc} outside FEM bracket [{lower}, {upper}]")]
    CrossMethodMismatch { sc: f64, lower: f64, upper: f64 },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Solver selection for the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    #[default]
    Sc,
    Fem,
    /// SC value, cross-checked against the FEM bracket.
    Both,
}

impl std::str::FromStr for MethodChoice {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sc" => Ok(MethodChoice::Sc),
            "fem" => Ok(MethodChoice::Fem),
            "both" => Ok(MethodChoice::Both),
            _ => Err(VerifyError::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub samples: usize,
    pub method: MethodChoice,
    pub margin: f64,
}

impl CheckConfig {
    pub fn new(seed: u64, samples: usize) -> Self {
        CheckConfig {
            seed,
            samples,
            method: MethodChoice::Sc,
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn with_method(mut self, method: MethodChoice) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<(), VerifyError> {
        if self.samples == 0 {
            return Err(VerifyError::InvalidConfig(
                "samples must be positive".into(),
            ));
        }
        if !(self.margin >= 1.0 && self.margin.is_finite()) {
            return Err(VerifyError::InvalidConfig(format!(
                "margin {} must be ≥ 1",
                self.margin
            )));
        }
        Ok(())
    }
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig::new(0, DEFAULT_SAMPLES)
    }
}

/// A modulus value with its error budget contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub err: f64,
    pub bracket: Option<Bracket>,
}

fn fem_eval(poly: &MarkedPolygon) -> Result<Eval, VerifyError> {
    let b = match pde_oracle::modulus_fem_polygon(
        poly,
        FEM_TOL,
        FEM_MAX_LEVELS,
        pde_oracle::DEFAULT_GRADING,
    ) {
        Ok((_, b)) => b,
        // a wide bracket is still a valid, if weak, estimate
        Err(PdeError::ToleranceNotReached { bracket, .. }) => bracket,
        Err(e) => return Err(VerifyError::Solver(e.to_string())),
    };
    Ok(Eval {
        value: b.estimate,
        err: b.half_width_err(),
        bracket: Some(b),
    })
}

/// Modulus of `q` by the selected method.
pub fn evaluate(q: &Quadrilateral, method: MethodChoice) -> Result<Eval, VerifyError> {
    let sc = || {
        sc_solver::modulus_sc_with(q, &ScConfig::default())
            .map(|e| Eval {
                value: e.value,
                err: e.err,
                bracket: None,
            })
            .map_err(|e| VerifyError::Solver(e.to_string()))
    };
    match method {
        MethodChoice::Sc => sc(),
        MethodChoice::Fem => fem_eval(&MarkedPolygon::from_quad(q)),
        MethodChoice::Both => {
            let s = sc()?;
            let f = fem_eval(&MarkedPolygon::from_quad(q))?;
            let b = f.bracket.expect("fem bracket");
            if s.value < b.lower - s.err || s.value > b.upper + s.err {
                return Err(VerifyError::CrossMethodMismatch {
                    sc: s.value,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
            Ok(Eval {
                bracket: Some(b),
                ..s
            })
        }
    }
}

/// Modulus of a marked polygon; only the FEM solver applies.
pub fn evaluate_polygon(poly: &MarkedPolygon) -> Result<Eval, VerifyError> {
    fem_eval(poly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `lhs > rhs`
    Greater,
    /// `lhs ≥ rhs`
    GreaterEq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Fail,
    Inconclusive,
    Pass,
}

/// One numerical comparison `lhs (>|≥) rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assertion {
    pub lhs: f64,
    pub rhs: f64,
    pub budget: f64,
    pub relation: Relation,
}

impl Assertion {
    pub fn greater(lhs: f64, rhs: f64, budget: f64) -> Self {
        Assertion {
            lhs,
            rhs,
            budget,
            relation: Relation::Greater,
        }
    }

    pub fn greater_eq(lhs: f64, rhs: f64, budget: f64) -> Self {
        Assertion {
            lhs,
            rhs,
            budget,
            relation: Relation::GreaterEq,
        }
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Distance from the pass threshold; negative unless passing.
    pub fn slack(&self, m: f64) -> f64 {
        match self.relation {
            Relation::Greater => self.margin() - m * self.budget,
            Relation::GreaterEq => self.margin() + m * self.budget,
        }
    }

    pub fn judge(&self, m: f64) -> Verdict {
        let (margin, tol) = (self.margin(), m * self.budget);
        match self.relation {
            Relation::Greater if margin > tol => Verdict::Pass,
            Relation::Greater if margin < -tol => Verdict::Fail,
            Relation::Greater => Verdict::Inconclusive,
            Relation::GreaterEq if margin >= -tol => Verdict::Pass,
            Relation::GreaterEq => Verdict::Fail,
        }
    }
}

/// What a single sample produced.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub input: Value,
    pub result: Result<Vec<Assertion>, String>,
}

impl SampleOutcome {
    pub fn ok(input: Value, assertions: Vec<Assertion>) -> Self {
        SampleOutcome {
            input,
            result: Ok(assertions),
        }
    }

    pub fn fault(input: Value, msg: impl ToString) -> Self {
        SampleOutcome {
            input,
            result: Err(msg.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub input: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverFault {
    pub input: Value,
    pub error: String,
}

/// Outcome of one check run.
///
/// `passes + inconclusive + failures.len() + solver_faults.len() == samples`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_id: String,
    pub seed: u64,
    pub samples: usize,
    pub passes: usize,
    pub inconclusive: usize,
    pub failures: Vec<Failure>,
    pub solver_faults: Vec<SolverFault>,
    /// Margin of the comparison closest to its pass threshold.
    pub worst_margin: f64,
    /// Error budget of that comparison.
    pub error_budget: f64,
    pub runtime_ms: u64,
}

impl Report {
    /// All samples passed and none faulted.
    pub fn all_passed(&self) -> bool {
        self.passes == self.samples
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the wall-clock field, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("runtime_ms");
        v.to_string()
    }
}

/// Runs `sample(rng, index)` for every index in parallel, in index order.
fn run_samples<F>(cfg: &CheckConfig, sample: F) -> Vec<SampleOutcome>
where
    F: Fn(&mut sampling::SampleRng, usize) -> SampleOutcome + Sync,
{
    (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::sample_rng(cfg.seed, i as u64);
            sample(&mut rng, i)
        })
        .collect()
}

fn assemble(
    check_id: &str,
    cfg: &CheckConfig,
    outcomes: Vec<SampleOutcome>,
    start: Instant,
) -> Report {
    let m = cfg.margin;
    let mut report = Report {
        check_id: check_id.to_string(),
        seed: cfg.seed,
        samples: outcomes.len(),
        passes: 0,
        inconclusive: 0,
        failures: Vec::new(),
        solver_faults: Vec::new(),
        worst_margin: f64::INFINITY,
        error_budget: 0.0,
        runtime_ms: 0,
    };
    let mut worst_slack = f64::INFINITY;
    for o in outcomes {
        let assertions = match o.result {
            Ok(a) if !a.is_empty() => a,
            Ok(_) => {
                report.solver_faults.push(SolverFault {
                    input: o.input,
                    error: "no comparisons".into(),
                });
                continue;
            }
            Err(error) => {
                report.solver_faults.push(SolverFault {
                    input: o.input,
                    error,
                });
                continue;
            }
        };
        let worst = assertions
            .iter()
            .min_by(|x, y| x.slack(m).total_cmp(&y.slack(m)))
            .expect("non-empty");
        if worst.slack(m) < worst_slack {
            worst_slack = worst.slack(m);
            report.worst_margin = worst.margin();
            report.error_budget = worst.budget;
        }
        match assertions
            .iter()
            .map(|a| a.judge(m))
            .min()
            .expect("non-empty")
        {
            Verdict::Pass => report.passes += 1,
            Verdict::Inconclusive => report.inconclusive += 1,
            Verdict::Fail => {
                let f = assertions
                    .iter()
                    .filter(|a| a.judge(m) == Verdict::Fail)
                    .min_by(|x, y| x.slack(m).total_cmp(&y.slack(m)))
                    .expect("a failing comparison");
                report.failures.push(Failure {
                    input: o.input,
                    lhs: f.lhs,
                    rhs: f.rhs,
                    margin: f.margin(),
                });
            }
        }
    }
    if !worst_slack.is_finite() {
        report.worst_margin = f64::NAN;
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    report
}

/// Runs the check named `check_id`.
pub fn verify(check_id: &str, cfg: &CheckConfig) -> Result<Report, VerifyError> {
    cfg.validate()?;
    let sampler =
        checks::sampler(check_id).ok_or_else(|| VerifyError::UnknownCheck(check_id.into()))?;
    let start = Instant::now();
    let outcomes = run_samples(cfg, |rng, _| sampler(rng, cfg.method));
    Ok(assemble(check_id, cfg, outcomes, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_policy() {
        let m = 3.0;
        assert_eq!(Assertion::greater(1.0, 0.9, 0.01).judge(m), Verdict::Pass);
        assert_eq!(
            Assertion::greater(1.0, 0.98, 0.01).judge(m),
            Verdict::Inconclusive
        );
        assert_eq!(
            Assertion::greater(1.0, 1.0, 0.0).judge(m),
            Verdict::Inconclusive
        );
        assert_eq!(Assertion::greater(0.9, 1.0, 0.01).judge(m), Verdict::Fail);
        assert_eq!(
            Assertion::greater_eq(1.0, 1.02, 0.01).judge(m),
            Verdict::Pass
        );
        assert_eq!(
            Assertion::greater_eq(1.0, 1.04, 0.01).judge(m),
            Verdict::Fail
        );
    }

    #[test]
    fn unknown_ids_are_rejected() {
        let cfg = CheckConfig::new(1, 2);
        assert!(matches!(
            verify("th9.9", &cfg),
            Err(VerifyError::UnknownCheck(_))
        ));
        assert!(matches!(
            verify("th4.1", &CheckConfig::new(1, 0)),
            Err(VerifyError::InvalidConfig(_))
        ));
    }

    #[test]
    fn every_check_id_has_a_sampler() {
        for id in CHECK_IDS {
            assert!(checks::sampler(id).is_some(), "{id}");
        }
    }

    #[test]
    fn both_methods_agree_on_a_square() {
        let q = Quadrilateral::from_array([
            crate::geometry::Point2::new(0.0, 0.0),
            crate::geometry::Point2::new(1.0, 0.0),
            crate::geometry::Point2::new(1.0, 1.0),
            crate::geometry::Point2::new(0.0, 1.0),
        ])
        .unwrap();
        let e = evaluate(&q, MethodChoice::Both).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        assert!(e.bracket.unwrap().contains(1.0));
    }

    #[test]
    fn assembly_counts_and_worst_margin() {
        let cfg = CheckConfig::new(0, 4);
        let outcomes = vec![
            SampleOutcome::ok(Value::Null, vec![Assertion::greater(2.0, 1.0, 0.1)]),
            SampleOutcome::ok(Value::Null, vec![Assertion::greater(1.0, 1.0, 0.1)]),
            SampleOutcome::ok(
                Value::Null,
                vec![
                    Assertion::greater(1.0, 2.0, 0.1),
                    Assertion::greater(3.0, 1.0, 0.1),
                ],
            ),
            SampleOutcome::fault(Value::Null, "boom"),
        ];
        let r = assemble("x", &cfg, outcomes, Instant::now());
        assert_eq!(
            (
                r.passes,
                r.inconclusive,
                r.failures.len(),
                r.solver_faults.len()
            ),
            (1, 1, 1, 1)
        );
        assert_eq!(r.worst_margin, -1.0);
        assert_eq!(r.error_budget, 0.1);
        assert_eq!(r.failures[0].margin, -1.0);
    }
}
