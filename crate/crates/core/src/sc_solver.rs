//! Schwarz–Christoffel parameter problem for quadrilaterals.
//!
//! The upper half-plane is mapped onto the quadrilateral with prevertices
//! `(0, 1, x, ∞) ↦ (a, b, c, d)`. The single unknown `x` is fixed by the
//! side ratio `|bc|/|ab|`; the ratio `|cd|/|ab|` is left over as a residual.
//! The unknown is carried as `x − 1 = e^s` so that `x` arbitrarily close to 1
//! keeps full relative precision.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{interior_angles, GeometryError, Quadrilateral};
use crate::special_functions::{gauss_jacobi_rule, modulus_from_prevertex, QuadratureRule};
use crate::{Method, ModulusEstimate};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_RULE_SIZE: usize = 24;

/// Initial search range for `s = ln(x − 1)`.
pub const S_RANGE: (f64, f64) = (-40.0, 40.0);
/// Outer limit when the initial range does not straddle the target; keeps
/// `e^s` finite and nonzero.
pub const S_LIMIT: f64 = 700.0;

const BISECTION_WIDTH: f64 = 1e-3;
const NEWTON_MAX_ITER: usize = 60;
const DERIV_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScError {
    #[error("side-ratio function does not straddle the target on s ∈ [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("closure residual {residual:e} exceeds {limit:e}")]
    ClosureFailure { residual: f64, limit: f64 },
    #[error("exponent {0} ≤ −1 is not integrable")]
    NonIntegrable(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Prevertex interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// `(0, 1)`, image side `ab`.
    ZeroOne,
    /// `(1, x)`, image side `bc`.
    OneX,
    /// `(x, ∞)`, image side `cd`.
    XInf,
}

/// Angles as multiples of π and the four side lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScProblem {
    alphas: [f64; 4],
    sides: [f64; 4],
}

impl ScProblem {
    pub fn from_quad(q: &Quadrilateral) -> Self {
        let ang = interior_angles(q);
        ScProblem {
            alphas: ang.map(|t| t / PI),
            sides: q.side_lengths(),
        }
    }

    /// `alphas` must sum to 2 and lie in `(0, 2)`.
    pub fn new(alphas: [f64; 4], sides: [f64; 4]) -> Result<Self, ScError> {
        let sum: f64 = alphas.iter().sum();
        if (sum - 2.0).abs() > 1e-12 {
            return Err(GeometryError::OutOfRange(format!("angle sum {sum}π ≠ 2π")).into());
        }
        for &a in &alphas {
            if a <= 0.0 {
                return Err(ScError::NonIntegrable(a - 1.0));
            }
            if a >= 2.0 {
                return Err(GeometryError::OutOfRange(format!("angle {a}π")).into());
            }
        }
        if sides.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(GeometryError::OutOfRange("side lengths must be positive".into()).into());
        }
        Ok(ScProblem { alphas, sides })
    }

    pub fn alphas(&self) -> [f64; 4] {
        self.alphas
    }

    pub fn sides(&self) -> [f64; 4] {
        self.sides
    }

    /// Integrand exponents `α_j − 1`.
    pub fn exponents(&self) -> [f64; 4] {
        self.alphas.map(|a| a - 1.0)
    }
}

/// Endpoint rules for one problem, built once and reused for every `x`.
struct Rules {
    legendre: QuadratureRule,
    /// Weight `(1 + s)^{e_j}`: singularity at the left end of a piece.
    left: [QuadratureRule; 4],
    /// Weight `(1 − s)^{e_j}`: singularity at the right end of a piece.
    right: [QuadratureRule; 4],
}

impl Rules {
    fn new(exps: [f64; 4], n: usize) -> Result<Self, ScError> {
        if let Some(&e) = exps.iter().find(|&&e| e <= -1.0) {
            return Err(ScError::NonIntegrable(e));
        }
        let make = |a: f64, b: f64| {
            gauss_jacobi_rule(n, a, b).map_err(|_| ScError::NonIntegrable(a.min(b)))
        };
        let left = [
            make(0.0, exps[0])?,
            make(0.0, exps[1])?,
            make(0.0, exps[2])?,
            make(0.0, exps[3])?,
        ];
        let right = [
            make(exps[0], 0.0)?,
            make(exps[1], 0.0)?,
            make(exps[2], 0.0)?,
            make(exps[3], 0.0)?,
        ];
        Ok(Rules {
            legendre: make(0.0, 0.0)?,
            left,
            right,
        })
    }
}

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    /// Adds `e^v`.
    fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// `ln Σ w_i e^{f(t_i)}` for positive weights.
fn ln_rule(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = rule.nodes().iter().map(|&t| f(t)).collect();
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = vals
        .iter()
        .zip(rule.weights())
        .map(|(&v, &w)| w * (v - m).exp())
        .sum();
    m + s.ln()
}

/// Singular integrand on `[0, len]` of the form `dl^{el} dr^{er} g(dl, dr)`,
/// where `dl`, `dr` are the distances to the two ends and `g` is analytic on
/// the interval with nearest singularity `near_left` beyond the left end and
/// `near_right` beyond the right end. Everything is carried in logarithms so
/// that extreme prevertex spreads neither overflow nor underflow.
struct SingularInterval<'r, G: Fn(f64, f64) -> f64> {
    len: f64,
    el: f64,
    er: f64,
    left_rule: &'r QuadratureRule,
    right_rule: &'r QuadratureRule,
    legendre: &'r QuadratureRule,
    near_left: f64,
    near_right: f64,
    /// `ln g(dl, dr)`.
    ln_g: G,
}

impl<G: Fn(f64, f64) -> f64> SingularInterval<'_, G> {
    /// `ln ∫_0^len dl^{el} dr^{er} g`.
    fn ln_integrate(&self) -> f64 {
        let len = self.len;
        let half = 0.5 * len;
        let hl = half.min(self.near_left);
        let hr = half.min(self.near_right);
        let mut acc = LogSum::new();

        // ∫_0^hl with dl = sl(1 + s), the factor dl^{el} in the weight
        let sl = 0.5 * hl;
        acc.add(
            (1.0 + self.el) * sl.ln()
                + ln_rule(self.left_rule, |s| {
                    let dl = sl * (1.0 + s);
                    let dr = len - dl;
                    self.er * dr.ln() + (self.ln_g)(dl, dr)
                }),
        );
        let sr = 0.5 * hr;
        acc.add(
            (1.0 + self.er) * sr.ln()
                + ln_rule(self.right_rule, |s| {
                    let dr = sr * (1.0 - s);
                    let dl = len - dr;
                    self.el * dl.ln() + (self.ln_g)(dl, dr)
                }),
        );

        // doubling pieces from each end up to the midpoint
        let full = |dl: f64, dr: f64| self.el * dl.ln() + self.er * dr.ln() + (self.ln_g)(dl, dr);
        let mut lo = hl;
        while lo < half {
            let hi = (2.0 * lo).min(half);
            acc.add(self.ln_legendre_piece(lo, hi, |p| full(p, len - p)));
            lo = hi;
        }
        let mut lo = hr;
        while lo < half {
            let hi = (2.0 * lo).min(half);
            acc.add(self.ln_legendre_piece(lo, hi, |p| full(len - p, p)));
            lo = hi;
        }
        acc.ln()
    }

    fn ln_legendre_piece(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        h.ln() + ln_rule(self.legendre, |s| f(c + h * s))
    }
}

/// `ln` of the side integral over `which`.
fn ln_integrate_interval(exps: [f64; 4], rules: &Rules, xm1: f64, which: Interval) -> f64 {
    let [e1, e2, e3, e4] = exps;
    let leg = &rules.legendre;
    match which {
        Interval::ZeroOne => SingularInterval {
            len: 1.0,
            el: e1,
            er: e2,
            left_rule: &rules.left[0],
            right_rule: &rules.right[1],
            legendre: leg,
            near_left: f64::INFINITY,
            near_right: xm1,
            // |t − x| = xm1 + (1 − t)
            ln_g: |_dl: f64, dr: f64| e3 * (xm1 + dr).ln(),
        }
        .ln_integrate(),
        Interval::OneX => SingularInterval {
            len: xm1,
            el: e2,
            er: e3,
            left_rule: &rules.left[1],
            right_rule: &rules.right[2],
            legendre: leg,
            near_left: 1.0,
            near_right: f64::INFINITY,
            ln_g: |dl: f64, _dr: f64| e1 * dl.ln_1p(),
        }
        .ln_integrate(),
        Interval::XInf => {
            // t = x + u/(1 − u): the Jacobian folds into (1 − u)^{e4}
            let near_right = if xm1 > 1.0 {
                (1.0 / xm1).min(1.0 / (xm1 - 1.0))
            } else {
                1.0 / xm1
            };
            let near_left = if xm1 < 1.0 {
                xm1 / (1.0 - xm1)
            } else {
                f64::INFINITY
            };
            let x = 1.0 + xm1;
            SingularInterval {
                len: 1.0,
                el: e3,
                er: e4,
                left_rule: &rules.left[2],
                right_rule: &rules.right[3],
                legendre: leg,
                near_left,
                near_right,
                ln_g: |u: f64, v: f64| e1 * (x * v + u).ln() + e2 * (xm1 * v + u).ln(),
            }
            .ln_integrate()
        }
    }
}

/// Unnormalized image length of the side belonging to `which`.
pub fn side_integral(
    alphas: [f64; 4],
    x3: f64,
    which: Interval,
    rule_size: usize,
) -> Result<f64, ScError> {
    if !(x3 > 1.0) {
        return Err(GeometryError::OutOfRange(format!("x3 = {x3} must exceed 1")).into());
    }
    side_integral_xm1(alphas, x3 - 1.0, which, rule_size)
}

/// As [`side_integral`] with `x3 − 1` passed directly.
pub fn side_integral_xm1(
    alphas: [f64; 4],
    xm1: f64,
    which: Interval,
    rule_size: usize,
) -> Result<f64, ScError> {
    side_integral_ln(alphas, xm1, which, rule_size).map(f64::exp)
}

/// Natural logarithm of [`side_integral_xm1`]; finite even where the
/// integral itself would overflow or underflow.
pub fn side_integral_ln(
    alphas: [f64; 4],
    xm1: f64,
    which: Interval,
    rule_size: usize,
) -> Result<f64, ScError> {
    if !(xm1 > 0.0 && xm1.is_finite()) {
        return Err(GeometryError::OutOfRange(format!("x3 − 1 = {xm1} must be positive")).into());
    }
    let exps = alphas.map(|a| a - 1.0);
    let rules = Rules::new(exps, rule_size)?;
    Ok(ln_integrate_interval(exps, &rules, xm1, which))
}

/// Solved parameter problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScSolution {
    /// `x3 − 1`, kept separately since `x3` itself rounds to 1 near collapse.
    pub x3_minus_1: f64,
    pub closure_residual: f64,
    pub modulus: f64,
    /// Root-finder iterations (bisection plus Newton).
    pub iterations: usize,
}

impl ScSolution {
    pub fn x3(&self) -> f64 {
        1.0 + self.x3_minus_1
    }

    pub fn prevertices(&self) -> [f64; 3] {
        [0.0, 1.0, self.x3()]
    }
}

/// Solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScConfig {
    pub tol: f64,
    pub rule_size: usize,
}

impl Default for ScConfig {
    fn default() -> Self {
        ScConfig {
            tol: DEFAULT_TOL,
            rule_size: DEFAULT_RULE_SIZE,
        }
    }
}

/// Side used to pin down `x`; the other one becomes the closure check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinnedSide {
    /// Solve `|bc|/|ab|`, check `|cd|/|ab|`.
    Bc,
    /// Solve `|cd|/|ab|`, check `|bc|/|ab|`. Used when `d` is (nearly)
    /// straight, which makes the triangle `abc` independent of `x`.
    Cd,
}

struct RatioFn<'a> {
    exps: [f64; 4],
    rules: &'a Rules,
    side: Interval,
    log_target: f64,
}

impl RatioFn<'_> {
    /// `ln(I_side / I_AB) − ln(target)` at `x − 1 = e^s`.
    fn eval(&self, s: f64) -> f64 {
        let xm1 = s.exp();
        let ab = ln_integrate_interval(self.exps, self.rules, xm1, Interval::ZeroOne);
        let other = ln_integrate_interval(self.exps, self.rules, xm1, self.side);
        other - ab - self.log_target
    }
}

fn between(v: f64, a: f64, b: f64) -> bool {
    v >= a.min(b) && v <= a.max(b)
}

/// Monotone root of `f` in `s`: bracket, bisect to `BISECTION_WIDTH`, then
/// safeguarded Newton. Returns the root and the number of evaluations.
fn find_root(f: &RatioFn) -> Result<(f64, usize), ScError> {
    let (mut lo, mut hi) = S_RANGE;
    let mut flo = f.eval(lo);
    let mut fhi = f.eval(hi);
    let mut iterations = 2;
    let no_bracket = |lo, hi| ScError::NoBracket { lo, hi };
    if !(flo.is_finite() && fhi.is_finite()) || flo == fhi {
        return Err(no_bracket(lo, hi));
    }
    // extend outward along the monotone direction until the target is straddled
    while flo.signum() == fhi.signum() {
        let extend_low = flo * (fhi - flo) > 0.0;
        if extend_low {
            if lo <= -S_LIMIT {
                return Err(no_bracket(lo, hi));
            }
            let next = (2.0 * lo).max(-S_LIMIT);
            let fnext = f.eval(next);
            iterations += 1;
            if !fnext.is_finite() || !between(flo, fnext, fhi) {
                return Err(no_bracket(next, hi));
            }
            hi = lo;
            fhi = flo;
            lo = next;
            flo = fnext;
        } else {
            if hi >= S_LIMIT {
                return Err(no_bracket(lo, hi));
            }
            let next = (2.0 * hi).min(S_LIMIT);
            let fnext = f.eval(next);
            iterations += 1;
            if !fnext.is_finite() || !between(fhi, flo, fnext) {
                return Err(no_bracket(lo, next));
            }
            lo = hi;
            flo = fhi;
            hi = next;
            fhi = fnext;
        }
    }

    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f.eval(mid);
        iterations += 1;
        if !between(fm, flo, fhi) {
            return Err(no_bracket(lo, hi));
        }
        if fm == 0.0 {
            return Ok((mid, iterations));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }

    let mut s = lo - flo * (hi - lo) / (fhi - flo);
    for _ in 0..NEWTON_MAX_ITER {
        let fs = f.eval(s);
        iterations += 1;
        if fs == 0.0 {
            break;
        }
        if fs.signum() == flo.signum() {
            lo = s;
            flo = fs;
        } else {
            hi = s;
        }
        if hi - lo < 4.0 * f64::EPSILON * s.abs().max(1.0) {
            break;
        }
        let deriv = (f.eval(s + DERIV_STEP) - f.eval(s - DERIV_STEP)) / (2.0 * DERIV_STEP);
        iterations += 2;
        let mut next = s - fs / deriv;
        if !(deriv.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - s).abs();
        s = next;
        if step < 1e-15 * s.abs().max(1.0) {
            break;
        }
    }
    Ok((s, iterations))
}

/// Solves the parameter problem pinning the given side.
pub fn solve_problem_pinned(
    p: &ScProblem,
    cfg: &ScConfig,
    pinned: PinnedSide,
) -> Result<ScSolution, ScError> {
    let exps = p.exponents();
    let rules = Rules::new(exps, cfg.rule_size)?;
    let [ab, bc, cd, _] = p.sides;
    let (side, target, check, check_target) = match pinned {
        PinnedSide::Bc => (Interval::OneX, bc / ab, Interval::XInf, cd / ab),
        PinnedSide::Cd => (Interval::XInf, cd / ab, Interval::OneX, bc / ab),
    };
    let f = RatioFn {
        exps,
        rules: &rules,
        side,
        log_target: target.ln(),
    };
    let (s, iterations) = find_root(&f)?;

    let xm1 = s.exp();
    let ln_ab = ln_integrate_interval(exps, &rules, xm1, Interval::ZeroOne);
    let ln_check = ln_integrate_interval(exps, &rules, xm1, check);
    let closure_residual = (ln_check - ln_ab - check_target.ln()).exp_m1().abs();
    let limit = 100.0 * cfg.tol;
    if !(closure_residual <= limit) {
        return Err(ScError::ClosureFailure {
            residual: closure_residual,
            limit,
        });
    }
    Ok(ScSolution {
        x3_minus_1: xm1,
        closure_residual,
        modulus: modulus_from_prevertex(xm1),
        iterations,
    })
}

/// Solves the parameter problem, pinning `bc` and falling back to `cd` when
/// that fails to bracket or to close.
pub fn solve_problem(p: &ScProblem, cfg: &ScConfig) -> Result<ScSolution, ScError> {
    match solve_problem_pinned(p, cfg, PinnedSide::Bc) {
        Ok(s) => Ok(s),
        Err(e @ (ScError::NoBracket { .. } | ScError::ClosureFailure { .. })) => {
            solve_problem_pinned(p, cfg, PinnedSide::Cd).map_err(|_| e)
        }
        Err(e) => Err(e),
    }
}

/// Prevertex `x3` and closure residual for `q`.
pub fn solve_prevertex(q: &Quadrilateral, tol: f64) -> Result<ScSolution, ScError> {
    solve_problem(
        &ScProblem::from_quad(q),
        &ScConfig {
            tol,
            ..ScConfig::default()
        },
    )
}

/// Modulus with an error estimate from rule-size doubling and closure.
pub fn modulus_sc_with(q: &Quadrilateral, cfg: &ScConfig) -> Result<ModulusEstimate, ScError> {
    let p = ScProblem::from_quad(q);
    let coarse = solve_problem(&p, cfg)?;
    let fine = solve_problem(
        &p,
        &ScConfig {
            rule_size: 2 * cfg.rule_size,
            ..*cfg
        },
    )?;
    let m = fine.modulus;
    let err = (coarse.modulus - m).abs() + fine.closure_residual * m + 1e-14 * m;
    Ok(ModulusEstimate {
        value: m,
        method: Method::Sc,
        err,
    })
}

/// `M(Q; a, b, c, d)` via Schwarz–Christoffel.
pub fn modulus_sc(q: &Quadrilateral, tol: f64) -> Result<ModulusEstimate, ScError> {
    modulus_sc_with(
        q,
        &ScConfig {
            tol,
            ..ScConfig::default()
        },
    )
}
