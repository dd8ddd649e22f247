//! Quadrilateral families and the transformations compared by the
//! inequalities: polarization, continuous symmetrization, linear averaging,
//! side-rotation families and the comparison constructions of the open
//! problems.
//!
//! Every constructor validates the resulting polygon at runtime.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    area, polarization_admissible, segment_distance, validate, GeometryError, Point2, Quadrilateral,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("degenerate quadrilateral: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn quad_or_degenerate(v: [Point2; 4]) -> Result<Quadrilateral, TransformError> {
    validate(v).map_err(|e| match e {
        GeometryError::DegenerateVertices(x, y) => {
            TransformError::Degenerate(format!("vertices {x} and {y} coincide"))
        }
        other => TransformError::Geometry(other),
    })
}

fn quad_or_invalid(v: [Point2; 4]) -> Result<Quadrilateral, TransformError> {
    validate(v).map_err(|e| TransformError::InvalidConfig(e.to_string()))
}

/// Parameters of `(1 + iα, 1 + iβ, iγ, iδ)`: vertical sides on `x = 1` and
/// `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl TrapezoidSpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self, TransformError> {
        if ![alpha, beta, gamma, delta].iter().all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite.into());
        }
        if !(alpha < beta && gamma > delta) {
            return Err(TransformError::OutOfRange(format!(
                "need alpha < beta and gamma > delta, got ({alpha}, {beta}, {gamma}, {delta})"
            )));
        }
        Ok(TrapezoidSpec {
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    pub fn quad(&self) -> Quadrilateral {
        validate([
            pt(1.0, self.alpha),
            pt(1.0, self.beta),
            pt(0.0, self.gamma),
            pt(0.0, self.delta),
        ])
        .expect("vertical sides with alpha < beta, gamma > delta bound a convex quadrilateral")
    }

    /// `((β − α) + (γ − δ)) / 2`.
    pub fn area(&self) -> f64 {
        0.5 * ((self.beta - self.alpha) + (self.gamma - self.delta))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }
}

/// Trapezoid specs with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedFamily {
    specs: Vec<TrapezoidSpec>,
    weights: Vec<f64>,
}

impl WeightedFamily {
    pub fn new(specs: Vec<TrapezoidSpec>, weights: Vec<f64>) -> Result<Self, TransformError> {
        if specs.is_empty() || specs.len() != weights.len() {
            return Err(TransformError::OutOfRange(
                "need one weight per spec, at least one spec".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(TransformError::OutOfRange(
                "weights must be positive".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(TransformError::OutOfRange(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(WeightedFamily { specs, weights })
    }

    pub fn specs(&self) -> &[TrapezoidSpec] {
        &self.specs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Continuous symmetrization: shifts both vertical sides toward symmetric
/// position about the real axis; `λ = 1` is Steiner symmetrization.
pub fn symmetrize_lambda(s: &TrapezoidSpec, lambda: f64) -> Result<TrapezoidSpec, TransformError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(TransformError::OutOfRange(format!(
            "λ = {lambda} outside [0, 1]"
        )));
    }
    let m1 = lambda * (s.alpha + s.beta) / 2.0;
    let m2 = lambda * (s.gamma + s.delta) / 2.0;
    Ok(TrapezoidSpec {
        alpha: s.alpha - m1,
        beta: s.beta - m1,
        gamma: s.gamma - m2,
        delta: s.delta - m2,
    })
}

/// Componentwise weighted mean of the specs.
pub fn average(f: &WeightedFamily) -> TrapezoidSpec {
    let mut acc = [0.0; 4];
    for (s, &w) in f.specs.iter().zip(&f.weights) {
        for (a, x) in acc.iter_mut().zip(s.as_array()) {
            *a += w * x;
        }
    }
    TrapezoidSpec {
        alpha: acc[0],
        beta: acc[1],
        gamma: acc[2],
        delta: acc[3],
    }
}

/// Reflects `b` and `c` across the mirror axis and swaps them:
/// `(a, b, c, d) ↦ (a, c̄, b̄, d)` in the canonical frame.
pub fn polarize(q: &Quadrilateral) -> Result<Quadrilateral, TransformError> {
    let pf = polarization_admissible(q)?;
    let f = &pf.frame;
    Ok(validate([
        q.a(),
        f.reflect(q.c()),
        f.reflect(q.b()),
        q.d(),
    ])?)
}

/// `(1 + iy, 1 + iβ, iγ, −iy)`, defined for `0 < γ ≤ β` and `y ∈ (−γ, β)`.
pub fn q1_quad(y: f64, beta: f64, gamma: f64) -> Result<Quadrilateral, TransformError> {
    if !(gamma > 0.0 && gamma <= beta) {
        return Err(TransformError::OutOfRange(format!(
            "need 0 < gamma ≤ beta, got γ={gamma}, β={beta}"
        )));
    }
    if y == -gamma {
        return Err(TransformError::Degenerate(
            "y = −γ: c and d coincide".into(),
        ));
    }
    if !(y > -gamma && y < beta) {
        return Err(TransformError::OutOfRange(format!(
            "y = {y} outside (−{gamma}, {beta})"
        )));
    }
    quad_or_degenerate([pt(1.0, y), pt(1.0, beta), pt(0.0, gamma), pt(0.0, -y)])
}

/// Two sides on the rays `arg z = ∓φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySideSpec {
    pub phi: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RaySideSpec {
    pub fn new(phi: f64, r1: f64, r2: f64) -> Result<Self, TransformError> {
        if !(phi > 0.0 && phi < PI / 2.0) {
            return Err(TransformError::OutOfRange(format!(
                "φ = {phi} outside (0, π/2)"
            )));
        }
        if !(1.0 / phi.cos() < r1 && r1 <= r2) {
            return Err(TransformError::OutOfRange(format!(
                "need 1/cos φ < r1 ≤ r2, got r1={r1}, r2={r2}"
            )));
        }
        Ok(RaySideSpec { phi, r1, r2 })
    }

    /// `r*(r) = 1 / (2 cos φ − 1/r)`; the pairing is an involution.
    pub fn r_star(&self, r: f64) -> f64 {
        1.0 / (2.0 * self.phi.cos() - 1.0 / r)
    }

    /// Open range of `r` for which `q2_quad` is defined.
    pub fn r_range(&self) -> (f64, f64) {
        (1.0 / (2.0 * self.phi.cos() - 1.0 / self.r1), self.r2)
    }
}

/// `(r e^{−iφ}, r2 e^{−iφ}, r1 e^{iφ}, r*(r) e^{iφ})`.
pub fn q2_quad(r: f64, s: &RaySideSpec) -> Result<Quadrilateral, TransformError> {
    let inv = 1.0 / r;
    let (lo, hi) = (1.0 / s.r2, 2.0 * s.phi.cos() - 1.0 / s.r1);
    if !(r > 0.0 && inv > lo && inv < hi) {
        return Err(TransformError::OutOfRange(format!(
            "1/r = {inv} outside ({lo}, {hi})"
        )));
    }
    let rs = s.r_star(r);
    Ok(validate([
        Point2::from_polar(r, -s.phi),
        Point2::from_polar(s.r2, -s.phi),
        Point2::from_polar(s.r1, s.phi),
        Point2::from_polar(rs, s.phi),
    ])?)
}

/// `(M, M + i, i, h e^{iφ})`: the rectangle with its corner at 0 pushed
/// inward along direction `φ`.
pub fn notch_quad(m: f64, phi: f64, h: f64) -> Result<Quadrilateral, TransformError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(TransformError::OutOfRange(format!(
            "M = {m} must be positive"
        )));
    }
    if !(phi > 0.0 && phi <= PI / 2.0) {
        return Err(TransformError::OutOfRange(format!(
            "φ = {phi} outside (0, π/2]"
        )));
    }
    if !(h >= 0.0 && h < m.min(1.0) / 2.0) {
        return Err(TransformError::OutOfRange(format!(
            "h = {h} outside [0, {})",
            m.min(1.0) / 2.0
        )));
    }
    Ok(validate([
        pt(m, 0.0),
        pt(m, 1.0),
        pt(0.0, 1.0),
        Point2::from_polar(h, phi),
    ])?)
}

/// `(1 + i(t + 2k), ih, −ih, 1 + it)`, area `h + k`.
pub fn g_quad(t: f64, h: f64, k: f64) -> Result<Quadrilateral, TransformError> {
    if !(h > 0.0 && k > 0.0) {
        return Err(TransformError::OutOfRange(format!(
            "need h, k > 0, got h={h}, k={k}"
        )));
    }
    Ok(validate([
        pt(1.0, t + 2.0 * k),
        pt(0.0, h),
        pt(0.0, -h),
        pt(1.0, t),
    ])?)
}

/// `(1 + r e^{iφ}, b, 0, 1)`: the vertex `a` turns around 1.
pub fn cor2_quad(r: f64, b: Point2, phi: f64) -> Result<Quadrilateral, TransformError> {
    Ok(validate([
        pt(1.0, 0.0) + Point2::from_polar(r, phi),
        b,
        Point2::ORIGIN,
        pt(1.0, 0.0),
    ])?)
}

/// How the comparison quadrilateral's offset `t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op63Variant {
    /// Equal areas.
    A,
    /// Distance between the segments `[0, b]` and `[1, a]`.
    B,
}

/// `(a, b, 0, 1)` and `(t + ik, ih, −ih, t − ik)` with `2h = |b|`, `2k = |a − 1|`.
pub fn op63_pair(
    a: Point2,
    b: Point2,
    variant: Op63Variant,
) -> Result<(Quadrilateral, Quadrilateral), TransformError> {
    if !(a.y > 0.0 && b.y > 0.0) {
        return Err(TransformError::InvalidConfig(
            "need Im a > 0 and Im b > 0".into(),
        ));
    }
    if !(b.arg() > a.arg()) {
        return Err(TransformError::InvalidConfig("need arg b > arg a".into()));
    }
    let q = quad_or_invalid([a, b, Point2::ORIGIN, pt(1.0, 0.0)])?;
    let h = b.norm() / 2.0;
    let k = (a - pt(1.0, 0.0)).norm() / 2.0;
    let t = match variant {
        Op63Variant::A => area(&q) / (h + k),
        Op63Variant::B => segment_distance(Point2::ORIGIN, b, pt(1.0, 0.0), a),
    };
    if !(t > 0.0) {
        return Err(TransformError::InvalidConfig(
            "segments [0,b] and [1,a] meet".into(),
        ));
    }
    let qp = quad_or_invalid([pt(t, k), pt(0.0, h), pt(0.0, -h), pt(t, -k)])?;
    Ok((q, qp))
}

/// `Q = (A, B, 0, 1)`, `Q1 = (A, A − 1, 0, 1)`, `Q3 = (A, B, 0, A − B)` with
/// `A = 1 + r e^{iα}`, `B = s e^{iβ}`.
pub fn op65_triple(
    alpha: f64,
    beta: f64,
    r: f64,
    s: f64,
) -> Result<(Quadrilateral, Quadrilateral, Quadrilateral), TransformError> {
    if !(alpha > 0.0 && alpha < PI && beta > 0.0 && beta < PI) {
        return Err(TransformError::InvalidConfig(
            "α and β must lie in (0, π)".into(),
        ));
    }
    if !(r > 0.0 && s > 0.0) {
        return Err(TransformError::InvalidConfig(
            "r and s must be positive".into(),
        ));
    }
    let a = pt(1.0, 0.0) + Point2::from_polar(r, alpha);
    let b = Point2::from_polar(s, beta);
    if !(b.arg() > a.arg()) {
        return Err(TransformError::InvalidConfig("need arg B > arg A".into()));
    }
    let one = pt(1.0, 0.0);
    let q = quad_or_invalid([a, b, Point2::ORIGIN, one])?;
    let q1 = quad_or_invalid([a, a - one, Point2::ORIGIN, one])?;
    let q3 = quad_or_invalid([a, b, Point2::ORIGIN, a - b])?;
    Ok((q, q1, q3))
}

/// Trapezoid, its Steiner symmetrization, the polarized parallelogram and the
/// symmetrized rectangle; all four have the same area.
pub fn remark2_chain(s: &TrapezoidSpec) -> Result<Vec<Quadrilateral>, TransformError> {
    let sym = symmetrize_lambda(s, 1.0)?;
    let p = sym.beta;
    let q = sym.gamma;
    // reflection in x = 1/2 of the symmetric trapezoid (1 − ip, 1 + ip, iq, −iq)
    // exchanges b and c; the result is again a trapezoid spec
    let para = TrapezoidSpec::new(-p, q, p, -q)?;
    let rect = symmetrize_lambda(&para, 1.0)?;
    Ok(vec![s.quad(), sym.quad(), para.quad(), rect.quad()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GEOM_TOL;

    fn close(p: Point2, q: Point2) -> bool {
        p.dist(q) < 1e-12
    }

    fn spec(a: f64, b: f64, c: f64, d: f64) -> TrapezoidSpec {
        TrapezoidSpec::new(a, b, c, d).unwrap()
    }

    #[test]
    fn polarize_parallel_example() {
        let q = validate([pt(-2.0, -1.0), pt(2.0, -1.0), pt(1.0, 1.0), pt(-1.0, 1.0)]).unwrap();
        let p = polarize(&q).unwrap();
        let want = [pt(-2.0, -1.0), pt(1.0, -1.0), pt(2.0, 1.0), pt(-1.0, 1.0)];
        assert!(
            p.vertices().iter().zip(want).all(|(&x, y)| close(x, y)),
            "{p:?}"
        );
        assert!((area(&p) - area(&q)).abs() < 1e-12);
    }

    #[test]
    fn polarize_symmetric_trapezoid() {
        let q = validate([pt(1.0, -1.0), pt(1.0, 1.0), pt(0.0, 2.0), pt(0.0, -2.0)]).unwrap();
        let p = polarize(&q).unwrap();
        let want = [pt(1.0, -1.0), pt(1.0, 2.0), pt(0.0, 1.0), pt(0.0, -2.0)];
        assert!(
            p.vertices().iter().zip(want).all(|(&x, y)| close(x, y)),
            "{p:?}"
        );
    }

    #[test]
    fn polarize_square_rejected() {
        let q = validate([pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]).unwrap();
        assert!(matches!(
            polarize(&q),
            Err(TransformError::Geometry(GeometryError::NotAdmissible(_)))
        ));
    }

    #[test]
    fn polarize_ray_case_preserves_axis_distances() {
        let phi = PI / 6.0;
        let q = validate([
            Point2::from_polar(1.0, -phi),
            Point2::from_polar(3.0, -phi),
            Point2::from_polar(2.0, phi),
            Point2::from_polar(1.5, phi),
        ])
        .unwrap();
        let p = polarize(&q).unwrap();
        let mut before: Vec<f64> = q.vertices().iter().map(|v| v.y.abs()).collect();
        let mut after: Vec<f64> = p.vertices().iter().map(|v| v.y.abs()).collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_examples() {
        let s = spec(0.0, 2.0, 3.0, 1.0);
        assert_eq!(
            symmetrize_lambda(&s, 1.0).unwrap().as_array(),
            [-1.0, 1.0, 1.0, -1.0]
        );
        assert_eq!(symmetrize_lambda(&s, 0.0).unwrap(), s);
        assert_eq!(
            symmetrize_lambda(&s, 0.5).unwrap().as_array(),
            [-0.5, 1.5, 2.0, 0.0]
        );
        assert!(symmetrize_lambda(&s, 1.5).is_err());
    }

    #[test]
    fn average_examples() {
        let s = spec(0.0, 2.0, 3.0, 1.0);
        let f = WeightedFamily::new(vec![s], vec![1.0]).unwrap();
        assert_eq!(average(&f), s);
        let f = WeightedFamily::new(vec![s, spec(-1.0, 1.0, 2.0, 0.0)], vec![0.5, 0.5]).unwrap();
        assert_eq!(average(&f).as_array(), [-0.5, 1.5, 2.5, 0.5]);
        assert!(WeightedFamily::new(vec![s, s], vec![1.0, 0.0]).is_err());
        assert!(WeightedFamily::new(vec![s, s], vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn q1_examples() {
        let q = q1_quad(-0.5, 1.0, 1.0).unwrap();
        let want = [pt(1.0, -0.5), pt(1.0, 1.0), pt(0.0, 1.0), pt(0.0, 0.5)];
        assert!(q.vertices().iter().zip(want).all(|(&x, y)| close(x, y)));
        let q = q1_quad(0.0, 2.0, 1.0).unwrap();
        assert!(close(q.a(), pt(1.0, 0.0)) && close(q.d(), Point2::ORIGIN));
        assert!(matches!(
            q1_quad(-1.0, 1.0, 1.0),
            Err(TransformError::Degenerate(_))
        ));
        assert!(matches!(
            q1_quad(-1.5, 1.0, 1.0),
            Err(TransformError::OutOfRange(_))
        ));
        assert!(q1_quad(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn q2_examples() {
        let s = RaySideSpec::new(PI / 4.0, 1.5, 2.0).unwrap();
        let r = 2f64.sqrt();
        assert!((s.r_star(r) - r).abs() < 1e-12);
        let q = q2_quad(r, &s).unwrap();
        assert!(close(q.a(), q.d().conj()));
        assert!((s.r_star(1.45) - 1.0 / (2f64.sqrt() - 1.0 / 1.45)).abs() < 1e-15);
        assert!((s.r_star(1.45) - 1.3802).abs() < 1e-4);
        assert!(q2_quad(2.5, &s).is_err());
        assert!(q2_quad(1.0, &s).is_err());
        assert!(RaySideSpec::new(PI / 4.0, 1.2, 2.0).is_err());
    }

    #[test]
    fn q2_range_matches_constructor() {
        let s = RaySideSpec::new(PI / 5.0, 1.4, 2.2).unwrap();
        let (lo, hi) = s.r_range();
        assert!(q2_quad(lo + 1e-6, &s).is_ok() && q2_quad(hi - 1e-6, &s).is_ok());
        assert!(q2_quad(lo - 1e-6, &s).is_err() && q2_quad(hi + 1e-6, &s).is_err());
    }

    #[test]
    fn notch_examples() {
        let q = notch_quad(1.0, PI / 4.0, 0.0).unwrap();
        assert!(close(q.d(), Point2::ORIGIN));
        assert!(notch_quad(2.0, PI / 3.0, 0.01).is_ok());
        assert!(matches!(
            notch_quad(1.0, PI / 4.0, 10.0),
            Err(TransformError::OutOfRange(_))
        ));
    }

    #[test]
    fn g_examples() {
        let q = g_quad(0.0, 1.0, 1.0).unwrap();
        let want = [pt(1.0, 2.0), pt(0.0, 1.0), pt(0.0, -1.0), pt(1.0, 0.0)];
        assert!(q.vertices().iter().zip(want).all(|(&x, y)| close(x, y)));
        for t in [-3.0, -1.0, 0.5, 4.0] {
            let q = g_quad(t, 0.7, 1.3).unwrap();
            assert!((area(&q) - 2.0).abs() < 1e-12);
        }
        let q = g_quad(-1.0, 1.0, 1.0).unwrap();
        assert!(close(q.a(), q.d().conj()) && close(q.b(), q.c().conj()));
    }

    #[test]
    fn op63_examples() {
        let (q, qp) = op63_pair(pt(1.0, 1.0), pt(0.0, 1.0), Op63Variant::A).unwrap();
        assert!((area(&q) - 1.0).abs() < 1e-12);
        let want = [pt(1.0, 0.5), pt(0.0, 0.5), pt(0.0, -0.5), pt(1.0, -0.5)];
        assert!(qp.vertices().iter().zip(want).all(|(&x, y)| close(x, y)));
        assert!((area(&qp) - area(&q)).abs() < 1e-12);
        let (_, qb) = op63_pair(pt(1.0, 1.0), pt(0.0, 1.0), Op63Variant::B).unwrap();
        assert!(qb.a().x > 0.0);
        assert!(matches!(
            op63_pair(pt(1.0, -1.0), pt(0.0, 1.0), Op63Variant::A),
            Err(TransformError::InvalidConfig(_))
        ));
    }

    #[test]
    fn op65_examples() {
        let (q, q1, q3) = op65_triple(PI / 3.0, 2.0 * PI / 3.0, 1.0, 1.0).unwrap();
        assert!(
            (q1.side_lengths()[0] - 1.0).abs() < 1e-12
                && (q1.side_lengths()[1] - 1.0).abs() < 1e-12
        );
        let a = q.a();
        let b = q.b();
        assert!((q3.side_lengths()[0] - (a - b).norm()).abs() < 1e-12);
        assert!((q3.side_lengths()[1] - b.norm()).abs() < 1e-12);
        for p in [q1, q3] {
            let v = p.vertices();
            assert!(close(v[1] - v[0], v[2] - v[3]) && close(v[2] - v[1], v[3] - v[0]));
        }
        assert!(matches!(
            op65_triple(2.0, 1.0, 1.0, 1.0),
            Err(TransformError::InvalidConfig(_))
        ));
    }

    #[test]
    fn remark2_chain_examples() {
        let chain = remark2_chain(&spec(0.0, 2.0, 3.0, 1.0)).unwrap();
        assert_eq!(chain.len(), 4);
        for q in &chain {
            assert!((area(q) - 2.0).abs() < 1e-12);
        }
        let last = chain[3];
        assert!(
            (last.side_lengths()[0] - 2.0).abs() < 1e-12
                && (last.side_lengths()[1] - 1.0).abs() < 1e-12
        );
        let sym = spec(-1.0, 1.0, 1.0, -1.0);
        let chain = remark2_chain(&sym).unwrap();
        assert!(chain.iter().all(|q| q == &sym.quad()));
    }

    #[test]
    fn remark2_reflection_agrees_with_polarize() {
        let s = spec(0.0, 2.0, 3.0, 0.0);
        let chain = remark2_chain(&s).unwrap();
        let p = polarize(&chain[1]).unwrap();
        assert!(p
            .vertices()
            .iter()
            .zip(chain[2].vertices())
            .all(|(&x, y)| x.dist(y) < 10.0 * GEOM_TOL));
    }
}
