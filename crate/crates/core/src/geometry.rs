//! Plane primitives and quadrilateral geometry.
//!
//! Points double as complex numbers `x + iy`. A [`Quadrilateral`] is four
//! labelled vertices forming a simple, positively oriented polygon; the
//! constructor enforces this and never reorders vertices, because the modulus
//! depends on the labelling.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for collinearity / incidence predicates.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vertex coordinates must be finite")]
    NonFinite,
    #[error("vertices {0} and {1} coincide")]
    DegenerateVertices(VertexName, VertexName),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("vertices are negatively oriented; reverse them explicitly to (d,c,b,a) if intended")]
    NegativeOrientation,
    #[error("target point coincides with an existing vertex")]
    InvalidTarget,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("not admissible for polarization: {0}")]
    NotAdmissible(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Point2::new(r * theta.cos(), r * theta.sin())
    }

    /// The unit complex number `e^{i theta}`.
    pub fn cis(theta: f64) -> Self {
        Point2::from_polar(1.0, theta)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn conj(self) -> Point2 {
        Point2::new(self.x, -self.y)
    }

    /// Complex product.
    pub fn cmul(self, o: Point2) -> Point2 {
        Point2::new(self.x * o.x - self.y * o.y, self.x * o.y + self.y * o.x)
    }

    /// Complex quotient.
    pub fn cdiv(self, o: Point2) -> Point2 {
        let d = o.norm_sqr();
        Point2::new(
            (self.x * o.x + self.y * o.y) / d,
            (self.y * o.x - self.x * o.y) / d,
        )
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }

    pub fn unit(self) -> Point2 {
        self / self.norm()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    fn div(self, s: f64) -> Point2 {
        Point2::new(self.x / s, self.y / s)
    }
}

/// Orientation-preserving similarity `z -> scale * z + shift` (complex `scale`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub scale: Point2,
    pub shift: Point2,
}

impl Similarity {
    pub fn new(scale: Point2, shift: Point2) -> Self {
        Similarity { scale, shift }
    }

    pub fn apply(&self, z: Point2) -> Point2 {
        self.scale.cmul(z) + self.shift
    }

    pub fn inverse(&self) -> Similarity {
        let inv = Point2::new(1.0, 0.0).cdiv(self.scale);
        Similarity::new(inv, -inv.cmul(self.shift))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexName {
    A,
    B,
    C,
    D,
}

impl VertexName {
    pub const ALL: [VertexName; 4] = [VertexName::A, VertexName::B, VertexName::C, VertexName::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> VertexName {
        VertexName::ALL[i % 4]
    }
}

impl fmt::Display for VertexName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VertexName::A => "a",
            VertexName::B => "b",
            VertexName::C => "c",
            VertexName::D => "d",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for VertexName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(VertexName::A),
            "b" | "B" => Ok(VertexName::B),
            "c" | "C" => Ok(VertexName::C),
            "d" | "D" => Ok(VertexName::D),
            other => Err(format!(
                "unknown vertex '{other}', expected one of a, b, c, d"
            )),
        }
    }
}

/// The four sides. `BC` carries potential one and `DA` potential zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SideLabel {
    AB,
    BC,
    CD,
    DA,
}

impl SideLabel {
    pub const ALL: [SideLabel; 4] = [SideLabel::AB, SideLabel::BC, SideLabel::CD, SideLabel::DA];

    /// Side starting at vertex index `i` (0 = a).
    pub fn starting_at(i: usize) -> SideLabel {
        SideLabel::ALL[i % 4]
    }

    pub fn start_index(self) -> usize {
        self as usize
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, SideLabel::BC | SideLabel::DA)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionClass {
    Increase,
    Decrease,
    Indeterminate,
}

/// A validated quadrilateral `(Q; a, b, c, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrilateral {
    a: Point2,
    b: Point2,
    c: Point2,
    d: Point2,
}

impl Quadrilateral {
    pub fn new(a: Point2, b: Point2, c: Point2, d: Point2) -> Result<Self, GeometryError> {
        validate([a, b, c, d])
    }

    pub fn from_array(v: [Point2; 4]) -> Result<Self, GeometryError> {
        validate(v)
    }

    pub fn a(&self) -> Point2 {
        self.a
    }
    pub fn b(&self) -> Point2 {
        self.b
    }
    pub fn c(&self) -> Point2 {
        self.c
    }
    pub fn d(&self) -> Point2 {
        self.d
    }

    pub fn vertices(&self) -> [Point2; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn vertex(&self, v: VertexName) -> Point2 {
        self.vertices()[v.index()]
    }

    /// The same polygon relabelled `(b, c, d, a)`; its modulus is the reciprocal.
    pub fn rotated(&self) -> Quadrilateral {
        Quadrilateral {
            a: self.b,
            b: self.c,
            c: self.d,
            d: self.a,
        }
    }

    pub fn side_length(&self, s: SideLabel) -> f64 {
        let v = self.vertices();
        let i = s.start_index();
        v[i].dist(v[(i + 1) % 4])
    }

    pub fn side_lengths(&self) -> [f64; 4] {
        SideLabel::ALL.map(|s| self.side_length(s))
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut m = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                m = m.max(v[i].dist(v[j]));
            }
        }
        m
    }

    /// Image under a similarity, revalidated.
    pub fn map(&self, s: &Similarity) -> Result<Quadrilateral, GeometryError> {
        Quadrilateral::from_array(self.vertices().map(|p| s.apply(p)))
    }

    /// Replace one vertex, revalidating.
    pub fn with_vertex(&self, v: VertexName, p: Point2) -> Result<Quadrilateral, GeometryError> {
        let mut vs = self.vertices();
        vs[v.index()] = p;
        Quadrilateral::from_array(vs)
    }

    pub fn is_convex(&self) -> bool {
        interior_angles(self)
            .iter()
            .all(|&t| t <= PI * (1.0 + GEOM_TOL))
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(&self.vertices(), p)
    }
}

fn scale_of(v: &[Point2]) -> f64 {
    v.iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Signed twice-area.
pub fn signed_area2(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum()
}

/// Sign of the turn `p -> q -> r` with a tolerance relative to the local scale.
fn orient(p: Point2, q: Point2, r: Point2) -> i8 {
    let u = q - p;
    let w = r - p;
    let c = u.cross(w);
    let tol = GEOM_TOL * u.norm() * w.norm();
    if c > tol {
        1
    } else if c < -tol {
        -1
    } else {
        0
    }
}

fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
    // r collinear with pq assumed; inside the closed bounding box
    let tol = GEOM_TOL * (q - p).norm().max(f64::MIN_POSITIVE);
    r.x >= p.x.min(q.x) - tol
        && r.x <= p.x.max(q.x) + tol
        && r.y >= p.y.min(q.y) - tol
        && r.y <= p.y.max(q.y) + tol
}

/// Closed segments `[p1,p2]` and `[q1,q2]` intersect (touching counts).
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}

/// Distance from `p` to the closed segment `[s0, s1]`.
pub fn point_segment_distance(p: Point2, s0: Point2, s1: Point2) -> f64 {
    let d = s1 - s0;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return p.dist(s0);
    }
    let t = ((p - s0).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(s0 + d * t)
}

/// Distance between closed segments (zero if they intersect).
pub fn segment_distance(p0: Point2, p1: Point2, q0: Point2, q1: Point2) -> f64 {
    if segments_intersect(p0, p1, q0, q1) {
        return 0.0;
    }
    point_segment_distance(p0, q0, q1)
        .min(point_segment_distance(p1, q0, q1))
        .min(point_segment_distance(q0, p0, p1))
        .min(point_segment_distance(q1, p0, p1))
}

/// Even-odd point-in-polygon test for the open interior.
pub fn point_in_polygon(v: &[Point2], p: Point2) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (u, w) = (v[i], v[(i + 1) % n]);
        if point_segment_distance(p, u, w) <= GEOM_TOL * scale_of(v) {
            return false;
        }
        if (u.y > p.y) != (w.y > p.y) {
            let x = u.x + (p.y - u.y) * (w.x - u.x) / (w.y - u.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Checks that a closed polyline is simple: non-adjacent sides disjoint and no
/// side folding back onto its neighbour.
pub fn is_simple_polygon(v: &[Point2]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (p0, p1) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (q0, q1) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex; reject overlap (a zero-angle spike)
                let (shared, a, b) = if j == i + 1 {
                    (p1, p0, q1)
                } else {
                    (p0, p1, q0)
                };
                let u = a - shared;
                let w = b - shared;
                let tol = GEOM_TOL * u.norm() * w.norm();
                if u.cross(w).abs() <= tol && u.dot(w) > 0.0 {
                    return false;
                }
            } else if segments_intersect(p0, p1, q0, q1) {
                return false;
            }
        }
    }
    true
}

/// Checks distinctness, simplicity and positive orientation.
pub fn validate(v: [Point2; 4]) -> Result<Quadrilateral, GeometryError> {
    if !v.iter().all(|p| p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let scale = scale_of(&v);
    for i in 0..4 {
        for j in i + 1..4 {
            if v[i].dist(v[j]) <= GEOM_TOL * scale {
                return Err(GeometryError::DegenerateVertices(
                    VertexName::from_index(i),
                    VertexName::from_index(j),
                ));
            }
        }
    }
    if !is_simple_polygon(&v) {
        return Err(GeometryError::SelfIntersecting);
    }
    let area2 = signed_area2(&v);
    if area2 <= GEOM_TOL * scale * scale {
        return Err(GeometryError::NegativeOrientation);
    }
    Ok(Quadrilateral {
        a: v[0],
        b: v[1],
        c: v[2],
        d: v[3],
    })
}

/// Interior angle at `v` of a positively oriented polygon, in `(0, 2π)`.
pub fn interior_angle_at(prev: Point2, v: Point2, next: Point2) -> f64 {
    let e_in = v - prev;
    let e_out = next - v;
    let turn = e_in.cross(e_out).atan2(e_in.dot(e_out));
    PI - turn
}

/// Interior angles at a, b, c, d.
pub fn interior_angles(q: &Quadrilateral) -> [f64; 4] {
    let v = q.vertices();
    std::array::from_fn(|i| interior_angle_at(v[(i + 3) % 4], v[i], v[(i + 1) % 4]))
}

pub fn area(q: &Quadrilateral) -> f64 {
    0.5 * signed_area2(&q.vertices())
}

/// Closed-form area of `(Q; a, b, 0, 1)` used in the open-problem explorer:
/// `|a| (sin α + |b| sin(β − α)) / 2` with `α = arg a`, `β = arg b`.
pub fn area_abo1(a: Point2, b: Point2) -> f64 {
    let (al, be) = (a.arg(), b.arg());
    a.norm() * (al.sin() + b.norm() * (be - al).sin()) / 2.0
}

/// Side of the oriented line `p -> q` on which `r` lies: +1 left, -1 right.
fn halfplane(p: Point2, q: Point2, r: Point2) -> i8 {
    orient(p, q, r)
}

/// Classify the motion of vertex `v` to `target` by the geometric hypotheses of
/// the one-vertex monotonicity theorem; no modulus is computed.
///
/// Moving a vertex along, or beyond, an adjacent Neumann side (`AB`, `CD`)
/// certifies an increase; the same motion relative to a Dirichlet side (`BC`,
/// `DA`) certifies a decrease (reciprocal identity). Anything else is
/// `Indeterminate`.
pub fn classify_vertex_motion(
    q: &Quadrilateral,
    v: VertexName,
    target: Point2,
) -> Result<MotionClass, GeometryError> {
    if !target.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let vs = q.vertices();
    let scale = scale_of(&vs);
    if vs.iter().any(|p| p.dist(target) <= GEOM_TOL * scale) {
        return Err(GeometryError::InvalidTarget);
    }
    let i = v.index();
    let angles = interior_angles(q);
    let convex = q.is_convex();

    let mut verdicts = Vec::new();
    // side (v, next) and side (prev, v)
    for forward in [true, false] {
        let (side, w, other) = if forward {
            (SideLabel::starting_at(i), vs[(i + 1) % 4], vs[(i + 3) % 4])
        } else {
            (
                SideLabel::starting_at(i + 3),
                vs[(i + 3) % 4],
                vs[(i + 1) % 4],
            )
        };
        let here = vs[i];
        let certified = along_side_case(q, here, w, other, angles[i], target)
            || (convex && beyond_side_case(&vs, side, target));
        if certified {
            verdicts.push(if side.is_dirichlet() {
                MotionClass::Decrease
            } else {
                MotionClass::Increase
            });
        }
    }
    Ok(match verdicts.as_slice() {
        [one] => *one,
        [x, y] if x == y => *x,
        _ => MotionClass::Indeterminate,
    })
}

/// First case: target on the open side `(here, w)`, angle at `here` at most π,
/// and the open segment from the other neighbour to the target inside Q.
fn along_side_case(
    q: &Quadrilateral,
    here: Point2,
    w: Point2,
    other: Point2,
    angle: f64,
    target: Point2,
) -> bool {
    if angle > PI * (1.0 + GEOM_TOL) {
        return false;
    }
    if orient(here, w, target) != 0 {
        return false;
    }
    let s = (target - here).dot(w - here) / (w - here).norm_sqr();
    if !(s > GEOM_TOL && s < 1.0 - GEOM_TOL) {
        return false;
    }
    segment_inside(q, other, target)
}

/// Open segment `other -> target` avoids the boundary and lies in Q.
fn segment_inside(q: &Quadrilateral, other: Point2, target: Point2) -> bool {
    let vs = q.vertices();
    let l = target - other;
    // shrink slightly so shared endpoints do not register as hits
    let eps = 1e-9;
    let p0 = other + l * eps;
    let p1 = other + l * (1.0 - eps);
    for s in 0..4 {
        let (u, w) = (vs[s], vs[(s + 1) % 4]);
        if segments_intersect(p0, p1, u, w) {
            return false;
        }
    }
    q.contains(other.lerp(target, 0.5))
}

/// Second case (convex Q): target in the closed region bounded by `side` and
/// the outward extensions of its two neighbouring sides.
fn beyond_side_case(vs: &[Point2; 4], side: SideLabel, target: Point2) -> bool {
    let i = side.start_index();
    let (p, q) = (vs[i], vs[(i + 1) % 4]);
    let prev = vs[(i + 3) % 4];
    let next = vs[(i + 2) % 4];
    // outer side of pq (right of p->q for a positive polygon)
    let outer = halfplane(p, q, target) <= 0;
    // same side of line(prev, p) as q, same side of line(q, next) as p
    let s1 = halfplane(prev, p, target);
    let s1q = halfplane(prev, p, q);
    let s2 = halfplane(q, next, target);
    let s2p = halfplane(q, next, p);
    outer && (s1 == 0 || s1 == s1q) && (s2 == 0 || s2 == s2p)
}

/// Tangency angle `φ0`: `1 + r e^{iφ0}` is the tangency point, closest to
/// `1 + r`, of the circle `|z − 1| = r` with a line through `b`.
pub fn tangency_phi0(r: f64, b: Point2) -> Result<f64, GeometryError> {
    let rel = b - Point2::new(1.0, 0.0);
    let dist = rel.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(GeometryError::OutOfRange(format!(
            "r = {r} must lie in (0, 1)"
        )));
    }
    if !(b.y > 0.0) || !(b.x < 1.0 + r) || !(dist > r) {
        return Err(GeometryError::OutOfRange(format!(
            "b = {b} must satisfy Im b > 0, Re b < 1 + r, |b - 1| > r"
        )));
    }
    let phi0 = rel.arg() - (r / dist).acos();
    if !(phi0 > 0.0 && phi0 < PI) {
        return Err(GeometryError::OutOfRange(format!(
            "tangency angle {phi0} outside (0, π)"
        )));
    }
    Ok(phi0)
}

/// Mirror structure of sides `(a,b)` and `(c,d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MirrorKind {
    /// Both sides on rays from a common apex, `half_angle` from the axis.
    Ray { apex: Point2, half_angle: f64 },
    /// Both sides on parallel lines `half_width` from the axis.
    Parallel { half_width: f64 },
}

/// Which of the two hypothesis variants of the polarization inequality holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolarizationVariant {
    /// `Re a ≤ Re d` and `Re c < Re b`.
    StrictCB,
    /// `Re a < Re d` and `Re c ≤ Re b`.
    StrictAD,
}

/// Canonical frame: `to_canonical` sends the mirror axis to the real line, so
/// sides `(a,b)` and `(c,d)` lie on conjugate rays (or lines).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorFrame {
    pub kind: MirrorKind,
    pub to_canonical: Similarity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationFrame {
    pub frame: MirrorFrame,
    pub variant: PolarizationVariant,
}

impl MirrorFrame {
    /// Reflection in the mirror axis, in original coordinates.
    pub fn reflect(&self, p: Point2) -> Point2 {
        let inv = self.to_canonical.inverse();
        inv.apply(self.to_canonical.apply(p).conj())
    }

    /// The same frame turned by π (axis direction reversed).
    fn flipped(&self) -> MirrorFrame {
        let minus = Similarity::new(Point2::new(-1.0, 0.0), Point2::ORIGIN);
        MirrorFrame {
            kind: self.kind,
            to_canonical: Similarity::new(
                minus.scale.cmul(self.to_canonical.scale),
                minus.scale.cmul(self.to_canonical.shift),
            ),
        }
    }
}

/// Detects whether `a, b` and `c, d` lie on mirror-image rays (or parallel
/// lines). Returns the frame whose axis points into the sector (ray case) or
/// along `b − a` (parallel case).
pub fn mirror_frame(q: &Quadrilateral) -> Result<MirrorFrame, GeometryError> {
    let [a, b, c, d] = q.vertices();
    let u = b - a;
    let w = c - d;
    let scale = q.diameter();
    let cr = u.cross(w);
    if cr.abs() <= GEOM_TOL * u.norm() * w.norm() {
        // parallel lines; opposite directions required for a positive polygon
        if u.dot(w) <= 0.0 {
            return Err(GeometryError::NotAdmissible(
                "sides (a,b) and (c,d) are not mirror images".into(),
            ));
        }
        let dir = u.unit();
        let normal = Point2::new(-dir.y, dir.x);
        let gap = (d - a).dot(normal);
        if gap <= GEOM_TOL * scale {
            return Err(GeometryError::NotAdmissible(
                "side (c,d) is not above side (a,b)".into(),
            ));
        }
        let origin = a + normal * (gap / 2.0);
        let rot = dir.conj();
        let to_canonical = Similarity::new(rot, -rot.cmul(origin));
        return Ok(MirrorFrame {
            kind: MirrorKind::Parallel {
                half_width: gap / 2.0,
            },
            to_canonical,
        });
    }
    // intersection of line(a,b) and line(d,c)
    let t = (d - a).cross(w) / cr;
    let apex = a + u * t;
    let ra = a - apex;
    let rb = b - apex;
    let rc = c - apex;
    let rd = d - apex;
    let tol = GEOM_TOL * scale;
    if ra.norm() <= tol || rb.norm() <= tol || rc.norm() <= tol || rd.norm() <= tol {
        return Err(GeometryError::NotAdmissible(
            "a vertex sits at the apex of the rays".into(),
        ));
    }
    if ra.dot(rb) <= 0.0 || rc.dot(rd) <= 0.0 {
        return Err(GeometryError::NotAdmissible(
            "vertices straddle the apex; not on rays".into(),
        ));
    }
    let u1 = ra.unit();
    let u2 = rc.unit();
    let bis = u1 + u2;
    if bis.norm() <= GEOM_TOL {
        return Err(GeometryError::NotAdmissible("rays are opposite".into()));
    }
    let rot = bis.unit().conj();
    let to_canonical = Similarity::new(rot, -rot.cmul(apex));
    let half_angle = u1.cross(u2).abs().atan2(u1.dot(u2)) / 2.0;
    Ok(MirrorFrame {
        kind: MirrorKind::Ray { apex, half_angle },
        to_canonical,
    })
}

fn variant_in(frame: &MirrorFrame, q: &Quadrilateral) -> Option<PolarizationVariant> {
    let [a, b, c, d] = q.vertices().map(|p| frame.to_canonical.apply(p));
    let tol = GEOM_TOL * q.diameter();
    let le = |x: f64, y: f64| x <= y + tol;
    let lt = |x: f64, y: f64| x < y - tol;
    if le(a.x, d.x) && lt(c.x, b.x) {
        Some(PolarizationVariant::StrictCB)
    } else if lt(a.x, d.x) && le(c.x, b.x) {
        Some(PolarizationVariant::StrictAD)
    } else {
        None
    }
}

/// Mirror structure plus the real-part hypotheses of the polarization
/// inequality, tried in both axis directions.
pub fn polarization_admissible(q: &Quadrilateral) -> Result<PolarizationFrame, GeometryError> {
    let frame = mirror_frame(q)?;
    for f in [frame, frame.flipped()] {
        if let Some(variant) = variant_in(&f, q) {
            return Ok(PolarizationFrame { frame: f, variant });
        }
    }
    Err(GeometryError::NotAdmissible(
        "neither Re a <= Re d, Re c < Re b nor Re a < Re d, Re c <= Re b holds".into(),
    ))
}

/// Angle of the line through `p` and `q`, folded into `[0, π)`.
pub fn line_angle(p: Point2, q: Point2) -> f64 {
    let t = (q - p).arg();
    if t < 0.0 {
        t + PI
    } else if t >= PI {
        t - PI
    } else {
        t
    }
}

/// Right angle helper used by several families.
pub const RIGHT: f64 = FRAC_PI_2;
