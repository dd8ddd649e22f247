//! Finite-element bounds for the modulus.
//!
//! The modulus is the minimum Dirichlet integral over functions equal to 0 on
//! side `da` and 1 on side `bc`. Continuous piecewise-linear fields with those
//! nodal values are admissible, so every discrete minimum is an upper bound;
//! the reciprocal identity turns the rotated labeling's energy into a lower
//! bound.
//!
//! Meshes are uniform subdivisions of a coarse ear-clipping triangulation,
//! radially graded toward singular corners. Polygons may have more than four
//! vertices as long as exactly four of them are marked.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    interior_angle_at, is_simple_polygon, signed_area2, GeometryError, Point2, Quadrilateral,
    SideLabel,
};
use crate::{Method, ModulusEstimate};

pub const DEFAULT_LEVELS: usize = 4;
pub const DEFAULT_GRADING: f64 = 2.0;
pub const MAX_LEVELS: usize = 6;
/// Coarsest element size as a fraction of the polygon diameter.
pub const INITIAL_H_FRACTION: f64 = 1.0 / 8.0;

/// Coarse triangles with a smaller minimum angle count as needles.
const NEEDLE_ANGLE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("mesh failure: {0}")]
    MeshFailure(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("bracket width {} above tolerance {tol:e}", .bracket.width())]
    ToleranceNotReached { bracket: Bracket, tol: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Simple positively oriented polygon with four marked vertices `a, b, c, d`
/// in boundary order. The boundary chain from mark `k` to mark `k+1` is side
/// `SideLabel::ALL[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPolygon {
    vertices: Vec<Point2>,
    marks: [usize; 4],
}

impl MarkedPolygon {
    pub fn new(vertices: Vec<Point2>, marks: [usize; 4]) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 || marks.iter().any(|&m| m >= n) {
            return Err(GeometryError::OutOfRange(
                "marks must index polygon vertices".into(),
            ));
        }
        if !vertices.iter().all(|p| p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        // marks must be distinct and appear in cyclic boundary order
        let offs: Vec<usize> = marks.iter().map(|&m| (m + n - marks[0]) % n).collect();
        if !offs.windows(2).all(|w| w[0] < w[1]) {
            return Err(GeometryError::OutOfRange(
                "marks must be distinct and in boundary order".into(),
            ));
        }
        if !is_simple_polygon(&vertices) {
            return Err(GeometryError::SelfIntersecting);
        }
        if signed_area2(&vertices) <= 0.0 {
            return Err(GeometryError::NegativeOrientation);
        }
        Ok(MarkedPolygon { vertices, marks })
    }

    pub fn from_quad(q: &Quadrilateral) -> Self {
        MarkedPolygon {
            vertices: q.vertices().to_vec(),
            marks: [0, 1, 2, 3],
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn marks(&self) -> [usize; 4] {
        self.marks
    }

    /// Relabeling `(b, c, d, a)`.
    pub fn rotated(&self) -> Self {
        let m = self.marks;
        MarkedPolygon {
            vertices: self.vertices.clone(),
            marks: [m[1], m[2], m[3], m[0]],
        }
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(v[j]));
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.vertices)
    }

    /// Side carrying the polygon edge from vertex `i` to `i + 1`.
    pub fn side_of_edge(&self, i: usize) -> SideLabel {
        let n = self.vertices.len();
        for k in 0..4 {
            let start = self.marks[k];
            let end = self.marks[(k + 1) % 4];
            let span = (end + n - start) % n;
            if (i + n - start) % n < span {
                return SideLabel::ALL[k];
            }
        }
        unreachable!("marks partition the boundary")
    }

    fn interior_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        interior_angle_at(
            self.vertices[(i + n - 1) % n],
            self.vertices[i],
            self.vertices[(i + 1) % n],
        )
    }

    fn is_marked(&self, i: usize) -> bool {
        self.marks.contains(&i)
    }
}

/// Conforming triangulation with labeled boundary edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<([usize; 2], SideLabel)>,
}

fn serialize_points<S: serde::Serializer>(pts: &[Point2], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(pts.iter().map(|p| [p.x, p.y]))
}

impl Mesh {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serializes")
    }

    /// Same mesh with side labels of the relabeling `(b, c, d, a)`.
    pub fn rotated_labels(&self) -> Mesh {
        let relabel = |s: SideLabel| match s {
            SideLabel::AB => SideLabel::DA,
            SideLabel::BC => SideLabel::AB,
            SideLabel::CD => SideLabel::BC,
            SideLabel::DA => SideLabel::CD,
        };
        Mesh {
            points: self.points.clone(),
            triangles: self.triangles.clone(),
            boundary_edges: self
                .boundary_edges
                .iter()
                .map(|&(e, s)| (e, relabel(s)))
                .collect(),
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        0.5 * (self.points[j] - self.points[i]).cross(self.points[k] - self.points[i])
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        let p = &self.points;
        p[i].dist(p[j]).max(p[j].dist(p[k])).max(p[k].dist(p[i]))
    }

    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Mesh {
        Mesh {
            points: self.points.iter().map(|&p| f(p)).collect(),
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
        }
    }
}

fn min_angle(p: Point2, q: Point2, r: Point2) -> f64 {
    let ang = |a: Point2, b: Point2, c: Point2| {
        let u = b - a;
        let w = c - a;
        u.cross(w).abs().atan2(u.dot(w))
    };
    ang(p, q, r).min(ang(q, r, p)).min(ang(r, p, q))
}

fn in_closed_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    let scale = (b - a).norm().max((c - a).norm());
    let tol = 1e-12 * scale * scale;
    (b - a).cross(p - a) >= -tol && (c - b).cross(p - b) >= -tol && (a - c).cross(p - c) >= -tol
}

/// Ear clipping that always removes the best-shaped admissible ear; for
/// four vertices this picks the diagonal maximizing the minimum angle.
pub fn coarse_triangulation(v: &[Point2]) -> Result<Vec<[usize; 3]>, PdeError> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut tris = Vec::with_capacity(v.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let (ip, ic, inx) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (p, c, nx) = (v[ip], v[ic], v[inx]);
            let u = c - p;
            let w = nx - c;
            if u.cross(w) <= 1e-12 * u.norm() * w.norm() {
                continue;
            }
            let blocked = idx
                .iter()
                .any(|&j| j != ip && j != ic && j != inx && in_closed_triangle(v[j], p, c, nx));
            if blocked {
                continue;
            }
            let q = min_angle(p, c, nx);
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((k, q));
            }
        }
        let (k, _) = best.ok_or_else(|| PdeError::MeshFailure("no admissible ear".into()))?;
        tris.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        idx.remove(k);
    }
    let t = [idx[0], idx[1], idx[2]];
    if (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]) <= 0.0 {
        return Err(PdeError::MeshFailure("degenerate final ear".into()));
    }
    tris.push(t);
    for t in &tris {
        if min_angle(v[t[0]], v[t[1]], v[t[2]]) < NEEDLE_ANGLE {
            return Err(PdeError::MeshFailure("needle-degenerate polygon".into()));
        }
    }
    Ok(tris)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    /// Edge `(lo, hi)` with `lo < hi`, step counted from `lo`.
    Edge(usize, usize, usize),
    Interior(usize, usize, usize),
}

/// Exponent of the radial grading map at polygon vertex `i`.
fn grading_exponent(poly: &MarkedPolygon, i: usize, grading: f64) -> f64 {
    let theta = poly.interior_angle(i);
    // leading singular exponent of the potential at this corner
    let lambda = if poly.is_marked(i) {
        PI / (2.0 * theta)
    } else {
        PI / theta
    };
    (grading / (2.0 * lambda)).max(1.0)
}

/// Rows `t = 1 − λ_v < GRADING_ZONE` of each coarse triangle are graded
/// towards vertex `v`; zones of distinct vertices are disjoint below 1/2.
const GRADING_ZONE: f64 = 0.4;

/// Moves `p`, at barycentric distance `t` from vertex `c`, to row
/// `Z (t/Z)^γ`. Each row is scaled about `c`, so row order and the order
/// along each row are kept and no element can invert.
fn grade_towards(c: Point2, p: Point2, t: f64, gamma: f64) -> Point2 {
    if gamma <= 1.0 || t <= 0.0 || t >= GRADING_ZONE {
        return p;
    }
    let t_new = GRADING_ZONE * (t / GRADING_ZONE).powf(gamma);
    c + (p - c) * (t_new / t)
}

/// Mesh with `n` subdivisions per coarse edge.
pub fn triangulate_divisions(
    poly: &MarkedPolygon,
    n: usize,
    grading: f64,
) -> Result<Mesh, PdeError> {
    if n == 0 {
        return Err(PdeError::MeshFailure(
            "at least one subdivision required".into(),
        ));
    }
    if !(grading >= 1.0) {
        return Err(GeometryError::OutOfRange(format!("grading {grading} must be ≥ 1")).into());
    }
    let v = &poly.vertices;
    let coarse = coarse_triangulation(v)?;
    let nf = n as f64;

    let gammas: Vec<f64> = (0..v.len())
        .map(|i| grading_exponent(poly, i, grading))
        .collect();
    // position of a node after grading, from its canonical key
    let graded = |key: NodeKey, p: Point2| -> Point2 {
        match key {
            NodeKey::Vertex(_) => p,
            NodeKey::Edge(lo, hi, s) => {
                let t = s as f64 / nf;
                if t < 0.5 {
                    grade_towards(v[lo], p, t, gammas[lo])
                } else {
                    grade_towards(v[hi], p, 1.0 - t, gammas[hi])
                }
            }
            NodeKey::Interior(ti, i, j) => {
                let [i0, i1, i2] = coarse[ti];
                let (l1, l2) = (i as f64 / nf, j as f64 / nf);
                // at most one vertex has t below the zone width
                [(i0, l1 + l2), (i1, 1.0 - l1), (i2, 1.0 - l2)]
                    .into_iter()
                    .find(|&(_, t)| t < GRADING_ZONE)
                    .map_or(p, |(k, t)| grade_towards(v[k], p, t, gammas[k]))
            }
        }
    };

    let mut points: Vec<Point2> = Vec::new();
    let mut keys: HashMap<NodeKey, usize> = HashMap::new();
    // shared nodes are created once, at the position given by their canonical key
    let mut node = |key: NodeKey, p: Point2| -> usize {
        *keys.entry(key).or_insert_with(|| {
            points.push(graded(key, p));
            points.len() - 1
        })
    };
    let key_point = |key: NodeKey| match key {
        NodeKey::Vertex(i) => v[i],
        NodeKey::Edge(lo, hi, s) => v[lo].lerp(v[hi], s as f64 / nf),
        NodeKey::Interior(..) => unreachable!("interior points are placed by lattice"),
    };
    let edge_key = |from: usize, to: usize, s: usize| -> NodeKey {
        if s == 0 {
            NodeKey::Vertex(from)
        } else if s == n {
            NodeKey::Vertex(to)
        } else if from < to {
            NodeKey::Edge(from, to, s)
        } else {
            NodeKey::Edge(to, from, n - s)
        }
    };

    let mut triangles = Vec::with_capacity(coarse.len() * n * n);
    for (ti, &[i0, i1, i2]) in coarse.iter().enumerate() {
        let (p0, p1, p2) = (v[i0], v[i1], v[i2]);
        // lattice (i, j) ↦ p0 + i/n (p1 − p0) + j/n (p2 − p0)
        let mut local = vec![usize::MAX; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in 0..=n - i {
                let key = if j == 0 {
                    edge_key(i0, i1, i)
                } else if i == 0 {
                    edge_key(i0, i2, j)
                } else if i + j == n {
                    edge_key(i1, i2, j)
                } else {
                    NodeKey::Interior(ti, i, j)
                };
                let p = match key {
                    NodeKey::Interior(..) => {
                        p0 + (p1 - p0) * (i as f64 / nf) + (p2 - p0) * (j as f64 / nf)
                    }
                    _ => key_point(key),
                };
                let id = node(key, p);
                local[i * (n + 1) + j] = id;
            }
        }
        let at = |i: usize, j: usize| local[i * (n + 1) + j];
        for i in 0..n {
            for j in 0..n - i {
                triangles.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
                if i + j + 1 < n {
                    triangles.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                }
            }
        }
    }

    let nv = v.len();
    let mut boundary_edges = Vec::with_capacity(nv * n);
    for e in 0..nv {
        let (from, to) = (e, (e + 1) % nv);
        let label = poly.side_of_edge(e);
        for s in 0..n {
            let p = node(edge_key(from, to, s), Point2::ORIGIN);
            let q = node(edge_key(from, to, s + 1), Point2::ORIGIN);
            boundary_edges.push(([p, q], label));
        }
    }

    let mesh = Mesh {
        points,
        triangles,
        boundary_edges,
    };
    for t in 0..mesh.triangles.len() {
        if !(mesh.triangle_area(t) > 0.0) {
            return Err(PdeError::MeshFailure(format!("triangle {t} inverted")));
        }
    }
    Ok(mesh)
}

/// Subdivisions per coarse edge so that no element exceeds `target_h`
/// before grading.
pub fn divisions_for(poly: &MarkedPolygon, target_h: f64) -> Result<usize, PdeError> {
    if !(target_h > 0.0) {
        return Err(
            GeometryError::OutOfRange(format!("target_h {target_h} must be positive")).into(),
        );
    }
    let v = &poly.vertices;
    let coarse = coarse_triangulation(v)?;
    let longest = coarse
        .iter()
        .flat_map(|t| {
            [
                v[t[0]].dist(v[t[1]]),
                v[t[1]].dist(v[t[2]]),
                v[t[2]].dist(v[t[0]]),
            ]
        })
        .fold(0.0, f64::max);
    Ok(((longest / target_h).ceil() as usize).max(1))
}

pub fn triangulate_polygon(
    poly: &MarkedPolygon,
    target_h: f64,
    grading: f64,
) -> Result<Mesh, PdeError> {
    triangulate_divisions(poly, divisions_for(poly, target_h)?, grading)
}

pub fn triangulate(q: &Quadrilateral, target_h: f64, grading: f64) -> Result<Mesh, PdeError> {
    triangulate_polygon(&MarkedPolygon::from_quad(q), target_h, grading)
}

/// Discrete potential and its Dirichlet integral.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    pub nodal_values: Vec<f64>,
    pub energy: f64,
}

/// Element stiffness `K_ij = (e_i · e_j) / (4A)` with `e_i` the edge opposite `i`.
fn element_stiffness(p: [Point2; 3]) -> [[f64; 3]; 3] {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area4 = 2.0 * (p[1] - p[0]).cross(p[2] - p[0]);
    std::array::from_fn(|i| std::array::from_fn(|j| e[i].dot(e[j]) / area4))
}

/// Symmetric sparse matrix in adjacency form (diagonal included).
struct SparseSym {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in trip {
            match rows[i].last_mut() {
                Some((jj, acc)) if *jj == j => *acc += v,
                _ => rows[i].push((j, v)),
            }
        }
        SparseSym { rows }
    }

    fn degree(&self, i: usize) -> usize {
        self.rows[i].len()
    }
}

/// Reverse Cuthill–McKee ordering; handles disconnected graphs.
fn rcm_order(a: &SparseSym) -> Vec<usize> {
    let n = a.rows.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |start: usize, visited: &[bool]| -> usize {
        let mut seen = visited.to_vec();
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            for &(w, _) in &a.rows[u] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        last
    };
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (a.degree(i), i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: the far end of two BFS sweeps
        let start = bfs_last(bfs_last(seed, &visited), &visited);
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = a.rows[u]
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| !visited[w])
                .collect();
            nb.sort_by_key(|&w| (a.degree(w), w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (variable-band) Cholesky factor, stored row-wise.
struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// `a` given in permuted numbering.
    fn factor(a: &SparseSym) -> Result<Self, PdeError> {
        let n = a.rows.len();
        let first: Vec<usize> = (0..n)
            .map(|i| a.rows[i].iter().map(|&(j, _)| j).min().unwrap_or(i).min(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut data = vec![0.0; total];
        for i in 0..n {
            for &(j, v) in &a.rows[i] {
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_i = &data[start[i] + k0 - fi..start[i] + j - fi];
                let row_j = &data[start[j] + k0 - fj..start[j] + j - fj];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let idx = start[i] + j - fi;
                if j < i {
                    data[idx] = (data[idx] - dot) / data[start[j] + j - fj];
                } else {
                    let d = data[idx] - dot;
                    if !(d > 1e-14 * data[idx].abs()) {
                        return Err(PdeError::SingularSystem(format!(
                            "pivot {d:e} at row {i}: free nodes not tied to Dirichlet data"
                        )));
                    }
                    data[idx] = d.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { first, start, data })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi]
                .iter()
                .zip(&b[fi..i])
                .map(|(l, x)| l * x)
                .sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                b[fi + k] -= l * xi;
            }
        }
    }
}

/// Discrete Dirichlet integral of nodal field `u`.
pub fn dirichlet_energy(mesh: &Mesh, u: &[f64]) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| {
            let k = element_stiffness(t.map(|i| mesh.points[i]));
            let ut = t.map(|i| u[i]);
            (0..3)
                .map(|i| (0..3).map(|j| ut[i] * k[i][j] * ut[j]).sum::<f64>())
                .sum::<f64>()
        })
        .sum()
}

/// Minimizes the Dirichlet integral with `u = 1` on closed `bc` and `u = 0`
/// on closed `da`.
pub fn solve_energy(mesh: &Mesh) -> Result<BvpSolution, PdeError> {
    let np = mesh.points.len();
    let mut fixed: Vec<Option<f64>> = vec![None; np];
    let (mut ones, mut zeros) = (0, 0);
    for &([p, q], side) in &mesh.boundary_edges {
        let val = match side {
            SideLabel::BC => 1.0,
            SideLabel::DA => 0.0,
            _ => continue,
        };
        for i in [p, q] {
            match fixed[i] {
                Some(old) if old != val => {
                    return Err(PdeError::SingularSystem(format!(
                        "node {i} on both Dirichlet sides"
                    )));
                }
                Some(_) => {}
                None => {
                    fixed[i] = Some(val);
                    if val == 1.0 {
                        ones += 1;
                    } else {
                        zeros += 1;
                    }
                }
            }
        }
    }
    if ones == 0 || zeros == 0 {
        return Err(PdeError::SingularSystem("missing Dirichlet side".into()));
    }

    let mut free_index = vec![usize::MAX; np];
    let mut nfree = 0;
    for i in 0..np {
        if fixed[i].is_none() {
            free_index[i] = nfree;
            nfree += 1;
        }
    }
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; nfree];
    for t in &mesh.triangles {
        let k = element_stiffness(t.map(|i| mesh.points[i]));
        for a in 0..3 {
            let ia = free_index[t[a]];
            if ia == usize::MAX {
                continue;
            }
            for b in 0..3 {
                match fixed[t[b]] {
                    Some(val) => rhs[ia] -= k[a][b] * val,
                    None => trip.push((ia, free_index[t[b]], k[a][b])),
                }
            }
        }
    }

    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if nfree > 0 {
        let a = SparseSym::from_triplets(nfree, trip);
        let perm = rcm_order(&a);
        let mut inv = vec![0; nfree];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut prow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nfree];
        for (old, row) in a.rows.iter().enumerate() {
            prow[inv[old]] = row.iter().map(|&(j, v)| (inv[j], v)).collect();
        }
        let chol = EnvelopeCholesky::factor(&SparseSym { rows: prow })?;
        let mut b: Vec<f64> = perm.iter().map(|&old| rhs[old]).collect();
        chol.solve(&mut b);
        for i in 0..np {
            if fixed[i].is_none() {
                u[i] = b[inv[free_index[i]]];
            }
        }
    }
    let energy = dirichlet_energy(mesh, &u);
    Ok(BvpSolution {
        nodal_values: u,
        energy,
    })
}

/// Two-sided modulus bound with an extrapolated estimate inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub levels: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, m: f64) -> bool {
        self.lower <= m && m <= self.upper
    }

    /// Largest distance from the estimate to a bracket end.
    pub fn half_width_err(&self) -> f64 {
        (self.upper - self.estimate).max(self.estimate - self.lower)
    }
}

/// Richardson extrapolation of the last three terms of a sequence that
/// converges geometrically under mesh halving, using the observed order.
pub fn richardson(seq: &[f64]) -> Option<f64> {
    let n = seq.len();
    if n < 3 {
        return None;
    }
    let d1 = seq[n - 3] - seq[n - 2];
    let d2 = seq[n - 2] - seq[n - 1];
    if d2 == 0.0 {
        return Some(seq[n - 1]);
    }
    let ratio = d1 / d2;
    if !(ratio > 1.0) || !ratio.is_finite() {
        return None;
    }
    Some(seq[n - 1] - d2 / (ratio - 1.0))
}

/// Mesh hierarchy for a polygon: `N_ℓ = N_0 2^ℓ` subdivisions per coarse edge.
#[derive(Debug, Clone)]
pub struct FemLadder {
    poly: MarkedPolygon,
    grading: f64,
    n0: usize,
    direct: Vec<f64>,
    rotated: Vec<f64>,
}

impl FemLadder {
    pub fn new(poly: MarkedPolygon, grading: f64) -> Result<Self, PdeError> {
        let n0 = divisions_for(&poly, INITIAL_H_FRACTION * poly.diameter())?;
        Ok(FemLadder {
            poly,
            grading,
            n0,
            direct: Vec::new(),
            rotated: Vec::new(),
        })
    }

    pub fn levels(&self) -> usize {
        self.direct.len()
    }

    pub fn divisions(&self, level: usize) -> usize {
        self.n0 << level
    }

    pub fn mesh(&self, level: usize) -> Result<Mesh, PdeError> {
        triangulate_divisions(&self.poly, self.divisions(level), self.grading)
    }

    /// Direct and rotated energies on one more level.
    pub fn refine(&mut self) -> Result<(), PdeError> {
        let mesh = self.mesh(self.levels())?;
        let e = solve_energy(&mesh)?.energy;
        let r = solve_energy(&mesh.rotated_labels())?.energy;
        self.direct.push(e);
        self.rotated.push(r);
        Ok(())
    }

    pub fn energies(&self) -> (&[f64], &[f64]) {
        (&self.direct, &self.rotated)
    }

    pub fn bracket(&self) -> Option<Bracket> {
        let (&e, &r) = (self.direct.last()?, self.rotated.last()?);
        let (lower, upper) = (1.0 / r, e);
        let up = richardson(&self.direct).unwrap_or(upper);
        let lo = richardson(&self.rotated).map_or(lower, |x| 1.0 / x);
        let estimate = (0.5 * (up + lo)).clamp(lower.min(upper), upper);
        Some(Bracket {
            lower,
            upper,
            estimate,
            levels: self.levels(),
        })
    }
}

pub fn modulus_bracket_polygon(
    poly: &MarkedPolygon,
    levels: usize,
    grading: f64,
) -> Result<Bracket, PdeError> {
    if levels < 2 {
        return Err(GeometryError::OutOfRange(format!("levels {levels} must be ≥ 2")).into());
    }
    let mut ladder = FemLadder::new(poly.clone(), grading)?;
    for _ in 0..levels {
        ladder.refine()?;
    }
    Ok(ladder.bracket().expect("levels ≥ 2"))
}

pub fn modulus_bracket(q: &Quadrilateral, levels: usize) -> Result<Bracket, PdeError> {
    modulus_bracket_polygon(&MarkedPolygon::from_quad(q), levels, DEFAULT_GRADING)
}

/// Refines until the bracket is narrower than `tol` or `max_levels` is hit.
pub fn modulus_fem_polygon(
    poly: &MarkedPolygon,
    tol: f64,
    max_levels: usize,
    grading: f64,
) -> Result<(ModulusEstimate, Bracket), PdeError> {
    let mut ladder = FemLadder::new(poly.clone(), grading)?;
    while ladder.levels() < max_levels.max(2) {
        ladder.refine()?;
        if ladder.levels() < 2 {
            continue;
        }
        let b = ladder.bracket().expect("refined");
        if b.width() < tol {
            let est = ModulusEstimate {
                value: b.estimate,
                method: Method::Fem,
                err: b.half_width_err(),
            };
            return Ok((est, b));
        }
    }
    Err(PdeError::ToleranceNotReached {
        bracket: ladder.bracket().expect("refined"),
        tol,
    })
}

/// FEM modulus; `err` is the larger distance from the estimate to a bracket end.
pub fn modulus_fem(q: &Quadrilateral, tol: f64) -> Result<ModulusEstimate, PdeError> {
    modulus_fem_polygon(
        &MarkedPolygon::from_quad(q),
        tol,
        MAX_LEVELS,
        DEFAULT_GRADING,
    )
    .map(|(e, _)| e)
}
