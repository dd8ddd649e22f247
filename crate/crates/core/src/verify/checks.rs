//! Samplers for each check id. A sampler draws one configuration and returns
//! the comparisons it implies.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde_json::json;

use super::sampling::{
    random_convex_quad, random_similarity, random_trapezoid, sorted_spread, uniform, SampleRng,
};
use super::{evaluate, evaluate_polygon, Assertion, Eval, MethodChoice, SampleOutcome};
use crate::geometry::{
    classify_vertex_motion, tangency_phi0, validate, MotionClass, Point2, Quadrilateral, VertexName,
};
use crate::io::{point_json, quad_to_value};
use crate::pde_oracle::MarkedPolygon;
use crate::transforms::{
    average, cor2_quad, g_quad, polarize, q1_quad, q2_quad, remark2_chain, symmetrize_lambda,
    RaySideSpec, TrapezoidSpec, WeightedFamily,
};

pub(super) type Sampler = fn(&mut SampleRng, MethodChoice) -> SampleOutcome;

/// Attempts allowed to draw an admissible configuration.
const MAX_DRAWS: usize = 1000;
/// Grid size for monotonicity and convexity scans.
const GRID: usize = 9;

pub(super) fn sampler(id: &str) -> Option<Sampler> {
    Some(match id {
        "prop1" => prop1,
        "prop2" => prop2,
        "th2.1" => th2_1,
        "cor2" => cor2,
        "th3.1" => th3_1,
        "th4.1" => th4_1,
        "remark2" => remark2,
        "th5.1" => th5_1,
        "cor5.2" => cor5_2,
        "th5.3" => th5_3,
        "th5.4" => th5_4,
        "q6.1" => q6_1,
        "q6.2" => q6_2,
        _ => return None,
    })
}

type Res<T> = Result<T, String>;

fn ev(q: &Quadrilateral, m: MethodChoice) -> Res<Eval> {
    evaluate(q, m).map_err(|e| e.to_string())
}

fn ev_all(qs: &[Quadrilateral], m: MethodChoice) -> Res<Vec<Eval>> {
    qs.iter().map(|q| ev(q, m)).collect()
}

fn strictly_decreasing(v: &[Eval]) -> Vec<Assertion> {
    v.windows(2)
        .map(|w| Assertion::greater(w[0].value, w[1].value, w[0].err + w[1].err))
        .collect()
}

fn strictly_increasing(v: &[Eval]) -> Vec<Assertion> {
    v.windows(2)
        .map(|w| Assertion::greater(w[1].value, w[0].value, w[0].err + w[1].err))
        .collect()
}

fn non_increasing(v: &[Eval]) -> Vec<Assertion> {
    v.windows(2)
        .map(|w| Assertion::greater_eq(w[0].value, w[1].value, w[0].err + w[1].err))
        .collect()
}

/// Second differences on an equally spaced grid are non-negative.
fn convex(v: &[Eval]) -> Vec<Assertion> {
    v.windows(3)
        .map(|w| {
            Assertion::greater_eq(
                w[0].value + w[2].value,
                2.0 * w[1].value,
                w[0].err + 2.0 * w[1].err + w[2].err,
            )
        })
        .collect()
}

/// `k`-th of `n` interior points of `(lo, hi)`.
fn interior(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    lo + (hi - lo) * (k + 1) as f64 / (n + 1) as f64
}

fn draw<T>(rng: &mut SampleRng, mut f: impl FnMut(&mut SampleRng) -> Option<T>) -> Option<T> {
    (0..MAX_DRAWS).find_map(|_| f(rng))
}

fn exhausted() -> SampleOutcome {
    SampleOutcome::fault(json!(null), "no admissible configuration drawn")
}

fn random_triangle(rng: &mut SampleRng) -> [Point2; 3] {
    let t0 = uniform(rng, 0.0, TAU);
    std::array::from_fn(|i| {
        Point2::from_polar(
            uniform(rng, 0.8, 1.2),
            t0 + TAU * i as f64 / 3.0 + uniform(rng, -0.4, 0.4),
        )
    })
}

/// Same triangle, marked point `a` on side `db` slid towards `b`: the
/// Dirichlet arc `da` grows, so the modulus grows.
fn prop1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let Some((q, qp, s, sp)) = draw(rng, |rng| {
        let [b, c, d] = random_triangle(rng);
        let s = uniform(rng, 0.1, 0.7);
        let sp = s + uniform(rng, 0.1, 0.9 - s);
        let q = validate([d.lerp(b, s), b, c, d]).ok()?;
        let qp = validate([d.lerp(b, sp), b, c, d]).ok()?;
        Some((q, qp, s, sp))
    }) else {
        return exhausted();
    };
    let input =
        json!({"quad": quad_to_value(&q), "moved": quad_to_value(&qp), "s": s, "s_moved": sp});
    let result = (|| {
        let (e, ep) = (ev(&q, m)?, ev(&qp, m)?);
        Ok(vec![Assertion::greater(ep.value, e.value, e.err + ep.err)])
    })();
    SampleOutcome { input, result }
}

/// Rectangle `(0, W, W + i, i)` against the same rectangle with boxes glued
/// onto its Neumann sides; the FEM lower bound of the larger domain must
/// exceed `1/W`.
fn prop2(rng: &mut SampleRng, _m: MethodChoice) -> SampleOutcome {
    let w = uniform(rng, 0.5, 2.0);
    let x0 = uniform(rng, 0.1, 0.4) * w;
    let x1 = x0 + uniform(rng, 0.2, 0.5) * w;
    let e = uniform(rng, 0.2, 1.0);
    let top = rng.random_bool(0.5);
    let x2 = uniform(rng, 0.1, 0.4) * w;
    let x3 = x2 + uniform(rng, 0.2, 0.5) * w;
    let e2 = uniform(rng, 0.2, 1.0);
    let p = Point2::new;
    let mut v = vec![
        p(0.0, 0.0),
        p(x0, 0.0),
        p(x0, -e),
        p(x1, -e),
        p(x1, 0.0),
        p(w, 0.0),
        p(w, 1.0),
    ];
    if top {
        v.extend([p(x3, 1.0), p(x3, 1.0 + e2), p(x2, 1.0 + e2), p(x2, 1.0)]);
    }
    v.push(p(0.0, 1.0));
    let marks = [0, 5, 6, v.len() - 1];
    let input = json!({
        "width": w,
        "polygon": v.iter().map(|&z| point_json(z)).collect::<Vec<_>>(),
        "marks": marks,
    });
    let result = (|| {
        let poly = MarkedPolygon::new(v.clone(), marks).map_err(|e| e.to_string())?;
        let lower = evaluate_polygon(&poly)
            .map_err(|e| e.to_string())?
            .bracket
            .expect("fem")
            .lower;
        // the bound is exact up to the linear solve
        Ok(vec![Assertion::greater(lower, 1.0 / w, 1e-10 / w)])
    })();
    SampleOutcome { input, result }
}

/// One-vertex moves whose direction the theorem certifies.
fn th2_1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let Some((q, v, target, qp, class)) = draw(rng, |rng| {
        let q = random_convex_quad(rng);
        let v = VertexName::from_index(rng.random_range(0..4));
        let i = v.index();
        let here = q.vertex(v);
        let target = if rng.random_bool(0.5) {
            let w = q.vertices()[if rng.random_bool(0.5) {
                (i + 1) % 4
            } else {
                (i + 3) % 4
            }];
            here.lerp(w, uniform(rng, 0.1, 0.9))
        } else {
            here + Point2::from_polar(
                uniform(rng, 0.05, 0.6) * q.diameter(),
                uniform(rng, 0.0, TAU),
            )
        };
        let class = classify_vertex_motion(&q, v, target).ok()?;
        if class == MotionClass::Indeterminate {
            return None;
        }
        let qp = q.with_vertex(v, target).ok()?;
        Some((q, v, target, qp, class))
    }) else {
        return exhausted();
    };
    let input = json!({
        "quad": quad_to_value(&q),
        "vertex": v.to_string(),
        "target": point_json(target),
        "class": format!("{class:?}"),
    });
    let result = (|| {
        let (e, ep) = (ev(&q, m)?, ev(&qp, m)?);
        let budget = e.err + ep.err;
        Ok(vec![match class {
            MotionClass::Increase => Assertion::greater(ep.value, e.value, budget),
            _ => Assertion::greater(e.value, ep.value, budget),
        }])
    })();
    SampleOutcome { input, result }
}

/// `φ ↦ M(1 + r e^{iφ}, b, 0, 1)` increases on `[0, φ0]`.
fn cor2(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let Some((r, b, phi0, quads)) = draw(rng, |rng| {
        let r = uniform(rng, 0.2, 0.8);
        let b = Point2::new(uniform(rng, -1.0, 1.5), uniform(rng, 0.3, 2.0));
        if b.dist(Point2::new(1.0, 0.0)) < r + 0.1 {
            return None;
        }
        let phi0 = tangency_phi0(r, b).ok().filter(|&p| p > 0.2)?;
        let quads: Option<Vec<_>> = (0..GRID)
            .map(|k| cor2_quad(r, b, phi0 * k as f64 / (GRID - 1) as f64).ok())
            .collect();
        Some((r, b, phi0, quads?))
    }) else {
        return exhausted();
    };
    let input = json!({"r": r, "b": point_json(b), "phi0": phi0});
    let result = ev_all(&quads, m).map(|v| strictly_increasing(&v));
    SampleOutcome { input, result }
}

/// Polarization across the mirror of two ray (or parallel) sides lowers the
/// modulus.
fn th3_1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let ray = rng.random_bool(0.5);
    let canonical = if ray {
        let psi = uniform(rng, 0.15, 1.2);
        let [ra, rd, rc, rb] = sorted_spread(rng, 0.3, 3.0, 0.06);
        let lo = |r: f64| Point2::from_polar(r, -psi);
        let hi = |r: f64| Point2::from_polar(r, psi);
        [lo(ra), lo(rb), hi(rc), hi(rd)]
    } else {
        let w = uniform(rng, 0.3, 2.0);
        let [xa, xd, xc, xb] = sorted_spread(rng, -2.0, 2.0, 0.06);
        [
            Point2::new(xa, -w),
            Point2::new(xb, -w),
            Point2::new(xc, w),
            Point2::new(xd, w),
        ]
    };
    let sim = random_similarity(rng);
    let q = match validate(canonical.map(|z| sim.apply(z))) {
        Ok(q) => q,
        Err(e) => return SampleOutcome::fault(json!({"canonical": canonical.map(point_json)}), e),
    };
    let input = json!({"quad": quad_to_value(&q), "case": if ray { "ray" } else { "parallel" }});
    let result = (|| {
        let p = polarize(&q).map_err(|e| e.to_string())?;
        let (e, ep) = (ev(&q, m)?, ev(&p, m)?);
        Ok(vec![Assertion::greater(e.value, ep.value, e.err + ep.err)])
    })();
    SampleOutcome { input, result }
}

/// Partial symmetrization `λ ↦ M(Q_λ)` is non-increasing on `[0, 1]`.
fn th4_1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let spec = random_trapezoid(rng);
    let input = json!({"spec": spec});
    let result = (|| {
        let quads: Res<Vec<_>> = (0..=10)
            .map(|k| {
                symmetrize_lambda(&spec, k as f64 / 10.0)
                    .map(|s| s.quad())
                    .map_err(|e| e.to_string())
            })
            .collect();
        Ok(non_increasing(&ev_all(&quads?, m)?))
    })();
    SampleOutcome { input, result }
}

/// Trapezoid, symmetrization, polarization, symmetrization: moduli do not
/// increase and end at `1/area`.
fn remark2(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let spec = random_trapezoid(rng);
    let input = json!({"spec": spec});
    let result = (|| {
        let chain = remark2_chain(&spec).map_err(|e| e.to_string())?;
        let v = ev_all(&chain, m)?;
        let mut out = non_increasing(&v);
        let last = v.last().expect("four quads");
        out.push(Assertion::greater_eq(
            1e-6,
            (last.value - 1.0 / spec.area()).abs(),
            0.0,
        ));
        Ok(out)
    })();
    SampleOutcome { input, result }
}

/// `M(L_A) ≤ Σ a_k M(Q_k)` for the weighted average of trapezoids.
fn th5_1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let n = rng.random_range(2..=3);
    let specs: Vec<TrapezoidSpec> = (0..n).map(|_| random_trapezoid(rng)).collect();
    let raw: Vec<f64> = (0..n).map(|_| uniform(rng, 0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let input = json!({"specs": specs, "weights": weights});
    let result = (|| {
        let fam = WeightedFamily::new(specs.clone(), weights.clone()).map_err(|e| e.to_string())?;
        let avg = ev(&average(&fam).quad(), m)?;
        let (mut sum, mut budget) = (0.0, avg.err);
        for (s, w) in specs.iter().zip(&weights) {
            let e = ev(&s.quad(), m)?;
            sum += w * e.value;
            budget += w * e.err;
        }
        Ok(vec![Assertion::greater_eq(sum, avg.value, budget)])
    })();
    SampleOutcome { input, result }
}

/// `y ↦ M(1 + iα, 1 + iy, iγ, iδ)` is decreasing and convex on `(α, ∞)`.
fn cor5_2(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let alpha = uniform(rng, -1.0, 1.0);
    let gamma = uniform(rng, -1.0, 2.0);
    let delta = gamma - uniform(rng, 0.3, 2.0);
    let span = uniform(rng, 1.0, 4.0);
    let input = json!({"alpha": alpha, "gamma": gamma, "delta": delta, "y_max": alpha + span});
    let result = (|| {
        let quads: Res<Vec<_>> = (0..GRID)
            .map(|k| {
                let y = interior(alpha, alpha + span, k, GRID - 1);
                TrapezoidSpec::new(alpha, y, gamma, delta)
                    .map(|s| s.quad())
                    .map_err(|e| e.to_string())
            })
            .collect();
        let v = ev_all(&quads?, m)?;
        let mut out = strictly_decreasing(&v);
        out.extend(convex(&v));
        Ok(out)
    })();
    SampleOutcome { input, result }
}

/// Three properties of `q1(y) = M(1 + iy, 1 + iβ, iγ, −iy)`.
fn th5_3(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let gamma = uniform(rng, 0.3, 2.0);
    let beta = gamma + uniform(rng, 0.0, 2.0);
    let y = -gamma * uniform(rng, 0.1, 0.9);
    let input = json!({"beta": beta, "gamma": gamma, "y": y});
    let result = (|| {
        let q1 = |y: f64| {
            q1_quad(y, beta, gamma)
                .map_err(|e| e.to_string())
                .and_then(|q| ev(&q, m))
        };
        let dec: Res<Vec<_>> = (0..GRID)
            .map(|k| q1(interior(-gamma, 0.0, k, GRID)))
            .collect();
        let conv: Res<Vec<_>> = (0..GRID)
            .map(|k| q1(interior(-gamma, beta, k, GRID)))
            .collect();
        let (lhs, rhs) = (q1(y)?, q1(-y)?);
        let mut out = strictly_decreasing(&dec?);
        out.push(Assertion::greater(lhs.value, rhs.value, lhs.err + rhs.err));
        out.extend(convex(&conv?));
        Ok(out)
    })();
    SampleOutcome { input, result }
}

/// Three properties of `q2(r)` for sides on the rays `arg z = ∓φ`.
fn th5_4(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let phi = uniform(rng, 0.3, 1.2);
    let r1 = uniform(rng, 1.1, 2.0) / phi.cos();
    let r2 = r1 * uniform(rng, 1.0, 2.0);
    let spec = match RaySideSpec::new(phi, r1, r2) {
        Ok(s) => s,
        Err(e) => return SampleOutcome::fault(json!({"phi": phi, "r1": r1, "r2": r2}), e),
    };
    let (lo, hi) = (spec.r_star(r1), 1.0 / phi.cos());
    let r = interior(lo, hi, 0, 1) + (hi - lo) * uniform(rng, -0.4, 0.4);
    let input = json!({"phi": phi, "r1": r1, "r2": r2, "r": r});
    let result = (|| {
        let q2 = |r: f64| {
            q2_quad(r, &spec)
                .map_err(|e| e.to_string())
                .and_then(|q| ev(&q, m))
        };
        let dec: Res<Vec<_>> = (0..GRID).map(|k| q2(interior(lo, hi, k, GRID))).collect();
        let (plo, phi_) = (1.0 / r2, 2.0 * phi.cos() - 1.0 / r1);
        let conv: Res<Vec<_>> = (0..GRID)
            .map(|k| q2(1.0 / interior(plo, phi_, k, GRID)))
            .collect();
        let (lhs, rhs) = (q2(r)?, q2(spec.r_star(r))?);
        let mut out = strictly_decreasing(&dec?);
        out.push(Assertion::greater(lhs.value, rhs.value, lhs.err + rhs.err));
        out.extend(convex(&conv?));
        Ok(out)
    })();
    SampleOutcome { input, result }
}

/// Straightening the two ray sides into verticals of the same lengths does
/// not lower the modulus.
fn q6_1(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let Some((q, qp)) = draw(rng, |rng| {
        let a = Point2::new(1.0, 0.0)
            + Point2::from_polar(uniform(rng, 0.2, 2.0), uniform(rng, 0.05, FRAC_PI_2 - 0.05));
        let b = Point2::from_polar(
            uniform(rng, 0.2, 2.0),
            uniform(rng, FRAC_PI_2 + 0.05, PI - 0.05),
        );
        let q = validate([a, b, Point2::ORIGIN, Point2::new(1.0, 0.0)]).ok()?;
        let qp = validate([
            Point2::new(1.0, (a - Point2::new(1.0, 0.0)).norm()),
            Point2::new(0.0, b.norm()),
            Point2::ORIGIN,
            Point2::new(1.0, 0.0),
        ])
        .ok()?;
        Some((q, qp))
    }) else {
        return exhausted();
    };
    let input = json!({"quad": quad_to_value(&q), "straightened": quad_to_value(&qp)});
    let result = (|| {
        let (e, ep) = (ev(&q, m)?, ev(&qp, m)?);
        Ok(vec![Assertion::greater_eq(
            ep.value,
            e.value,
            e.err + ep.err,
        )])
    })();
    SampleOutcome { input, result }
}

/// `t ↦ M(g(t))` is largest at `t = −k` on the grid `−3k, −5k/2, …, k`.
fn q6_2(rng: &mut SampleRng, m: MethodChoice) -> SampleOutcome {
    let h = uniform(rng, 0.2, 2.0);
    let k = uniform(rng, 0.2, 2.0);
    let input = json!({"h": h, "k": k});
    let result = (|| {
        let quads: Res<Vec<_>> = (0..GRID)
            .map(|j| g_quad(-3.0 * k + 0.5 * k * j as f64, h, k).map_err(|e| e.to_string()))
            .collect();
        let v = ev_all(&quads?, m)?;
        let peak = v[4];
        Ok(v.iter()
            .enumerate()
            .filter(|(j, _)| *j != 4)
            .map(|(_, e)| Assertion::greater_eq(peak.value, e.value, peak.err + e.err))
            .collect())
    })();
    SampleOutcome { input, result }
}
