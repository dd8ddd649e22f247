//! Acceptance criteria 1 to 12, run in order with one PASS/FAIL line each.
//!
//! Reference values come from closed forms (rectangles, the corner slope),
//! symmetry (kites, the reciprocal identity) or the independent FEM bracket.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use quadmod::geometry::{Point2, Quadrilateral, VertexName};
use quadmod::io::quad_from_value;
use quadmod::pde_oracle::{self, MarkedPolygon};
use quadmod::sc_solver::modulus_sc;
use quadmod::transforms::notch_quad;
use quadmod::verify::sampling::{
    random_convex_quad, random_kite, random_nonconvex_quad, sample_rng,
};
use quadmod::verify::{
    evaluate, explore, region_map, slope_2_3, verify, CheckConfig, MethodChoice, RegionSpec,
    Report, EXPLORE_PROBLEMS,
};
use rand::Rng;
use serde_json::Value;

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn quad(v: [(f64, f64); 4]) -> Quadrilateral {
    Quadrilateral::from_array(v.map(|(x, y)| Point2::new(x, y))).unwrap()
}

fn sc(q: &Quadrilateral) -> f64 {
    modulus_sc(q, 1e-10).unwrap().value
}

fn report_ok(r: &Report) -> bool {
    r.all_passed() && r.failures.is_empty() && r.solver_faults.is_empty()
}

fn report_line(r: &Report) -> String {
    format!(
        "{}: {}/{} pass, {} inconclusive, {} fail, {} faults, worst margin {:.2e} (budget {:.1e})",
        r.check_id,
        r.passes,
        r.samples,
        r.inconclusive,
        r.failures.len(),
        r.solver_faults.len(),
        r.worst_margin,
        r.error_budget
    )
}

fn run_checks(ids: &[(&str, usize)]) -> Outcome {
    let reports: Vec<Report> = ids
        .iter()
        .map(|(id, n)| verify(id, &CheckConfig::new(SEED, *n)).unwrap())
        .collect();
    let pass = reports.iter().all(report_ok);
    outcome(
        pass,
        reports
            .iter()
            .map(report_line)
            .collect::<Vec<_>>()
            .join("; "),
    )
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for m in [0.5, 1.0, 2.0, 5.0] {
        // (0, W, W + i, i) has modulus 1/W
        let w = 1.0 / m;
        let t = Instant::now();
        let v = sc(&quad([(0.0, 0.0), (w, 0.0), (w, 1.0), (0.0, 1.0)]));
        slowest = slowest.max(t.elapsed());
        worst = worst.max((v - m).abs());
    }
    let pass = worst < 1e-6 && slowest < Duration::from_secs(1);
    outcome(
        pass,
        format!("max |M - exact| = {worst:.1e}, slowest {slowest:?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut kites = vec![quad([(0.0, 0.0), (1.0, -1.0), (3.0, 0.0), (1.0, 1.0)])];
    kites.extend((0..10).map(|i| random_kite(&mut sample_rng(SEED, i))));
    let mut worst: f64 = 0.0;
    let mut bracketed = true;
    for k in &kites {
        worst = worst.max((sc(k) - 1.0).abs());
        let b = pde_oracle::modulus_bracket(k, 4).unwrap();
        bracketed &= b.lower <= 1.0 && 1.0 <= b.upper;
    }
    outcome(
        worst < 1e-6 && bracketed,
        format!(
            "{} kites, max |M - 1| = {worst:.1e}, all FEM brackets contain 1: {bracketed}",
            kites.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let q = random_convex_quad(&mut sample_rng(SEED, i));
        worst = worst.max((sc(&q) * sc(&q.rotated()) - 1.0).abs());
    }
    let el = t.elapsed();
    outcome(
        worst < 1e-8 && el < Duration::from_secs(120),
        format!("max |M M_rot - 1| = {worst:.1e} in {el:?}"),
    )
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let quads: Vec<Quadrilateral> = (0..20)
        .map(|i| {
            let mut rng = sample_rng(SEED + 4, i);
            if i < 5 {
                random_nonconvex_quad(&mut rng)
            } else {
                random_convex_quad(&mut rng)
            }
        })
        .collect();
    let mut inside = 0;
    let mut widest: f64 = 0.0;
    let mut problems = Vec::new();
    for (i, q) in quads.iter().enumerate() {
        let s = modulus_sc(q, 1e-10).unwrap();
        let poly = MarkedPolygon::from_quad(q);
        match pde_oracle::modulus_fem_polygon(
            &poly,
            1e-2,
            pde_oracle::MAX_LEVELS,
            pde_oracle::DEFAULT_GRADING,
        ) {
            Ok((_, b)) => {
                widest = widest.max(b.width());
                if s.value >= b.lower - s.err && s.value <= b.upper + s.err {
                    inside += 1;
                } else {
                    problems.push(format!(
                        "#{i}: {} outside [{}, {}]",
                        s.value, b.lower, b.upper
                    ));
                }
            }
            Err(e) => problems.push(format!("#{i}: {e}")),
        }
    }
    let el = t.elapsed();
    let pass = inside == 20 && widest < 1e-2 && el < Duration::from_secs(300);
    let mut detail = format!("{inside}/20 SC values inside brackets, widest {widest:.1e}, {el:?}");
    if !problems.is_empty() {
        detail += &format!(" [{}]", problems.join("; "));
    }
    outcome(pass, detail)
}

fn criterion_5() -> Outcome {
    let hs = [0.02, 0.01, 0.005, 0.0025, 0.00125];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (m, phi) in [(1.0, FRAC_PI_4), (1.0, FRAC_PI_2), (2.0, PI / 3.0)] {
        let exact = 0.5 * (m * phi.sin() - phi.cos());
        let s = slope_2_3(m, phi, &hs).unwrap();
        worst = worst.max((s.slope - exact).abs());
        parts.push(format!(
            "(M={m}, phi={phi:.3}) {:.6} vs {exact:.6}",
            s.slope
        ));
    }
    outcome(
        worst < 1e-2,
        format!("{}; max error {worst:.1e}", parts.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let r = verify("th3.1", &CheckConfig::new(SEED, 50)).unwrap();
    // the sampler's first draw picks the case; replay it to count both kinds
    let rays = (0..50)
        .filter(|&i| sample_rng(SEED, i).random_bool(0.5))
        .count();
    let pass = report_ok(&r) && rays > 0 && rays < 50;
    outcome(
        pass,
        format!("{} ({rays} ray, {} parallel)", report_line(&r), 50 - rays),
    )
}

fn criterion_7() -> Outcome {
    run_checks(&[("th4.1", 10), ("remark2", 10)])
}

fn criterion_8() -> Outcome {
    run_checks(&[("th5.1", 20)])
}

fn criterion_9() -> Outcome {
    run_checks(&[("cor5.2", 20), ("th5.3", 20), ("th5.4", 20)])
}

fn criterion_10() -> Outcome {
    run_checks(&[("q6.1", 50), ("q6.2", 50)])
}

/// Expected sign for moving vertex `v` of a square towards `dir`: the
/// diagonal through `v` separates the side of its Neumann neighbour (+)
/// from that of its Dirichlet neighbour (-) and is itself neutral.
fn square_sign(q: &Quadrilateral, v: VertexName, dir: Point2) -> i8 {
    let vs = q.vertices();
    let i = v.index();
    let diag = vs[(i + 2) % 4] - vs[i];
    // a and c have their Neumann neighbour next, b and d previous
    let neumann = if i % 2 == 0 {
        vs[(i + 1) % 4]
    } else {
        vs[(i + 3) % 4]
    };
    let side = diag.cross(dir);
    if side.abs() < 1e-9 {
        0
    } else if side.signum() == diag.cross(neumann - vs[i]).signum() {
        1
    } else {
        -1
    }
}

fn criterion_11() -> Outcome {
    let square = quad([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    let mut matched = 0;
    let mut total = 0;
    for v in VertexName::ALL {
        let map = region_map(
            &square,
            v,
            &RegionSpec::compass(8, 0.1),
            MethodChoice::Sc,
            3.0,
        )
        .unwrap();
        for p in &map.probes {
            total += 1;
            let want = square_sign(&square, v, Point2::from_polar(1.0, p.angle));
            if p.sign == want && (want == 0 || p.certain) {
                matched += 1;
            }
        }
    }
    let mut parts = vec![format!("square {matched}/{total} probes match")];
    let mut pass = matched == total;
    for m in [2.0, 0.5] {
        let n = 16;
        let rect = notch_quad(m, FRAC_PI_4, 0.0).unwrap();
        let map = region_map(
            &rect,
            VertexName::D,
            &RegionSpec::sector(0.0, FRAC_PI_2, n, 0.02),
            MethodChoice::Sc,
            3.0,
        )
        .unwrap();
        let boundary = (1.0 / m).atan();
        let cell = FRAC_PI_2 / n as f64;
        let ok = map.probes.iter().all(|p| {
            let want = if p.angle < boundary { -1 } else { 1 };
            (p.angle - boundary).abs() < cell || (p.sign == want && p.certain)
        });
        let signs: Vec<i8> = map.probes.iter().map(|p| p.sign).collect();
        let monotone = signs.windows(2).all(|w| w[0] <= w[1]);
        pass &= ok && monotone;
        parts.push(format!(
            "rectangle M={m}: boundary {boundary:.3} within one cell: {}",
            ok && monotone
        ));
    }
    outcome(pass, parts.join(", "))
}

fn reproduce_margin(problem: &str, input: &Value) -> f64 {
    let m = |key: &str| {
        evaluate(&quad_from_value(&input[key]).unwrap(), MethodChoice::Sc)
            .unwrap()
            .value
    };
    if problem == "op65" {
        let (c1, c2, c3) = (m("quad"), m("q1"), m("q3"));
        (c1 - c2.min(c3)).min(c2.max(c3) - c1)
    } else {
        m("comparison") - m("quad")
    }
}

fn criterion_12() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in EXPLORE_PROBLEMS {
        let r = explore(p, &CheckConfig::new(SEED, 200)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let keys = [
            "problem",
            "seed",
            "samples",
            "supported",
            "inconclusive",
            "candidate_counterexamples",
            "skipped",
            "worst_margin",
            "error_budget",
            "runtime_ms",
            "summary",
        ];
        let schema =
            keys.iter().all(|k| v.get(k).is_some()) && v.as_object().unwrap().len() == keys.len();
        let counts = r.supported + r.inconclusive + r.candidate_counterexamples.len() + r.skipped
            == r.samples;
        let listed = (r.worst_margin < 0.0) == !r.candidate_counterexamples.is_empty();
        let reproducible = r.candidate_counterexamples.iter().all(|c| {
            c.margin < 0.0
                && (reproduce_margin(p, &c.input) - c.margin).abs() <= 1e-9 * c.lhs.abs().max(1.0)
        });
        pass &= schema && counts && listed && reproducible && r.samples == 200;
        parts.push(format!(
            "{p}: {} supported, {} inconclusive, {} candidates, {} skipped",
            r.supported,
            r.inconclusive,
            r.candidate_counterexamples.len(),
            r.skipped
        ));
    }
    outcome(pass, parts.join("; "))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("rectangle exactness", criterion_1),
        ("diagonal symmetry", criterion_2),
        ("reciprocal identity", criterion_3),
        ("cross-method sandwich", criterion_4),
        ("corner slope", criterion_5),
        ("polarization", criterion_6),
        ("partial symmetrization", criterion_7),
        ("linear averaging", criterion_8),
        ("monotonicity and convexity families", criterion_9),
        ("questions on straightening and offsets", criterion_10),
        ("region maps", criterion_11),
        ("open-problem explorers", criterion_12),
    ];
    let mut failed = Vec::new();
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag} {name}: {} [{:.1} s]",
            n + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(n + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
