//! Deterministic random configurations.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::geometry::{interior_angles, validate, Point2, Quadrilateral, Similarity};
use crate::transforms::TrapezoidSpec;

pub type SampleRng = ChaCha20Rng;

/// Independent stream `index` of the generator seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Rotation, scaling in `[0.5, 2]` and a shift in `[-2, 2]²`.
pub fn random_similarity(rng: &mut SampleRng) -> Similarity {
    let scale = Point2::from_polar(uniform(rng, 0.5, 2.0), uniform(rng, 0.0, TAU));
    let shift = Point2::new(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
    Similarity::new(scale, shift)
}

fn rotate_labels(v: [Point2; 4], k: usize) -> [Point2; 4] {
    [v[k % 4], v[(k + 1) % 4], v[(k + 2) % 4], v[(k + 3) % 4]]
}

fn well_shaped(q: &Quadrilateral, min_angle: f64) -> bool {
    interior_angles(q)
        .iter()
        .all(|&t| t > min_angle && t < TAU - min_angle)
}

/// Convex quadrilateral near the unit circle, all angles at least 0.3 rad.
pub fn random_convex_quad(rng: &mut SampleRng) -> Quadrilateral {
    loop {
        let mut t: Vec<f64> = (0..4).map(|_| uniform(rng, 0.0, TAU)).collect();
        t.sort_by(f64::total_cmp);
        let gaps_ok = (0..4).all(|i| {
            let next = if i == 3 { t[0] + TAU } else { t[i + 1] };
            next - t[i] > 0.5
        });
        if !gaps_ok {
            continue;
        }
        let v: [Point2; 4] =
            std::array::from_fn(|i| Point2::from_polar(uniform(rng, 0.7, 1.3), t[i]));
        let k = rng.random_range(0..4);
        if let Ok(q) = validate(rotate_labels(v, k)) {
            if q.is_convex() && well_shaped(&q, 0.3) {
                return q;
            }
        }
    }
}

/// Quadrilateral with exactly one reflex vertex, at a random label.
pub fn random_nonconvex_quad(rng: &mut SampleRng) -> Quadrilateral {
    loop {
        let t0 = uniform(rng, 0.0, TAU);
        let tri: [Point2; 3] = std::array::from_fn(|i| {
            Point2::from_polar(
                uniform(rng, 0.8, 1.2),
                t0 + TAU * i as f64 / 3.0 + uniform(rng, -0.3, 0.3),
            )
        });
        let w: [f64; 3] = std::array::from_fn(|_| uniform(rng, 0.15, 1.0));
        let s = w[0] + w[1] + w[2];
        let x = tri[0] * (w[0] / s) + tri[1] * (w[1] / s) + tri[2] * (w[2] / s);
        let v = [tri[0], tri[1], x, tri[2]];
        let k = rng.random_range(0..4);
        if let Ok(q) = validate(rotate_labels(v, k)) {
            if !q.is_convex() && well_shaped(&q, 0.2) {
                return q;
            }
        }
    }
}

/// Kite symmetric about its diagonal `ac`, in random position; modulus 1.
pub fn random_kite(rng: &mut SampleRng) -> Quadrilateral {
    loop {
        let len = uniform(rng, 1.0, 4.0);
        let p = uniform(rng, 0.15, 0.85) * len;
        let w = uniform(rng, 0.3, 2.0);
        let v = [
            Point2::ORIGIN,
            Point2::new(p, -w),
            Point2::new(len, 0.0),
            Point2::new(p, w),
        ];
        let sim = random_similarity(rng);
        if let Ok(q) = validate(v.map(|z| sim.apply(z))) {
            return q;
        }
    }
}

/// Spec with `β − α` and `γ − δ` in `[0.2, 3]`.
pub fn random_trapezoid(rng: &mut SampleRng) -> TrapezoidSpec {
    let alpha = uniform(rng, -2.0, 2.0);
    let beta = alpha + uniform(rng, 0.2, 3.0);
    let gamma = uniform(rng, -2.0, 2.0);
    let delta = gamma - uniform(rng, 0.2, 3.0);
    TrapezoidSpec::new(alpha, beta, gamma, delta).expect("ordered by construction")
}

/// Four increasing values in `[lo, hi]` with consecutive gaps of at least
/// `min_gap·(hi − lo)`.
pub fn sorted_spread(rng: &mut SampleRng, lo: f64, hi: f64, min_gap: f64) -> [f64; 4] {
    loop {
        let mut v: [f64; 4] = std::array::from_fn(|_| uniform(rng, lo, hi));
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= min_gap * (hi - lo)) {
            return v;
        }
    }
}

/// Angle in `(0, π)` kept away from both ends by `pad`.
pub fn open_angle(rng: &mut SampleRng, pad: f64) -> f64 {
    uniform(rng, pad, PI - pad)
}
