//! Sign charts of one-vertex moves and the notch slope estimate.

use std::f64::consts::TAU;

use serde::Serialize;

use super::{evaluate, MethodChoice, VerifyError};
use crate::geometry::{Point2, Quadrilateral, VertexName};
use crate::io::Table;
use crate::transforms::notch_quad;

/// Probe positions: rings of radius `rho·(i + 1)/rings` at the given angles.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub rho: f64,
    pub rings: usize,
    pub angles: Vec<f64>,
}

impl RegionSpec {
    /// `n` equally spaced directions starting at angle 0.
    pub fn compass(n: usize, rho: f64) -> Self {
        RegionSpec {
            rho,
            rings: 1,
            angles: (0..n).map(|j| TAU * j as f64 / n as f64).collect(),
        }
    }

    /// Centres of `n` equal cells of the sector `[t0, t1]`.
    pub fn sector(t0: f64, t1: f64, n: usize, rho: f64) -> Self {
        let angles = (0..n)
            .map(|j| t0 + (t1 - t0) * (j as f64 + 0.5) / n as f64)
            .collect();
        RegionSpec {
            rho,
            rings: 1,
            angles,
        }
    }

    pub fn with_rings(mut self, rings: usize) -> Self {
        self.rings = rings;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionProbe {
    pub radius: f64,
    pub angle: f64,
    pub target: Point2,
    /// `M(moved) − M(Q)`.
    pub delta: f64,
    pub budget: f64,
    /// `0` when `|delta|` is within the budget.
    pub sign: i8,
    /// `|delta|` exceeds the margin multiple of the budget.
    pub certain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    pub vertex: VertexName,
    pub center: Point2,
    pub modulus: f64,
    pub probes: Vec<RegionProbe>,
}

impl RegionMap {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "radius", "angle", "x", "y", "delta", "err", "sign", "certain",
        ]);
        for p in &self.probes {
            t.push(vec![
                p.radius,
                p.angle,
                p.target.x,
                p.target.y,
                p.delta,
                p.budget,
                p.sign as f64,
                if p.certain { 1.0 } else { 0.0 },
            ]);
        }
        t
    }
}

/// Sign of `M(Q with v moved) − M(Q)` over a polar grid around `v`.
///
/// Every probe must leave a valid quadrilateral; otherwise `rho` is too large
/// and an error names the first offending probe.
pub fn region_map(
    q: &Quadrilateral,
    v: VertexName,
    spec: &RegionSpec,
    method: MethodChoice,
    margin: f64,
) -> Result<RegionMap, VerifyError> {
    if !(spec.rho > 0.0 && spec.rho.is_finite()) || spec.rings == 0 || spec.angles.is_empty() {
        return Err(VerifyError::InvalidConfig(
            "need rho > 0, rings ≥ 1 and at least one angle".into(),
        ));
    }
    let center = q.vertex(v);
    let mut moved = Vec::new();
    for i in 0..spec.rings {
        let radius = spec.rho * (i + 1) as f64 / spec.rings as f64;
        for &angle in &spec.angles {
            let target = center + Point2::from_polar(radius, angle);
            let qm = q.with_vertex(v, target).map_err(|e| {
                VerifyError::InvalidConfig(format!("rho too large: probe at {target} gives {e}"))
            })?;
            moved.push((radius, angle, target, qm));
        }
    }
    let base = evaluate(q, method)?;
    let probes: Result<Vec<_>, VerifyError> = {
        use rayon::prelude::*;
        moved
            .par_iter()
            .map(|(radius, angle, target, qm)| {
                let e = evaluate(qm, method)?;
                let delta = e.value - base.value;
                let budget = e.err + base.err;
                let sign = if delta > budget {
                    1
                } else if delta < -budget {
                    -1
                } else {
                    0
                };
                let certain = delta.abs() > margin * budget;
                Ok(RegionProbe {
                    radius: *radius,
                    angle: *angle,
                    target: *target,
                    delta,
                    budget,
                    sign,
                    certain,
                })
            })
            .collect()
    };
    Ok(RegionMap {
        vertex: v,
        center,
        modulus: base.value,
        probes: probes?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub err: f64,
    /// `(h, (M(h) − M)/h)` for each step.
    pub quotients: Vec<(f64, f64)>,
}

/// One-sided derivative in `h` of `M(M, M + i, i, h e^{iφ})` at `h = 0`.
///
/// Difference quotients are extrapolated linearly in `h` over consecutive
/// pairs; `err` is the change between the last two extrapolations.
pub fn slope_2_3(m: f64, phi: f64, hs: &[f64]) -> Result<SlopeEstimate, VerifyError> {
    if hs.len() < 3 {
        return Err(VerifyError::InvalidConfig(
            "need at least three step sizes".into(),
        ));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0])) || hs.iter().any(|&h| !(h > 0.0)) {
        return Err(VerifyError::InvalidConfig(
            "step sizes must be positive and decreasing".into(),
        ));
    }
    let mut quotients = Vec::with_capacity(hs.len());
    for &h in hs {
        let e = evaluate(&notch_quad(m, phi, h)?, MethodChoice::Sc)?;
        quotients.push((h, (e.value - m) / h));
    }
    let extrap: Vec<f64> = quotients
        .windows(2)
        .map(|w| {
            let ((h0, d0), (h1, d1)) = (w[0], w[1]);
            d1 - h1 * (d0 - d1) / (h0 - h1)
        })
        .collect();
    let n = extrap.len();
    Ok(SlopeEstimate {
        slope: extrap[n - 1],
        err: (extrap[n - 1] - extrap[n - 2]).abs(),
        quotients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Quadrilateral {
        Quadrilateral::from_array([
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn sector_angles_are_cell_centres() {
        let s = RegionSpec::sector(0.0, 1.0, 4, 0.1);
        assert_eq!(s.angles, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(RegionSpec::compass(4, 0.1).angles[2], std::f64::consts::PI);
    }

    #[test]
    fn oversized_radius_is_rejected() {
        let e = region_map(
            &unit_square(),
            VertexName::A,
            &RegionSpec::compass(8, 1.5),
            MethodChoice::Sc,
            3.0,
        );
        assert!(matches!(e, Err(VerifyError::InvalidConfig(_))));
    }

    #[test]
    fn diagonal_moves_of_a_square_corner_are_neutral() {
        let spec = RegionSpec {
            rho: 0.1,
            rings: 1,
            angles: vec![std::f64::consts::FRAC_PI_4],
        };
        let map = region_map(&unit_square(), VertexName::A, &spec, MethodChoice::Sc, 3.0).unwrap();
        assert_eq!(map.probes[0].sign, 0);
        assert!(!map.probes[0].certain);
    }

    #[test]
    fn slope_rejects_bad_steps() {
        assert!(slope_2_3(2.0, 0.5, &[0.1, 0.05]).is_err());
        assert!(slope_2_3(2.0, 0.5, &[0.05, 0.1, 0.2]).is_err());
    }
}
