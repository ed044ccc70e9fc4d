//! Planar convex hulls (Andrew's monotone chain) for rate regions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Collinearity slack for the orientation test.
const CROSS_TOL: f64 = 1e-12;

/// Convex polygon of rate pairs `(R_a, R_b)` in bits, vertices counterclockwise.
///
/// A region may degenerate to one point or a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub hull: Vec<(f64, f64)>,
}

#[inline]
fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counterclockwise hull starting from the lexicographically smallest point.
/// Duplicates and collinear boundary points are dropped.
pub fn convex_hull_2d(points: &[(f64, f64)]) -> Result<RateRegion> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("convex hull of an empty point set".into()));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("convex hull of non-finite points".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(RateRegion { hull: pts });
    }
    let mut lower: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= CROSS_TOL {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= CROSS_TOL {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(RateRegion { hull: lower })
}

impl RateRegion {
    /// Every consecutive triple turns left (by more than `-tol`).
    pub fn is_convex(&self, tol: f64) -> bool {
        let n = self.hull.len();
        if n < 3 {
            return true;
        }
        (0..n).all(|i| cross(self.hull[i], self.hull[(i + 1) % n], self.hull[(i + 2) % n]) >= -tol)
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.hull.len();
        if n < 3 {
            return 0.0;
        }
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (self.hull[i], self.hull[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        0.5 * twice
    }

    /// Closed-polygon membership with slack `tol`.
    pub fn contains(&self, p: (f64, f64), tol: f64) -> bool {
        match self.hull.len() {
            0 => false,
            1 => {
                let q = self.hull[0];
                (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol
            }
            2 => {
                let (a, b) = (self.hull[0], self.hull[1]);
                let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
                let t = ((p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1)) / (len * len);
                let t = t.clamp(0.0, 1.0);
                let (cx, cy) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
                ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() <= tol
            }
            n => (0..n).all(|i| {
                let (a, b) = (self.hull[i], self.hull[(i + 1) % n]);
                let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
                cross(a, b, p) / len >= -tol
            }),
        }
    }

    /// Largest `R_a + R_b` over the region.
    pub fn max_sum(&self) -> f64 {
        self.hull.iter().map(|p| p.0 + p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn in_nonnegative_quadrant(&self, tol: f64) -> bool {
        self.hull.iter().all(|p| p.0 >= -tol && p.1 >= -tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point() {
        let r = convex_hull_2d(&[(0.3, 0.4)]).unwrap();
        assert_eq!(r.hull, vec![(0.3, 0.4)]);
        let r = convex_hull_2d(&[(0.3, 0.4), (0.3, 0.4)]).unwrap();
        assert_eq!(r.hull, vec![(0.3, 0.4)]);
    }

    #[test]
    fn collinear_keeps_endpoints() {
        let r = convex_hull_2d(&[(0.5, 0.5), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(r.hull, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn empty_is_error() {
        assert!(convex_hull_2d(&[]).is_err());
    }

    #[test]
    fn unit_square_ccw() {
        let pts = [(1.0, 1.0), (0.0, 0.0), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0)];
        let r = convex_hull_2d(&pts).unwrap();
        assert_eq!(r.hull, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!((r.area() - 1.0).abs() < 1e-15);
        assert!(r.is_convex(1e-12));
        assert!(r.contains((0.5, 0.5), 0.0));
        assert!(!r.contains((1.1, 0.5), 1e-9));
    }

    /// A point is extreme iff it is not in the closed convex hull of the
    /// others; for planar sets, checking all triangles and segments suffices.
    fn extreme_points_oracle(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let in_triangle = |p: (f64, f64), a, b, c| {
            let d1 = cross(a, b, p);
            let d2 = cross(b, c, p);
            let d3 = cross(c, a, p);
            let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            !(neg && pos)
        };
        let on_segment = |p: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            cross(a, b, p) == 0.0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        };
        let n = pts.len();
        let mut out = Vec::new();
        'outer: for i in 0..n {
            let p = pts[i];
            for j in 0..n {
                for k in 0..n {
                    if j == i || k == i || j == k {
                        continue;
                    }
                    if on_segment(p, pts[j], pts[k]) {
                        continue 'outer;
                    }
                    for l in 0..n {
                        if l == i || l == j || l == k {
                            continue;
                        }
                        if in_triangle(p, pts[j], pts[k], pts[l]) {
                            continue 'outer;
                        }
                    }
                }
            }
            out.push(p);
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    #[test]
    fn random_points_match_extreme_point_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let pts: Vec<(f64, f64)> = (0..100).map(|_| (rng.random(), rng.random())).collect();
            let hull = convex_hull_2d(&pts).unwrap();
            assert!(hull.is_convex(1e-12));
            let mut got = hull.hull.clone();
            got.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            assert_eq!(got, extreme_points_oracle(&pts));
            assert!(pts.iter().all(|&p| hull.contains(p, 1e-12)));
        }
    }
}
