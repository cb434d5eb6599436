//! First-order fast marching for `|∇d| = 1/c` with `d = 0` on `Γ`.

use super::trace::RayBoundary;
use crate::error::{PatError, Result};
use crate::media::{Grid2D, ScalarField2D};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // min-heap on distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Travel-time distance to `Γ` sampled on a grid.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub field: ScalarField2D,
}

impl DistanceMap {
    /// Fast marching on the grid of `c`, seeded at the perimeter nodes that
    /// belong to `Γ`.
    pub fn compute(c: &ScalarField2D, boundary: &RayBoundary) -> Result<DistanceMap> {
        let g = *c.grid();
        let tol = 1e-6 * g.dx.min(g.dy);
        let mut seeds = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.on_perimeter(i, j) && boundary.point_in_gamma(g.x(i), g.y(j), tol) {
                    seeds.push(g.idx(i, j));
                }
            }
        }
        if seeds.is_empty() {
            return Err(PatError::Visibility("Γ contains no grid nodes".into()));
        }
        Ok(DistanceMap { field: march(c, &seeds) })
    }

    /// Bilinear interpolation of the distance at `(x, y)`.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let g = self.field.grid();
        let px = ((x - g.x(0)) / g.dx).clamp(0.0, (g.nx - 1) as f64);
        let py = ((y - g.y(0)) / g.dy).clamp(0.0, (g.ny - 1) as f64);
        let i = (px.floor() as usize).min(g.nx - 2);
        let j = (py.floor() as usize).min(g.ny - 2);
        let (wx, wy) = (px - i as f64, py - j as f64);
        let f = |a: usize, b: usize| self.field.at(a, b);
        (1.0 - wy) * ((1.0 - wx) * f(i, j) + wx * f(i + 1, j)) + wy * ((1.0 - wx) * f(i, j + 1) + wx * f(i + 1, j + 1))
    }
}

fn march(c: &ScalarField2D, seeds: &[usize]) -> ScalarField2D {
    let g: Grid2D = *c.grid();
    let n = g.len();
    let mut d = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &k in seeds {
        d[k] = 0.0;
        heap.push(Item(0.0, k));
    }
    while let Some(Item(dk, k)) = heap.pop() {
        if done[k] || dk > d[k] {
            continue;
        }
        done[k] = true;
        let (i, j) = (k % g.nx, k / g.nx);
        let mut nbrs = [usize::MAX; 4];
        if i > 0 {
            nbrs[0] = k - 1;
        }
        if i + 1 < g.nx {
            nbrs[1] = k + 1;
        }
        if j > 0 {
            nbrs[2] = k - g.nx;
        }
        if j + 1 < g.ny {
            nbrs[3] = k + g.nx;
        }
        for &m in nbrs.iter().filter(|m| **m != usize::MAX) {
            if done[m] {
                continue;
            }
            let v = update(&g, &d, &done, m, 1.0 / c.values()[m]);
            if v < d[m] {
                d[m] = v;
                heap.push(Item(v, m));
            }
        }
    }
    ScalarField2D::from_values(g, d).expect("same grid")
}

/// Upwind solve of `((d−a)/dx)² + ((d−b)/dy)² = s²` from accepted neighbours.
fn update(g: &Grid2D, d: &[f64], done: &[bool], k: usize, s: f64) -> f64 {
    let (i, j) = (k % g.nx, k / g.nx);
    let pick = |m: Option<usize>| m.filter(|m| done[*m]).map_or(f64::INFINITY, |m| d[m]);
    let a = pick((i > 0).then(|| k - 1)).min(pick((i + 1 < g.nx).then(|| k + 1)));
    let b = pick((j > 0).then(|| k - g.nx)).min(pick((j + 1 < g.ny).then(|| k + g.nx)));
    let (hx, hy) = (g.dx, g.dy);
    if a.is_finite() && b.is_finite() {
        // both directions upwind
        let (wa, wb) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        let qa = wa + wb;
        let qb = -2.0 * (a * wa + b * wb);
        let qc = a * a * wa + b * b * wb - s * s;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let v = (-qb + disc.sqrt()) / (2.0 * qa);
            if v >= a.max(b) {
                return v;
            }
        }
    }
    (a + s * hx).min(b + s * hy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Rect;

    #[test]
    fn planar_front_is_exact() {
        let g = Grid2D::centered(41, 0.05).unwrap();
        let c = ScalarField2D::constant(g, 2.0);
        let b = RayBoundary::uniform(Rect::centered_square(1.0), [None, Some(1.0), None, None]);
        let m = DistanceMap::compute(&c, &b).unwrap();
        for i in 0..g.nx {
            assert!((m.field.at(i, 7) - (1.0 - g.x(i)) / 2.0).abs() < 1e-12);
        }
    }
}
