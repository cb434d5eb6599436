//! `T0` and `T1` for a source box and an observation boundary.

use super::eikonal::DistanceMap;
use super::speed::SoundSpeed;
use super::trace::{trace, RayBoundary, RayEnd, RayState, TraceOptions};
use crate::error::{PatError, Result};
use crate::media::{NodeMask, Rect, ScalarField2D};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    /// Seeds per side of `Ω₀`.
    pub n_space: usize,
    pub n_angles: usize,
    pub step: f64,
    /// Longest branch length before a seed counts as invisible.
    pub horizon: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { n_space: 64, n_angles: 128, step: 0.005, horizon: 10.0 }
    }
}

/// A sampled direction with its visibility time (∞ when neither branch
/// reaches `Γ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    pub t0: f64,
    /// `f64::INFINITY` when some seed is invisible.
    pub t1: f64,
    pub offenders: Vec<Seed>,
    /// Seeds with the largest finite times, worst first.
    pub worst: Vec<Seed>,
    /// Seeds skipped because a branch grazed an edge or hit a corner.
    pub degenerate: usize,
    pub n_seeds: usize,
}

impl VisibilityReport {
    pub fn visible(&self, t: f64) -> bool {
        self.offenders.is_empty() && t > self.t1
    }

    /// `x,y,theta,time` for offenders followed by the worst visible seeds.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,x,y,theta,time\n");
        for (kind, list) in [("offender", &self.offenders), ("worst", &self.worst)] {
            for q in list {
                s.push_str(&format!("{kind},{:.6},{:.6},{:.6},{:.6}\n", q.x, q.y, q.theta, q.time));
            }
        }
        s
    }
}

enum Branch {
    Hit(f64),
    Miss,
    Degenerate,
}

fn branch(st: RayState, speed: &dyn SoundSpeed, boundary: &RayBoundary, step: f64, t_max: f64) -> Result<Branch> {
    let opts = TraceOptions { t_max, step, stop_at_gamma: true, keep_path: false };
    let ray = trace(st, speed, boundary, opts)?;
    Ok(match (ray.hit_gamma, ray.end) {
        (Some(t), _) => Branch::Hit(t),
        (None, RayEnd::Corner | RayEnd::Grazing) => Branch::Degenerate,
        _ => Branch::Miss,
    })
}

/// `T0` from fast marching over the nodes of `c` inside `omega0`.
pub fn t0(c: &ScalarField2D, omega0: &Rect, boundary: &RayBoundary) -> Result<f64> {
    if boundary.gamma_is_empty() {
        return Err(PatError::Visibility("Γ is empty".into()));
    }
    let map = DistanceMap::compute(c, boundary)?;
    let mask = NodeMask::from_rect(*c.grid(), omega0);
    Ok(map
        .field
        .values()
        .iter()
        .enumerate()
        .filter(|(k, _)| mask.contains_index(*k))
        .fold(0.0f64, |m, (_, v)| m.max(*v)))
}

/// `T0` by fast marching on the grid of `c`; `T1` by tracing both branches
/// of every seed `(x, θ)` with `x` on an `n_space²` lattice of `omega0`.
pub fn visibility_times(
    speed: &dyn SoundSpeed,
    c: &ScalarField2D,
    omega0: &Rect,
    boundary: &RayBoundary,
    sampling: &Sampling,
) -> Result<VisibilityReport> {
    if sampling.n_space < 2 || sampling.n_angles < 2 || !(sampling.horizon > 0.0) {
        return Err(PatError::Config("visibility sampling needs ≥ 2 points, ≥ 2 angles and a positive horizon".into()));
    }
    let t0 = t0(c, omega0, boundary)?;
    let n = sampling.n_space;
    let coords: Vec<(f64, f64)> = (0..n * n)
        .map(|k| {
            let (a, b) = ((k % n) as f64 / (n - 1) as f64, (k / n) as f64 / (n - 1) as f64);
            (omega0.xmin + a * omega0.width(), omega0.ymin + b * omega0.height())
        })
        .collect();
    let angles: Vec<f64> = (0..sampling.n_angles).map(|k| 2.0 * PI * k as f64 / sampling.n_angles as f64).collect();
    let results: Vec<Result<Vec<Option<Seed>>>> = coords
        .par_iter()
        .map(|&(x, y)| {
            angles
                .iter()
                .map(|&theta| {
                    let st = RayState::launch(speed, x, y, theta);
                    let plus = branch(st, speed, boundary, sampling.step, sampling.horizon)?;
                    // the backward branch only matters if it could arrive first
                    let cap = match plus {
                        Branch::Hit(t) => t,
                        _ => sampling.horizon,
                    };
                    let minus = branch(st.reversed(), speed, boundary, sampling.step, cap)?;
                    let time = match (plus, minus) {
                        (Branch::Hit(a), Branch::Hit(b)) => a.min(b),
                        (Branch::Hit(a), _) | (_, Branch::Hit(a)) => a,
                        (Branch::Degenerate, _) | (_, Branch::Degenerate) => return Ok(None),
                        _ => f64::INFINITY,
                    };
                    Ok(Some(Seed { x, y, theta, time }))
                })
                .collect()
        })
        .collect();
    let mut seeds = Vec::new();
    let mut degenerate = 0;
    for r in results {
        for s in r? {
            match s {
                Some(s) => seeds.push(s),
                None => degenerate += 1,
            }
        }
    }
    let offenders: Vec<Seed> = seeds.iter().filter(|s| !s.time.is_finite()).copied().collect();
    let mut finite: Vec<Seed> = seeds.iter().filter(|s| s.time.is_finite()).copied().collect();
    finite.sort_by(|a, b| b.time.total_cmp(&a.time));
    let t1 = if offenders.is_empty() { finite.first().map_or(0.0, |s| s.time) } else { f64::INFINITY };
    finite.truncate(10);
    Ok(VisibilityReport { t0, t1, offenders, worst: finite, degenerate, n_seeds: n * n * sampling.n_angles })
}
