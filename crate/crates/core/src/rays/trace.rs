//! Hamiltonian ray flow of `H = c(x)|ξ|` with reflections at box edges.

use super::speed::SoundSpeed;
use super::symbols::reflection_coefficient;
use crate::error::{PatError, Result};
use crate::media::{Edge, Rect};
use crate::wavesolver::{BoundarySpec, EdgeCondition};

/// Position, cotangent vector and elapsed travel time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
    pub t: f64,
}

impl RayState {
    /// Unit-speed state at `(x, y)` heading at angle `theta`.
    pub fn launch(speed: &dyn SoundSpeed, x: f64, y: f64, theta: f64) -> Self {
        let k = 1.0 / speed.c(x, y);
        RayState { x, y, xi: k * theta.cos(), eta: k * theta.sin(), t: 0.0 }
    }

    /// `c(x)|ξ|`, equal to 1 on unit-speed states.
    pub fn hamiltonian(&self, speed: &dyn SoundSpeed) -> f64 {
        speed.c(self.x, self.y) * self.xi.hypot(self.eta)
    }

    /// Same point, opposite direction.
    pub fn reversed(&self) -> Self {
        RayState { xi: -self.xi, eta: -self.eta, ..*self }
    }

    fn normalized(mut self, speed: &dyn SoundSpeed) -> Self {
        let s = 1.0 / self.hamiltonian(speed);
        self.xi *= s;
        self.eta *= s;
        self
    }
}

fn flow(speed: &dyn SoundSpeed, s: &[f64; 4]) -> [f64; 4] {
    let c = speed.c(s[0], s[1]);
    let (cx, cy) = speed.grad(s[0], s[1]);
    let k = s[2].hypot(s[3]);
    [c * s[2] / k, c * s[3] / k, -k * cx, -k * cy]
}

/// One classical RK4 step of length `h`, without renormalisation.
pub fn rk4_step(speed: &dyn SoundSpeed, st: &RayState, h: f64) -> RayState {
    let s0 = [st.x, st.y, st.xi, st.eta];
    let add = |a: &[f64; 4], b: &[f64; 4], w: f64| [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2], a[3] + w * b[3]];
    let k1 = flow(speed, &s0);
    let k2 = flow(speed, &add(&s0, &k1, 0.5 * h));
    let k3 = flow(speed, &add(&s0, &k2, 0.5 * h));
    let k4 = flow(speed, &add(&s0, &k3, h));
    let mut out = s0;
    for q in 0..4 {
        out[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    }
    RayState { x: out[0], y: out[1], xi: out[2], eta: out[3], t: st.t + h }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Waves leave the box.
    Open,
    /// Mirror reflection with the Robin amplitude factor.
    Reflecting,
}

/// Edges of the box `Ω` as seen by rays.
#[derive(Debug, Clone, PartialEq)]
pub struct RayBoundary {
    pub domain: Rect,
    pub kinds: [EdgeKind; 4],
    /// Per edge: first sample coordinate, spacing and `λ` samples along it.
    lambda: [(f64, f64, Vec<f64>); 4],
    /// Whole edge belongs to `Γ` regardless of `λ`.
    observed: [bool; 4],
}

fn edge_coord(e: Edge, x: f64, y: f64) -> f64 {
    match e {
        Edge::Left | Edge::Right => y,
        Edge::Bottom | Edge::Top => x,
    }
}

impl RayBoundary {
    /// Every edge open and observed.
    pub fn transparent(domain: Rect) -> Self {
        RayBoundary {
            domain,
            kinds: [EdgeKind::Open; 4],
            lambda: Default::default(),
            observed: [true; 4],
        }
    }

    /// Constant `λ` on reflecting edges; `None` marks an open unobserved edge.
    pub fn uniform(domain: Rect, lambda: [Option<f64>; 4]) -> Self {
        let mut b = RayBoundary {
            domain,
            kinds: [EdgeKind::Open; 4],
            lambda: Default::default(),
            observed: [false; 4],
        };
        for e in Edge::ALL {
            if let Some(l) = lambda[e.index()] {
                b.kinds[e.index()] = EdgeKind::Reflecting;
                b.lambda[e.index()] = (0.0, 1.0, vec![l, l]);
                let (lo, hi) = match e {
                    Edge::Left | Edge::Right => (domain.ymin, domain.ymax),
                    Edge::Bottom | Edge::Top => (domain.xmin, domain.xmax),
                };
                b.lambda[e.index()].0 = lo;
                b.lambda[e.index()].1 = hi - lo;
            }
        }
        b
    }

    /// Edges of `domain` from a solver boundary spec. Domain edges that do
    /// not coincide with a solver-grid edge, or carry an absorbing layer,
    /// are open.
    pub fn from_spec(bc: &BoundarySpec, domain: Rect) -> Self {
        let g = *bc.grid();
        let gb = g.bounds();
        let tol = 1e-6 * g.dx.min(g.dy);
        let mut b = RayBoundary {
            domain,
            kinds: [EdgeKind::Open; 4],
            lambda: Default::default(),
            observed: [false; 4],
        };
        for e in Edge::ALL {
            let coincide = match e {
                Edge::Left => (gb.xmin - domain.xmin).abs() < tol,
                Edge::Right => (gb.xmax - domain.xmax).abs() < tol,
                Edge::Bottom => (gb.ymin - domain.ymin).abs() < tol,
                Edge::Top => (gb.ymax - domain.ymax).abs() < tol,
            };
            let reflecting = matches!(
                bc.edge(e),
                EdgeCondition::Robin | EdgeCondition::Neumann | EdgeCondition::DirichletZero
            );
            if coincide && reflecting {
                b.kinds[e.index()] = EdgeKind::Reflecting;
                let (start, h) = match e {
                    Edge::Left | Edge::Right => (g.y(0), g.dy),
                    Edge::Bottom | Edge::Top => (g.x(0), g.dx),
                };
                b.lambda[e.index()] = (start, h, bc.lambda.edge(e).to_vec());
            }
        }
        b
    }

    /// Linear interpolation of `λ` at coordinate `s` along `e`.
    pub fn lambda_at(&self, e: Edge, s: f64) -> f64 {
        let (start, h, vals) = &self.lambda[e.index()];
        if vals.is_empty() {
            return 0.0;
        }
        let p = ((s - start) / h).clamp(0.0, (vals.len() - 1) as f64);
        let k = (p.floor() as usize).min(vals.len().saturating_sub(2));
        let w = p - k as f64;
        if vals.len() == 1 {
            return vals[0];
        }
        (1.0 - w) * vals[k] + w * vals[k + 1]
    }

    pub fn in_gamma(&self, e: Edge, s: f64) -> bool {
        self.observed[e.index()] || self.lambda_at(e, s) > 0.0
    }

    pub fn gamma_is_empty(&self) -> bool {
        !self.observed.iter().any(|o| *o) && self.lambda.iter().all(|(_, _, v)| v.iter().all(|l| *l <= 0.0))
    }

    /// Is `(x, y)` a point of `Γ` (within `tol` of an edge)?
    pub fn point_in_gamma(&self, x: f64, y: f64, tol: f64) -> bool {
        let d = &self.domain;
        Edge::ALL.iter().any(|&e| {
            let on = match e {
                Edge::Left => (x - d.xmin).abs() <= tol,
                Edge::Right => (x - d.xmax).abs() <= tol,
                Edge::Bottom => (y - d.ymin).abs() <= tol,
                Edge::Top => (y - d.ymax).abs() <= tol,
            };
            on && self.in_gamma(e, edge_coord(e, x, y))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub edge: Edge,
    /// Unit directions before and after.
    pub incident: (f64, f64),
    pub reflected: (f64, f64),
    pub lambda: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayEnd {
    TimeUp,
    Escaped,
    /// Stopped at the first point of `Γ` (when asked to).
    Gamma,
    Corner,
    /// Hit an edge with normal direction component below `1e-6`.
    Grazing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenRay {
    /// `(t, x, y, amplitude)` per step when paths are kept.
    pub samples: Vec<(f64, f64, f64, f64)>,
    pub events: Vec<ReflectionEvent>,
    pub end: RayEnd,
    pub final_state: RayState,
    pub amplitude: f64,
    pub hit_gamma: Option<f64>,
}

impl BrokenRay {
    pub fn escaped(&self) -> bool {
        self.end == RayEnd::Escaped
    }

    /// `t,x,y,amplitude` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,amplitude\n");
        for (t, x, y, a) in &self.samples {
            s.push_str(&format!("{t:.9},{x:.9},{y:.9},{a:.9}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub t_max: f64,
    pub step: f64,
    pub stop_at_gamma: bool,
    pub keep_path: bool,
}

const GRAZING: f64 = 1e-6;
const CORNER: f64 = 1e-7;

fn outside(d: &Rect, s: &RayState) -> bool {
    s.x < d.xmin || s.x > d.xmax || s.y < d.ymin || s.y > d.ymax
}

/// Integrates the ray from `start` with reflections, escapes and stops as
/// described by `boundary`.
pub fn trace(start: RayState, speed: &dyn SoundSpeed, boundary: &RayBoundary, opts: TraceOptions) -> Result<BrokenRay> {
    let d = boundary.domain;
    let limit = (0.5 * speed.resolution()).min(0.05 * d.width().min(d.height()));
    if !(opts.step > 0.0) || opts.step > limit * (1.0 + 1e-12) {
        return Err(PatError::Config(format!("ray step {} must be in (0, {limit}]", opts.step)));
    }
    if !(opts.t_max >= 0.0) || !opts.t_max.is_finite() {
        return Err(PatError::Config(format!("ray horizon must be finite and non-negative, got {}", opts.t_max)));
    }
    if !d.contains(start.x, start.y) {
        return Err(PatError::Domain(format!("ray start ({}, {}) lies outside the domain", start.x, start.y)));
    }
    let mut st = start.normalized(speed);
    let t_end = start.t + opts.t_max;
    let mut amp = 1.0;
    let mut out = BrokenRay {
        samples: Vec::new(),
        events: Vec::new(),
        end: RayEnd::TimeUp,
        final_state: st,
        amplitude: 1.0,
        hit_gamma: None,
    };
    if opts.keep_path {
        out.samples.push((st.t, st.x, st.y, amp));
    }
    while st.t < t_end - 1e-14 {
        let h = opts.step.min(t_end - st.t);
        let next = rk4_step(speed, &st, h).normalized(speed);
        if !outside(&d, &next) {
            st = next;
            if opts.keep_path {
                out.samples.push((st.t, st.x, st.y, amp));
            }
            continue;
        }
        // bisect the step length down to the crossing
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if outside(&d, &rk4_step(speed, &st, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut hit = rk4_step(speed, &st, hi).normalized(speed);
        let over = [d.xmin - hit.x, hit.x - d.xmax, d.ymin - hit.y, hit.y - d.ymax];
        let edge = Edge::ALL[(0..4).max_by(|a, b| over[*a].total_cmp(&over[*b])).unwrap()];
        match edge {
            Edge::Left => hit.x = d.xmin,
            Edge::Right => hit.x = d.xmax,
            Edge::Bottom => hit.y = d.ymin,
            Edge::Top => hit.y = d.ymax,
        }
        hit.x = hit.x.clamp(d.xmin, d.xmax);
        hit.y = hit.y.clamp(d.ymin, d.ymax);
        st = hit;
        if opts.keep_path {
            out.samples.push((st.t, st.x, st.y, amp));
        }
        let near_x = (st.x - d.xmin).abs() < CORNER || (st.x - d.xmax).abs() < CORNER;
        let near_y = (st.y - d.ymin).abs() < CORNER || (st.y - d.ymax).abs() < CORNER;
        if near_x && near_y {
            out.end = RayEnd::Corner;
            break;
        }
        let s = edge_coord(edge, st.x, st.y);
        if boundary.in_gamma(edge, s) && out.hit_gamma.is_none() {
            out.hit_gamma = Some(st.t - start.t);
            if opts.stop_at_gamma {
                out.end = RayEnd::Gamma;
                break;
            }
        }
        if boundary.kinds[edge.index()] == EdgeKind::Open {
            out.end = RayEnd::Escaped;
            break;
        }
        let c = speed.c(st.x, st.y);
        let (nx, ny) = match edge {
            Edge::Left => (-1.0, 0.0),
            Edge::Right => (1.0, 0.0),
            Edge::Bottom => (0.0, -1.0),
            Edge::Top => (0.0, 1.0),
        };
        let xi_n = st.xi * nx + st.eta * ny;
        if c * xi_n.abs() < GRAZING {
            out.end = RayEnd::Grazing;
            break;
        }
        let eta_t = (st.xi * ny - st.eta * nx).abs();
        let lambda = boundary.lambda_at(edge, s);
        let r = reflection_coefficient(c, lambda, -1.0, eta_t.min((1.0 - 1e-15) / c))?;
        let incident = (c * st.xi, c * st.eta);
        st.xi -= 2.0 * xi_n * nx;
        st.eta -= 2.0 * xi_n * ny;
        amp *= r;
        out.events.push(ReflectionEvent {
            t: st.t,
            x: st.x,
            y: st.y,
            edge,
            incident,
            reflected: (c * st.xi, c * st.eta),
            lambda,
            r,
        });
    }
    out.final_state = st;
    out.amplitude = amp;
    Ok(out)
}
