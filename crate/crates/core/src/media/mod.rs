//! Grids, fields, acoustic media, boundary absorption and initial sources.

pub mod filter;
pub mod grid;
pub mod phantom;

pub use filter::{gaussian_smooth, smooth_cutoff, smoothstep};
pub use grid::{Grid2D, NodeMask, Rect, ScalarField2D};
pub use phantom::shepp_logan;

use crate::error::{PatError, Result};
use std::f64::consts::PI;

/// Width of the boundary collar where a cutoff vanishes and of the smooth
/// transition band inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffBand {
    pub collar: f64,
    pub transition: f64,
}

impl Default for CutoffBand {
    fn default() -> Self {
        CutoffBand { collar: 0.02, transition: 0.1 }
    }
}

impl CutoffBand {
    /// `(inner, outer)` boxes of the cutoff for the physical domain `domain`.
    pub fn boxes(&self, domain: &Rect) -> Result<(Rect, Rect)> {
        if !(self.collar > 0.0) || !(self.transition > 0.0) {
            return Err(PatError::Config("collar and transition widths must be positive".into()));
        }
        let half = 0.5 * domain.width().min(domain.height());
        if self.collar + self.transition >= half {
            return Err(PatError::Config(format!(
                "collar {} plus transition {} exceeds half the domain width {half}",
                self.collar, self.transition
            )));
        }
        let outer = domain.shrink(self.collar);
        Ok((outer.shrink(self.transition), outer))
    }
}

/// Sound speed `1.0 + 0.2·sin(2πx) + 0.1·cos(2πy)` inside the domain,
/// blended smoothly to 1 on the collar along `domain`'s boundary and beyond.
pub fn make_sound_speed(grid: Grid2D, domain: &Rect, band: CutoffBand) -> Result<ScalarField2D> {
    let (inner, outer) = band.boxes(domain)?;
    Ok(ScalarField2D::from_fn(grid, |x, y| {
        let chi = filter::cutoff_value(&inner, &outer, x, y);
        1.0 + chi * (paper_speed(x, y) - 1.0)
    }))
}

#[inline]
pub fn paper_speed(x: f64, y: f64) -> f64 {
    1.0 + 0.2 * (2.0 * PI * x).sin() + 0.1 * (2.0 * PI * y).cos()
}

/// Interior damping profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingKind {
    /// `0.5·(x + 1)`
    #[serde(alias = "a1")]
    Linear,
    /// `2·c(x, y)`
    #[serde(alias = "a2")]
    SpeedProportional,
    None,
}

/// Damping coefficient multiplied by a cutoff that vanishes on the collar.
pub fn make_damping(
    grid: Grid2D,
    kind: DampingKind,
    c: &ScalarField2D,
    domain: &Rect,
    band: CutoffBand,
) -> Result<ScalarField2D> {
    if !c.grid().same_shape(&grid) {
        return Err(PatError::Geometry("sound speed is not sampled on the damping grid".into()));
    }
    if kind == DampingKind::None {
        return Ok(ScalarField2D::zeros(grid));
    }
    let (inner, outer) = band.boxes(domain)?;
    let mut out = ScalarField2D::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (grid.x(i), grid.y(j));
            let chi = filter::cutoff_value(&inner, &outer, x, y);
            let raw = match kind {
                DampingKind::Linear => 0.5 * (x + 1.0),
                DampingKind::SpeedProportional => 2.0 * c.at(i, j),
                DampingKind::None => 0.0,
            };
            out.set(i, j, (chi * raw).max(0.0));
        }
    }
    Ok(out)
}

/// Sound speed and interior damping on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub c: ScalarField2D,
    pub a: ScalarField2D,
    pub c_floor: f64,
}

impl Medium {
    pub fn new(c: ScalarField2D, a: ScalarField2D, c_floor: f64) -> Result<Self> {
        if !c.grid().same_shape(a.grid()) {
            return Err(PatError::Geometry("sound speed and damping grids differ".into()));
        }
        if !(c_floor > 0.0) {
            return Err(PatError::Config("sound speed floor must be positive".into()));
        }
        if let Some(v) = c.values().iter().find(|v| !(**v >= c_floor)) {
            return Err(PatError::Config(format!("sound speed {v} below floor {c_floor}")));
        }
        if let Some(v) = a.values().iter().find(|v| !(**v >= 0.0)) {
            return Err(PatError::Config(format!("negative damping {v}")));
        }
        Ok(Medium { c, a, c_floor })
    }

    /// Homogeneous medium with constant speed and damping.
    pub fn uniform(grid: Grid2D, c: f64, a: f64) -> Result<Self> {
        Medium::new(ScalarField2D::constant(grid, c), ScalarField2D::constant(grid, a), c.min(1.0) * 0.5)
    }

    pub fn grid(&self) -> &Grid2D {
        self.c.grid()
    }

    pub fn max_speed(&self) -> f64 {
        self.c.max()
    }

    /// Checks `c = 1` and `a = 0` on every node outside `domain.shrink(collar)`.
    pub fn check_collar(&self, domain: &Rect, collar: f64) -> Result<()> {
        let g = *self.grid();
        let inner = domain.shrink(collar);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if inner.contains_strictly(g.x(i), g.y(j), 0.0) {
                    continue;
                }
                if (self.c.at(i, j) - 1.0).abs() > 1e-12 || self.a.at(i, j) != 0.0 {
                    return Err(PatError::Config(format!(
                        "medium not trivial on the collar at ({}, {})",
                        g.x(i),
                        g.y(j)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Restriction to a subgrid.
    pub fn restrict_to(&self, sub: &Grid2D) -> Result<Medium> {
        Ok(Medium { c: self.c.restrict_to(sub)?, a: self.a.restrict_to(sub)?, c_floor: self.c_floor })
    }
}

/// Grid edges, in the order used by per-edge arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn index(self) -> usize {
        match self {
            Edge::Left => 0,
            Edge::Right => 1,
            Edge::Bottom => 2,
            Edge::Top => 3,
        }
    }

    /// Number of nodes along the edge.
    pub fn len(self, g: &Grid2D) -> usize {
        match self {
            Edge::Left | Edge::Right => g.ny,
            Edge::Bottom | Edge::Top => g.nx,
        }
    }

    /// Grid node of the `k`-th point along the edge.
    pub fn node(self, g: &Grid2D, k: usize) -> (usize, usize) {
        match self {
            Edge::Left => (0, k),
            Edge::Right => (g.nx - 1, k),
            Edge::Bottom => (k, 0),
            Edge::Top => (k, g.ny - 1),
        }
    }

    /// Spacing along the edge.
    pub fn tangential_spacing(self, g: &Grid2D) -> f64 {
        match self {
            Edge::Left | Edge::Right => g.dy,
            Edge::Bottom | Edge::Top => g.dx,
        }
    }

    /// Spacing normal to the edge.
    pub fn normal_spacing(self, g: &Grid2D) -> f64 {
        match self {
            Edge::Left | Edge::Right => g.dx,
            Edge::Bottom | Edge::Top => g.dy,
        }
    }

    pub fn parse(s: &str) -> Option<Edge> {
        match s {
            "left" => Some(Edge::Left),
            "right" => Some(Edge::Right),
            "bottom" => Some(Edge::Bottom),
            "top" => Some(Edge::Top),
            _ => None,
        }
    }
}

/// Robin absorption `λ ≥ 0` at the nodes of each grid edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAbsorption {
    grid: Grid2D,
    per_edge: [Vec<f64>; 4],
    /// Threshold defining the strongly observing part `{λ > λ0}`.
    pub lambda0: f64,
}

impl BoundaryAbsorption {
    pub fn zero(grid: Grid2D) -> Self {
        BoundaryAbsorption {
            grid,
            per_edge: Edge::ALL.map(|e| vec![0.0; e.len(&grid)]),
            lambda0: 0.0,
        }
    }

    pub fn from_fn(grid: Grid2D, lambda0: f64, mut f: impl FnMut(Edge, f64, f64) -> f64) -> Result<Self> {
        let per_edge = Edge::ALL.map(|e| {
            (0..e.len(&grid))
                .map(|k| {
                    let (i, j) = e.node(&grid, k);
                    f(e, grid.x(i), grid.y(j))
                })
                .collect::<Vec<f64>>()
        });
        let out = BoundaryAbsorption { grid, per_edge, lambda0 };
        out.validate()?;
        Ok(out)
    }

    /// Constant `λ` on the listed edges, zero elsewhere.
    pub fn on_edges(grid: Grid2D, edges: &[Edge], lambda: f64, lambda0: f64) -> Result<Self> {
        Self::from_fn(grid, lambda0, |e, _, _| if edges.contains(&e) { lambda } else { 0.0 })
    }

    /// Absorption on the bottom, right and top sides of `domain`, tapered
    /// smoothly to zero over arclength `taper` at the two ends near
    /// `x = domain.xmin`; zero on the left side and on edge nodes outside
    /// `domain`.
    pub fn three_sided(grid: Grid2D, domain: &Rect, lambda: f64, taper: f64, lambda0: f64) -> Result<Self> {
        if !(taper > 0.0) || !(lambda >= 0.0) {
            return Err(PatError::Config("λ taper must be positive and λ non-negative".into()));
        }
        let w = domain.width();
        let h = domain.height();
        let total = 2.0 * w + h;
        let tol = 1e-9 * grid.dx.min(grid.dy);
        let mismatch = |v: f64, target: f64| (v - target).abs() > tol;
        if mismatch(grid.x_max(), domain.xmax) || mismatch(grid.y0, domain.ymin) || mismatch(grid.y_max(), domain.ymax) {
            return Err(PatError::Geometry(
                "grid right/bottom/top edges must coincide with the domain".into(),
            ));
        }
        Self::from_fn(grid, lambda0, |e, x, y| {
            if x < domain.xmin - tol {
                return 0.0;
            }
            let s = match e {
                Edge::Bottom => x - domain.xmin,
                Edge::Right => w + (y - domain.ymin),
                Edge::Top => w + h + (domain.xmax - x),
                Edge::Left => return 0.0,
            };
            lambda * smoothstep(s / taper) * smoothstep((total - s) / taper)
        })
    }

    fn validate(&self) -> Result<()> {
        for (e, vals) in Edge::ALL.iter().zip(&self.per_edge) {
            if vals.len() != e.len(&self.grid) {
                return Err(PatError::Geometry(format!("λ array for {e:?} has wrong length")));
            }
            if let Some(v) = vals.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(PatError::Config(format!("λ must be finite and non-negative, got {v}")));
            }
        }
        if !(self.lambda0 >= 0.0) {
            return Err(PatError::Config("λ0 must be non-negative".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn edge(&self, e: Edge) -> &[f64] {
        &self.per_edge[e.index()]
    }

    pub fn value(&self, e: Edge, k: usize) -> f64 {
        self.per_edge[e.index()][k]
    }

    /// Largest jump of `λ` between adjacent nodes along any edge, per unit length.
    pub fn max_slope(&self) -> f64 {
        let mut m: f64 = 0.0;
        for e in Edge::ALL {
            let h = e.tangential_spacing(&self.grid);
            for w in self.edge(e).windows(2) {
                m = m.max((w[1] - w[0]).abs() / h);
            }
        }
        m
    }

    /// Nodes of the observation boundary `Γ = {λ > 0}`, each listed once, in
    /// edge order. Each entry carries the node, the largest `λ` among the
    /// edges it belongs to and the trapezoid arclength weight of the node
    /// restricted to `Γ` edges.
    pub fn gamma_nodes(&self) -> Vec<GammaNode> {
        let g = self.grid;
        let mut out: Vec<GammaNode> = Vec::new();
        for e in Edge::ALL {
            let vals = self.edge(e);
            let h = e.tangential_spacing(&g);
            for (k, &lam) in vals.iter().enumerate() {
                if lam <= 0.0 {
                    continue;
                }
                let (i, j) = e.node(&g, k);
                let weight = if k == 0 || k + 1 == vals.len() { 0.5 * h } else { h };
                if let Some(existing) = out.iter_mut().find(|n| n.i == i && n.j == j) {
                    existing.lambda = existing.lambda.max(lam);
                    existing.weight += weight;
                    existing.flux_weight += lam * weight;
                } else {
                    out.push(GammaNode { i, j, x: g.x(i), y: g.y(j), lambda: lam, weight, flux_weight: lam * weight });
                }
            }
        }
        out
    }

    pub fn is_empty_gamma(&self) -> bool {
        self.per_edge.iter().all(|v| v.iter().all(|l| *l <= 0.0))
    }
}

/// A node of the observation boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaNode {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
    /// Arclength weight of the node.
    pub weight: f64,
    /// `Σ λ_e·w_e` over the edges through the node; differs from
    /// `lambda·weight` only at corners.
    pub flux_weight: f64,
}

/// Initial state `(f1, f2) = (u, u_t)` at `t = 0`, supported in `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSource {
    pub f1: ScalarField2D,
    pub f2: ScalarField2D,
    pub support: Rect,
}

impl InitialSource {
    pub fn new(f1: ScalarField2D, f2: ScalarField2D, support: Rect) -> Result<Self> {
        if !f1.grid().same_shape(f2.grid()) {
            return Err(PatError::Geometry("source components live on different grids".into()));
        }
        if !support.is_valid() {
            return Err(PatError::Config("support box must have positive extent".into()));
        }
        let g = *f1.grid();
        let mask = NodeMask::from_rect(g, &support);
        for k in 0..g.len() {
            if !mask.contains_index(k) && (f1.values()[k] != 0.0 || f2.values()[k] != 0.0) {
                return Err(PatError::Config("source does not vanish outside its support box".into()));
            }
        }
        Ok(InitialSource { f1, f2, support })
    }

    /// Zero source on `grid`.
    pub fn zero(grid: Grid2D, support: Rect) -> Self {
        InitialSource { f1: ScalarField2D::zeros(grid), f2: ScalarField2D::zeros(grid), support }
    }

    /// Photoacoustic source `(f, −a·f)`; `f` is cut to the support box first.
    pub fn pat(f: &ScalarField2D, a: &ScalarField2D, support: Rect) -> Result<Self> {
        let f1 = f.masked_to(&support);
        let f2 = f1.mul(a)?.scaled(-1.0);
        InitialSource::new(f1, f2, support)
    }

    pub fn grid(&self) -> &Grid2D {
        self.f1.grid()
    }

    pub fn scaled(&self, s: f64) -> Self {
        InitialSource { f1: self.f1.scaled(s), f2: self.f2.scaled(s), support: self.support }
    }

    pub fn add(&self, other: &InitialSource) -> Result<Self> {
        Ok(InitialSource { f1: self.f1.add(&other.f1)?, f2: self.f2.add(&other.f2)?, support: self.support })
    }

    pub fn sub(&self, other: &InitialSource) -> Result<Self> {
        Ok(InitialSource { f1: self.f1.sub(&other.f1)?, f2: self.f2.sub(&other.f2)?, support: self.support })
    }
}
