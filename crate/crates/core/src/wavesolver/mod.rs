//! Leapfrog time stepping for `u_tt − c²Δu + a·u_t = 0` with Robin, PML,
//! sponge, Neumann and Dirichlet edges, plus energy diagnostics.

pub mod energy;
mod run;
mod stepper;

pub use energy::{boundary_flux, energy, energy_fields, EnergyTracker};
pub use run::{run, Drive, RunOutput, RunSpec};
pub use stepper::{Stepper, WaveState};

use crate::error::{PatError, Result};
use crate::media::{BoundaryAbsorption, Edge, GammaNode, Grid2D, ScalarField2D};
use std::f64::consts::LN_10;

/// Condition imposed on one grid edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCondition {
    /// `∂_ν u + λ∂_t u = g` with `λ` from the boundary absorption.
    Robin,
    Neumann,
    DirichletZero,
    /// Dirichlet values supplied by a drive record (zero off the record nodes).
    DirichletDriven,
    /// Perfectly matched layer of thickness `delta` occupying the grid strip
    /// along the edge; the outer edge itself is held at zero.
    Pml { delta: f64, sigma_max: f64, order: i32 },
    /// Smoothly increasing damping over a strip of width `delta`, reflecting
    /// outer edge.
    Absorber { delta: f64, strength: f64 },
}

impl EdgeCondition {
    /// PML with the default strength for waves of speed up to `max_c`.
    pub fn pml(delta: f64, max_c: f64) -> Self {
        EdgeCondition::Pml { delta, sigma_max: pml_sigma_max(max_c, delta), order: 3 }
    }

    fn layer(&self) -> Option<(f64, f64, i32)> {
        match *self {
            EdgeCondition::Pml { delta, sigma_max, order } => Some((delta, sigma_max, order)),
            EdgeCondition::Absorber { delta, strength } => Some((delta, strength, 3)),
            _ => None,
        }
    }
}

/// `σ_max = 8·max(c)·ln 10 / δ`.
pub fn pml_sigma_max(max_c: f64, delta: f64) -> f64 {
    8.0 * max_c * LN_10 / delta
}

/// One condition per edge plus the Robin absorption profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    /// Indexed by [`Edge::index`].
    pub edges: [EdgeCondition; 4],
    pub lambda: BoundaryAbsorption,
}

impl BoundarySpec {
    pub fn new(edges: [EdgeCondition; 4], lambda: BoundaryAbsorption) -> Result<Self> {
        let g = *lambda.grid();
        for e in Edge::ALL {
            let cond = edges[e.index()];
            if cond != EdgeCondition::Robin && lambda.edge(e).iter().any(|l| *l > 0.0) {
                return Err(PatError::Config(format!("λ > 0 on the non-Robin edge {e:?}")));
            }
            if let Some((delta, strength, order)) = cond.layer() {
                let h = e.normal_spacing(&g);
                let n = e.len(&g);
                let across = match e {
                    Edge::Left | Edge::Right => g.nx,
                    Edge::Bottom | Edge::Top => g.ny,
                };
                if delta < 4.0 * h * (1.0 - 1e-9) {
                    return Err(PatError::Config(format!(
                        "absorbing layer on {e:?} is {:.2} nodes thick; need at least 4",
                        delta / h
                    )));
                }
                if delta >= 0.5 * (across as f64 - 1.0) * h || n < 3 {
                    return Err(PatError::Config(format!("absorbing layer on {e:?} is wider than half the grid")));
                }
                if !(strength >= 0.0) || !strength.is_finite() || order < 1 {
                    return Err(PatError::Config(format!("bad absorbing profile on {e:?}")));
                }
            }
        }
        Ok(BoundarySpec { edges, lambda })
    }

    /// Same condition on all four edges with no absorption.
    pub fn uniform(grid: Grid2D, cond: EdgeCondition) -> Result<Self> {
        BoundarySpec::new([cond; 4], BoundaryAbsorption::zero(grid))
    }

    /// Closed reflecting box.
    pub fn closed(grid: Grid2D) -> Self {
        BoundarySpec { edges: [EdgeCondition::Neumann; 4], lambda: BoundaryAbsorption::zero(grid) }
    }

    pub fn grid(&self) -> &Grid2D {
        self.lambda.grid()
    }

    pub fn edge(&self, e: Edge) -> EdgeCondition {
        self.edges[e.index()]
    }

    pub fn has_pml(&self) -> bool {
        self.edges.iter().any(|c| matches!(c, EdgeCondition::Pml { .. }))
    }

    /// Observation nodes `Γ = {λ > 0}` on Robin edges.
    pub fn gamma(&self) -> Vec<GammaNode> {
        self.lambda.gamma_nodes()
    }
}

/// Spatial order, time step and final time of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub order: u8,
    pub dt: f64,
    pub t_final: f64,
    pub courant: f64,
}

impl SolverConfig {
    /// Largest step not exceeding the CFL step that divides `t_final` evenly.
    pub fn new(grid: &Grid2D, c: &ScalarField2D, order: u8, courant: f64, t_final: f64) -> Result<Self> {
        let limit = cfl_dt(grid, c, courant)?;
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(PatError::Config(format!("final time must be positive, got {t_final}")));
        }
        let n = (t_final / limit - 1e-9).ceil().max(1.0);
        let cfg = SolverConfig { order, dt: t_final / n, t_final, courant };
        cfg.validate(grid, c)?;
        Ok(cfg)
    }

    /// Fixed step; `t_final` is rounded to a whole number of steps.
    pub fn with_dt(order: u8, dt: f64, n_steps: usize, courant: f64) -> Self {
        SolverConfig { order, dt, t_final: dt * n_steps as f64, courant }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self, grid: &Grid2D, c: &ScalarField2D) -> Result<()> {
        if self.order != 2 && self.order != 4 {
            return Err(PatError::Config(format!("spatial order must be 2 or 4, got {}", self.order)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(PatError::Config(format!("time step must be positive, got {}", self.dt)));
        }
        let limit = cfl_dt(grid, c, self.courant)?;
        if self.dt > limit * (1.0 + 1e-9) {
            return Err(PatError::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// `courant·dx / (√2·max c)`.
pub fn cfl_dt(grid: &Grid2D, c: &ScalarField2D, courant: f64) -> Result<f64> {
    if !(courant > 0.0 && courant <= 1.0) {
        return Err(PatError::Config(format!("courant factor must be in (0, 1], got {courant}")));
    }
    if (grid.dx - grid.dy).abs() > 1e-12 * grid.dx {
        return Err(PatError::Unsupported("CFL rule needs dx = dy".into()));
    }
    let cmax = c.max();
    if !(cmax > 0.0) {
        return Err(PatError::Config("sound speed must be positive".into()));
    }
    Ok(courant * grid.dx / (std::f64::consts::SQRT_2 * cmax))
}
