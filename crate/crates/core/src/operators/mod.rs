//! Observation map, time reversal, projection onto `Ω₀` and the error
//! operator `K = I − Π·A·Λ`.

pub mod poisson;
pub mod window;

pub use poisson::{conjugate_gradient, dirichlet_projection, harmonic_extension, interior_mask, laplacian, CgOptions};
pub use window::Window;

use crate::error::{PatError, Result};
use crate::media::{BoundaryAbsorption, Edge, Grid2D, InitialSource, Medium, NodeMask, Rect, ScalarField2D};
use crate::record::{ObservationRecord, RecordNode};
use crate::wavesolver::{energy_fields, run, BoundarySpec, Drive, EdgeCondition, RunOutput, RunSpec, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Free space around `Ω`, traces recorded on all of `∂Ω`.
    Transparent,
    /// `∂_ν u + λu_t = 0` on `Γ`, traces recorded on `Γ`.
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrKind {
    /// Backward system keeps `+a·v_t`.
    Standard,
    /// Backward system uses `−a·v_t`.
    Dissipative,
}

impl TrKind {
    fn sign_a(self) -> f64 {
        match self {
            TrKind::Standard => 1.0,
            TrKind::Dissipative => -1.0,
        }
    }
}

/// Everything needed to evaluate `Λ`, `A` and `K` for one setup.
///
/// Sources live on the domain grid of `Ω`. Forward runs use the solver grid,
/// which may extend `Ω` with absorbing strips.
#[derive(Debug, Clone)]
pub struct Model {
    pub geometry: Geometry,
    pub domain: Grid2D,
    pub omega0: Rect,
    pub medium: Medium,
    pub bc: BoundarySpec,
    pub cfg: SolverConfig,
    /// Medium restricted to the domain grid.
    pub domain_medium: Medium,
    pub nodes: Vec<RecordNode>,
    /// `None` in the transparent geometry.
    pub window: Option<Window>,
    pub cg: CgOptions,
    tr_bc: BoundarySpec,
}

fn check_omega0(domain: &Grid2D, omega0: &Rect) -> Result<()> {
    if !omega0.is_valid() || !omega0.strictly_inside(&domain.bounds()) {
        return Err(PatError::Geometry("Ω₀ must lie strictly inside the domain".into()));
    }
    Ok(())
}

impl Model {
    /// Partially reflecting geometry. `bc` lives on the solver grid, carries
    /// `Γ` as its Robin absorption and may hold absorbing strips outside `Ω`.
    pub fn robin(domain: Grid2D, omega0: Rect, medium: Medium, bc: BoundarySpec, cfg: SolverConfig) -> Result<Model> {
        let solver = *medium.grid();
        if !bc.grid().same_shape(&solver) {
            return Err(PatError::Geometry("boundary spec and medium use different grids".into()));
        }
        if solver.subgrid_offset(&domain).is_none() {
            return Err(PatError::Geometry("domain grid is not part of the solver grid".into()));
        }
        check_omega0(&domain, &omega0)?;
        cfg.validate(&solver, &medium.c)?;
        let gamma = bc.gamma();
        if gamma.is_empty() {
            return Err(PatError::Config("robin geometry needs λ > 0 somewhere on the boundary".into()));
        }
        let tol = 1e-9 * domain.dx;
        let db = domain.bounds();
        if gamma.iter().any(|n| db.contains_strictly(n.x, n.y, tol) || !db.shrink(-tol).contains(n.x, n.y)) {
            return Err(PatError::Geometry("Γ must lie on the boundary of the domain".into()));
        }
        let nodes = gamma
            .iter()
            .map(|n| RecordNode { x: n.x, y: n.y, weight: n.weight, lambda: n.lambda })
            .collect();
        let window = Window::new(bc.lambda.lambda0, 0.05)?;
        let domain_medium = medium.restrict_to(&domain)?;
        Ok(Model {
            geometry: Geometry::Robin,
            domain,
            omega0,
            tr_bc: bc.clone(),
            medium,
            bc,
            cfg,
            domain_medium,
            nodes,
            window: Some(window),
            cg: CgOptions::default(),
        })
    }

    /// Transparent geometry: `medium` lives on the solver grid, which is
    /// the domain grid surrounded by a PML on every side.
    pub fn transparent(domain: Grid2D, omega0: Rect, medium: Medium, bc: BoundarySpec, cfg: SolverConfig) -> Result<Model> {
        let solver = *medium.grid();
        if !bc.grid().same_shape(&solver) {
            return Err(PatError::Geometry("boundary spec and medium use different grids".into()));
        }
        if !bc.edges.iter().all(|c| matches!(c, EdgeCondition::Pml { .. })) {
            return Err(PatError::Config("transparent geometry needs a PML on every edge".into()));
        }
        match solver.subgrid_offset(&domain) {
            Some((oi, oj)) if oi > 0 && oj > 0 && oi + domain.nx < solver.nx && oj + domain.ny < solver.ny => {}
            _ => return Err(PatError::Geometry("domain grid must sit strictly inside the solver grid".into())),
        }
        check_omega0(&domain, &omega0)?;
        cfg.validate(&solver, &medium.c)?;
        let mut nodes = Vec::new();
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                if domain.on_perimeter(i, j) {
                    let wx = if i == 0 || i + 1 == domain.nx { 1.0 } else { 0.0 };
                    let wy = if j == 0 || j + 1 == domain.ny { 1.0 } else { 0.0 };
                    // arclength weight: half cells at corners along each edge
                    let weight = wy * if i == 0 || i + 1 == domain.nx { 0.5 * domain.dx } else { domain.dx }
                        + wx * if j == 0 || j + 1 == domain.ny { 0.5 * domain.dy } else { domain.dy };
                    nodes.push(RecordNode { x: domain.x(i), y: domain.y(j), weight, lambda: 0.0 });
                }
            }
        }
        let tr_bc = BoundarySpec::uniform(domain, EdgeCondition::DirichletDriven)?;
        let domain_medium = medium.restrict_to(&domain)?;
        Ok(Model {
            geometry: Geometry::Transparent,
            domain,
            omega0,
            medium,
            bc,
            cfg,
            domain_medium,
            nodes,
            window: None,
            cg: CgOptions::default(),
            tr_bc,
        })
    }

    /// Same model with a different solver configuration (e.g. order 4 for data).
    pub fn with_config(&self, cfg: SolverConfig) -> Result<Model> {
        cfg.validate(self.medium.grid(), &self.medium.c)?;
        Ok(Model { cfg, ..self.clone() })
    }

    pub fn solver_grid(&self) -> &Grid2D {
        self.medium.grid()
    }

    fn check_source(&self, f: &InitialSource) -> Result<()> {
        if !f.grid().same_shape(&self.domain) {
            return Err(PatError::Geometry("source must live on the domain grid".into()));
        }
        Ok(())
    }

    /// Forward run of `f` recording on the observation nodes.
    pub fn forward(&self, f: &InitialSource, dump_every: usize) -> Result<RunOutput> {
        self.check_source(f)?;
        let g = *self.solver_grid();
        let ext = InitialSource { f1: f.f1.extend_to(&g)?, f2: f.f2.extend_to(&g)?, support: f.support };
        let spec = RunSpec { record_on: Some(&self.nodes), dump_every, ..RunSpec::forward() };
        run(&ext, &self.medium, &self.bc, &self.cfg, &spec)
    }

    /// `Λf`: the unwindowed trace on the observation nodes over `[0, T]`.
    pub fn observe(&self, f: &InitialSource) -> Result<ObservationRecord> {
        self.forward(f, 0)?
            .record
            .ok_or_else(|| PatError::Config("forward run produced no record".into()))
    }

    /// Checks that a record matches this model's nodes and time grid.
    pub fn check_record(&self, h: &ObservationRecord) -> Result<()> {
        let expected = ObservationRecord::zeros(self.nodes.clone(), self.cfg.dt, self.cfg.n_steps() + 1)?;
        if !h.same_layout(&expected, 1e-6 * self.domain.dx) || h.n_samples() != expected.n_samples() {
            return Err(PatError::Geometry(format!(
                "record layout ({} nodes, {} samples, dt {}) does not match the model ({} nodes, {} samples, dt {})",
                h.n_nodes(),
                h.n_samples(),
                h.dt,
                expected.n_nodes(),
                expected.n_samples(),
                self.cfg.dt
            )));
        }
        Ok(())
    }

    /// Record with the model's window installed (unchanged when transparent).
    pub fn apply_window(&self, h: &ObservationRecord) -> Result<ObservationRecord> {
        let mut out = h.clone();
        match &self.window {
            Some(w) => w.apply(&mut out)?,
            None => out.clear_window(),
        }
        Ok(out)
    }

    /// Backward run behind [`Model::time_reverse`]; the output lives on the
    /// solver grid (robin) or the domain grid (transparent).
    pub fn time_reverse_run(&self, h: &ObservationRecord, kind: TrKind, dump_every: usize) -> Result<RunOutput> {
        self.check_record(h)?;
        let h = self.apply_window(h)?;
        match self.geometry {
            Geometry::Robin => {
                let ht = h.time_derivative()?;
                let g = *self.solver_grid();
                let zero = InitialSource::zero(g, g.bounds());
                let spec = RunSpec {
                    drive: Some(Drive::Robin { record: &ht, coeff: -1.0 }),
                    dump_every,
                    ..RunSpec::backward(kind.sign_a(), 0.0)
                };
                run(&zero, &self.medium, &self.tr_bc, &self.cfg, &spec)
            }
            Geometry::Transparent => {
                let last = h.n_samples() - 1;
                let phi = harmonic_extension(&h.snapshot_on(self.domain, last)?, self.cg)?;
                let start = InitialSource { f1: phi, f2: ScalarField2D::zeros(self.domain), support: self.domain.bounds() };
                let spec = RunSpec {
                    drive: Some(Drive::Dirichlet { record: &h }),
                    dump_every,
                    ..RunSpec::backward(kind.sign_a(), 0.0)
                };
                run(&start, &self.domain_medium, &self.tr_bc, &self.cfg, &spec)
            }
        }
    }

    /// `A h = (v, v_t)` at `t = 0` on the domain grid.
    pub fn time_reverse(&self, h: &ObservationRecord, kind: TrKind) -> Result<InitialSource> {
        let out = self.time_reverse_run(h, kind, 0)?;
        Ok(InitialSource {
            f1: out.u_end.restrict_to(&self.domain)?,
            f2: out.ut_end.restrict_to(&self.domain)?,
            support: self.domain.bounds(),
        })
    }

    /// `Π_{Ω₀}`: Dirichlet projection of `f1`, restriction of `f2`.
    pub fn project(&self, f: &InitialSource) -> Result<InitialSource> {
        self.check_source(f)?;
        let f1 = dirichlet_projection(&f.f1, &self.omega0, self.cg)?;
        let inside = NodeMask::from_rect(self.domain, &self.omega0);
        let mut f2 = f.f2.clone();
        for (k, v) in f2.values_mut().iter_mut().enumerate() {
            if !inside.contains_index(k) {
                *v = 0.0;
            }
        }
        InitialSource::new(f1, f2, self.omega0)
    }

    /// `Π A h` with the given reversal kind.
    pub fn back_project(&self, h: &ObservationRecord, kind: TrKind) -> Result<InitialSource> {
        self.project(&self.time_reverse(h, kind)?)
    }

    /// `K f = f − Π A Λ f`.
    pub fn error_op(&self, f: &InitialSource, kind: TrKind) -> Result<InitialSource> {
        let h = self.observe(f)?;
        let back = self.back_project(&h, kind)?;
        let mut out = f.sub(&back)?;
        out.support = self.omega0;
        Ok(out)
    }

    /// `sqrt(‖∇f1‖² + ‖c⁻¹f2‖²)` on the domain grid.
    pub fn h_norm(&self, f: &InitialSource) -> f64 {
        h_norm(f, &self.domain_medium)
    }
}

/// `sqrt(‖∇f1‖² + ‖c⁻¹f2‖²)` over the whole grid of `medium`.
pub fn h_norm(f: &InitialSource, medium: &Medium) -> f64 {
    energy_fields(&f.f1, &f.f2, &medium.c, &NodeMask::all(*medium.grid())).sqrt()
}

/// Full-boundary Robin layout with constant `λ` on every edge of `grid`.
pub fn full_robin(grid: Grid2D, lambda: f64) -> Result<BoundarySpec> {
    BoundarySpec::new([EdgeCondition::Robin; 4], BoundaryAbsorption::on_edges(grid, &Edge::ALL, lambda, lambda)?)
}

/// Domain grid enlarged by `n_left, n_right, n_bottom, n_top` nodes.
pub fn enlarge(domain: &Grid2D, n: [usize; 4]) -> Result<Grid2D> {
    let [l, r, b, t] = n;
    Grid2D::new(
        domain.nx + l + r,
        domain.ny + b + t,
        domain.dx,
        domain.dy,
        domain.x(0) - l as f64 * domain.dx,
        domain.y(0) - b as f64 * domain.dy,
    )
}

/// Medium on `solver` from a domain medium, continued outside `Ω` by the
/// nearest domain value (constant along the normal).
pub fn extend_medium(m: &Medium, solver: &Grid2D) -> Result<Medium> {
    let d = *m.grid();
    let (oi, oj) = solver
        .subgrid_offset(&d)
        .ok_or_else(|| PatError::Geometry("domain grid is not part of the solver grid".into()))?;
    let pull = |f: &ScalarField2D| {
        let mut out = ScalarField2D::zeros(*solver);
        for j in 0..solver.ny {
            for i in 0..solver.nx {
                let di = (i as isize - oi as isize).clamp(0, d.nx as isize - 1) as usize;
                let dj = (j as isize - oj as isize).clamp(0, d.ny as isize - 1) as usize;
                out.set(i, j, f.at(di, dj));
            }
        }
        out
    };
    Medium::new(pull(&m.c), pull(&m.a), m.c_floor)
}
