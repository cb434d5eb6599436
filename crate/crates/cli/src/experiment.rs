//! Media, sources and models assembled from a configuration.

use crate::config::{ExperimentConfig, Layout, OpenEdge, PhantomKind, SpeedKind};
use pat_core::media::{
    gaussian_smooth, make_damping, make_sound_speed, shepp_logan, BoundaryAbsorption, CutoffBand, Grid2D,
    InitialSource, Medium, Rect, ScalarField2D,
};
use pat_core::operators::{enlarge, Model};
use pat_core::rays::{visibility_times, GridSpeed, RayBoundary, Sampling, VisibilityReport};
use pat_core::wavesolver::{pml_sigma_max, BoundarySpec, EdgeCondition, SolverConfig};
use pat_core::{PatError, Result};

/// Phantom copies as `(centre, scale)`.
pub fn phantom_layout(kind: PhantomKind) -> Vec<((f64, f64), f64)> {
    match kind {
        PhantomKind::SheppLogan => vec![((0.0, 0.0), 0.9)],
        PhantomKind::TwoSheppLogan => vec![((-0.45, 0.4), 0.45), ((0.45, -0.4), 0.45)],
        PhantomKind::Zero => vec![],
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub domain: Grid2D,
    pub omega0: Rect,
    /// Medium restricted to `Ω`.
    pub medium: Medium,
    pub truth: InitialSource,
}

impl Experiment {
    pub fn build(config: &ExperimentConfig) -> Result<Experiment> {
        config.validate()?;
        let g = &config.grid;
        let (hx, hy) = config.half_extent();
        let domain = Grid2D::new(g.nx, g.ny, g.dx, g.dx, -hx, -hy)?;
        let omega0 = Rect::centered_square(config.source.omega0);
        let medium = medium_on(config, domain)?;
        let mut f = ScalarField2D::zeros(domain);
        for (centre, scale) in phantom_layout(config.source.phantom) {
            f.axpy(1.0, &shepp_logan(domain, centre, scale)?)?;
        }
        let f = gaussian_smooth(&f, config.source.sigma)?.masked_to(&omega0);
        let truth = if config.source.pat {
            InitialSource::pat(&f, &medium.a, omega0)?
        } else {
            InitialSource::new(f, ScalarField2D::zeros(domain), omega0)?
        };
        Ok(Experiment { config: config.clone(), domain, omega0, medium, truth })
    }

    pub fn domain_rect(&self) -> Rect {
        self.domain.bounds()
    }

    /// Reconstruction model: order `solver.order`, layer width `pml_delta`.
    pub fn recon_model(&self, cfg: SolverConfig) -> Result<Model> {
        let b = &self.config.boundary;
        self.model(cfg, b.pml_delta, OpenEdge::Pml)
    }

    /// Data model: order `solver.data_order`, layer width `data_delta`.
    pub fn data_model(&self, t_final: f64) -> Result<Model> {
        let b = &self.config.boundary;
        let s = &self.config.solver;
        let cfg = SolverConfig::new(&self.domain, &self.medium.c, s.data_order, s.courant, t_final)?;
        self.model(cfg, b.data_delta, b.open_edge)
    }

    /// Solver settings at order `solver.order` for final time `t_final`.
    pub fn solver_config(&self, t_final: f64) -> Result<SolverConfig> {
        let s = &self.config.solver;
        SolverConfig::new(&self.domain, &self.medium.c, s.order, s.courant, t_final)
    }

    fn model(&self, cfg: SolverConfig, delta: f64, open: OpenEdge) -> Result<Model> {
        let b = &self.config.boundary;
        let n = (delta / self.domain.dx).round() as usize;
        let delta = n as f64 * self.domain.dx;
        let cmax = self.medium.max_speed();
        let layer = match open {
            OpenEdge::Pml => EdgeCondition::pml(delta, cmax),
            OpenEdge::Absorber => EdgeCondition::Absorber { delta, strength: pml_sigma_max(cmax, delta) },
        };
        let rect = self.domain_rect();
        match b.layout {
            Layout::ThreeSided => {
                let solver = enlarge(&self.domain, [n, 0, 0, 0])?;
                let lambda = BoundaryAbsorption::three_sided(solver, &rect, b.lambda, b.taper, b.lambda0)?;
                let bc = BoundarySpec::new([layer, EdgeCondition::Robin, EdgeCondition::Robin, EdgeCondition::Robin], lambda)?;
                Model::robin(self.domain, self.omega0, medium_on(&self.config, solver)?, bc, cfg)
            }
            Layout::Full => {
                let lambda = BoundaryAbsorption::from_fn(self.domain, b.lambda0, |_, _, _| b.lambda)?;
                let bc = BoundarySpec::new([EdgeCondition::Robin; 4], lambda)?;
                Model::robin(self.domain, self.omega0, self.medium.clone(), bc, cfg)
            }
            Layout::Transparent => {
                let solver = enlarge(&self.domain, [n; 4])?;
                let pml = EdgeCondition::pml(delta, cmax);
                let bc = BoundarySpec::new([pml; 4], BoundaryAbsorption::zero(solver))?;
                Model::transparent(self.domain, self.omega0, medium_on(&self.config, solver)?, bc, cfg)
            }
        }
    }

    /// Observation boundary seen by rays.
    pub fn ray_boundary(&self) -> Result<RayBoundary> {
        let b = &self.config.boundary;
        let rect = self.domain_rect();
        Ok(match b.layout {
            Layout::Transparent => RayBoundary::transparent(rect),
            Layout::ThreeSided => {
                let solver = enlarge(&self.domain, [1, 0, 0, 0])?;
                let lambda = BoundaryAbsorption::three_sided(solver, &rect, b.lambda, b.taper, b.lambda0)?;
                let bc = BoundarySpec::new(
                    [EdgeCondition::Neumann, EdgeCondition::Robin, EdgeCondition::Robin, EdgeCondition::Robin],
                    lambda,
                )?;
                RayBoundary::from_spec(&bc, rect)
            }
            Layout::Full => {
                let lambda = BoundaryAbsorption::from_fn(self.domain, b.lambda0, |_, _, _| b.lambda)?;
                RayBoundary::from_spec(&BoundarySpec::new([EdgeCondition::Robin; 4], lambda)?, rect)
            }
        })
    }

    pub fn sampling(&self) -> Sampling {
        let r = &self.config.rays;
        Sampling { n_space: r.n_space, n_angles: r.n_angles, step: r.step, horizon: r.horizon }
    }

    pub fn visibility(&self) -> Result<VisibilityReport> {
        let speed = GridSpeed::new(self.medium.c.clone());
        visibility_times(&speed, &self.medium.c, &self.omega0, &self.ray_boundary()?, &self.sampling())
    }

    /// Configured `T`, or `1.2·T1` from a ray sweep.
    pub fn t_final(&self) -> Result<f64> {
        if let Some(t) = self.config.solver.t_final {
            return Ok(t);
        }
        let rep = self.visibility()?;
        if !rep.t1.is_finite() {
            return Err(PatError::Visibility(format!(
                "solver.t_final is unset and {} sampled rays never reach Γ (T1 = ∞)",
                rep.offenders.len()
            )));
        }
        Ok(1.2 * rep.t1)
    }
}

/// Sound speed and damping sampled on `grid`, cut off relative to `Ω`.
pub fn medium_on(config: &ExperimentConfig, grid: Grid2D) -> Result<Medium> {
    let m = &config.medium;
    let (hx, hy) = config.half_extent();
    let rect = Rect::new(-hx, hx, -hy, hy);
    let band = CutoffBand { collar: m.collar, transition: m.transition };
    let c = match m.speed {
        SpeedKind::Paper => make_sound_speed(grid, &rect, band)?,
        SpeedKind::Uniform => ScalarField2D::constant(grid, m.speed_value),
    };
    let a = make_damping(grid, m.damping, &c, &rect, band)?.scaled(m.damping_scale);
    let floor = 0.5 * c.min();
    Medium::new(c, a, floor)
}
