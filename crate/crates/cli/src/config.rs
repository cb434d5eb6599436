//! Experiment configuration: TOML with one table per block.

use pat_core::media::DampingKind;
use pat_core::operators::TrKind;
use pat_core::{PatError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridBlock,
    pub medium: MediumBlock,
    pub boundary: BoundaryBlock,
    pub source: SourceBlock,
    pub solver: SolverBlock,
    pub recon: ReconBlock,
    pub output: OutputBlock,
    #[serde(default)]
    pub rays: RaysBlock,
}

/// Node counts and spacing of the grid covering `Ω`, which is centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    /// `1 + 0.2 sin 2πx + 0.1 cos 2πy` blended to 1 near `∂Ω`.
    Paper,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumBlock {
    pub speed: SpeedKind,
    /// Used by `speed = "uniform"`.
    #[serde(default = "one")]
    pub speed_value: f64,
    pub damping: DampingKind,
    /// Damping scale factor.
    #[serde(default = "one")]
    pub damping_scale: f64,
    #[serde(default = "default_collar")]
    pub collar: f64,
    #[serde(default = "default_transition")]
    pub transition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Robin on the bottom, right and top sides, left side open.
    ThreeSided,
    /// Robin on all four sides.
    Full,
    /// Free space around `Ω`, complete data on `∂Ω`.
    Transparent,
}

/// How the data simulation terminates the open side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenEdge {
    Pml,
    Absorber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    pub layout: Layout,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub lambda0: f64,
    /// Arclength over which `λ` decays to zero at the ends of `Γ`.
    #[serde(default = "default_taper")]
    pub taper: f64,
    /// Absorbing layer width for reconstruction runs.
    pub pml_delta: f64,
    /// Absorbing layer width for the data simulation.
    pub data_delta: f64,
    #[serde(default = "default_open_edge")]
    pub open_edge: OpenEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    SheppLogan,
    TwoSheppLogan,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub phantom: PhantomKind,
    /// Gaussian smoothing width (length units, 0 disables).
    #[serde(default)]
    pub sigma: f64,
    /// Use `f = (f, −a f)`; otherwise `f = (f, 0)`.
    #[serde(default = "yes")]
    pub pat: bool,
    /// Half-width of the centred support box `Ω₀`.
    pub omega0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_courant")]
    pub courant: f64,
    /// Final time; `1.2·T1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default = "two")]
    pub order: u8,
    #[serde(default = "four")]
    pub data_order: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconMode {
    BackProjection,
    Neumann,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconBlock {
    #[serde(default = "default_mode")]
    pub mode: ReconMode,
    #[serde(default = "default_kind")]
    pub tr_kind: TrKind,
    pub n_terms: usize,
    #[serde(default)]
    pub stop_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    /// Snapshot cadence in steps (0 disables).
    #[serde(default)]
    pub dump_every: usize,
    /// Gray levels for PGM images.
    #[serde(default = "default_window")]
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaysBlock {
    pub n_space: usize,
    pub n_angles: usize,
    pub step: f64,
    pub horizon: f64,
}

impl Default for RaysBlock {
    fn default() -> Self {
        RaysBlock { n_space: 64, n_angles: 128, step: 0.005, horizon: 10.0 }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn two() -> u8 {
    2
}
fn four() -> u8 {
    4
}
fn default_collar() -> f64 {
    0.02
}
fn default_transition() -> f64 {
    0.1
}
fn default_taper() -> f64 {
    0.1
}
fn default_open_edge() -> OpenEdge {
    OpenEdge::Pml
}
fn default_courant() -> f64 {
    0.3
}
fn default_mode() -> ReconMode {
    ReconMode::Both
}
fn default_kind() -> TrKind {
    TrKind::Dissipative
}
fn default_window() -> [f64; 2] {
    [-0.2, 1.0]
}

fn check(ok: bool, field: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(PatError::Config(format!("{field}: {msg}")))
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    check(v > 0.0 && v.is_finite(), field, format!("must be positive and finite, got {v}"))
}

fn non_negative(v: f64, field: &str) -> Result<()> {
    check(v >= 0.0 && v.is_finite(), field, format!("must be non-negative and finite, got {v}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| PatError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PatError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Half-widths of `Ω`.
    pub fn half_extent(&self) -> (f64, f64) {
        let g = &self.grid;
        (0.5 * (g.nx - 1) as f64 * g.dx, 0.5 * (g.ny - 1) as f64 * g.dx)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        check(g.nx >= 11 && g.ny >= 11, "grid", "nx and ny must be at least 11")?;
        check(g.nx <= 20_001 && g.ny <= 20_001, "grid", "nx and ny must not exceed 20001")?;
        positive(g.dx, "grid.dx")?;
        let (hx, hy) = self.half_extent();
        let half = hx.min(hy);

        let m = &self.medium;
        positive(m.speed_value, "medium.speed_value")?;
        non_negative(m.damping_scale, "medium.damping_scale")?;
        positive(m.collar, "medium.collar")?;
        positive(m.transition, "medium.transition")?;
        check(m.collar + m.transition < half, "medium", "collar plus transition must be less than half the domain")?;

        let b = &self.boundary;
        non_negative(b.lambda, "boundary.lambda")?;
        positive(b.lambda0, "boundary.lambda0")?;
        positive(b.taper, "boundary.taper")?;
        positive(b.pml_delta, "boundary.pml_delta")?;
        positive(b.data_delta, "boundary.data_delta")?;
        let nodes = |d: f64| (d / g.dx).round();
        check(nodes(b.pml_delta) >= 4.0, "boundary.pml_delta", "must span at least 4 grid cells")?;
        check(nodes(b.data_delta) >= 4.0, "boundary.data_delta", "must span at least 4 grid cells")?;

        let s = &self.source;
        non_negative(s.sigma, "source.sigma")?;
        positive(s.omega0, "source.omega0")?;
        check(s.omega0 < half - g.dx, "source.omega0", "support box must lie strictly inside the domain")?;

        let v = &self.solver;
        check(v.courant > 0.0 && v.courant <= 1.0, "solver.courant", format!("must be in (0, 1], got {}", v.courant))?;
        if let Some(t) = v.t_final {
            positive(t, "solver.t_final")?;
        }
        check(matches!(v.order, 2 | 4), "solver.order", "must be 2 or 4")?;
        check(matches!(v.data_order, 2 | 4), "solver.data_order", "must be 2 or 4")?;

        let r = &self.recon;
        check(r.n_terms >= 1, "recon.n_terms", "must be at least 1")?;
        non_negative(r.stop_tol, "recon.stop_tol")?;

        let o = &self.output;
        check(!o.dir.is_empty(), "output.dir", "must not be empty")?;
        check(
            o.window[0].is_finite() && o.window[1].is_finite() && o.window[0] < o.window[1],
            "output.window",
            "must be an increasing pair",
        )?;

        let y = &self.rays;
        check(y.n_space >= 2 && y.n_angles >= 2, "rays", "need at least 2 points and 2 angles")?;
        positive(y.step, "rays.step")?;
        positive(y.horizon, "rays.horizon")?;
        Ok(())
    }
}
