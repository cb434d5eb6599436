use super::{BoundarySpec, EdgeCondition, SolverConfig};
use crate::error::{PatError, Result};
use crate::media::{Edge, Grid2D, Medium, ScalarField2D};

/// Leapfrog pair `(u^n, u^{n−1})` plus staggered PML memory fields at level
/// `n − ½`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: ScalarField2D,
    pub u_prev: ScalarField2D,
    /// `ψ_x` at `(i + ½, j)`, `(nx − 1)·ny` values.
    pub psi_x: Vec<f64>,
    /// `ψ_y` at `(i, j + ½)`, `nx·(ny − 1)` values.
    pub psi_y: Vec<f64>,
    /// Stepping time.
    pub t: f64,
    pub step: usize,
}

impl WaveState {
    pub fn zeros(grid: Grid2D) -> Self {
        WaveState {
            u: ScalarField2D::zeros(grid),
            u_prev: ScalarField2D::zeros(grid),
            psi_x: vec![0.0; (grid.nx - 1) * grid.ny],
            psi_y: vec![0.0; grid.nx * (grid.ny - 1)],
            t: 0.0,
            step: 0,
        }
    }

    /// Backward difference `(u^n − u^{n−1})/dt`.
    pub fn velocity(&self, dt: f64) -> ScalarField2D {
        let mut v = self.u.clone();
        v.values_mut().iter_mut().zip(self.u_prev.values()).for_each(|(a, b)| *a = (*a - b) / dt);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Closure {
    /// Mirror ghost values (Neumann, sponge, Robin without the λ/g terms).
    Even,
    /// Like `Even` but only second order next to the edge.
    Robin,
    /// Antisymmetric ghosts about a zero edge value.
    Odd,
    /// Prescribed edge values.
    Driven,
}

impl Closure {
    fn of(c: EdgeCondition) -> Self {
        match c {
            EdgeCondition::Robin => Closure::Robin,
            EdgeCondition::Neumann | EdgeCondition::Absorber { .. } => Closure::Even,
            EdgeCondition::DirichletZero | EdgeCondition::Pml { .. } => Closure::Odd,
            EdgeCondition::DirichletDriven => Closure::Driven,
        }
    }

    fn fixed(self) -> bool {
        matches!(self, Closure::Odd | Closure::Driven)
    }

    fn reflects(self) -> bool {
        matches!(self, Closure::Even | Closure::Odd)
    }

    fn ghost_sign(self) -> f64 {
        if self == Closure::Odd {
            -1.0
        } else {
            1.0
        }
    }
}

/// Precomputed explicit update for `u_tt + D·u_t = c²Δ_h u − σ_xσ_y u + ∇·ψ + g`,
/// where `D` collects the signed interior damping, layer damping and the
/// Robin boundary terms.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid2D,
    order4: bool,
    dt: f64,
    /// Left, right, bottom, top.
    closures: [Closure; 4],
    c2: Vec<f64>,
    damp: Vec<f64>,
    coef_u: Vec<f64>,
    coef_prev: Vec<f64>,
    coef_r: Vec<f64>,
    active: Vec<bool>,
    sig_x: Vec<f64>,
    sig_y: Vec<f64>,
    pml: Option<PmlCoefficients>,
    robin_targets: Vec<(usize, f64)>,
    dirichlet_targets: Vec<usize>,
    scratch: Vec<f64>,
    psi_x_new: Vec<f64>,
    psi_y_new: Vec<f64>,
}

#[derive(Debug, Clone)]
struct PmlCoefficients {
    px_keep: Vec<f64>,
    px_grad: Vec<f64>,
    py_keep: Vec<f64>,
    py_grad: Vec<f64>,
}

/// Layer profile along one axis: node values and half-node values.
fn layer_profile(
    n: usize,
    h: f64,
    lo: EdgeCondition,
    hi: EdgeCondition,
    pml_only: bool,
) -> (Vec<f64>, Vec<f64>) {
    let eval = |pos: f64| -> f64 {
        // pos in node units from the low edge
        let mut s = 0.0;
        let length = (n - 1) as f64 * h;
        for (cond, dist) in [(lo, pos * h), (hi, length - pos * h)] {
            let params = match cond {
                EdgeCondition::Pml { delta, sigma_max, order } => Some((delta, sigma_max, order)),
                EdgeCondition::Absorber { delta, strength } if !pml_only => Some((delta, strength, 3)),
                _ => None,
            };
            if let Some((delta, smax, order)) = params {
                if dist < delta {
                    s += smax * ((delta - dist) / delta).powi(order);
                }
            }
        }
        s
    };
    let nodes = (0..n).map(|i| eval(i as f64)).collect();
    let half = (0..n - 1).map(|i| eval(i as f64 + 0.5)).collect();
    (nodes, half)
}

impl Stepper {
    /// `sign_a` multiplies the interior damping and `lambda_sign` the Robin
    /// absorption, both in the stepping time direction.
    pub fn new(medium: &Medium, bc: &BoundarySpec, cfg: &SolverConfig, sign_a: f64, lambda_sign: f64) -> Result<Self> {
        let g = *medium.grid();
        if !g.same_shape(bc.grid()) {
            return Err(PatError::Geometry("boundary specification is for a different grid".into()));
        }
        cfg.validate(&g, &medium.c)?;
        let dt = cfg.dt;
        let closures = Edge::ALL.map(|e| Closure::of(bc.edge(e)));
        let [left, right, bottom, top] = bc.edges;

        let c2: Vec<f64> = medium.c.values().iter().map(|c| c * c).collect();
        let (sx_pml, sxh) = layer_profile(g.nx, g.dx, left, right, true);
        let (sy_pml, syh) = layer_profile(g.ny, g.dy, bottom, top, true);
        let (sx_all, _) = layer_profile(g.nx, g.dx, left, right, false);
        let (sy_all, _) = layer_profile(g.ny, g.dy, bottom, top, false);

        let mut active = vec![true; g.len()];
        let mut damp = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                let on = [i == 0, i + 1 == g.nx, j == 0, j + 1 == g.ny];
                if (0..4).any(|e| on[e] && closures[e].fixed()) {
                    active[k] = false;
                }
                let mut d = sign_a * medium.a.values()[k] + sx_all[i] + sy_all[j];
                for e in Edge::ALL {
                    if on[e.index()] && closures[e.index()] == Closure::Robin {
                        let pos = match e {
                            Edge::Left | Edge::Right => j,
                            Edge::Bottom | Edge::Top => i,
                        };
                        d += lambda_sign * 2.0 * c2[k] * bc.lambda.value(e, pos) / e.normal_spacing(&g);
                    }
                }
                damp[k] = d;
            }
        }
        let half = 0.5 * dt;
        let coef_u = damp.iter().map(|d| 2.0 / (1.0 + half * d)).collect();
        let coef_prev = damp.iter().map(|d| (1.0 - half * d) / (1.0 + half * d)).collect();
        let coef_r = damp.iter().map(|d| dt * dt / (1.0 + half * d)).collect();

        let pml = bc.has_pml().then(|| {
            let mut px_keep = vec![0.0; (g.nx - 1) * g.ny];
            let mut px_grad = vec![0.0; (g.nx - 1) * g.ny];
            for j in 0..g.ny {
                for i in 0..g.nx - 1 {
                    let k = i + (g.nx - 1) * j;
                    let zx = sxh[i];
                    let zy = sy_pml[j];
                    let c2h = 0.5 * (c2[g.idx(i, j)] + c2[g.idx(i + 1, j)]);
                    px_keep[k] = (1.0 - half * zx) / (1.0 + half * zx);
                    px_grad[k] = dt * c2h * (zy - zx) / (g.dx * (1.0 + half * zx));
                }
            }
            let mut py_keep = vec![0.0; g.nx * (g.ny - 1)];
            let mut py_grad = vec![0.0; g.nx * (g.ny - 1)];
            for j in 0..g.ny - 1 {
                for i in 0..g.nx {
                    let k = i + g.nx * j;
                    let zy = syh[j];
                    let zx = sx_pml[i];
                    let c2h = 0.5 * (c2[g.idx(i, j)] + c2[g.idx(i, j + 1)]);
                    py_keep[k] = (1.0 - half * zy) / (1.0 + half * zy);
                    py_grad[k] = dt * c2h * (zx - zy) / (g.dy * (1.0 + half * zy));
                }
            }
            PmlCoefficients { px_keep, px_grad, py_keep, py_grad }
        });

        Ok(Stepper {
            grid: g,
            order4: cfg.order == 4,
            dt,
            closures,
            c2,
            damp,
            coef_u,
            coef_prev,
            coef_r,
            active,
            sig_x: sx_pml,
            sig_y: sy_pml,
            pml,
            robin_targets: Vec::new(),
            dirichlet_targets: Vec::new(),
            scratch: vec![0.0; g.len()],
            psi_x_new: vec![0.0; (g.nx - 1) * g.ny],
            psi_y_new: vec![0.0; g.nx * (g.ny - 1)],
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Robin data `g_e = coeff·λ_e·value` on every Robin edge through each
    /// listed node; values are passed per step in the same order.
    pub fn set_robin_drive(&mut self, bc: &BoundarySpec, nodes: &[(usize, usize)], coeff: f64) -> Result<()> {
        let g = self.grid;
        self.robin_targets.clear();
        for &(i, j) in nodes {
            let k = g.idx(i, j);
            let on = [i == 0, i + 1 == g.nx, j == 0, j + 1 == g.ny];
            let mut w = 0.0;
            let mut any = false;
            for e in Edge::ALL {
                if on[e.index()] && self.closures[e.index()] == Closure::Robin {
                    let pos = match e {
                        Edge::Left | Edge::Right => j,
                        Edge::Bottom | Edge::Top => i,
                    };
                    any = true;
                    w += 2.0 * self.c2[k] * bc.lambda.value(e, pos) / e.normal_spacing(&g);
                }
            }
            if !any {
                return Err(PatError::Config(format!("drive node ({i}, {j}) is not on a Robin edge")));
            }
            self.robin_targets.push((k, if self.active[k] { coeff * w } else { 0.0 }));
        }
        Ok(())
    }

    /// Dirichlet values on driven edges; nodes elsewhere are rejected.
    pub fn set_dirichlet_drive(&mut self, nodes: &[(usize, usize)]) -> Result<()> {
        let g = self.grid;
        self.dirichlet_targets.clear();
        for &(i, j) in nodes {
            let on = [i == 0, i + 1 == g.nx, j == 0, j + 1 == g.ny];
            if !(0..4).any(|e| on[e] && self.closures[e] == Closure::Driven) {
                return Err(PatError::Config(format!("drive node ({i}, {j}) is not on a driven edge")));
            }
            self.dirichlet_targets.push(g.idx(i, j));
        }
        Ok(())
    }

    pub fn robin_target_count(&self) -> usize {
        self.robin_targets.len()
    }

    pub fn dirichlet_target_count(&self) -> usize {
        self.dirichlet_targets.len()
    }

    /// Start from `u = f1`, `u_t = v1` (stepping-time velocity); `robin` holds
    /// the drive at level 0 and `dirichlet` the edge values at level 0.
    pub fn init(&mut self, f1: &ScalarField2D, v1: &ScalarField2D, robin: &[f64], dirichlet: &[f64]) -> Result<WaveState> {
        let g = self.grid;
        if !f1.grid().same_shape(&g) || !v1.grid().same_shape(&g) {
            return Err(PatError::Geometry("initial state is on a different grid".into()));
        }
        let mut st = WaveState::zeros(g);
        st.u = f1.clone();
        self.apply_dirichlet(st.u.values_mut(), dirichlet)?;
        self.rhs(st.u.values(), None, robin)?;
        let dt = self.dt;
        let u = st.u.values().to_vec();
        let prev = st.u_prev.values_mut();
        for k in 0..g.len() {
            if self.active[k] {
                let v = v1.values()[k];
                let acc = self.scratch[k] - self.damp[k] * v;
                prev[k] = u[k] - dt * v + 0.5 * dt * dt * acc;
            } else {
                prev[k] = u[k];
            }
        }
        Ok(st)
    }

    /// Advances one level; `robin` is the drive at the current level and
    /// `dirichlet_next` the edge values at the new level.
    pub fn step(&mut self, st: &mut WaveState, robin: &[f64], dirichlet_next: &[f64]) -> Result<()> {
        let g = self.grid;
        if let Some(p) = &self.pml {
            let u = st.u.values();
            for j in 0..g.ny {
                for i in 0..g.nx - 1 {
                    let k = i + (g.nx - 1) * j;
                    let du = u[g.idx(i + 1, j)] - u[g.idx(i, j)];
                    self.psi_x_new[k] = p.px_keep[k] * st.psi_x[k] + p.px_grad[k] * du;
                }
            }
            for j in 0..g.ny - 1 {
                for i in 0..g.nx {
                    let k = i + g.nx * j;
                    let du = u[g.idx(i, j + 1)] - u[g.idx(i, j)];
                    self.psi_y_new[k] = p.py_keep[k] * st.psi_y[k] + p.py_grad[k] * du;
                }
            }
            for (a, b) in st.psi_x.iter_mut().zip(&self.psi_x_new) {
                *a = 0.5 * (*a + b);
            }
            for (a, b) in st.psi_y.iter_mut().zip(&self.psi_y_new) {
                *a = 0.5 * (*a + b);
            }
        }
        let psi = self.pml.is_some().then_some((st.psi_x.as_slice(), st.psi_y.as_slice()));
        self.rhs(st.u.values(), psi, robin)?;
        if self.pml.is_some() {
            st.psi_x.copy_from_slice(&self.psi_x_new);
            st.psi_y.copy_from_slice(&self.psi_y_new);
        }

        let u = st.u.values();
        let prev = st.u_prev.values_mut();
        for k in 0..g.len() {
            prev[k] = if self.active[k] {
                self.coef_u[k] * u[k] - self.coef_prev[k] * prev[k] + self.coef_r[k] * self.scratch[k]
            } else {
                0.0
            };
        }
        self.apply_dirichlet(prev, dirichlet_next)?;
        std::mem::swap(&mut st.u, &mut st.u_prev);
        st.step += 1;
        st.t = st.step as f64 * self.dt;
        if st.step % 64 == 0 && st.u.values().iter().any(|v| !v.is_finite()) {
            return Err(PatError::NumericalBlowup { step: st.step });
        }
        Ok(())
    }

    fn apply_dirichlet(&self, u: &mut [f64], values: &[f64]) -> Result<()> {
        if values.len() != self.dirichlet_targets.len() {
            return Err(PatError::Config(format!(
                "expected {} Dirichlet values, got {}",
                self.dirichlet_targets.len(),
                values.len()
            )));
        }
        for (&k, &v) in self.dirichlet_targets.iter().zip(values) {
            u[k] = v;
        }
        Ok(())
    }

    /// Right-hand side `c²Δ_h u − σ_xσ_y u + ∇·ψ + g` into `scratch`.
    fn rhs(&mut self, u: &[f64], psi: Option<(&[f64], &[f64])>, robin: &[f64]) -> Result<()> {
        if robin.len() != self.robin_targets.len() {
            return Err(PatError::Config(format!(
                "expected {} Robin drive values, got {}",
                self.robin_targets.len(),
                robin.len()
            )));
        }
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let ix2 = 1.0 / (g.dx * g.dx);
        let iy2 = 1.0 / (g.dy * g.dy);
        let band = if self.order4 { 2 } else { 1 };
        let out = &mut self.scratch;
        for j in 0..ny {
            let row = j * nx;
            let inner_row = j >= band && j + band < ny;
            for i in 0..nx {
                let k = row + i;
                if !self.active[k] {
                    out[k] = 0.0;
                    continue;
                }
                let lap = if inner_row && i >= band && i + band < nx {
                    if self.order4 {
                        let uxx = -u[k - 2] + 16.0 * u[k - 1] - 30.0 * u[k] + 16.0 * u[k + 1] - u[k + 2];
                        let uyy = -u[k - 2 * nx] + 16.0 * u[k - nx] - 30.0 * u[k] + 16.0 * u[k + nx] - u[k + 2 * nx];
                        (uxx * ix2 + uyy * iy2) / 12.0
                    } else {
                        (u[k - 1] - 2.0 * u[k] + u[k + 1]) * ix2 + (u[k - nx] - 2.0 * u[k] + u[k + nx]) * iy2
                    }
                } else {
                    let (l, r, b, t) = (self.closures[0], self.closures[1], self.closures[2], self.closures[3]);
                    d2(u, row, 1, i, nx, l, r, self.order4) * ix2 + d2(u, i, nx, j, ny, b, t, self.order4) * iy2
                };
                out[k] = self.c2[k] * lap - self.sig_x[i] * self.sig_y[j] * u[k];
            }
        }
        if let Some((px, py)) = psi {
            for j in 0..ny {
                for i in 0..nx {
                    let k = j * nx + i;
                    if !self.active[k] {
                        continue;
                    }
                    let at_x = |m: usize| px[m + (nx - 1) * j];
                    let right = if i + 1 < nx { at_x(i) } else { -at_x(nx - 2) };
                    let left = if i > 0 { at_x(i - 1) } else { -at_x(0) };
                    let at_y = |m: usize| py[i + nx * m];
                    let up = if j + 1 < ny { at_y(j) } else { -at_y(ny - 2) };
                    let down = if j > 0 { at_y(j - 1) } else { -at_y(0) };
                    out[k] += (right - left) / g.dx + (up - down) / g.dy;
                }
            }
        }
        for (&(k, w), &v) in self.robin_targets.iter().zip(robin) {
            out[k] += w * v;
        }
        Ok(())
    }
}

/// Undivided second difference along one axis at position `i` of `n`, with
/// ghost values supplied by the edge closures.
#[inline]
fn d2(u: &[f64], base: usize, stride: usize, i: usize, n: usize, lo: Closure, hi: Closure, order4: bool) -> f64 {
    let at = |m: isize| -> f64 {
        if m < 0 {
            lo.ghost_sign() * u[base + (-m) as usize * stride]
        } else if m as usize >= n {
            hi.ghost_sign() * u[base + (2 * (n - 1) - m as usize) * stride]
        } else {
            u[base + m as usize * stride]
        }
    };
    let i = i as isize;
    let ok_lo = i >= 2 || lo.reflects();
    let ok_hi = i + 2 <= n as isize - 1 || hi.reflects();
    if order4 && ok_lo && ok_hi && n >= 3 {
        (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) / 12.0
    } else {
        at(i - 1) - 2.0 * at(i) + at(i + 1)
    }
}
