//! Discrete energies compatible with the second-order leapfrog scheme.
//!
//! Gradients are differences along grid edges and sums use trapezoid
//! weights relative to the region, so that the second-order Laplacian with
//! mirror ghosts is exactly the negative adjoint of the gradient.

use super::WaveState;
use crate::error::{PatError, Result};
use crate::media::{BoundaryAbsorption, Medium, NodeMask, ScalarField2D};
use crate::record::ObservationRecord;

/// `Σ_edges w·D⁺u·D⁺v` over edges with both ends in `region`.
pub fn gradient_inner(u: &ScalarField2D, v: &ScalarField2D, region: &NodeMask) -> f64 {
    let g = *u.grid();
    let (uu, vv) = (u.values(), v.values());
    let mut s = 0.0;
    let axis_weight = |lo: bool, hi: bool| match (lo, hi) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        _ => 0.5,
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !region.contains(i, j) {
                continue;
            }
            let k = g.idx(i, j);
            let down = j > 0 && region.contains(i, j - 1);
            let up = j + 1 < g.ny && region.contains(i, j + 1);
            let left = i > 0 && region.contains(i - 1, j);
            let right = i + 1 < g.nx && region.contains(i + 1, j);
            if right {
                let wy = axis_weight(down, up);
                s += wy * g.dy / g.dx * (uu[k + 1] - uu[k]) * (vv[k + 1] - vv[k]);
            }
            if up {
                let wx = axis_weight(left, right);
                s += wx * g.dx / g.dy * (uu[k + g.nx] - uu[k]) * (vv[k + g.nx] - vv[k]);
            }
        }
    }
    s
}

/// `Σ W·c⁻²·v²` over `region`.
pub fn weighted_l2(v: &ScalarField2D, c: &ScalarField2D, region: &NodeMask) -> f64 {
    let g = *v.grid();
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = region.weight(i, j);
            if w > 0.0 {
                let k = g.idx(i, j);
                let cc = c.values()[k];
                s += w * v.values()[k].powi(2) / (cc * cc);
            }
        }
    }
    s
}

/// `‖∇u‖² + ‖c⁻¹u_t‖²` over `region`.
pub fn energy_fields(u: &ScalarField2D, ut: &ScalarField2D, c: &ScalarField2D, region: &NodeMask) -> f64 {
    gradient_inner(u, u, region) + weighted_l2(ut, c, region)
}

/// Energy of a leapfrog pair at the half level between `u_prev` and `u`:
/// kinetic part from `(u − u_prev)/dt`, potential part `⟨∇u, ∇u_prev⟩`.
pub fn energy(state: &WaveState, medium: &Medium, region: &NodeMask, dt: f64) -> f64 {
    let v = state.velocity(dt);
    gradient_inner(&state.u, &state.u_prev, region) + weighted_l2(&v, &medium.c, region)
}

/// Per-level energy history of a run.
#[derive(Debug, Clone)]
pub struct EnergyTracker {
    region: NodeMask,
    dt: f64,
    kin_weight: Vec<f64>,
    damp_weight: Vec<f64>,
    flux_weight: Vec<(usize, f64)>,
    /// `E` at level `m − ½`, `m = 0..=N`.
    pub energy: Vec<f64>,
    /// `2∫ a c⁻² u_t²` accumulated over the first `m` steps.
    pub dissipation: Vec<f64>,
    /// `∫ λ u_t² dS` accumulated over the first `m` steps.
    pub boundary: Vec<f64>,
}

impl EnergyTracker {
    /// `damping` is the signed interior damping in the stepping direction and
    /// `flux` lists `(node index, λ·arclength weight)` on the boundary.
    pub fn new(region: &NodeMask, c: &ScalarField2D, damping: &ScalarField2D, flux: Vec<(usize, f64)>, dt: f64) -> Self {
        let g = *c.grid();
        let mut kin_weight = vec![0.0; g.len()];
        let mut damp_weight = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                let w = region.weight(i, j) / c.values()[k].powi(2);
                kin_weight[k] = w;
                damp_weight[k] = w * damping.values()[k];
            }
        }
        EnergyTracker {
            region: region.clone(),
            dt,
            kin_weight,
            damp_weight,
            flux_weight: flux,
            energy: Vec::new(),
            dissipation: Vec::new(),
            boundary: Vec::new(),
        }
    }

    fn half_energy(&self, u: &ScalarField2D, u_prev: &ScalarField2D) -> f64 {
        let kin: f64 = u
            .values()
            .iter()
            .zip(u_prev.values())
            .zip(&self.kin_weight)
            .map(|((a, b), w)| w * ((a - b) / self.dt).powi(2))
            .sum();
        kin + gradient_inner(u, u_prev, &self.region)
    }

    /// Records the starting pair.
    pub fn start(&mut self, st: &WaveState) {
        self.energy = vec![self.half_energy(&st.u, &st.u_prev)];
        self.dissipation = vec![0.0];
        self.boundary = vec![0.0];
    }

    /// Records the pair after a step; `before` is `u^{n−1}` of that step.
    pub fn after_step(&mut self, st: &WaveState, before: &ScalarField2D) {
        let dt = self.dt;
        let (un1, un0) = (st.u.values(), before.values());
        let ut = |k: usize| (un1[k] - un0[k]) / (2.0 * dt);
        let diss: f64 = self
            .damp_weight
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, w)| w * ut(k).powi(2))
            .sum();
        let flux: f64 = self.flux_weight.iter().map(|&(k, w)| w * ut(k).powi(2)).sum();
        let e = self.half_energy(&st.u, &st.u_prev);
        self.energy.push(e);
        self.dissipation.push(self.dissipation.last().copied().unwrap_or(0.0) + 2.0 * dt * diss);
        self.boundary.push(self.boundary.last().copied().unwrap_or(0.0) + dt * flux);
    }

    /// `E + 2∫a c⁻² u_t²` per level.
    pub fn extended(&self) -> Vec<f64> {
        self.energy.iter().zip(&self.dissipation).map(|(e, d)| e + d).collect()
    }
}

/// `∫∫ λ |∂_t h|² dt dS` by the trapezoid rule in time and arclength
/// weights in space; `λ` and weights come from matching record nodes to `Γ`.
pub fn boundary_flux(record: &ObservationRecord, lambda: &BoundaryAbsorption) -> Result<f64> {
    let mut raw = record.clone();
    raw.clear_window();
    let ht = raw.time_derivative()?;
    let g = *lambda.grid();
    let tol = 1e-6 * g.dx.min(g.dy);
    let gamma = lambda.gamma_nodes();
    let weights: Vec<f64> = record
        .nodes
        .iter()
        .map(|n| {
            gamma
                .iter()
                .find(|m| (m.x - n.x).abs() <= tol && (m.y - n.y).abs() <= tol)
                .map_or(0.0, |m| m.flux_weight)
        })
        .collect();
    let ns = ht.n_samples();
    let mut total = 0.0;
    for k in 0..ns {
        let tw = if k == 0 || k + 1 == ns { 0.5 } else { 1.0 };
        let s: f64 = ht.row(k).iter().zip(&weights).map(|(v, w)| w * v * v).sum();
        total += tw * record.dt * s;
    }
    if !total.is_finite() {
        return Err(PatError::NumericalBlowup { step: ns });
    }
    Ok(total)
}
