//! Time series of the wave trace on boundary observation nodes.

use crate::error::{PatError, Result};
use crate::media::{Grid2D, ScalarField2D};

/// A boundary node carrying recorded samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordNode {
    pub x: f64,
    pub y: f64,
    /// Arclength weight used by boundary quadratures.
    pub weight: f64,
    /// Absorption `λ` at the node.
    pub lambda: f64,
}

/// Samples `h(t_k, x_n)` for `t_k = k·dt`, `k = 0..n_samples`, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub nodes: Vec<RecordNode>,
    pub dt: f64,
    samples: Vec<f64>,
    window: Option<Vec<f64>>,
}

impl ObservationRecord {
    pub fn zeros(nodes: Vec<RecordNode>, dt: f64, n_samples: usize) -> Result<Self> {
        let n = nodes.len();
        Self::from_samples(nodes, dt, vec![0.0; n * n_samples])
    }

    pub fn from_samples(nodes: Vec<RecordNode>, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(PatError::Config(format!("record time step must be positive, got {dt}")));
        }
        if nodes.is_empty() {
            return Err(PatError::Config("record has no nodes".into()));
        }
        if samples.len() % nodes.len() != 0 {
            return Err(PatError::Format(format!(
                "{} samples do not fill whole rows of {} nodes",
                samples.len(),
                nodes.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(PatError::Format("record contains non-finite samples".into()));
        }
        Ok(ObservationRecord { nodes, dt, samples, window: None })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of time samples (time levels `0..=N` give `N + 1`).
    pub fn n_samples(&self) -> usize {
        self.samples.len() / self.nodes.len()
    }

    /// Final time `T = (n_samples − 1)·dt`.
    pub fn t_final(&self) -> f64 {
        self.n_samples().saturating_sub(1) as f64 * self.dt
    }

    pub fn raw_samples(&self) -> &[f64] {
        &self.samples
    }

    /// Raw (unwindowed) sample.
    pub fn get(&self, step: usize, node: usize) -> f64 {
        self.samples[step * self.nodes.len() + node]
    }

    pub fn set(&mut self, step: usize, node: usize, v: f64) {
        let n = self.nodes.len();
        self.samples[step * n + node] = v;
    }

    pub fn row(&self, step: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.samples[step * n..(step + 1) * n]
    }

    pub fn row_mut(&mut self, step: usize) -> &mut [f64] {
        let n = self.nodes.len();
        &mut self.samples[step * n..(step + 1) * n]
    }

    /// Window value `χ(t_k, x_n)`; 1 when no window is attached.
    pub fn window(&self, step: usize, node: usize) -> f64 {
        match &self.window {
            Some(w) => w[step * self.nodes.len() + node],
            None => 1.0,
        }
    }

    pub fn has_window(&self) -> bool {
        self.window.is_some()
    }

    pub fn set_window(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.samples.len() {
            return Err(PatError::Geometry("window size differs from the sample matrix".into()));
        }
        self.window = Some(w);
        Ok(())
    }

    pub fn clear_window(&mut self) {
        self.window = None;
    }

    /// Windowed sample `χ·h`.
    pub fn value(&self, step: usize, node: usize) -> f64 {
        self.get(step, node) * self.window(step, node)
    }

    /// Copy with the window multiplied into the samples.
    pub fn windowed(&self) -> ObservationRecord {
        let mut samples = self.samples.clone();
        if let Some(w) = &self.window {
            samples.iter_mut().zip(w).for_each(|(s, w)| *s *= w);
        }
        ObservationRecord { nodes: self.nodes.clone(), dt: self.dt, samples, window: None }
    }

    /// Time derivative of the windowed samples: centered differences inside,
    /// second-order one-sided differences at both ends.
    pub fn time_derivative(&self) -> Result<ObservationRecord> {
        let ns = self.n_samples();
        if ns < 3 {
            return Err(PatError::Config(format!("record has {ns} samples; need at least 3")));
        }
        let n = self.n_nodes();
        let dt = self.dt;
        let h = self.windowed();
        let mut out = vec![0.0; ns * n];
        for k in 0..ns {
            for m in 0..n {
                out[k * n + m] = if k == 0 {
                    (-3.0 * h.get(0, m) + 4.0 * h.get(1, m) - h.get(2, m)) / (2.0 * dt)
                } else if k + 1 == ns {
                    (3.0 * h.get(k, m) - 4.0 * h.get(k - 1, m) + h.get(k - 2, m)) / (2.0 * dt)
                } else {
                    (h.get(k + 1, m) - h.get(k - 1, m)) / (2.0 * dt)
                };
            }
        }
        ObservationRecord::from_samples(self.nodes.clone(), dt, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> ObservationRecord {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Checks node count, spacing and positions against another record.
    pub fn same_layout(&self, other: &ObservationRecord, tol: f64) -> bool {
        self.nodes.len() == other.nodes.len()
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol)
    }

    /// Grid indices of every node on `grid`, matched by coordinates.
    pub fn locate_on(&self, grid: &Grid2D) -> Result<Vec<(usize, usize)>> {
        let tol = 1e-6 * grid.dx.min(grid.dy);
        self.nodes
            .iter()
            .map(|n| {
                grid.node_at(n.x, n.y, tol).ok_or_else(|| {
                    PatError::Geometry(format!("record node ({}, {}) is not a grid node", n.x, n.y))
                })
            })
            .collect()
    }

    /// Samples of one node as a time series.
    pub fn trace(&self, node: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|k| self.get(k, node)).collect()
    }

    /// Spatial snapshot of step `k` scattered onto a zero field of `grid`.
    pub fn snapshot_on(&self, grid: Grid2D, step: usize) -> Result<ScalarField2D> {
        let idx = self.locate_on(&grid)?;
        let mut f = ScalarField2D::zeros(grid);
        for (m, (i, j)) in idx.into_iter().enumerate() {
            f.set(i, j, self.value(step, m));
        }
        Ok(f)
    }
}
