//! Observation window `χ(t, x)`.

use crate::error::{PatError, Result};
use crate::media::smoothstep;
use crate::record::ObservationRecord;
use std::f64::consts::PI;

/// Spatial taper `s(min(λ/λ0, 1))` times a half-cosine roll-off over the
/// last `fade` fraction of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lambda0: f64,
    pub fade: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window { lambda0: 1.0, fade: 0.05 }
    }
}

impl Window {
    pub fn new(lambda0: f64, fade: f64) -> Result<Self> {
        if !(lambda0 > 0.0) || !(fade > 0.0 && fade <= 1.0) {
            return Err(PatError::Config(format!("window needs lambda0 > 0 and fade in (0, 1], got {lambda0}, {fade}")));
        }
        Ok(Window { lambda0, fade })
    }

    pub fn spatial(&self, lambda: f64) -> f64 {
        smoothstep((lambda / self.lambda0).min(1.0))
    }

    pub fn temporal(&self, t: f64, t_final: f64) -> f64 {
        let start = (1.0 - self.fade) * t_final;
        if t <= start {
            1.0
        } else if t >= t_final {
            0.0
        } else {
            0.5 * (1.0 + (PI * (t - start) / (t_final - start)).cos())
        }
    }

    /// Installs `χ` on `record` (replacing any previous window).
    pub fn apply(&self, record: &mut ObservationRecord) -> Result<()> {
        let ns = record.n_samples();
        let t_final = record.t_final();
        let space: Vec<f64> = record.nodes.iter().map(|n| self.spatial(n.lambda)).collect();
        let mut w = Vec::with_capacity(ns * space.len());
        for k in 0..ns {
            let tw = self.temporal(k as f64 * record.dt, t_final);
            w.extend(space.iter().map(|s| s * tw));
        }
        record.set_window(w)
    }
}
