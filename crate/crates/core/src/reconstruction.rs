//! Neumann-series inversion, the one-shot back-projection and error metrics.

use crate::error::{PatError, Result};
use crate::media::{InitialSource, NodeMask, Rect, ScalarField2D};
use crate::operators::{Model, TrKind};
use crate::record::ObservationRecord;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannConfig {
    pub n_terms: usize,
    /// Stop once `‖K^m f⁽⁰⁾‖ / ‖f⁽⁰⁾‖` falls below this (0 disables).
    pub stop_tol: f64,
    pub kind: TrKind,
    /// Keep every partial sum.
    pub record_history: bool,
}

impl Default for NeumannConfig {
    fn default() -> Self {
        NeumannConfig { n_terms: 20, stop_tol: 0.0, kind: TrKind::Dissipative, record_history: false }
    }
}

impl NeumannConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms == 0 {
            return Err(PatError::Config("n_terms must be at least 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(PatError::Config(format!("stop_tol must be non-negative, got {}", self.stop_tol)));
        }
        Ok(())
    }
}

/// Relative errors over `Ω₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rel_l2: f64,
    pub rel_linf: f64,
}

#[derive(Debug, Clone)]
pub struct ReconReport {
    pub reconstruction: InitialSource,
    /// `‖K^m f⁽⁰⁾‖` for `m = 0, 1, …`.
    pub increments: Vec<f64>,
    /// Partial sums `f⁽ᵐ⁾` when history was requested.
    pub history: Vec<InitialSource>,
    /// Metrics of each partial sum (history) or of the final sum only.
    pub metrics: Vec<Option<Metrics>>,
}

impl ReconReport {
    /// `‖K^{m+1}f⁽⁰⁾‖ / ‖K^m f⁽⁰⁾‖`.
    pub fn ratios(&self) -> Vec<f64> {
        self.increments.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Fills the metrics against `truth`; only called after the series is done.
    pub fn attach_truth(&mut self, truth: &ScalarField2D, omega0: &Rect) -> Result<()> {
        let n = self.increments.len();
        self.metrics = vec![None; n];
        if self.history.len() == n {
            for (m, f) in self.history.iter().enumerate() {
                self.metrics[m] = Some(metrics(&f.f1, truth, omega0)?);
            }
        } else if n > 0 {
            self.metrics[n - 1] = Some(metrics(&self.reconstruction.f1, truth, omega0)?);
        }
        Ok(())
    }

    pub fn final_metrics(&self) -> Option<Metrics> {
        self.metrics.last().copied().flatten()
    }

    /// `term,increment_norm,rel_l2,rel_linf` with empty cells where unknown.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("term,increment_norm,rel_l2,rel_linf\n");
        for (m, inc) in self.increments.iter().enumerate() {
            let _ = write!(s, "{m},{inc:.9e}");
            match self.metrics.get(m).copied().flatten() {
                Some(x) => {
                    let _ = writeln!(s, ",{:.9e},{:.9e}", x.rel_l2, x.rel_linf);
                }
                None => s.push_str(",,\n"),
            }
        }
        s
    }
}

/// `Π A h` with the standard reversal.
pub fn back_projection(model: &Model, h: &ObservationRecord) -> Result<InitialSource> {
    model.back_project(h, TrKind::Standard)
}

/// `f = Σ_m K^m Π A h`, summed until `n_terms` terms or the stop rule.
/// Three consecutive growing increments abort with a non-contraction error.
pub fn neumann_reconstruct(model: &Model, h: &ObservationRecord, ncfg: &NeumannConfig) -> Result<ReconReport> {
    ncfg.validate()?;
    let f0 = model.back_project(h, ncfg.kind)?;
    let n0 = model.h_norm(&f0);
    let mut increments = vec![n0];
    let mut sum = f0.clone();
    let mut history = Vec::new();
    if ncfg.record_history {
        history.push(sum.clone());
    }
    let mut term = f0;
    let mut growth = 0;
    for _ in 1..ncfg.n_terms {
        if n0 == 0.0 || increments.last().copied().unwrap_or(0.0) / n0 < ncfg.stop_tol {
            break;
        }
        term = model.error_op(&term, ncfg.kind)?;
        let norm = model.h_norm(&term);
        if !norm.is_finite() {
            return Err(PatError::NumericalBlowup { step: increments.len() });
        }
        growth = if norm > *increments.last().unwrap() { growth + 1 } else { 0 };
        increments.push(norm);
        if growth >= 3 {
            return Err(PatError::NonContraction { norms: increments });
        }
        sum = sum.add(&term)?;
        if ncfg.record_history {
            history.push(sum.clone());
        }
    }
    let n = increments.len();
    Ok(ReconReport { reconstruction: sum, increments, history, metrics: vec![None; n] })
}

/// Relative L² (trapezoid weights) and max-norm errors over `Ω₀`.
pub fn metrics(reco: &ScalarField2D, truth: &ScalarField2D, omega0: &Rect) -> Result<Metrics> {
    let g = *truth.grid();
    if !reco.grid().same_shape(&g) {
        return Err(PatError::Geometry("reconstruction and truth grids differ".into()));
    }
    let mask = NodeMask::from_rect(g, omega0);
    let (mut num, mut den, mut emax, mut tmax) = (0.0, 0.0, 0.0f64, 0.0f64);
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !mask.contains(i, j) {
                continue;
            }
            let w = mask.weight(i, j);
            let (r, t) = (reco.at(i, j), truth.at(i, j));
            num += w * (r - t).powi(2);
            den += w * t * t;
            emax = emax.max((r - t).abs());
            tmax = tmax.max(t.abs());
        }
    }
    if tmax == 0.0 || den == 0.0 {
        return Err(PatError::UndefinedMetric("truth vanishes on Ω₀".into()));
    }
    Ok(Metrics { rel_l2: (num / den).sqrt(), rel_linf: emax / tmax })
}
