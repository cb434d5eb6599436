//! Principal symbols of the boundary reflection and back-projection operators.

use crate::error::{PatError, Result};

/// `s = √(c⁻²τ² − |η|²)` on the hyperbolic region `τ < 0`, `c|η| < −τ`.
fn normal_root(c: f64, lambda: f64, tau: f64, eta_norm: f64) -> Result<f64> {
    if !(c > 0.0) || !(lambda >= 0.0) || !(eta_norm >= 0.0) || !lambda.is_finite() || !eta_norm.is_finite() {
        return Err(PatError::Domain(format!("need c > 0, λ ≥ 0, |η| ≥ 0; got c={c}, λ={lambda}, |η|={eta_norm}")));
    }
    if !(tau < 0.0) || !tau.is_finite() {
        return Err(PatError::Domain(format!("τ must be negative, got {tau}")));
    }
    if c * eta_norm >= -tau {
        return Err(PatError::Domain(format!("glancing or elliptic point: c|η| = {} ≥ −τ = {}", c * eta_norm, -tau)));
    }
    Ok(((tau / c).powi(2) - eta_norm * eta_norm).sqrt())
}

/// Reflection coefficient `r = (s + τλ)/(s − τλ)`.
pub fn reflection_coefficient(c: f64, lambda: f64, tau: f64, eta_norm: f64) -> Result<f64> {
    let s = normal_root(c, lambda, tau, eta_norm)?;
    Ok((s + tau * lambda) / (s - tau * lambda))
}

/// Trace symbol `p = 1 + r`.
pub fn symbol_p(c: f64, lambda: f64, tau: f64, eta_norm: f64) -> Result<f64> {
    Ok(1.0 + reflection_coefficient(c, lambda, tau, eta_norm)?)
}

/// Back-projection symbol `q = −τλ / (s − τλ)`.
pub fn symbol_q(c: f64, lambda: f64, tau: f64, eta_norm: f64) -> Result<f64> {
    let s = normal_root(c, lambda, tau, eta_norm)?;
    Ok(-tau * lambda / (s - tau * lambda))
}
