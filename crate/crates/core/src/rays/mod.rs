//! Rays of the metric `c⁻²dx²`, visibility times and boundary symbols.

pub mod eikonal;
pub mod speed;
pub mod symbols;
pub mod trace;
pub mod visibility;

pub use eikonal::DistanceMap;
pub use speed::{Analytic, GridSpeed, SoundSpeed, Uniform};
pub use symbols::{reflection_coefficient, symbol_p, symbol_q};
pub use trace::{rk4_step, trace, BrokenRay, EdgeKind, RayBoundary, RayEnd, RayState, ReflectionEvent, TraceOptions};
pub use visibility::{t0, visibility_times, Sampling, Seed, VisibilityReport};

use crate::error::{PatError, Result};
use crate::media::ScalarField2D;

/// Travel time from `(x, y)` to `Γ` by fast marching on the grid of `c`.
pub fn dist_to_gamma(x: f64, y: f64, c: &ScalarField2D, boundary: &RayBoundary) -> Result<f64> {
    if boundary.gamma_is_empty() {
        return Err(PatError::Visibility("Γ is empty".into()));
    }
    if !c.grid().bounds().contains(x, y) {
        return Err(PatError::Domain(format!("({x}, {y}) lies outside the grid")));
    }
    Ok(DistanceMap::compute(c, boundary)?.at(x, y))
}
