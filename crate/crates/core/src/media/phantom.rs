//! Shepp–Logan head phantom.

use super::grid::{Grid2D, ScalarField2D};
use crate::error::{PatError, Result};

/// One ellipse of the phantom: intensity, semi-axes, centre and rotation (degrees).
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
}

const fn e(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Ellipse {
    Ellipse { intensity, a, b, x0, y0, phi_deg }
}

/// Ten-ellipse table with the classic (non contrast-enhanced) intensities.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    e(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    e(-0.98, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    e(-0.02, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    e(-0.02, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    e(0.01, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    e(0.01, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    e(0.01, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    e(0.01, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    e(0.01, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    e(0.01, 0.0230, 0.0460, 0.06, -0.605, 0.0),
];

impl Ellipse {
    /// Is the phantom-frame point `(x, y)` inside (closed) this ellipse?
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let dx = x - self.x0;
        let dy = y - self.y0;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Phantom value at `(x, y)` for a copy centred at `center` and scaled by `scale`.
pub fn shepp_logan_value(x: f64, y: f64, center: (f64, f64), scale: f64) -> f64 {
    let u = (x - center.0) / scale;
    let v = (y - center.1) / scale;
    if u.abs() > 1.0 || v.abs() > 1.0 {
        return 0.0;
    }
    SHEPP_LOGAN.iter().filter(|el| el.contains(u, v)).map(|el| el.intensity).sum()
}

/// Samples the phantom, affinely mapped so the unit square `[-1,1]²` of the
/// phantom frame becomes `center ± scale`.
pub fn shepp_logan(grid: Grid2D, center: (f64, f64), scale: f64) -> Result<ScalarField2D> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(PatError::Config(format!("phantom scale must be positive, got {scale}")));
    }
    Ok(ScalarField2D::from_fn(grid, |x, y| shepp_logan_value(x, y, center, scale)))
}
