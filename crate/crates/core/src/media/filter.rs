//! Smooth cutoffs and Gaussian smoothing of grid fields.

use super::grid::{Grid2D, Rect, ScalarField2D};
use crate::error::{PatError, Result};

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³`, clamped to `[0, 1]`.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Normalised position of `(x, y)` in the band between `inner` and `outer`:
/// 0 inside `inner`, 1 on or beyond the boundary of `outer`.
fn band_coordinate(inner: &Rect, outer: &Rect, x: f64, y: f64) -> f64 {
    let sx = ((inner.xmin - x) / (inner.xmin - outer.xmin))
        .max((x - inner.xmax) / (outer.xmax - inner.xmax))
        .max(0.0);
    let sy = ((inner.ymin - y) / (inner.ymin - outer.ymin))
        .max((y - inner.ymax) / (outer.ymax - inner.ymax))
        .max(0.0);
    sx.max(sy)
}

/// Pointwise value of the cutoff built by [`smooth_cutoff`].
pub fn cutoff_value(inner: &Rect, outer: &Rect, x: f64, y: f64) -> f64 {
    1.0 - smoothstep(band_coordinate(inner, outer, x, y))
}

/// Cutoff equal to 1 on `inner`, 0 outside `outer`, with a quintic
/// transition across the band between them.
pub fn smooth_cutoff(grid: Grid2D, inner: &Rect, outer: &Rect) -> Result<ScalarField2D> {
    if !inner.is_valid() || !outer.is_valid() {
        return Err(PatError::Config("cutoff boxes must have positive extent".into()));
    }
    if !inner.strictly_inside(outer) {
        return Err(PatError::Config(
            "cutoff inner box must lie strictly inside the outer box".into(),
        ));
    }
    Ok(ScalarField2D::from_fn(grid, |x, y| cutoff_value(inner, outer, x, y)))
}

fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_cells).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|m| {
            let r = m as f64 - radius as f64;
            (-0.5 * r * r / (sigma_cells * sigma_cells)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable discrete Gaussian convolution with standard deviation `sigma`
/// (length units). Values beyond the grid are treated as zero.
pub fn gaussian_smooth(f: &ScalarField2D, sigma: f64) -> Result<ScalarField2D> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(PatError::Config(format!("smoothing sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let g = *f.grid();
    let kx = gaussian_kernel(sigma / g.dx);
    let ky = gaussian_kernel(sigma / g.dy);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;

    let src = f.values();
    let mut tmp = vec![0.0; g.len()];
    for j in 0..g.ny {
        let row = &src[j * g.nx..(j + 1) * g.nx];
        for i in 0..g.nx {
            let mut s = 0.0;
            for (m, w) in kx.iter().enumerate() {
                let ii = i as isize + m as isize - rx;
                if ii >= 0 && (ii as usize) < g.nx {
                    s += w * row[ii as usize];
                }
            }
            tmp[g.idx(i, j)] = s;
        }
    }
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for (m, w) in ky.iter().enumerate() {
            let jj = j as isize + m as isize - ry;
            if jj < 0 || jj as usize >= g.ny {
                continue;
            }
            let src_row = &tmp[jj as usize * g.nx..(jj as usize + 1) * g.nx];
            let dst_row = &mut out[j * g.nx..(j + 1) * g.nx];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    ScalarField2D::from_values(g, out)
}
