//! Conjugate-gradient solves of 5-point Dirichlet problems.

use crate::error::{PatError, Result};
use crate::media::{Grid2D, NodeMask, Rect, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual `‖r‖/‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-8, max_iter: 20_000 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
/// Returns the iteration count and final relative residual.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<(usize, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for it in 0..=opts.max_iter {
        let rel = rr.sqrt() / bnorm;
        if rel <= opts.tol {
            return Ok((it, rel));
        }
        if it == opts.max_iter || !rel.is_finite() {
            return Err(PatError::Convergence { iterations: it, residual: rel });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(PatError::Convergence { iterations: it, residual: rel });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    unreachable!()
}

/// `−Δ_h` on the nodes of `mask`, with zero values outside the mask.
fn neg_laplacian_masked(g: &Grid2D, mask: &[bool], x: &[f64], out: &mut [f64]) {
    let ix2 = 1.0 / (g.dx * g.dx);
    let iy2 = 1.0 / (g.dy * g.dy);
    let nx = g.nx;
    let at = |k: usize| if mask[k] { x[k] } else { 0.0 };
    for j in 0..g.ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !mask[k] {
                out[k] = 0.0;
                continue;
            }
            // masked nodes never touch the grid perimeter
            out[k] = (2.0 * x[k] - at(k - 1) - at(k + 1)) * ix2 + (2.0 * x[k] - at(k - nx) - at(k + nx)) * iy2;
        }
    }
}

/// 5-point Laplacian at interior grid nodes (zero on the perimeter).
pub fn laplacian(f: &ScalarField2D) -> ScalarField2D {
    let g = *f.grid();
    let u = f.values();
    let mut out = ScalarField2D::zeros(g);
    let o = out.values_mut();
    let nx = g.nx;
    for j in 1..g.ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            o[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) / (g.dx * g.dx)
                + (u[k - nx] - 2.0 * u[k] + u[k + nx]) / (g.dy * g.dy);
        }
    }
    out
}

/// Discrete harmonic function with the perimeter values of `boundary`
/// (interior values of `boundary` are ignored).
pub fn harmonic_extension(boundary: &ScalarField2D, opts: CgOptions) -> Result<ScalarField2D> {
    let g = *boundary.grid();
    let data = boundary.values();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(PatError::Config("boundary values must be finite".into()));
    }
    let mask: Vec<bool> = (0..g.len()).map(|k| !g.on_perimeter(k % g.nx, k / g.nx)).collect();
    // right-hand side: boundary neighbours moved across
    let mut lifted = ScalarField2D::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            if g.on_perimeter(i, j) {
                lifted.set(i, j, boundary.at(i, j));
            }
        }
    }
    let lap = laplacian(&lifted);
    let b: Vec<f64> = lap.values().iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    let mut x = vec![0.0; g.len()];
    conjugate_gradient(|p, o| neg_laplacian_masked(&g, &mask, p, o), &b, &mut x, opts)?;
    let mut out = lifted;
    for (k, v) in out.values_mut().iter_mut().enumerate() {
        if mask[k] {
            *v = x[k];
        }
    }
    Ok(out)
}

/// Discrete interior of `rect`: closed-mask nodes whose four neighbours are
/// also in the closed mask.
pub fn interior_mask(grid: Grid2D, rect: &Rect) -> Vec<bool> {
    let closed = NodeMask::from_rect(grid, rect);
    (0..grid.len())
        .map(|k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            closed.contains(i, j)
                && i > 0
                && j > 0
                && i + 1 < grid.nx
                && j + 1 < grid.ny
                && closed.contains(i - 1, j)
                && closed.contains(i + 1, j)
                && closed.contains(i, j - 1)
                && closed.contains(i, j + 1)
        })
        .collect()
}

/// Solves `Δ_h g = Δ_h f` on the discrete interior of `rect` with `g = 0`
/// elsewhere: the orthogonal projection of `f` onto fields vanishing outside
/// `rect` in the edge-gradient inner product.
pub fn dirichlet_projection(f: &ScalarField2D, rect: &Rect, opts: CgOptions) -> Result<ScalarField2D> {
    let g = *f.grid();
    if !rect.strictly_inside(&g.bounds()) {
        return Err(PatError::Geometry("projection box must lie strictly inside the grid".into()));
    }
    let mask = interior_mask(g, rect);
    let lap = laplacian(f);
    let b: Vec<f64> = lap.values().iter().zip(&mask).map(|(v, m)| if *m { -v } else { 0.0 }).collect();
    // f itself is the natural starting guess: exact when f already vanishes off the box
    let mut x: Vec<f64> = f.values().iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    conjugate_gradient(|p, o| neg_laplacian_masked(&g, &mask, p, o), &b, &mut x, opts)?;
    ScalarField2D::from_values(g, x)
}
