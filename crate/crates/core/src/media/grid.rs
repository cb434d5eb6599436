//! Uniform rectangular grids and node-collocated scalar fields.

use crate::error::{PatError, Result};

/// Uniform node grid; node `(i, j)` sits at `(x0 + i·dx, y0 + j·dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(PatError::Config(format!(
                "grid needs at least 3x3 nodes, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(PatError::Config(format!(
                "grid spacings must be positive, got dx={dx}, dy={dy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(PatError::Config("grid origin must be finite".into()));
        }
        Ok(Grid2D { nx, ny, dx, dy, x0, y0 })
    }

    /// Square grid of `n × n` nodes covering `[-h, h]²` with `h = (n-1)·dx/2`.
    pub fn centered(n: usize, dx: f64) -> Result<Self> {
        let h = (n as f64 - 1.0) * dx / 2.0;
        Grid2D::new(n, n, dx, dx, -h, -h)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(self.x0, self.x_max(), self.y0, self.y_max())
    }

    /// Node nearest to `(x, y)`, or `None` if the point is off the grid by more
    /// than half a cell.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.dx).round();
        let fj = ((y - self.y0) / self.dy).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Node exactly at `(x, y)` up to `tol` cells.
    pub fn node_at(&self, x: f64, y: f64, tol: f64) -> Option<(usize, usize)> {
        let (i, j) = self.nearest_node(x, y)?;
        let ex = (self.x(i) - x).abs() / self.dx;
        let ey = (self.y(j) - y).abs() / self.dy;
        (ex <= tol && ey <= tol).then_some((i, j))
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.dy - other.dy).abs() <= 1e-12 * self.dy
    }

    /// True when `other` has the same spacing and its nodes coincide with
    /// nodes of `self`; returns the index offset of `other`'s node (0,0).
    pub fn subgrid_offset(&self, other: &Grid2D) -> Option<(usize, usize)> {
        if (self.dx - other.dx).abs() > 1e-12 * self.dx || (self.dy - other.dy).abs() > 1e-12 * self.dy {
            return None;
        }
        let (i, j) = self.node_at(other.x0, other.y0, 1e-6)?;
        (i + other.nx <= self.nx && j + other.ny <= self.ny).then_some((i, j))
    }

    /// Is node `(i, j)` on the outer perimeter?
    #[inline]
    pub fn on_perimeter(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Trapezoid cell weight of node `(i, j)` (area element).
    #[inline]
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.dx * self.dy
    }
}

/// Axis-aligned closed rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Rect { xmin, xmax, ymin, ymax }
    }

    /// Square `[-h, h]²`.
    pub const fn centered_square(h: f64) -> Self {
        Rect::new(-h, h, -h, h)
    }

    pub fn is_valid(&self) -> bool {
        self.xmin.is_finite()
            && self.xmax.is_finite()
            && self.ymin.is_finite()
            && self.ymax.is_finite()
            && self.xmax > self.xmin
            && self.ymax > self.ymin
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }

    /// Strict interior test with an absolute slack `eps`.
    #[inline]
    pub fn contains_strictly(&self, x: f64, y: f64, eps: f64) -> bool {
        x > self.xmin + eps && x < self.xmax - eps && y > self.ymin + eps && y < self.ymax - eps
    }

    pub fn shrink(&self, d: f64) -> Rect {
        Rect::new(self.xmin + d, self.xmax - d, self.ymin + d, self.ymax - d)
    }

    pub fn strictly_inside(&self, outer: &Rect) -> bool {
        self.xmin > outer.xmin && self.xmax < outer.xmax && self.ymin > outer.ymin && self.ymax < outer.ymax
    }

    /// Euclidean distance from `(x, y)` to the rectangle (0 inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.xmin - x).max(0.0).max(x - self.xmax);
        let dy = (self.ymin - y).max(0.0).max(y - self.ymax);
        dx.hypot(dy)
    }
}

/// Real field sampled at the nodes of a [`Grid2D`]; `values[i + nx·j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField2D { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        ScalarField2D { grid, values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PatError::Geometry(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(PatError::Config(format!("non-finite field value at index {k}")));
        }
        Ok(ScalarField2D { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        ScalarField2D { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField2D { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    fn check_same(&self, other: &ScalarField2D) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(PatError::Geometry(format!(
                "grid {}x{} does not match grid {}x{}",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )))
        }
    }

    pub fn zip_with(&self, other: &ScalarField2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField2D { grid: self.grid, values })
    }

    pub fn add(&self, other: &ScalarField2D) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField2D) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField2D) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &ScalarField2D) -> Result<()> {
        self.check_same(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                s += g.trapezoid_weight(i, j) * self.values[g.idx(i, j)];
            }
        }
        s
    }

    /// Copies the block of `self` that coincides with `sub` onto a new field on `sub`.
    pub fn restrict_to(&self, sub: &Grid2D) -> Result<ScalarField2D> {
        let (oi, oj) = self.grid.subgrid_offset(sub).ok_or_else(|| {
            PatError::Geometry("target grid is not a subgrid of the field's grid".into())
        })?;
        let mut out = ScalarField2D::zeros(*sub);
        for j in 0..sub.ny {
            for i in 0..sub.nx {
                out.values[sub.idx(i, j)] = self.at(i + oi, j + oj);
            }
        }
        Ok(out)
    }

    /// Embeds `self` into a field on the larger grid `sup`, zero elsewhere.
    pub fn extend_to(&self, sup: &Grid2D) -> Result<ScalarField2D> {
        let (oi, oj) = sup.subgrid_offset(&self.grid).ok_or_else(|| {
            PatError::Geometry("field grid is not a subgrid of the target grid".into())
        })?;
        let mut out = ScalarField2D::zeros(*sup);
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                out.values[sup.idx(i + oi, j + oj)] = self.at(i, j);
            }
        }
        Ok(out)
    }

    /// Sets every node outside `rect` to zero.
    pub fn masked_to(&self, rect: &Rect) -> ScalarField2D {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !rect.contains(g.x(i), g.y(j)) {
                    out.values[g.idx(i, j)] = 0.0;
                }
            }
        }
        out
    }
}

/// Boolean node mask over a grid, used to restrict sums to a region.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMask {
    grid: Grid2D,
    inside: Vec<bool>,
}

impl NodeMask {
    pub fn all(grid: Grid2D) -> Self {
        NodeMask { grid, inside: vec![true; grid.len()] }
    }

    /// Nodes inside the closed rectangle (with a small tolerance for round-off).
    pub fn from_rect(grid: Grid2D, rect: &Rect) -> Self {
        let tol = 1e-9 * grid.dx.min(grid.dy);
        let r = Rect::new(rect.xmin - tol, rect.xmax + tol, rect.ymin - tol, rect.ymax + tol);
        let mut inside = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                inside.push(r.contains(grid.x(i), grid.y(j)));
            }
        }
        NodeMask { grid, inside }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.inside[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn contains_index(&self, k: usize) -> bool {
        self.inside[k]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    /// Trapezoid weight of node `(i, j)` relative to the masked region: half
    /// along each axis where a neighbour on that axis falls outside the region.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if !self.contains(i, j) {
            return 0.0;
        }
        let g = &self.grid;
        let left = i > 0 && self.contains(i - 1, j);
        let right = i + 1 < g.nx && self.contains(i + 1, j);
        let down = j > 0 && self.contains(i, j - 1);
        let up = j + 1 < g.ny && self.contains(i, j + 1);
        let wx = if left && right { 1.0 } else if left || right { 0.5 } else { 0.0 };
        let wy = if down && up { 1.0 } else if down || up { 0.5 } else { 0.0 };
        wx * wy * g.dx * g.dy
    }
}
