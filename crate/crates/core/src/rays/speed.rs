//! Sound speed models evaluated off the grid.

use crate::media::{Grid2D, ScalarField2D};

pub trait SoundSpeed: Sync {
    fn c(&self, x: f64, y: f64) -> f64;

    /// `∇c`; central differences unless overridden.
    fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let h = 1e-6;
        (
            (self.c(x + h, y) - self.c(x - h, y)) / (2.0 * h),
            (self.c(x, y + h) - self.c(x, y - h)) / (2.0 * h),
        )
    }

    /// Length scale on which `c` varies (grid spacing for sampled fields).
    fn resolution(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform(pub f64);

impl SoundSpeed for Uniform {
    fn c(&self, _: f64, _: f64) -> f64 {
        self.0
    }

    fn grad(&self, _: f64, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Closed-form speed with an analytic gradient.
pub struct Analytic<F, G> {
    pub c: F,
    pub grad: G,
}

impl<F, G> SoundSpeed for Analytic<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> (f64, f64) + Sync,
{
    fn c(&self, x: f64, y: f64) -> f64 {
        (self.c)(x, y)
    }

    fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        (self.grad)(x, y)
    }
}

/// Catmull–Rom bicubic interpolation of a sampled speed (C¹ across cells).
#[derive(Debug, Clone)]
pub struct GridSpeed {
    field: ScalarField2D,
}

fn weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    (
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ],
    )
}

impl GridSpeed {
    pub fn new(field: ScalarField2D) -> Self {
        GridSpeed { field }
    }

    pub fn grid(&self) -> &Grid2D {
        self.field.grid()
    }

    fn locate(n: usize, s: f64) -> (usize, f64) {
        let max = (n - 2) as f64;
        let s = s.clamp(0.0, (n - 1) as f64);
        let i = s.floor().min(max);
        (i as usize, s - i)
    }

    fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let g = self.field.grid();
        let (i, tx) = Self::locate(g.nx, (x - g.x(0)) / g.dx);
        let (j, ty) = Self::locate(g.ny, (y - g.y(0)) / g.dy);
        let (wx, dwx) = weights(tx);
        let (wy, dwy) = weights(ty);
        let clamp = |k: isize, n: usize| k.clamp(0, n as isize - 1) as usize;
        let (mut v, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for (b, (wyb, dwyb)) in wy.iter().zip(&dwy).enumerate() {
            let jj = clamp(j as isize + b as isize - 1, g.ny);
            for (a, (wxa, dwxa)) in wx.iter().zip(&dwx).enumerate() {
                let ii = clamp(i as isize + a as isize - 1, g.nx);
                let f = self.field.at(ii, jj);
                v += wxa * wyb * f;
                vx += dwxa * wyb * f;
                vy += wxa * dwyb * f;
            }
        }
        (v, vx / g.dx, vy / g.dy)
    }
}

impl SoundSpeed for GridSpeed {
    fn c(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y).0
    }

    fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let (_, gx, gy) = self.eval(x, y);
        (gx, gy)
    }

    fn resolution(&self) -> f64 {
        let g = self.field.grid();
        g.dx.min(g.dy)
    }
}
