//! Planar vectors, axis-aligned boxes and uniform node grids.
//!
//! Node `(i, j)` sits at `origin + (i * dx, j * dy)`; nodal arrays are stored
//! with `j` fastest, i.e. at offset `i * ny + j`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Positions and displacement vectors share one representation.
pub type Point = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation by +90 degrees.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// The box `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(invalid(format!(
                "degenerate box [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Bounds {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Containment with a relative slack of 1e-12 of the box extent.
    pub fn contains(&self, p: Point) -> bool {
        let sx = 1e-12 * self.width();
        let sy = 1e-12 * self.height();
        p.x >= self.x_min - sx
            && p.x <= self.x_max + sx
            && p.y >= self.y_min - sy
            && p.y <= self.y_max + sy
    }

    pub fn contains_box(&self, other: &Bounds) -> bool {
        self.contains(Vec2::new(other.x_min, other.y_min))
            && self.contains(Vec2::new(other.x_max, other.y_max))
    }

    /// Projects `p` onto the box; the flag is set when `p` had to move.
    pub fn clamp(&self, p: Point) -> (Point, bool) {
        let q = Vec2::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
        );
        (q, q != p)
    }
}

/// Geometry of a uniform grid of `nx × ny` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Cell containing a point plus the fractional offsets inside it.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellLocation {
    pub i: usize,
    pub j: usize,
    pub tx: f64,
    pub ty: f64,
}

impl GridSpec {
    pub fn new(origin: Point, dx: f64, dy: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(invalid(format!(
                "grid spacing must be positive, got ({dx}, {dy})"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(invalid(format!(
                "grid needs at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        if !origin.is_finite() {
            return Err(invalid("grid origin must be finite"));
        }
        Ok(GridSpec {
            origin,
            dx,
            dy,
            nx,
            ny,
        })
    }

    /// Grid with `cells_x × cells_y` cells spanning `bounds`.
    pub fn covering(bounds: &Bounds, cells_x: usize, cells_y: usize) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 {
            return Err(invalid("cell counts must be positive"));
        }
        GridSpec::new(
            Vec2::new(bounds.x_min, bounds.y_min),
            bounds.width() / cells_x as f64,
            bounds.height() / cells_y as f64,
            cells_x + 1,
            cells_y + 1,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Vec2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dy,
        )
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            x_min: self.origin.x,
            x_max: self.origin.x + (self.nx - 1) as f64 * self.dx,
            y_min: self.origin.y,
            y_max: self.origin.y + (self.ny - 1) as f64 * self.dy,
        }
    }

    pub(crate) fn locate(&self, p: Point) -> Result<CellLocation> {
        if !p.is_finite() || !self.bounds().contains(p) {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        let fx = ((p.x - self.origin.x) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.dy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        Ok(CellLocation {
            i,
            j,
            tx: fx - i as f64,
            ty: fy - j as f64,
        })
    }

    /// Bilinear interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Result<f64> {
        let c = self.locate(p)?;
        Ok(self.blend(c, |i, j| values[self.index(i, j)]))
    }

    pub(crate) fn blend<T>(&self, c: CellLocation, at: impl Fn(usize, usize) -> T) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T>,
    {
        let (i, j, tx, ty) = (c.i, c.j, c.tx, c.ty);
        at(i, j) * ((1.0 - tx) * (1.0 - ty))
            + at(i + 1, j) * (tx * (1.0 - ty))
            + at(i, j + 1) * ((1.0 - tx) * ty)
            + at(i + 1, j + 1) * (tx * ty)
    }

    /// Gradient of nodal data at node `(i, j)`: central differences inside,
    /// one-sided differences on the boundary.
    #[inline]
    pub fn node_gradient(&self, values: &[f64], i: usize, j: usize) -> Vec2 {
        let v = |i, j| values[self.index(i, j)];
        let gx = if i == 0 {
            (v(1, j) - v(0, j)) / self.dx
        } else if i == self.nx - 1 {
            (v(i, j) - v(i - 1, j)) / self.dx
        } else {
            (v(i + 1, j) - v(i - 1, j)) / (2.0 * self.dx)
        };
        let gy = if j == 0 {
            (v(i, 1) - v(i, 0)) / self.dy
        } else if j == self.ny - 1 {
            (v(i, j) - v(i, j - 1)) / self.dy
        } else {
            (v(i, j + 1) - v(i, j - 1)) / (2.0 * self.dy)
        };
        Vec2::new(gx, gy)
    }

    /// Gradient at an arbitrary point: nodal gradients interpolated bilinearly.
    pub fn gradient_at(&self, values: &[f64], p: Point) -> Result<Vec2> {
        let c = self.locate(p)?;
        Ok(self.blend(c, |i, j| self.node_gradient(values, i, j)))
    }

    /// All nodal gradients, in storage order.
    pub fn gradients(&self, values: &[f64]) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.push(self.node_gradient(values, i, j));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::covering(&Bounds::new(0.0, 1.0, 0.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn locate_handles_upper_edge() {
        let g = unit_grid(4);
        let c = g.locate(Vec2::new(1.0, 1.0)).unwrap();
        assert_eq!((c.i, c.j), (3, 3));
        assert!((c.tx - 1.0).abs() < 1e-12 && (c.ty - 1.0).abs() < 1e-12);
        assert!(g.locate(Vec2::new(1.1, 0.5)).is_err());
    }

    #[test]
    fn gradient_of_plane_is_exact() {
        let g = unit_grid(5);
        let vals: Vec<f64> = (0..g.nx)
            .flat_map(|i| (0..g.ny).map(move |j| (i, j)))
            .map(|(i, j)| {
                let p = g.node(i, j);
                2.0 * p.x - 0.5 * p.y
            })
            .collect();
        for p in [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.33, 0.71),
            Vec2::new(1.0, 0.2),
        ] {
            let gr = g.gradient_at(&vals, p).unwrap();
            assert!((gr.x - 2.0).abs() < 1e-12 && (gr.y + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_flags_motion() {
        let b = Bounds::new(0.0, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(b.clamp(Vec2::new(0.5, 1.0)), (Vec2::new(0.5, 1.0), false));
        assert_eq!(b.clamp(Vec2::new(-0.5, 3.0)), (Vec2::new(0.0, 2.0), true));
    }
}
