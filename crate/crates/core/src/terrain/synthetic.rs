use serde::{Deserialize, Serialize};

use super::ElevationField;
use crate::error::{invalid, Result};
use crate::grid::{Bounds, GridSpec, Point, Vec2};

/// A Gaussian bump `height * exp(-|p - center|^2 / width^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mountain {
    pub center: Point,
    pub height: f64,
    pub width: f64,
}

/// A plateau of `height` over a rectangle, bordered by cosine ramps of width
/// `ramp` on every side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub height: f64,
    pub ramp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticTerrain {
    Flat,
    GaussianMountains(Vec<Mountain>),
    Wall(Wall),
}

/// 1 on `[lo, hi]`, cosine ramp down to 0 over `ramp` on each side.
fn ramp_profile(s: f64, lo: f64, hi: f64, ramp: f64) -> f64 {
    let d = if s < lo {
        lo - s
    } else if s > hi {
        s - hi
    } else {
        0.0
    };
    if d >= ramp {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d / ramp).cos())
    }
}

fn ramp_slope(s: f64, lo: f64, hi: f64, ramp: f64) -> f64 {
    let (d, sign) = if s < lo {
        (lo - s, 1.0)
    } else if s > hi {
        (s - hi, -1.0)
    } else {
        return 0.0;
    };
    if d >= ramp {
        0.0
    } else {
        let k = std::f64::consts::PI / ramp;
        sign * 0.5 * k * (k * d).sin()
    }
}

impl SyntheticTerrain {
    pub fn validate(&self, bounds: &Bounds) -> Result<()> {
        match self {
            SyntheticTerrain::Flat => Ok(()),
            SyntheticTerrain::GaussianMountains(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    if !(m.width > 0.0 && m.width.is_finite()) {
                        return Err(invalid(format!("mountain {k}: width must be positive")));
                    }
                    if !m.height.is_finite() {
                        return Err(invalid(format!("mountain {k}: height must be finite")));
                    }
                    if !bounds.contains(m.center) {
                        return Err(invalid(format!("mountain {k}: center outside the box")));
                    }
                }
                Ok(())
            }
            SyntheticTerrain::Wall(w) => {
                if !(w.ramp > 0.0 && w.ramp.is_finite()) {
                    return Err(invalid("wall ramp width must be positive"));
                }
                if !w.height.is_finite() {
                    return Err(invalid("wall height must be finite"));
                }
                let (x0, x1) = w.x_range;
                let (y0, y1) = w.y_range;
                if !(x1 > x0 && y1 > y0) {
                    return Err(invalid("wall rectangle is degenerate"));
                }
                if !bounds.contains(Vec2::new(x0, y0)) || !bounds.contains(Vec2::new(x1, y1)) {
                    return Err(invalid("wall rectangle outside the box"));
                }
                Ok(())
            }
        }
    }

    pub fn height(&self, p: Point) -> f64 {
        match self {
            SyntheticTerrain::Flat => 0.0,
            SyntheticTerrain::GaussianMountains(ms) => ms
                .iter()
                .map(|m| {
                    let r2 = (p - m.center).dot(p - m.center);
                    m.height * (-r2 / (m.width * m.width)).exp()
                })
                .sum(),
            SyntheticTerrain::Wall(w) => {
                w.height
                    * ramp_profile(p.x, w.x_range.0, w.x_range.1, w.ramp)
                    * ramp_profile(p.y, w.y_range.0, w.y_range.1, w.ramp)
            }
        }
    }

    /// Closed-form gradient of [`height`](Self::height).
    pub fn gradient(&self, p: Point) -> Vec2 {
        match self {
            SyntheticTerrain::Flat => Vec2::ZERO,
            SyntheticTerrain::GaussianMountains(ms) => ms.iter().fold(Vec2::ZERO, |acc, m| {
                let d = p - m.center;
                let w2 = m.width * m.width;
                let e = m.height * (-d.dot(d) / w2).exp();
                acc + d * (-2.0 * e / w2)
            }),
            SyntheticTerrain::Wall(w) => {
                let (x0, x1) = w.x_range;
                let (y0, y1) = w.y_range;
                let px = ramp_profile(p.x, x0, x1, w.ramp);
                let py = ramp_profile(p.y, y0, y1, w.ramp);
                Vec2::new(
                    w.height * ramp_slope(p.x, x0, x1, w.ramp) * py,
                    w.height * px * ramp_slope(p.y, y0, y1, w.ramp),
                )
            }
        }
    }
}

/// Samples a synthetic terrain on the nodes of `grid`.
pub fn make_synthetic(kind: &SyntheticTerrain, grid: GridSpec) -> Result<ElevationField> {
    kind.validate(&grid.bounds())?;
    let mut heights = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            heights.push(kind.height(grid.node(i, j)));
        }
    }
    ElevationField::from_heights(grid, heights)
}
