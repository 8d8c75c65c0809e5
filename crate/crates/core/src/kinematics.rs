//! Slope-dependent walking speed.
//!
//! The base law is a Gaussian in grade,
//!
//! V(S) = v0 · exp(−(100·S + slope_shift)² / denom),
//!
//! which peaks at `v0` on a slight downhill of `-slope_shift / 100`. On its
//! own it only sees the grade along the walking direction, so a hiker could
//! contour freely along an arbitrarily steep side slope. The effective speed
//! therefore multiplies in a smooth cutoff on the cross-path grade:
//!
//! f(x, s) = V(∇E·s) · χ(|∇E·s⊥|),  χ(q) = exp(−(q − q_c)² / w²) for q > q_c.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Vec2;
use crate::terrain::SlopeVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel {
    pub v0: f64,
    pub slope_shift: f64,
    pub denom: f64,
    /// Cross-path grade tolerated before the penalty starts.
    pub pen_threshold: f64,
    pub pen_width: f64,
}

impl Default for SpeedModel {
    fn default() -> Self {
        SpeedModel {
            v0: 1.11,
            slope_shift: 2.0,
            denom: 2345.0,
            pen_threshold: 0.5,
            pen_width: 0.2,
        }
    }
}

impl SpeedModel {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.v0,
            self.slope_shift,
            self.denom,
            self.pen_threshold,
            self.pen_width,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("speed model parameters must be finite"));
        }
        if self.v0 <= 0.0 {
            return Err(invalid("v0 must be positive"));
        }
        if self.denom <= 0.0 {
            return Err(invalid("denom must be positive"));
        }
        if self.pen_width <= 0.0 {
            return Err(invalid("pen_width must be positive"));
        }
        if self.pen_threshold < 0.0 {
            return Err(invalid("pen_threshold must be non-negative"));
        }
        Ok(())
    }

    /// Upper bound of every speed this model produces.
    pub fn max_speed(&self) -> f64 {
        self.v0
    }

    /// Grade at which [`base_speed`](Self::base_speed) peaks.
    pub fn fastest_grade(&self) -> f64 {
        -self.slope_shift / 100.0
    }

    #[inline]
    pub fn base_speed(&self, grade: f64) -> f64 {
        let a = 100.0 * grade + self.slope_shift;
        self.v0 * (-(a * a) / self.denom).exp()
    }

    /// Side-slope penalty factor χ in (0, 1].
    #[inline]
    pub fn penalty(&self, cross_grade: f64) -> f64 {
        let q = cross_grade.abs();
        if q <= self.pen_threshold {
            1.0
        } else {
            let e = (q - self.pen_threshold) / self.pen_width;
            (-(e * e)).exp()
        }
    }

    #[inline]
    pub fn effective_speed(&self, grad: SlopeVector, dir: Vec2) -> f64 {
        self.base_speed(grad.along(dir)) * self.penalty(grad.along(dir.perp()))
    }
}

/// One of the equally spaced walking directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSample {
    pub index: usize,
    /// Radians in `[0, 2π)`.
    pub angle: f64,
    pub unit: Vec2,
}

/// `n` directions at angles `2πk/n`, `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    dirs: Vec<DirectionSample>,
}

impl DirectionSet {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid("need at least three directions"));
        }
        let dirs = (0..n)
            .map(|k| {
                let angle = TAU * k as f64 / n as f64;
                let (s, c) = angle.sin_cos();
                DirectionSample {
                    index: k,
                    angle,
                    unit: Vec2::new(c, s),
                }
            })
            .collect();
        Ok(DirectionSet { dirs })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn get(&self, k: usize) -> DirectionSample {
        self.dirs[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DirectionSample> {
        self.dirs.iter()
    }

    /// Angular spacing between neighbouring samples.
    pub fn resolution(&self) -> f64 {
        TAU / self.dirs.len() as f64
    }

    /// Sample whose angle is closest to `v`'s direction.
    pub fn nearest(&self, v: Vec2) -> DirectionSample {
        let n = self.dirs.len();
        let a = v.y.atan2(v.x).rem_euclid(TAU);
        let k = ((a / TAU * n as f64).round() as usize) % n;
        self.dirs[k]
    }
}
