//! Gridded elevation fields: synthetic generators, ESRI ASCII grid I/O and
//! point/gradient queries.
//!
//! Heights and horizontal coordinates are assumed to share length units, so
//! gradients come out as dimensionless grade (rise over run). Nothing checks
//! this; a DEM in feet over a metre grid will simply produce wrong slopes.

mod esri;
mod synthetic;

pub use esri::{load_esri_ascii, read_esri_ascii, write_esri_ascii};
pub use synthetic::{make_synthetic, Mountain, SyntheticTerrain, Wall};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Bounds, GridSpec, Point, Vec2};

/// What to do with NODATA cells when loading a DEM.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodataPolicy {
    #[default]
    Reject,
    /// Fill each hole with the mean of its valid 8-neighbours, repeating
    /// until none remain.
    Fill,
}

/// Terrain slope as grade components `(dE/dx, dE/dy)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlopeVector {
    pub gx: f64,
    pub gy: f64,
}

impl SlopeVector {
    pub const FLAT: SlopeVector = SlopeVector { gx: 0.0, gy: 0.0 };

    pub fn new(gx: f64, gy: f64) -> Self {
        SlopeVector { gx, gy }
    }

    /// Grade encountered when walking along `dir`.
    #[inline]
    pub fn along(self, dir: Vec2) -> f64 {
        self.gx * dir.x + self.gy * dir.y
    }
}

impl From<Vec2> for SlopeVector {
    fn from(v: Vec2) -> Self {
        SlopeVector { gx: v.x, gy: v.y }
    }
}

/// Immutable elevation samples on a uniform node grid.
#[derive(Clone, Debug)]
pub struct ElevationField {
    grid: GridSpec,
    heights: Vec<f64>,
    gradients: Vec<Vec2>,
    nodata_policy: NodataPolicy,
    nodata_value: Option<f64>,
}

impl ElevationField {
    /// Builds a field from nodal heights stored with the y index fastest.
    pub fn from_heights(grid: GridSpec, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} heights, got {}",
                grid.len(),
                heights.len()
            )));
        }
        if let Some(k) = heights.iter().position(|h| !h.is_finite()) {
            return Err(invalid(format!(
                "non-finite height at node ({}, {})",
                k / grid.ny,
                k % grid.ny
            )));
        }
        let gradients = grid.gradients(&heights);
        Ok(ElevationField {
            grid,
            heights,
            gradients,
            nodata_policy: NodataPolicy::Reject,
            nodata_value: None,
        })
    }

    pub(crate) fn with_nodata(mut self, policy: NodataPolicy, value: Option<f64>) -> Self {
        self.nodata_policy = policy;
        self.nodata_value = value;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn bounds(&self) -> Bounds {
        self.grid.bounds()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height(&self, i: usize, j: usize) -> f64 {
        self.heights[self.grid.index(i, j)]
    }

    pub fn nodata_policy(&self) -> NodataPolicy {
        self.nodata_policy
    }

    pub fn nodata_value(&self) -> Option<f64> {
        self.nodata_value
    }

    pub fn max_height(&self) -> f64 {
        self.heights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation of the heights; exact at nodes.
    pub fn elevation_at(&self, p: Point) -> Result<f64> {
        self.grid.interpolate(&self.heights, p)
    }

    /// Slope at `p`, interpolating the cached nodal gradients so the result
    /// stays continuous across cell edges.
    pub fn gradient_at(&self, p: Point) -> Result<SlopeVector> {
        let c = self.grid.locate(p)?;
        let g = self
            .grid
            .blend(c, |i, j| self.gradients[self.grid.index(i, j)]);
        Ok(g.into())
    }

    pub fn node_gradient(&self, i: usize, j: usize) -> SlopeVector {
        self.gradients[self.grid.index(i, j)].into()
    }
}
