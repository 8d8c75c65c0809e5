//! Fixtures shared by the kernel benchmarks.

use ridgeline_core::{
    make_synthetic, Bounds, ElevationField, Mountain, SolverConfig, SyntheticTerrain, Vec2,
};

/// The desk-scale two-mountain problem on an `n × 3n/4` grid.
pub fn two_mountain(n: usize) -> (SolverConfig, ElevationField) {
    let bounds = Bounds::new(0.0, 4.0, 0.0, 3.0).expect("valid box");
    let cfg = SolverConfig::new(bounds, (n, 3 * n / 4), 3.8, Vec2::new(3.6, 1.5));
    let hill = |x, y| Mountain {
        center: Vec2::new(x, y),
        height: 0.32,
        width: 0.4,
    };
    let terrain = SyntheticTerrain::GaussianMountains(vec![hill(1.6, 1.5), hill(2.4, 1.95)]);
    let field = make_synthetic(&terrain, cfg.grid()).expect("terrain fits the grid");
    (cfg, field)
}

pub const X0: Vec2 = Vec2::new(0.4, 1.5);
