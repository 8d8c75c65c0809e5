//! Optimal walking paths over terrain.
//!
//! A walker moves at a slope-dependent speed and wants to end up as close
//! as possible to a target by a fixed time. The cost-to-go solves a
//! Hamilton-Jacobi-Bellman equation backwards in time; its gradient yields
//! the optimal heading, which is then integrated forward, either as an ODE
//! or as an SDE with additive noise.
//!
//! ```no_run
//! use ridgeline_core::{
//!     control::ControlField, make_synthetic, solver, trajectory, Bounds, GridSpec,
//!     SolverConfig, SpeedModel, SyntheticTerrain, Vec2,
//! };
//!
//! let bounds = Bounds::new(0.0, 2.0, 0.0, 2.0)?;
//! let field = make_synthetic(&SyntheticTerrain::Flat, GridSpec::covering(&bounds, 100, 100)?)?;
//! let model = SpeedModel::default();
//! let cfg = SolverConfig::new(bounds, (100, 100), 2.0, Vec2::new(1.6, 1.0));
//! let vf = solver::solve(&cfg, &field, &model)?;
//! let cf = ControlField::new(&vf, &field, &model)?;
//! let path = trajectory::integrate_deterministic(&cf, Vec2::new(0.4, 1.0))?;
//! println!("missed by {}", path.terminal_distance);
//! # Ok::<(), ridgeline_core::Error>(())
//! ```

pub mod control;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod kinematics;
pub mod solver;
pub mod terrain;
pub mod trajectory;

pub use control::{Control, ControlField};
pub use error::{Error, Result};
pub use grid::{Bounds, GridSpec, Point, Vec2};
pub use hamiltonian::{ExtMode, HamiltonianConfig, Scheme};
pub use kinematics::{DirectionSample, DirectionSet, SpeedModel};
pub use solver::{SolverConfig, ValueFunction};
pub use terrain::{
    load_esri_ascii, make_synthetic, ElevationField, Mountain, NodataPolicy, SlopeVector,
    SyntheticTerrain, Wall,
};
pub use trajectory::{CriticalTime, EnsembleOptions, EnsembleStats, Trajectory};
