//! Backward-in-time marching of the HJB terminal-value problem.
//!
//! Slices are indexed by backward time: slice `k` holds u at forward time
//! `T - k·Δt`, so slice 0 is the terminal data `‖x − x_end‖`.

mod diffusion;
mod export;
mod step;

pub use step::{apply_bcs, Stepper};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Bounds, GridSpec, Point};
use crate::hamiltonian::{HamiltonianConfig, Scheme};
use crate::kinematics::SpeedModel;
use crate::terrain::ElevationField;

pub const DEFAULT_MEMORY_CAP: usize = 200_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub bounds: Bounds,
    /// Cell counts `(N, M)`; the grid has `(N + 1) × (M + 1)` nodes.
    pub cells: (usize, usize),
    /// Requested time steps `K`; raised as needed to satisfy the CFL bound.
    /// Zero means "as few as the CFL bound allows".
    pub steps: usize,
    pub horizon: f64,
    pub sigma: f64,
    pub x_end: Point,
    pub hamiltonian: HamiltonianConfig,
    pub cfl_safety: f64,
    /// Upper bound on stored values `(K + 1)(N + 1)(M + 1)`.
    pub memory_cap: usize,
    /// Check nonnegativity and the backward bound after every step.
    pub check_invariants: bool,
}

impl SolverConfig {
    pub fn new(bounds: Bounds, cells: (usize, usize), horizon: f64, x_end: Point) -> Self {
        SolverConfig {
            bounds,
            cells,
            steps: 0,
            horizon,
            sigma: 0.0,
            x_end,
            hamiltonian: HamiltonianConfig::default(),
            cfl_safety: 0.9,
            memory_cap: DEFAULT_MEMORY_CAP,
            check_invariants: cfg!(debug_assertions),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::covering(&self.bounds, self.cells.0, self.cells.1).expect("validated solver grid")
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diameter()
    }

    /// `Δt (a₁/Δx + a₂/Δy)` with `a` the per-axis characteristic speeds.
    pub fn cfl_number(&self, model: &SpeedModel) -> f64 {
        let (a1, a2) = self.hamiltonian.characteristic_speed(model);
        let dx = self.bounds.width() / self.cells.0 as f64;
        let dy = self.bounds.height() / self.cells.1 as f64;
        self.dt() * (a1 / dx + a2 / dy)
    }

    /// Smallest step count whose CFL number is within the safety factor.
    pub fn min_stable_steps(&self, model: &SpeedModel) -> usize {
        let (a1, a2) = self.hamiltonian.characteristic_speed(model);
        let dx = self.bounds.width() / self.cells.0 as f64;
        let dy = self.bounds.height() / self.cells.1 as f64;
        let rate = a1 / dx + a2 / dy;
        let mut k = ((self.horizon * rate / self.cfl_safety).ceil() as usize).max(1);
        while self.horizon / k as f64 * rate > self.cfl_safety {
            k += 1;
        }
        k
    }

    /// Copy with `steps` raised to the CFL minimum if necessary.
    pub fn with_stable_steps(&self, model: &SpeedModel) -> SolverConfig {
        let mut c = self.clone();
        c.steps = c.steps.max(self.min_stable_steps(model));
        c
    }

    pub fn validate(&self, model: &SpeedModel) -> Result<()> {
        model.validate()?;
        self.hamiltonian.validate(model)?;
        let (n, m) = self.cells;
        if n < 4 || m < 4 {
            return Err(invalid(format!(
                "need at least 4 cells per axis, got {n}x{m}"
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon T must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma must be non-negative"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(invalid("cfl_safety must lie in (0, 1)"));
        }
        self.check_margin(self.x_end, "x_end")
    }

    /// Requires `p` to sit at least two cells inside the box.
    pub fn check_margin(&self, p: Point, what: &str) -> Result<()> {
        let dx = self.bounds.width() / self.cells.0 as f64;
        let dy = self.bounds.height() / self.cells.1 as f64;
        let b = &self.bounds;
        let eps = 1e-9 * dx.min(dy);
        let inside = p.is_finite()
            && p.x >= b.x_min + 2.0 * dx - eps
            && p.x <= b.x_max - 2.0 * dx + eps
            && p.y >= b.y_min + 2.0 * dy - eps
            && p.y <= b.y_max - 2.0 * dy + eps;
        if inside {
            Ok(())
        } else {
            Err(invalid(format!(
                "{what} = ({}, {}) must lie at least two cells inside the box",
                p.x, p.y
            )))
        }
    }

    pub fn scheme_name(&self) -> &'static str {
        if self.sigma > 0.0 {
            "semi_implicit"
        } else {
            "explicit"
        }
    }
}

/// Nodal distances to `x_end`.
pub fn terminal_condition(cfg: &SolverConfig) -> Vec<f64> {
    let g = cfg.grid();
    let mut u = Vec::with_capacity(g.len());
    for i in 0..g.nx {
        for j in 0..g.ny {
            u.push(g.node(i, j).distance(cfg.x_end));
        }
    }
    u
}

/// The solved space-time value function.
#[derive(Clone, Debug)]
pub struct ValueFunction {
    config: SolverConfig,
    grid: GridSpec,
    requested_steps: usize,
    data: Vec<f64>,
}

impl ValueFunction {
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    /// Step count asked for before any CFL adjustment.
    pub fn requested_steps(&self) -> usize {
        self.requested_steps
    }

    pub fn dt(&self) -> f64 {
        self.config.dt()
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn final_slice(&self) -> &[f64] {
        self.slice(self.steps())
    }

    /// All slices back to back, `k` slowest.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Slice nearest to forward time `t`.
    pub fn slice_index(&self, t: f64) -> Result<usize> {
        let tt = self.horizon();
        if !(t.is_finite() && t >= -1e-12 * tt && t <= tt * (1.0 + 1e-12)) {
            return Err(invalid(format!("time {t} outside [0, {tt}]")));
        }
        let k = ((tt - t) / self.dt()).round();
        Ok((k.max(0.0) as usize).min(self.steps()))
    }

    pub fn value_at(&self, p: Point, t: f64) -> Result<f64> {
        let k = self.slice_index(t)?;
        self.grid.interpolate(self.slice(k), p)
    }

    pub fn slice_range(&self, k: usize) -> (f64, f64) {
        self.slice(k)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Solves the configured problem, keeping every slice.
pub fn solve(
    cfg: &SolverConfig,
    field: &ElevationField,
    model: &SpeedModel,
) -> Result<ValueFunction> {
    let stepper = Stepper::new(cfg, field, model)?;
    let config = stepper.config().clone();
    let grid = stepper.grid();
    let needed = (config.steps + 1).saturating_mul(grid.len());
    if needed > config.memory_cap {
        return Err(Error::MemoryBudget {
            needed,
            cap: config.memory_cap,
        });
    }
    let mut data = Vec::with_capacity(needed);
    stepper.run(|_, slice| {
        data.extend_from_slice(slice);
        Ok(())
    })?;
    Ok(ValueFunction {
        config,
        grid,
        requested_steps: cfg.steps,
        data,
    })
}

/// Solves without retaining history and returns the effective config with
/// the final slice.
pub fn solve_final(
    cfg: &SolverConfig,
    field: &ElevationField,
    model: &SpeedModel,
) -> Result<(SolverConfig, Vec<f64>)> {
    let stepper = Stepper::new(cfg, field, model)?;
    let last = stepper.run(|_, _| Ok(()))?;
    Ok((stepper.config().clone(), last))
}

pub(crate) fn uses_monotone_bound(cfg: &SolverConfig) -> bool {
    cfg.sigma == 0.0 && cfg.hamiltonian.scheme == Scheme::Godunov
}
