use rayon::prelude::*;

use super::diffusion::Diffusion;
use super::{terminal_condition, uses_monotone_bound, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hamiltonian::{OneSided, SpeedTable};
use crate::kinematics::SpeedModel;
use crate::terrain::ElevationField;

/// Kao extrapolation on all four edges, never letting the boundary rise
/// above its previous value. Corners take the smaller of the x- and y-edge
/// results, both computed from the freshly updated edges.
pub fn apply_bcs(nx: usize, ny: usize, u: &mut [f64], prev: &[f64]) {
    debug_assert!(nx >= 3 && ny >= 3);
    let at = |i: usize, j: usize| i * ny + j;
    let kao = |u1: f64, u2: f64, old: f64| (2.0 * u1 - u2).max(u2).min(old);

    for j in 1..ny - 1 {
        u[at(0, j)] = kao(u[at(1, j)], u[at(2, j)], prev[at(0, j)]);
        u[at(nx - 1, j)] = kao(u[at(nx - 2, j)], u[at(nx - 3, j)], prev[at(nx - 1, j)]);
    }
    for i in 1..nx - 1 {
        u[at(i, 0)] = kao(u[at(i, 1)], u[at(i, 2)], prev[at(i, 0)]);
        u[at(i, ny - 1)] = kao(u[at(i, ny - 2)], u[at(i, ny - 3)], prev[at(i, ny - 1)]);
    }
    for (i, i1, i2) in [(0, 1, 2), (nx - 1, nx - 2, nx - 3)] {
        for (j, j1, j2) in [(0, 1, 2), (ny - 1, ny - 2, ny - 3)] {
            let old = prev[at(i, j)];
            let from_x = kao(u[at(i1, j)], u[at(i2, j)], old);
            let from_y = kao(u[at(i, j1)], u[at(i, j2)], old);
            u[at(i, j)] = from_x.min(from_y);
        }
    }
}

/// Advances slices one backward time step.
pub struct Stepper {
    cfg: SolverConfig,
    grid: GridSpec,
    table: SpeedTable,
    diffusion: Option<Diffusion>,
    tol: f64,
}

impl Stepper {
    /// Validates `cfg`, raises K to the CFL minimum and precomputes the
    /// per-node speed table.
    pub fn new(cfg: &SolverConfig, field: &ElevationField, model: &SpeedModel) -> Result<Self> {
        cfg.validate(model)?;
        let cfg = cfg.with_stable_steps(model);
        let grid = cfg.grid();
        if !field.bounds().contains_box(&grid.bounds()) {
            return Err(crate::error::invalid(
                "solver box extends beyond the terrain",
            ));
        }
        let table = SpeedTable::build(&grid, field, model, &cfg.hamiltonian.directions()?)?;
        let diffusion = (cfg.sigma > 0.0).then(|| {
            let c = 0.5 * cfg.sigma * cfg.sigma * cfg.dt();
            Diffusion::new(
                grid.nx - 2,
                grid.ny - 2,
                c / (grid.dx * grid.dx),
                c / (grid.dy * grid.dy),
            )
        });
        let tol = 1e-6 * cfg.diameter();
        Ok(Stepper {
            cfg,
            grid,
            table,
            diffusion,
            tol,
        })
    }

    /// The config actually used (K possibly raised).
    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn terminal(&self) -> Vec<f64> {
        terminal_condition(&self.cfg)
    }

    fn update_interior(&self, prev: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let ny = g.ny;
        let dt = self.cfg.dt();
        let hcfg = self.cfg.hamiltonian;
        out.copy_from_slice(prev);
        out.par_chunks_mut(ny)
            .enumerate()
            .skip(1)
            .take(g.nx - 2)
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate().take(ny - 1).skip(1) {
                    let node = i * ny + j;
                    let d = OneSided::at(g, prev, i, j);
                    *v = prev[node] + dt * self.table.at(node).numerical(d, &hcfg);
                }
            });
    }

    /// Forward-Euler update of the interior followed by boundary conditions.
    pub fn step_explicit(&self, prev: &[f64], out: &mut [f64], k: usize) -> Result<()> {
        self.update_interior(prev, out);
        apply_bcs(self.grid.nx, self.grid.ny, out, prev);
        self.check_finite(out, k)
    }

    /// Explicit Hamiltonian, implicit Laplacian. With σ = 0 the diffusion
    /// operator is the identity and this is exactly [`step_explicit`](Self::step_explicit).
    pub fn step_semi_implicit(&self, prev: &[f64], out: &mut [f64], k: usize) -> Result<()> {
        self.update_interior(prev, out);
        if let Some(diff) = &self.diffusion {
            diff.solve(out, prev)?;
        }
        apply_bcs(self.grid.nx, self.grid.ny, out, prev);
        self.check_finite(out, k)
    }

    pub fn step(&self, prev: &[f64], out: &mut [f64], k: usize) -> Result<()> {
        if self.cfg.sigma > 0.0 {
            self.step_semi_implicit(prev, out, k)
        } else {
            self.step_explicit(prev, out, k)
        }
    }

    fn check_finite(&self, u: &[f64], k: usize) -> Result<()> {
        match u.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(n) => Err(Error::NumericalBlowup {
                step: k,
                i: n / self.grid.ny,
                j: n % self.grid.ny,
            }),
        }
    }

    fn check_invariants(&self, u: &[f64], prev: &[f64], upper: f64, k: usize) -> Result<()> {
        let monotone = uses_monotone_bound(&self.cfg);
        for (n, (&v, &p)) in u.iter().zip(prev).enumerate() {
            let (i, j) = (n / self.grid.ny, n % self.grid.ny);
            if v < -self.tol {
                return Err(Error::Invariant {
                    step: k,
                    message: format!("u = {v} < 0 at node ({i}, {j})"),
                });
            }
            if monotone && v > p + self.tol {
                return Err(Error::Invariant {
                    step: k,
                    message: format!("u rose from {p} to {v} at node ({i}, {j})"),
                });
            }
            if v > upper + self.tol {
                return Err(Error::Invariant {
                    step: k,
                    message: format!("u = {v} exceeds the terminal maximum at node ({i}, {j})"),
                });
            }
        }
        Ok(())
    }

    /// Marches all K steps, handing every slice (terminal data first) to
    /// `visit`. Returns the final slice.
    pub fn run(&self, mut visit: impl FnMut(usize, &[f64]) -> Result<()>) -> Result<Vec<f64>> {
        let mut prev = self.terminal();
        let mut next = vec![0.0; prev.len()];
        visit(0, &prev)?;
        let upper = prev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for k in 1..=self.cfg.steps {
            self.step(&prev, &mut next, k)?;
            if self.cfg.check_invariants {
                self.check_invariants(&next, &prev, upper, k)?;
            }
            visit(k, &next)?;
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(prev)
    }
}
