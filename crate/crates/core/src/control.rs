//! Optimal headings from a solved value function.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::grid::{Point, Vec2};
use crate::hamiltonian::{local_coeffs, LocalHamiltonian};
use crate::kinematics::{DirectionSample, DirectionSet, SpeedModel};
use crate::solver::ValueFunction;
use crate::terrain::ElevationField;

/// Heading chosen at one space-time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Control {
    pub direction: DirectionSample,
    /// Effective speed along `direction` at the query point.
    pub speed: f64,
    /// ∇u vanished, so `direction` is the angle-0 placeholder.
    pub degenerate: bool,
}

/// Read-only view pairing a value function with the terrain it was solved on.
/// Nodal gradients of u are evaluated on demand from the stored slices.
pub struct ControlField<'a> {
    vf: &'a ValueFunction,
    field: &'a ElevationField,
    model: SpeedModel,
    dirs: DirectionSet,
}

impl<'a> ControlField<'a> {
    pub fn new(
        vf: &'a ValueFunction,
        field: &'a ElevationField,
        model: &SpeedModel,
    ) -> Result<Self> {
        Ok(ControlField {
            vf,
            field,
            model: *model,
            dirs: vf.config().hamiltonian.directions()?,
        })
    }

    pub fn value_function(&self) -> &ValueFunction {
        self.vf
    }

    pub fn field(&self) -> &ElevationField {
        self.field
    }

    pub fn model(&self) -> &SpeedModel {
        &self.model
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    pub fn grad_u_at(&self, p: Point, t: f64) -> Result<Vec2> {
        grad_u_at(self.vf, p, t)
    }

    /// argmin over the sampled directions of `f(p, s) (∇u · s)`.
    pub fn optimal_control(&self, p: Point, t: f64) -> Result<Control> {
        let k = self.vf.slice_index(t)?;
        self.control_on_slice(p, k)
    }

    /// Like [`optimal_control`](Self::optimal_control), but where ∇u is flat
    /// the heading comes from the nearest later slice (less time left) on
    /// which it is not. Still degenerate only if every later slice is flat
    /// at `p`.
    pub fn steering_control(&self, p: Point, t: f64) -> Result<Control> {
        let k = self.vf.slice_index(t)?;
        let c = self.control_on_slice(p, k)?;
        if !c.degenerate {
            return Ok(c);
        }
        for later in (0..k).rev() {
            let c = self.control_on_slice(p, later)?;
            if !c.degenerate {
                return Ok(c);
            }
        }
        Ok(c)
    }

    fn control_on_slice(&self, p: Point, k: usize) -> Result<Control> {
        let gu = self.vf.grid().gradient_at(self.vf.slice(k), p)?;
        let grad_e = self.field.gradient_at(p)?;
        if gu.norm() < 1e-12 * self.vf.config().diameter() {
            let d = self.dirs.get(0);
            return Ok(Control {
                direction: d,
                speed: self.model.effective_speed(grad_e, d.unit),
                degenerate: true,
            });
        }
        let mut coeffs = Vec::with_capacity(self.dirs.len());
        local_coeffs(grad_e, &self.model, &self.dirs, &mut coeffs);
        let (_, k) = LocalHamiltonian::new(&coeffs).argmin(gu);
        let d = self.dirs.get(k);
        Ok(Control {
            direction: d,
            speed: self.model.effective_speed(grad_e, d.unit),
            degenerate: false,
        })
    }

    /// Controls on every `stride`-th node in each direction at time `t`.
    pub fn snapshot(&self, t: f64, stride: usize) -> Result<Vec<(Point, Control)>> {
        if stride == 0 {
            return Err(invalid("stride must be positive"));
        }
        self.vf.slice_index(t)?;
        let g = self.vf.grid();
        let mut out = Vec::new();
        for i in (0..g.nx).step_by(stride) {
            for j in (0..g.ny).step_by(stride) {
                let p = g.node(i, j);
                out.push((p, self.optimal_control(p, t)?));
            }
        }
        Ok(out)
    }
}

/// ∇u at `p` from the slice nearest to forward time `t`: nodal central
/// differences, bilinearly interpolated.
pub fn grad_u_at(vf: &ValueFunction, p: Point, t: f64) -> Result<Vec2> {
    let k = vf.slice_index(t)?;
    vf.grid().gradient_at(vf.slice(k), p)
}

pub fn optimal_control(cf: &ControlField<'_>, p: Point, t: f64) -> Result<Control> {
    cf.optimal_control(p, t)
}

pub fn control_field_snapshot(
    cf: &ControlField<'_>,
    t: f64,
    stride: usize,
) -> Result<Vec<(Point, Control)>> {
    cf.snapshot(t, stride)
}

/// Snapshot CSV rows `x,y,sx,sy,degenerate_flag`.
pub fn write_snapshot_csv<W: Write>(snapshot: &[(Point, Control)], mut w: W) -> Result<()> {
    writeln!(w, "x,y,sx,sy,degenerate_flag")?;
    for (p, c) in snapshot {
        let s = c.direction.unit;
        writeln!(
            w,
            "{},{},{},{},{}",
            p.x,
            p.y,
            s.x,
            s.y,
            u8::from(c.degenerate)
        )?;
    }
    Ok(())
}
