//! Solver for the implicit diffusion system `(I − c_x δ²_x − c_y δ²_y) u = r`
//! on the interior nodes, with Dirichlet data on the boundary.
//!
//! A sine transform along x diagonalizes `δ²_x`; each x-mode then leaves a
//! constant tridiagonal system along y, factored once up front.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 3;

pub(super) struct Diffusion {
    n1: usize,
    n2: usize,
    cx: f64,
    cy: f64,
    fft: Arc<dyn Fft<f64>>,
    /// Per mode and row: Thomas upper coefficients and reciprocal pivots.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Diffusion {
    /// `n1 × n2` interior unknowns, coupling strengths `c_x = σ²Δt/(2Δx²)`
    /// and `c_y = σ²Δt/(2Δy²)`.
    pub fn new(n1: usize, n2: usize, cx: f64, cy: f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n1 + 1));
        let mut upper = vec![0.0; n1 * n2];
        let mut inv_pivot = vec![0.0; n1 * n2];
        for m in 0..n1 {
            let lambda = 2.0 - 2.0 * (PI * (m + 1) as f64 / (n1 + 1) as f64).cos();
            let diag = 1.0 + cx * lambda + 2.0 * cy;
            let mut prev_upper = 0.0;
            for j in 0..n2 {
                let pivot = diag + cy * prev_upper;
                let inv = 1.0 / pivot;
                inv_pivot[m * n2 + j] = inv;
                prev_upper = -cy * inv;
                upper[m * n2 + j] = prev_upper;
            }
        }
        Diffusion {
            n1,
            n2,
            cx,
            cy,
            fft,
            upper,
            inv_pivot,
        }
    }

    /// Sine transform along x of every column of `data` (`n1 × n2`, y fastest).
    fn dst(&self, data: &[f64], out: &mut [f64], buf: &mut [Complex<f64>]) {
        let (n1, n2) = (self.n1, self.n2);
        let len = 2 * (n1 + 1);
        buf.fill(Complex::new(0.0, 0.0));
        for j in 0..n2 {
            let col = &mut buf[j * len..(j + 1) * len];
            for i in 0..n1 {
                let v = data[i * n2 + j];
                col[i + 1].re = v;
                col[len - 1 - i].re = -v;
            }
        }
        self.fft.process(buf);
        for j in 0..n2 {
            let col = &buf[j * len..(j + 1) * len];
            for m in 0..n1 {
                out[m * n2 + j] = -0.5 * col[m + 1].im;
            }
        }
    }

    fn apply_inverse(&self, r: &[f64], buf: &mut [Complex<f64>]) -> Vec<f64> {
        let (n1, n2) = (self.n1, self.n2);
        let mut hat = vec![0.0; n1 * n2];
        self.dst(r, &mut hat, buf);
        for m in 0..n1 {
            let row = &mut hat[m * n2..(m + 1) * n2];
            let up = &self.upper[m * n2..(m + 1) * n2];
            let inv = &self.inv_pivot[m * n2..(m + 1) * n2];
            let mut carry = 0.0;
            for j in 0..n2 {
                carry = (row[j] + self.cy * carry) * inv[j];
                row[j] = carry;
            }
            for j in (0..n2.saturating_sub(1)).rev() {
                row[j] -= up[j] * row[j + 1];
            }
        }
        let mut x = vec![0.0; n1 * n2];
        self.dst(&hat, &mut x, buf);
        let scale = 2.0 / (n1 + 1) as f64;
        x.iter_mut().for_each(|v| *v *= scale);
        x
    }

    fn residual(&self, x: &[f64], r: &[f64]) -> Vec<f64> {
        let (n1, n2) = (self.n1, self.n2);
        let at = |i: usize, j: usize| x[i * n2 + j];
        let mut res = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let c = at(i, j);
                let xm = if i > 0 { at(i - 1, j) } else { 0.0 };
                let xp = if i + 1 < n1 { at(i + 1, j) } else { 0.0 };
                let ym = if j > 0 { at(i, j - 1) } else { 0.0 };
                let yp = if j + 1 < n2 { at(i, j + 1) } else { 0.0 };
                let ax = c - self.cx * (xp - 2.0 * c + xm) - self.cy * (yp - 2.0 * c + ym);
                res[i * n2 + j] = r[i * n2 + j] - ax;
            }
        }
        res
    }

    /// Replaces the interior of `u` (full grid, y fastest) by the solution
    /// of the implicit system whose right-hand side is the current interior,
    /// using `boundary`'s edge values as Dirichlet data.
    pub fn solve(&self, u: &mut [f64], boundary: &[f64]) -> Result<()> {
        let (n1, n2) = (self.n1, self.n2);
        let ny = n2 + 2;
        let g = |i: usize, j: usize| i * ny + j;
        let mut r = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let (gi, gj) = (i + 1, j + 1);
                let mut v = u[g(gi, gj)];
                if i == 0 {
                    v += self.cx * boundary[g(0, gj)];
                }
                if i + 1 == n1 {
                    v += self.cx * boundary[g(n1 + 1, gj)];
                }
                if j == 0 {
                    v += self.cy * boundary[g(gi, 0)];
                }
                if j + 1 == n2 {
                    v += self.cy * boundary[g(gi, n2 + 1)];
                }
                r[i * n2 + j] = v;
            }
        }

        let mut buf = vec![Complex::new(0.0, 0.0); 2 * (n1 + 1) * n2];
        let scale = r
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut x = self.apply_inverse(&r, &mut buf);
        let mut rel = f64::INFINITY;
        for _ in 0..=MAX_REFINEMENTS {
            let res = self.residual(&x, &r);
            rel = res.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
            if rel <= RESIDUAL_TOL {
                break;
            }
            let dx = self.apply_inverse(&res, &mut buf);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        }
        if rel.is_nan() || rel > RESIDUAL_TOL {
            return Err(Error::LinearSolve { residual: rel });
        }
        for i in 0..n1 {
            u[g(i + 1, 1)..g(i + 1, 1) + n2].copy_from_slice(&x[i * n2..(i + 1) * n2]);
        }
        Ok(())
    }
}
