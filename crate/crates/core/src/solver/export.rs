use std::io::Write;

use serde_json::json;

use super::ValueFunction;
use crate::error::Result;

impl ValueFunction {
    /// One JSON header line, then every slice as little-endian f64 in
    /// storage order.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        let b = &self.config.bounds;
        let header = json!({
            "dims": [self.steps() + 1, self.grid.nx, self.grid.ny],
            "box": [b.x_min, b.x_max, b.y_min, b.y_max],
            "T": self.horizon(),
            "K": self.steps(),
            "sigma": self.config.sigma,
            "endianness": "little",
            "dtype": "f64",
        });
        writeln!(w, "{header}")?;
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Slice `k` as CSV rows `i,j,x,y,u`.
    pub fn write_slice_csv<W: Write>(&self, k: usize, mut w: W) -> Result<()> {
        writeln!(w, "i,j,x,y,u")?;
        let u = self.slice(k);
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let p = self.grid.node(i, j);
                writeln!(w, "{i},{j},{},{},{}", p.x, p.y, u[self.grid.index(i, j)])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::grid::{Bounds, Vec2};
    use crate::kinematics::SpeedModel;
    use crate::solver::{solve, SolverConfig};
    use crate::terrain::{make_synthetic, SyntheticTerrain};

    #[test]
    fn raw_dump_round_trips() {
        let b = Bounds::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let cfg = SolverConfig::new(b, (6, 6), 0.1, Vec2::new(0.5, 0.5));
        let f = make_synthetic(&SyntheticTerrain::Flat, cfg.grid()).unwrap();
        let vf = solve(&cfg, &f, &SpeedModel::default()).unwrap();
        let mut buf = Vec::new();
        vf.write_raw(&mut buf).unwrap();
        let nl = buf.iter().position(|&c| c == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
        assert_eq!(header["K"], vf.steps());
        assert_eq!(header["dtype"], "f64");
        let body = &buf[nl + 1..];
        assert_eq!(body.len(), vf.as_slice().len() * 8);
        let first = f64::from_le_bytes(body[..8].try_into().unwrap());
        assert_eq!(first, vf.slice(0)[0]);

        let mut csv = Vec::new();
        vf.write_slice_csv(0, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("i,j,x,y,u\n0,0,0,0,"));
        assert_eq!(text.lines().count(), 1 + 49);
    }
}
