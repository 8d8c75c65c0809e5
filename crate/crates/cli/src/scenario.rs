//! Turns a parsed config into core objects.

use ridgeline_core::{
    load_esri_ascii, make_synthetic, ElevationField, ExtMode, GridSpec, HamiltonianConfig,
    Mountain, NodataPolicy, Scheme, SolverConfig, SpeedModel, SyntheticTerrain, Vec2, Wall,
};

use crate::config::{parse_reals, ScenarioConfig};
use crate::error::{bad_value, CliError, Result};

pub fn cells(cfg: &ScenarioConfig) -> Result<(usize, usize)> {
    Ok((cfg.need("N")?, cfg.need("M")?))
}

pub fn speed_model(cfg: &ScenarioConfig) -> Result<SpeedModel> {
    let d = SpeedModel::default();
    let model = SpeedModel {
        v0: cfg.real("v0")?.unwrap_or(d.v0),
        slope_shift: cfg.real("slope_shift")?.unwrap_or(d.slope_shift),
        denom: cfg.real("denom")?.unwrap_or(d.denom),
        pen_threshold: cfg.real("pen_threshold")?.unwrap_or(d.pen_threshold),
        pen_width: cfg.real("pen_width")?.unwrap_or(d.pen_width),
    };
    model.validate()?;
    Ok(model)
}

pub fn hamiltonian(cfg: &ScenarioConfig) -> Result<HamiltonianConfig> {
    let d = HamiltonianConfig::default();
    let scheme = match cfg.choice("scheme", &["godunov", "lax_friedrichs"], "godunov")? {
        "godunov" => Scheme::Godunov,
        _ => Scheme::LaxFriedrichs,
    };
    let ext_mode = match cfg.choice("ext_mode", &["exact", "sampled"], "exact")? {
        "exact" => ExtMode::Exact,
        _ => ExtMode::Sampled,
    };
    let lf_alpha = match cfg.reals("lf_alpha")?.as_deref() {
        None => d.lf_alpha,
        Some(&[a]) => (a, a),
        Some(&[a, b]) => (a, b),
        Some(_) => return Err(bad_value("lf_alpha", "expected one or two numbers")),
    };
    Ok(HamiltonianConfig {
        n_directions: cfg.get_or("n_directions", d.n_directions)?,
        n_ext_samples: cfg.get_or("n_ext_samples", d.n_ext_samples)?,
        scheme,
        ext_mode,
        lf_alpha,
    })
}

/// Solver settings with horizon `horizon`; σ comes from the `sigma` key.
pub fn solver_config(cfg: &ScenarioConfig, horizon: f64) -> Result<SolverConfig> {
    let mut s = SolverConfig::new(cfg.bounds()?, cells(cfg)?, horizon, cfg.point("x_end")?);
    s.steps = cfg.get_or("K", 0)?;
    s.sigma = cfg.real("sigma")?.unwrap_or(0.0);
    s.hamiltonian = hamiltonian(cfg)?;
    s.cfl_safety = cfg.real("cfl_safety")?.unwrap_or(s.cfl_safety);
    s.memory_cap = cfg.get_or("memory_cap", s.memory_cap)?;
    s.check_invariants = cfg.flag("check_invariants")?.unwrap_or(s.check_invariants);
    Ok(s)
}

/// The synthetic terrain described by the config, or `None` for a DEM.
pub fn synthetic(cfg: &ScenarioConfig) -> Result<Option<SyntheticTerrain>> {
    let kind = cfg.choice("terrain", &["flat", "mountains", "wall", "dem"], "")?;
    Ok(match kind {
        "flat" => Some(SyntheticTerrain::Flat),
        "mountains" => Some(SyntheticTerrain::GaussianMountains(mountains(cfg)?)),
        "wall" => Some(SyntheticTerrain::Wall(wall(cfg)?)),
        _ => None,
    })
}

fn mountains(cfg: &ScenarioConfig) -> Result<Vec<Mountain>> {
    cfg.require("mountains")?
        .split(';')
        .filter(|rec| !rec.trim().is_empty())
        .map(|rec| match parse_reals("mountains", rec)?[..] {
            [cx, cy, height, width] => Ok(Mountain {
                center: Vec2::new(cx, cy),
                height,
                width,
            }),
            _ => Err(bad_value(
                "mountains",
                "each mountain is `cx cy height width`",
            )),
        })
        .collect()
}

fn wall(cfg: &ScenarioConfig) -> Result<Wall> {
    match cfg.need_reals("wall")?[..] {
        [x_lo, x_hi, y_lo, y_hi, height, ramp] => Ok(Wall {
            x_range: (x_lo, x_hi),
            y_range: (y_lo, y_hi),
            height,
            ramp,
        }),
        _ => Err(bad_value(
            "wall",
            "expected `x_lo x_hi y_lo y_hi height ramp`",
        )),
    }
}

/// Elevation field: synthetic terrain sampled on the solver grid, or a DEM.
pub fn terrain(cfg: &ScenarioConfig) -> Result<ElevationField> {
    match synthetic(cfg)? {
        Some(kind) => {
            let (n, m) = cells(cfg)?;
            let grid = GridSpec::covering(&cfg.bounds()?, n, m)?;
            Ok(make_synthetic(&kind, grid)?)
        }
        None => {
            let policy = match cfg.choice("nodata_policy", &["reject", "fill"], "reject")? {
                "reject" => NodataPolicy::Reject,
                _ => NodataPolicy::Fill,
            };
            let path = cfg.base_dir().join(cfg.require("dem_path")?);
            load_esri_ascii(&path, policy).map_err(|e| match e {
                ridgeline_core::Error::Io(source) => CliError::Io { path, source },
                other => other.into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "box = 0, 4, 0, 3\nN = 8\nM = 6\nx_end = 3, 1.5\n";

    fn cfg(extra: &str) -> ScenarioConfig {
        ScenarioConfig::parse(&format!("{BASE}{extra}"), "").unwrap()
    }

    #[test]
    fn defaults_match_core() {
        let c = cfg("terrain = flat\n");
        assert_eq!(speed_model(&c).unwrap(), SpeedModel::default());
        assert_eq!(hamiltonian(&c).unwrap(), HamiltonianConfig::default());
        let s = solver_config(&c, 2.0).unwrap();
        assert_eq!(s.cells, (8, 6));
        assert_eq!(s.sigma, 0.0);
    }

    #[test]
    fn terrain_kinds() {
        let c = cfg("terrain = mountains\nmountains = 1 1 0.3 0.4; 2 2 0.2 0.5\n");
        match synthetic(&c).unwrap() {
            Some(SyntheticTerrain::GaussianMountains(ms)) => assert_eq!(ms.len(), 2),
            other => panic!("{other:?}"),
        }
        let c = cfg("terrain = wall\nwall = 1 3 1.4 1.6 1 0.1\n");
        assert!(terrain(&c).unwrap().max_height() > 0.9);
        assert!(terrain(&cfg("terrain = wall\nwall = 1 3\n")).is_err());
        assert!(terrain(&cfg("terrain = hills\n")).is_err());
        let e = terrain(&cfg("terrain = mountains\n")).unwrap_err();
        assert_eq!(e.to_string(), "missing key: mountains");
    }

    #[test]
    fn scheme_keys() {
        let c =
            cfg("scheme = lax_friedrichs\next_mode = sampled\nlf_alpha = 2\nn_directions = 32\n");
        let h = hamiltonian(&c).unwrap();
        assert_eq!(h.scheme, Scheme::LaxFriedrichs);
        assert_eq!(h.ext_mode, ExtMode::Sampled);
        assert_eq!(h.lf_alpha, (2.0, 2.0));
        assert_eq!(h.n_directions, 32);
        assert!(hamiltonian(&cfg("scheme = weno\n")).is_err());
    }
}
