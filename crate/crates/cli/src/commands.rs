//! One function per subcommand. Each returns its output files in memory;
//! nothing here touches the filesystem except DEM loading.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use ridgeline_core::control::{write_snapshot_csv, Control};
use ridgeline_core::terrain::write_esri_ascii;
use ridgeline_core::trajectory::{
    critical_time_search, integrate_deterministic, run_ensemble_with, EnsembleOptions,
};
use ridgeline_core::{
    make_synthetic, solver, ControlField, ElevationField, ExtMode, GridSpec, Point, Scheme,
    SolverConfig, SpeedModel, Trajectory, ValueFunction,
};

use crate::artifacts::Artifacts;
use crate::config::ScenarioConfig;
use crate::error::{bad_value, CliError, Result};
use crate::scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock time in metadata (makes output run-dependent).
    pub timing: bool,
}

/// A solved scenario with everything needed to extract paths.
pub struct Solved {
    pub field: ElevationField,
    pub model: SpeedModel,
    pub vf: ValueFunction,
    pub seconds: f64,
}

impl Solved {
    pub fn controls(&self) -> Result<ControlField<'_>> {
        Ok(ControlField::new(&self.vf, &self.field, &self.model)?)
    }

    /// Larger of the two cell widths.
    pub fn cell(&self) -> f64 {
        let g = self.vf.grid();
        g.dx.max(g.dy)
    }
}

pub fn solve_with(field: ElevationField, model: SpeedModel, sc: &SolverConfig) -> Result<Solved> {
    let start = Instant::now();
    let vf = solver::solve(sc, &field, &model)?;
    Ok(Solved {
        field,
        model,
        vf,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn solve_scenario(cfg: &ScenarioConfig) -> Result<Solved> {
    let sc = scenario::solver_config(cfg, cfg.need_real("T")?)?;
    solve_with(scenario::terrain(cfg)?, scenario::speed_model(cfg)?, &sc)
}

fn delta_reach(cfg: &ScenarioConfig, cell: f64) -> Result<f64> {
    Ok(cfg.real("delta_reach")?.unwrap_or(3.0 * cell))
}

#[derive(Serialize)]
struct SliceRange {
    k: usize,
    t_backward: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct SolveMeta {
    command: &'static str,
    config: BTreeMap<String, String>,
    scheme: &'static str,
    hamiltonian: Scheme,
    ext_mode: ExtMode,
    nodes: (usize, usize),
    dx: f64,
    dy: f64,
    steps_requested: usize,
    steps: usize,
    dt: f64,
    horizon: f64,
    sigma: f64,
    cfl_number: f64,
    cfl_safety: f64,
    diameter: f64,
    u_min_final: f64,
    u_max_final: f64,
    value_files: Vec<String>,
    layout: &'static str,
    slices: Vec<SliceRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

pub fn solve(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
    let s = solve_scenario(cfg)?;
    let vf = &s.vf;
    let sc = vf.config();
    let g = vf.grid();
    let mut out = Artifacts::default();

    let (value_files, layout) = match cfg.choice("value_format", &["raw", "csv"], "raw")? {
        "raw" => {
            out.add_with("value.bin", |w| vf.write_raw(w))?;
            (
                vec!["value.bin".to_string()],
                "JSON header line, then f64 little-endian, index (k * nx + i) * ny + j",
            )
        }
        _ => {
            let mut names = Vec::with_capacity(vf.steps() + 1);
            for k in 0..=vf.steps() {
                let name = format!("value/u_k{k:05}.csv");
                out.add_with(&name, |w| vf.write_slice_csv(k, w))?;
                names.push(name);
            }
            (names, "one CSV per backward step k, rows i,j,x,y,u")
        }
    };

    let (u_min_final, u_max_final) = vf.slice_range(vf.steps());
    let meta = SolveMeta {
        command: "solve",
        config: cfg.echo(),
        scheme: sc.scheme_name(),
        hamiltonian: sc.hamiltonian.scheme,
        ext_mode: sc.hamiltonian.ext_mode,
        nodes: (g.nx, g.ny),
        dx: g.dx,
        dy: g.dy,
        steps_requested: vf.requested_steps(),
        steps: vf.steps(),
        dt: vf.dt(),
        horizon: vf.horizon(),
        sigma: sc.sigma,
        cfl_number: sc.cfl_number(&s.model),
        cfl_safety: sc.cfl_safety,
        diameter: sc.diameter(),
        u_min_final,
        u_max_final,
        value_files,
        layout,
        slices: (0..=vf.steps())
            .map(|k| {
                let (min, max) = vf.slice_range(k);
                SliceRange {
                    k,
                    t_backward: k as f64 * vf.dt(),
                    min,
                    max,
                }
            })
            .collect(),
        wall_clock_s: opts.timing.then_some(s.seconds),
    };
    out.add_json("metadata.json", &meta)?;
    Ok(out)
}

#[derive(Serialize)]
struct PathSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    scheme: &'static str,
    sigma: f64,
    steps: usize,
    dt: f64,
    terminal_distance: f64,
    closest_approach: f64,
    clamped_steps: usize,
    arc_length: f64,
    arrival_radius: f64,
    arrived: bool,
    arc_length_to_arrival: f64,
    max_elevation: f64,
    peak_elevation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

fn max_elevation(field: &ElevationField, path: &Trajectory) -> Result<f64> {
    path.samples.iter().try_fold(
        f64::NEG_INFINITY,
        |m, s| Ok(m.max(field.elevation_at(s.p)?)),
    )
}

pub fn path(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
    let s = solve_scenario(cfg)?;
    let x0 = cfg.point("x0")?;
    let x_end = s.vf.config().x_end;
    let p = integrate_deterministic(&s.controls()?, x0)?;
    let radius = delta_reach(cfg, s.cell())?;
    let summary = PathSummary {
        command: "path",
        config: cfg.echo(),
        scheme: s.vf.config().scheme_name(),
        sigma: s.vf.config().sigma,
        steps: s.vf.steps(),
        dt: s.vf.dt(),
        terminal_distance: p.terminal_distance,
        closest_approach: p.closest_approach,
        clamped_steps: p.clamped_steps(),
        arc_length: p.arc_length(),
        arrival_radius: radius,
        arrived: p.arrival_index(x_end, radius).is_some(),
        arc_length_to_arrival: p.arc_length_to(x_end, radius),
        max_elevation: max_elevation(&s.field, &p)?,
        peak_elevation: s.field.max_height(),
        wall_clock_s: opts.timing.then_some(s.seconds),
    };
    let mut out = Artifacts::default();
    out.add_with("path.csv", |w| p.write_csv(w))?;
    out.add_json("summary.json", &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct EnsembleSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    sigma: f64,
    num_trials: usize,
    seed: u64,
    realizations: usize,
    clamped_trials: usize,
    mean_terminal_distance: f64,
    max_std: (f64, f64),
    deterministic_terminal_distance: f64,
    /// Worst normalized distance of the deterministic path from the
    /// one-standard-deviation envelope; at most 1 means inside.
    envelope_excursion: f64,
    inside_envelope: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

pub fn ensemble(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
    if cfg.choice("method", &["deterministic", "ensemble"], "deterministic")? != "ensemble" {
        return Err(CliError::Validation(
            "the ensemble command needs method = ensemble".into(),
        ));
    }
    let trials: usize = cfg.need("L")?;
    if trials < 2 {
        return Err(bad_value("L", "an ensemble needs at least two trials"));
    }
    let seed: u64 = cfg.get_or("seed", 0)?;
    let keep: usize = cfg.get_or("realizations", 3)?;
    let x0 = cfg.point("x0")?;
    let s = solve_scenario(cfg)?;
    let sigma = s.vf.config().sigma;
    let cf = s.controls()?;

    let start = Instant::now();
    let mut eo = EnsembleOptions::new(trials, seed);
    eo.keep = keep;
    let stats = run_ensemble_with(&cf, x0, sigma, eo)?;
    let det = integrate_deterministic(&cf, x0)?;
    let excursion = stats.envelope_excursion(&det);
    let seconds = s.seconds + start.elapsed().as_secs_f64();

    let mut out = Artifacts::default();
    out.add_with("ensemble.csv", |w| stats.write_csv(w))?;
    for (n, r) in stats.realizations.iter().enumerate() {
        out.add_with(format!("realization_{}.csv", n + 1), |w| r.write_csv(w))?;
    }
    out.add_with("deterministic.csv", |w| det.write_csv(w))?;
    let summary = EnsembleSummary {
        command: "ensemble",
        config: cfg.echo(),
        sigma,
        num_trials: stats.num_trials,
        seed: stats.seed,
        realizations: stats.realizations.len(),
        clamped_trials: stats.clamped_trials,
        mean_terminal_distance: stats.mean_path.terminal_distance,
        max_std: stats.std_devs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
            (f64::max(a, x), f64::max(b, y))
        }),
        deterministic_terminal_distance: det.terminal_distance,
        envelope_excursion: excursion,
        inside_envelope: excursion <= 1.0,
        wall_clock_s: opts.timing.then_some(seconds),
    };
    out.add_json("summary.json", &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct CriticalSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    t_star: f64,
    bracket: (f64, f64),
    delta_reach: f64,
    tol_t: f64,
    probes: usize,
    /// d / V(0): the answer on flat ground.
    straight_line_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

pub fn critical_time(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
    let t_lo = cfg.need_real("t_lo")?;
    let t_hi = cfg.need_real("t_hi")?;
    let tol_t = cfg.real("tol_T")?.unwrap_or(0.01);
    let x0 = cfg.point("x0")?;
    let template = scenario::solver_config(cfg, cfg.real("T")?.unwrap_or(t_hi))?;
    let field = scenario::terrain(cfg)?;
    let model = scenario::speed_model(cfg)?;
    let g = template.grid();
    let delta = delta_reach(cfg, g.dx.max(g.dy))?;

    let start = Instant::now();
    let ct = critical_time_search(&field, &model, x0, &template, t_lo, t_hi, delta, tol_t)?;
    let summary = CriticalSummary {
        command: "critical-time",
        config: cfg.echo(),
        t_star: ct.t_star,
        bracket: ct.bracket,
        delta_reach: delta,
        tol_t,
        probes: ct.trace.len(),
        straight_line_time: x0.distance(template.x_end) / model.base_speed(0.0),
        wall_clock_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
    };
    let mut out = Artifacts::default();
    out.add_with("critical_time.csv", |w| ct.write_trace_csv(w))?;
    out.add_json("critical_time.json", &summary)?;
    Ok(out)
}

/// σ values from `sigma_list`: must contain 0 and at least two positive values.
pub fn sigma_list(cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    let list = cfg.need_reals("sigma_list")?;
    if list.iter().any(|&s| s < 0.0) {
        return Err(bad_value("sigma_list", "sigma must be non-negative"));
    }
    if !list.contains(&0.0) {
        return Err(bad_value(
            "sigma_list",
            "must contain 0 (the reference path)",
        ));
    }
    if list.iter().filter(|&&s| s > 0.0).count() < 2 {
        return Err(bad_value(
            "sigma_list",
            "needs at least two positive values",
        ));
    }
    for (n, s) in list.iter().enumerate() {
        if list[..n].contains(s) {
            return Err(bad_value("sigma_list", format!("{s} appears twice")));
        }
    }
    Ok(list)
}

/// Per-σ horizons from `t_overrides = sigma:T, sigma:T`.
fn horizon_overrides(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>> {
    let Some(raw) = cfg.raw("t_overrides") else {
        return Ok(Vec::new());
    };
    raw.split(',')
        .filter(|r| !r.trim().is_empty())
        .map(|r| {
            let parsed = r.split_once(':').and_then(|(s, t)| {
                let s: f64 = s.trim().parse().ok()?;
                let t: f64 = t.trim().parse().ok()?;
                (s.is_finite() && t.is_finite()).then_some((s, t))
            });
            parsed.ok_or_else(|| {
                bad_value(
                    "t_overrides",
                    format!("expected `sigma:T`, got {:?}", r.trim()),
                )
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ConvergeRow {
    sigma: f64,
    horizon: f64,
    steps: usize,
    max_distance: f64,
    terminal_distance: f64,
    arc_length: f64,
    file: String,
}

#[derive(Serialize)]
struct ConvergeSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    cell: f64,
    rows: Vec<ConvergeRow>,
    /// Distances never grow as σ decreases.
    monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

pub fn converge(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
    let sigmas = sigma_list(cfg)?;
    let overrides = horizon_overrides(cfg)?;
    let default_t = cfg.real("T")?;
    let x0 = cfg.point("x0")?;
    let field = scenario::terrain(cfg)?;
    let model = scenario::speed_model(cfg)?;

    let start = Instant::now();
    let mut paths = Vec::with_capacity(sigmas.len());
    let mut cell = 0.0;
    for &sigma in &sigmas {
        let horizon = match overrides.iter().find(|(s, _)| *s == sigma) {
            Some(&(_, t)) => t,
            None => default_t.ok_or_else(|| CliError::MissingKey("T".into()))?,
        };
        let mut sc = scenario::solver_config(cfg, horizon)?;
        sc.sigma = sigma;
        let vf = solver::solve(&sc, &field, &model)?;
        let cf = ControlField::new(&vf, &field, &model)?;
        cell = vf.grid().dx.max(vf.grid().dy);
        paths.push((
            sigma,
            horizon,
            vf.steps(),
            integrate_deterministic(&cf, x0)?,
        ));
    }
    let reference = &paths[sigmas.iter().position(|&s| s == 0.0).unwrap_or(0)].3;

    let mut out = Artifacts::default();
    let mut table = String::from("sigma,T,K,max_distance,terminal_distance,arc_length\n");
    let mut rows = Vec::with_capacity(paths.len());
    for (sigma, horizon, steps, p) in &paths {
        let file = format!("path_sigma_{sigma}.csv");
        out.add_with(&file, |w| p.write_csv(w))?;
        let row = ConvergeRow {
            sigma: *sigma,
            horizon: *horizon,
            steps: *steps,
            max_distance: p.max_distance_to(reference),
            terminal_distance: p.terminal_distance,
            arc_length: p.arc_length(),
            file,
        };
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.sigma,
            row.horizon,
            row.steps,
            row.max_distance,
            row.terminal_distance,
            row.arc_length
        ));
        rows.push(row);
    }
    let mut by_sigma: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sigma > 0.0)
        .map(|r| (r.sigma, r.max_distance))
        .collect();
    by_sigma.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_sigma.windows(2).all(|w| w[1].1 <= w[0].1);

    out.add("converge.csv", table.into_bytes());
    let summary = ConvergeSummary {
        command: "converge",
        config: cfg.echo(),
        cell,
        rows,
        monotone,
        wall_clock_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
    };
    out.add_json("converge.json", &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct SnapshotEntry {
    t: f64,
    file: String,
    samples: usize,
    degenerate: usize,
    max_adjacent_gap_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0_heading_deg: Option<f64>,
}

#[derive(Serialize)]
struct SnapshotSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    stride: usize,
    snapshots: Vec<SnapshotEntry>,
}

/// Largest angle between neighbouring non-degenerate arrows of a strided
/// snapshot laid out row-major in `(i, j)` with `nj` columns.
pub fn max_adjacent_gap(snap: &[(Point, Control)], nj: usize) -> f64 {
    let gap = |a: &Control, b: &Control| {
        if a.degenerate || b.degenerate {
            0.0
        } else {
            a.direction
                .unit
                .dot(b.direction.unit)
                .clamp(-1.0, 1.0)
                .acos()
        }
    };
    let mut worst: f64 = 0.0;
    for (n, (_, c)) in snap.iter().enumerate() {
        if (n + 1) % nj != 0 {
            if let Some((_, right)) = snap.get(n + 1) {
                worst = worst.max(gap(c, right));
            }
        }
        if let Some((_, below)) = snap.get(n + nj) {
            worst = worst.max(gap(c, below));
        }
    }
    worst
}

pub fn control_snapshot(cfg: &ScenarioConfig, _opts: RunOptions) -> Result<Artifacts> {
    let times = cfg.need_reals("snapshot_times")?;
    let stride: usize = cfg.get_or("stride", 1)?;
    let s = solve_scenario(cfg)?;
    let cf = s.controls()?;
    let x0 = cfg.contains("x0").then(|| cfg.point("x0")).transpose()?;
    let nj = s.vf.grid().ny.div_ceil(stride.max(1));

    let mut out = Artifacts::default();
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in &times {
        let snap = cf.snapshot(t, stride)?;
        let file = format!("snapshot_t{t}.csv");
        out.add_with(&file, |w| write_snapshot_csv(&snap, w))?;
        let x0_heading_deg = match x0 {
            Some(p) => Some(cf.steering_control(p, t)?.direction.angle.to_degrees()),
            None => None,
        };
        snapshots.push(SnapshotEntry {
            t,
            file,
            samples: snap.len(),
            degenerate: snap.iter().filter(|(_, c)| c.degenerate).count(),
            max_adjacent_gap_deg: max_adjacent_gap(&snap, nj).to_degrees(),
            x0_heading_deg,
        });
    }
    let summary = SnapshotSummary {
        command: "control-snapshot",
        config: cfg.echo(),
        stride,
        snapshots,
    };
    out.add_json("control_snapshot.json", &summary)?;
    Ok(out)
}

pub fn gen_terrain(cfg: &ScenarioConfig, _opts: RunOptions) -> Result<Artifacts> {
    let kind = scenario::synthetic(cfg)?.ok_or_else(|| {
        CliError::Validation(
            "gen-terrain needs a synthetic terrain (flat, mountains or wall)".into(),
        )
    })?;
    let (n, m) = scenario::cells(cfg)?;
    let field = make_synthetic(&kind, GridSpec::covering(&cfg.bounds()?, n, m)?)?;
    let mut out = Artifacts::default();
    out.add_with("terrain.asc", |w| write_esri_ascii(&field, w))?;
    Ok(out)
}
