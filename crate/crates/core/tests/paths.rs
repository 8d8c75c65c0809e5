use approx::assert_abs_diff_eq;
use ridgeline_core::trajectory::{
    integrate_deterministic, integrate_stochastic, run_ensemble, PathSample,
};
use ridgeline_core::{
    make_synthetic, solver, Bounds, ControlField, ElevationField, GridSpec, Mountain, SolverConfig,
    SpeedModel, SyntheticTerrain, Trajectory, ValueFunction, Vec2,
};

fn solve_flat(n: usize, horizon: f64, x_end: Vec2) -> (ValueFunction, ElevationField) {
    let b = Bounds::new(0.0, 2.0, 0.0, 2.0).unwrap();
    let cfg = SolverConfig::new(b, (n, n), horizon, x_end);
    let field = make_synthetic(
        &SyntheticTerrain::Flat,
        GridSpec::covering(&b, n, n).unwrap(),
    )
    .unwrap();
    (
        solver::solve(&cfg, &field, &SpeedModel::default()).unwrap(),
        field,
    )
}

fn line(points: &[(f64, f64)]) -> Trajectory {
    let samples = points
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| PathSample {
            t: k as f64,
            p: Vec2::new(x, y),
            clamped: false,
        })
        .collect();
    Trajectory::from_samples(samples, Vec2::new(3.0, 0.0))
}

#[test]
fn arrival_stops_the_arc_length() {
    // arrives at x = 2.9, creeps to 3.0, then wanders off and back
    let p = line(&[
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (2.9, 0.0),
        (3.0, 0.0),
        (3.05, 0.0),
        (2.95, 0.0),
    ]);
    let target = Vec2::new(3.0, 0.0);
    assert_eq!(p.arrival_index(target, 0.1), Some(4));
    assert_abs_diff_eq!(p.arc_length_to(target, 0.1), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p.arc_length(), 3.15, epsilon = 1e-12);
    assert_eq!(p.arrival_index(target, 0.01), Some(4));
    assert_eq!(p.arrival_index(Vec2::new(0.0, 5.0), 0.5), None);
    assert_abs_diff_eq!(p.arc_length_to(Vec2::new(0.0, 5.0), 0.5), p.arc_length());
}

#[test]
fn steering_looks_ahead_on_flat_slices() {
    // Long horizon: at t = 0 the whole box is already within reach, so u is
    // flat there, yet the walker must still move.
    let x_end = Vec2::new(1.5, 1.0);
    let (vf, field) = solve_flat(40, 6.0, x_end);
    let cf = ControlField::new(&vf, &field, &SpeedModel::default()).unwrap();
    let p = Vec2::new(0.3, 0.5);
    assert!(cf.optimal_control(p, 0.0).unwrap().degenerate);
    let c = cf.steering_control(p, 0.0).unwrap();
    assert!(!c.degenerate);
    let to = (x_end - p) * (1.0 / p.distance(x_end));
    // taken from the front's smeared leading edge, so only roughly radial
    assert!(
        c.direction.unit.dot(to) > 0.9,
        "{:?} vs {to:?}",
        c.direction.unit
    );

    let path = integrate_deterministic(&cf, p).unwrap();
    assert!(path.terminal_distance <= 3.0 * vf.grid().dx);
    assert_eq!(path.clamped_steps(), 0);
}

#[test]
fn steps_respect_the_speed_bound() {
    let b = Bounds::new(0.0, 4.0, 0.0, 3.0).unwrap();
    let cfg = SolverConfig::new(b, (60, 45), 3.8, Vec2::new(3.6, 1.5));
    let hill = Mountain {
        center: Vec2::new(2.0, 1.5),
        height: 0.4,
        width: 0.5,
    };
    let field =
        make_synthetic(&SyntheticTerrain::GaussianMountains(vec![hill]), cfg.grid()).unwrap();
    let model = SpeedModel::default();
    let vf = solver::solve(&cfg, &field, &model).unwrap();
    let cf = ControlField::new(&vf, &field, &model).unwrap();
    let p = integrate_deterministic(&cf, Vec2::new(0.4, 1.5)).unwrap();
    assert_eq!(p.len(), vf.steps() + 1);
    for w in p.samples.windows(2) {
        assert_abs_diff_eq!(w[1].t - w[0].t, vf.dt(), epsilon = 1e-12);
        assert!(w[1].p.distance(w[0].p) <= 1.11 * vf.dt() + 1e-12);
    }
    assert!(p.terminal_distance <= 3.0 * vf.grid().dx);
}

#[test]
fn envelope_of_a_noisy_ensemble() {
    let x_end = Vec2::new(1.6, 1.0);
    let (vf, field) = solve_flat(40, 1.5, x_end);
    let cf = ControlField::new(&vf, &field, &SpeedModel::default()).unwrap();
    let x0 = Vec2::new(0.4, 1.0);
    let stats = run_ensemble(&cf, x0, 0.1, 400, 3).unwrap();
    assert_eq!(stats.mean_path.len(), vf.steps() + 1);
    assert_eq!(stats.realizations.len(), 3);
    assert_eq!(stats.std_devs[0], (0.0, 0.0));
    assert!(stats
        .std_devs
        .iter()
        .all(|&(sx, sy)| sx >= 0.0 && sy >= 0.0));

    // the start is matched exactly by the zero-spread first ellipse
    assert_eq!(stats.envelope_radius(x0), 0.0);
    let det = integrate_deterministic(&cf, x0).unwrap();
    assert!(stats.envelope_excursion(&det) <= 1.0);
    // a point far off the route is well outside
    assert!(stats.envelope_radius(Vec2::new(1.0, 1.9)) > 3.0);

    let one = integrate_stochastic(
        &cf,
        x0,
        0.1,
        &mut ridgeline_core::trajectory::trial_rng(3, 0),
    )
    .unwrap();
    assert_eq!(one, stats.realizations[0]);
}
