//! Forward integration of walking paths under the optimal control.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::control::ControlField;
use crate::error::{invalid, Error, Result};
use crate::grid::{Point, Vec2};
use crate::kinematics::SpeedModel;
use crate::solver::{solve, SolverConfig};
use crate::terrain::ElevationField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub p: Point,
    /// The step into this sample left the box and was projected back.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PathSample>,
    pub terminal_distance: f64,
    pub closest_approach: f64,
}

impl Trajectory {
    pub fn from_samples(samples: Vec<PathSample>, x_end: Point) -> Self {
        let last = samples.last().expect("non-empty path").p;
        let closest_approach = samples
            .iter()
            .map(|s| s.p.distance(x_end))
            .fold(f64::INFINITY, f64::min);
        Trajectory {
            terminal_distance: last.distance(x_end),
            closest_approach,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end(&self) -> Point {
        self.samples.last().expect("non-empty path").p
    }

    pub fn clamped_steps(&self) -> usize {
        self.samples.iter().filter(|s| s.clamped).count()
    }

    pub fn arc_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].p.distance(w[0].p))
            .sum()
    }

    /// Index of arrival at `target`: the first sample within `radius`, moved
    /// on while the distance does not grow.
    pub fn arrival_index(&self, target: Point, radius: f64) -> Option<usize> {
        let dist = |k: usize| self.samples[k].p.distance(target);
        let mut k = (0..self.samples.len()).find(|&k| dist(k) <= radius)?;
        while k + 1 < self.samples.len() && dist(k + 1) <= dist(k) {
            k += 1;
        }
        Some(k)
    }

    /// Arc length up to [`arrival_index`](Self::arrival_index), or of the
    /// whole path if it never gets within `radius`.
    pub fn arc_length_to(&self, target: Point, radius: f64) -> f64 {
        let stop = self
            .arrival_index(target, radius)
            .unwrap_or(self.samples.len() - 1);
        self.samples[..=stop]
            .windows(2)
            .map(|w| w[1].p.distance(w[0].p))
            .sum()
    }

    /// Position at time `t`, linear between samples and clamped to the ends.
    pub fn position_at(&self, t: f64) -> Point {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].p;
        }
        let k = s.partition_point(|x| x.t <= t);
        if k >= s.len() {
            return s[s.len() - 1].p;
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let w = (t - a.t) / (b.t - a.t);
        a.p + (b.p - a.p) * w
    }

    /// Largest distance between the two paths at this path's sample times.
    pub fn max_distance_to(&self, other: &Trajectory) -> f64 {
        self.samples
            .iter()
            .map(|s| s.p.distance(other.position_at(s.t)))
            .fold(0.0, f64::max)
    }

    /// CSV rows `t,x,y,clamped`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,y,clamped")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.t, s.p.x, s.p.y, u8::from(s.clamped))?;
        }
        Ok(())
    }
}

/// Whether the control drift enters the SDE. `Off` leaves pure Brownian
/// motion, which is useful for checking the noise statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Drift {
    #[default]
    On,
    Off,
}

fn integrate<R: Rng>(
    cf: &ControlField<'_>,
    x0: Point,
    sigma: f64,
    drift: Drift,
    mut rng: Option<&mut R>,
) -> Result<Trajectory> {
    let vf = cf.value_function();
    let bounds = vf.grid().bounds();
    if !x0.is_finite() || !bounds.contains(x0) {
        return Err(Error::OutOfDomain { x: x0.x, y: x0.y });
    }
    let steps = vf.steps();
    let dt = vf.dt();
    let noise = sigma * dt.sqrt();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut x = x0;
    samples.push(PathSample {
        t: 0.0,
        p: x,
        clamped: false,
    });
    for n in 0..steps {
        let t = n as f64 * dt;
        let mut next = x;
        if drift == Drift::On {
            let c = cf.steering_control(x, t)?;
            if !c.degenerate {
                next = x + c.direction.unit * (dt * c.speed);
            }
        }
        if let Some(r) = rng.as_deref_mut() {
            if sigma > 0.0 {
                let xi = Vec2::new(r.sample(StandardNormal), r.sample(StandardNormal));
                next = next + xi * noise;
            }
        }
        let (p, clamped) = bounds.clamp(next);
        x = p;
        samples.push(PathSample {
            t: (n + 1) as f64 * dt,
            p,
            clamped,
        });
    }
    Ok(Trajectory::from_samples(samples, vf.config().x_end))
}

/// Forward Euler with the solver's time step.
pub fn integrate_deterministic(cf: &ControlField<'_>, x0: Point) -> Result<Trajectory> {
    integrate::<ChaCha20Rng>(cf, x0, 0.0, Drift::On, None)
}

/// Euler-Maruyama with additive noise `σ dW`.
pub fn integrate_stochastic<R: Rng>(
    cf: &ControlField<'_>,
    x0: Point,
    sigma: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    integrate_stochastic_with(cf, x0, sigma, rng, Drift::On)
}

pub fn integrate_stochastic_with<R: Rng>(
    cf: &ControlField<'_>,
    x0: Point,
    sigma: f64,
    rng: &mut R,
    drift: Drift,
) -> Result<Trajectory> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be non-negative"));
    }
    integrate(cf, x0, sigma, drift, Some(rng))
}

/// Independent stream for one ensemble member.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleOptions {
    pub trials: usize,
    pub seed: u64,
    /// How many leading realizations to keep.
    pub keep: usize,
    pub drift: Drift,
}

impl EnsembleOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        EnsembleOptions {
            trials,
            seed,
            keep: 3,
            drift: Drift::On,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub mean_path: Trajectory,
    /// Per-step sample standard deviations `(δx, δy)`, divisor `L − 1`.
    pub std_devs: Vec<(f64, f64)>,
    pub num_trials: usize,
    pub seed: u64,
    pub realizations: Vec<Trajectory>,
    /// Trials that touched the box boundary at least once.
    pub clamped_trials: usize,
    /// Every trial's final position, in trial order.
    pub endpoints: Vec<Point>,
}

impl EnsembleStats {
    /// Normalized distance `√((Δx/δx)² + (Δy/δy)²)` from `p` to the centre
    /// of the nearest one-standard-deviation ellipse along the mean path.
    /// At most 1 means `p` lies in the envelope swept by those ellipses. A
    /// zero spread admits only an exact match in that coordinate.
    pub fn envelope_radius(&self, p: Point) -> f64 {
        let scaled = |d: f64, s: f64| {
            if d == 0.0 {
                0.0
            } else if s == 0.0 {
                f64::INFINITY
            } else {
                d / s
            }
        };
        self.mean_path
            .samples
            .iter()
            .zip(&self.std_devs)
            .map(|(m, &(sx, sy))| scaled(p.x - m.p.x, sx).hypot(scaled(p.y - m.p.y, sy)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst [`envelope_radius`](Self::envelope_radius) over the samples of `path`.
    pub fn envelope_excursion(&self, path: &Trajectory) -> f64 {
        path.samples
            .par_iter()
            .map(|s| self.envelope_radius(s.p))
            .reduce(|| 0.0, f64::max)
    }

    /// CSV rows `t,mean_x,mean_y,std_x,std_y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mean_x,mean_y,std_x,std_y")?;
        for (s, (sx, sy)) in self.mean_path.samples.iter().zip(&self.std_devs) {
            writeln!(w, "{},{},{},{},{}", s.t, s.p.x, s.p.y, sx, sy)?;
        }
        Ok(())
    }
}

/// Sum with a fixed binary tree, so the result does not depend on how the
/// trials were scheduled.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Sample mean and standard deviation, computed about the first value so
/// that identical inputs give exactly that value and zero spread.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let dev: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let shift = pairwise_sum(&dev) / n;
    let sq: Vec<f64> = dev.iter().map(|d| (d - shift) * (d - shift)).collect();
    (x0 + shift, (pairwise_sum(&sq) / (n - 1.0)).sqrt())
}

pub fn run_ensemble(
    cf: &ControlField<'_>,
    x0: Point,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    run_ensemble_with(cf, x0, sigma, EnsembleOptions::new(trials, seed))
}

pub fn run_ensemble_with(
    cf: &ControlField<'_>,
    x0: Point,
    sigma: f64,
    opts: EnsembleOptions,
) -> Result<EnsembleStats> {
    if opts.trials < 2 {
        return Err(invalid("an ensemble needs at least two trials"));
    }
    let paths: Vec<Trajectory> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(opts.seed, trial as u64);
            integrate_stochastic_with(cf, x0, sigma, &mut rng, opts.drift)
        })
        .collect::<Result<_>>()?;

    let steps = paths[0].len();
    let mut samples = Vec::with_capacity(steps);
    let mut std_devs = Vec::with_capacity(steps);
    let mut xs = vec![0.0; paths.len()];
    let mut ys = vec![0.0; paths.len()];
    for n in 0..steps {
        for (l, p) in paths.iter().enumerate() {
            xs[l] = p.samples[n].p.x;
            ys[l] = p.samples[n].p.y;
        }
        let (mx, sx) = mean_std(&xs);
        let (my, sy) = mean_std(&ys);
        samples.push(PathSample {
            t: paths[0].samples[n].t,
            p: Vec2::new(mx, my),
            clamped: false,
        });
        std_devs.push((sx, sy));
    }
    let x_end = cf.value_function().config().x_end;
    Ok(EnsembleStats {
        mean_path: Trajectory::from_samples(samples, x_end),
        std_devs,
        num_trials: opts.trials,
        seed: opts.seed,
        clamped_trials: paths.iter().filter(|p| p.clamped_steps() > 0).count(),
        endpoints: paths.iter().map(|p| p.end()).collect(),
        realizations: paths.into_iter().take(opts.keep).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachProbe {
    pub horizon: f64,
    pub steps: usize,
    pub reached: bool,
    pub terminal_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalTime {
    pub t_star: f64,
    pub bracket: (f64, f64),
    /// Probes in evaluation order, starting with the two bracket ends.
    pub trace: Vec<ReachProbe>,
}

impl CriticalTime {
    /// CSV rows `T,K,reached,terminal_distance`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "T,K,reached,terminal_distance")?;
        for p in &self.trace {
            writeln!(
                w,
                "{},{},{},{}",
                p.horizon,
                p.steps,
                u8::from(p.reached),
                p.terminal_distance
            )?;
        }
        Ok(())
    }
}

/// Solves with horizon `t` (step count scaled from the template so Δt stays
/// put, then CFL-checked) and follows the deterministic path from `x0`.
pub fn reach_probe(
    field: &ElevationField,
    model: &SpeedModel,
    x0: Point,
    template: &SolverConfig,
    t: f64,
    delta_reach: f64,
) -> Result<ReachProbe> {
    let mut cfg = template.clone();
    cfg.horizon = t;
    if template.steps > 0 {
        cfg.steps = (template.steps as f64 * t / template.horizon).ceil() as usize;
    }
    let vf = solve(&cfg, field, model)?;
    let cf = ControlField::new(&vf, field, model)?;
    let path = integrate_deterministic(&cf, x0)?;
    Ok(ReachProbe {
        horizon: t,
        steps: vf.steps(),
        reached: path.terminal_distance <= delta_reach,
        terminal_distance: path.terminal_distance,
    })
}

/// Bisection for the shortest horizon whose deterministic path ends within
/// `delta_reach` of the target.
#[allow(clippy::too_many_arguments)]
pub fn critical_time_search(
    field: &ElevationField,
    model: &SpeedModel,
    x0: Point,
    template: &SolverConfig,
    t_lo: f64,
    t_hi: f64,
    delta_reach: f64,
    tol_t: f64,
) -> Result<CriticalTime> {
    if !(t_lo > 0.0 && t_hi > t_lo && tol_t > 0.0 && delta_reach > 0.0) {
        return Err(invalid(
            "need 0 < T_lo < T_hi, tol_T > 0 and delta_reach > 0",
        ));
    }
    template.check_margin(x0, "x0")?;
    let mut trace = Vec::new();
    let lo_probe = reach_probe(field, model, x0, template, t_lo, delta_reach)?;
    let hi_probe = reach_probe(field, model, x0, template, t_hi, delta_reach)?;
    trace.push(lo_probe);
    trace.push(hi_probe);
    if lo_probe.reached || !hi_probe.reached {
        return Err(Error::Bracket {
            lo: t_lo,
            hi: t_hi,
            reach_lo: lo_probe.reached,
            reach_hi: hi_probe.reached,
        });
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        let p = reach_probe(field, model, x0, template, mid, delta_reach)?;
        trace.push(p);
        if p.reached {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalTime {
        t_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bounds, GridSpec};
    use crate::solver::ValueFunction;
    use crate::terrain::{make_synthetic, SyntheticTerrain};

    fn flat(n: usize, t: f64, x_end: Point) -> (ValueFunction, ElevationField) {
        let b = Bounds::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let cfg = SolverConfig::new(b, (n, n), t, x_end);
        let f = make_synthetic(
            &SyntheticTerrain::Flat,
            GridSpec::covering(&b, n, n).unwrap(),
        )
        .unwrap();
        (solve(&cfg, &f, &SpeedModel::default()).unwrap(), f)
    }

    #[test]
    fn pairwise_and_moments() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64 * 0.1).collect();
        assert!((pairwise_sum(&v) - 49950.0).abs() < 1e-9);
        let (m, s) = mean_std(&[0.1; 7]);
        assert_eq!((m, s), (0.1, 0.0));
        // two samples: δ = |a − b| / √2
        let (m, s) = mean_std(&[1.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 3.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn straight_walk_on_flat_ground() {
        let x_end = Vec2::new(1.5, 1.0);
        let (vf, f) = flat(60, 1.2, x_end);
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let x0 = Vec2::new(0.5, 1.0);
        let path = integrate_deterministic(&cf, x0).unwrap();
        let dx = vf.grid().dx;
        assert!(
            path.terminal_distance <= 3.0 * dx,
            "{}",
            path.terminal_distance
        );
        assert_eq!(path.clamped_steps(), 0);
        let vmax = SpeedModel::default().max_speed();
        for w in path.samples.windows(2) {
            assert!(w[1].p.distance(w[0].p) <= vmax * vf.dt() + 1e-12);
            assert!(w[1].t > w[0].t);
        }
        assert_eq!(path.samples.len(), vf.steps() + 1);
        assert!((path.samples.last().unwrap().t - 1.2).abs() < 1e-12);
    }

    #[test]
    fn short_horizon_falls_short() {
        let x_end = Vec2::new(1.6, 1.0);
        let (vf, f) = flat(60, 0.5, x_end);
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let x0 = Vec2::new(0.4, 1.0);
        let path = integrate_deterministic(&cf, x0).unwrap();
        let v0 = SpeedModel::default().base_speed(0.0);
        let want = 1.2 - v0 * 0.5;
        assert!((path.terminal_distance - want).abs() <= 3.0 * vf.grid().dx);
    }

    #[test]
    fn start_at_target_stays_near() {
        let x_end = Vec2::new(1.0, 1.0);
        let (vf, f) = flat(40, 0.5, x_end);
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let path = integrate_deterministic(&cf, x_end).unwrap();
        let dx = vf.grid().dx;
        assert!(path.samples.iter().all(|s| s.p.distance(x_end) <= 2.0 * dx));
    }

    #[test]
    fn zero_noise_matches_deterministic() {
        let (vf, f) = flat(30, 0.8, Vec2::new(1.4, 1.2));
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let x0 = Vec2::new(0.3, 0.5);
        let a = integrate_deterministic(&cf, x0).unwrap();
        let b = integrate_stochastic(&cf, x0, 0.0, &mut trial_rng(1, 0)).unwrap();
        assert_eq!(a, b);
        let e = run_ensemble(&cf, x0, 0.0, 5, 3).unwrap();
        assert_eq!(e.mean_path.samples, a.samples);
        assert!(e.std_devs.iter().all(|&(x, y)| x == 0.0 && y == 0.0));
    }

    #[test]
    fn seeds_control_the_noise() {
        let (vf, f) = flat(30, 0.8, Vec2::new(1.4, 1.2));
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let x0 = Vec2::new(0.6, 0.5);
        let a = integrate_stochastic(&cf, x0, 0.2, &mut trial_rng(9, 4)).unwrap();
        let b = integrate_stochastic(&cf, x0, 0.2, &mut trial_rng(9, 4)).unwrap();
        let c = integrate_stochastic(&cf, x0, 0.2, &mut trial_rng(10, 4)).unwrap();
        let d = integrate_stochastic(&cf, x0, 0.2, &mut trial_rng(9, 5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn two_trial_spread() {
        let (vf, f) = flat(30, 0.8, Vec2::new(1.4, 1.2));
        let cf = ControlField::new(&vf, &f, &SpeedModel::default()).unwrap();
        let x0 = Vec2::new(0.6, 0.5);
        let e = run_ensemble(&cf, x0, 0.1, 2, 77).unwrap();
        let a = integrate_stochastic(&cf, x0, 0.1, &mut trial_rng(77, 0)).unwrap();
        let b = integrate_stochastic(&cf, x0, 0.1, &mut trial_rng(77, 1)).unwrap();
        for (n, (sx, sy)) in e.std_devs.iter().enumerate() {
            let want_x = (a.samples[n].p.x - b.samples[n].p.x).abs() / 2f64.sqrt();
            let want_y = (a.samples[n].p.y - b.samples[n].p.y).abs() / 2f64.sqrt();
            assert!((sx - want_x).abs() <= 1e-12 && (sy - want_y).abs() <= 1e-12);
        }
        assert_eq!(e.realizations.len(), 2);
        assert!(run_ensemble(&cf, x0, 0.1, 1, 77).is_err());
    }

    #[test]
    fn position_interpolation() {
        let s = |t: f64, x: f64| PathSample {
            t,
            p: Vec2::new(x, 0.0),
            clamped: false,
        };
        let tr = Trajectory::from_samples(vec![s(0.0, 0.0), s(1.0, 2.0), s(2.0, 2.0)], Vec2::ZERO);
        assert_eq!(tr.position_at(0.5), Vec2::new(1.0, 0.0));
        assert_eq!(tr.position_at(5.0), Vec2::new(2.0, 0.0));
        assert_eq!(tr.arc_length(), 2.0);
        assert_eq!(tr.closest_approach, 0.0);
        assert_eq!(tr.terminal_distance, 2.0);
    }

    #[test]
    fn inverted_bracket_is_rejected() {
        let b = Bounds::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let cfg = SolverConfig::new(b, (20, 20), 1.0, Vec2::new(1.6, 1.0));
        let f = make_synthetic(&SyntheticTerrain::Flat, cfg.grid()).unwrap();
        let m = SpeedModel::default();
        let x0 = Vec2::new(0.4, 1.0);
        let r = critical_time_search(&f, &m, x0, &cfg, 3.0, 3.5, 0.3, 0.1);
        assert!(matches!(r, Err(Error::Bracket { reach_lo: true, .. })));
    }
}
