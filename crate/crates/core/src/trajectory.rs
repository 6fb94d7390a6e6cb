//! Protocol-driven trajectories, first-passage detection and seeded
//! parallel ensembles.

use rayon::prelude::*;

use crate::detector::{Axis, DetectorParams};
use crate::error::{Error, Result};
use crate::noise::{GaussianNoise, NoiseSource, VectorNoise};
use crate::protocols::{control_rotation, ProtocolKind, ProtocolSpec};
use crate::sde::{
    check_dt, measurement_record, step_single_detector, step_split, step_three_detector, Detector, SplitState,
};
use crate::state::{rotate, BlochVector};
use crate::stats::mean_estimate;

/// How the state is advanced between feedback rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Linear entropy and direction stepped separately (see [`step_split`]).
    #[default]
    Split,
    /// Plain Euler–Maruyama on `(x, y, z)`.
    Cartesian,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Split => "split",
            Scheme::Cartesian => "cartesian",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "split" => Some(Scheme::Split),
            "cartesian" => Some(Scheme::Cartesian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StepState {
    Split(SplitState),
    Cartesian(BlochVector),
}

/// Advances one protocol realization step by step: feedback rotation at
/// the start of the step, then one measurement step.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    spec: &'a ProtocolSpec,
    detectors: Vec<Detector>,
    state: StepState,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ProtocolSpec, v0: BlochVector, scheme: Scheme) -> Result<Self> {
        let detectors = spec
            .detectors()
            .iter()
            .enumerate()
            .map(|(k, &params)| Detector { axis: spec.axis(k).unit(), params })
            .collect();
        let state = match scheme {
            Scheme::Split => StepState::Split(SplitState::from_bloch(v0)?),
            Scheme::Cartesian => StepState::Cartesian(v0.validated()?),
        };
        Ok(Self { spec, detectors, state })
    }

    pub fn bloch(&self) -> BlochVector {
        match &self.state {
            StepState::Split(s) => s.to_bloch(),
            StepState::Cartesian(v) => *v,
        }
    }

    /// Linear entropy `s = 1 − p`.
    pub fn linear_entropy(&self) -> f64 {
        match &self.state {
            StepState::Split(s) => s.linear_entropy(),
            StepState::Cartesian(v) => 0.5 * (1.0 - v.radius_squared()),
        }
    }

    pub fn purity(&self) -> f64 {
        1.0 - self.linear_entropy()
    }

    /// One step driven by `noise`; component `k` drives detector `k`.
    /// Returns the record increments `dR_k` of the detectors.
    pub fn step(&mut self, noise: &VectorNoise) -> Result<[f64; 3]> {
        let rotation = control_rotation(self.spec, self.bloch())?;
        if !rotation.is_identity() {
            self.state = match &self.state {
                StepState::Split(s) => StepState::Split(s.rotated(&rotation)),
                StepState::Cartesian(v) => StepState::Cartesian(rotate(*v, &rotation)),
            };
        }
        let v = self.bloch().to_vector();
        let mut records = [0.0; 3];
        for (k, det) in self.detectors.iter().enumerate() {
            records[k] = measurement_record(v.dot(&det.axis), &det.params, noise.component(k));
        }
        let dt = noise.dt;
        self.state = match &self.state {
            StepState::Split(s) => StepState::Split(step_split(s, &self.detectors, &noise.dw[..self.detectors.len()], dt)?),
            StepState::Cartesian(v) => StepState::Cartesian(match self.spec.kind() {
                ProtocolKind::IsotropicThreeDetector => {
                    let p = self.spec.detectors();
                    step_three_detector(*v, &[p[0], p[1], p[2]], *noise)?
                }
                _ => step_single_detector(*v, &self.spec.detectors()[0], Axis::Z, noise.component(0))?,
            }),
        };
        Ok(records)
    }
}

/// Outcome of a first-passage search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstPassage {
    Crossed(f64),
    /// No crossing before `horizon`.
    Censored { horizon: f64 },
}

impl FirstPassage {
    pub fn time(self) -> Option<f64> {
        match self {
            FirstPassage::Crossed(t) => Some(t),
            FirstPassage::Censored { .. } => None,
        }
    }
}

/// First time the sampled purity reaches `threshold`, by linear
/// interpolation between the bracketing samples.
pub fn first_passage_time(purities: &[f64], times: &[f64], threshold: f64) -> Result<FirstPassage> {
    if purities.len() != times.len() || purities.is_empty() {
        return Err(Error::InvalidParameter("purity and time series must be non-empty and of equal length".into()));
    }
    if purities[0] >= threshold {
        return Ok(FirstPassage::Crossed(times[0]));
    }
    for i in 1..purities.len() {
        if purities[i] >= threshold {
            let frac = (threshold - purities[i - 1]) / (purities[i] - purities[i - 1]);
            return Ok(FirstPassage::Crossed(times[i - 1] + frac * (times[i] - times[i - 1])));
        }
    }
    Ok(FirstPassage::Censored { horizon: *times.last().expect("non-empty") })
}

/// Crossing of `s ≤ ε` between two samples of the linear entropy.
fn interpolate_crossing(t0: f64, s0: f64, t1: f64, s1: f64, epsilon: f64) -> f64 {
    if s0 <= s1 {
        return t1;
    }
    t0 + (s0 - epsilon) / (s0 - s1) * (t1 - t0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Stop at the first passage of purity `1 − ε`.
    pub stop_epsilon: Option<f64>,
    pub scheme: Scheme,
    /// Keep every `record_stride`-th step (the last point is always kept).
    pub record_stride: usize,
    pub record_measurements: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: crate::sde::DEFAULT_DT,
            horizon: 1.0,
            stop_epsilon: None,
            scheme: Scheme::Split,
            record_stride: 1,
            record_measurements: false,
        }
    }
}

/// One stochastic realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub protocol: ProtocolKind,
    pub seed: Option<u64>,
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub purities: Vec<f64>,
    /// Per-step record increments, one entry per detector, when requested.
    pub records: Option<Vec<Vec<f64>>>,
    pub first_passage: Option<FirstPassage>,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    Ok(())
}

/// Runs one trajectory of `spec` from `v0` with noise from `noise`.
pub fn simulate_trajectory(
    v0: BlochVector,
    spec: &ProtocolSpec,
    cfg: &SimulationConfig,
    noise: &mut dyn NoiseSource,
    seed: Option<u64>,
) -> Result<TrajectoryRecord> {
    check_dt(cfg.dt, spec.max_gamma0())?;
    check_horizon(cfg.horizon)?;
    if let Some(eps) = cfg.stop_epsilon {
        check_epsilon(eps)?;
    }
    let stride = cfg.record_stride.max(1);
    let mut stepper = Stepper::new(spec, v0, cfg.scheme)?;
    let mut rec = TrajectoryRecord {
        protocol: spec.kind(),
        seed,
        times: vec![0.0],
        states: vec![stepper.bloch()],
        purities: vec![stepper.purity()],
        records: cfg.record_measurements.then(|| vec![Vec::new(); spec.detectors().len()]),
        first_passage: None,
    };
    if let Some(eps) = cfg.stop_epsilon {
        if stepper.linear_entropy() <= eps {
            rec.first_passage = Some(FirstPassage::Crossed(0.0));
            return Ok(rec);
        }
    }
    let steps = (cfg.horizon / cfg.dt - 1e-9).ceil().max(0.0) as u64;
    let mut t = 0.0;
    for i in 1..=steps {
        let t_next = (i as f64 * cfg.dt).min(cfg.horizon);
        let n = noise.next_increment(t_next - t)?;
        let s_prev = stepper.linear_entropy();
        let dr = stepper.step(&n)?;
        if let Some(records) = rec.records.as_mut() {
            for (k, series) in records.iter_mut().enumerate() {
                series.push(dr[k]);
            }
        }
        let s_now = stepper.linear_entropy();
        let crossed = cfg.stop_epsilon.filter(|&eps| s_now <= eps);
        if i % stride as u64 == 0 || i == steps || crossed.is_some() {
            rec.times.push(t_next);
            rec.states.push(stepper.bloch());
            rec.purities.push(1.0 - s_now);
        }
        if let Some(eps) = crossed {
            rec.first_passage = Some(FirstPassage::Crossed(interpolate_crossing(t, s_prev, t_next, s_now, eps)));
            return Ok(rec);
        }
        t = t_next;
    }
    if cfg.stop_epsilon.is_some() {
        rec.first_passage = Some(FirstPassage::Censored { horizon: cfg.horizon });
    }
    Ok(rec)
}

/// [`simulate_trajectory`] with Gaussian noise from stream `index` of `seed`.
pub fn simulate_seeded(v0: BlochVector, spec: &ProtocolSpec, cfg: &SimulationConfig, seed: u64, index: u64) -> Result<TrajectoryRecord> {
    simulate_trajectory(v0, spec, cfg, &mut GaussianNoise::new(seed, index), Some(seed))
}

/// Runs `count` independent jobs, job `i` receiving index `i`, on a pool of
/// `workers` threads (all cores when `None`). Results come back in index
/// order, so the output does not depend on the worker count.
pub fn run_ensemble<T, F>(count: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..count as u64).into_par_iter().map(&job).collect())
}

/// Settings for an ensemble of first-passage runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub max_time: f64,
    pub scheme: Scheme,
}

/// Time for one trajectory to reach purity `1 − ε`, without storing the path.
pub fn first_passage_single(
    v0: BlochVector,
    spec: &ProtocolSpec,
    cfg: &FirstPassageConfig,
    noise: &mut dyn NoiseSource,
) -> Result<FirstPassage> {
    check_dt(cfg.dt, spec.max_gamma0())?;
    check_horizon(cfg.max_time)?;
    check_epsilon(cfg.epsilon)?;
    let mut stepper = Stepper::new(spec, v0, cfg.scheme)?;
    let mut s_prev = stepper.linear_entropy();
    if s_prev <= cfg.epsilon {
        return Ok(FirstPassage::Crossed(0.0));
    }
    let steps = (cfg.max_time / cfg.dt - 1e-9).ceil().max(0.0) as u64;
    let mut t = 0.0;
    for i in 1..=steps {
        let t_next = (i as f64 * cfg.dt).min(cfg.max_time);
        stepper.step(&noise.next_increment(t_next - t)?)?;
        let s_now = stepper.linear_entropy();
        if s_now <= cfg.epsilon {
            return Ok(FirstPassage::Crossed(interpolate_crossing(t, s_prev, t_next, s_now, cfg.epsilon)));
        }
        s_prev = s_now;
        t = t_next;
    }
    Ok(FirstPassage::Censored { horizon: cfg.max_time })
}

/// First-passage times of `count` trajectories seeded by `seed`.
pub fn first_passage_ensemble(
    v0: BlochVector,
    spec: &ProtocolSpec,
    cfg: &FirstPassageConfig,
    count: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<FirstPassage>> {
    run_ensemble(count, workers, |i| first_passage_single(v0, spec, cfg, &mut GaussianNoise::new(seed, i)))
}

/// Settings for an ensemble sampled on a uniform output grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Upper bound on the step; the step is shortened so that every output
    /// time falls on a step boundary.
    pub dt: f64,
    pub horizon: f64,
    /// Number of output intervals; the grid has `output_points + 1` times.
    pub output_points: usize,
    /// Also record the first passage of purity `1 − ε` (without stopping).
    pub epsilon: Option<f64>,
    pub scheme: Scheme,
}

/// One trajectory sampled on the output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub linear_entropy: Vec<f64>,
    pub first_passage: Option<FirstPassage>,
}

/// Ensemble averages on the output grid together with per-trajectory
/// first passages.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_purity: Vec<f64>,
    pub se_purity: Vec<f64>,
    pub mean_log_s: Vec<f64>,
    pub se_log_s: Vec<f64>,
    pub first_passages: Vec<Option<FirstPassage>>,
}

fn sample_on_grid(v0: BlochVector, spec: &ProtocolSpec, cfg: &EnsembleConfig, index: u64) -> Result<GridSample> {
    let mut noise = GaussianNoise::new(cfg.seed, index);
    let mut stepper = Stepper::new(spec, v0, cfg.scheme)?;
    let mut samples = Vec::with_capacity(cfg.output_points + 1);
    samples.push(stepper.linear_entropy());
    let mut passage = cfg.epsilon.map(|eps| {
        if stepper.linear_entropy() <= eps {
            FirstPassage::Crossed(0.0)
        } else {
            FirstPassage::Censored { horizon: cfg.horizon }
        }
    });
    if cfg.output_points == 0 || cfg.horizon == 0.0 {
        return Ok(GridSample { linear_entropy: samples, first_passage: passage });
    }
    let interval = cfg.horizon / cfg.output_points as f64;
    let substeps = (interval / cfg.dt - 1e-9).ceil().max(1.0) as u64;
    let h = interval / substeps as f64;
    for j in 0..cfg.output_points {
        for m in 0..substeps {
            let t0 = (j as f64 * substeps as f64 + m as f64) * h;
            let s_prev = stepper.linear_entropy();
            stepper.step(&noise.next_increment(h)?)?;
            let s_now = stepper.linear_entropy();
            if let (Some(eps), Some(FirstPassage::Censored { .. })) = (cfg.epsilon, passage) {
                if s_now <= eps {
                    passage = Some(FirstPassage::Crossed(interpolate_crossing(t0, s_prev, t0 + h, s_now, eps)));
                }
            }
        }
        samples.push(stepper.linear_entropy());
    }
    Ok(GridSample { linear_entropy: samples, first_passage: passage })
}

/// Runs the ensemble and averages purity and `ln s` on the output grid.
pub fn run_ensemble_summary(v0: BlochVector, spec: &ProtocolSpec, cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    check_dt(cfg.dt, spec.max_gamma0())?;
    check_horizon(cfg.horizon)?;
    if let Some(eps) = cfg.epsilon {
        check_epsilon(eps)?;
    }
    let samples = run_ensemble(cfg.trajectories, cfg.workers, |i| sample_on_grid(v0, spec, cfg, i))?;
    let points = if cfg.horizon == 0.0 { 0 } else { cfg.output_points };
    let times: Vec<f64> = (0..=points)
        .map(|j| if points == 0 { 0.0 } else { cfg.horizon * j as f64 / points as f64 })
        .collect();
    let mut summary = EnsembleSummary {
        times,
        mean_purity: Vec::new(),
        se_purity: Vec::new(),
        mean_log_s: Vec::new(),
        se_log_s: Vec::new(),
        first_passages: samples.iter().map(|s| s.first_passage).collect(),
    };
    if samples.is_empty() {
        return Ok(summary);
    }
    for j in 0..=points {
        let p: Vec<f64> = samples.iter().map(|s| 1.0 - s.linear_entropy[j]).collect();
        let ln_s: Vec<f64> = samples.iter().map(|s| s.linear_entropy[j].ln()).collect();
        let mp = mean_estimate(&p);
        let ml = mean_estimate(&ln_s);
        summary.mean_purity.push(mp.mean);
        summary.se_purity.push(mp.std_error);
        summary.mean_log_s.push(ml.mean);
        summary.se_log_s.push(ml.std_error);
    }
    Ok(summary)
}

/// Purity of every trajectory at `cfg.horizon`; the output grid and
/// first-passage settings of `cfg` are ignored.
pub fn terminal_purities(v0: BlochVector, spec: &ProtocolSpec, cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    let cfg = EnsembleConfig { output_points: 1, epsilon: None, ..*cfg };
    check_dt(cfg.dt, spec.max_gamma0())?;
    check_horizon(cfg.horizon)?;
    let samples = run_ensemble(cfg.trajectories, cfg.workers, |i| sample_on_grid(v0, spec, &cfg, i))?;
    Ok(samples.iter().map(|s| 1.0 - *s.linear_entropy.last().expect("non-empty")).collect())
}

/// Convenience: an isotropic protocol of identical detectors.
pub fn isotropic(params: DetectorParams) -> ProtocolSpec {
    ProtocolSpec::uniform(ProtocolKind::IsotropicThreeDetector, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::PathNoise;
    use crate::stats::mean_estimate;

    fn ideal() -> DetectorParams {
        DetectorParams::ideal(1.0).unwrap()
    }

    #[test]
    fn first_passage_examples() {
        let t = [0.0, 0.5, 1.0];
        assert_eq!(first_passage_time(&[0.9, 0.9, 0.9], &t, 0.8).unwrap(), FirstPassage::Crossed(0.0));
        assert_eq!(first_passage_time(&[0.5, 0.75, 1.0], &t, 0.75).unwrap(), FirstPassage::Crossed(0.5));
        let lin_t = [0.0, 1.0];
        assert_eq!(first_passage_time(&[0.5, 1.0], &lin_t, 0.75).unwrap(), FirstPassage::Crossed(0.5));
        assert_eq!(first_passage_time(&[0.5, 0.6], &lin_t, 0.75).unwrap(), FirstPassage::Censored { horizon: 1.0 });
        assert!(first_passage_time(&[], &[], 0.5).is_err());
    }

    #[test]
    fn zero_horizon_gives_single_point() {
        let spec = isotropic(ideal());
        let cfg = SimulationConfig { horizon: 0.0, ..Default::default() };
        let v0 = BlochVector::new(0.1, 0.2, 0.3);
        let rec = simulate_seeded(v0, &spec, &cfg, 1, 0).unwrap();
        assert_eq!(rec.times, vec![0.0]);
        assert_eq!(rec.states.len(), 1);
        assert!((rec.states[0].to_vector() - v0.to_vector()).norm() < 1e-15);
    }

    #[test]
    fn jacobs_follows_the_deterministic_solution() {
        let spec = ProtocolSpec::uniform(ProtocolKind::JacobsPerpendicular, ideal());
        let dt = 1e-3;
        let cfg = SimulationConfig { dt, horizon: 3.0, ..Default::default() };
        let p0 = 0.5;
        let rec = simulate_seeded(BlochVector::ORIGIN, &spec, &cfg, 3, 0).unwrap();
        for (t, p) in rec.times.iter().zip(&rec.purities) {
            let exact = 1.0 - (1.0 - p0) * (-2.0 * t).exp();
            assert!((p - exact).abs() < 2.0 * dt * (1.0 - p0), "t={t}: {p} vs {exact}");
        }
        let eps = 1e-3;
        let stop = SimulationConfig { stop_epsilon: Some(eps), horizon: 10.0, ..cfg };
        let rec = simulate_seeded(BlochVector::ORIGIN, &spec, &stop, 4, 0).unwrap();
        let t = rec.first_passage.unwrap().time().unwrap();
        // Euler decay is faster than the exponential by a relative O(dt).
        let exact = 0.5 * (0.5f64 / eps).ln();
        assert!((t - exact).abs() < dt * (1.0 + exact), "{t}");
    }

    #[test]
    fn jacobs_step_is_noise_free() {
        let spec = ProtocolSpec::uniform(ProtocolKind::JacobsPerpendicular, ideal());
        let v = BlochVector::new(0.2, -0.1, 0.5);
        let dt = 1e-3;
        for dw in [-0.05, 0.0, 0.08] {
            let mut st = Stepper::new(&spec, v, Scheme::Split).unwrap();
            let p = st.purity();
            st.step(&VectorNoise::new([dw, 0.0, 0.0], dt)).unwrap();
            assert!((st.purity() - p - 2.0 * (1.0 - p) * dt).abs() < 1e-15);
        }
    }

    #[test]
    fn records_share_the_state_noise() {
        let spec = ProtocolSpec::uniform(ProtocolKind::ParallelNoFeedback, ideal());
        let dt = 1e-3;
        let path = PathNoise::sample(8, 0, 10, dt);
        let cfg = SimulationConfig { dt, horizon: 10.0 * dt, record_measurements: true, ..Default::default() };
        let rec = simulate_trajectory(BlochVector::new(0.0, 0.0, 1.0), &spec, &cfg, &mut path.clone(), None).unwrap();
        let dr = &rec.records.unwrap()[0];
        for (i, w) in path.increments().iter().enumerate() {
            assert!((dr[i] - (dt + w[0] / 2f64.sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_invariance_every_protocol() {
        let v0 = BlochVector::new(0.6, 0.0, 0.8);
        for kind in ProtocolKind::ALL {
            let spec = ProtocolSpec::uniform(kind, ideal());
            for scheme in [Scheme::Split, Scheme::Cartesian] {
                let cfg = SimulationConfig { horizon: 2.0, scheme, ..Default::default() };
                let rec = simulate_seeded(v0, &spec, &cfg, 21, 0).unwrap();
                for v in &rec.states {
                    assert!((v.radius() - 1.0).abs() <= 1e-9 || scheme == Scheme::Cartesian, "{kind} {scheme:?}");
                    assert!(v.radius() <= 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn ensembles_do_not_depend_on_worker_count() {
        let spec = isotropic(DetectorParams::with_efficiency(1.0, 0.9).unwrap());
        let cfg = EnsembleConfig {
            trajectories: 40,
            seed: 17,
            workers: Some(1),
            dt: 1e-3,
            horizon: 0.5,
            output_points: 5,
            epsilon: Some(0.3),
            scheme: Scheme::Split,
        };
        let a = run_ensemble_summary(BlochVector::ORIGIN, &spec, &cfg).unwrap();
        let b = run_ensemble_summary(BlochVector::ORIGIN, &spec, &EnsembleConfig { workers: Some(4), ..cfg }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 6);
    }

    #[test]
    fn ensemble_decay_of_mean_vector() {
        // ⟨v(t)⟩ = v₀ e^{−2Γt} for three identical detectors.
        let eta = 0.8;
        let params = DetectorParams::with_efficiency(1.0, eta).unwrap();
        let spec = isotropic(params);
        let v0 = BlochVector::new(0.3, -0.4, 0.5);
        let t_end = 0.25;
        let cfg = SimulationConfig { horizon: t_end, ..Default::default() };
        let finals = run_ensemble(4000, None, |i| {
            simulate_seeded(v0, &spec, &cfg, 5, i).map(|r| *r.states.last().unwrap())
        })
        .unwrap();
        let decay = (-2.0 * params.total_rate() * t_end).exp();
        for (k, v0k) in [v0.x, v0.y, v0.z].into_iter().enumerate() {
            let comp: Vec<f64> = finals.iter().map(|v| [v.x, v.y, v.z][k]).collect();
            let m = mean_estimate(&comp);
            assert!(m.within(v0k * decay, 3.5), "component {k}: {} vs {}", m.mean, v0k * decay);
        }
    }
}
