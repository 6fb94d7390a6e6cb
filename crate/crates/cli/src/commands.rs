//! The subcommands. Each one reads its settings first, so a bad value is
//! reported before any work starts, then computes every table in memory.

use purify_core::bayes::{sde_povm_equivalence_check, time_to_mean_purity_parallel};
use purify_core::fpe::{density_mean_purity, stationary_distribution, DensityGrid, Evolution, Grid, Stepping};
use purify_core::mtfp::{mtfp_quadrature, scaling_study, Diffusion, MtfpConfig};
use purify_core::protocols::{
    analytic_mtfp_estimate, analytic_time_mean_purity, isotropic_mean_time_leading, naive_mean_purity,
};
use purify_core::sde::MAX_DT;
use purify_core::stats::mean_estimate;
use purify_core::trajectory::{
    first_passage_ensemble, run_ensemble_summary, EnsembleConfig, FirstPassage, FirstPassageConfig, Scheme,
};
use purify_core::{BlochVector, DetectorParams, ProtocolKind, ProtocolSpec};

use crate::error::{CliError, Result};
use crate::output::{num, Table};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Mtfp,
    Scaling,
    Protocols,
    Fpe,
    BayesCheck,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Simulate, Command::Mtfp, Command::Scaling, Command::Protocols, Command::Fpe, Command::BayesCheck];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Mtfp => "mtfp",
            Command::Scaling => "scaling",
            Command::Protocols => "protocols",
            Command::Fpe => "fpe",
            Command::BayesCheck => "bayes-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Command::Simulate | Command::BayesCheck)
    }
}

/// Everything a command produced. The first table is the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Human-readable lines for stderr.
    pub report: Vec<String>,
    /// Set when a self-check ran and failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn tables(tables: Vec<Table>) -> Self {
        Self { tables, report: Vec::new(), failure: None }
    }
}

/// Reads the settings of `command`, rejects leftovers, then runs it.
/// Returns the canonical configuration with the outcome.
pub fn run(command: Command, mut settings: Settings, workers: Option<usize>) -> Result<(Vec<(&'static str, String)>, Outcome)> {
    let job = match command {
        Command::Simulate => Job::Simulate(SimulateParams::read(&mut settings)?),
        Command::Mtfp => Job::Mtfp(MtfpParams::read(&mut settings)?),
        Command::Scaling => Job::Scaling(ScalingParams::read(&mut settings)?),
        Command::Protocols => Job::Protocols(ProtocolParams::read(&mut settings)?),
        Command::Fpe => Job::Fpe(FpeParams::read(&mut settings)?),
        Command::BayesCheck => Job::Bayes(BayesParams::read(&mut settings)?),
    };
    let config = settings.finish(command.name())?;
    let outcome = match job {
        Job::Simulate(p) => p.run(workers)?,
        Job::Mtfp(p) => p.run()?,
        Job::Scaling(p) => p.run()?,
        Job::Protocols(p) => p.run(workers)?,
        Job::Fpe(p) => p.run()?,
        Job::Bayes(p) => p.run(workers)?,
    };
    Ok((config, outcome))
}

enum Job {
    Simulate(SimulateParams),
    Mtfp(MtfpParams),
    Scaling(ScalingParams),
    Protocols(ProtocolParams),
    Fpe(FpeParams),
    Bayes(BayesParams),
}

fn step(s: &mut Settings, default: f64) -> Result<f64> {
    s.f64_checked("dt", default, &format!("must lie in (0, {MAX_DT}]"), |v| v > 0.0 && v <= MAX_DT)
}

fn non_negative(s: &mut Settings, key: &'static str, default: f64) -> Result<f64> {
    s.f64_checked(key, default, "must be non-negative", |v| v >= 0.0)
}

fn epsilon_list(s: &mut Settings, default: &str, max: f64) -> Result<Vec<f64>> {
    let values = s.list("epsilon", default)?;
    if let Some(bad) = values.iter().find(|&&e| !(e > 0.0 && e <= max)) {
        return Err(CliError::usage(format!("epsilon must lie in (0, {max}], got {bad}")));
    }
    Ok(values)
}

struct SimulateParams {
    spec: ProtocolSpec,
    gamma0: f64,
    v0: BlochVector,
    epsilon: Option<f64>,
    dt: f64,
    horizon: f64,
    trajectories: usize,
    seed: u64,
    points: usize,
    scheme: Scheme,
}

impl SimulateParams {
    fn read(s: &mut Settings) -> Result<Self> {
        let names: Vec<&'static str> = ProtocolKind::ALL.iter().map(|k| k.name()).collect();
        let protocol = s.choice("protocol", "isotropic", &names)?;
        let kind = ProtocolKind::from_name(protocol).expect("listed protocol");
        let gamma0 = s.positive("gamma0", 1.0)?;
        let (_, delta) = s.efficiency()?;
        let params = DetectorParams::with_inefficiency(gamma0, delta)?;
        let epsilon = s.f64_opt("epsilon")?;
        if let Some(e) = epsilon {
            if !(e > 0.0 && e < 0.5) {
                return Err(CliError::usage(format!("epsilon must lie in (0, 0.5), got {e}")));
            }
        }
        let initial = s.list("initial", "0,0,0")?;
        let v0 = match initial.as_slice() {
            [x, y, z] => BlochVector::new(*x, *y, *z),
            _ => return Err(CliError::usage(format!("initial needs three components, got {}", initial.len()))),
        };
        if v0.radius() > 1.0 {
            return Err(CliError::usage(format!("initial must lie in the unit ball, radius is {}", v0.radius())));
        }
        let scheme = Scheme::from_name(s.choice("scheme", "split", &["split", "cartesian"])?).expect("listed scheme");
        Ok(Self {
            spec: ProtocolSpec::uniform(kind, params),
            gamma0,
            v0,
            epsilon,
            dt: step(s, 1e-3)?,
            horizon: non_negative(s, "horizon", 5.0)?,
            trajectories: s.count("trajectories", 1000)?,
            seed: s.seed("simulate")?,
            points: s.count("points", 100)?,
            scheme,
        })
    }

    fn run(self, workers: Option<usize>) -> Result<Outcome> {
        // Inputs and outputs are in units of 1/Γ₀; the library works in
        // absolute time.
        let cfg = EnsembleConfig {
            trajectories: self.trajectories,
            seed: self.seed,
            workers,
            dt: self.dt / self.gamma0,
            horizon: self.horizon / self.gamma0,
            output_points: self.points,
            epsilon: self.epsilon,
            scheme: self.scheme,
        };
        let summary = run_ensemble_summary(self.v0, &self.spec, &cfg)?;
        let points = if self.horizon == 0.0 { 0 } else { self.points };
        let time = |j: usize| if points == 0 { 0.0 } else { self.horizon * j as f64 / points as f64 };

        let mut ensemble = Table::new("ensemble", &["time", "mean_purity", "se_purity", "mean_log_s", "se_log_s"]);
        for j in 0..summary.mean_purity.len() {
            ensemble.push(vec![
                num(time(j)),
                num(summary.mean_purity[j]),
                num(summary.se_purity[j]),
                num(summary.mean_log_s[j]),
                num(summary.se_log_s[j]),
            ]);
        }
        let mut tables = vec![ensemble];

        let mut stats = Table::new("summary", &["statistic", "value", "std_error"]);
        if let (Some(&p), Some(&se)) = (summary.mean_purity.last(), summary.se_purity.last()) {
            stats.push(vec!["final_mean_purity".into(), num(p), num(se)]);
            let (l, sl) = (summary.mean_log_s[summary.mean_log_s.len() - 1], summary.se_log_s[summary.se_log_s.len() - 1]);
            stats.push(vec!["final_mean_log_s".into(), num(l), num(sl)]);
        }
        if self.epsilon.is_some() {
            let mut passage = Table::new("passage", &["trajectory", "status", "time"]);
            let mut crossed = Vec::new();
            for (i, fp) in summary.first_passages.iter().enumerate() {
                let (status, t) = match fp {
                    Some(FirstPassage::Crossed(t)) => {
                        crossed.push(t * self.gamma0);
                        ("crossed", t * self.gamma0)
                    }
                    _ => ("censored", self.horizon),
                };
                passage.push(vec![i.to_string(), status.into(), num(t)]);
            }
            tables.push(passage);
            if self.trajectories > 0 {
                let est = mean_estimate(&crossed);
                stats.push(vec!["crossed".into(), crossed.len().to_string(), String::new()]);
                stats.push(vec!["censored".into(), (self.trajectories - crossed.len()).to_string(), String::new()]);
                stats.push(vec!["mean_first_passage".into(), num(est.mean), num(est.std_error)]);
            }
        }
        tables.push(stats);
        Ok(Outcome::tables(tables))
    }
}

struct MtfpParams {
    deltas: Vec<f64>,
    epsilons: Vec<f64>,
    p0: f64,
    rel_tol: f64,
    diffusion: Diffusion,
}

impl MtfpParams {
    fn read(s: &mut Settings) -> Result<Self> {
        s.positive("gamma0", 1.0)?;
        let deltas = s.inefficiencies()?;
        let epsilons = epsilon_list(s, "0.0001", 0.5)?;
        let p0 = s.f64_checked("p0", 0.5, "must lie in [0.5, 1)", |v| (0.5..1.0).contains(&v))?;
        let rel_tol = s.f64_checked("rel-tol", 1e-8, "must lie in (0, 0.01]", |v| v > 0.0 && v <= 0.01)?;
        let diffusion = match s.choice("diffusion", "high-purity", &["high-purity", "full"])? {
            "full" => Diffusion::Full,
            _ => Diffusion::HighPurity,
        };
        Ok(Self { deltas, epsilons, p0, rel_tol, diffusion })
    }

    fn time(&self, epsilon: f64, delta: f64) -> Result<f64> {
        let cfg = MtfpConfig::new(epsilon, delta).with_p0(self.p0).with_rel_tol(self.rel_tol).with_diffusion(self.diffusion);
        Ok(mtfp_quadrature(&cfg)?)
    }

    fn run(self) -> Result<Outcome> {
        let ideal = self.epsilons.iter().map(|&e| self.time(e, 0.0)).collect::<Result<Vec<_>>>()?;
        let mut table = Table::new("mtfp", &["delta", "epsilon", "a", "T_bar", "T_bar_ideal", "delta_T"]);
        for &delta in &self.deltas {
            for (&epsilon, &t0) in self.epsilons.iter().zip(&ideal) {
                let t = if delta == 0.0 { t0 } else { self.time(epsilon, delta)? };
                table.push(vec![num(delta), num(epsilon), num(delta / epsilon), num(t), num(t0), num(t - t0)]);
            }
        }
        Ok(Outcome::tables(vec![table]))
    }
}

struct ScalingParams {
    epsilons: Vec<f64>,
    a: Vec<f64>,
    large_a: Vec<f64>,
    large_a_epsilon: Vec<f64>,
}

impl ScalingParams {
    fn read(s: &mut Settings) -> Result<Self> {
        s.positive("gamma0", 1.0)?;
        let epsilons = epsilon_list(s, "1e-4,1e-5,1e-6", 1e-3)?;
        let a = s.list("a", "0:5:21")?;
        let large_a = s.list("large-a", "20,40,60,80,100,150,200")?;
        let large_a_epsilon = s.list("large-a-epsilon", "1e-8")?;
        if let Some(bad) = a.iter().find(|&&v| v < 0.0) {
            return Err(CliError::usage(format!("a must be non-negative, got {bad}")));
        }
        if let Some(bad) = large_a.iter().find(|&&v| v < 10.0) {
            return Err(CliError::usage(format!("large-a values must be at least 10, got {bad}")));
        }
        if let Some(bad) = large_a_epsilon.iter().find(|&&e| !(e > 0.0 && e <= 1e-3)) {
            return Err(CliError::usage(format!("large-a-epsilon must lie in (0, 0.001], got {bad}")));
        }
        Ok(Self { epsilons, a, large_a, large_a_epsilon })
    }

    fn run(self) -> Result<Outcome> {
        let mut fig3 = Table::new("fig3", &["a", "epsilon", "delta_T"]);
        for p in scaling_study(&self.epsilons, &self.a, false)? {
            fig3.push(vec![num(p.a), num(p.epsilon), num(p.delta_t)]);
        }
        let mut fig4 = Table::new("fig4", &["a", "epsilon", "ln_delta_T", "C1"]);
        for p in scaling_study(&self.large_a_epsilon, &self.large_a, true)? {
            fig4.push(vec![num(p.a), num(p.epsilon), num(p.ln_delta_t), p.c1.map(num).unwrap_or_default()]);
        }
        Ok(Outcome::tables(vec![fig3, fig4]))
    }
}

struct MonteCarlo {
    trajectories: usize,
    seed: u64,
    dt: f64,
    horizon: f64,
}

struct ProtocolParams {
    epsilons: Vec<f64>,
    check: Option<MonteCarlo>,
}

impl ProtocolParams {
    fn read(s: &mut Settings) -> Result<Self> {
        s.positive("gamma0", 1.0)?;
        let epsilons = epsilon_list(s, "1e-2,1e-3,1e-4,1e-5,1e-6", 0.1)?;
        let check = if s.flag("check")? {
            Some(MonteCarlo {
                trajectories: s.count("trajectories", 10_000)?,
                seed: s.seed("protocols --check")?,
                dt: step(s, 1e-3)?,
                horizon: s.positive("horizon", 100.0)?,
            })
        } else {
            None
        };
        Ok(Self { epsilons, check })
    }

    fn run(self, workers: Option<usize>) -> Result<Outcome> {
        let mut columns = vec![
            "epsilon",
            "tau_perp",
            "tau_par",
            "tau_iso",
            "T_log_par",
            "T_log_iso",
            "ratio_par_perp",
            "ratio_par_iso",
            "ratio_log_par_iso",
        ];
        if self.check.is_some() {
            columns.extend(["tau_par_exact", "T_iso_high_purity", "T_iso_full", "T_iso_mc", "T_iso_mc_se", "T_iso_mc_censored"]);
        }
        let mut table = Table::new("protocols", &columns);
        let iso = ProtocolSpec::uniform(ProtocolKind::IsotropicThreeDetector, DetectorParams::ideal(1.0)?);
        for &eps in &self.epsilons {
            let perp = analytic_time_mean_purity(ProtocolKind::JacobsPerpendicular, eps, 0.0)?.value;
            let par = analytic_time_mean_purity(ProtocolKind::ParallelNoFeedback, eps, 0.0)?.value;
            let tau_iso = isotropic_mean_time_leading(eps)?.value;
            let log_par = analytic_mtfp_estimate(ProtocolKind::WisemanRalphParallel, eps, 0.0)?.value;
            let log_iso = analytic_mtfp_estimate(ProtocolKind::IsotropicThreeDetector, eps, 0.0)?.value;
            let mut row = vec![
                num(eps),
                num(perp),
                num(par),
                num(tau_iso),
                num(log_par),
                num(log_iso),
                format!("{:.3}", par / perp),
                format!("{:.3}", par / tau_iso),
                format!("{:.3}", log_par / log_iso),
            ];
            if let Some(mc) = &self.check {
                let exact = time_to_mean_purity_parallel(0.5, eps, 1.0)?;
                let hp = mtfp_quadrature(&MtfpConfig::new(eps, 0.0))?;
                let full = mtfp_quadrature(&MtfpConfig::new(eps, 0.0).with_diffusion(Diffusion::Full))?;
                let cfg = FirstPassageConfig { epsilon: eps, dt: mc.dt, max_time: mc.horizon, scheme: Scheme::Split };
                let times = first_passage_ensemble(BlochVector::ORIGIN, &iso, &cfg, mc.trajectories, mc.seed, workers)?;
                let crossed: Vec<f64> = times.iter().filter_map(|f| f.time()).collect();
                let est = mean_estimate(&crossed);
                row.extend([
                    num(exact),
                    num(hp),
                    num(full),
                    num(est.mean),
                    num(est.std_error),
                    (times.len() - crossed.len()).to_string(),
                ]);
            }
            table.push(row);
        }
        Ok(Outcome::tables(vec![table]))
    }
}

struct FpeParams {
    eta: f64,
    delta: f64,
    p0: f64,
    horizon: f64,
    dt: f64,
    points: usize,
    grid: Grid,
    stepping: Stepping,
}

impl FpeParams {
    fn read(s: &mut Settings) -> Result<Self> {
        s.positive("gamma0", 1.0)?;
        let (eta, delta) = s.efficiency()?;
        let p0 = s.f64_checked("p0", 0.5, "must lie in [0.5, 1)", |v| (0.5..1.0).contains(&v))?;
        let horizon = non_negative(s, "horizon", 5.0)?;
        let dt = s.positive("dt", 1e-3)?;
        let points = s.count("points", 50)?;
        if points == 0 {
            return Err(CliError::usage("points must be at least 1"));
        }
        let cells = s.count("cells", purify_core::fpe::DEFAULT_CELLS)?;
        let floor = s.f64_checked("floor", purify_core::fpe::DEFAULT_FLOOR, "must lie in (0, 0.5)", |v| v > 0.0 && v < 0.5)?;
        let grid = Grid::new(cells, floor).map_err(|e| CliError::usage(format!("grid: {e}")))?;
        let stepping = match s.choice("stepping", "implicit", &["implicit", "explicit"])? {
            "explicit" => Stepping::Explicit,
            _ => Stepping::Implicit,
        };
        Ok(Self { eta, delta, p0, horizon, dt, points, grid, stepping })
    }

    fn run(self) -> Result<Outcome> {
        let mut ev = Evolution::new(DensityGrid::delta(self.grid, self.p0)?, self.eta, self.stepping)?;
        let mut moments = Table::new("moments", &["time", "mean_purity", "naive_mean_purity"]);
        for j in 0..=self.points {
            let t = self.horizon * j as f64 / self.points as f64;
            ev.run_until(t, self.dt)?;
            let naive = naive_mean_purity(self.delta, self.p0, t)?;
            moments.push(vec![num(t), num(density_mean_purity(ev.density())), num(naive)]);
        }
        let finals = ev.density().purity_density();
        let stationary = if self.eta < 1.0 { Some(stationary_distribution(self.eta, self.grid)?.purity_density()) } else { None };
        let columns: &[&'static str] =
            if stationary.is_some() { &["purity", "density", "stationary_density"] } else { &["purity", "density"] };
        let mut density = Table::new("density", columns);
        for (i, &(p, q)) in finals.iter().enumerate() {
            let mut row = vec![num(p), num(q)];
            if let Some(st) = &stationary {
                row.push(num(st[i].1));
            }
            density.push(row);
        }
        Ok(Outcome::tables(vec![moments, density]))
    }
}

struct BayesParams {
    gamma0: f64,
    z0: f64,
    tau: f64,
    dt: f64,
    trajectories: usize,
    seed: u64,
}

impl BayesParams {
    fn read(s: &mut Settings) -> Result<Self> {
        let gamma0 = s.positive("gamma0", 1.0)?;
        let z0 = s.f64_checked("z0", 0.0, "must lie in [-1, 1]", |v| (-1.0..=1.0).contains(&v))?;
        let tau = s.positive("tau", 1.0)?;
        let dt = step(s, 1e-3)?;
        let trajectories = s.count("trajectories", 100)?;
        if trajectories == 0 {
            return Err(CliError::usage("trajectories must be at least 1"));
        }
        Ok(Self { gamma0, z0, tau, dt, trajectories, seed: s.seed("bayes-check")? })
    }

    fn run(self, workers: Option<usize>) -> Result<Outcome> {
        let g = self.gamma0;
        let rep = sde_povm_equivalence_check(self.z0, self.tau / g, self.dt / g, self.trajectories, self.seed, g, workers)?;
        let mut gaps = Table::new("gaps", &["trajectory", "gap"]);
        for (i, gap) in rep.gaps.iter().enumerate() {
            gaps.push(vec![i.to_string(), num(*gap)]);
        }
        let report = vec![
            format!("max gap {:.4e} (tolerance {:.4e} = {} sqrt(dt))", rep.max_gap, rep.tolerance, rep.constant),
            format!("median gap {:.4e} (tolerance {:.4e} = {} sqrt(dt))", rep.median_gap, rep.median_tolerance, rep.median_constant),
        ];
        let failure = (!rep.passed).then(|| {
            format!("SDE and exact update disagree: max {:.4e}, median {:.4e}", rep.max_gap, rep.median_gap)
        });
        Ok(Outcome { tables: vec![gaps], report, failure })
    }
}
