//! Fokker–Planck equation for the purity of the three-detector system.
//!
//! The density is held on a grid uniform in `u = ln(2(1 − p))`, which
//! resolves the region near `p = 1` where the stationary density is
//! concentrated. `Q(u)` is the density per unit `u`, so `P(p) = Q/(1 − p)`.
//! Fluxes use the exponential fitting of Scharfetter–Gummel and
//! Chang–Cooper with the exact potential drop across each face, which keeps
//! the density positive and makes the stationary solution a discrete fixed
//! point.

use crate::error::{Error, Result};
use crate::quad::{gauss7_on, log_sum_exp};

/// Drift `A(p) = 2Γ₀[1 − (2p − 1)/η + 2(1 − p)²]` and diffusion
/// `B(p) = 8Γ₀(2p − 1)(1 − p)²` of the purity.
pub fn fpe_coeffs(p: f64, eta: f64) -> (f64, f64) {
    let s = 1.0 - p;
    (drift_s(s, eta), 8.0 * (2.0 * p - 1.0) * s * s)
}

/// High-purity approximation `B_HP(p) = 8Γ₀(1 − p)²`.
pub fn diffusion_high_purity(p: f64) -> f64 {
    let s = 1.0 - p;
    8.0 * s * s
}

/// `A` as a function of the linear entropy, avoiding `1 − p`.
fn drift_s(s: f64, eta: f64) -> f64 {
    2.0 * (1.0 - (1.0 - 2.0 * s) / eta + 2.0 * s * s)
}

/// Uniform grid in `u` over `[ln(2 ε_grid), 0]`; cell `i` spans
/// `[u_min + i h, u_min + (i + 1) h]`, so larger indices are less pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub cells: usize,
    pub u_min: f64,
}

/// Default resolution and impurity floor.
pub const DEFAULT_CELLS: usize = 2000;
pub const DEFAULT_FLOOR: f64 = 1e-8;

impl Grid {
    pub fn new(cells: usize, floor: f64) -> Result<Self> {
        if cells < 4 {
            return Err(Error::InvalidParameter(format!("need at least 4 cells, got {cells}")));
        }
        if !(floor > 0.0 && floor < 0.5) {
            return Err(Error::InvalidParameter(format!("impurity floor must lie in (0, 1/2), got {floor}")));
        }
        Ok(Self { cells, u_min: (2.0 * floor).ln() })
    }

    pub fn step(&self) -> f64 {
        -self.u_min / self.cells as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.cells {
            0.0
        } else {
            self.u_min + i as f64 * self.step()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.u_min + (i as f64 + 0.5) * self.step()
    }

    /// Linear entropy at the centre of cell `i`.
    pub fn s_center(&self, i: usize) -> f64 {
        0.5 * self.center(i).exp()
    }

    pub fn p_center(&self, i: usize) -> f64 {
        1.0 - self.s_center(i)
    }

    /// Mean of `s` over cell `i`, exactly.
    pub fn s_cell_average(&self, i: usize) -> f64 {
        (self.edge(i + 1).exp() - self.edge(i).exp()) / (2.0 * self.step())
    }

    /// Cell holding purity `p`, clamped to the grid.
    pub fn cell_of(&self, p: f64) -> usize {
        let s = (1.0 - p).max(1e-300);
        let x = ((2.0 * s).ln() - self.u_min) / self.step();
        (x.floor().max(0.0) as usize).min(self.cells - 1)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::new(DEFAULT_CELLS, DEFAULT_FLOOR).expect("valid default grid")
    }
}

/// A purity density on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: Grid,
    /// Density per unit `u` in each cell.
    pub q: Vec<f64>,
    pub time: f64,
}

impl DensityGrid {
    pub fn mass(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.grid.step()
    }

    /// Mean linear entropy `⟨1 − p⟩`, treating `Q` as constant on each cell.
    pub fn mean_impurity(&self) -> f64 {
        let h = self.grid.step();
        self.q.iter().enumerate().map(|(i, q)| q * h * self.grid.s_cell_average(i)).sum::<f64>() / self.mass()
    }

    /// `L¹` distance `∫|P − P'| dp = Σ |Q − Q'| h` to a density on the same grid.
    pub fn l1_distance(&self, other: &DensityGrid) -> f64 {
        assert_eq!(self.grid, other.grid, "densities live on different grids");
        self.q.iter().zip(&other.q).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.step()
    }

    /// Density per unit purity at each cell centre, with the purities.
    pub fn purity_density(&self) -> Vec<(f64, f64)> {
        (0..self.grid.cells).map(|i| (self.grid.p_center(i), self.q[i] / self.grid.s_center(i))).collect()
    }

    /// Normalized narrow bump at `p0`: the two cells nearest `p0` share the
    /// mass equally.
    pub fn delta(grid: Grid, p0: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&p0) {
            return Err(Error::Domain(format!("initial purity {p0} outside [1/2, 1)")));
        }
        let x = ((2.0 * (1.0 - p0)).ln() - grid.u_min) / grid.step() - 0.5;
        let a = (x.floor().max(0.0) as usize).min(grid.cells - 2);
        let b = a + 1;
        let mut q = vec![0.0; grid.cells];
        let h = grid.step();
        q[a] = 0.5 / h;
        q[b] = 0.5 / h;
        Ok(Self { grid, q, time: 0.0 })
    }

    /// Samples a density given per unit purity, then normalizes it.
    pub fn from_purity_density<F: Fn(f64) -> f64>(grid: Grid, density: F) -> Result<Self> {
        let h = grid.step();
        let q: Vec<f64> = (0..grid.cells)
            .map(|i| {
                gauss7_on(grid.edge(i), grid.edge(i + 1))
                    .map(|(u, w)| {
                        let s = 0.5 * u.exp();
                        w * density(1.0 - s) * s
                    })
                    .sum::<f64>()
                    / h
            })
            .collect();
        normalized(grid, q)
    }
}

fn normalized(grid: Grid, mut q: Vec<f64>) -> Result<DensityGrid> {
    let mass = q.iter().sum::<f64>() * grid.step();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Quadrature { achieved: mass, requested: 1.0 });
    }
    for v in &mut q {
        *v /= mass;
    }
    Ok(DensityGrid { grid, q, time: 0.0 })
}

/// First moment of the purity, `⟨p⟩ = ∫ p P(p) dp`.
pub fn density_mean_purity(d: &DensityGrid) -> f64 {
    1.0 - d.mean_impurity()
}

/// `ln P_st(p)` up to a constant:
/// `½ ln(2p − 1) − 3 ln(1 − p) − (2p − 1)(1 − η)/(2(1 − p)η)`.
pub fn ln_stationary_unnormalized(p: f64, eta: f64) -> f64 {
    ln_stationary_s(1.0 - p, eta)
}

fn ln_stationary_s(s: f64, eta: f64) -> f64 {
    let r2 = 1.0 - 2.0 * s;
    0.5 * r2.ln() - 3.0 * s.ln() - r2 * (1.0 - eta) / (2.0 * s * eta)
}

/// Stationary purity density for `η < 1`, sampled at cell centres and
/// normalized on the grid. Sampling at centres matches the nodal values
/// that the flux discretization holds fixed.
pub fn stationary_distribution(eta: f64, grid: Grid) -> Result<DensityGrid> {
    if eta == 1.0 {
        return Err(Error::DeltaLimit);
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    // ln Q = ln P + ln s.
    let ln_q: Vec<f64> = (0..grid.cells).map(|i| {
        let s = grid.s_center(i);
        ln_stationary_s(s, eta) + s.ln()
    }).collect();
    let ln_norm = log_sum_exp(ln_q.iter().copied()) + grid.step().ln();
    if !ln_norm.is_finite() {
        return Err(Error::Quadrature { achieved: ln_norm, requested: 0.0 });
    }
    Ok(DensityGrid { grid, q: ln_q.iter().map(|l| (l - ln_norm).exp()).collect(), time: 0.0 })
}

/// `x/(eˣ − 1)`, continuous at 0.
fn bernoulli(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x > 700.0 {
        x * (-x).exp()
    } else {
        x / x.exp_m1()
    }
}

/// Tridiagonal generator `dQ/dt = L Q`, stored by diagonals.
#[derive(Debug, Clone)]
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn operator(grid: Grid, eta: f64) -> Operator {
    let n = grid.cells;
    let h = grid.step();
    let mut op = Operator { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
    // −2a/b in u, with a = −A/s − B/2s² and b = B/s² = 8(1 − 2s).
    let potential_slope = |u: f64| {
        let s = 0.5 * u.exp();
        drift_s(s, eta) / (4.0 * s * (1.0 - 2.0 * s)) + 1.0
    };
    let ln_b = |u: f64| (8.0 * -u.exp_m1()).ln();
    for i in 0..n - 1 {
        let (ua, ub) = (grid.center(i), grid.center(i + 1));
        let w = gauss7_on(ua, ub).map(|(u, wt)| wt * potential_slope(u)).sum::<f64>() + ln_b(ub) - ln_b(ua);
        let face = grid.edge(i + 1);
        let d = 4.0 * -face.exp_m1();
        // Flux toward smaller u through the face between i and i + 1:
        // F = (D/h)[Bern(−w) Q_{i+1} − Bern(w) Q_i].
        let k_up = d / h * bernoulli(-w) / h;
        let k_down = d / h * bernoulli(w) / h;
        op.diag[i] -= k_down;
        op.upper[i] += k_up;
        op.diag[i + 1] -= k_up;
        op.lower[i + 1] += k_down;
    }
    op
}

/// Time integration scheme for [`evolve_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepping {
    /// Backward Euler; unconditionally stable and positivity preserving.
    #[default]
    Implicit,
    /// Forward Euler; rejected when `dt` exceeds the stability bound.
    Explicit,
}

/// Time-stepper for one density.
#[derive(Debug, Clone)]
pub struct Evolution {
    op: Operator,
    density: DensityGrid,
    stepping: Stepping,
    scratch_c: Vec<f64>,
    scratch_d: Vec<f64>,
}

impl Evolution {
    pub fn new(initial: DensityGrid, eta: f64, stepping: Stepping) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
        }
        let n = initial.grid.cells;
        if initial.q.len() != n {
            return Err(Error::InvalidParameter("density length does not match its grid".into()));
        }
        Ok(Self {
            op: operator(initial.grid, eta),
            density: initial,
            stepping,
            scratch_c: vec![0.0; n],
            scratch_d: vec![0.0; n],
        })
    }

    pub fn density(&self) -> &DensityGrid {
        &self.density
    }

    pub fn into_density(self) -> DensityGrid {
        self.density
    }

    /// Largest stable forward-Euler step.
    pub fn explicit_limit(&self) -> f64 {
        1.0 / self.op.diag.iter().map(|d| -d).fold(0.0, f64::max)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if self.stepping == Stepping::Explicit {
            let max = self.explicit_limit();
            if dt > max {
                return Err(Error::Cfl { dt, max });
            }
        }
        let n = self.density.q.len();
        let q = &mut self.density.q;
        match self.stepping {
            Stepping::Explicit => {
                let old = q.clone();
                for i in 0..n {
                    let mut v = (1.0 + dt * self.op.diag[i]) * old[i];
                    if i > 0 {
                        v += dt * self.op.lower[i] * old[i - 1];
                    }
                    if i + 1 < n {
                        v += dt * self.op.upper[i] * old[i + 1];
                    }
                    q[i] = v;
                }
            }
            Stepping::Implicit => {
                // Thomas algorithm for (I − dt L) Q' = Q.
                let (c, d) = (&mut self.scratch_c, &mut self.scratch_d);
                let b0 = 1.0 - dt * self.op.diag[0];
                c[0] = -dt * self.op.upper[0] / b0;
                d[0] = q[0] / b0;
                for i in 1..n {
                    let a = -dt * self.op.lower[i];
                    let b = 1.0 - dt * self.op.diag[i];
                    let m = b - a * c[i - 1];
                    c[i] = if i + 1 < n { -dt * self.op.upper[i] / m } else { 0.0 };
                    d[i] = (q[i] - a * d[i - 1]) / m;
                }
                q[n - 1] = d[n - 1];
                for i in (0..n - 1).rev() {
                    q[i] = d[i] - c[i] * q[i + 1];
                }
            }
        }
        for (cell, &value) in q.iter().enumerate() {
            if value < -1e-12 || !value.is_finite() {
                return Err(Error::NegativeDensity { cell, value });
            }
        }
        self.density.time += dt;
        Ok(())
    }

    /// Steps to `t_end` with steps of at most `dt`.
    pub fn run_until(&mut self, t_end: f64, dt: f64) -> Result<()> {
        let start = self.density.time;
        let remaining = t_end - start;
        if remaining <= 0.0 {
            return Ok(());
        }
        let steps = (remaining / dt - 1e-9).ceil().max(1.0) as usize;
        let h = remaining / steps as f64;
        for k in 1..=steps {
            self.step(h)?;
            self.density.time = start + k as f64 * h;
        }
        Ok(())
    }
}

/// Evolves `initial` to `t_end` with steps of at most `dt`.
pub fn evolve_density(initial: DensityGrid, eta: f64, t_end: f64, dt: f64, stepping: Stepping) -> Result<DensityGrid> {
    if t_end < initial.time {
        return Err(Error::InvalidParameter("t_end precedes the initial time".into()));
    }
    let mut ev = Evolution::new(initial, eta, stepping)?;
    ev.run_until(t_end, dt)?;
    Ok(ev.into_density())
}

/// Time at which the mean purity of the evolving density first reaches
/// `1 − ε`, interpolated linearly in `ln⟨1 − p⟩` between steps.
pub fn mean_purity_crossing_time(grid: Grid, eta: f64, p0: f64, epsilon: f64, dt: f64, t_max: f64) -> Result<f64> {
    let initial = DensityGrid::delta(grid, p0)?;
    let mut ev = Evolution::new(initial, eta, Stepping::Implicit)?;
    let target = epsilon.ln();
    let mut prev = ev.density().mean_impurity().ln();
    if prev <= target {
        return Ok(0.0);
    }
    let mut t = 0.0;
    while t < t_max {
        ev.step(dt)?;
        let now = ev.density().mean_impurity().ln();
        if now <= target {
            return Ok(t + dt * (prev - target) / (prev - now));
        }
        prev = now;
        t += dt;
    }
    Err(Error::Domain(format!("mean purity did not reach 1 - {epsilon} by t = {t_max}")))
}
