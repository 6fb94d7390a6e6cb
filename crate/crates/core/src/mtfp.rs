//! Mean first-passage time of the purity diffusion to `1 − ε`, with
//! reflection at `p = 1/2`:
//!
//! `T̄ = 2 ∫_{p₀}^{1−ε} dy ψ(y)⁻¹ ∫_{1/2}^{y} dz ψ(z)/B(z)`,
//! `ψ = exp ∫ 2A/B`.
//!
//! Both integrals are taken in `t = −ln(2(1 − p))`, where `dp = s dt`, on
//! panels whose width shrinks with the local slope of `ln ψ`. The inner
//! integral is carried as a running log-sum-exp, so the ratio `ψ(z)/ψ(y)`
//! never leaves log space even when `ψ` spans thousands of e-folds.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::{gauss7_on, log_add_exp, log_sum_exp};
use crate::stats::linear_fit;

/// Which diffusion coefficient enters `ψ` and the inner integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diffusion {
    /// `B_HP = 8(1 − p)²`, the high-purity approximation.
    #[default]
    HighPurity,
    /// `B = 8(2p − 1)(1 − p)²`, the full coefficient.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtfpConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub p0: f64,
    pub rel_tol: f64,
    pub diffusion: Diffusion,
}

impl MtfpConfig {
    /// Start at `p₀ = 1/2`, relative tolerance `1e−6`, `B_HP`.
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta, p0: 0.5, rel_tol: 1e-6, diffusion: Diffusion::HighPurity }
    }

    pub fn with_diffusion(self, diffusion: Diffusion) -> Self {
        Self { diffusion, ..self }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn with_p0(self, p0: f64) -> Self {
        Self { p0, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        if !(self.p0 >= 0.5 && self.p0 < 1.0 - self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "p0 must lie in [1/2, 1 - epsilon), got {}",
                self.p0
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// `ln ψ_HP(x) = (x − ½)(1 − δ/((1 − x)(1 − δ))) − ln(2(1 − x))/(1 − δ)`,
/// normalized so that `ψ_HP(1/2) = 1`.
pub fn psi_hp(x: f64, delta: f64) -> Result<f64> {
    if x >= 1.0 || x < 0.5 || x.is_nan() {
        return Err(Error::Domain(format!("psi_hp needs x in [1/2, 1), got {x}")));
    }
    let s = 1.0 - x;
    let eta = 1.0 - delta;
    Ok((x - 0.5) * (1.0 - delta / (s * eta)) - (2.0 * s).ln() / eta)
}

/// Integrands in the variable `t`, with `s = e^{−t}/2`.
#[derive(Debug, Clone, Copy)]
struct Potential {
    delta: f64,
    eta: f64,
    diffusion: Diffusion,
}

impl Potential {
    fn ln_psi(&self, t: f64) -> f64 {
        let s = 0.5 * (-t).exp();
        let half_minus_s = -0.5 * (-t).exp_m1();
        match self.diffusion {
            Diffusion::HighPurity => half_minus_s * (1.0 - self.delta / (s * self.eta)) + t / self.eta,
            Diffusion::Full => -self.delta / (2.0 * self.eta * s) + t + 1.5 * (2.0 * half_minus_s).ln(),
        }
    }

    fn ln_b(&self, t: f64) -> f64 {
        let ln_s = -t - std::f64::consts::LN_2;
        let base = 8f64.ln() + 2.0 * ln_s;
        match self.diffusion {
            Diffusion::HighPurity => base,
            Diffusion::Full => base + (-(-t).exp_m1()).ln(),
        }
    }

    /// `ln[ψ/B · s]`, the inner integrand.
    fn ln_inner(&self, t: f64) -> f64 {
        self.ln_psi(t) - self.ln_b(t) - t - std::f64::consts::LN_2
    }

    /// Upper bound on `|d ln ψ/dt| + 1` over `[.., t]`.
    fn slope(&self, t: f64) -> f64 {
        let s = 0.5 * (-t).exp();
        1.0 / self.eta + s + self.delta / (2.0 * self.eta * s) + 1.0
    }
}

const PANEL_MAX: f64 = 0.25;

/// Panel edges over `[0, end]` with `t0` included as an edge.
fn panels(pot: &Potential, t0: f64, end: f64, c: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    if pot.diffusion == Diffusion::Full {
        // Geometric panels resolve the √t behaviour of the integrand at p = 1/2.
        for k in (1..=40).rev() {
            edges.push(PANEL_MAX * 0.5f64.powi(k));
        }
    }
    let mut t = *edges.last().expect("non-empty");
    while t < end {
        let probe = (t + PANEL_MAX).min(end);
        let h = (c / pot.slope(probe)).min(PANEL_MAX);
        let mut next = (t + h).min(end);
        if t < t0 && next > t0 {
            next = t0;
        }
        if end - next < 1e-3 * h {
            next = end;
        }
        edges.push(next);
        t = next;
    }
    if t0 > 0.0 && !edges.contains(&t0) {
        edges.push(t0);
        edges.sort_by(f64::total_cmp);
    }
    edges
}

/// `ln T̄` for panel-width parameter `c`.
fn ln_mtfp_at(pot: &Potential, t0: f64, end: f64, c: f64) -> f64 {
    let edges = panels(pot, t0, end, c);
    let mut ln_inner = f64::NEG_INFINITY;
    let mut outer_terms = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= t0 {
            for (tk, wk) in gauss7_on(a, b) {
                let partial = log_sum_exp(gauss7_on(a, tk).map(|(x, wx)| wx.ln() + pot.ln_inner(x)));
                let ln_i = log_add_exp(ln_inner, partial);
                outer_terms.push(wk.ln() + ln_i - pot.ln_psi(tk) - tk - std::f64::consts::LN_2);
            }
        }
        let panel = log_sum_exp(gauss7_on(a, b).map(|(x, wx)| wx.ln() + pot.ln_inner(x)));
        ln_inner = log_add_exp(ln_inner, panel);
    }
    std::f64::consts::LN_2 + log_sum_exp(outer_terms)
}

/// `ln T̄`, refining the panels until successive estimates agree to
/// `cfg.rel_tol`.
pub fn mtfp_ln(cfg: &MtfpConfig) -> Result<f64> {
    cfg.validate()?;
    let pot = Potential { delta: cfg.delta, eta: 1.0 - cfg.delta, diffusion: cfg.diffusion };
    let t0 = -(2.0 * (1.0 - cfg.p0)).ln();
    let end = -(2.0 * cfg.epsilon).ln();
    let mut c = 1.0;
    let mut prev = ln_mtfp_at(&pot, t0, end, c);
    for _ in 0..14 {
        c *= 0.5;
        let next = ln_mtfp_at(&pot, t0, end, c);
        if !next.is_finite() {
            return Err(Error::NonFinite("first-passage quadrature"));
        }
        // Relative change of T̄ is the change of ln T̄.
        if (next - prev).abs() < cfg.rel_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { achieved: f64::NAN, requested: cfg.rel_tol })
}

/// Mean first-passage time `T̄` in units of `1/Γ₀`.
pub fn mtfp_quadrature(cfg: &MtfpConfig) -> Result<f64> {
    let ln_t = mtfp_ln(cfg)?;
    if ln_t > 709.0 {
        return Err(Error::Overflow(format!("ln T = {ln_t} exceeds the double range")));
    }
    Ok(ln_t.exp())
}

/// Fit of `8T̄(0, ε) = slope · ln ε⁻¹ + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealConstantFit {
    pub constant: f64,
    pub slope: f64,
    pub max_residual: f64,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
}

/// Largest `ε` treated as asymptotically small.
pub const ASYMPTOTIC_EPSILON: f64 = 1e-3;

/// Fits the ideal-detector constant over `epsilons` (each at most `1e−3`).
pub fn mtfp_ideal_constant(epsilons: &[f64]) -> Result<IdealConstantFit> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidParameter("need at least two epsilon values".into()));
    }
    if let Some(e) = epsilons.iter().find(|&&e| e > ASYMPTOTIC_EPSILON) {
        return Err(Error::Regime(format!("epsilon = {e} is above {ASYMPTOTIC_EPSILON}")));
    }
    let times = epsilons
        .iter()
        .map(|&e| mtfp_quadrature(&MtfpConfig::new(e, 0.0).with_rel_tol(1e-9)))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = epsilons.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = times.iter().map(|t| 8.0 * t).collect();
    let fit = linear_fit(&x, &y);
    if fit.max_abs_residual > 0.02 {
        return Err(Error::Inconsistent(format!("fit residual {} above 0.02", fit.max_abs_residual)));
    }
    Ok(IdealConstantFit {
        constant: fit.intercept,
        slope: fit.slope,
        max_residual: fit.max_abs_residual,
        epsilons: epsilons.to_vec(),
        times,
    })
}

/// `ΔT̄(a) = T̄(aε, ε) − T̄(0, ε)` at one `ε`, with its local exponent when
/// computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub a: f64,
    pub epsilon: f64,
    pub delta_t: f64,
    pub ln_delta_t: f64,
    pub c1: Option<f64>,
}

/// Internal tolerance for differences of first-passage times.
const DIFFERENCE_TOL: f64 = 1e-10;

fn ln_delta_t(a: f64, epsilon: f64, ln_ideal: f64) -> Result<(f64, f64)> {
    let ln_t = mtfp_ln(&MtfpConfig::new(epsilon, a * epsilon).with_rel_tol(DIFFERENCE_TOL))?;
    let diff = ln_t.exp() - ln_ideal.exp();
    if ln_t <= ln_ideal {
        if diff < -1e-9 {
            return Err(Error::Inconsistent(format!("negative delta T = {diff} at a = {a}")));
        }
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let ln_dt = ln_t + (-(ln_ideal - ln_t).exp()).ln_1p();
    Ok((ln_dt.exp(), ln_dt))
}

fn check_scaling(a: f64, epsilon: f64) -> Result<()> {
    if epsilon > ASYMPTOTIC_EPSILON || !(epsilon > 0.0) {
        return Err(Error::Regime(format!("scaling needs 0 < epsilon <= {ASYMPTOTIC_EPSILON}, got {epsilon}")));
    }
    if !(a >= 0.0) || a * epsilon >= 1.0 {
        return Err(Error::InvalidParameter(format!("need a >= 0 and a*epsilon < 1, got a = {a}")));
    }
    Ok(())
}

fn ideal_ln(epsilon: f64) -> Result<f64> {
    mtfp_ln(&MtfpConfig::new(epsilon, 0.0).with_rel_tol(DIFFERENCE_TOL))
}

/// `ΔT̄` at `a = δ/ε`.
pub fn delta_t(a: f64, epsilon: f64) -> Result<ScalingPoint> {
    check_scaling(a, epsilon)?;
    let (delta_t, ln_delta_t) = if a == 0.0 { (0.0, f64::NEG_INFINITY) } else { ln_delta_t(a, epsilon, ideal_ln(epsilon)?)? };
    Ok(ScalingPoint { a, epsilon, delta_t, ln_delta_t, c1: None })
}

/// Centred difference of `ln ΔT̄` with step `max(1, 0.05a)`; needs `a ≥ 10`.
pub fn local_exponent(a: f64, epsilon: f64) -> Result<f64> {
    if !(a >= 10.0) {
        return Err(Error::Domain(format!("local exponent needs a >= 10, got {a}")));
    }
    check_scaling(a * 1.05 + 1.0, epsilon)?;
    local_exponent_with(a, epsilon, ideal_ln(epsilon)?)
}

fn local_exponent_with(a: f64, epsilon: f64, ln_ideal: f64) -> Result<f64> {
    let da = (0.05 * a).max(1.0);
    let (lo, ln_lo) = ln_delta_t(a - da, epsilon, ln_ideal)?;
    let (hi, ln_hi) = ln_delta_t(a + da, epsilon, ln_ideal)?;
    if lo <= 0.0 || hi <= 0.0 {
        return Err(Error::Domain(format!("delta T vanishes near a = {a}")));
    }
    Ok((ln_hi - ln_lo) / (2.0 * da))
}

/// `ΔT̄` for every `(ε, a)` pair, ordered by `ε` then `a`. The local
/// exponent is added for `a ≥ 10` when `exponents` is set.
pub fn scaling_study(epsilons: &[f64], a_grid: &[f64], exponents: bool) -> Result<Vec<ScalingPoint>> {
    for &e in epsilons {
        for &a in a_grid {
            check_scaling(a, e)?;
        }
    }
    let ideals = epsilons.par_iter().map(|&e| ideal_ln(e)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, f64, f64)> =
        epsilons.iter().zip(&ideals).flat_map(|(&e, &l)| a_grid.iter().map(move |&a| (e, a, l))).collect();
    jobs.par_iter()
        .map(|&(epsilon, a, ln_ideal)| {
            let (delta_t, ln_dt) = if a == 0.0 { (0.0, f64::NEG_INFINITY) } else { ln_delta_t(a, epsilon, ln_ideal)? };
            let c1 = if exponents && a >= 10.0 { Some(local_exponent_with(a, epsilon, ln_ideal)?) } else { None };
            Ok(ScalingPoint { a, epsilon, delta_t, ln_delta_t: ln_dt, c1 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpe::{diffusion_high_purity, fpe_coeffs};
    use crate::quad::integrate;

    #[test]
    fn psi_examples() {
        assert_eq!(psi_hp(0.5, 0.3).unwrap(), 0.0);
        assert!((psi_hp(0.75, 0.0).unwrap() - (0.25 + 2f64.ln())).abs() < 1e-15);
        assert!(psi_hp(1.0, 0.0).is_err());
    }

    #[test]
    fn psi_derivative_is_two_a_over_b() {
        for &delta in &[0.0, 1e-3, 0.2] {
            for &x in &[0.55, 0.7, 0.9, 0.999] {
                let h = 1e-6 * (1.0 - x);
                let fd = (psi_hp(x + h, delta).unwrap() - psi_hp(x - h, delta).unwrap()) / (2.0 * h);
                let exact = 2.0 * fpe_coeffs(x, 1.0 - delta).0 / diffusion_high_purity(x);
                assert!((fd - exact).abs() < 1e-7 * exact.abs().max(1.0), "{delta} {x}: {fd} {exact}");
            }
        }
    }

    #[test]
    fn full_potential_derivative_is_two_a_over_b() {
        for &delta in &[0.0, 0.01] {
            let pot = Potential { delta, eta: 1.0 - delta, diffusion: Diffusion::Full };
            for t in [0.3f64, 1.0, 4.0] {
                let h = 1e-6;
                // d/dp = (1/s) d/dt.
                let s = 0.5 * (-t).exp();
                let fd = (pot.ln_psi(t + h) - pot.ln_psi(t - h)) / (2.0 * h) / s;
                let (a, b) = fpe_coeffs(1.0 - s, 1.0 - delta);
                assert!((fd - 2.0 * a / b).abs() < 1e-6 * (2.0 * a / b).abs(), "{t}");
            }
        }
    }

    /// Independent nested adaptive quadrature in p for moderate ε.
    fn nested(epsilon: f64, delta: f64) -> f64 {
        let inner = |y: f64| {
            integrate(|z| (psi_hp(z, delta).unwrap() - psi_hp(y, delta).unwrap()).exp() / diffusion_high_purity(z), 0.5, y, 1e-14, 1e-11)
                .unwrap()
                .value
        };
        2.0 * integrate(inner, 0.5, 1.0 - epsilon, 1e-13, 1e-10).unwrap().value
    }

    #[test]
    fn agrees_with_nested_quadrature() {
        for &(eps, delta) in &[(1e-2, 0.0), (1e-2, 5e-3), (1e-3, 2e-3)] {
            let fast = mtfp_quadrature(&MtfpConfig::new(eps, delta).with_rel_tol(1e-10)).unwrap();
            let slow = nested(eps, delta);
            assert!((fast / slow - 1.0).abs() < 1e-7, "{eps} {delta}: {fast} {slow}");
        }
    }

    #[test]
    fn ideal_value_and_continuity() {
        let t = mtfp_quadrature(&MtfpConfig::new(1e-4, 0.0)).unwrap();
        assert!((t / 0.98254 - 1.0).abs() < 0.02, "{t}");
        let tiny = mtfp_quadrature(&MtfpConfig::new(1e-4, 1e-12)).unwrap();
        assert!((tiny / t - 1.0).abs() < 1e-6);
    }

    #[test]
    fn starting_closer_takes_less_time() {
        let a = mtfp_quadrature(&MtfpConfig::new(1e-3, 1e-3)).unwrap();
        let b = mtfp_quadrature(&MtfpConfig::new(1e-3, 1e-3).with_p0(0.9)).unwrap();
        assert!(b < a && b > 0.0);
    }

    #[test]
    fn monotone_in_delta_and_epsilon() {
        let times: Vec<f64> =
            [0.0, 1e-4, 1e-3, 5e-3].iter().map(|&d| mtfp_quadrature(&MtfpConfig::new(1e-3, d)).unwrap()).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        let by_eps: Vec<f64> =
            [1e-2, 1e-3, 1e-4].iter().map(|&e| mtfp_quadrature(&MtfpConfig::new(e, 1e-4)).unwrap()).collect();
        assert!(by_eps.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn regime_guards() {
        assert!(matches!(mtfp_ideal_constant(&[1e-2]), Err(Error::InvalidParameter(_))));
        assert!(matches!(mtfp_ideal_constant(&[1e-2, 1e-3]), Err(Error::Regime(_))));
        assert!(matches!(delta_t(1.0, 1e-2), Err(Error::Regime(_))));
        assert!(matches!(local_exponent(5.0, 1e-6), Err(Error::Domain(_))));
        assert_eq!(delta_t(0.0, 1e-4).unwrap().delta_t, 0.0);
        assert!(scaling_study(&[1e-4], &[], false).unwrap().is_empty());
    }

    #[test]
    fn small_a_slope_is_one_sixth() {
        let p = delta_t(0.1, 1e-5).unwrap();
        let slope = 8.0 * p.delta_t / 0.1;
        assert!((slope - 1.0 / 6.0).abs() < 0.01, "{slope}");
    }
}
