//! The four purification protocols, their feedback laws, and the analytic
//! timescales and drift decompositions that compare them.
//!
//! Times are in units of `1/Γ₀` and rates in units of `Γ₀`.

use std::fmt;

use nalgebra::Vector3;

use crate::detector::{Axis, DetectorParams};
use crate::error::{Error, Result};
use crate::state::{align_rotation, AlignMode, BlochVector, Rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// One detector along z, no feedback.
    ParallelNoFeedback,
    /// One detector along z; the state is kept perpendicular to it.
    JacobsPerpendicular,
    /// One detector along z; the state is kept aligned with it.
    WisemanRalphParallel,
    /// Identical detectors along x, y and z, no feedback.
    IsotropicThreeDetector,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::ParallelNoFeedback,
        ProtocolKind::JacobsPerpendicular,
        ProtocolKind::WisemanRalphParallel,
        ProtocolKind::IsotropicThreeDetector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::ParallelNoFeedback => "parallel",
            ProtocolKind::JacobsPerpendicular => "jacobs",
            ProtocolKind::WisemanRalphParallel => "wiseman-ralph",
            ProtocolKind::IsotropicThreeDetector => "isotropic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn detector_count(self) -> usize {
        match self {
            ProtocolKind::IsotropicThreeDetector => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A protocol together with the parameters of each of its detectors.
/// Single-detector protocols measure along z; the isotropic protocol has
/// its detectors along x, y, z in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    kind: ProtocolKind,
    detectors: Vec<DetectorParams>,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, detectors: Vec<DetectorParams>) -> Result<Self> {
        if detectors.len() != kind.detector_count() {
            return Err(Error::InvalidParameter(format!(
                "{kind} needs {} detector(s), got {}",
                kind.detector_count(),
                detectors.len()
            )));
        }
        Ok(Self { kind, detectors })
    }

    /// The protocol with identical detectors.
    pub fn uniform(kind: ProtocolKind, params: DetectorParams) -> Self {
        Self { kind, detectors: vec![params; kind.detector_count()] }
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn detectors(&self) -> &[DetectorParams] {
        &self.detectors
    }

    /// Measurement axis of detector `k`.
    pub fn axis(&self, k: usize) -> Axis {
        match self.kind {
            ProtocolKind::IsotropicThreeDetector => Axis::ALL[k],
            _ => Axis::Z,
        }
    }

    /// The largest measurement rate, which sets the step-size cap.
    pub fn max_gamma0(&self) -> f64 {
        self.detectors.iter().map(DetectorParams::gamma0).fold(0.0, f64::max)
    }
}

/// Feedback rotation applied before a measurement step. Jacobs turns the
/// state perpendicular to the z detector, Wiseman–Ralph onto the nearer
/// pole of it; the other protocols, and any protocol at `r = 0`, use the
/// identity.
pub fn control_rotation(protocol: &ProtocolSpec, v: BlochVector) -> Result<Rotation> {
    let v = v.validated()?;
    if v.radius() == 0.0 {
        return Ok(Rotation::identity());
    }
    match protocol.kind {
        ProtocolKind::JacobsPerpendicular => align_rotation(v, Vector3::z(), AlignMode::Perpendicular),
        ProtocolKind::WisemanRalphParallel => {
            let pole = if v.z >= 0.0 { Vector3::z() } else { -Vector3::z() };
            align_rotation(v, pole, AlignMode::Parallel)
        }
        ProtocolKind::ParallelNoFeedback | ProtocolKind::IsotropicThreeDetector => Ok(Rotation::identity()),
    }
}

/// Which closed form produced a [`TimescaleResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    /// `τ_⊥ = ½ ln ε⁻¹`.
    PerpendicularMean,
    /// `τ_∥ = ln ε⁻¹`.
    ParallelMean,
    /// `τ_iso = ¼ ln ε⁻¹`, the leading asymptote for ideal detectors.
    IsotropicMeanLeading,
    /// `¼[ln(1/2ε) − ln(1 − δ/2ε)]`, valid for inefficient detectors and
    /// differing from the leading asymptote by `¼ ln 2` at `δ = 0`.
    IsotropicMeanInefficient,
    /// `T^log_∥ = ¼ ln ε⁻¹`.
    ParallelLogEntropy,
    /// `T^log_iso = ⅛ ln ε⁻¹`.
    IsotropicLogEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Exact,
    HighPurityAsymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleResult {
    pub value: f64,
    pub formula: Formula,
    pub regime: Regime,
    pub protocol: ProtocolKind,
    pub epsilon: f64,
    pub delta: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 0.1], got {epsilon}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
    }
    Ok(())
}

/// Asymptotic time for the mean purity to reach `1 − ε`. The isotropic
/// protocol uses the inefficient-detector form for every `δ`, including 0;
/// [`isotropic_mean_time_leading`] gives the leading ideal asymptote.
pub fn analytic_time_mean_purity(protocol: ProtocolKind, epsilon: f64, delta: f64) -> Result<TimescaleResult> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let ln_inv = -epsilon.ln();
    let (value, formula) = match protocol {
        ProtocolKind::JacobsPerpendicular => {
            if delta > 0.0 {
                return Err(Error::Unsupported("the Jacobs timescale is only known for ideal detectors".into()));
            }
            (0.5 * ln_inv, Formula::PerpendicularMean)
        }
        // Dephasing does not touch the populations along the measured axis.
        ProtocolKind::ParallelNoFeedback | ProtocolKind::WisemanRalphParallel => (ln_inv, Formula::ParallelMean),
        ProtocolKind::IsotropicThreeDetector => {
            if epsilon <= delta / 2.0 {
                return Err(Error::Unattainable { epsilon, delta });
            }
            let two_eps = 2.0 * epsilon;
            // 2ε − δ is exact whenever δ is within a factor two of 2ε.
            let value = 0.25 * (-(two_eps.ln()) - ((two_eps - delta) / two_eps).ln());
            (value, Formula::IsotropicMeanInefficient)
        }
    };
    Ok(TimescaleResult { value, formula, regime: Regime::HighPurityAsymptotic, protocol, epsilon, delta })
}

/// `τ_iso = ¼ ln ε⁻¹` for ideal detectors.
pub fn isotropic_mean_time_leading(epsilon: f64) -> Result<TimescaleResult> {
    check_epsilon(epsilon)?;
    Ok(TimescaleResult {
        value: -0.25 * epsilon.ln(),
        formula: Formula::IsotropicMeanLeading,
        regime: Regime::HighPurityAsymptotic,
        protocol: ProtocolKind::IsotropicThreeDetector,
        epsilon,
        delta: 0.0,
    })
}

/// Asymptotic mean first-passage time to `1 − ε` from the log-entropy
/// drift. Only ideal detectors are covered; inefficient ones need the
/// first-passage quadrature.
pub fn analytic_mtfp_estimate(protocol: ProtocolKind, epsilon: f64, delta: f64) -> Result<TimescaleResult> {
    check_epsilon(epsilon)?;
    if delta != 0.0 {
        return Err(Error::Unsupported(
            "log-entropy estimates need ideal detectors; use the first-passage quadrature for delta > 0".into(),
        ));
    }
    let ln_inv = -epsilon.ln();
    let (value, formula) = match protocol {
        ProtocolKind::ParallelNoFeedback | ProtocolKind::WisemanRalphParallel => (0.25 * ln_inv, Formula::ParallelLogEntropy),
        ProtocolKind::IsotropicThreeDetector => (0.125 * ln_inv, Formula::IsotropicLogEntropy),
        // Deterministic purity: the first-passage time is the mean-purity time.
        ProtocolKind::JacobsPerpendicular => (0.5 * ln_inv, Formula::PerpendicularMean),
    };
    Ok(TimescaleResult { value, formula, regime: Regime::HighPurityAsymptotic, protocol, epsilon, delta })
}

/// Measurement geometry entering the log-entropy drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftConfig {
    /// One detector; `x2` and `z2` are the squared Bloch components
    /// perpendicular and parallel to it.
    SingleDetector { x2: f64, z2: f64 },
    /// Three identical detectors.
    Isotropic,
}

/// Itô drift of `ln s`:
/// one detector `−2{2s + x² + 2z² + (1 − 1/η)x²/2s}`,
/// three detectors `−2{2 − 2s + 2/η + (1 − 1/η)/s}`.
pub fn drift_log_entropy(config: DriftConfig, s: f64, eta: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&s) {
        return Err(Error::Domain(format!("linear entropy {s} outside [0, 1/2]")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let loss = 1.0 - 1.0 / eta;
    if s == 0.0 && loss != 0.0 {
        return Err(Error::SingularDrift);
    }
    let singular = |numerator: f64| if loss == 0.0 { 0.0 } else { loss * numerator / s };
    match config {
        DriftConfig::SingleDetector { x2, z2 } => {
            if x2 < 0.0 || z2 < 0.0 || x2 + z2 > 1.0 - 2.0 * s + 1e-12 {
                return Err(Error::Domain(format!("x² = {x2}, z² = {z2} exceed r² = {}", 1.0 - 2.0 * s)));
            }
            Ok(-2.0 * (2.0 * s + x2 + 2.0 * z2 + singular(x2 / 2.0)))
        }
        DriftConfig::Isotropic => Ok(-2.0 * (2.0 - 2.0 * s + 2.0 / eta + singular(1.0))),
    }
}

fn check_good_bad_regime(eta: f64) -> Result<()> {
    if !(eta > 0.5 && eta <= 1.0) {
        return Err(Error::Regime(format!(
            "the perpendicular/parallel split is only meaningful for eta in (1/2, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Log-entropy drift of a measurement perpendicular to a state,
/// `−2[1/η + (1 − 1/η)/2s]`.
pub fn perpendicular_log_entropy_drift(s: f64, eta: f64) -> Result<f64> {
    check_good_bad_regime(eta)?;
    let r2 = 1.0 - 2.0 * s;
    drift_log_entropy(DriftConfig::SingleDetector { x2: r2.max(0.0), z2: 0.0 }, s, eta)
}

/// Log-entropy drift of a measurement parallel to a state, `−2(2 − 2s)`.
pub fn parallel_log_entropy_drift(s: f64, eta: f64) -> Result<f64> {
    check_good_bad_regime(eta)?;
    let r2 = 1.0 - 2.0 * s;
    drift_log_entropy(DriftConfig::SingleDetector { x2: 0.0, z2: r2.max(0.0) }, s, eta)
}

/// Drift of the purity, `⟨dp⟩/dt`, under one detector:
/// `2[(1 − p)(1 − z²) + ½(1 − 1/η)(2p − 1 − z²)]`.
pub fn mean_purity_rate_single(p: f64, z2: f64, eta: f64) -> f64 {
    let s = 1.0 - p;
    2.0 * (s * (1.0 - z2) + 0.5 * (1.0 - 1.0 / eta) * (2.0 * p - 1.0 - z2))
}

/// The two perpendicular ("good") contributions to the isotropic purity
/// drift, `2[1 − (2p − 1)/η]`.
pub fn perpendicular_purity_rate(p: f64, eta: f64) -> Result<f64> {
    check_good_bad_regime(eta)?;
    Ok(2.0 * (1.0 - (2.0 * p - 1.0) / eta))
}

/// The parallel ("bad") contribution to the isotropic purity drift,
/// `4(1 − p)²`.
pub fn parallel_purity_rate(p: f64, eta: f64) -> Result<f64> {
    check_good_bad_regime(eta)?;
    Ok(4.0 * (1.0 - p) * (1.0 - p))
}

/// Roots of `s² + s/η − δ/2η`, which governs the mean-field linear entropy
/// `ds/dt = −4(s − s₊)(s − s₋)`.
struct NaiveRoots {
    s_plus: f64,
    s_minus: f64,
    gap: f64,
}

fn naive_roots(delta: f64) -> NaiveRoots {
    let eta = 1.0 - delta;
    let inv = 1.0 / eta;
    let gap = (inv * inv + 2.0 * delta / eta).sqrt();
    NaiveRoots { s_plus: (delta / eta) / (gap + inv), s_minus: -0.5 * (inv + gap), gap }
}

/// Solution of the mean-field purity equation
/// `d⟨p⟩/dt = 2[1 − (2⟨p⟩ − 1)/η + 2(1 − ⟨p⟩)²]`, in closed form.
pub fn naive_mean_purity(delta: f64, p0: f64, t: f64) -> Result<f64> {
    naive_mean_impurity(delta, p0, t).map(|s| 1.0 - s)
}

/// `1 − ⟨p⟩` from [`naive_mean_purity`], without cancellation near `p = 1`.
pub fn naive_mean_impurity(delta: f64, p0: f64, t: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(0.5..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("initial purity {p0} outside [1/2, 1]")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let NaiveRoots { s_plus, s_minus, gap } = naive_roots(delta);
    let s0 = 1.0 - p0;
    let q = (s0 - s_plus) / (s0 - s_minus) * (-4.0 * gap * t).exp();
    Ok(s_plus + q * gap / (1.0 - q))
}

/// Time at which the mean-field purity first reaches `1 − ε`.
pub fn naive_time_to_purity(delta: f64, p0: f64, epsilon: f64) -> Result<f64> {
    check_delta(delta)?;
    let NaiveRoots { s_plus, s_minus, gap } = naive_roots(delta);
    let s0 = 1.0 - p0;
    if s0 <= epsilon {
        return Ok(0.0);
    }
    if epsilon <= s_plus {
        return Err(Error::Unattainable { epsilon, delta });
    }
    let k = (s0 - s_plus) / (s0 - s_minus);
    let q_target = (epsilon - s_plus) / (epsilon - s_minus);
    Ok((k / q_target).ln() / (4.0 * gap))
}

/// Long-time limit of the mean-field purity,
/// `1 + ½(1/η − √(1/η² + 2/η − 2))`.
pub fn stationary_mean_purity(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(1.0 - naive_roots(1.0 - eta).s_plus)
}

/// Whether purity `1 − ε` can be reached on average with inefficiency `δ`.
pub fn purity_attainable(epsilon: f64, delta: f64) -> bool {
    epsilon >= delta / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::rotate;
    use proptest::prelude::*;

    #[test]
    fn control_rotation_examples() {
        let ideal = DetectorParams::ideal(1.0).unwrap();
        let jacobs = ProtocolSpec::uniform(ProtocolKind::JacobsPerpendicular, ideal);
        assert!(control_rotation(&jacobs, BlochVector::new(0.5, 0.0, 0.0)).unwrap().is_identity());
        let v = BlochVector::new(0.1, 0.2, 0.6);
        assert!(rotate(v, &control_rotation(&jacobs, v).unwrap()).z.abs() < 1e-15);
        let wr = ProtocolSpec::uniform(ProtocolKind::WisemanRalphParallel, ideal);
        let v = BlochVector::new(0.0, 0.0, -0.7);
        assert!((rotate(v, &control_rotation(&wr, v).unwrap()).z.abs() - 0.7).abs() < 1e-15);
        let v = BlochVector::new(0.3, -0.2, 0.1);
        let out = rotate(v, &control_rotation(&wr, v).unwrap());
        assert!((out.z - v.radius()).abs() < 1e-15);
        let iso = ProtocolSpec::uniform(ProtocolKind::IsotropicThreeDetector, ideal);
        assert!(control_rotation(&iso, v).unwrap().is_identity());
        assert!(control_rotation(&jacobs, BlochVector::ORIGIN).unwrap().is_identity());
        assert!(ProtocolSpec::new(ProtocolKind::IsotropicThreeDetector, vec![ideal]).is_err());
    }

    #[test]
    fn mean_purity_timescales() {
        let eps = 1e-4;
        let j = analytic_time_mean_purity(ProtocolKind::JacobsPerpendicular, eps, 0.0).unwrap();
        assert!((j.value - 4.6052).abs() < 1e-4);
        let p = analytic_time_mean_purity(ProtocolKind::ParallelNoFeedback, eps, 0.0).unwrap();
        assert!((p.value - 9.2103).abs() < 1e-4);
        assert_eq!(p.value, 2.0 * j.value);
        let iso = analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, eps, 0.0).unwrap();
        assert!((iso.value - 0.25 * 5000f64.ln()).abs() < 1e-14);
        assert_eq!(iso.formula, Formula::IsotropicMeanInefficient);
        let lead = isotropic_mean_time_leading(eps).unwrap();
        assert_eq!(lead.formula, Formula::IsotropicMeanLeading);
        assert!((lead.value - iso.value - 0.25 * 2f64.ln()).abs() < 1e-14);
        assert!((p.value / lead.value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn attainability_bound() {
        let delta = 1e-3;
        assert!(matches!(
            analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, 4e-4, delta),
            Err(Error::Unattainable { .. })
        ));
        assert!(analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, 5e-4, delta).is_err());
        let near = analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, 5e-4 * (1.0 + 1e-15), delta).unwrap();
        assert!(near.value > 10.0, "{}", near.value);
        assert!(matches!(
            analytic_time_mean_purity(ProtocolKind::JacobsPerpendicular, 1e-3, 0.1),
            Err(Error::Unsupported(_))
        ));
        assert!(purity_attainable(1e-3, 2e-3) && !purity_attainable(1e-3, 2.1e-3));
    }

    #[test]
    fn log_entropy_timescales() {
        let eps = 1e-4;
        let par = analytic_mtfp_estimate(ProtocolKind::WisemanRalphParallel, eps, 0.0).unwrap();
        assert!((par.value - 2.3026).abs() < 1e-4);
        let iso = analytic_mtfp_estimate(ProtocolKind::IsotropicThreeDetector, eps, 0.0).unwrap();
        assert!((iso.value - 1.1513).abs() < 1e-4);
        assert!(matches!(analytic_mtfp_estimate(ProtocolKind::IsotropicThreeDetector, eps, 0.1), Err(Error::Unsupported(_))));
        assert!(analytic_mtfp_estimate(ProtocolKind::ParallelNoFeedback, 0.5, 0.0).is_err());
    }

    #[test]
    fn log_entropy_drift_limits() {
        let s = 1e-12;
        let par = drift_log_entropy(DriftConfig::SingleDetector { x2: 0.0, z2: 1.0 - 2.0 * s }, s, 1.0).unwrap();
        assert!((par + 4.0).abs() < 1e-10);
        let iso = drift_log_entropy(DriftConfig::Isotropic, s, 1.0).unwrap();
        assert!((iso + 8.0).abs() < 1e-10);
        assert_eq!(drift_log_entropy(DriftConfig::Isotropic, 0.0, 0.9), Err(Error::SingularDrift));
        assert_eq!(drift_log_entropy(DriftConfig::Isotropic, 0.0, 1.0).unwrap(), -8.0);
        assert!(perpendicular_log_entropy_drift(0.1, 0.4).is_err());
    }

    #[test]
    fn ideal_single_detector_drift_is_maximal_for_parallel_state() {
        for &s in &[0.01, 0.1, 0.3] {
            let r2: f64 = 1.0 - 2.0 * s;
            let best = drift_log_entropy(DriftConfig::SingleDetector { x2: 0.0, z2: r2 }, s, 1.0).unwrap();
            for i in 0..=50 {
                for j in 0..=50 {
                    let (x2, z2) = (r2 * i as f64 / 50.0, r2 * j as f64 / 50.0);
                    if x2 + z2 <= r2 {
                        let d = drift_log_entropy(DriftConfig::SingleDetector { x2, z2 }, s, 1.0).unwrap();
                        assert!(d >= best - 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn naive_solution_examples() {
        let late = naive_mean_purity(0.0, 0.5, 40.0).unwrap();
        assert!((late - 1.0).abs() < 1e-15);
        let stat = stationary_mean_purity(0.9).unwrap();
        let direct = 1.0 + 0.5 * (1.0 / 0.9 - (1.0 / 0.81 + 2.0 / 0.9 - 2.0f64).sqrt());
        assert!((stat - direct).abs() < 1e-14);
        assert!((stat - 0.9521).abs() < 1e-4);
        assert!((naive_mean_purity(0.1, 0.5, 60.0).unwrap() - stat).abs() < 1e-12);
        assert_eq!(naive_mean_purity(0.1, 0.7, 0.0).unwrap(), 0.7);
        assert_eq!(stationary_mean_purity(1.0).unwrap(), 1.0);
        let d = 1e-3;
        assert!((stationary_mean_purity(1.0 - d).unwrap() - (1.0 - d / 2.0)).abs() < d * d);
    }

    #[test]
    fn naive_solution_solves_the_ode() {
        // Fourth-order Runge–Kutta as an independent check.
        let delta: f64 = 0.05;
        let eta = 1.0 - delta;
        let f = |p: f64| 2.0 * (1.0 - (2.0 * p - 1.0) / eta + 2.0 * (1.0 - p) * (1.0 - p));
        let (mut p, h) = (0.5, 1e-4);
        for _ in 0..20_000 {
            let k1 = f(p);
            let k2 = f(p + 0.5 * h * k1);
            let k3 = f(p + 0.5 * h * k2);
            let k4 = f(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((p - naive_mean_purity(delta, 0.5, 2.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn naive_time_inverts_solution() {
        for &(delta, eps) in &[(0.0, 1e-4), (1e-3, 1e-3), (0.05, 0.04)] {
            let t = naive_time_to_purity(delta, 0.5, eps).unwrap();
            let s = naive_mean_impurity(delta, 0.5, t).unwrap();
            assert!((s / eps - 1.0).abs() < 1e-9, "{delta} {eps} {s}");
        }
        assert!(naive_time_to_purity(0.1, 0.5, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn decomposition_identity(s in 1e-6..0.5f64, eta in 0.51..=1.0f64) {
            let iso = drift_log_entropy(DriftConfig::Isotropic, s, eta).unwrap();
            let par = parallel_log_entropy_drift(s, eta).unwrap();
            let perp = perpendicular_log_entropy_drift(s, eta).unwrap();
            let closed = -2.0 * (1.0 / eta + (1.0 - 1.0 / eta) / (2.0 * s));
            prop_assert!((perp - closed).abs() <= 1e-9 * closed.abs().max(1.0));
            prop_assert!((iso - (par + 2.0 * perp)).abs() <= 1e-9 * iso.abs().max(1.0));
        }

        #[test]
        fn purity_rate_decomposition(p in 0.5..=1.0f64, eta in 0.51..=1.0f64) {
            let s = 1.0 - p;
            let total = 2.0 * (1.0 - (2.0 * p - 1.0) / eta + 2.0 * s * s);
            let good = perpendicular_purity_rate(p, eta).unwrap();
            let bad = parallel_purity_rate(p, eta).unwrap();
            prop_assert!((total - good - bad).abs() < 1e-12);
            let r2 = 2.0 * p - 1.0;
            let single_perp = mean_purity_rate_single(p, 0.0, eta);
            let single_par = mean_purity_rate_single(p, r2, eta);
            prop_assert!((good - 2.0 * single_perp).abs() < 1e-12);
            prop_assert!((bad - single_par).abs() < 1e-12);
        }

        #[test]
        fn isotropic_time_increases_with_delta(eps in 1e-6..0.1f64, f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
            prop_assume!(f1 < f2);
            let t1 = analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, eps, 2.0 * eps * f1 * 0.999).unwrap();
            let t2 = analytic_time_mean_purity(ProtocolKind::IsotropicThreeDetector, eps, 2.0 * eps * f2 * 0.999).unwrap();
            prop_assert!(t2.value > t1.value);
        }

        #[test]
        fn naive_purity_monotone(delta in 0.0..0.5f64, t1 in 0.0..5.0f64, dt in 0.0..5.0f64) {
            let a = naive_mean_purity(delta, 0.5, t1).unwrap();
            let b = naive_mean_purity(delta, 0.5, t1 + dt).unwrap();
            prop_assert!(b >= a - 1e-15);
            prop_assert!(b <= stationary_mean_purity(1.0 - delta).unwrap() + 1e-15);
        }
    }
}
