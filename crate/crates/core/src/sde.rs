//! Euler–Maruyama steps of the Itô Bloch equations under continuous
//! measurement, their radial and purity reductions, and the measurement
//! record.
//!
//! Two families of steppers live here. The Cartesian steps advance `(x, y, z)`
//! literally. The split step advances the linear entropy `s = 1 − p` with its
//! exact Itô drift and the direction of the Bloch vector separately; it keeps
//! pure states pure and so respects the radial slack `τ_r` for any `dt`.

use nalgebra::Vector3;

use crate::detector::{Axis, DetectorParams};
use crate::error::{ensure_finite, Error, Result};
use crate::noise::{NoiseIncrement, VectorNoise};
use crate::state::{BlochVector, Rotation, RADIAL_SLACK};

/// Below this radius the radial equation is too close to its `1/r`
/// singularity; step the purity instead.
pub const R_MIN: f64 = 1e-6;
/// Default time step in units of `1/Γ₀`.
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest accepted time step in units of `1/Γ₀`.
pub const MAX_DT: f64 = 1e-2;

/// Rejects steps that are non-positive or above the cap `MAX_DT/Γ₀`.
pub fn check_dt(dt: f64, gamma0: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if dt * gamma0 > MAX_DT * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} exceeds the cap {} / gamma0",
            MAX_DT
        )));
    }
    Ok(())
}

/// Tolerated overshoot of a Cartesian step. The radial error of an explicit
/// step scales with `Γ dW²`, so a fixed `τ_r` alone would reject ordinary
/// steps near the sphere; `25 Γ dt` covers five standard deviations of `dW`.
fn cartesian_slack(rate: f64, dt: f64) -> f64 {
    RADIAL_SLACK + 25.0 * rate * dt
}

fn finish_cartesian(v: Vector3<f64>, rate: f64, dt: f64) -> Result<BlochVector> {
    let out = BlochVector::from_vector(v);
    if !out.is_finite() {
        return Err(Error::NonFinite("Bloch vector after step"));
    }
    out.validated_with_slack(cartesian_slack(rate, dt))
        .map_err(|_| Error::Overshoot { radius: out.radius(), dt })
}

/// `dv = −Γ(v − z m)dt + √(2Γ₀)(m − z v)dW` with `z = v·m`.
fn detector_increment(v: &Vector3<f64>, m: &Vector3<f64>, params: &DetectorParams, dw: f64, dt: f64) -> Vector3<f64> {
    let z = v.dot(m);
    let drift = -(v - z * m) * params.total_rate();
    let diffusion = (m - z * v) * (2.0 * params.gamma0()).sqrt();
    drift * dt + diffusion * dw
}

/// One Cartesian Euler–Maruyama step with a single detector along `axis`.
pub fn step_single_detector(v: BlochVector, params: &DetectorParams, axis: Axis, n: NoiseIncrement) -> Result<BlochVector> {
    let v = v.validated()?;
    let vec = v.to_vector();
    let next = vec + detector_increment(&vec, &axis.unit(), params, n.dw, n.dt);
    finish_cartesian(next, params.total_rate(), n.dt)
}

/// One Cartesian Euler–Maruyama step with detectors along x, y and z,
/// `params[k]` and `n.dw[k]` belonging to axis `k`.
pub fn step_three_detector(v: BlochVector, params: &[DetectorParams; 3], n: VectorNoise) -> Result<BlochVector> {
    let v = v.validated()?;
    let vec = v.to_vector();
    let mut next = vec;
    for axis in Axis::ALL {
        let k = axis.index();
        next += detector_increment(&vec, &axis.unit(), &params[k], n.dw[k], n.dt);
    }
    let rate: f64 = params.iter().map(DetectorParams::total_rate).sum();
    finish_cartesian(next, rate, n.dt)
}

/// Radius of the three identical detector system:
/// `dr = 2Γ₀(1/r − r/η)dt + √(2Γ₀)(1 − r²)dW_r`.
pub fn step_radial(r: f64, params: &DetectorParams, n: NoiseIncrement) -> Result<f64> {
    if !(r > R_MIN) {
        return Err(Error::RadialSingular { r, r_min: R_MIN });
    }
    if r > 1.0 + RADIAL_SLACK {
        return Err(Error::InvalidState { radius: r, slack: RADIAL_SLACK });
    }
    let g0 = params.gamma0();
    let drift = 2.0 * g0 * (1.0 / r - r / params.eta());
    let next = r + drift * n.dt + (2.0 * g0).sqrt() * (1.0 - r * r) * n.dw;
    let next = ensure_finite(next, "radius after step")?.abs();
    if next <= 1.0 {
        Ok(next)
    } else if next <= 1.0 + cartesian_slack(3.0 * params.total_rate(), n.dt) {
        Ok(1.0)
    } else {
        Err(Error::Overshoot { radius: next, dt: n.dt })
    }
}

/// Purity of the three identical detector system:
/// `dp = 2Γ₀{1 − (2p−1)/η + 2(1−p)²}dt + 2√(2Γ₀)(1−p)√(2p−1)dW_r`.
/// A step below `p = 1/2` is reflected back.
pub fn step_purity_iso(p: f64, params: &DetectorParams, n: NoiseIncrement) -> Result<f64> {
    if !(0.5..=1.0 + RADIAL_SLACK).contains(&p) {
        return Err(Error::Domain(format!("purity {p} outside [1/2, 1]")));
    }
    let s = 1.0 - p;
    let g0 = params.gamma0();
    let drift = 2.0 * g0 * (1.0 - (2.0 * p - 1.0) / params.eta() + 2.0 * s * s);
    let noise = 2.0 * (2.0 * g0).sqrt() * s * (2.0 * p - 1.0).max(0.0).sqrt();
    let next = ensure_finite(p + drift * n.dt + noise * n.dw, "purity after step")?;
    if next < 0.5 {
        Ok(1.0 - next)
    } else if next <= 1.0 {
        Ok(next)
    } else if next <= 1.0 + RADIAL_SLACK {
        Ok(1.0)
    } else {
        Err(Error::Overshoot { radius: (2.0 * next - 1.0).sqrt(), dt: n.dt })
    }
}

/// Record increment `dR = ⟨X⟩dt + dW/√(2Γ₀)`; pass the same `dW` that drives
/// the state step.
pub fn measurement_record(expectation: f64, params: &DetectorParams, n: NoiseIncrement) -> f64 {
    expectation * n.dt + n.dw / (2.0 * params.gamma0()).sqrt()
}

/// State for the split stepper: a unit direction and the linear entropy.
/// The direction is retained at the origin so that a state can leave it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitState {
    direction: Vector3<f64>,
    s: f64,
}

impl SplitState {
    pub fn from_bloch(v: BlochVector) -> Result<Self> {
        let v = v.validated()?;
        let r = v.radius();
        let direction = if r > 0.0 { v.to_vector() / r } else { Vector3::z() };
        Ok(Self { direction, s: (0.5 * (1.0 - v.radius_squared())).max(0.0) })
    }

    pub fn to_bloch(&self) -> BlochVector {
        BlochVector::from_vector(self.direction * self.radius())
    }

    pub fn radius(&self) -> f64 {
        (1.0 - 2.0 * self.s).max(0.0).sqrt()
    }

    pub fn linear_entropy(&self) -> f64 {
        self.s
    }

    pub fn purity(&self) -> f64 {
        1.0 - self.s
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn rotated(&self, rot: &Rotation) -> Self {
        let d = rot.apply(self.direction);
        Self { direction: d / d.norm(), s: self.s }
    }
}

/// A detector in the split stepper: unit measurement axis and its rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub axis: Vector3<f64>,
    pub params: DetectorParams,
}

/// One split step for any set of detectors, `dw[k]` driving detector `k`.
/// The linear entropy follows
/// `ds = Σ_k [γ_k ρ_k² − 2Γ₀ₖ s (1 − z_k²)]dt − 2s Σ_k √(2Γ₀ₖ) z_k dW_k`
/// with `z_k = v·m_k` and `ρ_k² = r² − z_k²`; the direction follows the
/// Cartesian increment.
pub fn step_split(state: &SplitState, detectors: &[Detector], dw: &[f64], dt: f64) -> Result<SplitState> {
    debug_assert_eq!(detectors.len(), dw.len());
    let s = state.s;
    let r2 = 1.0 - 2.0 * s;
    let v = state.direction * r2.max(0.0).sqrt();
    let mut ds = 0.0;
    let mut dv = Vector3::zeros();
    for (det, &w) in detectors.iter().zip(dw) {
        let z = v.dot(&det.axis);
        let g0 = det.params.gamma0();
        let rho2 = (r2 - z * z).max(0.0);
        ds += (det.params.gamma() * rho2 - 2.0 * g0 * s * (1.0 - z * z)) * dt - 2.0 * s * (2.0 * g0).sqrt() * z * w;
        dv += detector_increment(&v, &det.axis, &det.params, w, dt);
    }
    let mut next_s = ensure_finite(s + ds, "linear entropy after step")?;
    if next_s > 0.5 {
        next_s = 1.0 - next_s;
    }
    if next_s < 0.0 {
        if next_s >= -RADIAL_SLACK {
            next_s = 0.0;
        } else {
            return Err(Error::Overshoot { radius: (1.0 - 2.0 * next_s).sqrt(), dt });
        }
    }
    let moved = v + dv;
    let norm = moved.norm();
    let direction = if norm > 0.0 && norm.is_finite() { moved / norm } else { state.direction };
    Ok(SplitState { direction, s: next_s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GaussianNoise, NoiseSource, PathNoise};

    fn ideal() -> DetectorParams {
        DetectorParams::ideal(1.0).unwrap()
    }

    fn three(params: DetectorParams) -> Vec<Detector> {
        Axis::ALL.iter().map(|a| Detector { axis: a.unit(), params }).collect()
    }

    #[test]
    fn single_detector_examples() {
        let p = ideal();
        let out = step_single_detector(BlochVector::ORIGIN, &p, Axis::Z, NoiseIncrement::new(0.03, 1e-3)).unwrap();
        assert_eq!(out, BlochVector::new(0.0, 0.0, 2f64.sqrt() * 0.03));
        let pole = BlochVector::new(0.0, 0.0, 1.0);
        for dw in [-0.1, 0.0, 0.07] {
            assert_eq!(step_single_detector(pole, &p, Axis::Z, NoiseIncrement::new(dw, 1e-3)).unwrap(), pole);
        }
        let half = DetectorParams::with_efficiency(1.0, 0.5).unwrap();
        let out = step_single_detector(BlochVector::new(1.0, 0.0, 0.0), &half, Axis::Z, NoiseIncrement::new(0.0, 1e-3)).unwrap();
        assert!((out.x - (1.0 - 2.0 * 1e-3)).abs() < 1e-15);
    }

    #[test]
    fn single_detector_other_axes_permute() {
        let p = ideal();
        let n = NoiseIncrement::new(0.02, 1e-3);
        let z = step_single_detector(BlochVector::new(0.3, 0.1, 0.4), &p, Axis::Z, n).unwrap();
        let x = step_single_detector(BlochVector::new(0.4, 0.3, 0.1), &p, Axis::X, n).unwrap();
        assert!((z.z - x.x).abs() < 1e-15 && (z.x - x.y).abs() < 1e-15 && (z.y - x.z).abs() < 1e-15);
    }

    #[test]
    fn large_overshoot_is_an_error() {
        let p = ideal();
        let res = step_single_detector(BlochVector::new(0.0, 0.0, 0.9), &p, Axis::Z, NoiseIncrement::new(0.5, 1e-3));
        assert!(matches!(res, Err(Error::Overshoot { .. })));
    }

    #[test]
    fn three_detector_origin_is_pure_diffusion() {
        let p = ideal();
        let out = step_three_detector(BlochVector::ORIGIN, &[p; 3], VectorNoise::new([0.01, -0.02, 0.03], 1e-3)).unwrap();
        let k = 2f64.sqrt();
        assert_eq!(out, BlochVector::new(k * 0.01, k * -0.02, k * 0.03));
    }

    #[test]
    fn three_detector_matches_vector_form() {
        // Identical detectors: dv = −2Γ v dt + √(2Γ₀)(I − v vᵀ)dW.
        let p = DetectorParams::with_efficiency(1.0, 0.8).unwrap();
        let v = BlochVector::new(0.2, -0.3, 0.5);
        let dw = [0.01, 0.02, -0.015];
        let dt = 1e-3;
        let out = step_three_detector(v, &[p; 3], VectorNoise::new(dw, dt)).unwrap();
        let vv = v.to_vector();
        let w = Vector3::from(dw);
        let expected = vv - 2.0 * p.total_rate() * vv * dt + (w - vv * vv.dot(&w)) * 2f64.sqrt();
        assert!((out.to_vector() - expected).norm() < 1e-15);
    }

    #[test]
    fn radial_examples() {
        let p = ideal();
        assert_eq!(step_radial(1.0, &p, NoiseIncrement::new(0.05, 1e-3)).unwrap(), 1.0);
        let eta = 0.81;
        let q = DetectorParams::with_efficiency(1.0, eta).unwrap();
        let r = step_radial(0.9, &q, NoiseIncrement::new(0.0, 1e-3)).unwrap();
        assert!((r - 0.9).abs() < 1e-15);
        assert!(matches!(step_radial(1e-7, &p, NoiseIncrement::new(0.0, 1e-3)), Err(Error::RadialSingular { .. })));
    }

    #[test]
    fn purity_iso_examples() {
        let p = ideal();
        assert_eq!(step_purity_iso(1.0, &p, NoiseIncrement::new(0.3, 1e-3)).unwrap(), 1.0);
        // At p = 1/2 only the drift 2Γ₀(1 + 1/2) = 3Γ₀ acts.
        let out = step_purity_iso(0.5, &p, NoiseIncrement::new(0.3, 1e-3)).unwrap();
        assert!((out - (0.5 + 3e-3)).abs() < 1e-15);
        let low = step_purity_iso(0.5 + 1e-6, &p, NoiseIncrement::new(-100.0, 1e-3)).unwrap();
        assert!((0.5..=1.0).contains(&low));
    }

    #[test]
    fn measurement_record_examples() {
        let p = ideal();
        assert_eq!(measurement_record(1.0, &p, NoiseIncrement::new(0.0, 1e-3)), 1e-3);
        assert_eq!(measurement_record(0.0, &p, NoiseIncrement::new(0.02, 1e-3)), 0.02 / 2f64.sqrt());
    }

    #[test]
    fn split_step_reduces_to_purity_step() {
        let p = DetectorParams::with_efficiency(1.0, 0.9).unwrap();
        let dets = three(p);
        let mut noise = GaussianNoise::new(5, 0);
        let mut state = SplitState::from_bloch(BlochVector::new(0.1, 0.4, -0.2)).unwrap();
        for _ in 0..200 {
            let n = noise.next_increment(1e-3).unwrap();
            let dw_r = state.direction().dot(&Vector3::from(n.dw));
            let expected = step_purity_iso(state.purity(), &p, NoiseIncrement::new(dw_r, 1e-3)).unwrap();
            state = step_split(&state, &dets, &n.dw, 1e-3).unwrap();
            assert!((state.purity() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn split_step_keeps_pure_states_pure() {
        let dets = three(ideal());
        let mut noise = GaussianNoise::new(9, 0);
        let mut state = SplitState::from_bloch(BlochVector::new(0.6, 0.0, 0.8)).unwrap();
        for _ in 0..1000 {
            let n = noise.next_increment(1e-2).unwrap();
            state = step_split(&state, &dets, &n.dw, 1e-2).unwrap();
            assert_eq!(state.linear_entropy(), 0.0);
            assert!((state.direction().norm() - 1.0).abs() < 1e-12);
        }
    }

    /// Runs both schemes over one Brownian path and returns the final gap.
    fn scheme_gap(path: &PathNoise, p: DetectorParams, steps: usize) -> f64 {
        let dets = three(p);
        let v0 = BlochVector::new(0.3, 0.2, 0.1);
        let mut split = SplitState::from_bloch(v0).unwrap();
        let mut cart = v0;
        let mut noise = path.clone();
        for _ in 0..steps {
            let n = noise.next_increment(path.dt()).unwrap();
            split = step_split(&split, &dets, &n.dw, n.dt).unwrap();
            cart = step_three_detector(cart, &[p; 3], n).unwrap();
        }
        (split.to_bloch().to_vector() - cart.to_vector()).norm()
    }

    #[test]
    fn split_and_cartesian_converge_together() {
        let p = DetectorParams::with_efficiency(1.0, 0.95).unwrap();
        let mut rng = crate::noise::trajectory_rng(7, 0);
        let mut path = PathNoise::sample(2, 0, 100, 1e-3);
        let coarse = scheme_gap(&path, p, 100);
        for _ in 0..4 {
            path = path.refine(&mut rng);
        }
        let fine = scheme_gap(&path, p, 1600);
        assert!(coarse < 0.1, "{coarse}");
        assert!(fine < 0.4 * coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn dt_cap() {
        assert!(check_dt(1e-2, 1.0).is_ok());
        assert!(check_dt(2e-2, 1.0).is_err());
        assert!(check_dt(0.0, 1.0).is_err());
    }
}
