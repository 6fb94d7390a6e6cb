use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Rates of one continuous detector: measurement rate Γ₀ and the extra
/// dephasing γ that makes it inefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    gamma0: f64,
    gamma: f64,
    eta: f64,
}

impl DetectorParams {
    pub fn new(gamma0: f64, gamma: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {gamma0}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { gamma0, gamma, eta: gamma0 / (gamma0 + gamma) })
    }

    pub fn ideal(gamma0: f64) -> Result<Self> {
        Self::new(gamma0, 0.0)
    }

    /// Parametrize by efficiency; `eta` is stored as given so `delta` is
    /// exactly `1 − eta`.
    pub fn with_efficiency(gamma0: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
        }
        let mut params = Self::new(gamma0, gamma0 * (1.0 / eta - 1.0))?;
        params.eta = eta;
        Ok(params)
    }

    pub fn with_inefficiency(gamma0: f64, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
        }
        Self::with_efficiency(gamma0, 1.0 - delta)
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Total decoherence rate Γ = Γ₀ + γ = Γ₀/η.
    pub fn total_rate(&self) -> f64 {
        self.gamma0 / self.eta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.eta
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0
    }
}

/// Measurement axis of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
        }
    }
}
