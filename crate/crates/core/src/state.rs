//! Qubit states in the Bloch picture, purity and entropy functionals, and
//! rotations of the Bloch ball.

use nalgebra::{Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Radial slack: an integrator step may leave the Bloch ball by at most
/// this much before it is treated as an error.
pub const RADIAL_SLACK: f64 = 1e-9;

/// A qubit state as Cartesian Bloch components, with `x = 2 Re ρ₁₂`,
/// `y = 2 Im ρ₁₂` and `z = ρ₁₁ − ρ₂₂`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Builds a vector and checks it lies inside the (slightly padded) ball.
    pub fn checked(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(x, y, z).validated()
    }

    /// The point at radius `r` in the direction given by polar angle `theta`
    /// (from +z) and azimuth `phi`.
    pub fn from_polar(r: f64, theta: f64, phi: f64) -> Self {
        Self::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos())
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn radius_squared(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn radius(self) -> f64 {
        self.radius_squared().sqrt()
    }

    /// Polar angle from the +z axis, in `[0, π]`.
    pub fn theta(self) -> f64 {
        self.x.hypot(self.y).atan2(self.z)
    }

    /// Azimuth in `(−π, π]`.
    pub fn phi(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dot(self, other: BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.x, k * self.y, k * self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns the vector if `r ≤ 1`, projects it onto the sphere if
    /// `1 < r ≤ 1 + τ_r`, and fails otherwise.
    pub fn validated(self) -> Result<Self> {
        self.validated_with_slack(RADIAL_SLACK)
    }

    pub(crate) fn validated_with_slack(self, slack: f64) -> Result<Self> {
        if !self.is_finite() {
            return Err(Error::NonFinite("Bloch vector"));
        }
        let r = self.radius();
        if r <= 1.0 {
            Ok(self)
        } else if r <= 1.0 + slack {
            Ok(self.scale(1.0 / r))
        } else {
            Err(Error::InvalidState { radius: r, slack })
        }
    }
}

/// Purity `p`, linear entropy `s = 1 − p` and `ln s` of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurityState {
    pub p: f64,
    pub s: f64,
}

impl PurityState {
    pub fn from_purity(p: f64) -> Self {
        Self { p, s: 1.0 - p }
    }

    /// Preferred near `p = 1`, where `1 − p` would lose digits.
    pub fn from_linear_entropy(s: f64) -> Self {
        Self { p: 1.0 - s, s }
    }

    pub fn from_bloch(v: BlochVector) -> Self {
        Self::from_linear_entropy(0.5 * (1.0 - v.radius_squared()))
    }

    /// `ln s`; `-inf` for a pure state.
    pub fn log_s(self) -> f64 {
        self.s.ln()
    }
}

/// `Tr ρ² = (1 + r²)/2`.
pub fn purity(v: BlochVector) -> Result<f64> {
    let v = v.validated()?;
    Ok(0.5 * (1.0 + v.radius_squared()))
}

/// Von Neumann entropy in nats, `−Σ λ ln λ` with `λ± = (1 ± r)/2`.
pub fn von_neumann_entropy(v: BlochVector) -> Result<f64> {
    let r = v.validated()?.radius().min(1.0);
    let term = |lambda: f64| if lambda > 0.0 { -lambda * lambda.ln() } else { 0.0 };
    Ok(term(0.5 * (1.0 + r)) + term(0.5 * (1.0 - r)))
}

/// A proper rotation of the Bloch ball. Backed by a unit quaternion, so
/// composition is associative and stays orthogonal under repeated use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    q: UnitQuaternion<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Self { q: UnitQuaternion::identity() }
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule). A zero
    /// axis is rejected.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        let axis = Unit::try_new(axis, 1e-300).ok_or(Error::DegenerateDirection)?;
        Ok(Self { q: UnitQuaternion::from_axis_angle(&axis, angle) })
    }

    pub fn angle(&self) -> f64 {
        self.q.angle()
    }

    /// The rotation axis, or `None` for the identity.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        self.q.axis().map(|a| a.into_inner())
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Rotation) -> Rotation {
        Rotation { q: next.q * self.q }
    }

    pub fn inverse(&self) -> Rotation {
        Rotation { q: self.q.inverse() }
    }

    pub fn apply(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }

    pub fn is_identity(&self) -> bool {
        self.q.angle() == 0.0
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn rotate(v: BlochVector, rot: &Rotation) -> BlochVector {
    BlochVector::from_vector(rot.apply(v.to_vector()))
}

/// What [`align_rotation`] should achieve relative to the target axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    /// Point the state along the target axis.
    Parallel,
    /// Turn the state into the plane orthogonal to the target axis, by the
    /// smallest rotation.
    Perpendicular,
}

/// The smallest rotation that brings `v` parallel or perpendicular to
/// `target`. Fails with a degenerate-direction error at `r = 0`.
pub fn align_rotation(v: BlochVector, target: Vector3<f64>, mode: AlignMode) -> Result<Rotation> {
    let from = Unit::try_new(v.to_vector(), 0.0).ok_or(Error::DegenerateDirection)?;
    let target = Unit::try_new(target, 0.0).ok_or(Error::DegenerateDirection)?;
    let to = match mode {
        AlignMode::Parallel => target,
        AlignMode::Perpendicular => {
            let along = from.dot(&target);
            if along == 0.0 {
                return Ok(Rotation::identity());
            }
            let rest = from.into_inner() - along * target.into_inner();
            match Unit::try_new(rest, 1e-300) {
                Some(dir) => dir,
                None => Unit::new_normalize(any_orthogonal(target.into_inner())),
            }
        }
    };
    let q = match UnitQuaternion::rotation_between_axis(&from, &to) {
        Some(q) => q,
        // Antiparallel: any half turn about an orthogonal axis will do.
        None => UnitQuaternion::from_axis_angle(&Unit::new_normalize(any_orthogonal(from.into_inner())), std::f64::consts::PI),
    };
    Ok(Rotation { q })
}

fn any_orthogonal(v: Vector3<f64>) -> Vector3<f64> {
    let helper = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vector3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    v.cross(&helper)
}
