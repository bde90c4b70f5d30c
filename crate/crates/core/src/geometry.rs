//! Positions, angle conventions, spatial frequencies and array responses.
//!
//! Arrays use half-wavelength spacing. A ULA with `N` elements has response
//! `a(Θ)[m] = exp(jmΘ)/√N`. A UPA with `M_v × M_h` elements has response
//! `a_v(Φ) ⊗ a_h(Θ)`, so the vertical index varies slowest.
//!
//! Every array carries an [`Orientation`]: local `x` is the boresight, local
//! `y` the horizontal (ULA) axis and local `z` the vertical axis. For a
//! direction with local physical angles `(θ, φ)` the UPA frequencies are
//! `Θ = π sinφ sinθ` and `Φ = π cosφ`; the ULA frequency is `Θ`.

use crate::{CVector, Complex64, Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Point in space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (other.to_vector() - self.to_vector()).norm()
    }
}

impl From<[f64; 3]> for Position {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Position> for [f64; 3] {
    fn from(p: Position) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Spatial frequency of a ULA, `Θ = π sinθ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlaFrequency {
    pub theta_cap: f64,
}

impl UlaFrequency {
    pub const fn new(theta_cap: f64) -> Self {
        Self { theta_cap }
    }

    /// Frequency seen along the local horizontal axis.
    pub fn from_angles(angles: &PhysicalAngles) -> Self {
        Self::new(PI * angles.phi.sin() * angles.theta.sin())
    }
}

/// Spatial frequencies of a UPA, `Θ = π sinφ sinθ` and `Φ = π cosφ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaFrequency {
    pub theta_cap: f64,
    pub phi_cap: f64,
}

impl UpaFrequency {
    pub const fn new(theta_cap: f64, phi_cap: f64) -> Self {
        Self { theta_cap, phi_cap }
    }

    pub fn from_angles(angles: &PhysicalAngles) -> Self {
        Self::new(
            PI * angles.phi.sin() * angles.theta.sin(),
            PI * angles.phi.cos(),
        )
    }

    /// Local direction on the front hemisphere (`x ≥ 0`) that produces these
    /// frequencies. Frequencies outside the visible region are projected onto
    /// its boundary.
    pub fn local_direction(&self) -> Vector3<f64> {
        let mut y = self.theta_cap / PI;
        let mut z = self.phi_cap / PI;
        let r2 = y * y + z * z;
        if r2 > 1.0 {
            let r = r2.sqrt();
            y /= r;
            z /= r;
        }
        let x = (1.0 - y * y - z * z).max(0.0).sqrt();
        Vector3::new(x, y, z)
    }
}

/// Azimuth `theta` and elevation `phi` (measured from the vertical axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalAngles {
    pub theta: f64,
    pub phi: f64,
}

impl PhysicalAngles {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Unit direction `[sinφ cosθ, sinφ sinθ, cosφ]`.
    pub fn direction(&self) -> Vector3<f64> {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        Vector3::new(sp * ct, sp * st, cp)
    }

    /// Angles of a (not necessarily normalized) direction vector.
    pub fn from_direction(t: &Vector3<f64>) -> Result<Self> {
        let n = t.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateGeometry("zero direction vector".into()));
        }
        let u = t / n;
        Ok(Self::new(u.y.atan2(u.x), u.z.clamp(-1.0, 1.0).acos()))
    }

    /// Inverse of [`UpaFrequency::from_angles`] on the front hemisphere
    /// `θ ∈ [−π/2, π/2]`.
    pub fn from_upa(f: &UpaFrequency) -> Self {
        let phi = (f.phi_cap / PI).clamp(-1.0, 1.0).acos();
        let sp = phi.sin();
        let theta = if sp > 0.0 {
            (f.theta_cap / (PI * sp)).clamp(-1.0, 1.0).asin()
        } else {
            0.0
        };
        Self::new(theta, phi)
    }
}

/// Element layout of an antenna array or RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrayShape {
    Ula(usize),
    Upa { vertical: usize, horizontal: usize },
}

impl ArrayShape {
    pub fn elements(&self) -> usize {
        match *self {
            ArrayShape::Ula(n) => n,
            ArrayShape::Upa {
                vertical,
                horizontal,
            } => vertical * horizontal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements() == 0 {
            return Err(Error::InvalidShape(format!("{self:?} has no elements")));
        }
        Ok(())
    }
}

/// Local frame of an array expressed in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub boresight: Vector3<f64>,
    pub horizontal: Vector3<f64>,
    pub vertical: Vector3<f64>,
}

impl Default for Orientation {
    fn default() -> Self {
        Self {
            boresight: Vector3::x(),
            horizontal: Vector3::y(),
            vertical: Vector3::z(),
        }
    }
}

impl Orientation {
    /// Frame with the given boresight whose horizontal axis is level.
    pub fn facing(boresight: Vector3<f64>) -> Result<Self> {
        let x = normalized(&boresight)?;
        let y = Vector3::z().cross(&x);
        if y.norm() < 1e-12 {
            return Err(Error::DegenerateGeometry(
                "boresight parallel to the vertical axis".into(),
            ));
        }
        let y = y.normalize();
        Ok(Self {
            boresight: x,
            horizontal: y,
            vertical: x.cross(&y),
        })
    }

    /// Frame of a ULA lying along `axis`.
    pub fn along(axis: Vector3<f64>) -> Result<Self> {
        let y = normalized(&axis)?;
        let x = y.cross(&Vector3::z());
        let x = if x.norm() < 1e-12 {
            Vector3::x()
        } else {
            x.normalize()
        };
        Ok(Self {
            boresight: x,
            horizontal: y,
            vertical: x.cross(&y),
        })
    }

    pub fn to_local(&self, t: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.boresight.dot(t),
            self.horizontal.dot(t),
            self.vertical.dot(t),
        )
    }

    pub fn to_global(&self, t: &Vector3<f64>) -> Vector3<f64> {
        self.boresight * t.x + self.horizontal * t.y + self.vertical * t.z
    }

    /// UPA frequencies of a global direction.
    pub fn upa_frequency(&self, t: &Vector3<f64>) -> UpaFrequency {
        let l = self.to_local(t);
        UpaFrequency::new(PI * l.y, PI * l.z)
    }

    /// ULA frequency of a global direction.
    pub fn ula_frequency(&self, t: &Vector3<f64>) -> UlaFrequency {
        UlaFrequency::new(PI * self.horizontal.dot(t))
    }
}

fn normalized(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateGeometry("zero-length axis".into()));
    }
    Ok(v / n)
}

/// Line-of-sight relation between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    pub distance: f64,
    /// Global angles of the ray leaving `a` towards `b`.
    pub angles_at_a: PhysicalAngles,
    /// Global angles of the ray leaving `b` towards `a`.
    pub angles_at_b: PhysicalAngles,
}

pub fn los_geometry(a: &Position, b: &Position) -> Result<LosGeometry> {
    let d = b.to_vector() - a.to_vector();
    let distance = d.norm();
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry("coincident points".into()));
    }
    Ok(LosGeometry {
        distance,
        angles_at_a: PhysicalAngles::from_direction(&d)?,
        angles_at_b: PhysicalAngles::from_direction(&(-d))?,
    })
}

/// Wraps a frequency into `[−π, π)`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// ULA response without argument checks; `n = 0` gives an empty vector.
pub fn ula_steering(n: usize, x: f64) -> CVector {
    let s = 1.0 / (n.max(1) as f64).sqrt();
    CVector::from_fn(n, |m, _| Complex64::from_polar(s, m as f64 * x))
}

/// ULA response and its first two derivatives with respect to the frequency.
pub fn ula_steering_derivs(n: usize, x: f64) -> [CVector; 3] {
    let a = ula_steering(n, x);
    let j = Complex64::i();
    let d1 = CVector::from_fn(n, |m, _| a[m] * j * m as f64);
    let d2 = CVector::from_fn(n, |m, _| -a[m] * (m * m) as f64);
    [a, d1, d2]
}

pub fn ula_response(n: usize, x: UlaFrequency) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidShape("ULA needs at least one element".into()));
    }
    Ok(ula_steering(n, x.theta_cap))
}

/// UPA response `a_v(Φ) ⊗ a_h(Θ)` without argument checks.
pub fn upa_steering(vertical: usize, horizontal: usize, f: UpaFrequency) -> CVector {
    crate::linalg::kron_vec(
        &ula_steering(vertical, f.phi_cap),
        &ula_steering(horizontal, f.theta_cap),
    )
}

pub fn upa_response(shape: ArrayShape, f: UpaFrequency) -> Result<CVector> {
    match shape {
        ArrayShape::Upa {
            vertical,
            horizontal,
        } if vertical > 0 && horizontal > 0 => Ok(upa_steering(vertical, horizontal, f)),
        _ => Err(Error::InvalidShape(format!("{shape:?} is not a UPA"))),
    }
}

/// Derivatives of the UPA response: `[a, ∂Θ, ∂Φ, ∂ΘΘ, ∂ΘΦ, ∂ΦΦ]`.
pub fn upa_steering_derivs(vertical: usize, horizontal: usize, f: UpaFrequency) -> [CVector; 6] {
    use crate::linalg::kron_vec;
    let [h0, h1, h2] = ula_steering_derivs(horizontal, f.theta_cap);
    let [v0, v1, v2] = ula_steering_derivs(vertical, f.phi_cap);
    [
        kron_vec(&v0, &h0),
        kron_vec(&v0, &h1),
        kron_vec(&v1, &h0),
        kron_vec(&v0, &h2),
        kron_vec(&v1, &h1),
        kron_vec(&v2, &h0),
    ]
}
