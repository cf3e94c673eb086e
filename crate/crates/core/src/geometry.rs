//! Uniform linear array geometry and steering vectors.
//!
//! The array lies on the x-axis, centred on the origin, with element `n`
//! (1-based) at `x = d * gamma_n` where `gamma_n = n - (N + 1) / 2`. User
//! locations live in the half-plane `y > 0`; angles are measured from the
//! array broadside (the y-axis) towards +x.
//!
//! Lengths are in arbitrary units as long as they are consistent; the
//! defaults use wavelength units (`lambda = 1`, `d = 1/2`).

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Uniform linear array: element count, carrier wavelength and spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArrayConfig", into = "RawArrayConfig")]
pub struct ArrayConfig {
    n_bs: usize,
    wavelength: f64,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArrayConfig {
    n_bs: usize,
    #[serde(default = "unit_wavelength")]
    wavelength: f64,
    #[serde(default)]
    spacing: Option<f64>,
}

fn unit_wavelength() -> f64 {
    1.0
}

impl TryFrom<RawArrayConfig> for ArrayConfig {
    type Error = Error;

    fn try_from(raw: RawArrayConfig) -> Result<Self> {
        let spacing = raw.spacing.unwrap_or(raw.wavelength / 2.0);
        ArrayConfig::new(raw.n_bs, raw.wavelength, spacing)
    }
}

impl From<ArrayConfig> for RawArrayConfig {
    fn from(cfg: ArrayConfig) -> Self {
        RawArrayConfig {
            n_bs: cfg.n_bs,
            wavelength: cfg.wavelength,
            spacing: Some(cfg.spacing),
        }
    }
}

impl ArrayConfig {
    pub fn new(n_bs: usize, wavelength: f64, spacing: f64) -> Result<Self> {
        if n_bs < 2 {
            return Err(Error::InvalidArray("at least two antennas are required"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidArray("wavelength must be positive"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArray("element spacing must be positive"));
        }
        Ok(Self {
            n_bs,
            wavelength,
            spacing,
        })
    }

    /// Half-wavelength array in wavelength units (`lambda = 1`, `d = 0.5`).
    pub fn half_wavelength(n_bs: usize) -> Result<Self> {
        Self::new(n_bs, 1.0, 0.5)
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Element offset `gamma_n = n - (N + 1) / 2` for a 1-based index.
    pub fn element_offset(&self, n: usize) -> Result<f64> {
        self.check_element(n)?;
        Ok(self.offset_unchecked(n))
    }

    #[inline]
    fn offset_unchecked(&self, n: usize) -> f64 {
        n as f64 - (self.n_bs as f64 + 1.0) / 2.0
    }

    fn check_element(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_bs {
            return Err(Error::IndexOutOfRange {
                what: "element",
                index: n,
                max: self.n_bs,
            });
        }
        Ok(())
    }

    /// Rayleigh distance `2 N^2 d^2 / lambda`.
    pub fn rayleigh_distance(&self) -> f64 {
        let n = self.n_bs as f64;
        2.0 * n * n * self.spacing * self.spacing / self.wavelength
    }
}

/// Location in polar form: angle from broadside (radians) and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolar", into = "RawPolar")]
pub struct PolarCoord {
    angle: f64,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolar {
    angle: f64,
    radius: f64,
}

impl TryFrom<RawPolar> for PolarCoord {
    type Error = Error;

    fn try_from(raw: RawPolar) -> Result<Self> {
        PolarCoord::new(raw.angle, raw.radius)
    }
}

impl From<PolarCoord> for RawPolar {
    fn from(p: PolarCoord) -> Self {
        RawPolar {
            angle: p.angle,
            radius: p.radius,
        }
    }
}

impl PolarCoord {
    /// Angle must lie in `[-pi/2, pi/2)` and the radius must be positive.
    pub fn new(angle: f64, radius: f64) -> Result<Self> {
        if !(-FRAC_PI_2..FRAC_PI_2).contains(&angle) {
            return Err(Error::InvalidCoordinate("angle outside [-pi/2, pi/2)"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidCoordinate("radius must be positive"));
        }
        Ok(Self { angle, radius })
    }

    /// Convenience constructor taking the angle in degrees.
    pub fn from_degrees(angle_deg: f64, radius: f64) -> Result<Self> {
        Self::new(angle_deg * PI / 180.0, radius)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianCoord {
    pub x: f64,
    pub y: f64,
}

pub fn polar_to_cartesian(p: PolarCoord) -> CartesianCoord {
    CartesianCoord {
        x: p.radius * libm::sin(p.angle),
        y: p.radius * libm::cos(p.angle),
    }
}

pub fn cartesian_to_polar(c: CartesianCoord) -> Result<PolarCoord> {
    let radius = libm::hypot(c.x, c.y);
    if radius == 0.0 {
        return Err(Error::DegenerateOrigin);
    }
    if !(c.y > 0.0) {
        return Err(Error::OutsideHalfPlane);
    }
    PolarCoord::new(libm::atan(c.x / c.y), radius)
}

/// Distance from location `p` to element `n` (1-based).
pub fn element_distance(cfg: &ArrayConfig, p: PolarCoord, n: usize) -> Result<f64> {
    let gamma = cfg.element_offset(n)?;
    let dg = cfg.spacing * gamma;
    Ok(libm::sqrt(
        p.radius * p.radius + dg * dg - 2.0 * dg * p.radius * libm::sin(p.angle),
    ))
}

/// Unit-norm array response with entries of modulus `1/sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<C64>);

impl SteeringVector {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[C64]> for SteeringVector {
    fn as_ref(&self) -> &[C64] {
        &self.0
    }
}

/// Near-field (spherical-wave) steering vector, entry `n` equal to
/// `exp(-j 2 pi rho_n / lambda) / sqrt(N)`.
///
/// The range is split as `rho_n = rho + delta_n` with `delta_n` computed in
/// a cancellation-free form, so the phase stays accurate far beyond the
/// Rayleigh distance.
pub fn nearfield_steering(cfg: &ArrayConfig, p: PolarCoord) -> SteeringVector {
    let n_bs = cfg.n_bs;
    let scale = 1.0 / libm::sqrt(n_bs as f64);
    let sin_phi = libm::sin(p.angle);
    let rho = p.radius;
    // common phase reduced modulo one wavelength
    let base = rho / cfg.wavelength;
    let base = base - libm::floor(base);
    let entries = (1..=n_bs)
        .map(|n| {
            let dg = cfg.spacing * cfg.offset_unchecked(n);
            let under = rho * rho + dg * dg - 2.0 * dg * rho * sin_phi;
            let delta = (dg * dg - 2.0 * dg * rho * sin_phi) / (libm::sqrt(under) + rho);
            let phase = -2.0 * PI * (base + delta / cfg.wavelength);
            C64::from_polar(scale, phase)
        })
        .collect();
    SteeringVector(entries)
}

/// Planar-wave steering vector, entry `n` equal to
/// `exp(+j 2 pi d gamma_n sin(phi) / lambda) / sqrt(N)`.
///
/// The phase reference is the array centre, which matches the near-field
/// vector up to the common factor `exp(-j 2 pi rho / lambda)`.
pub fn farfield_steering(cfg: &ArrayConfig, angle: f64) -> SteeringVector {
    let n_bs = cfg.n_bs;
    let scale = 1.0 / libm::sqrt(n_bs as f64);
    let k = 2.0 * PI * cfg.spacing * libm::sin(angle) / cfg.wavelength;
    SteeringVector(
        (1..=n_bs)
            .map(|n| C64::from_polar(scale, k * cfg.offset_unchecked(n)))
            .collect(),
    )
}

pub fn rayleigh_distance(cfg: &ArrayConfig) -> f64 {
    cfg.rayleigh_distance()
}
