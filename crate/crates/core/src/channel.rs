//! Spherical-wave multipath channels and random multiuser scenarios.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{nearfield_steering, ArrayConfig, PolarCoord};
use crate::linalg::dot;
use crate::metrics::BeamformerMatrix;
use crate::{Error, Result, C64};

/// One propagation path: complex gain and the polar location of the UE
/// (first path) or a scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPath", into = "RawPath")]
pub struct PathComponent {
    pub gain: C64,
    pub location: PolarCoord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    gain_re: f64,
    gain_im: f64,
    location: PolarCoord,
}

impl From<RawPath> for PathComponent {
    fn from(raw: RawPath) -> Self {
        PathComponent {
            gain: C64::new(raw.gain_re, raw.gain_im),
            location: raw.location,
        }
    }
}

impl From<PathComponent> for RawPath {
    fn from(p: PathComponent) -> Self {
        RawPath {
            gain_re: p.gain.re,
            gain_im: p.gain.im,
            location: p.location,
        }
    }
}

/// `h = sqrt(N / L) * sum_l alpha_l u(phi_l, rho_l)`
pub fn synthesize_channel(cfg: &ArrayConfig, paths: &[PathComponent]) -> Result<Vec<C64>> {
    if paths.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let n_bs = cfg.n_bs();
    let scale = libm::sqrt(n_bs as f64 / paths.len() as f64);
    let mut h = alloc::vec![C64::new(0.0, 0.0); n_bs];
    for path in paths {
        let u = nearfield_steering(cfg, path.location);
        let g = path.gain * scale;
        for (hn, un) in h.iter_mut().zip(u.as_slice()) {
            *hn += g * un;
        }
    }
    Ok(h)
}

/// Channel of one user together with the paths it was synthesized from.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    paths: Vec<PathComponent>,
    vector: Vec<C64>,
}

impl UserChannel {
    pub fn new(cfg: &ArrayConfig, paths: Vec<PathComponent>) -> Result<Self> {
        let vector = synthesize_channel(cfg, &paths)?;
        Ok(Self { paths, vector })
    }

    /// Pairs a precomputed vector with its paths, verifying the synthesis.
    pub fn with_vector(cfg: &ArrayConfig, paths: Vec<PathComponent>, vector: Vec<C64>) -> Result<Self> {
        let expected = synthesize_channel(cfg, &paths)?;
        if expected.len() != vector.len() {
            return Err(Error::DimensionMismatch {
                expected: expected.len(),
                got: vector.len(),
            });
        }
        let scale = crate::linalg::norm(&expected).max(1.0);
        if libm::sqrt(crate::linalg::distance_sqr(&expected, &vector)) > 1e-9 * scale {
            return Err(Error::InconsistentChannel);
        }
        Ok(Self { paths, vector })
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    /// Physical UE location (the first path).
    pub fn location(&self) -> PolarCoord {
        self.paths[0].location
    }
}

impl AsRef<[C64]> for UserChannel {
    fn as_ref(&self) -> &[C64] {
        &self.vector
    }
}

/// K users served by one array.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub users: Vec<UserChannel>,
    pub seed: u64,
}

impl Scenario {
    /// Builds a scenario from per-user path lists. Every UE location must lie
    /// within the Rayleigh distance.
    pub fn new(array: ArrayConfig, user_paths: Vec<Vec<PathComponent>>, seed: u64) -> Result<Self> {
        if user_paths.is_empty() {
            return Err(Error::InvalidCount("at least one user is required"));
        }
        let rayleigh = array.rayleigh_distance();
        let users = user_paths
            .into_iter()
            .map(|paths| {
                let ch = UserChannel::new(&array, paths)?;
                let r = ch.location().radius();
                if r > rayleigh {
                    return Err(Error::OutsideNearField { radius: r, rayleigh });
                }
                Ok(ch)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { array, users, seed })
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn channels(&self) -> &[UserChannel] {
        &self.users
    }

    pub fn locations(&self) -> Vec<PolarCoord> {
        self.users.iter().map(UserChannel::location).collect()
    }
}

/// Distribution knobs for [`random_scenario_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrawParams {
    /// Lower bound on UE/scatterer range, in the array's length unit.
    pub rho_min: f64,
    /// Upper bound on range; the Rayleigh distance when `None`.
    pub rho_max: Option<f64>,
    /// Variance of the line-of-sight gain.
    pub los_variance: f64,
    /// Variance of each scattered-path gain.
    pub nlos_variance: f64,
}

impl Default for DrawParams {
    fn default() -> Self {
        Self {
            rho_min: 3.0,
            rho_max: None,
            los_variance: 1.0,
            nlos_variance: 0.01,
        }
    }
}

/// Random scenario with the default distribution (`rho_min = 3` length units).
pub fn random_scenario(cfg: &ArrayConfig, k: usize, l: usize, seed: u64) -> Result<Scenario> {
    random_scenario_with(cfg, k, l, seed, &DrawParams::default())
}

/// Angles uniform on `[-pi/2, pi/2)`, ranges uniform on `[rho_min, rho_max]`
/// (`rho_max` defaults to D_R),
/// gains `CN(0, los_variance)` for the first path and `CN(0, nlos_variance)`
/// for the rest. Draw order per user and path: angle, range, gain.
pub fn random_scenario_with(
    cfg: &ArrayConfig,
    k: usize,
    l: usize,
    seed: u64,
    params: &DrawParams,
) -> Result<Scenario> {
    if k == 0 {
        return Err(Error::InvalidCount("user count must be at least 1"));
    }
    if l == 0 {
        return Err(Error::InvalidCount("path count must be at least 1"));
    }
    let rho_max = params.rho_max.unwrap_or_else(|| cfg.rayleigh_distance());
    if !(params.rho_min > 0.0 && params.rho_min < rho_max) {
        return Err(Error::InvalidParameter("range bounds must satisfy 0 < rho_min < rho_max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut user_paths = Vec::with_capacity(k);
    for _ in 0..k {
        let mut paths = Vec::with_capacity(l);
        for idx in 0..l {
            let angle = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let radius = rng.random_range(params.rho_min..=rho_max);
            let variance = if idx == 0 {
                params.los_variance
            } else {
                params.nlos_variance
            };
            let gain = complex_gaussian(&mut rng, variance);
            paths.push(PathComponent {
                gain,
                location: PolarCoord::new(angle, radius)?,
            });
        }
        user_paths.push(paths);
    }
    Scenario::new(*cfg, user_paths, seed)
}

/// Sample of `CN(0, variance)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = libm::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// `y = sqrt(P) h^H F x + n`
pub fn received_signal(
    h: &[C64],
    f: &BeamformerMatrix,
    x: &[C64],
    p: f64,
    noise: C64,
) -> Result<C64> {
    if h.len() != f.n_bs() {
        return Err(Error::DimensionMismatch {
            expected: f.n_bs(),
            got: h.len(),
        });
    }
    if x.len() != f.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k(),
            got: x.len(),
        });
    }
    let mut y = C64::new(0.0, 0.0);
    for (col, xi) in f.columns().iter().zip(x) {
        y += dot(h, col) * xi;
    }
    Ok(y * libm::sqrt(p) + noise)
}
