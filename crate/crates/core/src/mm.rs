//! Majorization-minimization design of constant-modulus analog beamformers.
//!
//! Each user's column minimizes the leakage-weighted objective
//! `-|h_k^H f|^2 + omega * sum_{i != k} |h_i^H f|^2` over `|f_n| = 1/sqrt(N)`.
//! Every iteration replaces the objective by a linear majorizer and solves
//! it in closed form by phase alignment.
//!
//! With codeword-level CSI the single channel of each user is replaced by
//! the set of steering vectors at its auxiliary points.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::codebook::{CodewordIndex, PolarCodebook};
use crate::geometry::SteeringVector;
use crate::linalg::{distance_sqr, dot, norm_sqr};
use crate::metrics::{BeamformerKind, BeamformerMatrix};
use crate::{Error, Result, C64};

/// Diagonal loading `mu` that turns the interference quadratic form into a
/// negative semidefinite one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    /// One value for every term. Perfect CSI: `mu = max_{i != k} ||h_i||^2`.
    /// Auxiliary points: `mu = 1/N`, which is below `||u||^2 = 1` and does
    /// not majorize.
    Shared,
    /// `mu = ||v||^2` for every rank-one term `v v^H`.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MMConfig {
    pub omega: f64,
    pub epsilon: f64,
    pub t_max: usize,
    pub mu_mode: MuMode,
}

impl Default for MMConfig {
    fn default() -> Self {
        Self {
            omega: 1000.0,
            epsilon: 1e-9,
            t_max: 1000,
            mu_mode: MuMode::Spectral,
        }
    }
}

impl MMConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter("omega must be finite and non-negative"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive"));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidParameter("t_max must be at least 1"));
        }
        Ok(())
    }
}

/// Per-user optimization record.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrace {
    pub iterations_used: usize,
    pub converged: bool,
    /// Objective at the initial point followed by one value per update.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MMReport {
    pub users: Vec<UserTrace>,
}

impl MMReport {
    pub fn converged_count(&self) -> usize {
        self.users.iter().filter(|u| u.converged).count()
    }

    pub fn all_converged(&self) -> bool {
        self.users.iter().all(|u| u.converged)
    }

    /// Largest objective increase between consecutive iterates relative to
    /// the magnitude of the earlier value; non-positive for a descending run.
    pub fn max_relative_increase(&self) -> f64 {
        self.users
            .iter()
            .flat_map(|u| u.objective_trace.windows(2))
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-user groups of rank-one directions with their diagonal loadings.
struct Model<'a> {
    groups: Vec<Vec<&'a [C64]>>,
    mus: Vec<Vec<f64>>,
    n: usize,
}

impl<'a> Model<'a> {
    fn new(groups: Vec<Vec<&'a [C64]>>, mus: Vec<Vec<f64>>) -> Result<Self> {
        let n = groups
            .iter()
            .flatten()
            .next()
            .map(|v| v.len())
            .ok_or(Error::InvalidCount("at least one user is required"))?;
        for v in groups.iter().flatten() {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(Self { groups, mus, n })
    }

    fn check(&self, f: &[C64], k: usize) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        if k >= self.groups.len() {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: k,
                max: self.groups.len(),
            });
        }
        Ok(())
    }

    fn objective(&self, f: &[C64], k: usize, omega: f64) -> f64 {
        let mut own = 0.0;
        let mut leak = 0.0;
        for (i, group) in self.groups.iter().enumerate() {
            let power: f64 = group.iter().map(|v| dot(v, f).norm_sqr()).sum();
            if i == k {
                own += power;
            } else {
                leak += power;
            }
        }
        -own + omega * leak
    }

    /// `(zeta_1 - omega * zeta_2) f`
    fn direction(&self, f: &[C64], k: usize, omega: f64) -> Vec<C64> {
        let mut g = vec![C64::new(0.0, 0.0); self.n];
        let mut loading = 0.0;
        for (i, (group, mus)) in self.groups.iter().zip(&self.mus).enumerate() {
            let weight = if i == k { 1.0 } else { -omega };
            for (v, &mu) in group.iter().zip(mus) {
                let c = dot(v, f) * weight;
                for (gn, vn) in g.iter_mut().zip(v.iter()) {
                    *gn += vn * c;
                }
                if i != k {
                    loading += mu;
                }
            }
        }
        let loading = omega * loading;
        for (gn, fn_) in g.iter_mut().zip(f) {
            *gn += fn_ * loading;
        }
        g
    }

    fn update(&self, f: &[C64], k: usize, omega: f64) -> Vec<C64> {
        let g = self.direction(f, k, omega);
        let amp = 1.0 / libm::sqrt(self.n as f64);
        g.iter()
            .zip(f)
            .map(|(gn, prev)| {
                if *gn == C64::new(0.0, 0.0) {
                    prev.unscale(prev.norm()) * amp
                } else {
                    gn.unscale(gn.norm()) * amp
                }
            })
            .collect()
    }

    /// Majorizer of the objective around `f_t`, evaluated at `f`.
    fn surrogate(&self, f: &[C64], f_t: &[C64], k: usize, omega: f64) -> f64 {
        let mut value = 0.0;
        let f_sq = norm_sqr(f);
        let ft_sq = norm_sqr(f_t);
        for (i, (group, mus)) in self.groups.iter().zip(&self.mus).enumerate() {
            for (v, &mu) in group.iter().zip(mus) {
                let a = dot(v, f_t);
                let b = dot(v, f);
                // 2 Re(f_t^H v v^H f) - |v^H f_t|^2
                let lin = 2.0 * (a.conj() * b).re - a.norm_sqr();
                if i == k {
                    value -= lin;
                } else {
                    value += omega * (lin - mu * (2.0 * dot(f_t, f).re - ft_sq) + mu * f_sq);
                }
            }
        }
        value
    }

    fn run(&self, init: Vec<C64>, k: usize, cfg: &MMConfig) -> (Vec<C64>, UserTrace) {
        let mut f = init;
        let mut trace = Vec::with_capacity(cfg.t_max.min(1024) + 1);
        trace.push(self.objective(&f, k, cfg.omega));
        let mut converged = false;
        let mut t = 0;
        while t < cfg.t_max {
            t += 1;
            let next = self.update(&f, k, cfg.omega);
            let step = distance_sqr(&next, &f);
            f = next;
            trace.push(self.objective(&f, k, cfg.omega));
            if step <= cfg.epsilon {
                converged = true;
                break;
            }
        }
        (
            f,
            UserTrace {
                iterations_used: t,
                converged,
                objective_trace: trace,
            },
        )
    }
}

fn perfect_model<H: AsRef<[C64]>>(h_all: &[H], k: usize, mode: MuMode) -> Result<Model<'_>> {
    let groups: Vec<Vec<&[C64]>> = h_all.iter().map(|h| vec![h.as_ref()]).collect();
    let mus = match mode {
        MuMode::Spectral => h_all.iter().map(|h| vec![norm_sqr(h.as_ref())]).collect(),
        MuMode::Shared => {
            let shared = h_all
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, h)| norm_sqr(h.as_ref()))
                .fold(0.0, f64::max);
            vec![vec![shared]; h_all.len()]
        }
    };
    Model::new(groups, mus)
}

fn imperfect_model(aux: &[Vec<SteeringVector>], mode: MuMode) -> Result<Model<'_>> {
    if aux.iter().any(|g| g.is_empty()) {
        return Err(Error::EmptyGrid);
    }
    let groups: Vec<Vec<&[C64]>> = aux.iter().map(|g| g.iter().map(|u| u.as_slice()).collect()).collect();
    let mus = aux
        .iter()
        .map(|g| {
            g.iter()
                .map(|u| match mode {
                    MuMode::Spectral => norm_sqr(u.as_slice()),
                    MuMode::Shared => 1.0 / u.len() as f64,
                })
                .collect()
        })
        .collect();
    Model::new(groups, mus)
}

/// `-|h_k^H f|^2 + omega * sum_{i != k} |h_i^H f|^2`
pub fn slnr_objective<H: AsRef<[C64]>>(h_all: &[H], f_col: &[C64], k: usize, omega: f64) -> Result<f64> {
    let model = perfect_model(h_all, k, MuMode::Spectral)?;
    model.check(f_col, k)?;
    Ok(model.objective(f_col, k, omega))
}

/// Auxiliary-point analogue: `-sum |u_k^H f|^2 + omega * sum_{i != k} sum |u_i^H f|^2`.
pub fn auxiliary_objective(aux: &[Vec<SteeringVector>], f_col: &[C64], k: usize, omega: f64) -> Result<f64> {
    let model = imperfect_model(aux, MuMode::Spectral)?;
    model.check(f_col, k)?;
    Ok(model.objective(f_col, k, omega))
}

/// Value at `f` of the majorizer built around `f_t` for perfect CSI.
pub fn slnr_surrogate<H: AsRef<[C64]>>(
    h_all: &[H],
    f: &[C64],
    f_t: &[C64],
    k: usize,
    cfg: &MMConfig,
) -> Result<f64> {
    let model = perfect_model(h_all, k, cfg.mu_mode)?;
    model.check(f, k)?;
    model.check(f_t, k)?;
    Ok(model.surrogate(f, f_t, k, cfg.omega))
}

/// `(eta_1 - omega * eta_2) f` for perfect CSI.
pub fn update_direction<H: AsRef<[C64]>>(h_all: &[H], f_col: &[C64], k: usize, cfg: &MMConfig) -> Result<Vec<C64>> {
    let model = perfect_model(h_all, k, cfg.mu_mode)?;
    model.check(f_col, k)?;
    Ok(model.direction(f_col, k, cfg.omega))
}

/// `(zeta_1 - omega * zeta_2) f` for auxiliary-point CSI.
pub fn update_direction_imperfect(
    aux: &[Vec<SteeringVector>],
    f_col: &[C64],
    k: usize,
    cfg: &MMConfig,
) -> Result<Vec<C64>> {
    let model = imperfect_model(aux, cfg.mu_mode)?;
    model.check(f_col, k)?;
    Ok(model.direction(f_col, k, cfg.omega))
}

/// One closed-form MM update with perfect CSI. A zero entry of the update
/// direction keeps the previous phase.
pub fn mm_update_perfect<H: AsRef<[C64]>>(h_all: &[H], f_col: &[C64], k: usize, cfg: &MMConfig) -> Result<Vec<C64>> {
    let model = perfect_model(h_all, k, cfg.mu_mode)?;
    model.check(f_col, k)?;
    Ok(model.update(f_col, k, cfg.omega))
}

/// One closed-form MM update with auxiliary-point CSI.
pub fn mm_update_imperfect(
    aux: &[Vec<SteeringVector>],
    f_col: &[C64],
    k: usize,
    cfg: &MMConfig,
) -> Result<Vec<C64>> {
    let model = imperfect_model(aux, cfg.mu_mode)?;
    model.check(f_col, k)?;
    Ok(model.update(f_col, k, cfg.omega))
}

/// Constant-modulus vector with the phases of `h`; zero entries get phase 0.
pub fn conjugate_phase(h: &[C64]) -> Vec<C64> {
    let amp = 1.0 / libm::sqrt(h.len() as f64);
    h.iter()
        .map(|z| {
            if *z == C64::new(0.0, 0.0) {
                C64::new(amp, 0.0)
            } else {
                z.unscale(z.norm()) * amp
            }
        })
        .collect()
}

/// Analog-only design with full channel knowledge; every user starts at its
/// conjugate-phase beamformer.
pub fn aobf_perfect_csi<H: AsRef<[C64]>>(h_all: &[H], cfg: &MMConfig) -> Result<(BeamformerMatrix, MMReport)> {
    cfg.validate()?;
    let mut columns = Vec::with_capacity(h_all.len());
    let mut report = MMReport::default();
    for k in 0..h_all.len() {
        let model = perfect_model(h_all, k, cfg.mu_mode)?;
        let (f, trace) = model.run(conjugate_phase(h_all[k].as_ref()), k, cfg);
        columns.push(f);
        report.users.push(trace);
    }
    if columns.is_empty() {
        return Err(Error::InvalidCount("at least one user is required"));
    }
    Ok((BeamformerMatrix::new(columns, BeamformerKind::AnalogOnly)?, report))
}

/// Analog-only design from beam-sweeping results. Each user starts at its
/// selected codeword and is represented by the `r_count x s_count` steering
/// vectors of its auxiliary points.
pub fn aobf_imperfect_csi(
    cb: &PolarCodebook,
    indices: &[CodewordIndex],
    r_count: usize,
    s_count: usize,
    cfg: &MMConfig,
) -> Result<(BeamformerMatrix, MMReport)> {
    cfg.validate()?;
    if indices.is_empty() {
        return Err(Error::InvalidCount("at least one user is required"));
    }
    let grids = indices
        .iter()
        .map(|&idx| cb.auxiliary_points(idx, r_count, s_count))
        .collect::<Result<Vec<_>>>()?;
    let aux = cb.approximate_channel_matrices(&grids)?;
    let model = imperfect_model(&aux, cfg.mu_mode)?;
    let mut columns = Vec::with_capacity(indices.len());
    let mut report = MMReport::default();
    for (k, &idx) in indices.iter().enumerate() {
        let (f, trace) = model.run(cb.codeword(idx)?.to_vec(), k, cfg);
        columns.push(f);
        report.users.push(trace);
    }
    Ok((BeamformerMatrix::new(columns, BeamformerKind::AnalogOnly)?, report))
}
