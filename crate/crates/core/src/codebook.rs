//! Polar-domain near-field codebook, simulated beam sweeping and auxiliary
//! points inside the selected codeword's cell.
//!
//! Codeword `(p, q)` (both 1-based) points at angle
//! `phi_p = asin((2p - 1)/N - 1)` and range
//! `rho_pq = N^2 d^2 / (2 q beta^2 lambda) * cos^2(phi_p)`, so the angular
//! cells partition `[-1, 1)` in the sine domain and the distance rings are
//! uniformly spaced in `cos^2(phi) / rho`.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::geometry::{nearfield_steering, ArrayConfig, PolarCoord, SteeringVector};
use crate::linalg::{dot, norm_sqr};
use crate::{Error, Result, C64};

/// Index of a codeword, both components 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodewordIndex {
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone)]
pub struct PolarCodebook {
    array: ArrayConfig,
    n_dis: usize,
    beta: f64,
    angles: Vec<f64>,
    /// `radii[(p - 1) * n_dis + (q - 1)]`
    radii: Vec<f64>,
    /// Codewords back to back, `n_bs` entries each, in the same order as `radii`.
    codewords: Vec<C64>,
}

/// Ring-spacing constant `N^2 d^2 / (2 beta^2 lambda)`.
fn ring_scale(cfg: &ArrayConfig, beta: f64) -> f64 {
    let n = cfg.n_bs() as f64;
    n * n * cfg.spacing() * cfg.spacing() / (2.0 * beta * beta * cfg.wavelength())
}

impl PolarCodebook {
    pub fn build(cfg: &ArrayConfig, n_dis: usize, beta: f64) -> Result<Self> {
        if n_dis == 0 {
            return Err(Error::InvalidCount("n_dis must be at least 1"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter("beta must be positive"));
        }
        let n_bs = cfg.n_bs();
        let scale = ring_scale(cfg, beta);
        let angles: Vec<f64> = (1..=n_bs)
            .map(|p| libm::asin((2 * p - 1) as f64 / n_bs as f64 - 1.0))
            .collect();
        let mut radii = Vec::with_capacity(n_bs * n_dis);
        let mut codewords = Vec::with_capacity(n_bs * n_dis * n_bs);
        for &phi in &angles {
            let s = libm::sin(phi);
            for q in 1..=n_dis {
                let rho = scale / q as f64 * (1.0 - s * s);
                radii.push(rho);
                let u = nearfield_steering(cfg, PolarCoord::new(phi, rho)?);
                codewords.extend_from_slice(u.as_slice());
            }
        }
        Ok(Self {
            array: *cfg,
            n_dis,
            beta,
            angles,
            radii,
            codewords,
        })
    }

    pub fn array(&self) -> &ArrayConfig {
        &self.array
    }

    pub fn n_dis(&self) -> usize {
        self.n_dis
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of codewords, `N * N_DIS`.
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn index(&self, p: usize, q: usize) -> Result<CodewordIndex> {
        let idx = CodewordIndex { p, q };
        self.check(idx)?;
        Ok(idx)
    }

    fn check(&self, idx: CodewordIndex) -> Result<()> {
        if idx.p == 0 || idx.p > self.array.n_bs() {
            return Err(Error::IndexOutOfRange {
                what: "codeword angle",
                index: idx.p,
                max: self.array.n_bs(),
            });
        }
        if idx.q == 0 || idx.q > self.n_dis {
            return Err(Error::IndexOutOfRange {
                what: "codeword ring",
                index: idx.q,
                max: self.n_dis,
            });
        }
        Ok(())
    }

    #[inline]
    fn flat(&self, idx: CodewordIndex) -> usize {
        (idx.p - 1) * self.n_dis + (idx.q - 1)
    }

    /// Angle of ring family `p`.
    pub fn angle(&self, p: usize) -> Result<f64> {
        self.index(p, 1).map(|_| self.angles[p - 1])
    }

    pub fn radius(&self, idx: CodewordIndex) -> Result<f64> {
        self.check(idx)?;
        Ok(self.radii[self.flat(idx)])
    }

    pub fn location(&self, idx: CodewordIndex) -> Result<PolarCoord> {
        self.check(idx)?;
        PolarCoord::new(self.angles[idx.p - 1], self.radii[self.flat(idx)])
    }

    pub fn codeword(&self, idx: CodewordIndex) -> Result<&[C64]> {
        self.check(idx)?;
        Ok(self.codeword_unchecked(idx))
    }

    fn codeword_unchecked(&self, idx: CodewordIndex) -> &[C64] {
        let n = self.array.n_bs();
        let start = self.flat(idx) * n;
        &self.codewords[start..start + n]
    }

    /// All indices in lexicographic `(p, q)` order.
    pub fn indices(&self) -> impl Iterator<Item = CodewordIndex> + '_ {
        (1..=self.array.n_bs()).flat_map(move |p| (1..=self.n_dis).map(move |q| CodewordIndex { p, q }))
    }

    /// Selects the codeword maximizing `|h^H v|`; ties go to the
    /// lexicographically smallest index.
    pub fn beam_sweep(&self, h: &[C64]) -> Result<CodewordIndex> {
        self.sweep_with(h, |_, score| score)
    }

    /// Beam sweeping where each score is `|h^H v + n|` with `n ~ CN(0, sigma2)`.
    pub fn beam_sweep_noisy<R: Rng + ?Sized>(
        &self,
        h: &[C64],
        sigma2: f64,
        rng: &mut R,
    ) -> Result<CodewordIndex> {
        self.sweep_with(h, |_, score| score + complex_gaussian(rng, sigma2))
    }

    fn sweep_with<F>(&self, h: &[C64], mut perturb: F) -> Result<CodewordIndex>
    where
        F: FnMut(CodewordIndex, C64) -> C64,
    {
        let n = self.array.n_bs();
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.len(),
            });
        }
        if norm_sqr(h) == 0.0 {
            return Err(Error::ZeroChannel);
        }
        let mut best = CodewordIndex { p: 1, q: 1 };
        let mut best_score = f64::NEG_INFINITY;
        for (idx, v) in self.indices().zip(self.codewords.chunks_exact(n)) {
            let score = perturb(idx, dot(v, h)).norm_sqr();
            if score > best_score {
                best_score = score;
                best = idx;
            }
        }
        Ok(best)
    }

    /// Auxiliary points inside the cell of `idx`: `r_count` angles and
    /// `s_count` ranges per angle.
    pub fn auxiliary_points(&self, idx: CodewordIndex, r_count: usize, s_count: usize) -> Result<AuxiliaryGrid> {
        self.check(idx)?;
        if r_count == 0 || s_count == 0 {
            return Err(Error::InvalidCount("auxiliary grid needs R >= 1 and S >= 1"));
        }
        let n_bs = self.array.n_bs() as f64;
        let scale = ring_scale(&self.array, self.beta);
        let rings: Vec<f64> = (1..=s_count).map(|s| auxiliary_ring(idx.q, s, s_count)).collect();
        let mut points = Vec::with_capacity(r_count * s_count);
        for r in 1..=r_count {
            let p_hat = r_count * (idx.p - 1) + r;
            let sin_phi = (2 * p_hat - 1) as f64 / (r_count as f64 * n_bs) - 1.0;
            let phi = libm::asin(sin_phi);
            for &q_hat in &rings {
                let rho = scale / q_hat * (1.0 - sin_phi * sin_phi);
                points.push(PolarCoord::new(phi, rho)?);
            }
        }
        Ok(AuxiliaryGrid {
            parent: idx,
            r_count,
            s_count,
            points,
        })
    }

    /// Steering vectors at every auxiliary point of every grid.
    pub fn approximate_channel_matrices(&self, grids: &[AuxiliaryGrid]) -> Result<Vec<Vec<SteeringVector>>> {
        if grids.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(grids
            .iter()
            .map(|g| g.points.iter().map(|&pt| nearfield_steering(&self.array, pt)).collect())
            .collect())
    }
}

/// Continuous ring index of the `s`-th auxiliary range (1-based) around
/// ring `q_tilde`:
/// `1/q_hat = (1/q + 1/(q+1))/2 + (2s - 1)/(4S) * (1/(q-1) - 1/(q+1))`.
///
/// The first ring has no inner neighbour; `1/(q - 1)` is replaced by the
/// linear extrapolation `2/q - 1/(q + 1)`.
pub fn auxiliary_ring(q_tilde: usize, s: usize, s_count: usize) -> f64 {
    let q = q_tilde as f64;
    let inv_prev = if q_tilde > 1 {
        1.0 / (q - 1.0)
    } else {
        2.0 / q - 1.0 / (q + 1.0)
    };
    let inv_next = 1.0 / (q + 1.0);
    let big_s = s_count as f64;
    4.0 * big_s / (2.0 * big_s * (1.0 / q + inv_next) + (inv_prev - inv_next) * (2 * s - 1) as f64)
}

/// Grid of auxiliary points, row-major in `(r, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryGrid {
    pub parent: CodewordIndex,
    pub r_count: usize,
    pub s_count: usize,
    pub points: Vec<PolarCoord>,
}

impl AuxiliaryGrid {
    /// Point `(r, s)`, both 1-based.
    pub fn point(&self, r: usize, s: usize) -> PolarCoord {
        self.points[(r - 1) * self.s_count + (s - 1)]
    }
}
