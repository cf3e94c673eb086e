//! Baselines: analog-only beam steering and hybrid beamforming with a ZF or
//! WMMSE digital stage on the effective channel.
//!
//! The hybrid composite `F = F_AB F_DB` carries no power gain: every
//! composite column has unit norm. WMMSE enforces this inside the iteration
//! by optimizing each digital column on the unit sphere of the metric
//! `G = F_AB^H F_AB`, so the final renormalization is a no-op up to rounding.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::codebook::{CodewordIndex, PolarCodebook};
use crate::linalg::{column, dot, from_columns, hermitian_eigen, mul_vec, norm, norm_sqr, CMatrix};
use crate::metrics::{achievable_rate, BeamformerKind, BeamformerMatrix};
use crate::mm::conjugate_phase;
use crate::{Error, Result, C64};

/// Condition number above which the effective channel counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Channel knowledge available to the analog stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    Perfect,
    Imperfect,
}

/// Inputs for [`analog_beam_steering`]; only the ones the mode needs must be set.
#[derive(Debug, Clone, Copy, Default)]
pub struct SteeringInputs<'a> {
    pub channels: Option<&'a [Vec<C64>]>,
    pub codebook: Option<&'a PolarCodebook>,
    pub indices: Option<&'a [CodewordIndex]>,
}

/// Perfect CSI: conjugate-phase columns. Imperfect CSI: the swept codewords.
pub fn analog_beam_steering(mode: CsiMode, inputs: SteeringInputs<'_>) -> Result<BeamformerMatrix> {
    match mode {
        CsiMode::Perfect => {
            let channels = inputs.channels.ok_or(Error::MissingInput("channels"))?;
            steer_perfect(channels)
        }
        CsiMode::Imperfect => {
            let cb = inputs.codebook.ok_or(Error::MissingInput("codebook"))?;
            let indices = inputs.indices.ok_or(Error::MissingInput("codeword indices"))?;
            steer_imperfect(cb, indices)
        }
    }
}

pub fn steer_perfect<H: AsRef<[C64]>>(channels: &[H]) -> Result<BeamformerMatrix> {
    BeamformerMatrix::new(
        channels.iter().map(|h| conjugate_phase(h.as_ref())).collect(),
        BeamformerKind::AnalogOnly,
    )
}

pub fn steer_imperfect(cb: &PolarCodebook, indices: &[CodewordIndex]) -> Result<BeamformerMatrix> {
    let columns = indices
        .iter()
        .map(|&i| cb.codeword(i).map(<[C64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    BeamformerMatrix::new(columns, BeamformerKind::AnalogOnly)
}

/// `K x K` matrix whose column `k` is `F_AB^H h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
}

impl EffectiveChannel {
    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        column(&self.matrix, k)
    }

    /// Adds independent `CN(0, sigma_e2)` errors to every entry.
    pub fn perturbed<R: Rng + ?Sized>(&self, sigma_e2: f64, rng: &mut R) -> Self {
        let mut matrix = self.matrix.clone();
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                matrix[(i, j)] += complex_gaussian(rng, sigma_e2);
            }
        }
        Self { matrix }
    }
}

pub fn effective_channel<H: AsRef<[C64]>>(f_ab: &BeamformerMatrix, channels: &[H]) -> Result<EffectiveChannel> {
    if channels.len() != f_ab.k() {
        return Err(Error::DimensionMismatch {
            expected: f_ab.k(),
            got: channels.len(),
        });
    }
    let k = f_ab.k();
    let mut matrix = CMatrix::zeros(k, k);
    for (col, h) in channels.iter().enumerate() {
        let h = h.as_ref();
        if h.len() != f_ab.n_bs() {
            return Err(Error::DimensionMismatch {
                expected: f_ab.n_bs(),
                got: h.len(),
            });
        }
        for (row, f) in f_ab.columns().iter().enumerate() {
            matrix[(row, col)] = dot(f, h);
        }
    }
    Ok(EffectiveChannel { matrix })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    pub analog: BeamformerMatrix,
    pub digital: CMatrix,
    pub composite: BeamformerMatrix,
}

fn check_square(f_ab: &BeamformerMatrix, eff: &EffectiveChannel) -> Result<()> {
    let k = f_ab.k();
    if eff.matrix.nrows() != k || eff.matrix.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: eff.matrix.ncols(),
        });
    }
    Ok(())
}

fn analog_matrix(f_ab: &BeamformerMatrix) -> CMatrix {
    from_columns(f_ab.columns())
}

/// Scales every digital column so its composite column has unit norm.
fn assemble(f_ab: &BeamformerMatrix, mut digital: CMatrix) -> Result<HybridBeamformer> {
    let a = analog_matrix(f_ab);
    let k = digital.ncols();
    let mut columns = Vec::with_capacity(k);
    for j in 0..k {
        let c = mul_vec(&a, &column(&digital, j));
        let len = norm(&c);
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::SingularChannel(f64::INFINITY));
        }
        for i in 0..digital.nrows() {
            digital[(i, j)] = digital[(i, j)].unscale(len);
        }
        columns.push(c.iter().map(|z| z.unscale(len)).collect());
    }
    Ok(HybridBeamformer {
        analog: f_ab.clone(),
        digital,
        composite: BeamformerMatrix::new(columns, BeamformerKind::HybridComposite)?,
    })
}

/// 2-norm condition number of a square matrix.
pub fn condition_number(m: &CMatrix) -> f64 {
    let e = hermitian_eigen(&(m.adjoint() * m));
    let lo = e.values.first().copied().unwrap_or(0.0);
    let hi = e.values.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        libm::sqrt(hi / lo)
    }
}

/// Zero forcing on the effective channel: `F_DB = (H_eff^H)^{-1}` with
/// per-column scaling to unit composite norm.
pub fn hbf_zf(f_ab: &BeamformerMatrix, eff: &EffectiveChannel) -> Result<HybridBeamformer> {
    check_square(f_ab, eff)?;
    let cond = condition_number(&eff.matrix);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularChannel(cond));
    }
    let digital = eff.matrix.adjoint().try_inverse().ok_or(Error::SingularChannel(f64::INFINITY))?;
    assemble(f_ab, digital)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmmseConfig {
    pub max_iters: usize,
    /// Stop once the relative sum-rate change falls below this.
    pub tol: f64,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseReport {
    pub iterations: usize,
    pub converged: bool,
    /// Whether the iteration started from the ZF solution.
    pub zf_initialized: bool,
    /// Effective-channel sum rate at the start point and after each iteration.
    pub sum_rate_trace: Vec<f64>,
}

/// Per-stream unit-sphere coordinates of the digital stage.
struct Reduced {
    /// `K x r` map `U_r s^{-1/2}` back to digital columns.
    back: CMatrix,
    /// Reduced channels `s^{-1/2} U_r^H h_eff_k`.
    channels: Vec<Vec<C64>>,
}

fn reduce(f_ab: &BeamformerMatrix, eff: &EffectiveChannel) -> Result<Reduced> {
    let a = analog_matrix(f_ab);
    let gram = a.adjoint() * &a;
    let e = hermitian_eigen(&gram);
    let k = gram.nrows();
    let top = e.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..k).filter(|&i| e.values[i] > 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(Error::SingularChannel(f64::INFINITY));
    }
    let r = keep.len();
    let mut back = CMatrix::zeros(k, r);
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / libm::sqrt(e.values[i]);
        for row in 0..k {
            back[(row, c)] = e.vectors[(row, i)] * s;
        }
    }
    // back^H h_eff = s^{-1/2} U_r^H h_eff
    let back_h = back.adjoint();
    let channels = (0..eff.k()).map(|j| mul_vec(&back_h, &eff.column(j))).collect();
    Ok(Reduced { back, channels })
}

fn reduced_rates(h: &[Vec<C64>], x: &[Vec<C64>], a: f64, sigma2: f64) -> f64 {
    h.iter()
            .enumerate()
            .map(|(k, hk)| {
                let mut signal = 0.0;
                let mut interference = 0.0;
                for (j, xj) in x.iter().enumerate() {
                    let g = dot(hk, xj).norm_sqr();
                    if j == k {
                        signal = g;
                    } else {
                        interference += g;
                    }
                }
                achievable_rate(a * signal / (a * interference + sigma2))
            })
            .sum()
}

/// Global minimizer of `x^H A x - 2 Re(b^H x)` over `||x|| = 1`, `A` Hermitian.
pub fn sphere_quadratic_min(a: &CMatrix, b: &[C64]) -> Vec<C64> {
    let n = a.nrows();
    let e = hermitian_eigen(a);
    let v = &e.vectors;
    let nu = &e.values;
    let c = mul_vec(&v.adjoint(), b);
    let b_norm = norm(b);
    let scale = nu.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(b_norm).max(f64::MIN_POSITIVE);
    let nu_min = nu[0];
    let degenerate = |i: usize| nu[i] - nu_min <= 1e-12 * scale;

    let from_coeffs = |coeffs: &[C64]| -> Vec<C64> {
        let mut x = mul_vec(v, coeffs);
        let len = norm(&x);
        for z in x.iter_mut() {
            *z = z.unscale(len);
        }
        x
    };

    let weight_min: f64 = (0..n).filter(|&i| degenerate(i)).map(|i| c[i].norm_sqr()).sum();
    if weight_min <= 1e-28 * (b_norm * b_norm).max(f64::MIN_POSITIVE) {
        // hard case candidate: lambda = nu_min if the rest fits inside the sphere
        let rest: f64 = (0..n)
            .filter(|&i| !degenerate(i))
            .map(|i| c[i].norm_sqr() / ((nu[i] - nu_min) * (nu[i] - nu_min)))
            .sum();
        if rest <= 1.0 {
            let tau = libm::sqrt(1.0 - rest);
            let coeffs: Vec<C64> = (0..n)
                .map(|i| {
                    if degenerate(i) {
                        if i == 0 {
                            C64::new(tau, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    } else {
                        c[i] / (nu[i] - nu_min)
                    }
                })
                .collect();
            return from_coeffs(&coeffs);
        }
    }

    // secular equation sum |c_i|^2 / (nu_i - lambda)^2 = 1 on (nu_min - ||b||, nu_min)
    let phi = |lambda: f64| -> f64 {
        (0..n)
            .map(|i| c[i].norm_sqr() / ((nu[i] - lambda) * (nu[i] - lambda)))
            .sum()
    };
    let mut lo = nu_min - b_norm;
    let mut hi = nu_min;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = lo;
    let coeffs: Vec<C64> = (0..n).map(|i| c[i] / (nu[i] - lambda)).collect();
    from_coeffs(&coeffs)
}

/// WMMSE digital stage with per-user scalar receivers.
///
/// Each iteration updates the MMSE receivers and weights in closed form and
/// then solves every stream's precoder exactly on the unit composite-norm
/// sphere, so the effective-channel sum rate never decreases. Starts from
/// ZF when the effective channel is invertible and from matched streams
/// otherwise.
pub fn hbf_wmmse(
    f_ab: &BeamformerMatrix,
    eff: &EffectiveChannel,
    p: f64,
    sigma2: f64,
    cfg: &WmmseConfig,
) -> Result<(HybridBeamformer, WmmseReport)> {
    check_square(f_ab, eff)?;
    if !(p > 0.0) {
        return Err(Error::NonPositivePower(p));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter("noise variance must be positive"));
    }
    let k = f_ab.k();
    let red = reduce(f_ab, eff)?;
    let r = red.back.ncols();
    let a = p / k as f64;
    let sqrt_a = libm::sqrt(a);

    let zf = if r == k { hbf_zf(f_ab, eff).ok() } else { None };
    let zf_initialized = zf.is_some();
    let mut x: Vec<Vec<C64>> = match zf {
        Some(zf) => {
            // x = s^{1/2} U^H d, the inverse of `back` on its range
            let inv = red.back.clone().try_inverse().ok_or(Error::SingularChannel(f64::INFINITY))?;
            (0..k)
                .map(|j| {
                    let mut xj = mul_vec(&inv, &column(&zf.digital, j));
                    let len = norm(&xj);
                    xj.iter_mut().for_each(|z| *z = z.unscale(len));
                    xj
                })
                .collect()
        }
        None => red
            .channels
            .iter()
            .map(|h| {
                let len = norm(h);
                if len > 0.0 {
                    h.iter().map(|z| z.unscale(len)).collect()
                } else {
                    let mut e = vec![C64::new(0.0, 0.0); r];
                    e[0] = C64::new(1.0, 0.0);
                    e
                }
            })
            .collect(),
    };

    let mut trace = vec![reduced_rates(&red.channels, &x, a, sigma2)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut big_a = CMatrix::zeros(r, r);
        let mut u = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        for (kk, hk) in red.channels.iter().enumerate() {
            let total: f64 = a * x.iter().map(|xj| dot(hk, xj).norm_sqr()).sum::<f64>() + sigma2;
            let y = dot(hk, &x[kk]);
            let uk = y * (sqrt_a / total);
            let e = (1.0 - a * y.norm_sqr() / total).max(f64::MIN_POSITIVE);
            let wk = 1.0 / e;
            let coef = a * wk * uk.norm_sqr();
            for i in 0..r {
                for j in 0..r {
                    big_a[(i, j)] += hk[i] * hk[j].conj() * coef;
                }
            }
            u.push(uk);
            w.push(wk);
        }
        for j in 0..k {
            let b: Vec<C64> = red.channels[j].iter().map(|z| z * u[j] * (sqrt_a * w[j])).collect();
            x[j] = sphere_quadratic_min(&big_a, &b);
        }
        let rate = reduced_rates(&red.channels, &x, a, sigma2);
        let prev = *trace.last().unwrap_or(&0.0);
        trace.push(rate);
        if (rate - prev).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let mut digital = CMatrix::zeros(k, k);
    for (j, xj) in x.iter().enumerate() {
        let d = mul_vec(&red.back, xj);
        for (i, z) in d.into_iter().enumerate() {
            digital[(i, j)] = z;
        }
    }
    let hbf = assemble(f_ab, digital)?;
    Ok((
        hbf,
        WmmseReport {
            iterations,
            converged,
            zf_initialized,
            sum_rate_trace: trace,
        },
    ))
}

/// `||F_AB d||^2` for a digital column `d`.
pub fn composite_norm_sqr(f_ab: &BeamformerMatrix, d: &[C64]) -> f64 {
    norm_sqr(&mul_vec(&analog_matrix(f_ab), d))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::channel::{random_scenario, synthesize_channel};
    use crate::geometry::{nearfield_steering, ArrayConfig, PolarCoord};
    use crate::metrics::{beam_gain, sinr, sum_rate, to_db, noise_from_snr};
    use crate::PathComponent;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_path(arr: &ArrayConfig, loc: PolarCoord) -> Vec<C64> {
        synthesize_channel(
            arr,
            &[PathComponent {
                gain: C64::new(1.0, 0.0),
                location: loc,
            }],
        )
        .unwrap()
    }

    fn random_instance(n: usize, k: usize, seed: u64) -> (Vec<Vec<C64>>, BeamformerMatrix) {
        let arr = ArrayConfig::half_wavelength(n).unwrap();
        let s = random_scenario(&arr, k, 3, seed).unwrap();
        let h: Vec<Vec<C64>> = s.channels().iter().map(|c| c.vector().to_vec()).collect();
        let f_ab = steer_perfect(&h).unwrap();
        (h, f_ab)
    }

    #[test]
    fn steering_has_unit_gain_at_single_path_user() {
        let arr = ArrayConfig::half_wavelength(64).unwrap();
        let loc = PolarCoord::from_degrees(-23.57, 50.0).unwrap();
        let h = vec![single_path(&arr, loc)];
        let f = analog_beam_steering(
            CsiMode::Perfect,
            SteeringInputs {
                channels: Some(&h),
                ..Default::default()
            },
        )
        .unwrap();
        let g = to_db(beam_gain(&arr, f.column(0), loc).unwrap());
        assert!(g.abs() < 1e-3);
    }

    #[test]
    fn steering_reports_missing_inputs() {
        assert_eq!(
            analog_beam_steering(CsiMode::Perfect, SteeringInputs::default()),
            Err(Error::MissingInput("channels"))
        );
        let cb = PolarCodebook::build(&ArrayConfig::half_wavelength(8).unwrap(), 4, 1.6).unwrap();
        assert!(matches!(
            analog_beam_steering(
                CsiMode::Imperfect,
                SteeringInputs {
                    codebook: Some(&cb),
                    ..Default::default()
                }
            ),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn imperfect_steering_copies_codewords() {
        let cb = PolarCodebook::build(&ArrayConfig::half_wavelength(8).unwrap(), 4, 1.6).unwrap();
        let idx = [cb.index(2, 3).unwrap(), cb.index(7, 1).unwrap()];
        let f = analog_beam_steering(
            CsiMode::Imperfect,
            SteeringInputs {
                codebook: Some(&cb),
                indices: Some(&idx),
                ..Default::default()
            },
        )
        .unwrap();
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(f.column(k), cb.codeword(i).unwrap());
        }
    }

    #[test]
    fn steering_permutes_with_users() {
        let (h, f) = random_instance(8, 3, 1);
        let swapped = vec![h[2].clone(), h[0].clone(), h[1].clone()];
        let g = steer_perfect(&swapped).unwrap();
        assert_eq!(g.column(0), f.column(2));
        assert_eq!(g.column(1), f.column(0));
        assert_eq!(g.column(2), f.column(1));
    }

    #[test]
    fn effective_channel_entries() {
        let arr = ArrayConfig::half_wavelength(32).unwrap();
        let h = vec![
            single_path(&arr, PolarCoord::new(-0.8, 30.0).unwrap()),
            single_path(&arr, PolarCoord::new(0.6, 60.0).unwrap()),
        ];
        let f = steer_perfect(&h).unwrap();
        let eff = effective_channel(&f, &h).unwrap();
        for row in 0..2 {
            for col in 0..2 {
                let mut expect = C64::new(0.0, 0.0);
                for n in 0..32 {
                    expect += f.column(row)[n].conj() * h[col][n];
                }
                assert!((eff.matrix[(row, col)] - expect).norm() < 1e-12);
            }
        }
        // diagonal dominates for well separated users
        assert!(eff.matrix[(0, 0)].norm() > 10.0 * eff.matrix[(1, 0)].norm());
        assert!((eff.matrix[(0, 0)].im).abs() < 1e-12);
        let doubled: Vec<Vec<C64>> = h.iter().map(|v| v.iter().map(|z| z * 2.0).collect()).collect();
        let eff2 = effective_channel(&f, &doubled).unwrap();
        for row in 0..2 {
            for col in 0..2 {
                assert!((eff2.matrix[(row, col)] - eff.matrix[(row, col)] * 2.0).norm() < 1e-12);
            }
        }
        assert!(effective_channel(&f, &h[..1]).is_err());
    }

    #[test]
    fn single_user_effective_channel_is_scalar() {
        let (h, f) = random_instance(8, 1, 2);
        let eff = effective_channel(&f, &h).unwrap();
        assert_eq!(eff.k(), 1);
        assert!((eff.matrix[(0, 0)] - dot(f.column(0), &h[0])).norm() < 1e-15);
    }

    #[test]
    fn zf_with_diagonal_channel_is_scaled_analog() {
        let n = 8;
        let amp = 1.0 / (n as f64).sqrt();
        // orthogonal constant-modulus columns: DFT vectors
        let cols: Vec<Vec<C64>> = (0..2)
            .map(|k| (0..n).map(|i| C64::from_polar(amp, 2.0 * core::f64::consts::PI * (k * i) as f64 / n as f64)).collect())
            .collect();
        let f = BeamformerMatrix::new(cols.clone(), BeamformerKind::AnalogOnly).unwrap();
        let h: Vec<Vec<C64>> = cols.iter().map(|c| c.iter().map(|z| z * 3.0).collect()).collect();
        let zf = hbf_zf(&f, &effective_channel(&f, &h).unwrap()).unwrap();
        assert!(zf.digital[(0, 1)].norm() < 1e-12 && zf.digital[(1, 0)].norm() < 1e-12);
        for k in 0..2 {
            for i in 0..n {
                assert!((zf.composite.column(k)[i] - cols[k][i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zf_nulls_interference() {
        for seed in 0..30 {
            let (h, f) = random_instance(32, 4, 10 + seed);
            let eff = effective_channel(&f, &h).unwrap();
            let Ok(zf) = hbf_zf(&f, &eff) else { continue };
            zf.composite.validate().unwrap();
            zf.analog.validate().unwrap();
            for k in 0..4 {
                let signal = dot(&h[k], zf.composite.column(k)).norm_sqr();
                let mut leak = 0.0;
                for i in 0..4 {
                    if i != k {
                        leak += 0.25 * dot(&h[k], zf.composite.column(i)).norm_sqr();
                    }
                }
                assert!(leak < 1e-18 * (1.0 + signal));
                assert!((composite_norm_sqr(&f, &column(&zf.digital, k)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zf_rejects_singular_channel() {
        let (mut h, _) = random_instance(8, 2, 3);
        h[1] = h[0].clone();
        let f = steer_perfect(&h).unwrap();
        let eff = effective_channel(&f, &h).unwrap();
        assert!(matches!(hbf_zf(&f, &eff), Err(Error::SingularChannel(_))));
        // WMMSE still returns on the rank-one analog stage
        let (w, rep) = hbf_wmmse(&f, &eff, 1.0, 0.1, &WmmseConfig::default()).unwrap();
        assert!(!rep.zf_initialized);
        w.composite.validate().unwrap();
    }

    #[test]
    fn wmmse_single_user_is_matched() {
        let (h, f) = random_instance(16, 1, 4);
        let eff = effective_channel(&f, &h).unwrap();
        let (w, _) = hbf_wmmse(&f, &eff, 1.0, 0.01, &WmmseConfig::default()).unwrap();
        assert!((norm(w.composite.column(0)) - 1.0).abs() < 1e-12);
        let g = dot(&h[0], w.composite.column(0)).norm();
        let g0 = dot(&h[0], f.column(0)).norm();
        assert!((g - g0).abs() < 1e-9 * g0);
    }

    #[test]
    fn wmmse_dominates_zf_at_low_snr() {
        let mut compared = 0;
        for seed in 0..100 {
            let (h, f) = random_instance(16, 4, 100 + seed);
            let eff = effective_channel(&f, &h).unwrap();
            let sigma2 = noise_from_snr(1.0, 4, 0.0);
            let Ok(zf) = hbf_zf(&f, &eff) else { continue };
            let (w, rep) = hbf_wmmse(&f, &eff, 1.0, sigma2, &WmmseConfig::default()).unwrap();
            let rz = sum_rate(&h, &zf.composite, 1.0, sigma2).unwrap();
            let rw = sum_rate(&h, &w.composite, 1.0, sigma2).unwrap();
            assert!(rw >= rz - 1e-9, "seed {seed}: {rw} < {rz}");
            for pair in rep.sum_rate_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs());
            }
            // the reduced sum rate equals the sum rate through the composite
            assert!((rep.sum_rate_trace.last().unwrap() - rw).abs() < 1e-8 * rw.max(1.0));
            compared += 1;
        }
        assert!(compared > 50);
    }

    #[test]
    fn wmmse_rate_matches_sinr() {
        let (h, f) = random_instance(16, 3, 5);
        let eff = effective_channel(&f, &h).unwrap();
        let (w, _) = hbf_wmmse(&f, &eff, 2.0, 0.05, &WmmseConfig::default()).unwrap();
        let direct: f64 = (0..3)
            .map(|k| achievable_rate(sinr(&h, &w.composite, k, 2.0, 0.05).unwrap()))
            .sum();
        assert!((direct - sum_rate(&h, &w.composite, 2.0, 0.05).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_effective_channel_changes_by_noise_only() {
        let (h, f) = random_instance(8, 2, 6);
        let eff = effective_channel(&f, &h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(eff.perturbed(0.0, &mut rng), eff);
        let p = eff.perturbed(1e-6, &mut rng);
        assert!(p != eff);
    }

    #[test]
    fn steering_vectors_at_codewords() {
        let arr = ArrayConfig::half_wavelength(8).unwrap();
        let cb = PolarCodebook::build(&arr, 4, 1.6).unwrap();
        let idx = cb.index(3, 2).unwrap();
        let f = steer_imperfect(&cb, &[idx]).unwrap();
        let u = nearfield_steering(&arr, cb.location(idx).unwrap());
        assert_eq!(f.column(0), u.as_slice());
    }

    fn objective(a: &CMatrix, b: &[C64], x: &[C64]) -> f64 {
        dot(x, &mul_vec(a, x)).re - 2.0 * dot(b, x).re
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sphere_solution_beats_random_points(seed in 0u64..100_000, zero_b in proptest::bool::ANY) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let r: Vec<Vec<C64>> = (0..n).map(|_| (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect()).collect();
            let rm = from_columns(&r);
            let a = &rm * rm.adjoint();
            let b: Vec<C64> = (0..n).map(|_| if zero_b { C64::new(0.0, 0.0) } else { complex_gaussian(&mut rng, 1.0) }).collect();
            let x = sphere_quadratic_min(&a, &b);
            prop_assert!((norm(&x) - 1.0).abs() < 1e-12);
            let best = objective(&a, &b, &x);
            for _ in 0..200 {
                let mut y: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                let len = norm(&y);
                y.iter_mut().for_each(|z| *z = z.unscale(len));
                prop_assert!(objective(&a, &b, &y) >= best - 1e-9 * (1.0 + best.abs()));
            }
        }
    }

    #[test]
    fn sphere_hard_case() {
        // A = diag(0, 1, 2), b orthogonal to the bottom eigenvector
        let mut a = CMatrix::zeros(3, 3);
        a[(1, 1)] = C64::new(1.0, 0.0);
        a[(2, 2)] = C64::new(2.0, 0.0);
        let b = [C64::new(0.0, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.0)];
        let x = sphere_quadratic_min(&a, &b);
        // lambda = 0: x_1 = 0.3, |x_0| = sqrt(1 - 0.09)
        assert!((x[1].norm() - 0.3).abs() < 1e-12);
        assert!((x[0].norm() - 0.91f64.sqrt()).abs() < 1e-12);
        assert!(x[2].norm() < 1e-12);
    }
}
