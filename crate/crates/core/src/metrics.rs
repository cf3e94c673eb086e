//! SINR, SLNR, rates, beam gains and the energy-efficiency model.
//!
//! All quantities are linear scale; dB only appears through [`to_db`] at
//! reporting boundaries.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{nearfield_steering, ArrayConfig, PolarCoord};
use crate::linalg::{dot, norm_sqr};
use crate::{Error, Result, C64};

/// Tolerance used when checking beamformer constraints.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformerKind {
    /// Phase-shifter only: every entry has modulus `1/sqrt(N)`.
    AnalogOnly,
    /// Analog times digital: every column has unit norm.
    HybridComposite,
}

impl BeamformerKind {
    fn name(self) -> &'static str {
        match self {
            BeamformerKind::AnalogOnly => "constant-modulus",
            BeamformerKind::HybridComposite => "unit-column-norm",
        }
    }
}

/// `N x K` precoder stored column by column; column `k` serves user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerMatrix {
    n_bs: usize,
    columns: Vec<Vec<C64>>,
    kind: BeamformerKind,
}

impl BeamformerMatrix {
    /// Builds and validates against the kind-specific constraint.
    pub fn new(columns: Vec<Vec<C64>>, kind: BeamformerKind) -> Result<Self> {
        let m = Self::new_unchecked(columns, kind)?;
        m.validate()?;
        Ok(m)
    }

    /// Checks dimensions only.
    pub fn new_unchecked(columns: Vec<Vec<C64>>, kind: BeamformerKind) -> Result<Self> {
        let n_bs = columns.first().map(Vec::len).ok_or(Error::InvalidCount("no columns"))?;
        if let Some(bad) = columns.iter().find(|c| c.len() != n_bs) {
            return Err(Error::DimensionMismatch {
                expected: n_bs,
                got: bad.len(),
            });
        }
        Ok(Self {
            n_bs,
            columns,
            kind,
        })
    }

    /// Largest deviation from the kind-specific constraint.
    pub fn max_deviation(&self) -> (usize, f64) {
        let mut worst = (0, 0.0f64);
        for (k, col) in self.columns.iter().enumerate() {
            let dev = match self.kind {
                BeamformerKind::AnalogOnly => {
                    let target = 1.0 / libm::sqrt(self.n_bs as f64);
                    col.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max)
                }
                BeamformerKind::HybridComposite => (libm::sqrt(norm_sqr(col)) - 1.0).abs(),
            };
            if dev > worst.1 || dev.is_nan() {
                worst = (k, dev);
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let (column, deviation) = self.max_deviation();
        if !(deviation <= CONSTRAINT_TOL) {
            return Err(Error::ConstraintViolation {
                kind: self.kind.name(),
                column,
                deviation,
            });
        }
        Ok(())
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn kind(&self) -> BeamformerKind {
        self.kind
    }

    pub fn column(&self, k: usize) -> &[C64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vec<C64>> {
        self.columns
    }
}

/// Component power draws in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerModel {
    /// Transmit power `P`.
    pub p_tx: f64,
    /// Per RF chain.
    pub p_rf: f64,
    /// Per phase shifter.
    pub p_ps: f64,
    /// Digital baseband precoding.
    pub p_bb: f64,
    #[serde(default)]
    pub includes_baseband: bool,
}

impl PowerModel {
    /// 1 W transmit power, 26 mW per RF chain, 10 mW per phase shifter and
    /// 200 mW of baseband processing.
    pub fn reference(includes_baseband: bool) -> Self {
        Self {
            p_tx: 1.0,
            p_rf: 0.026,
            p_ps: 0.010,
            p_bb: 0.200,
            includes_baseband,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_tx, self.p_rf, self.p_ps, self.p_bb];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("power components must be nonnegative"));
        }
        Ok(())
    }

    pub fn with_baseband(self, includes_baseband: bool) -> Self {
        Self {
            includes_baseband,
            ..self
        }
    }
}

impl Default for PowerModel {
    fn default() -> Self {
        Self::reference(false)
    }
}

fn check_dims<H: AsRef<[C64]>>(channels: &[H], f: &BeamformerMatrix, k: usize) -> Result<()> {
    if channels.len() != f.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k(),
            got: channels.len(),
        });
    }
    if k >= f.k() {
        return Err(Error::IndexOutOfRange {
            what: "user",
            index: k,
            max: f.k().saturating_sub(1),
        });
    }
    if let Some(h) = channels.iter().find(|h| h.as_ref().len() != f.n_bs()) {
        return Err(Error::DimensionMismatch {
            expected: f.n_bs(),
            got: h.as_ref().len(),
        });
    }
    Ok(())
}

/// SINR of user `k` (0-based):
/// `(P/K)|h_k^H f_k|^2 / ((P/K) sum_{i != k} |h_k^H f_i|^2 + sigma2)`.
pub fn sinr<H: AsRef<[C64]>>(
    channels: &[H],
    f: &BeamformerMatrix,
    k: usize,
    p: f64,
    sigma2: f64,
) -> Result<f64> {
    check_dims(channels, f, k)?;
    let per_user = p / f.k() as f64;
    let hk = channels[k].as_ref();
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, col) in f.columns().iter().enumerate() {
        let g = dot(hk, col).norm_sqr();
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(per_user * signal / (per_user * interference + sigma2))
}

/// SLNR of user `k`: leakage is column `k` seen by the other users' channels.
pub fn slnr<H: AsRef<[C64]>>(
    channels: &[H],
    f: &BeamformerMatrix,
    k: usize,
    p: f64,
    sigma2: f64,
) -> Result<f64> {
    check_dims(channels, f, k)?;
    let per_user = p / f.k() as f64;
    let col = f.column(k);
    let mut signal = 0.0;
    let mut leakage = 0.0;
    for (i, h) in channels.iter().enumerate() {
        let g = dot(h.as_ref(), col).norm_sqr();
        if i == k {
            signal = g;
        } else {
            leakage += g;
        }
    }
    Ok(per_user * signal / (per_user * leakage + sigma2))
}

/// `log2(1 + sinr)` in bits/s/Hz.
pub fn achievable_rate(sinr: f64) -> f64 {
    libm::log2(1.0 + sinr)
}

pub fn sum_rate<H: AsRef<[C64]>>(channels: &[H], f: &BeamformerMatrix, p: f64, sigma2: f64) -> Result<f64> {
    per_user_rates(channels, f, p, sigma2).map(|r| r.iter().sum())
}

pub fn per_user_rates<H: AsRef<[C64]>>(
    channels: &[H],
    f: &BeamformerMatrix,
    p: f64,
    sigma2: f64,
) -> Result<Vec<f64>> {
    (0..f.k())
        .map(|k| sinr(channels, f, k, p, sigma2).map(achievable_rate))
        .collect()
}

/// `|u(location)^H f_col|^2`, in `[0, 1]` for unit-norm columns.
pub fn beam_gain(cfg: &ArrayConfig, f_col: &[C64], location: PolarCoord) -> Result<f64> {
    if f_col.len() != cfg.n_bs() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_bs(),
            got: f_col.len(),
        });
    }
    let u = nearfield_steering(cfg, location);
    Ok(dot(u.as_slice(), f_col).norm_sqr())
}

/// Beam gain sampled on an angle x radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
    /// Row-major: `gains[i * radii.len() + j]` is at `(angles[i], radii[j])`.
    pub gains: Vec<f64>,
}

impl PatternGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gains[i * self.radii.len() + j]
    }
}

pub fn beam_pattern_grid(
    cfg: &ArrayConfig,
    f_col: &[C64],
    angles: &[f64],
    radii: &[f64],
) -> Result<PatternGrid> {
    if angles.is_empty() || radii.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rayleigh = cfg.rayleigh_distance();
    if radii.iter().any(|&r| !(r > 0.0 && r <= rayleigh)) {
        return Err(Error::InvalidCoordinate("grid radius outside (0, D_R]"));
    }
    let mut gains = Vec::with_capacity(angles.len() * radii.len());
    for &a in angles {
        for &r in radii {
            gains.push(beam_gain(cfg, f_col, PolarCoord::new(a, r)?)?);
        }
    }
    Ok(PatternGrid {
        angles: angles.to_vec(),
        radii: radii.to_vec(),
        gains,
    })
}

/// `P + N_RF P_RF + N_BS N_RF P_PS (+ P_BB)`
pub fn total_power(model: &PowerModel, n_bs: usize, n_rf: usize) -> f64 {
    let n_rf = n_rf as f64;
    let mut total = model.p_tx + n_rf * model.p_rf + n_bs as f64 * n_rf * model.p_ps;
    if model.includes_baseband {
        total += model.p_bb;
    }
    total
}

/// Sum rate per watt.
pub fn energy_efficiency(sum_rate: f64, p_total: f64) -> Result<f64> {
    if !(p_total > 0.0) {
        return Err(Error::NonPositivePower(p_total));
    }
    Ok(sum_rate / p_total)
}

/// Noise variance for a target SNR under a unit reference beamforming gain:
/// `sigma2 = P / (K * 10^(snr_db / 10))`.
pub fn noise_from_snr(p: f64, k: usize, snr_db: f64) -> f64 {
    p / (k as f64 * from_db(snr_db))
}

pub fn to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

pub fn from_db(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::random_scenario;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cm(rng: &mut ChaCha8Rng, n: usize, k: usize) -> BeamformerMatrix {
        let s = 1.0 / (n as f64).sqrt();
        let cols = (0..k)
            .map(|_| (0..n).map(|_| C64::from_polar(s, rng.random_range(-3.2..3.2))).collect())
            .collect();
        BeamformerMatrix::new(cols, BeamformerKind::AnalogOnly).unwrap()
    }

    fn matched(h: &[C64]) -> Vec<C64> {
        let s = 1.0 / (h.len() as f64).sqrt();
        h.iter().map(|z| C64::from_polar(s, z.arg())).collect()
    }

    #[test]
    fn constraint_validation() {
        let ok = vec![vec![C64::new(0.5, 0.0); 4]];
        assert!(BeamformerMatrix::new(ok.clone(), BeamformerKind::AnalogOnly).is_ok());
        assert!(BeamformerMatrix::new(ok, BeamformerKind::HybridComposite).is_ok());
        let bad = vec![vec![C64::new(0.5, 0.0), C64::new(0.6, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0)]];
        assert!(matches!(
            BeamformerMatrix::new(bad, BeamformerKind::AnalogOnly),
            Err(Error::ConstraintViolation { .. })
        ));
        let ragged = vec![vec![C64::new(0.5, 0.0); 4], vec![C64::new(0.5, 0.0); 3]];
        assert!(BeamformerMatrix::new(ragged, BeamformerKind::AnalogOnly).is_err());
    }

    #[test]
    fn single_user_sinr_has_no_interference() {
        let cfg = ArrayConfig::half_wavelength(8).unwrap();
        let s = random_scenario(&cfg, 1, 2, 1).unwrap();
        let f = BeamformerMatrix::new(vec![matched(s.users[0].vector())], BeamformerKind::AnalogOnly).unwrap();
        let g = dot(s.users[0].vector(), f.column(0)).norm_sqr();
        let v = sinr(&s.users, &f, 0, 2.0, 0.1).unwrap();
        assert!((v - 2.0 * g / 0.1).abs() < 1e-9 * v);
        assert_eq!(slnr(&s.users, &f, 0, 2.0, 0.1).unwrap(), v);
        let r = sum_rate(&s.users, &f, 2.0, 0.1).unwrap();
        assert!((r - achievable_rate(v)).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_columns_leave_only_noise() {
        // h_1 = e_1 direction, f_2 orthogonal to h_1 via alternating signs
        let h1 = vec![C64::new(1.0, 0.0); 4];
        let h2 = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        let f1: Vec<C64> = h1.iter().map(|z| z * 0.5).collect();
        let f2: Vec<C64> = h2.iter().map(|z| z * 0.5).collect();
        let f = BeamformerMatrix::new(vec![f1, f2], BeamformerKind::AnalogOnly).unwrap();
        let chans = [h1, h2];
        let v = sinr(&chans, &f, 0, 1.0, 0.25).unwrap();
        // (1/2)*4 / 0.25
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_and_slnr_match_direct_evaluation() {
        let cfg = ArrayConfig::half_wavelength(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (k_users, seed) in [(2usize, 11u64), (3, 12)] {
            let s = random_scenario(&cfg, k_users, 2, seed).unwrap();
            let f = random_cm(&mut rng, 4, k_users);
            let (p, s2) = (1.3, 0.07);
            for k in 0..k_users {
                let ip = |a: &[C64], b: &[C64]| -> f64 {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for n in 0..4 {
                        re += a[n].re * b[n].re + a[n].im * b[n].im;
                        im += a[n].re * b[n].im - a[n].im * b[n].re;
                    }
                    re * re + im * im
                };
                let pk = p / k_users as f64;
                let hk = s.users[k].vector();
                let num = pk * ip(hk, f.column(k));
                let mut den_i = 0.0;
                let mut den_l = 0.0;
                for i in 0..k_users {
                    if i != k {
                        den_i += pk * ip(hk, f.column(i));
                        den_l += pk * ip(s.users[i].vector(), f.column(k));
                    }
                }
                let a = sinr(&s.users, &f, k, p, s2).unwrap();
                let b = slnr(&s.users, &f, k, p, s2).unwrap();
                assert!((a - num / (den_i + s2)).abs() < 1e-12 * a.max(1.0));
                assert!((b - num / (den_l + s2)).abs() < 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn slnr_swaps_under_relabeling() {
        let cfg = ArrayConfig::half_wavelength(6).unwrap();
        let s = random_scenario(&cfg, 2, 1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_cm(&mut rng, 6, 2);
        let swapped_h = [s.users[1].vector().to_vec(), s.users[0].vector().to_vec()];
        let swapped_f =
            BeamformerMatrix::new(vec![f.column(1).to_vec(), f.column(0).to_vec()], BeamformerKind::AnalogOnly).unwrap();
        let a = slnr(&s.users, &f, 0, 1.0, 0.1).unwrap();
        let b = slnr(&swapped_h, &swapped_f, 1, 1.0, 0.1).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate(0.0), 0.0);
        assert_eq!(achievable_rate(1.0), 1.0);
        assert_eq!(achievable_rate(3.0), 2.0);
    }

    #[test]
    fn sum_rate_is_sum_of_user_rates() {
        let cfg = ArrayConfig::half_wavelength(8).unwrap();
        let s = random_scenario(&cfg, 3, 3, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_cm(&mut rng, 8, 3);
        let total = sum_rate(&s.users, &f, 1.0, 0.01).unwrap();
        let parts: f64 = (0..3)
            .map(|k| achievable_rate(sinr(&s.users, &f, k, 1.0, 0.01).unwrap()))
            .sum();
        assert!((total - parts).abs() < 1e-12);
    }

    #[test]
    fn beam_gain_cases() {
        let cfg = ArrayConfig::half_wavelength(16).unwrap();
        let loc = PolarCoord::new(0.3, 25.0).unwrap();
        let u = nearfield_steering(&cfg, loc);
        let f = matched(u.as_slice());
        assert!((beam_gain(&cfg, &f, loc).unwrap() - 1.0).abs() < 1e-12);
        // alternating signs on a constant-modulus vector give exact orthogonality for even N
        let ortho: Vec<C64> = u
            .as_slice()
            .iter()
            .enumerate()
            .map(|(n, z)| if n % 2 == 0 { *z } else { -*z })
            .collect();
        assert!(beam_gain(&cfg, &ortho, loc).unwrap() < 1e-28);
        assert!(beam_gain(&cfg, &f[..3], loc).is_err());
    }

    #[test]
    fn pattern_grid_cases() {
        let cfg = ArrayConfig::half_wavelength(8).unwrap();
        let loc = PolarCoord::new(0.2, 10.0).unwrap();
        let f = matched(nearfield_steering(&cfg, loc).as_slice());
        let g = beam_pattern_grid(&cfg, &f, &[0.2], &[10.0]).unwrap();
        assert_eq!(g.gains, vec![beam_gain(&cfg, &f, loc).unwrap()]);
        let rotated: Vec<C64> = f.iter().map(|z| z * C64::from_polar(1.0, 1.1)).collect();
        let angles = [-1.0, -0.3, 0.0, 0.8];
        let radii = [2.0, 10.0, 20.0, 32.0];
        let a = beam_pattern_grid(&cfg, &f, &angles, &radii).unwrap();
        let b = beam_pattern_grid(&cfg, &rotated, &angles, &radii).unwrap();
        for (x, y) in a.gains.iter().zip(&b.gains) {
            assert!((x - y).abs() < 1e-12);
        }
        for (i, &ang) in angles.iter().enumerate() {
            for (j, &r) in radii.iter().enumerate() {
                let spot = beam_gain(&cfg, &f, PolarCoord::new(ang, r).unwrap()).unwrap();
                assert_eq!(a.get(i, j), spot);
            }
        }
        assert_eq!(beam_pattern_grid(&cfg, &f, &[], &[1.0]), Err(Error::EmptyGrid));
        assert!(beam_pattern_grid(&cfg, &f, &[0.0], &[129.0]).is_err());
    }

    #[test]
    fn power_examples() {
        let m = PowerModel::reference(true);
        assert!((total_power(&m, 64, 4) - 3.864).abs() < 1e-12);
        assert!((total_power(&m.with_baseband(false), 64, 4) - 3.664).abs() < 1e-12);
        let only_tx = PowerModel {
            p_tx: 2.5,
            p_rf: 0.0,
            p_ps: 0.0,
            p_bb: 0.0,
            includes_baseband: true,
        };
        assert_eq!(total_power(&only_tx, 64, 4), 2.5);
    }

    #[test]
    fn energy_efficiency_cases() {
        assert_eq!(energy_efficiency(0.0, 3.0).unwrap(), 0.0);
        let a = energy_efficiency(10.0, 2.0).unwrap();
        let b = energy_efficiency(10.0, 4.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-12);
        assert!(energy_efficiency(1.0, 0.0).is_err());
        assert!(energy_efficiency(1.0, -1.0).is_err());
        let p = total_power(&PowerModel::reference(true), 32, 3);
        let direct = 7.25 / (1.0 + 3.0 * 0.026 + 32.0 * 3.0 * 0.01 + 0.2);
        assert!((energy_efficiency(7.25, p).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn analog_model_is_more_efficient() {
        for n_bs in [16, 64] {
            let hybrid = total_power(&PowerModel::reference(true), n_bs, 4);
            let analog = total_power(&PowerModel::reference(false), n_bs, 4);
            assert!(energy_efficiency(20.0, analog).unwrap() > energy_efficiency(20.0, hybrid).unwrap());
        }
    }

    #[test]
    fn noise_examples() {
        assert!((noise_from_snr(1.0, 1, 0.0) - 1.0).abs() < 1e-15);
        assert!((noise_from_snr(1.0, 4, 20.0) - 0.0025).abs() < 1e-15);
        assert!((noise_from_snr(1.0, 2, 3.0) / noise_from_snr(1.0, 2, 13.0) - 10.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn global_phase_invariance(seed in 0u64..1000, theta in -3.0f64..3.0) {
            let cfg = ArrayConfig::half_wavelength(8).unwrap();
            let s = random_scenario(&cfg, 3, 2, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_cm(&mut rng, 8, 3);
            let rot = C64::from_polar(1.0, theta);
            let mut cols = f.columns().to_vec();
            for z in cols[1].iter_mut() { *z *= rot; }
            let g = BeamformerMatrix::new(cols, BeamformerKind::AnalogOnly).unwrap();
            for k in 0..3 {
                let a = sinr(&s.users, &f, k, 1.0, 0.1).unwrap();
                let b = sinr(&s.users, &g, k, 1.0, 0.1).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
                let a = slnr(&s.users, &f, k, 1.0, 0.1).unwrap();
                let b = slnr(&s.users, &g, k, 1.0, 0.1).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
            }
        }

        #[test]
        fn sum_rate_permutation_invariance(seed in 0u64..1000) {
            let cfg = ArrayConfig::half_wavelength(8).unwrap();
            let s = random_scenario(&cfg, 3, 2, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
            let f = random_cm(&mut rng, 8, 3);
            let perm = [2usize, 0, 1];
            let hp: Vec<Vec<C64>> = perm.iter().map(|&i| s.users[i].vector().to_vec()).collect();
            let fp = BeamformerMatrix::new(perm.iter().map(|&i| f.column(i).to_vec()).collect(), BeamformerKind::AnalogOnly).unwrap();
            let a = sum_rate(&s.users, &f, 1.0, 0.05).unwrap();
            let b = sum_rate(&hp, &fp, 1.0, 0.05).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn beam_gain_at_most_one(seed in 0u64..1000, angle in -1.5f64..1.5, radius in 1.0f64..512.0) {
            let cfg = ArrayConfig::half_wavelength(16).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_cm(&mut rng, 16, 1);
            let g = beam_gain(&cfg, f.column(0), PolarCoord::new(angle, radius).unwrap()).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
        }
    }
}
