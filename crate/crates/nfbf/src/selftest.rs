//! Invariant checks runnable from the command line.

use nfbf_core::channel::random_scenario;
use nfbf_core::geometry::{element_distance, nearfield_steering, polar_to_cartesian};
use nfbf_core::hbf::{effective_channel, hbf_wmmse, hbf_zf, steer_perfect, WmmseConfig};
use nfbf_core::linalg::dot;
use nfbf_core::metrics::{noise_from_snr, sum_rate, BeamformerKind};
use nfbf_core::mm::{aobf_perfect_csi, MMConfig};
use nfbf_core::scheme::{design_all, DesignParams};
use nfbf_core::{ArrayConfig, PolarCodebook, PolarCoord, Scheme, C64};

use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    /// Largest `| |f_n| - 1/sqrt(N) |` over every analog beamformer emitted.
    pub max_modulus_deviation: f64,
    pub analog_beamformers: usize,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }

    fn record_analog(&mut self, f: &nfbf_core::BeamformerMatrix) {
        if f.kind() == BeamformerKind::AnalogOnly {
            self.analog_beamformers += 1;
            self.max_modulus_deviation = self.max_modulus_deviation.max(f.max_deviation().1);
        }
    }
}

/// Runs every check on `trials` random scenarios derived from `seed`.
pub fn run_selftest(seed: u64, trials: usize) -> Result<SelftestReport> {
    let mut rep = SelftestReport::default();
    let arr = ArrayConfig::half_wavelength(32)?;

    // closed-form element distance against Cartesian geometry
    let mut worst = 0.0f64;
    for t in 0..trials as u64 {
        let s = random_scenario(&arr, 4, 3, seed.wrapping_add(t))?;
        for loc in s.channels().iter().flat_map(|u| u.paths().iter().map(|p| p.location)) {
            let c = polar_to_cartesian(loc);
            for n in 1..=arr.n_bs() {
                let offset = arr.spacing() * arr.element_offset(n)?;
                let cart = ((c.x - offset).powi(2) + c.y * c.y).sqrt();
                worst = worst.max((element_distance(&arr, loc, n)? - cart).abs() / cart);
            }
        }
    }
    rep.push("element distance", worst <= 1e-12, format!("max relative error {worst:e}"));

    // steering vectors are constant modulus with unit norm
    let mut worst = 0.0f64;
    for i in 0..64 {
        let loc = PolarCoord::new(-1.5 + 3.0 * i as f64 / 64.0, 3.0 + 30.0 * i as f64)?;
        let u = nearfield_steering(&arr, loc);
        let amp = 1.0 / (arr.n_bs() as f64).sqrt();
        for z in u.as_slice() {
            worst = worst.max((z.norm() - amp).abs());
        }
    }
    rep.push("steering modulus", worst <= 1e-12, format!("max deviation {worst:e}"));

    // beam sweeping against exhaustive scoring
    let cb = PolarCodebook::build(&arr, 80, 1.6)?;
    let mut mismatches = 0;
    let mut total = 0;
    for t in 0..trials as u64 {
        let s = random_scenario(&arr, 4, 3, seed.wrapping_add(1000 + t))?;
        for u in s.channels() {
            let h = u.vector();
            let got = cb.beam_sweep(h)?;
            let mut best = (f64::NEG_INFINITY, got);
            for idx in cb.indices() {
                let score = dot(cb.codeword(idx)?, h).norm();
                if score > best.0 {
                    best = (score, idx);
                }
            }
            total += 1;
            if best.1 != got {
                mismatches += 1;
            }
        }
    }
    rep.push("beam sweep oracle", mismatches == 0, format!("{mismatches} of {total} mismatched"));

    // MM descent with spectral loading
    let mm = MMConfig {
        t_max: 300,
        ..MMConfig::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials as u64 {
        let s = random_scenario(&arr, 4, 3, seed.wrapping_add(2000 + t))?;
        let (f, report) = aobf_perfect_csi(s.channels(), &mm)?;
        rep.record_analog(&f);
        worst = worst.max(report.max_relative_increase());
    }
    rep.push("mm descent", worst <= 1e-9, format!("max relative increase {worst:e}"));

    // ZF nulls inter-user terms; WMMSE does not lose to ZF
    let mut leak = 0.0f64;
    let mut deficit = f64::NEG_INFINITY;
    let sigma2 = noise_from_snr(1.0, 4, 0.0);
    for t in 0..trials as u64 {
        let s = random_scenario(&arr, 4, 3, seed.wrapping_add(3000 + t))?;
        let h: Vec<Vec<C64>> = s.channels().iter().map(|u| u.vector().to_vec()).collect();
        let f_ab = steer_perfect(&h)?;
        rep.record_analog(&f_ab);
        let eff = effective_channel(&f_ab, &h)?;
        let Ok(zf) = hbf_zf(&f_ab, &eff) else { continue };
        for (k, hk) in h.iter().enumerate() {
            let signal = dot(hk, zf.composite.column(k)).norm_sqr();
            for i in (0..4).filter(|&i| i != k) {
                leak = leak.max(dot(hk, zf.composite.column(i)).norm_sqr() / signal);
            }
        }
        let (w, _) = hbf_wmmse(&f_ab, &eff, 1.0, sigma2, &WmmseConfig::default())?;
        let rz = sum_rate(&h, &zf.composite, 1.0, sigma2)?;
        let rw = sum_rate(&h, &w.composite, 1.0, sigma2)?;
        deficit = deficit.max(rz - rw);
    }
    rep.push("zf nulling", leak <= 1e-9, format!("max relative leakage {leak:e}"));
    rep.push("wmmse vs zf", deficit <= 1e-9, format!("max ZF advantage {deficit:e}"));

    // every scheme emits beamformers meeting its constraint
    let params = DesignParams {
        mm,
        r_count: 4,
        s_count: 4,
        wmmse: WmmseConfig::default(),
        p_tx: 1.0,
        sigma2: noise_from_snr(1.0, 4, 20.0),
    };
    let mut failures = 0;
    for t in 0..trials as u64 {
        let s = random_scenario(&arr, 4, 3, seed.wrapping_add(4000 + t))?;
        match design_all(&Scheme::ALL, &s, Some(&cb), &params) {
            Ok(designs) => {
                for d in &designs {
                    rep.record_analog(&d.beamformer);
                    if d.beamformer.validate().is_err() {
                        failures += 1;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    rep.push("scheme constraints", failures == 0, format!("{failures} violations"));

    let dev = rep.max_modulus_deviation;
    let count = rep.analog_beamformers;
    rep.push(
        "constant modulus",
        dev <= 1e-9,
        format!("max deviation {dev:e} over {count} analog beamformers"),
    );
    Ok(rep)
}
