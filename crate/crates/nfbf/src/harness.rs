//! Seeded Monte Carlo runner.
//!
//! Trial `t` of sweep point `i` uses seed `base + i * trials + t`, so every
//! trial seed in a run is distinct. Trials run on a rayon pool and are
//! reduced in trial order, which makes the output independent of the
//! thread count.

use std::collections::BTreeMap;

use nfbf_core::channel::random_scenario_with;
use nfbf_core::metrics::{energy_efficiency, noise_from_snr, sum_rate, total_power};
use nfbf_core::scheme::{design_all, DesignParams};
use nfbf_core::{PolarCodebook, Scheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentKind, ExperimentSpec, SweepPoint};
use crate::{HarnessError, Result};

pub const SUM_RATE: &str = "sum_rate";
pub const ENERGY_EFFICIENCY: &str = "energy_efficiency";
/// Fraction of per-user MM runs that met the stop threshold before `t_max`.
pub const MM_CONVERGED: &str = "mm_converged";
/// Fraction of trials in which ZF met a singular effective channel.
pub const ZF_FALLBACK: &str = "zf_fallback";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub scheme: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, sweep: f64, scheme: Scheme, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep == sweep && r.scheme == scheme.name() && r.metric == metric)
    }
}

/// Sample mean and standard error of the mean (`n - 1` normalization).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Worker count from `NFBF_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("NFBF_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by `NFBF_THREADS`, or on the global pool.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

type Sample = (Scheme, &'static str, f64);

fn run_trial(
    spec: &ExperimentSpec,
    point: &SweepPoint,
    cb: Option<&PolarCodebook>,
    seed: u64,
) -> Result<Vec<Sample>> {
    let scenario = random_scenario_with(&point.array, point.k, spec.l, seed, &spec.draw)?;
    let p = spec.power.p_tx;
    let sigma2 = noise_from_snr(p, point.k, point.snr_db);
    let params = DesignParams {
        mm: spec.mm,
        r_count: point.aux.r,
        s_count: point.aux.s,
        wmmse: spec.wmmse,
        p_tx: p,
        sigma2,
    };
    let designs = design_all(&spec.schemes, &scenario, cb, &params)?;
    let mut out = Vec::with_capacity(designs.len() * 2);
    for d in designs {
        let rate = sum_rate(scenario.channels(), &d.beamformer, p, sigma2)?;
        out.push((d.scheme, SUM_RATE, rate));
        if spec.experiment == ExperimentKind::EeVsSnr {
            let model = spec.power.with_baseband(d.scheme.is_hybrid());
            let p_total = total_power(&model, point.array.n_bs(), point.k);
            out.push((d.scheme, ENERGY_EFFICIENCY, energy_efficiency(rate, p_total)?));
        }
        if let Some(rep) = &d.mm_report {
            out.push((d.scheme, MM_CONVERGED, rep.converged_count() as f64 / rep.users.len() as f64));
        }
        if matches!(d.scheme, Scheme::HbfZfPerfect | Scheme::HbfZfImperfect) {
            out.push((d.scheme, ZF_FALLBACK, if d.zf_fallback { 1.0 } else { 0.0 }));
        }
    }
    Ok(out)
}

/// Runs every trial of every sweep point and aggregates per
/// `(sweep, scheme, metric)`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let sweep = spec.sweep_values();
    let points = sweep.iter().map(|&v| spec.point(v)).collect::<Result<Vec<_>>>()?;
    let needs_codebook = spec.schemes.iter().any(|s| s.csi() == nfbf_core::hbf::CsiMode::Imperfect);

    // one codebook per distinct array
    let mut codebooks: BTreeMap<usize, PolarCodebook> = BTreeMap::new();
    if needs_codebook {
        for p in &points {
            if let std::collections::btree_map::Entry::Vacant(e) = codebooks.entry(p.array.n_bs()) {
                e.insert(PolarCodebook::build(&p.array, spec.codebook.n_dis, spec.codebook.beta)?);
            }
        }
    }

    let trials = spec.trials;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..trials).map(move |t| (i, t))).collect();
    let samples: Vec<Result<Vec<Sample>>> = with_pool(|| {
        jobs.par_iter()
            .map(|&(i, t)| {
                let seed = spec.seed.wrapping_add((i * trials + t) as u64);
                let cb = codebooks.get(&points[i].array.n_bs());
                run_trial(spec, &points[i], cb, seed)
            })
            .collect()
    })?;
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;

    let mut table = ResultTable::default();
    for (i, &value) in sweep.iter().enumerate() {
        let block = &samples[i * trials..(i + 1) * trials];
        let keys: Vec<(Scheme, &'static str)> = block[0].iter().map(|&(s, m, _)| (s, m)).collect();
        for (j, &(scheme, metric)) in keys.iter().enumerate() {
            let values: Vec<f64> = block.iter().map(|trial| trial[j].2).collect();
            let (mean, stderr) = mean_stderr(&values);
            table.rows.push(ResultRow {
                sweep: value,
                scheme: scheme.name().to_string(),
                metric: metric.to_string(),
                mean,
                stderr,
                trials,
            });
        }
    }
    Ok(table)
}
