//! Experiment description, loaded from JSON with unknown keys rejected.

use std::path::Path;

use nfbf_core::channel::DrawParams;
use nfbf_core::hbf::WmmseConfig;
use nfbf_core::{ArrayConfig, MMConfig, PowerModel, Scheme};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SumrateVsSnr,
    SumrateVsNbs,
    SumrateVsK,
    EeVsSnr,
    BeamPattern,
    AuxSweep,
}

impl ExperimentKind {
    /// Sweep used when the config leaves it empty.
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            ExperimentKind::SumrateVsSnr | ExperimentKind::EeVsSnr => (0..9).map(|i| -10.0 + 5.0 * i as f64).collect(),
            ExperimentKind::SumrateVsNbs => vec![16.0, 32.0, 64.0],
            ExperimentKind::SumrateVsK => vec![2.0, 4.0, 6.0, 8.0],
            ExperimentKind::AuxSweep => (1..=6).map(f64::from).collect(),
            ExperimentKind::BeamPattern => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookParams {
    pub n_dis: usize,
    pub beta: f64,
}

impl Default for CodebookParams {
    fn default() -> Self {
        Self { n_dis: 320, beta: 1.6 }
    }
}

/// Auxiliary points per user: `r` angles times `s` ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuxParams {
    pub r: usize,
    pub s: usize,
}

impl Default for AuxParams {
    fn default() -> Self {
        Self { r: 4, s: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    /// Swept values; empty selects the experiment's default sweep.
    pub sweep: Vec<f64>,
    pub seed: u64,
    pub array: ArrayConfig,
    pub k: usize,
    pub l: usize,
    /// Operating point for experiments that do not sweep SNR.
    pub snr_db: f64,
    pub mm: MMConfig,
    pub power: PowerModel,
    pub codebook: CodebookParams,
    pub aux: AuxParams,
    pub wmmse: WmmseConfig,
    pub draw: DrawParams,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SumrateVsSnr,
            schemes: Scheme::ALL.to_vec(),
            trials: 200,
            sweep: Vec::new(),
            seed: 0,
            array: ArrayConfig::half_wavelength(64).expect("64 elements is a valid array"),
            k: 4,
            l: 3,
            snr_db: 20.0,
            mm: MMConfig::default(),
            power: PowerModel::default(),
            codebook: CodebookParams::default(),
            aux: AuxParams::default(),
            wmmse: WmmseConfig::default(),
            draw: DrawParams::default(),
        }
    }
}

fn whole(v: f64, min: usize, what: &str) -> Result<usize> {
    if v.fract() != 0.0 || v < min as f64 || !v.is_finite() {
        return Err(HarnessError::Config(format!("{what} sweep value {v} must be an integer >= {min}")));
    }
    Ok(v as usize)
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        if self.sweep.is_empty() {
            self.experiment.default_sweep()
        } else {
            self.sweep.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("at least one scheme is required".into()));
        }
        if self.k == 0 || self.l == 0 {
            return Err(HarnessError::Config("k and l must be at least 1".into()));
        }
        if self.aux.r == 0 || self.aux.s == 0 {
            return Err(HarnessError::Config("aux.r and aux.s must be at least 1".into()));
        }
        self.mm.validate()?;
        self.power.validate()?;
        let sweep = self.sweep_values();
        if sweep.is_empty() {
            return Err(HarnessError::Config("sweep values must be nonempty".into()));
        }
        for &v in &sweep {
            if !v.is_finite() {
                return Err(HarnessError::Config(format!("sweep value {v} is not finite")));
            }
            self.point(v)?;
        }
        Ok(())
    }

    /// Parameters of one sweep point.
    pub fn point(&self, value: f64) -> Result<SweepPoint> {
        let mut p = SweepPoint {
            array: self.array,
            k: self.k,
            snr_db: self.snr_db,
            aux: self.aux,
        };
        match self.experiment {
            ExperimentKind::SumrateVsSnr | ExperimentKind::EeVsSnr => p.snr_db = value,
            ExperimentKind::SumrateVsNbs => {
                let n = whole(value, 2, "n_bs")?;
                p.array = ArrayConfig::new(n, self.array.wavelength(), self.array.spacing())?;
            }
            ExperimentKind::SumrateVsK => p.k = whole(value, 1, "k")?,
            ExperimentKind::AuxSweep => {
                let r = whole(value, 1, "auxiliary")?;
                p.aux = AuxParams { r, s: r };
            }
            ExperimentKind::BeamPattern => {
                return Err(HarnessError::Config(
                    "beam-pattern is produced by the pattern command, not by run".into(),
                ))
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub array: ArrayConfig,
    pub k: usize,
    pub snr_db: f64,
    pub aux: AuxParams,
}
