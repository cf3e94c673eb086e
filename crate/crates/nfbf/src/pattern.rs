//! Beam patterns and per-UE gains for a fixed multi-user placement.

use nfbf_core::channel::{random_scenario_with, DrawParams};
use nfbf_core::metrics::{beam_gain, beam_pattern_grid, noise_from_snr, to_db};
use nfbf_core::scheme::{design_all, DesignParams};
use nfbf_core::{ArrayConfig, MMConfig, PathComponent, PolarCodebook, PolarCoord, Scenario, Scheme, C64};
use serde::{Deserialize, Serialize};

use crate::experiment::{AuxParams, CodebookParams};
use crate::{HarnessError, Result};

/// Reported gains are floored here so exact nulls stay finite.
pub const GAIN_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UePlacement {
    pub angle_deg: f64,
    /// In wavelengths.
    pub radius: f64,
}

/// Inclusive `start..=stop` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSpec {
    pub array: ArrayConfig,
    pub ues: Vec<UePlacement>,
    /// `None`: one unit-gain path at each UE. `Some(l)`: random gains with
    /// the UE as path 1 and `l - 1` random scatterers.
    pub random_paths: Option<usize>,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// 0-based user whose beam is mapped.
    pub target: usize,
    pub angles_deg: Range,
    /// In wavelengths.
    pub radii: Range,
    pub mm: MMConfig,
    pub codebook: CodebookParams,
    pub aux: AuxParams,
    /// Operating point for the hybrid schemes.
    pub snr_db: f64,
    pub p_tx: f64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        Self {
            array: ArrayConfig::half_wavelength(64).expect("64 elements is a valid array"),
            ues: vec![
                UePlacement {
                    angle_deg: -23.57,
                    radius: 50.0,
                },
                UePlacement {
                    angle_deg: 17.46,
                    radius: 150.0,
                },
                UePlacement {
                    angle_deg: -64.16,
                    radius: 100.0,
                },
            ],
            random_paths: None,
            seed: 0,
            schemes: vec![
                Scheme::AobfPerfect,
                Scheme::AobfImperfect,
                Scheme::SteerPerfect,
                Scheme::SteerImperfect,
            ],
            target: 0,
            angles_deg: Range {
                start: -90.0,
                stop: 89.0,
                step: 1.0,
            },
            radii: Range {
                start: 5.0,
                stop: 300.0,
                step: 5.0,
            },
            mm: MMConfig::default(),
            codebook: CodebookParams::default(),
            aux: AuxParams::default(),
            snr_db: 20.0,
            p_tx: 1.0,
        }
    }
}

impl PatternSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The scenario the schemes are designed for.
    pub fn scenario(&self) -> Result<Scenario> {
        let locations = self
            .ues
            .iter()
            .map(|u| PolarCoord::from_degrees(u.angle_deg, u.radius * self.array.wavelength()))
            .collect::<nfbf_core::Result<Vec<_>>>()?;
        if locations.is_empty() {
            return Err(HarnessError::Config("at least one UE is required".into()));
        }
        match self.random_paths {
            None => {
                let paths = locations
                    .iter()
                    .map(|&location| {
                        vec![PathComponent {
                            gain: C64::new(1.0, 0.0),
                            location,
                        }]
                    })
                    .collect();
                Ok(Scenario::new(self.array, paths, self.seed)?)
            }
            Some(l) => {
                // keep random gains and scatterers, pin path 1 to the UE
                let drawn = random_scenario_with(&self.array, locations.len(), l, self.seed, &DrawParams::default())?;
                let paths = drawn
                    .users
                    .iter()
                    .zip(&locations)
                    .map(|(u, &loc)| {
                        let mut p = u.paths().to_vec();
                        p[0].location = loc;
                        p
                    })
                    .collect();
                Ok(Scenario::new(self.array, paths, self.seed)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub scheme: String,
    pub angle: f64,
    pub radius: f64,
    pub gain_db: f64,
}

/// Gain of the target user's beam at one UE location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeGainRow {
    pub scheme: String,
    /// 1-based.
    pub ue: usize,
    pub angle: f64,
    pub radius: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PatternResult {
    pub grid: Vec<PatternRow>,
    pub ue_gains: Vec<UeGainRow>,
}

impl PatternResult {
    pub fn ue_gain_db(&self, scheme: Scheme, ue: usize) -> Option<f64> {
        self.ue_gains
            .iter()
            .find(|r| r.scheme == scheme.name() && r.ue == ue)
            .map(|r| r.gain_db)
    }
}

fn db(gain: f64) -> f64 {
    to_db(gain).max(GAIN_FLOOR_DB)
}

/// Designs every scheme for the placement and samples the target user's beam
/// on the angle x radius grid. Angles are reported in degrees, radii in
/// wavelengths.
pub fn run_beam_pattern(spec: &PatternSpec) -> Result<PatternResult> {
    let scenario = spec.scenario()?;
    let k = scenario.k();
    if spec.target >= k {
        return Err(HarnessError::Config(format!("target {} out of range for {k} UEs", spec.target)));
    }
    let needs_codebook = spec.schemes.iter().any(|s| s.csi() == nfbf_core::hbf::CsiMode::Imperfect);
    let cb = if needs_codebook {
        Some(PolarCodebook::build(&spec.array, spec.codebook.n_dis, spec.codebook.beta)?)
    } else {
        None
    };
    let params = DesignParams {
        mm: spec.mm,
        r_count: spec.aux.r,
        s_count: spec.aux.s,
        wmmse: Default::default(),
        p_tx: spec.p_tx,
        sigma2: noise_from_snr(spec.p_tx, k, spec.snr_db),
    };
    let designs = design_all(&spec.schemes, &scenario, cb.as_ref(), &params)?;

    let lambda = spec.array.wavelength();
    let angles_deg = spec.angles_deg.values();
    let radii = spec.radii.values();
    let angles: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
    let radii_m: Vec<f64> = radii.iter().map(|r| r * lambda).collect();

    let mut out = PatternResult::default();
    for d in &designs {
        let col = d.beamformer.column(spec.target);
        let name = d.scheme.name();
        if !angles.is_empty() && !radii.is_empty() {
            let grid = beam_pattern_grid(&spec.array, col, &angles, &radii_m)?;
            for (i, &a) in angles_deg.iter().enumerate() {
                for (j, &r) in radii.iter().enumerate() {
                    out.grid.push(PatternRow {
                        scheme: name.to_string(),
                        angle: a,
                        radius: r,
                        gain_db: db(grid.get(i, j)),
                    });
                }
            }
        }
        for (u, loc) in scenario.locations().into_iter().enumerate() {
            out.ue_gains.push(UeGainRow {
                scheme: name.to_string(),
                ue: u + 1,
                angle: loc.angle().to_degrees(),
                radius: loc.radius() / lambda,
                gain_db: db(beam_gain(&spec.array, col, loc)?),
            });
        }
    }
    Ok(out)
}
