//! The eight compared schemes and a per-trial dispatcher.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::codebook::{CodewordIndex, PolarCodebook};
use crate::hbf::{
    effective_channel, hbf_wmmse, hbf_zf, steer_imperfect, steer_perfect, CsiMode, WmmseConfig,
};
use crate::metrics::{BeamformerKind, BeamformerMatrix};
use crate::mm::{aobf_imperfect_csi, aobf_perfect_csi, MMConfig, MMReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    AobfPerfect,
    AobfImperfect,
    SteerPerfect,
    SteerImperfect,
    HbfZfPerfect,
    HbfZfImperfect,
    HbfWmmsePerfect,
    HbfWmmseImperfect,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::AobfPerfect,
        Scheme::AobfImperfect,
        Scheme::SteerPerfect,
        Scheme::SteerImperfect,
        Scheme::HbfZfPerfect,
        Scheme::HbfZfImperfect,
        Scheme::HbfWmmsePerfect,
        Scheme::HbfWmmseImperfect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::AobfPerfect => "aobf-perfect",
            Scheme::AobfImperfect => "aobf-imperfect",
            Scheme::SteerPerfect => "steer-perfect",
            Scheme::SteerImperfect => "steer-imperfect",
            Scheme::HbfZfPerfect => "hbf-zf-perfect",
            Scheme::HbfZfImperfect => "hbf-zf-imperfect",
            Scheme::HbfWmmsePerfect => "hbf-wmmse-perfect",
            Scheme::HbfWmmseImperfect => "hbf-wmmse-imperfect",
        }
    }

    pub fn csi(self) -> CsiMode {
        match self {
            Scheme::AobfPerfect | Scheme::SteerPerfect | Scheme::HbfZfPerfect | Scheme::HbfWmmsePerfect => {
                CsiMode::Perfect
            }
            _ => CsiMode::Imperfect,
        }
    }

    /// Hybrid schemes pay for baseband processing.
    pub fn is_hybrid(self) -> bool {
        matches!(
            self,
            Scheme::HbfZfPerfect | Scheme::HbfZfImperfect | Scheme::HbfWmmsePerfect | Scheme::HbfWmmseImperfect
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or(Error::InvalidParameter("unknown scheme name"))
    }
}

/// Everything a scheme needs besides the channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams {
    pub mm: MMConfig,
    pub r_count: usize,
    pub s_count: usize,
    pub wmmse: WmmseConfig,
    pub p_tx: f64,
    pub sigma2: f64,
}

/// Output of one scheme on one trial.
#[derive(Debug, Clone)]
pub struct Design {
    pub scheme: Scheme,
    pub beamformer: BeamformerMatrix,
    pub mm_report: Option<MMReport>,
    /// ZF met a singular effective channel and fell back to `F_DB = I`.
    pub zf_fallback: bool,
}

/// Noiseless beam sweeping for every user.
pub fn sweep_users(cb: &PolarCodebook, scenario: &Scenario) -> Result<Vec<CodewordIndex>> {
    scenario.channels().iter().map(|u| cb.beam_sweep(u.vector())).collect()
}

fn analog_stage(
    csi: CsiMode,
    scenario: &Scenario,
    cb: Option<&PolarCodebook>,
    sweep: Option<&[CodewordIndex]>,
) -> Result<BeamformerMatrix> {
    match csi {
        CsiMode::Perfect => steer_perfect(scenario.channels()),
        CsiMode::Imperfect => steer_imperfect(
            cb.ok_or(Error::MissingInput("codebook"))?,
            sweep.ok_or(Error::MissingInput("codeword indices"))?,
        ),
    }
}

/// Runs one scheme. Imperfect-CSI schemes need the codebook and the sweep
/// result; the true channels are then only used for the effective channel
/// of the hybrid schemes.
pub fn design(
    scheme: Scheme,
    scenario: &Scenario,
    cb: Option<&PolarCodebook>,
    sweep: Option<&[CodewordIndex]>,
    params: &DesignParams,
) -> Result<Design> {
    let mut mm_report = None;
    let mut zf_fallback = false;
    let beamformer = match scheme {
        Scheme::AobfPerfect => {
            let (f, rep) = aobf_perfect_csi(scenario.channels(), &params.mm)?;
            mm_report = Some(rep);
            f
        }
        Scheme::AobfImperfect => {
            let cb = cb.ok_or(Error::MissingInput("codebook"))?;
            let sweep = sweep.ok_or(Error::MissingInput("codeword indices"))?;
            let (f, rep) = aobf_imperfect_csi(cb, sweep, params.r_count, params.s_count, &params.mm)?;
            mm_report = Some(rep);
            f
        }
        Scheme::SteerPerfect | Scheme::SteerImperfect => analog_stage(scheme.csi(), scenario, cb, sweep)?,
        Scheme::HbfZfPerfect | Scheme::HbfZfImperfect => {
            let f_ab = analog_stage(scheme.csi(), scenario, cb, sweep)?;
            let eff = effective_channel(&f_ab, scenario.channels())?;
            match hbf_zf(&f_ab, &eff) {
                Ok(h) => h.composite,
                Err(Error::SingularChannel(_)) => {
                    zf_fallback = true;
                    BeamformerMatrix::new(f_ab.into_columns(), BeamformerKind::HybridComposite)?
                }
                Err(e) => return Err(e),
            }
        }
        Scheme::HbfWmmsePerfect | Scheme::HbfWmmseImperfect => {
            let f_ab = analog_stage(scheme.csi(), scenario, cb, sweep)?;
            let eff = effective_channel(&f_ab, scenario.channels())?;
            hbf_wmmse(&f_ab, &eff, params.p_tx, params.sigma2, &params.wmmse)?.0.composite
        }
    };
    beamformer.validate()?;
    Ok(Design {
        scheme,
        beamformer,
        mm_report,
        zf_fallback,
    })
}

/// Runs every scheme on one scenario, sweeping once for all imperfect ones.
pub fn design_all(
    schemes: &[Scheme],
    scenario: &Scenario,
    cb: Option<&PolarCodebook>,
    params: &DesignParams,
) -> Result<Vec<Design>> {
    let sweep = if schemes.iter().any(|s| s.csi() == CsiMode::Imperfect) {
        Some(sweep_users(cb.ok_or(Error::MissingInput("codebook"))?, scenario)?)
    } else {
        None
    };
    schemes
        .iter()
        .map(|&s| design(s, scenario, cb, sweep.as_deref(), params))
        .collect()
}
