use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nfbf::experiment::{ExperimentKind, ExperimentSpec};
use nfbf::io::{self as nio, Format};
use nfbf::pattern::PatternSpec;
use nfbf_core::channel::random_scenario;
use nfbf_core::{ArrayConfig, PolarCodebook};

#[derive(Parser)]
#[command(name = "nfbf", version, about = "Near-field analog-only beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment.
    Run {
        /// JSON experiment file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        experiment: Option<CliExperiment>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// SNR values in dB; the sweep for SNR experiments, else a single operating point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr_db: Option<Vec<f64>>,
        /// Antenna counts; the sweep for N_BS experiments, else a single value.
        #[arg(long, value_delimiter = ',')]
        nbs: Option<Vec<usize>>,
        /// User counts; the sweep for K experiments, else a single value.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Beam patterns and per-UE gains for a fixed placement.
    Pattern {
        /// JSON pattern file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Random gains with this many paths per user instead of one unit path.
        #[arg(long)]
        random_paths: Option<usize>,
        #[arg(long)]
        nbs: Option<usize>,
        /// Per-UE gain table; printed to standard error when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Export codeword locations.
    Codebook {
        #[arg(long, default_value_t = 64)]
        nbs: usize,
        #[arg(long, default_value_t = 320)]
        n_dis: usize,
        #[arg(long, default_value_t = 1.6)]
        beta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Write a random scenario as JSON.
    Scenario {
        #[arg(long, default_value_t = 64)]
        nbs: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliExperiment {
    SumrateVsSnr,
    SumrateVsNbs,
    SumrateVsK,
    EeVsSnr,
    AuxSweep,
}

impl From<CliExperiment> for ExperimentKind {
    fn from(e: CliExperiment) -> Self {
        match e {
            CliExperiment::SumrateVsSnr => ExperimentKind::SumrateVsSnr,
            CliExperiment::SumrateVsNbs => ExperimentKind::SumrateVsNbs,
            CliExperiment::SumrateVsK => ExperimentKind::SumrateVsK,
            CliExperiment::EeVsSnr => ExperimentKind::EeVsSnr,
            CliExperiment::AuxSweep => ExperimentKind::AuxSweep,
        }
    }
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
}

/// Applies a list flag: it replaces the sweep when the experiment sweeps this
/// quantity and must be a single value otherwise.
fn apply_list(spec: &mut ExperimentSpec, swept: bool, values: Vec<f64>, name: &str) -> anyhow::Result<Option<f64>> {
    if swept {
        spec.sweep = values;
        Ok(None)
    } else if values.len() == 1 {
        Ok(Some(values[0]))
    } else {
        bail!("--{name} takes a single value unless the experiment sweeps it")
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: Option<PathBuf>,
    experiment: Option<CliExperiment>,
    seed: Option<u64>,
    trials: Option<usize>,
    snr_db: Option<Vec<f64>>,
    nbs: Option<Vec<usize>>,
    k: Option<Vec<usize>>,
    output: Output,
) -> anyhow::Result<()> {
    let mut spec: ExperimentSpec = match &config {
        Some(p) => read_json(p)?,
        None => ExperimentSpec::default(),
    };
    if let Some(e) = experiment {
        spec.experiment = e.into();
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    let kind = spec.experiment;
    if let Some(v) = snr_db {
        let swept = matches!(kind, ExperimentKind::SumrateVsSnr | ExperimentKind::EeVsSnr);
        if let Some(x) = apply_list(&mut spec, swept, v, "snr-db")? {
            spec.snr_db = x;
        }
    }
    if let Some(v) = nbs {
        let values = v.into_iter().map(|n| n as f64).collect();
        if let Some(x) = apply_list(&mut spec, kind == ExperimentKind::SumrateVsNbs, values, "nbs")? {
            spec.array = ArrayConfig::new(x as usize, spec.array.wavelength(), spec.array.spacing())?;
        }
    }
    if let Some(v) = k {
        let values = v.into_iter().map(|n| n as f64).collect();
        if let Some(x) = apply_list(&mut spec, kind == ExperimentKind::SumrateVsK, values, "k")? {
            spec.k = x as usize;
        }
    }
    let table = nfbf::run_experiment(&spec)?;
    let mut w = sink(&output.out)?;
    nio::write_table(&table, output.format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn pattern(
    config: Option<PathBuf>,
    seed: Option<u64>,
    random_paths: Option<usize>,
    nbs: Option<usize>,
    table: Option<PathBuf>,
    output: Output,
) -> anyhow::Result<()> {
    let mut spec: PatternSpec = match &config {
        Some(p) => read_json(p)?,
        None => PatternSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if random_paths.is_some() {
        spec.random_paths = random_paths;
    }
    if let Some(n) = nbs {
        spec.array = ArrayConfig::new(n, spec.array.wavelength(), spec.array.spacing())?;
    }
    let result = nfbf::run_beam_pattern(&spec)?;
    let mut w = sink(&output.out)?;
    nio::write_pattern(&result.grid, output.format, &mut w)?;
    w.flush()?;
    match table {
        Some(p) => {
            let mut t = sink(&Some(p))?;
            nio::write_ue_gains(&result.ue_gains, output.format, &mut t)?;
            t.flush()?;
        }
        None => {
            let mut err = io::stderr().lock();
            writeln!(err, "{:<20} {:>4} {:>10} {:>8} {:>12}", "scheme", "ue", "angle", "radius", "gain_db")?;
            for r in &result.ue_gains {
                writeln!(
                    err,
                    "{:<20} {:>4} {:>10.2} {:>8.1} {:>12.4}",
                    r.scheme, r.ue, r.angle, r.radius, r.gain_db
                )?;
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            experiment,
            seed,
            trials,
            snr_db,
            nbs,
            k,
            output,
        } => run(config, experiment, seed, trials, snr_db, nbs, k, output)?,
        Command::Pattern {
            config,
            seed,
            random_paths,
            nbs,
            table,
            output,
        } => pattern(config, seed, random_paths, nbs, table, output)?,
        Command::Codebook {
            nbs,
            n_dis,
            beta,
            output,
        } => {
            let cb = PolarCodebook::build(&ArrayConfig::half_wavelength(nbs)?, n_dis, beta)?;
            let mut w = sink(&output.out)?;
            nio::write_codebook(&cb, output.format, &mut w)?;
            w.flush()?;
        }
        Command::Scenario { nbs, k, l, seed, out } => {
            let s = random_scenario(&ArrayConfig::half_wavelength(nbs)?, k, l, seed)?;
            let mut w = sink(&out)?;
            writeln!(w, "{}", nio::scenario_to_json(&s)?)?;
            w.flush()?;
        }
        Command::Selftest { seed, trials } => {
            let rep = nfbf::selftest::run_selftest(seed, trials)?;
            for c in &rep.checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(rep.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
