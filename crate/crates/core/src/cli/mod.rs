//! Config-driven runs: noise-budget sweeps, named scenarios, overlap
//! reports and time-domain cross-checks, plus the command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical or instability
//! error, 3 scenario verdict failed.

pub mod budget;
pub mod config;
pub mod recipes;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::combine::{beta_combination, ChannelSpec, CombinationWeights};
use crate::error::{Error, Result};
use crate::model::{derive_couplings, SystemParams};
use crate::oracle::{cross_check, simulate, DeviationReport};
use crate::overlap::{overlap_eta, Parity, VANISHING_OVERLAP};

pub use budget::{run_budget, write_budget, BudgetTable};
pub use config::{read_json, Format, ModeSet, RunConfig};
pub use recipes::{run_recipe, RecipeOutput, Verdict};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    pub modes: ModeSet,
    /// If given, `η+` is set to `ratio · η−` and the implied `g±` are reported.
    #[serde(default)]
    pub params: Option<SystemParams>,
    /// Where to write the updated parameters as JSON.
    #[serde(default)]
    pub write_params: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapStatus {
    Ok,
    ParityForbidden,
    Vanishing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub status: OverlapStatus,
    /// `∫Ψ1 Ψ2 Ψm`
    pub eta_plus_overlap: f64,
    /// `∫Ψ1 Ψ0 Ψm`
    pub eta_minus_overlap: f64,
    pub parity_plus: Parity,
    pub parity_minus: Parity,
    pub eta_ratio: Option<f64>,
    pub message: Option<String>,
    pub g_plus: Option<f64>,
    pub g_minus: Option<f64>,
    pub params: Option<SystemParams>,
}

/// Overlap integrals and the coupling ratio. A vanishing `η−` is reported
/// in the status rather than returned as an error.
pub fn run_overlap(cfg: &OverlapConfig) -> Result<OverlapReport> {
    let [p0, p1, p2, pm] = cfg.modes.profiles()?;
    let plus = overlap_eta(&p1, &p2, &pm)?;
    let minus = overlap_eta(&p1, &p0, &pm)?;
    let parity_plus = Parity::product(&[p1.parity(), p2.parity(), pm.parity()]);
    let parity_minus = Parity::product(&[p1.parity(), p0.parity(), pm.parity()]);
    let mut report = OverlapReport {
        status: OverlapStatus::Ok,
        eta_plus_overlap: plus,
        eta_minus_overlap: minus,
        parity_plus,
        parity_minus,
        eta_ratio: None,
        message: None,
        g_plus: None,
        g_minus: None,
        params: None,
    };
    if minus.abs() <= VANISHING_OVERLAP {
        let (status, message) = if parity_minus == Parity::Odd {
            (OverlapStatus::ParityForbidden, "η− is parity-forbidden: Ψ1 Ψ0 Ψm is odd, so η+/η− is undefined")
        } else {
            (OverlapStatus::Vanishing, "η− overlap vanishes numerically, so η+/η− is undefined")
        };
        report.status = status;
        report.message = Some(message.into());
        return Ok(report);
    }
    let ratio = plus.abs() / minus.abs();
    report.eta_ratio = Some(ratio);
    if let Some(base) = &cfg.params {
        let mut p = base.clone();
        p.eta_plus = ratio * p.eta_minus;
        let c = derive_couplings(&p)?;
        report.g_plus = Some(c.g_plus);
        report.g_minus = Some(c.g_minus);
        if let Some(path) = &cfg.write_params {
            write_params(&p, path)?;
        }
        report.params = Some(p);
    }
    Ok(report)
}

/// Writes parameters as JSON; floats use shortest round-trip formatting.
pub fn write_params(params: &SystemParams, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, params)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRun {
    pub channel: String,
    pub seed: u64,
    pub samples: usize,
    pub report: DeviationReport,
}

/// Simulates the configured system and compares the PSD of
/// `simulation.channel` with the frequency-domain prediction.
pub fn run_oracle(cfg: &RunConfig, seed: Option<u64>) -> Result<OracleRun> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::config("simulation", "oracle runs need a `simulation` section"))?;
    let params = cfg.resolved_params()?;
    let weights: CombinationWeights = match cfg.channel_spec(&sim.channel, &params)? {
        ChannelSpec::Fixed(w) => w,
        ChannelSpec::Beta => beta_combination(&params, &derive_couplings(&params)?)?,
        ChannelSpec::Optimal | ChannelSpec::OptimalReal => {
            return Err(Error::config("simulation.channel", "frequency-dependent weights cannot be simulated"))
        }
    };
    if !weights.is_real() {
        return Err(Error::config("simulation.channel", "time-domain channels need real weights"));
    }
    let mut sim_cfg = sim.sim_config(&params)?;
    if let Some(s) = seed {
        sim_cfg.seed = s;
    }
    let out = simulate(&params, &sim_cfg)?;
    let report = cross_check(&out, &weights, &params, &sim_cfg.inputs, params.gamma_m, &sim.welch)?;
    Ok(OracleRun { channel: sim.channel.clone(), seed: sim_cfg.seed, samples: out.b_plus.len(), report })
}

#[derive(Debug, Parser)]
#[command(name = "sideband-bae", version, about = "Noise budgets for a dual-sideband optomechanical transducer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (budget, overlap, oracle) or directory (recipe).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Overrides the seed of stochastic runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Force-referred noise budget over a frequency sweep.
    Budget,
    /// Run a named scenario and write its curves and verdict.
    Recipe {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(recipes::RECIPES))]
        name: String,
    },
    /// Mode-overlap integrals and the coupling ratio η+/η−.
    Overlap,
    /// Time-domain simulation checked against the frequency-domain PSD.
    Oracle,
}

fn need_config(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| Error::config("--config", "this subcommand needs --config PATH"))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Budget => {
            let cfg = RunConfig::load(need_config(cli)?)?;
            let table = run_budget(&cfg)?;
            for f in &table.regime_findings {
                eprintln!("warning [{}]: {} ({})", f.variant, f.finding.inequality, f.finding.detail);
            }
            let format = cli.format.or(cfg.outputs.format).unwrap_or_default();
            let path = cli.out.as_deref().or(cfg.outputs.path.as_deref());
            let mut out = sink(path)?;
            write_budget(&table, format, &mut out)?;
            out.flush()?;
            Ok(0)
        }
        Command::Recipe { name } => {
            let result = run_recipe(name, cli.seed.unwrap_or(0))?;
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let format = cli.format.unwrap_or_default();
                let curves = dir.join(format!("{name}_curves.{}", if format == Format::Csv { "csv" } else { "json" }));
                let w = BufWriter::new(File::create(curves)?);
                match format {
                    Format::Csv => budget::write_rows_csv(&result.curves, w)?,
                    Format::Json => write_json(&result.curves, w)?,
                }
                write_json(&result.verdict, BufWriter::new(File::create(dir.join(format!("{name}_verdict.json")))?))?;
            }
            write_json(&result.verdict, std::io::stdout().lock())?;
            Ok(if result.verdict.pass { 0 } else { 3 })
        }
        Command::Overlap => {
            let cfg: OverlapConfig = read_json(need_config(cli)?)?;
            let report = run_overlap(&cfg)?;
            write_json(&report, sink(cli.out.as_deref())?)?;
            if let Some(msg) = &report.message {
                eprintln!("error: {msg}");
                return Ok(2);
            }
            Ok(0)
        }
        Command::Oracle => {
            let cfg = RunConfig::load(need_config(cli)?)?;
            let run = run_oracle(&cfg, cli.seed)?;
            let out = sink(cli.out.as_deref())?;
            match cli.format.unwrap_or_default() {
                Format::Csv => budget::write_rows_csv(&run.report.bins, out)?,
                Format::Json => write_json(&run, out)?,
            }
            eprintln!(
                "{} bins, {:.1}% inside the 95% CI",
                run.report.bins.len(),
                100.0 * run.report.fraction_inside
            );
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
