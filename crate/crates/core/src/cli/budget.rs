//! Noise-budget sweeps and their CSV/JSON rendering.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cli::config::{Format, RunConfig};
use crate::combine::{evaluate_channel, ChannelSpec, NoiseBudgetRow};
use crate::error::Result;
use crate::freqdomain::{check_stability, output_transfer};
use crate::model::{derive_couplings, validate_regime_with, DerivedCouplings, RegimeFinding, SystemParams};

/// Rows ordered by frequency, then by channel in declaration order (with
/// power and loss variants nested inside each channel).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetTable {
    pub units: &'static str,
    pub regime_findings: Vec<LabelledFinding>,
    pub rows: Vec<NoiseBudgetRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelledFinding {
    pub variant: String,
    #[serde(flatten)]
    pub finding: RegimeFinding,
}

struct Variant {
    suffix: String,
    params: SystemParams,
    couplings: DerivedCouplings,
}

struct Series<'a> {
    label: String,
    variant: &'a Variant,
    spec: ChannelSpec,
}

fn variants(cfg: &RunConfig, base: &SystemParams) -> Result<Vec<Variant>> {
    let powers = &cfg.sweep.power;
    let losses: Vec<Option<f64>> = match &cfg.sweep.loss {
        Some(l) => l.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &power in powers {
        for &loss in &losses {
            let mut params = base.clone().with_power_scaled(power);
            if let Some(r) = loss {
                params = params.with_loss_ratio(r);
            }
            let mut tags = Vec::new();
            if powers.len() > 1 {
                tags.push(format!("power={power}"));
            }
            if let (Some(r), true) = (loss, losses.len() > 1) {
                tags.push(format!("loss={r}"));
            }
            let suffix = if tags.is_empty() { String::new() } else { format!("@{}", tags.join(",")) };
            // a budget is a steady-state spectrum, which needs stable dynamics
            check_stability(&params)?;
            let couplings = derive_couplings(&params)?;
            out.push(Variant { suffix, params, couplings });
        }
    }
    Ok(out)
}

pub fn run_budget(cfg: &RunConfig) -> Result<BudgetTable> {
    let base = cfg.resolved_params()?;
    let variants = variants(cfg, &base)?;

    let mut regime_findings = Vec::new();
    for v in &variants {
        for finding in validate_regime_with(&v.params, &cfg.regime)? {
            regime_findings.push(LabelledFinding { variant: v.suffix.trim_start_matches('@').to_string(), finding });
        }
    }

    let mut series = Vec::new();
    for label in &cfg.channels {
        for v in &variants {
            series.push(Series { label: format!("{label}{}", v.suffix), variant: v, spec: cfg.channel_spec(label, &v.params)? });
        }
    }

    let omegas = cfg.omegas();
    let jobs: Vec<(f64, &Series)> = omegas.iter().flat_map(|&w| series.iter().map(move |s| (w, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(omega, s)| {
            let transfer = output_transfer(&s.variant.params, omega)?;
            evaluate_channel(&s.variant.params, &s.variant.couplings, &transfer, &s.spec, &s.label)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BudgetTable { units: "gamma_m", regime_findings, rows })
}

pub fn write_rows_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_budget<W: Write>(table: &BudgetTable, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => write_rows_csv(&table.rows, out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, table)?;
            writeln!(out)?;
            Ok(())
        }
    }
}
