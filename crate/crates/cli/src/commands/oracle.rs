use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use encost_core::estimation::{
    fit_content_blind_baseline, oracle_content_factors, oracle_mape, time_mape, DescriptorTable, OracleFactor,
};
use encost_core::io::read_records_path;
use encost_core::models::{ContentFactorSpec, TimeModelParams};

use super::FitOptions;
use crate::output::{to_json, write_text};
use crate::{CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Encoding records CSV.
    #[arg(long)]
    records: PathBuf,

    #[command(flatten)]
    fit: FitOptions,

    /// CSV of per-sequence factors (`sequence_id,class_id,factor,std,n`).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,

    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    blind_params: &'a TimeModelParams,
    blind_mape: f64,
    oracle_mape: f64,
    factors: &'a BTreeMap<String, OracleFactor>,
}

fn factors_csv(factors: &BTreeMap<String, OracleFactor>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sequence_id", "class_id", "factor", "std", "n"])?;
    for (id, f) in factors {
        w.write_record([
            id.clone(),
            f.class_id.clone(),
            f.factor.to_string(),
            f.std.to_string(),
            f.n.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn run(_ctx: &Context, args: Args) -> CmdResult {
    let cfg = args.fit.config(0)?;
    let records = read_records_path(&args.records)?;
    let fit = fit_content_blind_baseline(&records, &cfg)?;
    let blind_mape = time_mape(
        &fit.params,
        &records,
        &DescriptorTable::new(),
        &ContentFactorSpec::content_blind(),
    )?;
    let factors = oracle_content_factors(&records, &fit.params)?;
    let oracle = oracle_mape(&records, &fit.params, &factors)?;

    if let Some(out) = &args.out {
        write_text(out, &factors_csv(&factors)?)?;
    }
    if args.json {
        let report = Report {
            blind_params: &fit.params,
            blind_mape,
            oracle_mape: oracle,
            factors: &factors,
        };
        out!("{}", to_json(&report)?);
    } else {
        outln!("content-blind MAPE {blind_mape:.3}%");
        outln!("oracle MAPE {oracle:.3}%");
        for (id, f) in &factors {
            outln!("{id} {} {:.4} ± {:.4} (n={})", f.class_id, f.factor, f.std, f.n);
        }
    }
    Ok(Status::Success)
}
