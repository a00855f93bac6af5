use std::path::PathBuf;

use serde::Serialize;

use encost_core::io::{read_series_path, read_trace_path};
use encost_core::power::{
    confidence_satisfied, encoding_energy, ConfidenceDecision, EncodingEnergy, MeasurementSeries, TraceLabel,
    DEFAULT_ALPHA, DEFAULT_BETA,
};
use encost_core::Error;

use crate::output::to_json;
use crate::{usage, CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// CSV `t_s,power_w` trace recorded during the encode.
    #[arg(long, requires_all = ["idle", "duration"])]
    total: Option<PathBuf>,

    /// CSV `t_s,power_w` trace recorded while idle.
    #[arg(long, requires = "total")]
    idle: Option<PathBuf>,

    /// Encode duration in seconds.
    #[arg(long, requires = "total")]
    duration: Option<f64>,

    /// CSV with an `energy_j` column of repeated measurements.
    #[arg(long)]
    series: Option<PathBuf>,

    /// Confidence level of the stopping rule.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,

    /// Relative half-width target of the stopping rule.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,

    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<EncodingEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<ConfidenceDecision>,
}

pub fn run(_ctx: &Context, args: Args) -> CmdResult {
    if args.total.is_none() && args.series.is_none() {
        return Err(usage("pass --total/--idle/--duration, --series, or both"));
    }
    let energy = match (&args.total, &args.idle, args.duration) {
        (Some(t), Some(i), Some(d)) => {
            let total = read_trace_path(t, TraceLabel::Total)?;
            let idle = read_trace_path(i, TraceLabel::Idle)?;
            Some(encoding_energy(&total, &idle, d)?)
        }
        _ => None,
    };
    let confidence = match &args.series {
        Some(p) => {
            let series = MeasurementSeries::new(read_series_path(p)?, args.alpha, args.beta).map_err(|e| match e {
                Error::Config(m) => usage(m),
                e => e.into(),
            })?;
            Some(confidence_satisfied(&series)?)
        }
        None => None,
    };

    let report = Report { energy, confidence };
    if args.json {
        out!("{}", to_json(&report)?);
    } else {
        if let Some(e) = &report.energy {
            outln!("energy_j {:.6}", e.energy_j);
            outln!("total_j {:.6}", e.total_j);
            outln!("idle_j {:.6}", e.idle_j);
        }
        if let Some(c) = &report.confidence {
            outln!(
                "{} after {} runs: 2*s/sqrt(m)*t = {:.6} vs beta*mean = {:.6}",
                if c.satisfied {
                    "precise enough"
                } else {
                    "more runs needed"
                },
                c.m,
                c.lhs,
                c.rhs
            );
        }
    }
    Ok(Status::Success)
}
