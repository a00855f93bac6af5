use std::path::PathBuf;

use serde::Serialize;

use encost_core::estimation::{
    cross_validate, descriptor_grid_evaluation, DescriptorTable, EnergyMode, EvaluationReport, FoldAssignment,
    GridReport,
};
use encost_core::io::{read_descriptors, read_records_path};

use super::{FitOptions, SpecOptions};
use crate::manifest::RunManifest;
use crate::output::write_artifact;
use crate::{usage, CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Encoding records CSV.
    #[arg(long)]
    records: PathBuf,

    /// Descriptor JSON file or directory.
    #[arg(long)]
    descriptors: Option<PathBuf>,

    /// Evaluate every descriptor pairing instead of a single one.
    #[arg(long)]
    grid: bool,

    #[command(flatten)]
    spec: SpecOptions,

    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 3)]
    folds: usize,

    /// Seed of the fold shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Energy evaluation: off, all-data or cross-validated.
    #[arg(long, default_value = "all-data")]
    energy: EnergyMode,

    #[command(flatten)]
    fit: FitOptions,

    /// Where to write the evaluation JSON.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct GridDocument<'a> {
    fold_assignment: &'a FoldAssignment,
    grid: &'a GridReport,
}

#[derive(Serialize)]
struct SingleDocument<'a> {
    fold_assignment: &'a FoldAssignment,
    report: &'a EvaluationReport,
}

fn print_report(report: &EvaluationReport) {
    outln!("spec {}", report.spec.label());
    for (i, m) in report.per_fold_mape.iter().enumerate() {
        outln!("fold {i} MAPE {m:.3}%");
    }
    outln!("mean MAPE {:.3}%", report.mean_mape);
    outln!("per preset:");
    for (p, m) in &report.per_preset_mape {
        outln!("  {p:>2} {m:.3}%");
    }
    outln!("per CRF:");
    for (c, m) in &report.per_crf_mape {
        outln!("  {c:>2} {m:.3}%");
    }
    if let Some(e) = &report.energy {
        outln!("energy ({}) mean MAPE {:.3}%", e.mode, e.mean_mape);
    }
}

pub fn run(ctx: &Context, args: Args) -> CmdResult {
    if args.folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let cfg = args.fit.config(args.seed)?;
    let records = read_records_path(&args.records)?;
    let spec = args.spec.spec()?;
    let table = match &args.descriptors {
        Some(p) => read_descriptors(p)?,
        None if !args.grid && spec.is_content_blind() => DescriptorTable::new(),
        None => return Err(usage("--descriptors is required unless both sources are none")),
    };
    let folds = FoldAssignment::round_robin(&records, args.folds, args.seed)?;

    let mut inputs = vec![args.records.clone()];
    inputs.extend(args.descriptors.clone());
    let manifest = RunManifest::new("evaluate", &inputs, ctx.timestamp())?
        .with("folds", args.folds)
        .with("seed", args.seed)
        .with("energy", args.energy)
        .with("objective", cfg.objective)
        .with("max_iterations", cfg.max_iterations)
        .with("tolerance", cfg.tolerance);

    let warnings = if args.grid {
        let report = descriptor_grid_evaluation(&records, &table, &cfg, &folds, args.energy)?;
        out!("{}", report.render_time_table());
        if report.has_energy() {
            outln!();
            out!("{}", report.render_energy_table());
        }
        if let Some(out) = &args.out {
            let doc = GridDocument {
                fold_assignment: &folds,
                grid: &report,
            };
            write_artifact(out, &doc, &manifest.with("grid", true))?;
        }
        report.warnings
    } else {
        let report = cross_validate(&records, &table, &spec, &cfg, &folds, args.energy)?;
        print_report(&report);
        if let Some(out) = &args.out {
            let doc = SingleDocument {
                fold_assignment: &folds,
                report: &report,
            };
            write_artifact(out, &doc, &manifest.with("content_spec", spec))?;
        }
        report.warnings
    };
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(Status::Success)
}
