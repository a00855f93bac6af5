use std::path::PathBuf;

use anyhow::anyhow;

use encost_core::descriptors::{BlockGridSpec, SCHEMA_VERSION};
use encost_core::estimation::{fit_energy_linear, fit_time_model, mape, time_mape, DescriptorTable};
use encost_core::io::{read_descriptors, read_records_path};
use encost_core::models::{
    content_factor, predict_energy, predict_time_kpix, EncodingRecord, FitMetadata, ModelDocument,
};

use super::{FitOptions, SpecOptions};
use crate::manifest::RunManifest;
use crate::output::write_artifact;
use crate::{CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Encoding records CSV.
    #[arg(long)]
    records: PathBuf,

    /// Descriptor JSON file or directory (not needed for --spatial none --temporal none).
    #[arg(long)]
    descriptors: Option<PathBuf>,

    #[command(flatten)]
    spec: SpecOptions,

    #[command(flatten)]
    fit: FitOptions,

    /// Where to write the model JSON.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

/// The block geometry shared by every descriptor set the records use.
pub fn common_block_spec(records: &[EncodingRecord], table: &DescriptorTable) -> anyhow::Result<BlockGridSpec> {
    let mut found: Option<(BlockGridSpec, &str)> = None;
    for r in records {
        let Some(d) = table.get(&r.sequence_id) else { continue };
        match found {
            None => found = Some((d.block_spec, &d.sequence_id)),
            Some((spec, first)) if spec != d.block_spec => {
                return Err(anyhow!(
                    "descriptor sets {first:?} and {:?} were computed with different block grids",
                    d.sequence_id
                ));
            }
            Some(_) => {}
        }
    }
    Ok(found.map(|f| f.0).unwrap_or_default())
}

fn range(values: impl Iterator<Item = u32>) -> (u32, u32) {
    values.fold((u32::MAX, u32::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn run(ctx: &Context, args: Args) -> CmdResult {
    let spec = args.spec.spec()?;
    let cfg = args.fit.config(0)?;
    let records = read_records_path(&args.records)?;
    let table = match &args.descriptors {
        Some(p) => read_descriptors(p)?,
        None if spec.is_content_blind() => DescriptorTable::new(),
        None => return Err(crate::usage("--descriptors is required unless both sources are none")),
    };
    let block_spec = common_block_spec(&records, &table)?;

    let fit = fit_time_model(&records, &table, &spec, &cfg)?;
    let training_mape = time_mape(&fit.params, &records, &table, &spec)?;

    let mut energy_params = None;
    let mut energy_training_mape = None;
    if !records.is_empty() && records.iter().all(|r| r.energy_j.is_some()) {
        let ep = fit_energy_linear(&records)?;
        let mut measured = Vec::with_capacity(records.len());
        let mut predicted = Vec::with_capacity(records.len());
        for r in &records {
            let c = if spec.is_content_blind() {
                1.0
            } else {
                content_factor(&table[&r.sequence_id], &spec)?
            };
            let t_kpix = predict_time_kpix(&fit.params, c, r.n_intra, r.crf, r.preset)?;
            measured.push(r.energy_j.expect("checked above"));
            predicted.push(predict_energy(&ep, t_kpix, r.width, r.height, r.n_frames)?);
        }
        energy_training_mape = Some(mape(&measured, &predicted)?);
        energy_params = Some(ep);
    } else if records.iter().any(|r| r.energy_j.is_some()) {
        log::warn!("energy model not fitted: some records lack energy");
    }

    let mut inputs = vec![args.records.clone()];
    inputs.extend(args.descriptors.clone());
    let manifest = RunManifest::new("fit", &inputs, ctx.timestamp())?
        .with("content_spec", spec)
        .with("objective", cfg.objective)
        .with("max_iterations", cfg.max_iterations)
        .with("tolerance", cfg.tolerance);

    let doc = ModelDocument {
        schema_version: SCHEMA_VERSION,
        time_params: fit.params,
        energy_params,
        content_spec: spec,
        block_spec,
        fit_metadata: FitMetadata {
            date: ctx.timestamp(),
            dataset_hash: manifest.dataset_hash.clone(),
            objective_kind: cfg.objective.to_string(),
            objective: fit.objective,
            training_mape,
            energy_training_mape,
            iterations: fit.iterations,
            converged: fit.converged,
            frozen: fit.frozen.iter().map(|s| s.to_string()).collect(),
            content_floor: spec.floor,
            preset_range: range(records.iter().map(|r| r.preset)),
            crf_range: range(records.iter().map(|r| r.crf)),
        },
    };
    write_artifact(&args.out, &doc, &manifest)?;

    outln!("spec {}", spec.label());
    outln!("objective ({}) {:.6e}", cfg.objective, fit.objective);
    outln!("training MAPE {training_mape:.3}%");
    if let Some(e) = energy_training_mape {
        outln!("energy training MAPE {e:.3}%");
    }
    if !fit.converged {
        log::warn!(
            "refinement stopped after {} iterations without converging",
            fit.iterations
        );
    }
    if !fit.frozen.is_empty() {
        log::warn!("held fixed (no variation in data): {}", fit.frozen.join(", "));
    }
    Ok(Status::Success)
}
