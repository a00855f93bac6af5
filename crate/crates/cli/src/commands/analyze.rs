use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use log::info;
use rayon::prelude::*;

use encost_core::descriptors::{
    analyze_stream, AnalysisOptions, BlockGridSpec, DescriptorSet, FrameAggregate, Selection,
};
use encost_core::io::{descriptor_file_name, read_ultrafast_times_path};
use encost_core::y4m::Y4mReader;

use crate::manifest::RunManifest;
use crate::output::write_artifact;
use crate::{usage, CmdResult, Context, Failure, Status};

pub const THREADS_ENV: &str = "ENCOST_THREADS";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Y4M clip to analyze (repeatable).
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,

    /// File listing one clip path per line.
    #[arg(long)]
    list: Option<PathBuf>,

    /// Sequence id for a single input (defaults to the file stem).
    #[arg(long)]
    id: Option<String>,

    /// DCT block size for the VCA descriptors: 16, 32 or 64.
    #[arg(long, default_value_t = 32)]
    block_size: usize,

    /// Descriptors to compute: `all` or a comma list of si,vca_s,var,ti,vca_t,flow.
    #[arg(long, default_value = "all")]
    descriptors: Selection,

    /// Reduction of per-frame SI and per-pair TI values: mean or max.
    #[arg(long, default_value = "mean")]
    aggregate: FrameAggregate,

    /// Measured preset-13 encode time in seconds (single input only).
    #[arg(long)]
    ultrafast_time: Option<f64>,

    /// CSV of `sequence_id,time_s` preset-13 encode times.
    #[arg(long, conflicts_with = "ultrafast_time")]
    ultrafast_times: Option<PathBuf>,

    /// Output directory for the descriptor JSON files.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

fn read_list(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect())
}

/// Worker count from the environment, if set.
pub fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn sequence_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn analyze_one(path: &Path, id: &str, options: &AnalysisOptions) -> anyhow::Result<DescriptorSet> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = Y4mReader::new(BufReader::new(file))?;
    let header = *reader.header();
    Ok(analyze_stream(&header, reader, options.clone(), id)?)
}

pub fn run(ctx: &Context, args: Args) -> CmdResult {
    let mut inputs = args.inputs.clone();
    if let Some(list) = &args.list {
        inputs.extend(read_list(list)?);
    }
    if inputs.is_empty() {
        return Err(usage("no input clips; pass --input or --list"));
    }
    if args.id.is_some() && inputs.len() != 1 {
        return Err(usage("--id needs exactly one input"));
    }
    if args.ultrafast_time.is_some() && inputs.len() != 1 {
        return Err(usage(
            "--ultrafast-time needs exactly one input; use --ultrafast-times for batches",
        ));
    }
    let grid = BlockGridSpec::new(args.block_size).map_err(|e| usage(e.to_string()))?;
    let options = AnalysisOptions {
        grid,
        selection: args.descriptors.clone(),
        aggregate: args.aggregate,
        ..Default::default()
    };
    let ultrafast: BTreeMap<String, f64> = match &args.ultrafast_times {
        Some(p) => read_ultrafast_times_path(p)?,
        None => BTreeMap::new(),
    };

    let ids: Vec<String> = inputs
        .iter()
        .map(|p| args.id.clone().unwrap_or_else(|| sequence_id(p)))
        .collect();
    let mut seen = BTreeSet::new();
    let duplicate: Vec<bool> = ids.iter().map(|id| !seen.insert(id.clone())).collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| anyhow!("starting worker pool: {e}"))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let results: Vec<anyhow::Result<PathBuf>> = pool.install(|| {
        inputs
            .par_iter()
            .zip(ids.par_iter())
            .zip(duplicate.par_iter())
            .map(|((path, id), &dup)| {
                if dup {
                    return Err(anyhow!("sequence id {id:?} already produced by an earlier input"));
                }
                info!("analyzing {}", path.display());
                let mut set = analyze_one(path, id, &options)?;
                let t = args.ultrafast_time.or_else(|| ultrafast.get(id).copied());
                if let Some(t) = t {
                    set.set_ultrafast_time(t)?;
                }
                let manifest = RunManifest::new("analyze", std::slice::from_ref(path), ctx.timestamp())?
                    .with("block_size", args.block_size)
                    .with(
                        "descriptors",
                        options.selection.iter().map(|k| k.name()).collect::<Vec<_>>(),
                    )
                    .with("aggregate", args.aggregate)
                    .with("ultrafast_time_s", t);
                let out = args.out.join(descriptor_file_name(id));
                write_artifact(&out, &set, &manifest)?;
                Ok(out)
            })
            .collect()
    });

    let mut failed = 0;
    for (path, result) in inputs.iter().zip(results) {
        match result {
            Ok(out) => outln!("{}", out.display()),
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e:#}", path.display());
            }
        }
    }
    Ok(match failed {
        0 => Status::Success,
        n if n == inputs.len() => Status::DataError,
        _ => Status::PartialFailure,
    })
}
