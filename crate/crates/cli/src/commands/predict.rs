use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::Context as _;
use log::warn;
use serde::Serialize;

use encost_core::descriptors::{DescriptorSet, SCHEMA_VERSION};
use encost_core::io::read_descriptor_set;
use encost_core::models::{default_n_intra, predict_record, EncodingRecord, ModelDocument, MAX_PRESET, MIN_PRESET};
use encost_core::y4m::Rational;

use crate::output::to_json;
use crate::{usage, CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Model JSON written by `encost fit`.
    #[arg(long)]
    model: PathBuf,

    /// Descriptor JSON of the clip (optional for a content-blind model).
    #[arg(long)]
    descriptors: Option<PathBuf>,

    /// SVT-AV1 preset, 1 to 13.
    #[arg(long)]
    preset: u32,

    #[arg(long)]
    crf: u32,

    /// Number of intra frames (defaults to one per 5 s).
    #[arg(long)]
    n_intra: Option<u32>,

    /// Frame width (defaults to the descriptor set).
    #[arg(long)]
    width: Option<usize>,

    /// Frame height (defaults to the descriptor set).
    #[arg(long)]
    height: Option<usize>,

    /// Frame count (defaults to the descriptor set).
    #[arg(long)]
    frames: Option<usize>,

    /// Frame rate such as 30 or 30000/1001 (defaults to the descriptor set, else 30).
    #[arg(long)]
    fps: Option<Rational>,

    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Prediction {
    sequence_id: String,
    preset: u32,
    crf: u32,
    n_intra: u32,
    width: usize,
    height: usize,
    n_frames: usize,
    time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_j: Option<f64>,
    extrapolated: bool,
}

fn read_model(path: &PathBuf) -> anyhow::Result<ModelDocument> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let doc: ModelDocument =
        serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))?;
    if doc.schema_version != SCHEMA_VERSION {
        anyhow::bail!(
            "{}: unsupported model schema version {}",
            path.display(),
            doc.schema_version
        );
    }
    doc.time_params.validate()?;
    Ok(doc)
}

pub fn run(_ctx: &Context, args: Args) -> CmdResult {
    if !(MIN_PRESET..=MAX_PRESET).contains(&args.preset) {
        return Err(usage(format!("--preset must lie in {MIN_PRESET}..={MAX_PRESET}")));
    }
    if args.crf == 0 {
        return Err(usage("--crf must be positive"));
    }
    if args.n_intra == Some(0) {
        return Err(usage("--n-intra must be at least 1"));
    }
    let model = read_model(&args.model)?;
    let set = match &args.descriptors {
        Some(p) => read_descriptor_set(p)?,
        None if model.content_spec.is_content_blind() => DescriptorSet::new("", 0, 0, 0),
        None => return Err(usage("--descriptors is required for a content-aware model")),
    };
    if args.descriptors.is_some() && set.block_spec != model.block_spec && !model.content_spec.is_content_blind() {
        warn!("descriptors were computed with a different block grid than the model's training data");
    }

    let pick = |flag: Option<usize>, from_set: usize, name: &str| match flag.or((from_set > 0).then_some(from_set)) {
        Some(v) if v > 0 => Ok(v),
        _ => Err(usage(format!("--{name} is required"))),
    };
    let width = pick(args.width, set.width, "width")?;
    let height = pick(args.height, set.height, "height")?;
    let n_frames = pick(args.frames, set.frame_count, "frames")?;
    let frame_rate = args.fps.or(set.frame_rate).unwrap_or(Rational { num: 30, den: 1 });
    let n_intra = args.n_intra.unwrap_or_else(|| default_n_intra(n_frames, frame_rate));

    let meta = &model.fit_metadata;
    let in_range = |v: u32, (lo, hi): (u32, u32)| (lo..=hi).contains(&v);
    let extrapolated = !in_range(args.preset, meta.preset_range) || !in_range(args.crf, meta.crf_range);
    if extrapolated {
        warn!(
            "preset {} / CRF {} lies outside the training ranges (presets {}..={}, CRF {}..={})",
            args.preset, args.crf, meta.preset_range.0, meta.preset_range.1, meta.crf_range.0, meta.crf_range.1
        );
    }

    let record = EncodingRecord {
        sequence_id: set.sequence_id.clone(),
        class_id: String::new(),
        width,
        height,
        n_frames,
        frame_rate,
        preset: args.preset,
        crf: args.crf,
        n_intra,
        time_s: 1.0,
        energy_j: None,
    };
    let p = predict_record(
        &model.time_params,
        model.energy_params.as_ref(),
        &model.content_spec,
        &set,
        &record,
    )?;
    let out = Prediction {
        sequence_id: set.sequence_id,
        preset: args.preset,
        crf: args.crf,
        n_intra,
        width,
        height,
        n_frames,
        time_s: p.time_s,
        energy_j: p.energy_j,
        extrapolated,
    };
    if args.json {
        out!("{}", to_json(&out)?);
    } else {
        outln!("time_s {:.6}", out.time_s);
        if let Some(e) = out.energy_j {
            outln!("energy_j {e:.6}");
        }
    }
    Ok(Status::Success)
}
