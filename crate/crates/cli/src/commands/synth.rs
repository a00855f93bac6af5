use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context as _;

use encost_core::io::{descriptor_file_name, write_records};
use encost_core::synthetic::{generate, SyntheticConfig};

use crate::manifest::RunManifest;
use crate::output::write_artifact;
use crate::{usage, CmdResult, Context, Status};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output directory; receives records.csv and descriptors/.
    #[arg(long, short = 'o')]
    out: PathBuf,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 3)]
    classes: usize,

    #[arg(long, default_value_t = 6)]
    sequences_per_class: usize,

    /// Relative standard deviation of the time noise.
    #[arg(long, default_value_t = 0.0)]
    time_noise: f64,

    /// Relative standard deviation of the energy noise.
    #[arg(long, default_value_t = 0.0)]
    energy_noise: f64,

    /// Drop the energy column from the records.
    #[arg(long)]
    no_energy: bool,
}

pub fn run(ctx: &Context, args: Args) -> CmdResult {
    let cfg = SyntheticConfig {
        classes: args.classes,
        sequences_per_class: args.sequences_per_class,
        time_noise: args.time_noise,
        energy_noise: args.energy_noise,
        seed: args.seed,
        ..Default::default()
    };
    let mut ds = generate(&cfg).map_err(|e| usage(e.to_string()))?;
    if args.no_energy {
        for r in &mut ds.records {
            r.energy_j = None;
        }
    }

    let desc_dir = args.out.join("descriptors");
    fs::create_dir_all(&desc_dir).with_context(|| format!("creating {}", desc_dir.display()))?;
    let records_path = args.out.join("records.csv");
    let f = File::create(&records_path).with_context(|| format!("creating {}", records_path.display()))?;
    write_records(BufWriter::new(f), &ds.records)?;

    let manifest = RunManifest::new("synth", &[], ctx.timestamp())?
        .with("seed", args.seed)
        .with("classes", args.classes)
        .with("sequences_per_class", args.sequences_per_class)
        .with("time_noise", args.time_noise)
        .with("energy_noise", args.energy_noise);
    for d in &ds.descriptors {
        write_artifact(&desc_dir.join(descriptor_file_name(&d.sequence_id)), d, &manifest)?;
    }
    outln!(
        "{} records, {} sequences -> {}",
        ds.records.len(),
        ds.descriptors.len(),
        args.out.display()
    );
    Ok(Status::Success)
}
