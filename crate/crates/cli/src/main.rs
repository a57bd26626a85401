//! `clam`: segment → patch → featurize → train → eval → heatmap, plus
//! synthetic bag generation.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "clam", version, about = "Weakly supervised slide classification with CLAM")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tissue masks for every `<slide>.ppm` in a directory.
    Segment {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-slide parameter file (`slide=<id> key=value …`).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Patch coordinate grids from segmentation masks.
    Patch {
        #[arg(long)]
        images: PathBuf,
        /// Output directory of `segment`.
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fraction of a patch shared with its neighbour, in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        #[arg(long, default_value_t = clam::wsi::PATCH_SIZE)]
        patch_size: usize,
        /// Also write every patch as `<out>/<slide>/<x>_<y>.ppm`.
        #[arg(long)]
        save_patches: bool,
    },
    /// Feature bags from patch grids or from exported feature tables.
    Featurize {
        /// `slide_id,label` lines.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, required_unless_present = "import")]
        images: Option<PathBuf>,
        /// Output directory of `patch`.
        #[arg(long, required_unless_present = "import")]
        grids: Option<PathBuf>,
        /// Directory of `<slide>.csv` tables with rows `x,y,f_1,…,f_D`.
        #[arg(long, conflicts_with_all = ["images", "grids"])]
        import: Option<PathBuf>,
        /// Feature dimension of the built-in extractor.
        #[arg(long, default_value_t = 64)]
        dim: usize,
        /// Patch size recorded for imported features.
        #[arg(long, default_value_t = clam::wsi::PATCH_SIZE)]
        patch_size: usize,
        /// Grid step recorded for imported features.
        #[arg(long, default_value_t = clam::wsi::PATCH_SIZE)]
        step: usize,
    },
    /// Cross-validated training over a directory of bags.
    Train {
        #[arg(long)]
        bags: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Existing split file; a Monte-Carlo split is drawn otherwise.
        #[arg(long)]
        split: Option<PathBuf>,
        /// `slide_id,case_id` lines; each slide is its own case otherwise.
        #[arg(long)]
        cases: Option<PathBuf>,
    },
    /// Metrics for one checkpoint or the probability-averaged ensemble of several.
    Eval {
        #[arg(long)]
        bags: PathBuf,
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one set of a split file.
        #[arg(long, requires = "fold")]
        split: Option<PathBuf>,
        #[arg(long, requires = "split")]
        fold: Option<usize>,
        #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
        set: String,
        #[arg(long)]
        cases: Option<PathBuf>,
    },
    /// Attention heatmap of one bag.
    Heatmap {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        bag: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Non-overlapping bag of the same slide used for percentiles.
        #[arg(long)]
        reference_bag: Option<PathBuf>,
        /// Full-resolution slide image to draw under the heatmap.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        downsample: usize,
        #[arg(long, default_value_t = clam::heatmap::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Synthetic bags with planted evidence instances.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of bags; overrides `count` in the config.
        #[arg(long)]
        count: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Segment { images, out, params } => commands::segment(&images, &out, params.as_deref()),
        Command::Patch {
            images,
            masks,
            out,
            overlap,
            patch_size,
            save_patches,
        } => commands::patch(&images, &masks, &out, overlap, patch_size, save_patches),
        Command::Featurize {
            labels,
            out,
            images,
            grids,
            import,
            dim,
            patch_size,
            step,
        } => match import {
            Some(dir) => commands::import_features(&dir, &labels, &out, patch_size, step),
            None => commands::featurize(
                images.as_deref().expect("required by clap"),
                grids.as_deref().expect("required by clap"),
                &labels,
                &out,
                dim,
                seed.unwrap_or(0),
            ),
        },
        Command::Train {
            bags,
            out,
            config,
            split,
            cases,
        } => commands::train(&bags, &out, config.as_deref(), split.as_deref(), cases.as_deref(), seed),
        Command::Eval {
            bags,
            checkpoints,
            out,
            split,
            fold,
            set,
            cases,
        } => {
            let subset = split.map(|s| commands::Subset {
                split: s,
                fold: fold.expect("required by clap"),
                set,
                cases,
            });
            commands::eval(&bags, &checkpoints, &out, subset.as_ref())
        }
        Command::Heatmap {
            checkpoint,
            bag,
            out,
            reference_bag,
            image,
            downsample,
            alpha,
        } => commands::heatmap(&commands::HeatmapArgs {
            checkpoint,
            bag,
            out,
            reference_bag,
            image,
            downsample,
            alpha,
        }),
        Command::Synth { out, config, count } => commands::synth(&out, config.as_deref(), count, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
