//! `dac`: train, encode, cluster and evaluate deep autoencoder clustering runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use dac::error::ErrorCategory;
use dac::pipeline::{self, Artifacts, DataSpec, EpochStats};
use dac::{kmeans, Autoencoder, DacError, Dataset, KMeansParams, Result, RunConfig};

#[derive(Parser)]
#[command(name = "dac", version, about = "Deep autoencoder clustering")]
struct Cli {
    /// Suppress per-epoch progress on stderr
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and persist model, weights and loss trace
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate per-feature clustering weights from the training split
    Weights {
        #[arg(long)]
        config: PathBuf,
        /// Also write the weights as a grayscale PGM map
        #[arg(long)]
        export_pgm: Option<PathBuf>,
    },
    /// Encode a dataset with a trained model
    Encode {
        #[arg(long)]
        model: PathBuf,
        /// idx:IMAGES,LABELS | hapt:X,Y[,X_TRAIN] | cache:PATH
        #[arg(long)]
        data: DataSpec,
        /// `.csv` writes plain text, anything else a binary cache
        #[arg(long)]
        out: PathBuf,
    },
    /// Run k-means on a matrix file and write the assignments
    Cluster {
        /// CSV matrix or binary cache
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a run, training first when no model exists
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write originals over reconstructions as a PGM grid
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: DataSpec,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &DacError) -> u8 {
    match e.category() {
        ErrorCategory::Usage => 1,
        ErrorCategory::Data => 2,
        ErrorCategory::Numeric => 3,
    }
}

fn execute(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    let mut report_epoch = |s: EpochStats| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  lr {:.6}  loss {:.6e}",
                s.epoch + 1,
                s.lr,
                s.mean_loss
            );
        }
    };
    match cli.command {
        Command::Train { config } => {
            let config = load_config(&config)?;
            let out = pipeline::train(&config, Some(&mut report_epoch))?;
            println!(
                "trained {} epochs in {:.1}s, artifacts in {}",
                out.loss_trace.len(),
                out.train_secs,
                config.output_dir.display()
            );
        }
        Command::Weights { config, export_pgm } => {
            let config = load_config(&config)?;
            let train = pipeline::load_train(&config)?;
            let weights = pipeline::estimate_weights(&train, &config)?;
            let path = Artifacts::new(&config.output_dir).weights();
            weights.save(&path)?;
            println!(
                "{} weights from {} samples, mean {:.6}, written to {}",
                weights.len(),
                weights.m_used,
                weights.mean(),
                path.display()
            );
            if let Some(pgm) = export_pgm {
                let side = train.square_side().ok_or_else(|| {
                    DacError::InvalidArgument(format!(
                        "{} features do not form a square image",
                        train.dim()
                    ))
                })?;
                pipeline::export_weight_map(&weights, side, &pgm)?;
            }
        }
        Command::Encode { model, data, out } => {
            let model = Autoencoder::load(&model)?;
            let ds = data.load()?;
            let codes = pipeline::encode_dataset(&model, &ds)?;
            if is_csv(&out) {
                pipeline::write_matrix_csv(&out, &codes)?;
            } else {
                Dataset::new(format!("{}-codes", ds.name), codes, ds.labels.clone())?
                    .save_cache(&out)?;
            }
            println!("encoded {} samples to {}", ds.len(), out.display());
        }
        Command::Cluster {
            input,
            k,
            seed,
            out,
        } => {
            let points = pipeline::read_matrix(&input)?;
            let result = kmeans(&points, k, &KMeansParams::with_seed(seed))?;
            result.write_csv(&out)?;
            println!(
                "wcss {:.6} after {} iterations",
                result.wcss, result.iterations_run
            );
        }
        Command::Evaluate { config } => {
            let config = load_config(&config)?;
            let report = pipeline::run(&config, Some(&mut report_epoch))?;
            print!("{}", report.to_text());
        }
        Command::Reconstruct {
            model,
            data,
            count,
            out,
        } => {
            let model = Autoencoder::load(&model)?;
            let ds = data.load()?;
            pipeline::export_reconstructions(&model, &ds, count, &out)?;
            println!("wrote {count} reconstructions to {}", out.display());
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let config = RunConfig::load(path)?;
    config.validate()?;
    Ok(config)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
