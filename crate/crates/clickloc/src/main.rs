//! Thin CLI over the library pipeline. Exit codes: 0 success, 1 for
//! configuration/numeric problems, 2 for file I/O and format problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use clickloc::config::PipelineConfig;
use clickloc::dataset::ClickFormat;
use clickloc::error::{Error, Result};
use clickloc::eval::SweepAxis;
use clickloc::pipeline;

#[derive(Parser)]
#[command(
    name = "clickloc",
    about = "Sparse-coded click features and range/azimuth regression",
    version
)]
struct Cli {
    /// Pipeline configuration file (see the config module docs / README).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the root seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
    WavDir,
}

impl From<FormatArg> for ClickFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ClickFormat::Csv,
            FormatArg::Binary => ClickFormat::Binary,
            FormatArg::WavDir => ClickFormat::WavDirectory,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Mu,
    K,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic clicks and write them as CSV.
    Gen {
        /// Number of clicks; defaults to `[dataset] count` from the config.
        #[arg(long)]
        count: Option<usize>,
        /// Output clicks CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a dictionary from a clicks file and save it (CCD1).
    TrainDict {
        /// Input clicks path (file, or directory for wav-dir).
        #[arg(long)]
        clicks: PathBuf,
        /// Input format.
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output dictionary path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode and pool clicks into a feature cache (CCF1).
    Encode {
        #[arg(long)]
        clicks: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Trained dictionary path.
        #[arg(long)]
        dict: PathBuf,
        /// Output feature cache path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate regressors on a feature cache; writes report.csv and
    /// model files into the output directory.
    TrainEval {
        /// Input feature cache path.
        #[arg(long)]
        features: PathBuf,
        /// Output directory for report.csv and CCM1 models.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sweep mu or k over the cross-validated harness; writes a CSV.
    Sweep {
        /// Sweep axis.
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated axis values, e.g. `1,2,3,4` or `128,256`.
        #[arg(long)]
        values: String,
        /// Optional clicks file; omitted = synthesize `[dataset] count` clicks.
        #[arg(long)]
        clicks: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run gen → train-dict → encode → train-eval into one directory.
    Pipeline {
        /// Output directory; defaults to `[io] out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn parse_axis(axis: AxisArg, values: &str) -> Result<SweepAxis> {
    let trimmed = values.trim();
    match axis {
        AxisArg::Mu => {
            let vs: Result<Vec<f64>> = trimmed
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("invalid mu value {:?}", s)))
                })
                .collect();
            Ok(SweepAxis::Mu(vs?))
        }
        AxisArg::K => {
            let vs: Result<Vec<usize>> = trimmed
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("invalid k value {:?}", s)))
                })
                .collect();
            Ok(SweepAxis::K(vs?))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| {
                Error::Config(format!("cannot configure {} threads: {}", cfg.threads, e))
            })?;
    }

    match cli.command {
        Command::Gen { count, out } => {
            let count = count.unwrap_or(cfg.synth_count);
            pipeline::cmd_gen(&cfg, count, &out)?;
            println!("wrote {} clicks to {}", count, out.display());
        }
        Command::TrainDict {
            clicks,
            format,
            out,
        } => {
            pipeline::cmd_train_dict(&cfg, &clicks, format.into(), &out)?;
            println!("wrote dictionary to {}", out.display());
        }
        Command::Encode {
            clicks,
            format,
            dict,
            out,
        } => {
            pipeline::cmd_encode_pool(&cfg, &clicks, format.into(), &dict, &out)?;
            println!("wrote features to {}", out.display());
        }
        Command::TrainEval { features, out_dir } => {
            pipeline::cmd_train_eval(&cfg, &features, &out_dir)?;
            println!("wrote report and models to {}", out_dir.display());
        }
        Command::Sweep {
            axis,
            values,
            clicks,
            format,
            out,
        } => {
            let axis = parse_axis(axis, &values)?;
            let clicks_ref = clicks.as_deref().map(|p| (p, format.into()));
            pipeline::cmd_sweep(&cfg, &axis, clicks_ref, &out)?;
            println!("wrote sweep to {}", out.display());
        }
        Command::Pipeline { out_dir } => {
            let dir = pipeline::cmd_pipeline(&cfg, out_dir.as_deref())?;
            println!("pipeline artifacts in {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
