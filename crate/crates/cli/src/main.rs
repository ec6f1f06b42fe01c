use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdr_cli::commands;
use tdr_cli::{CliError, CliResult, ServerConfig};
use tdr_core::dataset::DataFormat;
use tdr_core::session::{PipelineConfig, DEFAULT_BINS};
use tdr_core::{Mode, ModeCombo, NeighborParams, Stage1Method, Stage2Method};

#[derive(Parser)]
#[command(name = "tdr", version, about = "Two-step dimensionality reduction for time x instance x variable tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mode combination and write its result.
    Pipeline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        combo: ComboArgs,
        #[command(flatten)]
        reduce: ReduceArgs,
    },
    /// Run all six mode combinations.
    AllCombos {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reduce: ReduceArgs,
    },
    /// Feature contributions for clusters listed as `<row> <cluster_id>` lines.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        combo: ComboArgs,
        #[command(flatten)]
        reduce: ReduceArgs,
        #[arg(long)]
        clusters: PathBuf,
        /// Also write histograms of this feature column.
        #[arg(long)]
        feature: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
    /// Compare PCA, mean, and flat-unfolding baselines.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reduce: ReduceArgs,
        #[arg(long)]
        point_mode: Mode,
        /// Mode compressed by the two-step baselines.
        #[arg(long)]
        first: Option<Mode>,
        /// Ground-truth class per point, whitespace separated.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Start the analysis server.
    Serve {
        /// Directory of dataset descriptors.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Static viewer assets served at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Write a random normal dataset, e.g. `--dims 864x3x1163`.
    Generate {
        #[arg(long, value_parser = parse_dims)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, value_enum, default_value_t = Format::Long)]
        format: Format,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Dataset descriptor (JSON).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ComboArgs {
    /// Mode compressed by the first reduction.
    #[arg(long)]
    first: Mode,
    /// Mode kept as the features of the second reduction.
    #[arg(long)]
    second: Mode,
}

impl ComboArgs {
    fn combo(&self) -> CliResult<ModeCombo> {
        ModeCombo::new(self.first, self.second).map_err(CliError::from)
    }
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long, value_enum, default_value_t = Method1::Pca)]
    method1: Method1,
    #[arg(long, value_enum, default_value_t = Method2::Neighbor)]
    method2: Method2,
    #[arg(long, default_value_t = 15)]
    neighbors: usize,
    #[arg(long, default_value_t = 0.1)]
    min_dist: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ReduceArgs {
    fn config(&self) -> CliResult<PipelineConfig> {
        if self.neighbors < 1 {
            return Err(CliError::Input("--neighbors must be at least 1".into()));
        }
        if !(self.min_dist.is_finite() && self.min_dist >= 0.0) {
            return Err(CliError::Input("--min-dist must be a non-negative number".into()));
        }
        Ok(PipelineConfig {
            method1: match self.method1 {
                Method1::Pca => Stage1Method::Pca,
                Method1::Mean => Stage1Method::Mean,
            },
            method2: match self.method2 {
                Method2::Linear => Stage2Method::Linear,
                Method2::Neighbor => Stage2Method::Neighbor,
            },
            neighbor: NeighborParams {
                n_neighbors: self.neighbors,
                min_dist: self.min_dist,
                epochs: self.epochs,
                seed: self.seed,
            },
            ..PipelineConfig::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method1 {
    Pca,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method2 {
    Linear,
    Neighbor,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Long,
    Binary,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(['x', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad dimension '{p}'")))
        .collect::<Result<_, _>>()?;
    <[usize; 3]>::try_from(parts).map_err(|_| "expected TxNxD".to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Pipeline { data, combo, reduce } => {
            commands::pipeline(&data.dataset, combo.combo()?, &reduce.config()?, &data.out)
        }
        Command::AllCombos { data, reduce } => commands::all_combos(&data.dataset, &reduce.config()?, &data.out),
        Command::Explain {
            data,
            combo,
            reduce,
            clusters,
            feature,
            bins,
        } => commands::explain(
            &data.dataset,
            combo.combo()?,
            &reduce.config()?,
            &clusters,
            feature,
            bins,
            &data.out,
        ),
        Command::Compare {
            data,
            reduce,
            point_mode,
            first,
            labels,
        } => commands::compare(&data.dataset, point_mode, first, &reduce.config()?, labels.as_deref(), &data.out),
        Command::Serve {
            dataset,
            port,
            host,
            assets,
        } => serve(dataset, &host, port, assets),
        Command::Generate {
            dims,
            seed,
            name,
            format,
            out,
        } => {
            let format = match format {
                Format::Long => DataFormat::Long,
                Format::Binary => DataFormat::Binary,
            };
            commands::generate(dims, seed, &name, format, &out)
        }
    }
}

fn serve(dataset_root: PathBuf, host: &str, port: u16, assets: Option<PathBuf>) -> CliResult<()> {
    if !dataset_root.is_dir() {
        return Err(CliError::Input(format!("{} is not a directory", dataset_root.display())));
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Input(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Input(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Input(e.to_string()))?;
        println!("listening on ws://{addr}/ws");
        tdr_cli::serve(listener, ServerConfig { dataset_root, assets })
            .await
            .map_err(|e| CliError::Input(e.to_string()))
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
