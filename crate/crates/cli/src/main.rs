//! `gazentropy` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 computation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gazentropy::aoi::{PriorMode, DEFAULT_AOI_RADIUS_PX};
use gazentropy::gaze_data::Screen;

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "gazentropy", version, about = "Visual attention entropy metrics for eye-tracking studies")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-page metrics, score correlations and ANOVA as JSON.
    Report(ReportArgs),
    /// Attention map of one page as a binary PGM image.
    Heatmap(HeatmapArgs),
    /// Score correlations along time, kernel width or subject count.
    Sweep(SweepArgs),
    /// Synthetic fixations and ratings from a TOML study spec.
    Synth(SynthArgs),
    /// AOI centroids and per-subject AOI sequences of one page.
    Aoi(AoiArgs),
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Screen size in pixels.
    #[arg(long, default_value = "1280x800", value_parser = parse_screen)]
    screen: Screen,
    /// Gaussian kernel width in pixels.
    #[arg(long, default_value_t = 30.0)]
    sigma: f64,
    /// Kernel cut-off in multiples of sigma.
    #[arg(long, default_value_t = 5.0)]
    truncation: f64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    fixations: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-page index table as CSV.
    #[arg(long)]
    indices_csv: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// AOI clustering radius in pixels.
    #[arg(long, default_value_t = DEFAULT_AOI_RADIUS_PX)]
    aoi_radius: f64,
    #[arg(long, value_enum, default_value_t = PriorArg::TransitionSource)]
    prior_mode: PriorArg,
    /// Analyse only the first this-many milliseconds of every recording.
    #[arg(long)]
    slice_ms: Option<f64>,
    /// Echoed in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long)]
    fixations: PathBuf,
    #[arg(long)]
    page: String,
    /// Restrict to these subjects (repeatable); all subjects by default.
    #[arg(long = "subject")]
    subjects: Vec<String>,
    /// PGM output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    slice_ms: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(value_enum)]
    axis: AxisArg,
    #[arg(long)]
    fixations: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    /// Sweep CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated times (ms) or sigmas (px).
    /// Defaults: 500,1000,...,3000 for time; 10,20,...,120 for sigma.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Comma-separated subset sizes; default 2..=number of subjects.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = gazentropy::sweep::DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write per-page VAE/rVAE values at every point.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML study description.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives fixations.tsv and ratings.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AoiArgs {
    #[arg(long)]
    fixations: PathBuf,
    #[arg(long)]
    page: String,
    #[arg(long)]
    out_aois: PathBuf,
    #[arg(long)]
    out_sequences: PathBuf,
    #[arg(long, default_value = "1280x800", value_parser = parse_screen)]
    screen: Screen,
    #[arg(long, default_value_t = DEFAULT_AOI_RADIUS_PX)]
    aoi_radius: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Time,
    Sigma,
    Subjects,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorArg {
    TransitionSource,
    Occurrence,
    SequenceStart,
}

impl From<PriorArg> for PriorMode {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::TransitionSource => PriorMode::TransitionSource,
            PriorArg::Occurrence => PriorMode::Occurrence,
            PriorArg::SequenceStart => PriorMode::SequenceStart,
        }
    }
}

fn parse_screen(s: &str) -> Result<Screen, String> {
    s.parse().map_err(|e: gazentropy::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Report(a) => commands::report(a),
        Command::Heatmap(a) => commands::heatmap(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Synth(a) => commands::synth(a),
        Command::Aoi(a) => commands::aoi(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
