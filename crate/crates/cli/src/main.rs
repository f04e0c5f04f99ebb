//! `svdbf` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "svdbf", version, about = "Ultrafast compound imaging with SVD aberration correction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Image format: pgm or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the scatterer phantom and write it as CSV.
    Phantom,
    /// Simulate (and aberrate) channel data.
    Simulate {
        /// Scatterers to simulate instead of the configured phantom.
        #[arg(long)]
        phantom: Option<PathBuf>,
    },
    /// Beamform channel data into the ultrafast compound matrix.
    Beamform {
        #[arg(long)]
        rf: PathBuf,
    },
    /// Patch-wise SVD correction of a compound matrix.
    Correct {
        #[arg(long)]
        ufcm: PathBuf,
        /// rank1 or phase_conjugate; overrides the config.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Angular coherence of one patch and its triangle fit.
    Coherence {
        #[arg(long)]
        ufcm: PathBuf,
        /// Patch centre as `ix,iz`; the grid centre by default.
        #[arg(long)]
        center: Option<String>,
    },
    /// Contrast, pin widths and law agreement before and after correction.
    ///
    /// Pin widths are measured on the matrix grid, which is coarse next to
    /// the PSF; `pipeline` re-beamforms a fine window around each pin.
    Metrics {
        #[arg(long)]
        ufcm: PathBuf,
        /// Known law (laws CSV) to score the extracted laws against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Extract laws from concentric patches of several sizes.
    SweepPatch {
        #[arg(long)]
        ufcm: PathBuf,
        /// Comma-separated `NXxNZ` sizes in pixels.
        #[arg(long, default_value = "8x8,16x16,24x24,32x32")]
        sizes: String,
        #[arg(long)]
        center: Option<String>,
    },
    /// Time beamforming and SVD correction over patch and angle counts.
    Bench {
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Comma-separated patch counts (squares).
        #[arg(long, default_value = "1,9,25,100")]
        patches: String,
        /// Comma-separated angle counts.
        #[arg(long, default_value = "5,10,100")]
        angles: String,
    },
    /// Run the whole experiment and write a bundle with a manifest.
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.common, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
