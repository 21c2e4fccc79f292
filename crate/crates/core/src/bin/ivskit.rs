//! `ivskit` — Index of Visual Similarity toolkit for pool-boiling
//! diagnostics. Thin argument shell over `ivskit_core::cli`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ivskit_core::cli::{
    self, CompareOptions, IvsOptions, OutputFormat, SegmentOptions, SynthOptions, ThermalOptions,
};
use ivskit_core::segment::Polarity;

#[derive(Parser)]
#[command(
    name = "ivskit",
    version,
    about = "Index of Visual Similarity for pool-boiling image diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the IVS pipeline over a run manifest.
    Ivs {
        /// Run manifest (TOML); paths inside are relative to it.
        #[arg(long)]
        manifest: PathBuf,
        /// Override the manifest's trial RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the manifest's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker pool size; 0 = all logical cores. Never affects output.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Output directory (default: the manifest's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        /// Also dump per-frame keypoints, areas, and match counts.
        #[arg(long)]
        debug: bool,
    },
    /// Reduce a thermocouple CSV (q_nominal,t1,t2,t3,t_sat per row).
    Thermal {
        #[arg(long)]
        input: PathBuf,
        /// Thermocouple spacing, m (required; no silent default).
        #[arg(long)]
        dx: Option<f64>,
        /// T3-to-surface distance, m (required; no silent default).
        #[arg(long)]
        l: Option<f64>,
        /// Copper conductivity, W/(m K).
        #[arg(long)]
        k_cu: Option<f64>,
        /// Per-thermocouple uncertainty, degC.
        #[arg(long)]
        u_t: Option<f64>,
        /// Spacing tolerance, m.
        #[arg(long)]
        u_dx: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Align an IVS report with a thermal report and emit the overlay.
    Compare {
        /// ivs.csv from the `ivs` command.
        #[arg(long)]
        ivs: PathBuf,
        /// thermal.csv from the `thermal` command (optional).
        #[arg(long)]
        thermal: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic fixture run from a schedule config.
    Synth {
        /// Schedule TOML (canvas, levels, frames per level).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "synth_out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Debug single-frame segmentation.
    Segment {
        #[arg(long)]
        input: PathBuf,
        /// "otsu" or a fixed threshold in (0,1).
        #[arg(long, default_value = "otsu")]
        threshold: String,
        #[arg(long, value_enum, default_value = "bright-bubbles")]
        polarity: PolarityArg,
        #[arg(long, default_value_t = 5)]
        min_instance_px: usize,
        #[arg(long, default_value_t = 8)]
        connectivity: u8,
        /// Output label mask (16-bit PGM).
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV with the area summary row.
        #[arg(long)]
        areas_csv: Option<PathBuf>,
    },
    /// Print the toolkit version.
    Version,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolarityArg {
    BrightBubbles,
    DarkBubbles,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IVSKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ivs {
            manifest,
            seed,
            trials,
            jobs,
            out,
            format,
            debug,
        } => cli::run_ivs(&IvsOptions {
            manifest,
            seed,
            trials,
            jobs,
            out,
            format,
            debug_dumps: debug,
        }),
        Command::Thermal {
            input,
            dx,
            l,
            k_cu,
            u_t,
            u_dx,
            out,
            format,
        } => cli::run_thermal(&ThermalOptions {
            input,
            dx,
            l,
            k_cu,
            u_t,
            u_dx,
            out,
            format,
        }),
        Command::Compare { ivs, thermal, out } => {
            cli::run_compare(&CompareOptions { ivs, thermal, out })
        }
        Command::Synth { config, out, seed } => cli::run_synth(&SynthOptions { config, out, seed }),
        Command::Segment {
            input,
            threshold,
            polarity,
            min_instance_px,
            connectivity,
            out,
            areas_csv,
        } => cli::run_segment(&SegmentOptions {
            input,
            threshold,
            polarity: match polarity {
                PolarityArg::BrightBubbles => Polarity::BrightBubbles,
                PolarityArg::DarkBubbles => Polarity::DarkBubbles,
            },
            min_instance_px,
            connectivity,
            out_mask: out,
            areas_csv,
        }),
        Command::Version => {
            println!("ivskit {}", env!("CARGO_PKG_VERSION"));
            Ok(cli::EXIT_OK)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_ERROR)
        }
    }
}
