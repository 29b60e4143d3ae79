//! Command-line interface of the `rsc` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rsc_core::chain::Axis;

use crate::commands::{self, LimitsInputs};
use crate::config::{parse_config, RunConfig};
use crate::error::ToolError;
use crate::output::{write_artifact, Context};
use crate::report::write_report;

#[derive(Debug, Parser)]
#[command(name = "rsc", version, about = "Sideband cooling simulations for trapped-ion chains")]
pub struct Cli {
    /// Configuration file; all defaults when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides `simulation.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides RSC_OUT_DIR and `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and per-ion runs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Axial,
    Radial,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Axial => Axis::Axial,
            AxisArg::Radial => Axis::Radial,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal-mode frequencies and Lamb-Dicke parameters.
    Modes {
        /// Mode axis; overrides `simulation.axis`.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
    /// Continuous sideband cooling trajectories.
    Crsc {
        /// Pump scales to run, e.g. `pump_scale=0.2,0.4,1,2.5,5`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Pulsed sideband cooling at the optimal pulse length.
    Prsc,
    /// Parallel and sequential cooling time against ion number.
    Scaling {
        /// Mode axis; overrides `simulation.axis`.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Largest chain, 1 to 128; overrides `simulation.n_max`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=128))]
        nmax: Option<u64>,
    },
    /// Red/blue sideband ratio curve for one mode.
    Sideband {
        /// Mode index; overrides `simulation.mode`.
        #[arg(long)]
        mode: Option<usize>,
        /// Also scan both sidebands in detuning.
        #[arg(long)]
        spectrum: bool,
        /// Spectrum file (mode, sideband, excitation) to turn into n̄ upper bounds.
        #[arg(long)]
        bounds: Option<PathBuf>,
    },
    /// Carrier flopping traces, or a COM n̄ fit to given traces.
    Carrier {
        /// Traces (ion_index, time_s, excitation) to fit instead of simulating.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Replace each trace by a damped-cosine fit before fitting n̄.
        #[arg(long, requires = "fit")]
        smooth: bool,
    },
    /// Heating, recoil and collision budget.
    Limits(LimitsArgs),
    /// Markdown report of the outputs in a directory.
    Report {
        /// Directory holding the outputs; defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    /// Single-ion cooling rate, 1/s.
    #[arg(long, default_value_t = LimitsInputs::default().rc0)]
    pub rc0: f64,
    /// Single-ion heating rate, 1/s.
    #[arg(long, default_value_t = LimitsInputs::default().rh0)]
    pub rh0: f64,
    /// Axial frequency at which rc0 and rh0 were measured, kHz.
    #[arg(long, default_value_t = LimitsInputs::default().omega1_khz)]
    pub omega1_khz: f64,
    /// Field-noise spectral exponent.
    #[arg(long, default_value_t = LimitsInputs::default().noise_alpha)]
    pub noise_alpha: f64,
    /// Photons scattered by the clean-up pumping pulse.
    #[arg(long, default_value_t = LimitsInputs::default().cleanup_photons)]
    pub cleanup_photons: f64,
    /// Off-resonant scattering rate of the pump, 1/s.
    #[arg(long, default_value_t = LimitsInputs::default().doppler_scatter_per_s)]
    pub doppler_scatter: f64,
    /// Detuning of the carrier from the driven sideband, MHz.
    #[arg(long, default_value_t = LimitsInputs::default().carrier_detuning_mhz)]
    pub carrier_detuning_mhz: f64,
    /// Background-gas collisions per ion per second.
    #[arg(long, default_value_t = LimitsInputs::default().collision_rate)]
    pub collision_rate: f64,
    /// Duration of one experiment, ms.
    #[arg(long, default_value_t = LimitsInputs::default().experiment_ms)]
    pub experiment_ms: f64,
    /// Background gas temperature, K.
    #[arg(long, default_value_t = LimitsInputs::default().gas_temperature_k)]
    pub gas_temperature_k: f64,
}

impl From<&LimitsArgs> for LimitsInputs {
    fn from(a: &LimitsArgs) -> Self {
        LimitsInputs {
            rc0: a.rc0,
            rh0: a.rh0,
            omega1_khz: a.omega1_khz,
            noise_alpha: a.noise_alpha,
            cleanup_photons: a.cleanup_photons,
            doppler_scatter_per_s: a.doppler_scatter,
            carrier_detuning_mhz: a.carrier_detuning_mhz,
            collision_rate: a.collision_rate,
            experiment_ms: a.experiment_ms,
            gas_temperature_k: a.gas_temperature_k,
        }
    }
}

/// Runs one invocation and returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, ToolError> {
    let config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context::new(config, cli.seed, cli.out, cli.jobs.map(|j| j as usize));
    let axis = |a: Option<AxisArg>| a.map_or_else(|| ctx.config.axis(), Axis::from);
    let artifact = match cli.command {
        Command::Modes { axis: a } => commands::run_modes(&ctx, axis(a))?,
        Command::Crsc { sweep } => {
            let sweep = sweep.as_deref().map(commands::parse_sweep).transpose()?;
            commands::run_crsc(&ctx, sweep)?
        }
        Command::Prsc => commands::run_prsc(&ctx)?,
        Command::Scaling { axis: a, nmax } => {
            let n_max = nmax.map_or(ctx.config.simulation.n_max, |n| n as usize);
            commands::run_scaling(&ctx, axis(a), n_max)?
        }
        Command::Sideband { mode, spectrum, bounds } => {
            let mode = mode.unwrap_or(ctx.config.simulation.mode);
            commands::run_sideband(&ctx, mode, spectrum, bounds.as_deref())?
        }
        Command::Carrier { fit: Some(path), smooth } => commands::run_carrier_fit(&ctx, &path, smooth)?,
        Command::Carrier { fit: None, .. } => commands::run_carrier(&ctx)?,
        Command::Limits(args) => commands::run_limits(&ctx, &LimitsInputs::from(&args))?,
        Command::Report { dir } => {
            let dir = dir.unwrap_or_else(|| ctx.out_dir.clone());
            return Ok(vec![write_report(&dir, &ctx.out_dir)?]);
        }
    };
    write_artifact(&ctx, artifact)
}
