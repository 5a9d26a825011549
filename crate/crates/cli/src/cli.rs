use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rydex_atomic::Series;
use rydex_core::grape::DEFAULT_LAMBDA;
use rydex_core::noise::NoiseSource;
use rydex_core::{Modulation, Scheme};

use crate::units::{parse_angle, parse_n_list};

#[derive(Debug, Parser)]
#[command(name = "rydex", version, about = "Optimal-control exchange gates for Rydberg atom pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Optimise one pulse with restarts.
    Optimize(OptimizeArgs),
    /// Landscape of single-run optimisations over a (τΩ, V/Ω) grid.
    Sweep(SweepArgs),
    /// Filter and rank a pulse library by its noise-relevant durations.
    Select(SelectArgs),
    /// Monte-Carlo infidelity budget per noise source.
    Budget(BudgetArgs),
    /// Fidelity response functions and their PSD integrals.
    Frt(FrtArgs),
    /// Budget curves under variation of one hardware parameter.
    Sensitivity(SensitivityArgs),
    /// Rescale a pulse to a new maximal Rabi frequency.
    Rescale(RescaleArgs),
    /// Atomic-data reports for ⁸⁸Sr triplet Rydberg states.
    Atomic(AtomicArgs),
    /// Deform a converged pulse along a sequence of exchange angles.
    Continue(ContinueArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Optimize(_) => "optimize",
            Command::Sweep(_) => "sweep",
            Command::Select(_) => "select",
            Command::Budget(_) => "budget",
            Command::Frt(_) => "frt",
            Command::Sensitivity(_) => "sensitivity",
            Command::Rescale(_) => "rescale",
            Command::Atomic(_) => "atomic",
            Command::Continue(_) => "continue",
            Command::Replay(_) => "replay",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Optimize(a) => Some(a.opt.seed),
            Command::Sweep(a) => Some(a.opt.seed),
            Command::Budget(a) => Some(a.noise.seed),
            Command::Sensitivity(a) => Some(a.noise.seed),
            Command::Continue(a) => Some(a.seed),
            _ => None,
        }
    }
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s)
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn scheme(s: &str) -> Result<Scheme, String> {
    Scheme::from_str(s).map_err(|e| e.to_string())
}

fn modulation(s: &str) -> Result<Modulation, String> {
    Modulation::from_str(s).map_err(|e| e.to_string())
}

/// Shared optimizer flags.
#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    #[arg(long, value_parser = scheme, default_value = "A")]
    pub scheme: Scheme,
    #[arg(long, value_parser = modulation, default_value = "phase")]
    pub modulation: Modulation,
    /// Piecewise-constant segments per channel.
    #[arg(long, default_value_t = 100)]
    pub segments: usize,
    /// Smoothness weight λ.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    /// Target exchange angle θ (`pi` is iSWAP).
    #[arg(long, value_parser = angle, default_value = "pi")]
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub opt: OptimizerArgs,
    /// Gate duration τΩ, e.g. `2pi*3`.
    #[arg(long, value_parser = angle)]
    pub tau_omega: f64,
    #[arg(long)]
    pub v_over_omega: f64,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Stop once a restart reaches this infidelity.
    #[arg(long)]
    pub target_infidelity: Option<f64>,
    /// Pulse file to write; a manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub opt: OptimizerArgs,
    /// Comma-separated τΩ grid, e.g. `2pi*0.5,2pi*1`.
    #[arg(long, value_parser = angle, value_delimiter = ',', required = true)]
    pub tau_omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub v_over_omega: Vec<f64>,
    /// Independent single-run optimisations per grid point.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Speed-limit detection: best infidelity must fall below this ...
    #[arg(long, default_value_t = 1e-4)]
    pub limit_below: f64,
    /// ... from above this on the previous grid point.
    #[arg(long, default_value_t = 1e-2)]
    pub limit_above: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    TRyd,
    TIntV,
    Tau,
    Infidelity,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SelectArgs {
    /// Pulse files or directories containing them.
    #[arg(long, num_args = 1.., required = true)]
    pub library: Vec<PathBuf>,
    #[arg(long)]
    pub max_infidelity: Option<f64>,
    #[arg(long)]
    pub max_tint_v: Option<f64>,
    #[arg(long)]
    pub max_tryd_omega: Option<f64>,
    #[arg(long)]
    pub max_tau_omega: Option<f64>,
    #[arg(long, value_enum, default_value = "t-ryd")]
    pub rank_by: RankBy,
    /// Keep only the first rows of the ranking.
    #[arg(long)]
    pub top: Option<usize>,
    /// Copy the first-ranked pulse file here.
    #[arg(long)]
    pub copy_best: Option<PathBuf>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Noise-source list: `all`, `none` or comma-separated names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceList(pub Vec<NoiseSource>);

impl FromStr for SourceList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" | "" => Ok(SourceList(Vec::new())),
            "all" => Ok(SourceList(NoiseSource::INDIVIDUAL.to_vec())),
            list => list
                .split(',')
                .map(|p| NoiseSource::from_str(&p.trim().replace('-', "_")).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()
                .map(SourceList),
        }
    }
}

fn sources(s: &str) -> Result<SourceList, String> {
    s.parse()
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Preset name (standard, optimal, optimal_phase) or TOML file.
    #[arg(long, default_value = "standard")]
    pub hardware: String,
    /// Override the hardware phase PSD.
    #[arg(long)]
    pub phase_psd: Option<PathBuf>,
    /// Override the hardware intensity PSD.
    #[arg(long)]
    pub intensity_psd: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Propagation substeps per segment.
    #[arg(long, default_value_t = 4)]
    pub substeps: usize,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct BudgetArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_parser = sources, default_value = "interaction,doppler,decay")]
    pub sources: SourceList,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrtKind {
    Phase,
    Intensity,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    /// Mixed state on the qubit subspace (gate infidelity).
    Gate,
    /// Uniform average over the computational basis states.
    Basis,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FrtArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    /// Hardware whose Rabi frequency fixes the time axis (and PSDs).
    #[arg(long, default_value = "standard")]
    pub hardware: String,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: FrtKind,
    /// PSD files; each declares its kind.
    #[arg(long, num_args = 1..)]
    pub psd: Vec<PathBuf>,
    /// `auto` or `fmax_hz:points`.
    #[arg(long, default_value = "auto")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "gate")]
    pub average: Average,
    #[arg(long, default_value_t = 8)]
    pub substeps: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    /// Ω/2π in MHz.
    Omega,
    /// ω_xy/2π in kHz.
    OmegaXy,
    /// ω_z/2π in kHz.
    OmegaZ,
    /// Principal quantum number of both Rydberg states.
    N,
    /// Temperature in μK.
    Temperature,
}

impl Parameter {
    pub fn header(self) -> &'static str {
        match self {
            Parameter::Omega => "omega [2pi MHz]",
            Parameter::OmegaXy => "omega_xy [2pi kHz]",
            Parameter::OmegaZ => "omega_z [2pi kHz]",
            Parameter::N => "n [1]",
            Parameter::Temperature => "temperature [uK]",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KScaling {
    /// `k_eff ∝ n²`.
    PowerLaw,
    /// `k_eff ∝ 1/λ(n)` from the level energies.
    Wavelength,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum)]
    pub vary: Parameter,
    /// Comma-separated values in the unit of the varied parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    #[arg(long, value_parser = sources, default_value = "interaction,doppler,decay")]
    pub sources: SourceList,
    #[arg(long, value_enum, default_value = "power-law")]
    pub k_scaling: KScaling,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct RescaleArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    /// New maximal Rabi frequency Ω/2π (MHz).
    #[arg(long, value_parser = positive)]
    pub omega_max_mhz: f64,
    /// Override V/2π (MHz); breaks the V/Ω ratio and flags the pulse.
    #[arg(long, value_parser = positive)]
    pub v_dipole_mhz: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn series(s: &str) -> Result<Series, String> {
    Series::from_str(s).map_err(|e| e.to_string())
}

fn n_list(s: &str) -> Result<NList, String> {
    parse_n_list(s).map(NList)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NList(pub Vec<u32>);

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AtomicArgs {
    #[command(subcommand)]
    pub report: AtomicReport,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AtomicCommon {
    /// Principal quantum numbers: `20,40,60`, `30..70` or `30..70:5`.
    #[arg(long, value_parser = n_list)]
    pub n: NList,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicReport {
    /// Radiative lifetimes with the largest decay channels.
    Lifetime {
        #[arg(long, value_parser = series, default_value = "S1")]
        series: Series,
        #[command(flatten)]
        common: AtomicCommon,
        /// Strongest channels listed per level.
        #[arg(long, default_value_t = 3)]
        channels: usize,
    },
    /// Level energies and quantum defects.
    Energy {
        #[arg(long, value_parser = series, default_value = "S1")]
        series: Series,
        #[command(flatten)]
        common: AtomicCommon,
    },
    /// C₃ by scaling and from the dipole elements.
    C3 {
        #[command(flatten)]
        common: AtomicCommon,
    },
    /// Every n-dependent hardware factor.
    Scaling {
        #[command(flatten)]
        common: AtomicCommon,
    },
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ContinueArgs {
    /// Converged pulse at the starting angle.
    #[arg(long)]
    pub pulse: PathBuf,
    #[arg(long, value_parser = angle)]
    pub theta_to: f64,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    /// Infidelity each step must reach.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
