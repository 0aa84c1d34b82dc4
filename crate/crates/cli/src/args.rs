use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "berezin-lab", version, about = "Spectral analysis of finite POVMs, Berezin transforms and quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV with a `#`-prefixed column annotation line.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyses of a POVM file.
    #[command(subcommand)]
    Povm(PovmCommand),
    /// Coherent-state quantization of the sphere.
    #[command(subcommand)]
    Cp1(Cp1Command),
    /// POVMs from finite group representations.
    #[command(subcommand)]
    Group(GroupCommand),
    /// Balancing iteration on point measures.
    #[command(subcommand)]
    Donaldson(DonaldsonCommand),
    /// Measurement noise.
    #[command(subcommand)]
    Noise(NoiseCommand),
    /// Repeated-measurement Markov chain.
    #[command(subcommand)]
    Chain(ChainCommand),
}

#[derive(Args, Debug, Clone)]
pub struct PovmInput {
    /// POVM JSON file.
    #[arg(long = "in", visible_alias = "povm", value_name = "FILE")]
    pub input: PathBuf,
    /// Load even if validation fails.
    #[arg(long)]
    pub force: bool,
    /// Validation tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Method {
    Auto,
    Direct,
    Dual,
}

#[derive(Subcommand, Debug)]
pub enum PovmCommand {
    /// Resolution-of-identity and positivity checks.
    Validate(PovmInput),
    /// Berezin spectrum, gap and multiplicity clusters.
    Spectrum {
        #[command(flatten)]
        input: PovmInput,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
    },
    /// Center of mass, I, J and the gap they predict.
    Geometry(PovmInput),
    /// Diffusion distances for every pair of points.
    Diffusion {
        #[command(flatten)]
        input: PovmInput,
        /// Comma-separated diffusion times.
        #[arg(long, default_value = "1")]
        tau: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum Cp1Command {
    /// Gap and low eigenvalue clusters per level.
    Gap {
        /// Levels: `8`, `2,4,8` or `2..24`.
        #[arg(long, default_value = "2")]
        p: String,
        /// Highest harmonic degree tabulated (capped at p).
        #[arg(long, default_value_t = 1)]
        kmax: usize,
    },
    /// Principal angles between eigenspaces and spherical harmonics.
    Eigenfunctions {
        #[arg(long, default_value = "8,16,24")]
        p: String,
        /// Harmonic degrees.
        #[arg(long, default_value = "1,2")]
        l: String,
    },
    /// Write the level-p POVM as a POVM JSON file.
    Export {
        #[arg(long)]
        p: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct GroupInput {
    /// Built-in group: s3, s4, d4, q8, z1..z24.
    #[arg(long, required_unless_present = "group_file")]
    pub group: Option<String>,
    /// Irrep label of a built-in group.
    #[arg(long)]
    pub rep: Option<String>,
    /// Group JSON file (instead of --group).
    #[arg(long, requires = "rep_file", conflicts_with = "group")]
    pub group_file: Option<PathBuf>,
    /// Representation JSON file, used with --group-file.
    #[arg(long)]
    pub rep_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GroupCommand {
    /// Character-route spectrum, vanishing-off subgroup, gap test and diffusion scales.
    Demo {
        #[command(flatten)]
        input: GroupInput,
        #[arg(long, default_value = "1,2,5,10")]
        tau: String,
    },
    /// Eigenvalues by the character and matrix routes.
    Spectrum {
        #[command(flatten)]
        input: GroupInput,
    },
    /// Diffusion distances on the group.
    Diffusion {
        #[command(flatten)]
        input: GroupInput,
        #[arg(long, default_value = "1")]
        tau: String,
    },
}

#[derive(Args, Debug, Clone)]
pub struct MeasureInput {
    /// Point-measure JSON file.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DonaldsonCommand {
    /// Iterate to the balanced product from the identity.
    Run {
        #[command(flatten)]
        input: MeasureInput,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
    },
    /// Finite-difference differential at the balanced product versus the channel.
    Linearize {
        #[command(flatten)]
        input: MeasureInput,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
    },
    /// Spanning and stability checks.
    Check {
        #[command(flatten)]
        input: MeasureInput,
        /// Enumerate point subsets (n ≤ 4, N ≤ 12).
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum NoiseCommand {
    /// Minimal noise against the spectral gap.
    GapVsNoise(PovmInput),
}

#[derive(Subcommand, Debug)]
pub enum ChainCommand {
    /// Monte Carlo trajectories of the Lüders chain.
    Simulate {
        #[command(flatten)]
        input: PovmInput,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Start state (index).
        #[arg(long, default_value_t = 0)]
        start: usize,
    },
    /// Channel powers applied to a random pure state.
    Power {
        #[command(flatten)]
        input: PovmInput,
        #[arg(long, default_value_t = 60)]
        k_max: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}
