mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] treeshift::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// The command ran but its construction or check did not succeed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "treeshift", version, about = "Complex symmetry of weighted shifts on finite directed trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Residual tolerance for certificates and witnesses.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    /// Relative singular-value threshold for numerical rank.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub rank_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    /// Longest word tried by the trace obstruction.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    pub word_len: u64,
    /// Print the JSON report on stdout instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    TwoBranch,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateFamily {
    Path,
    TwoBranch,
    Binary,
    Broom,
    TwoLevelBroom,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyParams {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub kappa: usize,
    /// Branch length (two-branch only).
    #[arg(long)]
    pub theta: Option<usize>,
    /// Comma-separated weights: two-branch `λ_{-κ+1},…,λ_θ`, binary `λ_1,…,λ_κ`.
    /// Complex values use the `a+bi` form.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub weights: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide complex symmetry of a tree+weights document (exit 0 CS, 1 NotCS, 2 undetermined).
    Check {
        /// Tree document with a `weights` object, or a bare tree when `--weights` is given. `-` reads stdin.
        input: String,
        /// Separate weights document.
        #[arg(long)]
        weights: Option<String>,
        /// Write the shift matrix (row-major `[re, im]` pairs and basis) to this file.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the published criterion for a two-branch or binary instance.
    Classify {
        #[command(flatten)]
        params: FamilyParams,
        #[command(flatten)]
        common: Common,
    },
    /// Build the explicit conjugation for a two-branch or binary instance.
    Conjugate {
        #[command(flatten)]
        params: FamilyParams,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate dim ker S^m and dim ker S*^m.
    Kernels {
        input: String,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 4)]
        max_power: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validate published criteria against the certified oracles on a sampled grid.
    Crossval {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        kappa_max: usize,
        #[arg(long, default_value_t = 0)]
        theta_max: usize,
        /// Restrict two-branch cells to θ = κ + offset.
        #[arg(long)]
        theta_offset: Option<usize>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the broom h-sequence induction and verify the resulting conjugation data.
    Broom {
        /// Comma-separated weights in (0, 1). Defaults to λ_i = 10^-i.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        /// Number of steps; truncates `--weights` or sets the length of the default schedule.
        #[arg(long)]
        n: Option<usize>,
        /// Teeth in the truncated broom (default 2N+1).
        #[arg(long)]
        teeth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a tree document, with uniform weights so `check` can consume it directly.
    Generate {
        #[arg(long, value_enum)]
        family: GenerateFamily,
        /// Vertex count (path).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        kappa: Option<usize>,
        #[arg(long)]
        theta: Option<usize>,
        #[arg(long)]
        teeth: Option<usize>,
        /// Weight assigned to every non-root vertex.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        weight: String,
        /// Emit only the tree fields.
        #[arg(long)]
        no_weights: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check {
            input,
            weights,
            dump_matrix,
            common,
        } => commands::check(&input, weights.as_deref(), dump_matrix.as_deref(), &common),
        Command::Classify { params, common } => commands::classify(&params, &common),
        Command::Conjugate { params, common } => commands::conjugate(&params, &common),
        Command::Kernels {
            input,
            weights,
            max_power,
            common,
        } => commands::kernels(&input, weights.as_deref(), max_power, &common),
        Command::Crossval {
            family,
            kappa_max,
            theta_max,
            theta_offset,
            samples,
            common,
        } => commands::crossval(family, kappa_max, theta_max, theta_offset, samples, &common),
        Command::Broom {
            weights,
            n,
            teeth,
            common,
        } => commands::broom(weights, n, teeth, &common),
        Command::Generate {
            family,
            n,
            kappa,
            theta,
            teeth,
            weight,
            no_weights,
            out,
        } => commands::generate(family, n, kappa, theta, teeth, &weight, no_weights, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
