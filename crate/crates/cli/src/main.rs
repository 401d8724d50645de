//! `torec`: command-line front end for the toral-recurrence library.
//!
//! Exit codes: 0 on success, 1 when a computation fails or a validation
//! reports a failure, 2 on usage errors.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{write_table, Format, Table};

#[derive(Parser, Debug)]
#[command(name = "torec", version, about = "Uniform recurrence on hyperbolic toral automorphisms")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Write the table here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = toral_recurrence::verify::SEED, global = true)]
    pub seed: u64,
    /// Significant digits for floating-point output.
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=17), global = true)]
    pub precision: u32,
    /// Run data-parallel loops sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Catalog partition to use.
    #[arg(long, default_value = "cat", conflicts_with = "file", global = true)]
    pub catalog: String,
    /// Partition JSON file to use instead of a catalog entry.
    #[arg(long, global = true)]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShiftChoice {
    /// Golden-mean shift, metric base (1+√5)/2.
    Golden,
    /// Full shift on two symbols, metric base 2.
    Full2,
    /// Coding shift of the cat-map catalog partition.
    Cat,
}

#[derive(Subcommand, Debug)]
pub enum PartitionAction {
    /// Check cover, disjointness and the Markov property.
    Validate,
    /// Print the 0/1 transition matrix.
    Matrix,
    /// Print the geometry constants of the partition.
    Constants,
    /// Print the partition as JSON.
    Export,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues and eigendirections of the matrix `a b; c d`.
    Spectrum {
        #[arg(allow_negative_numbers = true)]
        a: i64,
        #[arg(allow_negative_numbers = true)]
        b: i64,
        #[arg(allow_negative_numbers = true)]
        c: i64,
        #[arg(allow_negative_numbers = true)]
        d: i64,
    },
    /// Inspect a Markov partition.
    Partition {
        #[command(subcommand)]
        action: PartitionAction,
        #[command(flatten)]
        source: Source,
    },
    /// Spectral radius and entropy of the coding shift.
    Entropy {
        #[command(flatten)]
        source: Source,
        /// Word length for the counting estimate.
        #[arg(long, default_value_t = 30)]
        n: usize,
    },
    /// Dimension formulas at one α or over a grid (`alpha,dim_uniform,dim_asymptotic,lower,upper`).
    Dim {
        #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
        alpha: Option<f64>,
        /// Grid step; rows cover `[0, alpha-max]`.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        alpha_max: f64,
    },
    /// Fixed blocks and free intervals of a layout (`kind,left_end,right_end`, kind like `right(2)`).
    Layout {
        /// α as an exact decimal or fraction.
        #[arg(long)]
        alpha: String,
        /// θ as an exact decimal or fraction.
        #[arg(long)]
        theta: String,
        /// Number of centers.
        #[arg(long)]
        k: usize,
        /// First center; defaults to θ.
        #[arg(long)]
        n1: Option<String>,
        /// Floor centers and half-widths to integers.
        #[arg(long)]
        rounded: bool,
    },
    /// Layout of the α = 1/3 construction and its witness count.
    Cardinality {
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        n1: i64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "full2")]
        shift: ShiftChoice,
    },
    /// Counts of windows passing the recurrence test (`m,count,log_count,slope_running`).
    Estimate {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        m_max: i64,
        /// Largest depth tested; smaller windows use the deepest depth they hold.
        #[arg(long)]
        n_max: u64,
        #[arg(long, value_enum, default_value = "golden")]
        shift: ShiftChoice,
    },
    /// Uniform recurrence test of one window (`quantity,value`).
    Recurrence {
        /// Window as `lo hi s_lo … s_hi`; must contain position 0.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long)]
        alpha: f64,
        /// Smallest depth tested.
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long)]
        n_max: u64,
        #[arg(long, value_enum, default_value = "cat")]
        shift: ShiftChoice,
    },
    /// Exact region coded by one window (`quantity,value`).
    Cylinder {
        #[command(flatten)]
        source: Source,
        /// Window as `lo hi s_lo … s_hi`.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
    },
    /// Diameter ratios of sampled cylinders (`m,samples,min_ratio,max_ratio,violations`).
    Cylinders {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        m_max: u32,
    },
    /// Run the whole check suite.
    Verify {
        /// Run only these check ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(toral_recurrence::Error),
    /// The command ran and its table was written, but it reports a failed check.
    Validation(String),
    Io(io::Error),
}

impl<E: Into<toral_recurrence::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Compute(e.into())
    }
}

pub struct Outcome {
    pub table: Table,
    pub failure: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome { table, failure: None }
    }
}

fn emit(cli: &Cli, table: &Table) -> io::Result<()> {
    let digits = cli.precision as usize;
    match &cli.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_table(&mut w, table, cli.format, digits)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_table(&mut w, table, cli.format, digits)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let outcome = commands::execute(cli)?;
    emit(cli, &outcome.table).map_err(Failure::Io)?;
    match outcome.failure {
        Some(msg) => Err(Failure::Validation(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `torec --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
