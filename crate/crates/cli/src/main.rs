mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown names, unreadable inputs, refused overwrites.
    Usage(String),
    /// The request was understood but the computation failed or was refused.
    Domain(String),
}

impl CliError {
    pub fn from_core(e: lfic_core::Error) -> Self {
        use lfic_core::Error as E;
        match e {
            E::UnknownName { .. } | E::Parse { .. } | E::Schema(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<lfic_core::Error> for CliError {
    fn from(e: lfic_core::Error) -> Self {
        CliError::from_core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "lfic", version, about = "Correlation polytopes, quantum bounds and query-protocol simulation")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LFIC_THREADS")]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the vertex and facet description of a model.
    Enumerate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Facet census against no-signalling and symmetry classes of the strict facets.
    Classify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Value of a functional on a behaviour.
    Evaluate {
        #[arg(long)]
        functional: String,
        #[arg(long)]
        behavior: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact membership test with a certificate.
    Membership {
        #[arg(long)]
        behavior: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified relaxation bound on a functional.
    NpaBound(NpaArgs),
    /// Two-dimensional section through three behaviours.
    Section(SectionArgs),
    /// Monte-Carlo run of the query protocol.
    Simulate(SimulateArgs),
    /// Built-in behaviours, realizations and functionals.
    Presets {
        #[arg(long, conflicts_with = "show")]
        list: bool,
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct NpaArgs {
    #[arg(long)]
    pub functional: String,
    /// 1, 1+AB, 2 or 2-no-BB.
    #[arg(long, default_value = "2")]
    pub level: String,
    /// standard, query-complete, or auto (query-complete on query-shaped scenarios).
    #[arg(long, default_value = "auto")]
    pub relations: String,
    /// Also run the see-saw search for a matching realization.
    #[arg(long)]
    pub seesaw: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SectionArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Comma-separated models; "quantum" is the relaxation.
    #[arg(long, default_value = "ns,lfic,lhv,lf,quantum", value_delimiter = ',')]
    pub models: Vec<String>,
    #[arg(long, default_value_t = lfic_core::slice::DEFAULT_RAYS)]
    pub rays: usize,
    #[arg(long, default_value = "1+AB")]
    pub quantum_level: String,
    /// query-complete imposes the hull equalities that N0 and Q2 break, so
    /// the plane only meets that relaxation in a lower-dimensional set.
    #[arg(long, default_value = "standard")]
    pub relations: String,
    /// Rebuild the SVG from the CSV files already in --out-dir.
    #[arg(long)]
    pub replot: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value = "Q1")]
    pub preset: String,
    #[arg(long, default_value = "lueders")]
    pub policy: String,
    #[arg(long, default_value_t = 100_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// main or protocol2.
    #[arg(long, default_value = "main")]
    pub protocol: String,
    /// Distribution of the extra query in protocol2: uniform, never, or
    /// comma-separated weights.
    #[arg(long, default_value = "uniform")]
    pub t_query: String,
    #[arg(long, default_value = "honest")]
    pub device: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    let force = cli.force;
    match cli.command {
        Command::Enumerate { model, out_dir } => commands::enumerate(&model, &out_dir, force),
        Command::Classify { out } => commands::classify(&out, force),
        Command::Evaluate { functional, behavior, out } => commands::evaluate(&functional, &behavior, out.as_deref(), force),
        Command::Membership { behavior, model, out } => commands::membership(&behavior, &model, out.as_deref(), force),
        Command::NpaBound(a) => commands::npa_bound(&a, force),
        Command::Section(a) => commands::section(&a, force),
        Command::Simulate(a) => commands::simulate(&a, force),
        Command::Presets { list, show } => commands::presets(list, show.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
