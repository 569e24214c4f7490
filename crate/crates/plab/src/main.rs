use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plab::config::{self, ConfigError, Kind, Overrides};
use plab::experiments::{self, RunError};

#[derive(Parser)]
#[command(name = "plab", version, about = "Counts primitive lattice points in thickened parabolas and rational points near hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: PLAB_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV series path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall-clock times (reports are then no longer reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Primitive points in a thickened parabola against ζ(n)⁻¹·vol.
    ParabolaCount {
        #[command(flatten)]
        common: Common,
        /// Generator JSON file or builtin:jordan3 / builtin:sqrt2-quadric.
        #[arg(long)]
        generator: Option<String>,
        /// Base box, "lo,hi;lo,hi".
        #[arg(long = "box", allow_hyphen_values = true)]
        box_: Option<String>,
        /// Start time, or a comma-separated list for a sweep.
        #[arg(long = "T")]
        t: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        /// exact or float.
        #[arg(long)]
        mode: Option<String>,
        /// Also enumerate by brute force and compare.
        #[arg(long)]
        bruteforce: Option<bool>,
        /// Point limit for the brute-force enumeration.
        #[arg(long)]
        guard: Option<String>,
    },
    /// Space of invariant quadratic forms and rational-member detection.
    InvariantForms {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        height_bound: Option<String>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Effectiveness diagnostic of a generator.
    Diagnostic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generator: Option<String>,
        #[arg(long = "C")]
        c: Option<String>,
        #[arg(long = "T0")]
        t0: Option<String>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Rational points within ε of a Monge surface.
    NearSurface {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        domain: Option<String>,
        /// Height bound, or a comma-separated list.
        #[arg(long = "Q")]
        q: Option<String>,
        /// A rational, or auto:[c*]Q^-k.
        #[arg(long)]
        eps: Option<String>,
        /// Distance: vertical or euclidean.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_work: Option<String>,
    },
    /// Q²·(distance of the nearest rational point) as a function of Q.
    DeltaCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        domain: Option<String>,
        #[arg(long = "Q")]
        q: Option<String>,
        /// Comma-separated Q values (default 1, 2, 4, … , Q).
        #[arg(long)]
        points: Option<String>,
        /// Report closed forms (exact mode).
        #[arg(long, conflicts_with = "float")]
        exact: bool,
        #[arg(long)]
        float: bool,
    },
    /// First primitive vector with form and linear values in a box.
    Oppenheim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        constraints: Option<String>,
        #[arg(long = "box", allow_hyphen_values = true)]
        box_: Option<String>,
        #[arg(long)]
        qmax: Option<String>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Lattice points in the scaled patch set of a quadric datum.
    PatchCount {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        datum: Option<String>,
        #[arg(long = "Q")]
        q: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        windows: Option<String>,
        /// montecarlo or quadrature.
        #[arg(long)]
        volume: Option<String>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Builds a parallel-patch decomposition and audits it.
    PatchAudit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        domain: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long = "Q")]
        q: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
}

fn keys(pairs: Vec<(&'static str, Option<String>)>) -> Vec<(&'static str, String)> {
    pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
}

fn split(command: Command) -> (Kind, Common, Option<String>, Vec<(&'static str, String)>) {
    match command {
        Command::ParabolaCount { common, generator, box_, t, beta, mode, bruteforce, guard } => (
            Kind::ParabolaCount,
            common,
            mode,
            keys(vec![
                ("generator", generator),
                ("box", box_),
                ("T", t),
                ("beta", beta),
                ("bruteforce", bruteforce.map(|b| b.to_string())),
                ("guard", guard),
            ]),
        ),
        Command::InvariantForms { common, generator, height_bound, mode } => {
            (Kind::InvariantForms, common, mode, keys(vec![("generator", generator), ("height_bound", height_bound)]))
        }
        Command::Diagnostic { common, generator, c, t0, mode } => {
            (Kind::Diagnostic, common, mode, keys(vec![("generator", generator), ("C", c), ("T0", t0)]))
        }
        Command::NearSurface { common, expr, domain, q, eps, mode, max_work } => (
            Kind::NearSurface,
            common,
            None,
            keys(vec![("expr", expr), ("domain", domain), ("Q", q), ("eps", eps), ("distance", mode), ("max_work", max_work)]),
        ),
        Command::DeltaCurve { common, expr, domain, q, points, exact, float } => {
            let mode = if exact {
                Some("exact".to_string())
            } else if float {
                Some("float".to_string())
            } else {
                None
            };
            (Kind::DeltaCurve, common, mode, keys(vec![("expr", expr), ("domain", domain), ("Q", q), ("points", points)]))
        }
        Command::Oppenheim { common, form, constraints, box_, qmax, mode } => (
            Kind::Oppenheim,
            common,
            mode,
            keys(vec![("form", form), ("constraints", constraints), ("box", box_), ("qmax", qmax)]),
        ),
        Command::PatchCount { common, datum, q, windows, volume, mode } => (
            Kind::PatchCount,
            common,
            mode,
            keys(vec![("datum", datum), ("Q", q), ("windows", windows), ("volume", volume)]),
        ),
        Command::PatchAudit { common, expr, domain, delta, q, eps, samples } => (
            Kind::PatchAudit,
            common,
            None,
            keys(vec![("expr", expr), ("domain", domain), ("delta", delta), ("Q", q), ("eps", eps), ("samples", samples)]),
        ),
    }
}

fn write(path: &PathBuf, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    let (kind, common, mode, keys) = split(cli.command);
    let (file, base) = match &common.config {
        Some(path) => {
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (config::read_file(path)?, base)
        }
        None => (config::FileConfig::default(), PathBuf::new()),
    };
    let ov = Overrides { mode, threads: common.threads, seed: common.seed, output: common.out, csv: common.csv, timings: common.timings, keys };
    let resolved = config::resolve(kind, file, base, &ov)?;
    let (report, csv, warnings) = experiments::execute(&resolved)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match &resolved.exec.output {
        Some(p) => write(p, &report)?,
        None => print!("{report}"),
    }
    if let Some(p) = &resolved.exec.csv {
        match csv {
            Some(text) => write(p, &text)?,
            None => return Err(ConfigError(format!("{} produces no CSV series", kind.name())).into()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
