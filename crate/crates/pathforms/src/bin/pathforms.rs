use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathforms::experiments::report::{emit_report, format_table, read_report};
use pathforms::experiments::{run_suite, RunConfig, CATALOG, OUT_ENV};
use pathforms::manifold::ManifoldSpec;

#[derive(Parser)]
#[command(name = "pathforms", version, about = "Path-space two-form and divergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment suite and write report.csv / report.json.
    Run {
        /// JSON run configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// e.g. sphere(2), euclidean(3), flat_torus(2)
        #[arg(long)]
        manifold: Option<ManifoldSpec>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated ids, group names (flat, structure, ibp, conditional) or `all`.
        #[arg(long)]
        suite: Option<String>,
        /// Output directory [default: $PATHFORMS_OUT, else ./pathforms-out]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plots: bool,
    },
    /// List experiment ids with what each one checks.
    List,
    /// Print a stored report.json; with --out, rewrite its CSV/JSON there.
    Report {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plots: bool,
    },
}

/// Prints to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verdict_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            let text: String = CATALOG.iter().map(|e| format!("{:<28} {:<12} {}\n", e.id, e.group.name(), e.anchor)).collect();
            emit(&text);
            ExitCode::SUCCESS
        }
        Command::Report { path, out, plots } => {
            let report = match read_report(&path) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            emit(&format_table(&report));
            if let Some(dir) = out {
                if let Err(e) = emit_report(&report, &dir, plots) {
                    return usage(e);
                }
            }
            verdict_code(report.all_pass())
        }
        Command::Run { config, manifold, steps, horizon, samples, seed, suite, out, plots } => {
            let mut cfg = match config {
                Some(p) => match std::fs::read_to_string(&p).map_err(pathforms::Error::from).and_then(|t| RunConfig::from_json(&t)) {
                    Ok(c) => c,
                    Err(e) => return usage(format!("{}: {e}", p.display())),
                },
                None => RunConfig::default(),
            };
            if let Some(v) = manifold {
                cfg.manifold = v;
            }
            if let Some(v) = steps {
                cfg.steps = v;
            }
            if let Some(v) = horizon {
                cfg.horizon = v;
            }
            if let Some(v) = samples {
                cfg.samples = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = suite {
                cfg.suite = vec![v];
            }
            if out.is_some() {
                cfg.out = out;
            }
            cfg.plots |= plots;
            let dir = cfg.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("pathforms-out"));
            if let Err(e) = cfg.validate() {
                return usage(e);
            }
            let report = match run_suite(&cfg) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            emit(&format_table(&report));
            if let Err(e) = emit_report(&report, &dir, cfg.plots) {
                return usage(e);
            }
            emit(&format!("wrote {}\n", dir.display()));
            verdict_code(report.all_pass())
        }
    }
}
