use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cubex::config::{Command, ExperimentConfig};
use cubex::experiments;
use cubex::Error;

/// Exponential sums, arc dissections and sumset experiments for cubes.
#[derive(Parser, Debug)]
#[command(name = "cubex", version, about)]
struct Cli {
    /// sum-eval | arc-classify | verify-identities | verify-envelopes |
    /// major-approx | expander | bound-table
    command: String,

    /// Parameter overrides, `key=value`.
    params: Vec<String>,

    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated sizes, e.g. 1000,4000,16000.
    #[arg(long = "p-grid")]
    p_grid: Option<String>,

    #[arg(long)]
    epsilon: Option<f64>,

    #[arg(long = "tolerance-scale")]
    tolerance_scale: Option<f64>,

    /// What to print on stdout when no --out is given.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let command: Command = cli.command.parse()?;
    let mut kv: Vec<(String, String)> = Vec::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        kv.extend(ExperimentConfig::parse_file(&text)?);
    }
    for p in &cli.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{p}`")))?;
        kv.push((k.to_string(), v.to_string()));
    }
    let flags = [
        ("seed", cli.seed.map(|s| s.to_string())),
        ("p_grid", cli.p_grid.clone()),
        ("epsilon", cli.epsilon.map(|e| e.to_string())),
        ("tolerance_scale", cli.tolerance_scale.map(|t| t.to_string())),
        ("out", cli.out.as_ref().map(|o| o.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            kv.push((k.to_string(), v));
        }
    }
    ExperimentConfig::resolve(command, kv.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}\n\nRun `cubex --help` for usage.");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e @ (Error::Config(_) | Error::Precondition { .. })) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = cfg.str("out");
    if out.is_empty() {
        match cli.format {
            Format::Json => print!("{}", report.to_json()),
            Format::Csv => {
                for (name, t) in &report.tables {
                    if report.tables.len() > 1 {
                        println!("# {name}");
                    }
                    match t.to_csv() {
                        Ok(s) => print!("{s}"),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(1);
                        }
                    }
                }
            }
        }
    } else {
        match report.write_to(out.as_ref()) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: cannot write report to {out}: {e}");
                return ExitCode::from(1);
            }
        }
    }
    for c in &report.checks {
        eprintln!("{}", c.line());
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
