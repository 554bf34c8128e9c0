use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contact_lab::plot::{self, Series, Style};
use contact_lab::runner::{self, Status};
use contact_lab::scenario::{Scenario, Suite};
use contact_lab::io;

/// Contact-process simulation lab.
///
/// Exit codes: 0 success, 1 a check failed, 2 configuration error,
/// 3 sampling aborted (acceptance floor or truncation guard) or IO failure.
#[derive(Parser)]
#[command(name = "cplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (default: the scenario's `output`, else
        /// `$CPLAB_OUT/<name>`).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a suite of scenarios and write a summary and dashboard.
    Suite {
        suite: PathBuf,
        /// Output root (default: the suite's `output`, else
        /// `$CPLAB_OUT/<name>`).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plot curve CSV files into one SVG.
    Plot {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        log_y: bool,
        #[arg(long, default_value = "")]
        title: String,
    },
    /// Check scenario or suite files without running them.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn is_suite(path: &PathBuf) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .is_some_and(|v| v.get("scenarios").is_some())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, output } => {
            let s = match Scenario::load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(Status::ConfigError);
                }
            };
            match runner::run_scenario(&s, output.as_deref()) {
                Ok(r) => {
                    match &r.message {
                        Some(m) => eprintln!("{}: {:?}: {m}", r.name, r.status),
                        None => eprintln!("{}: {:?} -> {}", r.name, r.status, r.output.display()),
                    }
                    exit(r.status)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(Status::Aborted)
                }
            }
        }
        Command::Suite { suite, output } => {
            let (suite, scenarios) = match Suite::load(&suite) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(Status::ConfigError);
                }
            };
            match runner::run_suite(&suite, &scenarios, output.as_deref()) {
                Ok(summary) => {
                    for r in &summary.scenarios {
                        eprintln!("{}: {:?}{}", r.name, r.status, r.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default());
                    }
                    exit(summary.status)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(Status::Aborted)
                }
            }
        }
        Command::Plot { curves, output, log_y, title } => {
            let mut series = Vec::new();
            for path in &curves {
                match io::read_curve_csv(path) {
                    Ok(points) => {
                        let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                        series.push(Series { label, points });
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return exit(Status::ConfigError);
                    }
                }
            }
            let style = Style { title, x_label: "t".into(), y_label: "value".into(), log_y };
            match io::write_atomic(&output, plot::render(&series, &style).as_bytes()) {
                Ok(()) => exit(Status::Ok),
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(Status::Aborted)
                }
            }
        }
        Command::Validate { files } => {
            let mut status = Status::Ok;
            for f in &files {
                let res = if is_suite(f) { Suite::load(f).map(|(s, v)| format!("suite {} ({} scenarios)", s.name, v.len())) } else {
                    Scenario::load(f).map(|s| format!("scenario {} ({})", s.name, s.operation))
                };
                match res {
                    Ok(m) => println!("{}: ok, {m}", f.display()),
                    Err(e) => {
                        println!("{}: {e}", f.display());
                        status = Status::ConfigError;
                    }
                }
            }
            exit(status)
        }
    }
}
