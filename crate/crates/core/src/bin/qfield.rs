use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfield::scenario::{bundled, bundled_names, run, RunOptions, Scenario};
use qfield::{Error, UnitMode};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "qfield", version, about = "Run field-dynamics scenarios and report verdicts")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Override the scenario's unit system.
        #[arg(long)]
        units: Option<UnitMode>,
        /// `key=value` on a dotted path, e.g. `lattice.n_max=8`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write plot_data.csv (analysis, series, x, y).
        #[arg(long)]
        emit_plot_data: bool,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Show what a bundled scenario computes.
    Describe { name: String },
}

fn load_text(arg: &str) -> Result<String, Error> {
    let p = Path::new(arg);
    if p.is_file() {
        return Ok(std::fs::read_to_string(p)?);
    }
    bundled(arg).map(str::to_string)
}

fn usage(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_run(
    scenario: &str,
    out_dir: &Path,
    units: Option<UnitMode>,
    overrides: &[String],
    emit_plot_data: bool,
) -> ExitCode {
    let text = match load_text(scenario) {
        Ok(t) => t,
        Err(e) => return usage(&e),
    };
    let mut all = overrides.to_vec();
    if let Some(u) = units {
        let name = match u {
            UnitMode::Si => "si",
            UnitMode::Natural => "natural",
        };
        all.push(format!("units=\"{name}\""));
    }
    let sc = match Scenario::from_json_with_overrides(&text, &all) {
        Ok(s) => s,
        Err(e) => return usage(&e),
    };
    let outcome = match run(&sc, &RunOptions { emit_plot_data }) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: scenario `{}` failed: {e}", sc.name);
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let path = match outcome.write_to(out_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    for v in &outcome.summary.verdicts {
        let metric = v.metric.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        let tol = v.tolerance.map_or_else(|| "-".to_string(), |m| format!("{m:.1e}"));
        println!(
            "{:<4} {:<24} metric {metric:>10}  tolerance {tol}",
            if v.passed { "PASS" } else { "FAIL" },
            v.analysis
        );
    }
    if outcome.summary.passed {
        println!("all verdicts passed; summary in {}", path.display());
        ExitCode::SUCCESS
    } else {
        println!("verdict failure; report in {}", path.display());
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match cli.command {
        Command::Run {
            scenario,
            out_dir,
            units,
            overrides,
            emit_plot_data,
        } => cmd_run(&scenario, &out_dir, units, &overrides, emit_plot_data),
        Command::ListScenarios => {
            for name in bundled_names() {
                let desc = bundled(name)
                    .ok()
                    .and_then(|t| Scenario::from_json(t).ok())
                    .map(|s| s.topic)
                    .unwrap_or_default();
                println!("{name:<28} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { name } => {
            let sc = match load_text(&name).and_then(|t| Scenario::from_json(&t)) {
                Ok(s) => s,
                Err(e) => return usage(&e),
            };
            println!("{}\n", sc.name);
            println!("{}\n", sc.description);
            println!("topic: {}", sc.topic);
            println!("units: {}", if sc.units == UnitMode::Si { "si" } else { "natural" });
            let names: Vec<&str> = sc.analyses.iter().map(|a| a.name()).collect();
            println!("analyses: {}", names.join(", "));
            ExitCode::SUCCESS
        }
    }
}
