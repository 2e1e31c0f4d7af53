use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bellhist_cli::scenario::Kind;
use bellhist_cli::{emit, run_scenario, CliError, Format, Report, RunOptions, ScenarioFile};

#[derive(Parser, Debug)]
#[command(name = "bellhist", version, about = "Run consistent-histories scenarios and emit reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the agreement tolerance of every assertion.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file for `run`, output directory for `suite`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Default output directory when `--out` is absent.
    #[arg(long, env = "BELLHIST_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
    /// Record wall-clock duration in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every `*.json` scenario in a directory, in name order.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List scenario kinds with their default parameters.
    List,
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { file, common } => run_one(&file, &common, common.out.clone()),
        Command::Suite { dir, common } => run_suite(&dir, &common),
        Command::List => {
            for k in Kind::ALL {
                println!("{:<14} {}", k.name(), k.summary());
                println!("{:<14} defaults: {}", "", k.default_parameters());
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn options(c: &Common) -> RunOptions {
    RunOptions {
        seed: c.seed,
        tol: c.tol,
        timing: c.timing,
    }
}

fn write_report(report: &Report, common: &Common, target: Option<PathBuf>) -> Result<(), CliError> {
    let text = emit(report, common.format)?;
    let target = target.or_else(|| {
        common.out_dir.as_ref().map(|d| {
            d.join(format!("{}.{}", report.scenario.name, common.format.extension()))
        })
    });
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_one(file: &Path, common: &Common, target: Option<PathBuf>) -> Result<bool, CliError> {
    let scenario = ScenarioFile::load(file)?;
    let report = run_scenario(&scenario, &options(common))?;
    write_report(&report, common, target)?;
    Ok(report.passed)
}

fn run_suite(dir: &Path, common: &Common) -> Result<bool, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let out_dir = common.out.clone().or_else(|| common.out_dir.clone());
    let mut all_passed = true;
    let mut first_error = None;
    for f in &files {
        let target = match &out_dir {
            Some(d) => {
                let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Some(d.join(format!("{stem}.{}", common.format.extension())))
            }
            None => None,
        };
        match run_one(f, common, target) {
            Ok(passed) => {
                eprintln!("{} {}", if passed { "pass" } else { "FAIL" }, f.display());
                all_passed &= passed;
            }
            Err(e) => {
                eprintln!("error {}: {e}", f.display());
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(all_passed),
    }
}
