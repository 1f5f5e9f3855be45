use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use rmu_harness::config::ExperimentConfig;
use rmu_harness::level::build_levels;
use rmu_harness::probes::Shared;
use rmu_harness::HarnessError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "rmu", version, about = "Weighted inequality probes for rough Marcinkiewicz integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in the config and write JSON/CSV reports.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check config invariants and the kernel and weight screens.
    Validate { config: PathBuf },
    /// Compare the summaries of two JSON reports.
    ReportDiff { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::Validate { config } => validate(&config),
        Command::ReportDiff { a, b } => report_diff(&a, &b),
    }
}

/// `RMU_THREADS` bounds the worker pool; unset or 0 leaves rayon's default.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RMU_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("RMU_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let cfg = ExperimentConfig::from_path(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(path: &Path, output: Option<PathBuf>) -> ExitCode {
    let mut cfg = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(o) = output {
        cfg.output = o;
    }
    match rmu_harness::run_and_write(&cfg) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn validate(path: &Path) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let screens = || -> Result<bool, HarnessError> {
        let mut ok = true;
        let shared = Shared::new(&cfg)?;
        let k = &shared.kernel;
        let kernel_ok = !k.negative_example && k.cancellation_residual < 1e-8;
        println!(
            "kernel {}: cancellation residual {:.3e}, sup bound {}{}",
            k.label,
            k.cancellation_residual,
            k.sup_bound,
            if kernel_ok { "" } else { " [fails the kernel screen]" }
        );
        if let Some(c) = &k.continuity {
            println!(
                "  continuity fit: rho = {:.3}, lipschitz = {}, log-continuous = {}",
                c.fitted_rho, c.lipschitz, c.log_continuous
            );
        }
        ok &= kernel_ok;
        let levels = build_levels(&cfg)?;
        for (w, spec) in cfg.weights.iter().enumerate() {
            let a1: Vec<f64> = levels.iter().map(|l| l.a1(w)).collect();
            let stable = a1.windows(2).all(|p| p[1] <= cfg.stability_threshold * p[0]);
            println!(
                "weight {}: a1 per refinement {:?}{}",
                spec.label(),
                a1,
                if stable { "" } else { " [not A_1-stable; weak-type rows will be skipped]" }
            );
        }
        println!("{} function(s) are supported in the core window", cfg.functions.len());
        Ok(ok)
    };
    match screens() {
        Ok(true) => {
            println!("config is valid");
            ExitCode::SUCCESS
        }
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn read_json(path: &Path) -> Result<Value, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn report_diff(a: &Path, b: &Path) -> ExitCode {
    let (ra, rb) = match (read_json(a), read_json(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let diffs = rmu_harness::report::diff_summaries(&ra, &rb);
    if diffs.is_empty() {
        println!("summaries identical");
    } else {
        for d in &diffs {
            println!("{d}");
        }
        println!("{} difference(s)", diffs.len());
    }
    ExitCode::SUCCESS
}
