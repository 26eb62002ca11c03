use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sratio::bench::{
    compute_diagnostics, compute_weights, run_benchmark, write_diagnostics, BenchConfig, WeightDump,
};
use sratio::data::save_csv;
use sratio::synth::make_synthetic;
use sratio::transfer::verify_bound;
use sratio::Error;

const THREADS_ENV: &str = "SRATIO_THREADS";

#[derive(Parser)]
#[command(
    name = "sratio",
    version,
    about = "Reweight training data for simple models using a complex model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the repeated-split benchmark described by a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute SRatio weights on whole datasets and write weight dumps.
    Weights {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute weight diagnostics from a finished run directory.
    Analyze {
        #[arg(long)]
        run: PathBuf,
    },
    /// Write a built-in synthetic dataset to CSV.
    Synth {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the log-loss bound on random probability triples.
    VerifyBound {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Clip level; repeat for several.
        #[arg(long = "beta", default_values_t = [1.5, 2.0, 5.0, 10.0])]
        betas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Json(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingLabelColumn(_)
            | Error::NonNumericFeature { .. }
            | Error::NonFiniteFeature { .. }
            | Error::UnknownGenerator(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(e.to_string()))
}

fn load_config(path: &Path) -> Result<(BenchConfig, Option<PathBuf>), Failure> {
    let cfg = BenchConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf);
    Ok((cfg, base))
}

fn bench(config: &Path, out: Option<PathBuf>) -> Result<bool, Failure> {
    let (cfg, base) = load_config(config)?;
    let run = run_benchmark(&cfg, base.as_deref())?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    run.write(&dir)?;
    print!(
        "{}",
        sratio::analysis::results_markdown(&run.report.results)
    );
    println!("config {} -> {}", run.report.config_hash, dir.display());
    for cell in &run.report.cells {
        if let sratio::bench::CellOutcome::Failed { error } = &cell.outcome {
            eprintln!(
                "failed: {} {} {} {} split {}: {error}",
                cell.dataset, cell.complex, cell.simple, cell.method, cell.split
            );
        }
    }
    Ok(run.report.failures == 0)
}

fn weights(config: &Path, out: Option<PathBuf>) -> Result<bool, Failure> {
    let (cfg, base) = load_config(config)?;
    let dumps = compute_weights(&cfg, base.as_deref())?;
    let dir = out
        .unwrap_or_else(|| cfg.output_dir.clone())
        .join("weights");
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    println!("dataset complex simple gamma beta active zero_pct");
    for d in &dumps {
        d.save(&dir)?;
        let r = &d.report;
        println!(
            "{} {} {} {} {} {} {:.2}",
            d.dataset,
            d.complex,
            d.simple,
            r.selected_gamma,
            r.selected_beta,
            r.active_set.len(),
            100.0 * r.zero_fraction
        );
    }
    Ok(true)
}

fn analyze(run: &Path) -> Result<bool, Failure> {
    let config_path = run.join("config.json");
    let cfg: BenchConfig = match std::fs::read_to_string(&config_path) {
        Ok(text) => serde_json::from_str(&text).map_err(Error::from)?,
        Err(_) => {
            return Err(Failure::Run(format!(
                "missing artifact: {}",
                config_path.display()
            )))
        }
    };
    let dumps =
        WeightDump::load_dir(&run.join("weights")).map_err(|e| Failure::Run(e.to_string()))?;
    let diag = compute_diagnostics(&dumps, cfg.ci, cfg.change_threshold, cfg.purity_pooling)?;
    let files = write_diagnostics(&diag, &cfg.hash(), &run.join("diagnostics"))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&diag).map_err(Error::from)?
    );
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(true)
}

fn synth(name: &str, n: usize, seed: u64, out: &Path) -> Result<bool, Failure> {
    let ds = make_synthetic(name, n, seed)?;
    save_csv(&ds, out)?;
    println!(
        "{} rows, {} features, {} classes -> {}",
        ds.len(),
        ds.n_features(),
        ds.n_classes(),
        out.display()
    );
    Ok(true)
}

fn bound(samples: usize, betas: &[f64], trials: usize, seed: u64) -> Result<bool, Failure> {
    let start = std::time::Instant::now();
    let sweeps =
        verify_bound(samples, betas, trials, seed).map_err(|e| Failure::Config(e.to_string()))?;
    let mut ok = true;
    for s in &sweeps {
        ok &= s.violations == 0;
        println!(
            "beta={} samples={} trials={} violations={} max_excess={:.6e}",
            s.beta, s.samples, s.trials, s.violations, s.max_excess
        );
    }
    println!("elapsed {:.3}s", start.elapsed().as_secs_f64());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Bench { config, out } => bench(&config, out),
        Command::Weights { config, out } => weights(&config, out),
        Command::Analyze { run } => analyze(&run),
        Command::Synth { name, n, seed, out } => synth(&name, n, seed, &out),
        Command::VerifyBound {
            samples,
            betas,
            trials,
            seed,
        } => bound(samples, &betas, trials, seed),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
