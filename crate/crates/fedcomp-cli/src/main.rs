use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use fedcomp_cli::checkpoint::load_model;
use fedcomp_cli::config::ExperimentConfig;
use fedcomp_cli::csvio::write_csv;
use fedcomp_cli::error::{CliError, CliResult};
use fedcomp_cli::experiment::{evaluate, load_dataset, prepare, run_experiment};
use fedcomp_cli::report::emit_report;

#[derive(Parser)]
#[command(name = "fedcomp", version, about = "Federated compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (or file, for `gen` and `fuse`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment and emit report files.
    Run(Common),
    /// Fuse saved models with the config's fusion settings.
    Fuse {
        #[command(flatten)]
        common: Common,
        /// Saved model files to fuse.
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
    /// Evaluate a saved model on the config's dataset and task.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Saved model file.
        model: PathBuf,
    },
    /// Generate the config's synthetic dataset as CSV.
    Gen(Common),
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads: must be >= 1".to_string()));
        }
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> Option<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
}

fn cmd_run(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg);
    let ckpt = dir.as_ref().map(|d| d.join("checkpoint"));
    let (report, timings, global) = run_experiment(&cfg, ckpt.as_deref())?;
    if let Some(dir) = &dir {
        emit_report(&report, &timings, dir)?;
        std::fs::write(dir.join("model.fpv"), global.to_bytes())?;
        println!("report written to {}", dir.display());
    }
    println!(
        "compression rate {:.4} ({} / {} nonzero), metrics: {}",
        report.compression_rate,
        report.nonzero_count,
        report.param_count,
        serde_json::to_string(&report.metrics).map_err(|e| CliError::Runtime(e.to_string()))?
    );
    Ok(())
}

fn cmd_fuse(common: &Common, models: &[PathBuf]) -> CliResult<()> {
    let cfg = load(common)?;
    let loaded: Vec<_> = models.iter().map(|p| load_model(p)).collect::<CliResult<_>>()?;
    let outcome = fedcomp::fusion::admm_sparse_fuse(&loaded, &cfg.fusion_config())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let rate = fedcomp::fusion::compression_rate(&outcome.model, 0.0);
    if let Some(path) = &common.out {
        std::fs::write(path, outcome.model.to_bytes())?;
        println!("fused model written to {}", path.display());
    }
    println!(
        "fused {} models: {} iterations, converged = {}, compression rate {:.4}",
        loaded.len(),
        outcome.iterations,
        outcome.converged,
        rate
    );
    Ok(())
}

fn cmd_eval(common: &Common, model_path: &Path) -> CliResult<()> {
    let cfg = load(common)?;
    let model = load_model(model_path)?;
    let prepared = prepare(&cfg)?;
    let metrics = evaluate(&cfg, &model, &prepared)?;
    let json =
        serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(dir) = out_dir(common, &cfg) {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("metrics.json"), json.clone() + "\n")?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_gen(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    if cfg.dataset.synthetic.is_none() {
        return Err(CliError::Validation(
            "gen requires a [dataset.synthetic] section".to_string(),
        ));
    }
    let ts = load_dataset(&cfg)?;
    let path = common.out.clone().ok_or_else(|| {
        CliError::Validation("gen requires --out <file.csv>".to_string())
    })?;
    write_csv(&ts, &path)?;
    println!(
        "wrote {} features x {} steps to {}",
        ts.num_features(),
        ts.num_steps(),
        path.display()
    );
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let _ = e.print();
            std::process::exit(1);
        }
    };
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Fuse { common, models } => cmd_fuse(common, models),
        Command::Eval { common, model } => cmd_eval(common, model),
        Command::Gen(common) => cmd_gen(common),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
