use dilatio_cli::{config, runner};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dilatio::CheckStatus;

/// Runs declarative suites of dilation-inequality checks and writes
/// machine-readable reports.
#[derive(Parser, Debug)]
#[command(name = "dilatio", version, about)]
struct Cli {
    /// Path to a TOML scenario file.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the sample budget from the config.
    #[arg(long)]
    samples: Option<u64>,

    /// Output directory for report.json / report.csv (and sweep.csv).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated subset of check ids to run.
    #[arg(long)]
    checks: Option<String>,

    /// Sweep a numeric parameter of a single check: param=v1,v2,v3.
    /// Writes sweep.csv instead of the standard reports.
    #[arg(long)]
    sweep: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    init_thread_pool()?;

    let raw = std::fs::read_to_string(&cli.config)
        .map_err(|e| format!("reading {:?}: {e}", cli.config))?;
    let mut scenario_config: config::ScenarioConfig =
        toml::from_str(&raw).map_err(|e| format!("parsing {:?}: {e}", cli.config))?;

    if let Some(seed) = cli.seed {
        scenario_config.budget.seed = seed;
    }
    if let Some(samples) = cli.samples {
        scenario_config.budget.samples = samples;
    }
    let budget = runner::budget_from_spec(&scenario_config.budget)?;
    let scenario = config::resolve(&scenario_config)?;

    let checks = match &cli.checks {
        Some(wanted) => runner::filter_checks(&scenario_config.checks, wanted)?,
        None => scenario_config.checks.clone(),
    };

    let out_dir = cli
        .out
        .or_else(|| scenario_config.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    if let Some(sweep) = &cli.sweep {
        let (param, values) = parse_sweep(sweep)?;
        if checks.len() != 1 {
            return Err(format!(
                "--sweep needs exactly one check (use --checks to select); got {}",
                checks.len()
            ));
        }
        let points = runner::run_sweep(&checks[0], &scenario, &budget, &param, &values)?;
        runner::write_sweep(&points, &out_dir.join("sweep.csv"))?;
        println!(
            "swept {} over {param} ({} points) -> {}",
            checks[0].id,
            points.len(),
            out_dir.join("sweep.csv").display()
        );
        return Ok(ExitCode::SUCCESS);
    }

    let rows = runner::run_all(&checks, &scenario, &budget);
    runner::write_reports(&rows, &out_dir)?;

    let mut fails = 0usize;
    let mut inconclusive = 0usize;
    for row in &rows {
        println!(
            "{:<40} {:>12} lhs {:+.6e} rhs {:+.6e}",
            row.id,
            runner::status_str(&row.status),
            row.lhs.value,
            row.rhs.value
        );
        match row.status {
            CheckStatus::Fail => fails += 1,
            CheckStatus::Inconclusive => inconclusive += 1,
            CheckStatus::Pass => {}
        }
    }
    println!(
        "{} checks: {} pass, {} fail, {} inconclusive -> {}",
        rows.len(),
        rows.len() - fails - inconclusive,
        fails,
        inconclusive,
        out_dir.join("report.csv").display()
    );

    Ok(if fails > 0 {
        ExitCode::from(1)
    } else if inconclusive > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn parse_sweep(raw: &str) -> Result<(String, Vec<f64>), String> {
    let (param, values) = raw
        .split_once('=')
        .ok_or_else(|| format!("--sweep must look like param=v1,v2,v3; got {raw:?}"))?;
    let values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad sweep value {v:?}"))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("--sweep needs at least one value".to_string());
    }
    Ok((param.trim().to_string(), values))
}

fn init_thread_pool() -> Result<(), String> {
    if let Ok(raw) = std::env::var("DILATIO_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| format!("DILATIO_THREADS must be a positive integer, got {raw:?}"))?;
        if threads == 0 {
            return Err("DILATIO_THREADS must be at least 1".to_string());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("configuring worker pool: {e}"))?;
    }
    Ok(())
}
