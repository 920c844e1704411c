use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cartan::cli::{exit_code_for, run, Report, ScenarioConfig};

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<String>,
    /// Override evol.steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override evol.integrator (rkmk4 or rk4).
    #[arg(long)]
    integrator: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress per-check console lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Parser)]
#[command(name = "cartan", about = "Development maps of flat Lie-algebra-valued 1-forms: checks and artifacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report the worst structure-equation residual of the configured form.
    CheckFlat(CommonArgs),
    /// Develop the form over the grid and emit the resulting map.
    Develop(CommonArgs),
    /// Transport along a polyline and compare with the radial development.
    DevelopPath(CommonArgs),
    /// Measure loop defects over a family of shrinking square loops.
    HolonomyScan(CommonArgs),
    /// Check the one-dimensional evolution laws and convergence order.
    Evolve(CommonArgs),
    /// Check the group structure on flat forms and its bracket.
    GroupLaw(CommonArgs),
    /// Check the pointed primitive operator and variation round trips.
    Variation(CommonArgs),
    /// Check the semidirect tangent group and paired development.
    Tangent(CommonArgs),
    /// Run every check family in one deterministic report.
    VerifyAll(CommonArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &CommonArgs) {
        match self {
            Command::CheckFlat(a) => ("check-flat", a),
            Command::Develop(a) => ("develop", a),
            Command::DevelopPath(a) => ("develop-path", a),
            Command::HolonomyScan(a) => ("holonomy-scan", a),
            Command::Evolve(a) => ("evolve", a),
            Command::GroupLaw(a) => ("group-law", a),
            Command::Variation(a) => ("variation", a),
            Command::Tangent(a) => ("tangent", a),
            Command::VerifyAll(a) => ("verify-all", a),
        }
    }
}

fn load_config(args: &CommonArgs) -> cartan::error::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| {
        cartan::error::Error::Io {
            path: args.config.display().to_string(),
            source,
        }
    })?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.clone());
    }
    if let Some(steps) = args.steps {
        cfg.evol.steps = steps;
    }
    if let Some(integrator) = &args.integrator {
        cfg.evol.integrator = integrator.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &Report) {
    for row in &report.checks {
        println!(
            "{} {} {:.6e} {:.1e}",
            if row.pass { "PASS" } else { "FAIL" },
            row.name,
            row.value,
            row.tolerance
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (subcommand, args) = cli.command.split();

    if let Ok(threads) = std::env::var("CARTAN_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let started = Instant::now();
    let result = load_config(args).and_then(|cfg| run(subcommand, &cfg));
    let code = exit_code_for(&result);
    match &result {
        Ok(report) => {
            if !args.quiet {
                print_report(report);
                // timing goes to stderr only, keeping stdout/artifacts
                // byte-stable across runs
                eprintln!("{} finished in {:.3}s", subcommand, started.elapsed().as_secs_f64());
            }
        }
        Err(err) => eprintln!("error: {err}"),
    }
    ExitCode::from(code as u8)
}
