use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use vfm_core::config::{apply_override, from_value, RunConfig, Scenario};
use vfm_core::scenario::{run_scenario, run_sweep, RunManifest};

/// Emitter / three-cavity simulator. Writes CSV data plus manifest.json.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenfrequencies and dark-mode target fraction versus Δ/η.
    Eigens(RunArgs),
    /// Normalized LDOS at the target cavity versus Δ/η.
    Ldos(RunArgs),
    /// Integrate the amplitude equations for a given schedule.
    Dynamics(RunArgs),
    /// Design a schedule for a Gaussian target pulse, simulate and analyse it.
    Shape(RunArgs),
    /// Check a schedule against the adiabaticity chain.
    Adiabaticity(RunArgs),
    /// Run the config once per value of one key, in parallel.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config field, e.g. --set system.g=0.2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// key=v1,v2,... ; each value becomes one run in <out>/<key>=<value>
    #[arg(long)]
    vary: String,
    #[arg(long)]
    workers: Option<usize>,
}

fn read_doc(args: &RunArgs) -> Result<Value> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    for s in &args.set {
        apply_override(&mut doc, s)?;
    }
    if let Some(out) = &args.out {
        apply_override(&mut doc, &format!("output.dir={}", Value::from(out.display().to_string())))?;
    }
    Ok(doc)
}

fn print_manifest(m: &RunManifest) {
    println!("{} -> {}", m.scenario.name(), m.config.output.dir.display());
    for (k, v) in &m.metrics {
        println!("  {k} = {v}");
    }
    println!("  ({:.2} s)", m.wall_clock_seconds);
}

fn run(scenario: Scenario, args: &RunArgs) -> Result<()> {
    let mut doc = read_doc(args)?;
    apply_override(&mut doc, &format!("scenario=\"{}\"", scenario.name()))?;
    let cfg = from_value(doc)?;
    let manifest = run_scenario(&cfg, &cfg.output.dir)?;
    print_manifest(&manifest);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = read_doc(&args.run)?;
    let Some((key, values)) = args.vary.split_once('=') else {
        bail!("--vary expects key=v1,v2,...");
    };
    let root = from_value(base.clone())?.output.dir;
    let mut jobs: Vec<(String, RunConfig)> = Vec::new();
    for v in values.split(',').filter(|v| !v.is_empty()) {
        let label = format!("{key}={v}");
        let mut doc = base.clone();
        apply_override(&mut doc, &label)?;
        let dir = root.join(&label);
        apply_override(&mut doc, &format!("output.dir={}", Value::from(dir.display().to_string())))?;
        jobs.push((label, from_value(doc)?));
    }
    if jobs.is_empty() {
        bail!("--vary lists no values");
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let entries = run_sweep(&jobs, &root, workers)?;
    let mut failed = 0;
    for e in &entries {
        match &e.error {
            None => println!("{}: ok", e.label),
            Some(err) => {
                failed += 1;
                println!("{}: FAILED: {err}", e.label);
            }
        }
    }
    println!("summary in {}", root.join("sweep.json").display());
    if failed > 0 {
        bail!("{failed} of {} runs failed", entries.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Eigens(a) => run(Scenario::Eigens, a),
        Command::Ldos(a) => run(Scenario::Ldos, a),
        Command::Dynamics(a) => run(Scenario::Dynamics, a),
        Command::Shape(a) => run(Scenario::Shape, a),
        Command::Adiabaticity(a) => run(Scenario::Adiabaticity, a),
        Command::Sweep(a) => sweep(a),
    }
}
