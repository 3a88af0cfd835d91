//! Experiment runner CLI: single pipeline stages, full runs, and sweeps
//! over the ROM order n. All outputs are CSV/JSON files plus a gnuplot
//! script; see the library docs for the file formats.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use romembed::medium::DomainKind;
use romembed::pipeline::{self, ExperimentConfig, Stage};

#[derive(Parser)]
#[command(name = "romembed", version, about = "inverse-scattering ROM embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON experiment config; omitted = --preset defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// truth medium preset (constant | smooth-bump | smoothed-step | bump-plus-reflector)
    #[arg(long, default_value = "smooth-bump")]
    preset: String,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// ROM order (pole-residue pair count); overrides the config value
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the fine-grid impedance on the contour
    Forward(CommonArgs),
    /// Exact truncated spectral data of the bounded fine-grid system
    Spectrum(CommonArgs),
    /// Rational fit of sampled impedance data
    Fit(CommonArgs),
    /// Lanczos ROM and grid weights from spectral data
    Rom(CommonArgs),
    /// Optimal-grid velocity reconstruction
    EmbedOg(CommonArgs),
    /// Krein grid, mass curve, and slope velocities
    EmbedKrein(CommonArgs),
    /// Open-domain lossy embedding
    EmbedKn(CommonArgs),
    /// Passivity criteria report
    Passivity(CommonArgs),
    /// Full stage chain from the config
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// stop after this stage
        #[arg(long)]
        stage: Option<String>,
    },
    /// Run the chain for each n and tabulate errors
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// comma-separated n values
        #[arg(long, value_delimiter = ',', default_value = "6,12,25,50")]
        n_list: Vec<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, romembed::Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::preset(&common.preset, 12),
    };
    if let Some(n) = common.n {
        cfg.n = n;
    }
    Ok(cfg)
}

// Minimal producer chain ending in the requested stage.
fn chain_for(target: Stage, kind: DomainKind) -> Vec<Stage> {
    let producer = match kind {
        DomainKind::Bounded => vec![Stage::Spectrum],
        DomainKind::SemiInfinite => vec![Stage::Forward, Stage::Fit],
    };
    match target {
        Stage::Forward => vec![Stage::Forward],
        Stage::Spectrum => vec![Stage::Spectrum],
        Stage::Fit => vec![Stage::Forward, Stage::Fit],
        Stage::Rom => [producer, vec![Stage::Rom]].concat(),
        Stage::EmbedOg | Stage::EmbedKrein | Stage::EmbedKn => {
            [producer, vec![Stage::Rom, target]].concat()
        }
        Stage::Passivity => [producer, vec![Stage::Passivity]].concat(),
    }
}

fn single_stage(common: &CommonArgs, target: Stage) -> Result<(), romembed::Error> {
    let mut cfg = load_config(common)?;
    let kind = cfg.profile()?.kind;
    cfg.stages = chain_for(target, kind);
    let metrics = pipeline::run(&cfg, &common.out)?;
    report(&metrics);
    Ok(())
}

fn report(metrics: &pipeline::Metrics) {
    if let Some(v) = metrics.fit_misfit {
        println!("fit misfit: {v:.3e}");
    }
    if let Some(v) = metrics.l1_velocity_og {
        println!("L1 velocity error (optimal grid): {v:.3e}");
    }
    if let Some(v) = metrics.l1_velocity_krein {
        println!("L1 velocity error (Krein): {v:.3e}");
    }
    if let Some(v) = metrics.l1_mass_krein {
        println!("L1 mass error (Krein): {v:.3e}");
    }
    if let Some(v) = metrics.pattern_matches_sommerfeld {
        println!("Sommerfeld loss pattern: {}", if v { "matches" } else { "spread" });
    }
    for w in &metrics.warnings {
        eprintln!("warning: {w}");
    }
}

fn dispatch(cli: Cli) -> Result<(), romembed::Error> {
    match cli.command {
        Command::Forward(c) => single_stage(&c, Stage::Forward),
        Command::Spectrum(c) => single_stage(&c, Stage::Spectrum),
        Command::Fit(c) => single_stage(&c, Stage::Fit),
        Command::Rom(c) => single_stage(&c, Stage::Rom),
        Command::EmbedOg(c) => single_stage(&c, Stage::EmbedOg),
        Command::EmbedKrein(c) => single_stage(&c, Stage::EmbedKrein),
        Command::EmbedKn(c) => single_stage(&c, Stage::EmbedKn),
        Command::Passivity(c) => single_stage(&c, Stage::Passivity),
        Command::Run { common, stage } => {
            let mut cfg = load_config(&common)?;
            if let Some(name) = stage {
                let target = Stage::parse(&name)?;
                let kind = cfg.profile()?.kind;
                let full = if cfg.stages.is_empty() {
                    cfg.resolved_stages(kind)
                } else {
                    cfg.stages.clone()
                };
                let cut = full
                    .iter()
                    .position(|&s| s == target)
                    .map(|i| full[..=i].to_vec())
                    .unwrap_or_else(|| chain_for(target, kind));
                cfg.stages = cut;
            }
            let metrics = pipeline::run(&cfg, &common.out)?;
            report(&metrics);
            Ok(())
        }
        Command::Sweep { common, n_list } => {
            let cfg = load_config(&common)?;
            let rows = pipeline::sweep(&cfg, &n_list, &common.out)?;
            println!("n,l1_velocity,l1_mass,runtime_ms");
            for r in &rows {
                println!(
                    "{},{},{},{}",
                    r.n,
                    r.l1_velocity.map_or(String::from("-"), |v| format!("{v:.3e}")),
                    r.l1_mass.map_or(String::from("-"), |v| format!("{v:.3e}")),
                    r.runtime_ms
                );
                if let Some(e) = &r.error {
                    eprintln!("n = {}: {e}", r.n);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
