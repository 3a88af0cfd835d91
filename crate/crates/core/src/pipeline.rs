//! End-to-end experiment runner: a staged chain from a truth medium
//! through forward modeling, rational fitting, ROM construction, and the
//! embeddings, with CSV/JSON artifacts for every intermediate and error
//! metrics against the truth curves.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed_kn::{self, PatternVerdict};
use crate::embed_krein::{self, VelocityRule};
use crate::embed_og;
use crate::error::{Error, Result};
use crate::forward::{self, ContourSpacing, ImpedanceSamples};
use crate::medium::{DomainKind, MediumProfile};
use crate::metrics;
use crate::passivity;
use crate::ratfit;
use crate::rom::{self, LanczosOptions};
use crate::spectral::SpectralData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Forward,
    Spectrum,
    Fit,
    Rom,
    EmbedOg,
    EmbedKrein,
    EmbedKn,
    Passivity,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Forward => "forward",
            Stage::Spectrum => "spectrum",
            Stage::Fit => "fit",
            Stage::Rom => "rom",
            Stage::EmbedOg => "embed-og",
            Stage::EmbedKrein => "embed-krein",
            Stage::EmbedKn => "embed-kn",
            Stage::Passivity => "passivity",
        }
    }

    pub fn parse(name: &str) -> Result<Stage> {
        Ok(match name {
            "forward" => Stage::Forward,
            "spectrum" => Stage::Spectrum,
            "fit" => Stage::Fit,
            "rom" => Stage::Rom,
            "embed-og" => Stage::EmbedOg,
            "embed-krein" => Stage::EmbedKrein,
            "embed-kn" => Stage::EmbedKn,
            "passivity" => Stage::Passivity,
            other => {
                return Err(Error::InvalidInput(format!("unknown stage `{other}`")));
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MediumSource {
    Preset(String),
    Inline(MediumProfile),
}

fn default_n() -> usize {
    12
}
fn default_fine_cells() -> usize {
    forward::DEFAULT_FINE_CELLS
}
fn default_samples() -> usize {
    200
}
fn default_iterations() -> usize {
    ratfit::DEFAULT_ITERATIONS
}
fn default_pattern_tol() -> f64 {
    0.05
}
fn default_passivity_count() -> usize {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub medium: MediumSource,
    /// empty list = kind-dependent default chain
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_fine_cells")]
    pub fine_cells: usize,
    /// sampling band [w_min, w_max]; None = derived from n and travel time
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// real shift of the sampling contour; None = derived (0 for open media)
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// sensor-side speed; None = truth c(0)
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_pattern_tol")]
    pub pattern_tol: f64,
    #[serde(default = "default_passivity_count")]
    pub passivity_count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn preset(name: &str, n: usize) -> Self {
        Self {
            medium: MediumSource::Preset(name.to_string()),
            stages: Vec::new(),
            n,
            fine_cells: default_fine_cells(),
            band: None,
            samples: default_samples(),
            shift: None,
            iterations: default_iterations(),
            c0: None,
            pattern_tol: default_pattern_tol(),
            passivity_count: default_passivity_count(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn profile(&self) -> Result<MediumProfile> {
        match &self.medium {
            MediumSource::Preset(name) => MediumProfile::preset(name),
            MediumSource::Inline(p) => {
                p.validate()?;
                Ok(p.clone())
            }
        }
    }

    pub fn resolved_stages(&self, kind: DomainKind) -> Vec<Stage> {
        if !self.stages.is_empty() {
            return self.stages.clone();
        }
        match kind {
            DomainKind::Bounded => vec![
                Stage::Forward,
                Stage::Spectrum,
                Stage::Rom,
                Stage::EmbedOg,
                Stage::EmbedKrein,
                Stage::Passivity,
            ],
            DomainKind::SemiInfinite => vec![
                Stage::Forward,
                Stage::Fit,
                Stage::Rom,
                Stage::EmbedKn,
                Stage::Passivity,
            ],
        }
    }

    fn validate_chain(&self, stages: &[Stage]) -> Result<()> {
        let has_before = |target: Stage, options: &[Stage]| -> bool {
            let pos = stages.iter().position(|&s| s == target).unwrap();
            stages[..pos].iter().any(|s| options.contains(s))
        };
        for &s in stages {
            let ok = match s {
                Stage::Forward => true,
                Stage::Spectrum => true,
                Stage::Fit => has_before(Stage::Fit, &[Stage::Forward]),
                Stage::Rom => has_before(Stage::Rom, &[Stage::Spectrum, Stage::Fit]),
                Stage::EmbedOg | Stage::EmbedKrein | Stage::EmbedKn => {
                    has_before(s, &[Stage::Rom])
                }
                Stage::Passivity => has_before(Stage::Passivity, &[Stage::Spectrum, Stage::Fit]),
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "stage `{}` has no producer earlier in the chain",
                    s.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics {
    pub l1_velocity_og: Option<f64>,
    pub linf_velocity_og: Option<f64>,
    pub l1_velocity_krein: Option<f64>,
    pub l1_mass_krein: Option<f64>,
    pub fit_misfit: Option<f64>,
    pub fit_converged: Option<bool>,
    pub pattern_matches_sommerfeld: Option<bool>,
    pub stage_timings_ms: Vec<(String, u128)>,
    pub warnings: Vec<String>,
}

struct RunState {
    profile: MediumProfile,
    samples: Option<ImpedanceSamples>,
    spectral: Option<SpectralData>,
    rom: Option<rom::TridiagonalROM>,
    weights: Option<rom::GridWeights>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Derived sampling parameters: the band covers the first ~n resonances
/// spaced pi/T(L) apart; bounded contours are shifted off the imaginary
/// axis to stay clear of the lossless poles.
fn derived_contour(config: &ExperimentConfig, profile: &MediumProfile) -> Result<([f64; 2], f64)> {
    let t_l = profile.travel_time(profile.length)?;
    let spacing = std::f64::consts::PI / t_l;
    // open-domain fits need roughly two pole pairs per resonance spacing to
    // converge, so the default band there covers only ~n/2 resonances
    let top = match profile.kind {
        DomainKind::Bounded => config.n as f64 + 0.5,
        DomainKind::SemiInfinite => config.n as f64 / 2.0 + 0.5,
    };
    let band = config.band.unwrap_or([0.25 * spacing, top * spacing]);
    let shift = config.shift.unwrap_or(match profile.kind {
        DomainKind::Bounded => 0.25 * spacing,
        DomainKind::SemiInfinite => 0.0,
    });
    Ok((band, shift))
}

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Metrics> {
    let profile = config.profile()?;
    let stages = config.resolved_stages(profile.kind);
    config.validate_chain(&stages)?;
    fs::create_dir_all(out_dir)?;

    let mut metrics = Metrics::default();
    let mut state = RunState {
        profile,
        samples: None,
        spectral: None,
        rom: None,
        weights: None,
    };
    let truth = state.profile.truth_curves(2048)?;
    let truth_mass: Vec<(f64, f64)> = truth
        .x
        .iter()
        .copied()
        .zip(truth.mass.iter().copied())
        .collect();
    let truth_speed: Vec<(f64, f64)> = truth
        .x
        .iter()
        .map(|&x| Ok((x, state.profile.eval_speed(x)?)))
        .collect::<Result<_>>()?;
    let c0 = match config.c0 {
        Some(v) => v,
        None => state.profile.eval_speed(0.0)?,
    };

    for &stage in &stages {
        let started = Instant::now();
        run_stage(
            stage,
            config,
            &mut state,
            &mut metrics,
            out_dir,
            c0,
            &truth_speed,
            &truth_mass,
        )
        .map_err(|e| e.in_stage(stage.name()))?;
        metrics
            .stage_timings_ms
            .push((stage.name().to_string(), started.elapsed().as_millis()));
    }

    let metadata = serde_json::json!({
        "config": config,
        "stages": stages.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "c0": c0,
        "contour": derived_contour(config, &state.profile)?,
        "metrics": metrics,
    });
    write_file(out_dir, "metadata.json", &serde_json::to_string_pretty(&metadata)?)?;
    write_file(out_dir, "plot.gp", GNUPLOT_SCRIPT)?;
    Ok(metrics)
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    stage: Stage,
    config: &ExperimentConfig,
    state: &mut RunState,
    metrics: &mut Metrics,
    out_dir: &Path,
    c0: f64,
    truth_speed: &[(f64, f64)],
    truth_mass: &[(f64, f64)],
) -> Result<()> {
    match stage {
        Stage::Forward => {
            let system = forward::discretize(&state.profile, config.fine_cells)?;
            let (band, shift) = derived_contour(config, &state.profile)?;
            let samples =
                system.sample_contour(band, config.samples, shift, ContourSpacing::Linear)?;
            write_file(out_dir, "impedance.csv", &samples.to_csv())?;
            state.samples = Some(samples);
        }
        Stage::Spectrum => {
            let data = forward::exact_spectrum(&state.profile, config.fine_cells, config.n)?;
            write_file(out_dir, "spectral.csv", &data.to_csv())?;
            state.spectral = Some(data);
        }
        Stage::Fit => {
            let samples = state
                .samples
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no impedance samples".into()))?;
            let result = match state.profile.kind {
                // open-domain embeddings need all-passive pairs
                DomainKind::SemiInfinite => {
                    ratfit::fit_passive(samples, config.n, config.iterations)?
                }
                DomainKind::Bounded => ratfit::fit(samples, config.n, config.iterations)?,
            };
            if !result.converged {
                metrics.warnings.push(format!(
                    "fit misfit {:.3e} above tolerance after {} iterations",
                    result.misfit, config.iterations
                ));
            }
            metrics.fit_misfit = Some(result.misfit);
            metrics.fit_converged = Some(result.converged);
            write_file(out_dir, "spectral.csv", &result.data.to_csv())?;
            state.spectral = Some(result.data);
        }
        Stage::Rom => {
            let data = state
                .spectral
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no spectral data".into()))?;
            let opts = LanczosOptions::for_depth(data.poles.len());
            let (rom, weights) = rom::build(data, &opts)?;
            if !rom.near_breakdown.is_empty() {
                metrics.warnings.push(format!(
                    "near-breakdown Lanczos steps: {:?}",
                    rom.near_breakdown
                ));
            }
            write_file(out_dir, "rom.csv", &rom.to_csv())?;
            write_file(out_dir, "weights.csv", &weights.to_csv())?;
            state.rom = Some(rom);
            state.weights = Some(weights);
        }
        Stage::EmbedOg => {
            if state.profile.kind != DomainKind::Bounded {
                return Err(Error::InvalidInput(
                    "optimal-grid embedding needs a bounded medium".into(),
                ));
            }
            let weights = state
                .weights
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no grid weights".into()))?;
            let reference = embed_og::train_reference(config.n, state.profile.length)?;
            let rec = embed_og::reconstruct(weights, &reference, c0)?;
            if !rec.flagged.is_empty() {
                metrics
                    .warnings
                    .push(format!("nonpositive speed estimates at {:?}", rec.flagged));
            }
            write_file(out_dir, "og.csv", &rec.to_csv())?;
            let interval = [0.0, state.profile.length];
            metrics.l1_velocity_og =
                Some(metrics::l1_error(&rec.curve(), truth_speed, interval)?);
            metrics.linf_velocity_og =
                Some(metrics::linf_error(&rec.curve(), truth_speed, interval)?);
        }
        Stage::EmbedKrein => {
            let weights = state
                .weights
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no grid weights".into()))?;
            let curve = embed_krein::krein_curve(weights);
            let velocity = embed_krein::krein_velocity(weights, VelocityRule::SegmentSlope);
            write_file(out_dir, "krein.csv", &curve.to_csv())?;
            write_file(out_dir, "krein_velocity.csv", &embed_krein::velocity_csv(&velocity))?;
            let hi = state
                .profile
                .length
                .min(*curve.nodes.last().unwrap_or(&state.profile.length));
            if hi > 0.0 {
                metrics.l1_mass_krein =
                    Some(metrics::l1_error(&curve.mass_curve(), truth_mass, [0.0, hi])?);
                metrics.l1_velocity_krein =
                    Some(metrics::l1_error(&velocity, truth_speed, [0.0, hi])?);
            }
        }
        Stage::EmbedKn => {
            let data = state
                .spectral
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no spectral data".into()))?;
            let emb = embed_kn::embed_open(data)?;
            write_file(out_dir, "krein.csv", &emb.curve.to_csv())?;
            write_file(out_dir, "losses.csv", &emb.losses.to_csv())?;
            let verdict = embed_kn::sommerfeld_pattern(&emb.losses, config.pattern_tol);
            metrics.pattern_matches_sommerfeld = Some(verdict == PatternVerdict::Matches);
            let diag = serde_json::json!({
                "diagnostics": emb.diagnostics,
                "sommerfeld_pattern": format!("{verdict:?}"),
            });
            write_file(out_dir, "open_diagnostics.json", &serde_json::to_string_pretty(&diag)?)?;
            let hi = state
                .profile
                .variation_end()
                .min(*emb.curve.nodes.last().unwrap_or(&0.0));
            if hi > 0.0 {
                metrics.l1_mass_krein =
                    Some(metrics::l1_error(&emb.curve.mass_curve(), truth_mass, [0.0, hi])?);
            }
        }
        Stage::Passivity => {
            let data = state
                .spectral
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("no spectral data".into()))?;
            let (band, _) = derived_contour(config, &state.profile)?;
            let report = passivity::check_passive(
                data,
                band,
                config.passivity_count,
                1e-6 * band[1],
            )?;
            write_file(out_dir, "passivity.json", &report.to_json())?;
            if !report.all_pass() {
                metrics
                    .warnings
                    .push("passivity criteria not all satisfied".into());
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub l1_velocity: Option<f64>,
    pub l1_mass: Option<f64>,
    pub runtime_ms: u128,
    pub error: Option<String>,
}

/// Run the chain once per n; failures are recorded per row and the sweep
/// continues. Writes `sweep.csv` in the output root.
pub fn sweep(config: &ExperimentConfig, n_list: &[usize], out_root: &Path) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut cfg = config.clone();
        cfg.n = n;
        let dir: PathBuf = out_root.join(format!("n_{n:03}"));
        let started = Instant::now();
        match run(&cfg, &dir) {
            Ok(m) => rows.push(SweepRow {
                n,
                l1_velocity: m.l1_velocity_og.or(m.l1_velocity_krein),
                l1_mass: m.l1_mass_krein,
                runtime_ms: started.elapsed().as_millis(),
                error: None,
            }),
            Err(e) => rows.push(SweepRow {
                n,
                l1_velocity: None,
                l1_mass: None,
                runtime_ms: started.elapsed().as_millis(),
                error: Some(e.to_string()),
            }),
        }
    }
    let mut csv = String::from("n,l1_velocity,l1_mass,runtime_ms\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            r.l1_velocity.map_or(String::new(), |v| format!("{v:.6e}")),
            r.l1_mass.map_or(String::new(), |v| format!("{v:.6e}")),
            r.runtime_ms
        ));
    }
    fs::create_dir_all(out_root)?;
    fs::write(out_root.join("sweep.csv"), csv)?;
    Ok(rows)
}

const GNUPLOT_SCRIPT: &str = r#"# gnuplot script for run artifacts
set datafile separator ','
set key outside
set grid

set terminal pngcairo size 900,600
set output 'velocity.png'
set xlabel 'x'
set ylabel 'c'
plot 'og.csv' every ::1 using 2:3 with points pt 7 title 'optimal grid', \
     'krein_velocity.csv' every ::1 using 1:2 with points pt 6 title 'Krein slope'

set output 'mass.png'
set ylabel 'M'
plot 'krein.csv' every ::1 using 2:3 with steps title 'Krein mass'

set output 'losses.png'
set ylabel 'loss'
plot 'losses.csv' every ::1 using 2:3 with impulses title 'r', \
     'losses.csv' every ::1 using 2:4 with impulses title 'r-hat'
"#;
