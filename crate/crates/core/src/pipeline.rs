//! File-level workflow behind the command-line tool: generate a synthetic
//! instance, register it, score it, render it. Every run writes a
//! `manifest.json` holding the fully resolved invocation, so a run can be
//! replayed from the manifest alone.
//!
//! Directory layouts:
//!
//! * synth: `truth.png`, `initial.png`, `ebsd.grf`, `bse.grf`, `sidecar.json`
//! * register: `s1.png`, `s2.png`, `s2_initial.png`, `correspondence.json`,
//!   `energy_trace.csv`, `events.json`
//! * eval: `eval.csv`, `summary.json`
//! * render: `overlay.png`
//!
//! The orientation image is the first modality and carries the initial
//! segmentation; the intensity image is the second.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::correspondence::{CorrespondenceMap, Modality};
use crate::error::{Error, Result};
use crate::eval::{detection_report, overlapping_rate, split_boundaries, summarize, write_eval_csv, DetectionReport, EvalRow, EvalSummary};
use crate::field::ImageData;
use crate::io;
use crate::register::{alternate_minimize, map_segmentation, AffineTransform, SplitEvent};
use crate::render::overlay;
use crate::stats::{ModelConfig, SymmetryGroup};
use crate::synth::{generate_instance, Sidecar, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    #[default]
    Cubic,
    Trivial,
}

impl Symmetry {
    pub fn group(self) -> SymmetryGroup {
        match self {
            Symmetry::Cubic => SymmetryGroup::cubic(),
            Symmetry::Trivial => SymmetryGroup::trivial(),
        }
    }
}

/// Everything a run can be configured with. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub symmetry: Symmetry,
    pub iters: usize,
    /// Boundary widths scored by `eval`.
    pub w: Vec<u32>,
    /// Distance, in pixels, within which a boundary counts as found.
    pub detection_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            synth: SynthConfig::default(),
            model: ModelConfig::default(),
            symmetry: Symmetry::Cubic,
            iters: 3,
            w: vec![1, 2, 3, 4, 5],
            detection_tolerance: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.model.validate()?;
        if self.w.is_empty() || self.w.contains(&0) {
            return Err(Error::Config("w must list positive widths".into()));
        }
        if !(self.detection_tolerance >= 0.0) {
            return Err(Error::Config("detection_tolerance must be >= 0".into()));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// One seed drives both the generator and the model.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.synth.seed = seed;
        self.model.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Synth,
    Register,
    Eval,
    Render,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: Command,
    pub config: PipelineConfig,
    /// Synth directories (register, eval, render).
    pub inputs: Vec<PathBuf>,
    /// Register directories, paired with `inputs` (eval, render).
    pub results: Vec<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub invocation: Invocation,
    pub seed: u64,
    /// Files written, relative to `invocation.out`.
    pub outputs: Vec<String>,
    /// Wall-clock seconds; the one field that differs between replays.
    pub timing_seconds: f64,
}

pub const MANIFEST: &str = "manifest.json";

/// Runs the invocation and writes its manifest.
pub fn run(inv: &Invocation) -> Result<RunManifest> {
    inv.config.validate()?;
    std::fs::create_dir_all(&inv.out).map_err(|e| Error::io(&inv.out, e))?;
    let start = Instant::now();
    let outputs = match inv.command {
        Command::Synth => run_synth(&inv.config, &inv.out)?,
        Command::Register => run_register(&inv.config, single(&inv.inputs, "input")?, &inv.out)?,
        Command::Eval => run_eval(&inv.config, &inv.inputs, &inv.results, &inv.out)?,
        Command::Render => run_render(
            single(&inv.inputs, "input")?,
            single(&inv.results, "result")?,
            &inv.out,
        )?,
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        invocation: inv.clone(),
        seed: inv.config.model.seed,
        outputs: outputs.into_iter().map(String::from).collect(),
        timing_seconds: start.elapsed().as_secs_f64(),
    };
    io::write_json(&manifest, &inv.out.join(MANIFEST))?;
    Ok(manifest)
}

/// Re-runs a recorded invocation, optionally into another directory.
pub fn replay(manifest_path: &Path, out: Option<&Path>) -> Result<RunManifest> {
    let manifest: RunManifest = io::read_json(manifest_path)?;
    let mut inv = manifest.invocation;
    if let Some(out) = out {
        inv.out = out.to_path_buf();
    }
    run(&inv)
}

fn single<'a>(paths: &'a [PathBuf], what: &str) -> Result<&'a Path> {
    match paths {
        [p] => Ok(p),
        _ => Err(Error::Config(format!("exactly one --{what} directory is required, got {}", paths.len()))),
    }
}

pub fn run_synth(config: &PipelineConfig, out: &Path) -> Result<Vec<&'static str>> {
    let group = config.symmetry.group();
    let inst = generate_instance(&config.synth, &group)?;
    io::write_label_png(&inst.truth, &out.join("truth.png"))?;
    io::write_label_png(&inst.initial, &out.join("initial.png"))?;
    io::write_quat_grf(&inst.images.quat, &out.join("ebsd.grf"))?;
    io::write_scalar_grf(&inst.images.scalar, &out.join("bse.grf"))?;
    io::write_json(&inst.sidecar, &out.join("sidecar.json"))?;
    Ok(vec!["truth.png", "initial.png", "ebsd.grf", "bse.grf", "sidecar.json"])
}

/// First-to-second frame transform: `transform.json` in the input directory
/// if present, identity otherwise.
fn input_transform(input: &Path) -> Result<AffineTransform> {
    let path = input.join("transform.json");
    if path.exists() {
        let t: AffineTransform = io::read_json(&path)?;
        t.check()?;
        Ok(t)
    } else {
        Ok(AffineTransform::identity())
    }
}

pub fn run_register(config: &PipelineConfig, input: &Path, out: &Path) -> Result<Vec<&'static str>> {
    let group = config.symmetry.group();
    let i1 = ImageData::Quat(io::read_quat_field(&input.join("ebsd.grf"))?);
    let i2 = ImageData::Scalar(io::read_scalar_field(&input.join("bse.grf"))?);
    let initial = io::read_label_map(&input.join("initial.png"))?;
    let transform = input_transform(input)?;
    let result = alternate_minimize(&i1, &i2, &initial, &transform, &config.model, &group, config.iters)?;
    let s2_initial = map_segmentation(&initial, &transform, (i2.width(), i2.height()))?;
    io::write_label_png(&result.s1, &out.join("s1.png"))?;
    io::write_label_png(&result.s2, &out.join("s2.png"))?;
    io::write_label_png(&s2_initial, &out.join("s2_initial.png"))?;
    io::write_json(&result.corr, &out.join("correspondence.json"))?;
    result.trace.write_csv(&out.join("energy_trace.csv"))?;
    io::write_json(&result.events, &out.join("events.json"))?;
    Ok(vec![
        "s1.png",
        "s2.png",
        "s2_initial.png",
        "correspondence.json",
        "energy_trace.csv",
        "events.json",
    ])
}

/// Per-instance detection results stored in the eval summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDetection {
    pub instance_id: String,
    pub report: DetectionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub overlap: EvalSummary,
    pub detection: Vec<InstanceDetection>,
}

pub const METHOD_COERCIVE: &str = "coercive";
pub const METHOD_BASELINE: &str = "no_registration";

/// Scores each (synth, register) directory pair: the final intensity-frame
/// segmentation and the mapped initial segmentation against the truth.
pub fn run_eval(config: &PipelineConfig, inputs: &[PathBuf], results: &[PathBuf], out: &Path) -> Result<Vec<&'static str>> {
    if inputs.is_empty() || inputs.len() != results.len() {
        return Err(Error::Config(format!(
            "eval needs matching --input and --result lists, got {} and {}",
            inputs.len(),
            results.len()
        )));
    }
    let mut rows = Vec::new();
    let mut detection = Vec::new();
    for (k, (input, result)) in inputs.iter().zip(results).enumerate() {
        let instance_id = input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("instance{k}"));
        let truth = io::read_label_map(&input.join("truth.png"))?;
        let methods = [
            (METHOD_COERCIVE, io::read_label_map(&result.join("s2.png"))?),
            (METHOD_BASELINE, io::read_label_map(&result.join("s2_initial.png"))?),
        ];
        for (method, est) in &methods {
            for &w in &config.w {
                rows.push(EvalRow {
                    instance_id: instance_id.clone(),
                    method: (*method).to_string(),
                    w,
                    overlap_rate: overlapping_rate(&truth, est, w)?,
                });
            }
        }
        let sidecar: Sidecar = io::read_json(&input.join("sidecar.json"))?;
        let corr: CorrespondenceMap = io::read_json(&result.join("correspondence.json"))?;
        let planted: Vec<Vec<usize>> = sidecar.planted.into_iter().map(|p| p.pixels).collect();
        detection.push(InstanceDetection {
            instance_id,
            report: detection_report(
                &methods[0].1,
                &planted,
                &split_boundaries(&corr, Modality::Second),
                config.detection_tolerance,
            ),
        });
    }
    write_eval_csv(&rows, &out.join("eval.csv"))?;
    io::write_json(
        &EvalOutput {
            overlap: summarize(&rows),
            detection,
        },
        &out.join("summary.json"),
    )?;
    Ok(vec!["eval.csv", "summary.json"])
}

pub fn run_render(input: &Path, result: &Path, out: &Path) -> Result<Vec<&'static str>> {
    let background = io::read_scalar_field(&input.join("bse.grf")).ok();
    let initial = io::read_label_map(&result.join("s2_initial.png"))?;
    let final_seg = io::read_label_map(&result.join("s2.png"))?;
    let corr: CorrespondenceMap = io::read_json(&result.join("correspondence.json"))?;
    let pixels = overlay(background.as_ref(), &initial, &final_seg, &corr, Modality::Second)?;
    io::write_rgb_png(final_seg.width(), final_seg.height(), &pixels, &out.join("overlay.png"))?;
    Ok(vec!["overlay.png"])
}

/// Split events of a register directory.
pub fn read_events(result: &Path) -> Result<Vec<SplitEvent>> {
    io::read_json(&result.join("events.json"))
}
