//! Versioned JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoding::{build_default_bank, build_tuned_bank, DriveBank};
use crate::error::{Error, Result};
use crate::node::skyrmion::SkyrmionParams;
use crate::node::stno::StnoParams;
use crate::node::{Pulse, PulseTrain};
use crate::readout::{ClassifierLoss, TrainHyper};
use crate::reservoir::{MsmOptions, OperatingPoint, StnoOptions};
use crate::tasks::SeriesTask;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Mnist,
    SecondOrder,
    Narma10,
    Simulate,
    Sweep,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Mnist => "mnist",
            TaskKind::SecondOrder => "second_order",
            TaskKind::Narma10 => "narma10",
            TaskKind::Simulate => "simulate",
            TaskKind::Sweep => "sweep",
        }
    }

    pub fn series(self) -> Option<SeriesTask> {
        match self {
            TaskKind::SecondOrder => Some(SeriesTask::SecondOrder),
            TaskKind::Narma10 => Some(SeriesTask::Narma10),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Training sequence draw.
    pub data: u64,
    /// Readout shuffling.
    pub train: u64,
    /// Independent test sequence draw.
    pub test: u64,
}

impl Seeds {
    /// Seeds of the built-in configs.
    pub const BUILTIN: Seeds = Seeds {
        data: 1,
        train: 2,
        test: 1001,
    };
}

/// A named built-in bank or an explicit node table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BankSpec {
    Named(String),
    Custom(DriveBank),
}

impl Default for BankSpec {
    fn default() -> Self {
        BankSpec::Named("tuned".into())
    }
}

impl BankSpec {
    pub fn resolve(&self) -> Result<DriveBank> {
        match self {
            BankSpec::Named(n) if n == "tuned" => Ok(build_tuned_bank()),
            BankSpec::Named(n) if n == "grid" => Ok(build_default_bank()),
            BankSpec::Named(n) => Err(Error::Config(vec![format!(
                "bank: unknown name {n:?} (expected \"tuned\", \"grid\" or a node table)"
            )])),
            BankSpec::Custom(b) => Ok(b.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trainer {
    #[default]
    GradientDescent,
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub trainer: Trainer,
    /// Z-score features on the training split before fitting; the saved
    /// model is folded back to raw features.
    pub standardize: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub l2: f64,
    #[serde(default)]
    pub loss: ClassifierLoss,
}

impl ReadoutConfig {
    pub fn classifier_default() -> Self {
        Self::from_hyper(Trainer::GradientDescent, false, TrainHyper::classifier_default())
    }

    pub fn regressor_default() -> Self {
        Self::from_hyper(Trainer::LeastSquares, true, TrainHyper::regressor_default())
    }

    fn from_hyper(trainer: Trainer, standardize: bool, h: TrainHyper) -> Self {
        Self {
            trainer,
            standardize,
            learning_rate: h.learning_rate,
            epochs: h.epochs,
            batch_size: h.batch_size,
            l2: h.l2,
            loss: h.loss,
        }
    }

    pub fn hyper(&self, seed: u64) -> TrainHyper {
        TrainHyper {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2: self.l2,
            seed,
            loss: self.loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

impl MnistConfig {
    /// Standard MNIST file names inside `dir`.
    pub fn from_dir(dir: &Path) -> Self {
        Self {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            n_train: default_n_train(),
            n_test: default_n_test(),
        }
    }
}

fn default_n_train() -> usize {
    10_000
}

fn default_n_test() -> usize {
    2_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub train_len: usize,
    pub test_len: usize,
    /// Leading steps of each split dropped before training and scoring.
    pub washout: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            train_len: 800,
            test_len: 800,
            washout: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub amps: Vec<f64>,
    pub widths: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Skyrmion,
    Stno,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub node: NodeKind,
    /// Oscillator diameter (nm) when `node` is `stno`.
    #[serde(default = "default_diameter")]
    pub diameter: u32,
    pub pulses: Vec<Pulse>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Starting position (nm) or power; node default when absent.
    #[serde(default)]
    pub initial: Option<f64>,
    /// Keep every `stride`-th substep in the trace.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_diameter() -> u32 {
    240
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenDataTask {
    SecondOrder,
    Narma10,
    /// Random IDX image/label files in MNIST layout.
    SyntheticMnist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDataConfig {
    pub task: GenDataTask,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub task: TaskKind,
    pub seeds: Seeds,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Reuse reservoir features across runs.
    #[serde(default)]
    pub cache: bool,
    #[serde(default)]
    pub skyrmion: SkyrmionParams,
    #[serde(default)]
    pub operating_point: OperatingPoint,
    #[serde(default)]
    pub msm: MsmOptions,
    #[serde(default)]
    pub bank: BankSpec,
    #[serde(default)]
    pub stno: StnoOptions,
    #[serde(default)]
    pub readout: Option<ReadoutConfig>,
    #[serde(default)]
    pub mnist: Option<MnistConfig>,
    #[serde(default)]
    pub series: SeriesConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub gen_data: Option<GenDataConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentConfig {
    /// Minimal valid config for `task` with every optional block defaulted.
    pub fn new(task: TaskKind, seeds: Seeds) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            task,
            seeds,
            output_dir: default_output_dir(),
            parallelism: 1,
            cache: false,
            skyrmion: SkyrmionParams::default(),
            operating_point: OperatingPoint::default(),
            msm: MsmOptions::default(),
            bank: BankSpec::default(),
            stno: StnoOptions::default(),
            readout: None,
            mnist: None,
            series: SeriesConfig::default(),
            sweep: None,
            simulate: None,
            gen_data: None,
        }
    }

    /// Parses `text`; relative paths are resolved against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("schema: {e}")]))?;
        if let Some(base) = base {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        Self::from_json(&text, path.parent())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(m) = &mut self.mnist {
            fix(&mut m.train_images);
            fix(&mut m.train_labels);
            fix(&mut m.test_images);
            fix(&mut m.test_labels);
        }
    }

    /// Readout settings, falling back to the task's default.
    pub fn readout(&self) -> ReadoutConfig {
        self.readout.clone().unwrap_or_else(|| match self.task {
            TaskKind::Mnist | TaskKind::Sweep => ReadoutConfig::classifier_default(),
            _ => ReadoutConfig::regressor_default(),
        })
    }

    /// Collects every problem instead of stopping at the first one.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            p.push(format!(
                "schema_version: {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.parallelism == 0 {
            p.push("parallelism: must be at least 1".into());
        }
        match self.task {
            TaskKind::Mnist | TaskKind::Sweep => {
                note(&mut p, "skyrmion", self.skyrmion.validate());
                note(&mut p, "operating_point", self.operating_point.validate());
                if !(self.msm.dt > 0.0 && self.msm.dt.is_finite()) {
                    p.push("msm.dt: must be positive".into());
                }
                self.validate_readout(&mut p);
                match &self.mnist {
                    None => p.push("mnist: block required for this task".into()),
                    Some(m) => {
                        for (name, path) in [
                            ("train_images", &m.train_images),
                            ("train_labels", &m.train_labels),
                            ("test_images", &m.test_images),
                            ("test_labels", &m.test_labels),
                        ] {
                            if !path.is_file() {
                                p.push(format!("mnist.{name}: {} does not exist", path.display()));
                            }
                        }
                        if m.n_train == 0 || m.n_test == 0 {
                            p.push("mnist: n_train and n_test must be at least 1".into());
                        }
                    }
                }
                if self.task == TaskKind::Sweep {
                    match &self.sweep {
                        None => p.push("sweep: block required for this task".into()),
                        Some(s) => {
                            if s.amps.is_empty() || s.widths.is_empty() {
                                p.push("sweep: amps and widths must be non-empty".into());
                            }
                            if s.amps.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                                p.push("sweep.amps: must be finite and >= 0".into());
                            }
                            if s.widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                                p.push("sweep.widths: must be finite and > 0".into());
                            }
                            if s.n_train == 0 || s.n_test == 0 {
                                p.push("sweep: n_train and n_test must be at least 1".into());
                            }
                        }
                    }
                }
            }
            TaskKind::SecondOrder | TaskKind::Narma10 => {
                match self.bank.resolve() {
                    Ok(b) => note(&mut p, "bank", b.validate()),
                    Err(e) => p.push(e.to_string()),
                }
                if !(self.stno.dt > 0.0 && self.stno.dt.is_finite()) {
                    p.push("stno.dt: must be positive".into());
                }
                self.validate_readout(&mut p);
                let s = &self.series;
                let min_len = if self.task == TaskKind::Narma10 { 11 } else { 1 };
                if s.train_len < min_len || s.test_len < min_len {
                    p.push(format!("series: train_len and test_len must be at least {min_len}"));
                }
                if s.washout + 25 > s.train_len.min(s.test_len) {
                    p.push("series.washout: must leave at least 25 steps in each split".into());
                }
                if self.seeds.test == self.seeds.data {
                    p.push("seeds: test must differ from data so the test sequence is independent".into());
                }
            }
            TaskKind::Simulate => match &self.simulate {
                None => p.push("simulate: block required for this task".into()),
                Some(s) => {
                    if let Err(e) = PulseTrain::new(s.pulses.clone()) {
                        p.push(format!("simulate.pulses: {e}"));
                    }
                    if let Some(dt) = s.dt {
                        if !(dt > 0.0 && dt.is_finite()) {
                            p.push("simulate.dt: must be positive".into());
                        }
                    }
                    if s.stride == 0 {
                        p.push("simulate.stride: must be at least 1".into());
                    }
                    match s.node {
                        NodeKind::Skyrmion => note(&mut p, "skyrmion", self.skyrmion.validate()),
                        NodeKind::Stno => note(&mut p, "simulate.diameter", StnoParams::for_diameter(s.diameter).map(|_| ())),
                    }
                }
            },
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    fn validate_readout(&self, p: &mut Vec<String>) {
        let r = self.readout();
        if let Err(e) = r.hyper(self.seeds.train).validate() {
            p.push(format!("readout: {e}"));
        }
    }

    /// Hash of everything that can change results; output location and
    /// thread count are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.parallelism = 0;
        c.cache = false;
        let json = serde_json::to_string(&c).expect("config serializes");
        crate::reservoir::cache_key([json.as_bytes()])
    }
}

fn note(p: &mut Vec<String>, what: &str, r: Result<()>) {
    if let Err(e) = r {
        p.push(format!("{what}: {e}"));
    }
}

/// Deterministic per-cell seed from the base seed and operating point.
pub fn derive_seed(base: u64, op: OperatingPoint) -> u64 {
    let key = crate::reservoir::cache_key([
        &base.to_le_bytes()[..],
        &op.amp.to_bits().to_le_bytes()[..],
        &op.width.to_bits().to_le_bytes()[..],
    ]);
    u64::from_str_radix(&key[..16], 16).expect("hex digest")
}
