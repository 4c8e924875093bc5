//! Config-driven pipelines: encode, run the reservoir, train the readout,
//! evaluate, and write artifacts.

pub mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::encoding::{DriveBank, IMAGE_PIXELS};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::node::skyrmion::{self, SkyrmionParams, SkyrmionState};
use crate::node::stno::{self, StnoParams, StnoState};
use crate::node::PulseTrain;
use crate::readout::{
    predict_class, predict_series, solve_least_squares, train_classifier_gd, train_regressor_gd,
    ReadoutModel, Standardizer,
};
use crate::reservoir::{
    cache_key, msm_feature_batch, stno_features, FeatureCache, MsmOptions, OperatingPoint, StnoOptions,
};
use crate::tasks::{
    accuracy, confusion_matrix, load_mnist_idx, nmse, split_series, ImageDataset, MetricsReport,
    SeededRng, SeriesDataset, SeriesTask,
};

pub use config::{
    derive_seed, BankSpec, ExperimentConfig, GenDataConfig, GenDataTask, MnistConfig, NodeKind,
    ReadoutConfig, SeriesConfig, SimulateConfig, SweepConfig, TaskKind, Trainer, SCHEMA_VERSION,
};
pub use output::FileEntry;

/// Fits the readout, optionally in standardized coordinates, and returns a
/// model that applies directly to raw features.
fn fit_classifier(x: &FeatureMatrix, labels: &[u8], r: &ReadoutConfig, seed: u64) -> Result<ReadoutModel> {
    let hyper = r.hyper(seed);
    if r.trainer == Trainer::LeastSquares {
        return Err(Error::Config(vec![
            "readout.trainer: least_squares applies to the series tasks only".into(),
        ]));
    }
    if r.standardize {
        let s = Standardizer::fit(x);
        let m = train_classifier_gd(&s.apply(x), labels, &hyper)?.model;
        Ok(s.fold(&m))
    } else {
        Ok(train_classifier_gd(x, labels, &hyper)?.model)
    }
}

fn fit_regressor(x: &FeatureMatrix, y: &[f64], r: &ReadoutConfig, seed: u64) -> Result<ReadoutModel> {
    let hyper = r.hyper(seed);
    let fit = |z: &FeatureMatrix| -> Result<ReadoutModel> {
        match r.trainer {
            Trainer::GradientDescent => Ok(train_regressor_gd(z, y, &hyper)?.model),
            Trainer::LeastSquares => {
                hyper.validate()?;
                solve_least_squares(z, y, hyper.l2)
            }
        }
    };
    if r.standardize {
        let s = Standardizer::fit(x);
        Ok(s.fold(&fit(&s.apply(x))?))
    } else {
        fit(x)
    }
}

fn cached<F>(cache: Option<&FeatureCache>, key: impl FnOnce() -> String, compute: F) -> Result<(FeatureMatrix, usize)>
where
    F: FnOnce() -> Result<(FeatureMatrix, usize)>,
{
    let Some(cache) = cache else {
        return compute();
    };
    let key = key();
    if let Some(m) = cache.load(&key) {
        // clamp counts are not cached; a hit reports none
        return Ok((m, 0));
    }
    let (m, clamps) = compute()?;
    cache.store(&key, &m)?;
    Ok((m, clamps))
}

fn msm_batch(
    data: &ImageDataset,
    op: OperatingPoint,
    params: &SkyrmionParams,
    opts: &MsmOptions,
    parallelism: usize,
    cache: Option<&FeatureCache>,
) -> Result<(FeatureMatrix, usize)> {
    cached(
        cache,
        || {
            let setup = serde_json::to_string(&(params, op, opts)).expect("serializable");
            cache_key([b"msm".as_slice(), setup.as_bytes(), &data.images])
        },
        || {
            let h = msm_feature_batch(data, op, params, opts, parallelism)?;
            Ok((h.features, h.clamp_events))
        },
    )
}

fn stno_batch(
    u: &[f64],
    bank: &DriveBank,
    opts: &StnoOptions,
    parallelism: usize,
    cache: Option<&FeatureCache>,
) -> Result<(FeatureMatrix, usize)> {
    cached(
        cache,
        || {
            let setup = serde_json::to_string(&(bank, opts)).expect("serializable");
            let raw: Vec<u8> = u.iter().flat_map(|v| v.to_le_bytes()).collect();
            cache_key([b"stno".as_slice(), setup.as_bytes(), &raw])
        },
        || {
            let h = stno_features(u, bank, opts, parallelism)?;
            Ok((h.features, h.clamp_events))
        },
    )
}

/// Everything one MNIST train/evaluate pass produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistOutcome {
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub confusion: [[u64; 10]; 10],
    pub predictions: Vec<u8>,
    pub model: ReadoutModel,
    pub clamp_events: usize,
}

/// Encode, featurize, train and score at one operating point.
#[allow(clippy::too_many_arguments)]
pub fn mnist_pipeline(
    train: &ImageDataset,
    test: &ImageDataset,
    op: OperatingPoint,
    params: &SkyrmionParams,
    opts: &MsmOptions,
    readout: &ReadoutConfig,
    train_seed: u64,
    parallelism: usize,
    cache: Option<&FeatureCache>,
) -> Result<MnistOutcome> {
    let (x, c1) = msm_batch(train, op, params, opts, parallelism, cache)?;
    let (xt, c2) = msm_batch(test, op, params, opts, parallelism, cache)?;
    let model = fit_classifier(&x, &train.labels, readout, derive_seed(train_seed, op))?;
    let train_pred = predict_class(&model, &x)?;
    let predictions = predict_class(&model, &xt)?;
    Ok(MnistOutcome {
        accuracy: accuracy(&predictions, &test.labels)?,
        train_accuracy: accuracy(&train_pred, &train.labels)?,
        confusion: confusion_matrix(&predictions, &test.labels)?,
        predictions,
        model,
        clamp_events: c1 + c2,
    })
}

/// Memoryless regressors the reservoir has to beat: `[u(k), u(k)^3]` for the
/// second-order task, `[u(k-1)]` for NARMA10.
pub fn memoryless_features(task: SeriesTask, u: &[f64]) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = match task {
        SeriesTask::SecondOrder => u.iter().map(|&v| vec![v, v * v * v]).collect(),
        SeriesTask::Narma10 => (0..u.len())
            .map(|k| vec![if k == 0 { 0.0 } else { u[k - 1] }])
            .collect(),
    };
    FeatureMatrix::from_rows(&rows).expect("finite inputs")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutcome {
    pub train: SeriesDataset,
    pub test: SeriesDataset,
    /// First row scored in each split.
    pub washout: usize,
    pub train_pred: Vec<f64>,
    pub test_pred: Vec<f64>,
    pub baseline_pred: Vec<f64>,
    pub model: ReadoutModel,
    pub clamp_events: usize,
}

impl SeriesOutcome {
    fn scored<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[self.washout..]
    }

    pub fn test_nmse(&self) -> Result<f64> {
        nmse(self.scored(&self.test.y), &self.test_pred)
    }

    pub fn train_nmse(&self) -> Result<f64> {
        nmse(self.scored(&self.train.y), &self.train_pred)
    }

    pub fn baseline_nmse(&self) -> Result<f64> {
        nmse(self.scored(&self.test.y), &self.baseline_pred)
    }
}

pub fn series_pipeline(
    task: SeriesTask,
    cfg: &ExperimentConfig,
    cache: Option<&FeatureCache>,
) -> Result<SeriesOutcome> {
    let s = cfg.series;
    let full = SeriesDataset::generate(task, s.train_len, cfg.seeds.data)?;
    let (train, test) = split_series(&full, s.train_len, s.test_len, cfg.seeds.test)?;
    let bank = cfg.bank.resolve()?;
    let (x, c1) = stno_batch(&train.u, &bank, &cfg.stno, cfg.parallelism, cache)?;
    let (xt, c2) = stno_batch(&test.u, &bank, &cfg.stno, cfg.parallelism, cache)?;
    let w = s.washout;
    let (x, xt) = (x.slice_rows(w, x.rows()), xt.slice_rows(w, xt.rows()));
    let model = fit_regressor(&x, &train.y[w..], &cfg.readout(), cfg.seeds.train)?;
    let base = memoryless_features(task, &train.u).slice_rows(w, train.len());
    let base_t = memoryless_features(task, &test.u).slice_rows(w, test.len());
    let base_model = solve_least_squares(&base, &train.y[w..], 0.0)?;
    Ok(SeriesOutcome {
        train_pred: predict_series(&model, &x)?,
        test_pred: predict_series(&model, &xt)?,
        baseline_pred: predict_series(&base_model, &base_t)?,
        train,
        test,
        washout: w,
        model,
        clamp_events: c1 + c2,
    })
}

fn open_cache(cfg: &ExperimentConfig) -> Option<FeatureCache> {
    cfg.cache
        .then(|| FeatureCache::from_env(cfg.output_dir.join("cache")))
}

fn load_split(images: &Path, labels: &Path, n: usize) -> Result<ImageDataset> {
    let data = load_mnist_idx(images, labels)?;
    if data.len() < n {
        return Err(Error::BadLength {
            expected: n,
            got: data.len(),
        });
    }
    Ok(data.head(n))
}

fn load_mnist(m: &MnistConfig, n_train: usize, n_test: usize) -> Result<(ImageDataset, ImageDataset)> {
    Ok((
        load_split(&m.train_images, &m.train_labels, n_train)?,
        load_split(&m.test_images, &m.test_labels, n_test)?,
    ))
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub files: Vec<PathBuf>,
}

/// Runs the configured benchmark and writes `metrics.json`,
/// `predictions.csv`, `model.json` and `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = output::Outputs::create(&cfg.output_dir)?;
    let cache = open_cache(cfg);
    let hash = cfg.hash();
    let (report, predictions, model, details) = match cfg.task {
        TaskKind::Mnist => {
            let m = cfg.mnist.as_ref().expect("validated");
            let (train, test) = load_mnist(m, m.n_train, m.n_test)?;
            let op = cfg.operating_point;
            let out = mnist_pipeline(
                &train,
                &test,
                op,
                &cfg.skyrmion,
                &cfg.msm,
                &cfg.readout(),
                cfg.seeds.train,
                cfg.parallelism,
                cache.as_ref(),
            )?;
            let mut csv = String::from("index,label,pred\n");
            for (i, (l, p)) in test.labels.iter().zip(&out.predictions).enumerate() {
                writeln!(csv, "{i},{l},{p}").unwrap();
            }
            let report = MetricsReport {
                task_id: "mnist".into(),
                accuracy: Some(out.accuracy),
                train_accuracy: Some(out.train_accuracy),
                confusion: Some(out.confusion),
                nmse: None,
                nrmse: None,
                train_nmse: None,
                train_nrmse: None,
                baseline_nmse: None,
                baseline_nrmse: None,
                n_train: train.len(),
                n_test: test.len(),
                config_hash: hash,
                paper_reference: Some(json!({
                    "test_accuracy": 0.876,
                    "n_train": 50000,
                    "n_test": 10000,
                })),
                clamp_events: out.clamp_events,
            };
            let details = json!({ "shuffle_seed": derive_seed(cfg.seeds.train, op) });
            (report, csv, out.model, details)
        }
        TaskKind::SecondOrder | TaskKind::Narma10 => {
            let task = cfg.task.series().expect("series task");
            let out = series_pipeline(task, cfg, cache.as_ref())?;
            let mut csv = String::from("k,y,y_pred\n");
            for (i, p) in out.test_pred.iter().enumerate() {
                let k = i + out.washout;
                writeln!(csv, "{k},{},{p}", out.test.y[k]).unwrap();
            }
            let test_nmse = out.test_nmse()?;
            let train_nmse = out.train_nmse()?;
            let base = out.baseline_nmse()?;
            let reference = match task {
                SeriesTask::SecondOrder => json!({ "train_nmse": 1.17e-3, "test_nmse": 1.31e-3 }),
                SeriesTask::Narma10 => json!({ "train_nrmse": 0.123, "test_nrmse": 0.128 }),
            };
            let report = MetricsReport {
                task_id: task.name().into(),
                accuracy: None,
                train_accuracy: None,
                confusion: None,
                nmse: Some(test_nmse),
                nrmse: Some(test_nmse.sqrt()),
                train_nmse: Some(train_nmse),
                train_nrmse: Some(train_nmse.sqrt()),
                baseline_nmse: Some(base),
                baseline_nrmse: Some(base.sqrt()),
                n_train: out.train_pred.len(),
                n_test: out.test_pred.len(),
                config_hash: hash,
                paper_reference: Some(reference),
                clamp_events: out.clamp_events,
            };
            let details = json!({
                "train_effective_seed": out.train.effective_seed,
                "train_attempts": out.train.attempts,
                "test_effective_seed": out.test.effective_seed,
                "test_attempts": out.test.attempts,
            });
            (report, csv, out.model, details)
        }
        other => {
            return Err(Error::Config(vec![format!(
                "task: run handles mnist, second_order and narma10, not {}",
                other.name()
            )]))
        }
    };
    out.write_json("metrics.json", &report)?;
    out.write("predictions.csv", predictions.as_bytes())?;
    out.write_json("model.json", &model)?;
    out.write_json("config.json", cfg)?;
    let files = out.finish(cfg, details)?;
    Ok(RunOutput { report, files })
}

/// One operating point of a sweep; `error` is set when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub amp: f64,
    pub width: f64,
    pub test_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub error: Option<String>,
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut csv = String::from("amp_uA,width_ns,test_accuracy,n_train,n_test,error\n");
    for c in cells {
        let err = c.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(csv, "{},{},{},{},{},{err}", c.amp, c.width, c.test_accuracy, c.n_train, c.n_test).unwrap();
    }
    csv
}

/// Trains and scores one MNIST pipeline per (amp, width) cell, amps outer.
/// A failing cell records NaN and its error; the rest still run.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let m = cfg.mnist.as_ref().expect("validated");
    let grid = cfg.sweep.as_ref().expect("validated");
    let (train, test) = load_mnist(m, grid.n_train, grid.n_test)?;
    let cache = open_cache(cfg);
    let readout = cfg.readout();
    let points: Vec<OperatingPoint> = grid
        .amps
        .iter()
        .flat_map(|&amp| grid.widths.iter().map(move |&width| OperatingPoint { amp, width }))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&op| {
                let r = mnist_pipeline(
                    &train,
                    &test,
                    op,
                    &cfg.skyrmion,
                    &cfg.msm,
                    &readout,
                    cfg.seeds.train,
                    1,
                    cache.as_ref(),
                );
                let (test_accuracy, error) = match r {
                    Ok(o) => (o.accuracy, None),
                    Err(e) => (f64::NAN, Some(e.to_string())),
                };
                SweepCell {
                    amp: op.amp,
                    width: op.width,
                    test_accuracy,
                    n_train: train.len(),
                    n_test: test.len(),
                    error,
                }
            })
            .collect()
    }))
}

/// Runs the sweep and writes `heatmap.csv` plus the manifest.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepCell>, Vec<PathBuf>)> {
    cfg.validate()?;
    let mut out = output::Outputs::create(&cfg.output_dir)?;
    let cells = sweep_cells(cfg)?;
    out.write("heatmap.csv", sweep_csv(&cells).as_bytes())?;
    out.write_json("config.json", cfg)?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let files = out.finish(cfg, json!({ "cells": cells.len(), "failed_cells": failed }))?;
    Ok((cells, files))
}

/// Dense trace of one node under a scripted pulse train, as CSV text, plus
/// the clamp-event count.
pub fn node_trace(cfg: &ExperimentConfig) -> Result<(String, usize)> {
    cfg.validate()?;
    let s = cfg.simulate.as_ref().expect("validated");
    let train = PulseTrain::new(s.pulses.clone())?;
    match s.node {
        NodeKind::Skyrmion => {
            let params = &cfg.skyrmion;
            let mut csv = String::from("t_ns,x_nm\n");
            if train.is_empty() {
                return Ok((csv, 0));
            }
            let mut state = SkyrmionState::reset(params);
            if let Some(x) = s.initial {
                state.x = x;
            }
            let run = skyrmion::simulate(state, &train, s.dt.unwrap_or(skyrmion::DEFAULT_DT), params, true);
            for st in run.trace.iter().step_by(s.stride) {
                writeln!(csv, "{},{}", st.t, st.x).unwrap();
            }
            Ok((csv, run.clamp_events))
        }
        NodeKind::Stno => {
            let params = StnoParams::for_diameter(s.diameter)?;
            let mut csv = String::from("t_ns,p,envelope,phi_rad\n");
            if train.is_empty() {
                return Ok((csv, 0));
            }
            let state = StnoState::new(s.initial.unwrap_or(params.p_floor));
            let run = stno::simulate(state, &train, s.dt.unwrap_or(stno::DEFAULT_DT), &params, true);
            for st in run.trace.iter().step_by(s.stride) {
                writeln!(csv, "{},{},{},{}", st.t, st.p, st.envelope(), st.phi).unwrap();
            }
            Ok((csv, run.clamp_events))
        }
    }
}

/// Writes `trace.csv` and the manifest.
pub fn simulate_node(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut out = output::Outputs::create(&cfg.output_dir)?;
    let (csv, clamps) = node_trace(cfg)?;
    out.write("trace.csv", csv.as_bytes())?;
    out.write_json("config.json", cfg)?;
    out.finish(cfg, json!({ "clamp_events": clamps }))
}

/// Seeded stand-in for MNIST: label `l` lights a bar of rows `2l+4..2l+8`
/// over uniform noise.
pub fn synthetic_images(n: usize, seed: u64) -> ImageDataset {
    let mut rng = SeededRng::new(seed);
    let mut images = Vec::with_capacity(n * IMAGE_PIXELS);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.below(10) as u8;
        for p in 0..IMAGE_PIXELS {
            let row = p / 28;
            let noise = rng.below(160) as u8;
            let bar = (2 * label as usize + 4..2 * label as usize + 8).contains(&row);
            images.push(if bar { noise.saturating_add(96) } else { noise });
        }
        labels.push(label);
    }
    ImageDataset { images, labels }
}

/// Materializes a seeded dataset under the output directory.
pub fn gen_data(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let g = cfg
        .gen_data
        .ok_or_else(|| Error::Config(vec!["gen_data: block required".into()]))?;
    if g.n == 0 {
        return Err(Error::Config(vec!["gen_data.n: must be at least 1".into()]));
    }
    let mut out = output::Outputs::create(&cfg.output_dir)?;
    let details = match g.task {
        GenDataTask::SecondOrder | GenDataTask::Narma10 => {
            let task = if g.task == GenDataTask::SecondOrder {
                SeriesTask::SecondOrder
            } else {
                SeriesTask::Narma10
            };
            let ds = SeriesDataset::generate(task, g.n, cfg.seeds.data)?;
            out.write(&format!("{}.csv", task.name()), ds.to_csv().as_bytes())?;
            json!({ "effective_seed": ds.effective_seed, "attempts": ds.attempts })
        }
        GenDataTask::SyntheticMnist => {
            let ds = synthetic_images(g.n, cfg.seeds.data);
            out.write("synthetic-images-idx3-ubyte", &crate::tasks::mnist::encode_idx_images(&ds.images))?;
            out.write("synthetic-labels-idx1-ubyte", &crate::tasks::mnist::encode_idx_labels(&ds.labels))?;
            serde_json::Value::Null
        }
    };
    out.finish(cfg, details)
}
