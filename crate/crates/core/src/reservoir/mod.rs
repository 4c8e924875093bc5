//! Drives node models with encoded inputs and collects feature matrices.

pub(crate) mod cache;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    binarize_image, image_to_streams, series_to_pulse_train, stream_to_pulses, BitImage, DriveBank,
    ScanOrder, DEFAULT_THRESHOLD, N_STREAMS,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::node::skyrmion::{self, word_bits, SkyrmionParams, SkyrmionState};
use crate::node::stno::{self, steady_power, StnoState};
use crate::tasks::ImageDataset;

pub use cache::{cache_key, FeatureCache, CACHE_DIR_ENV};

/// MSM stimulus: pulse amplitude (µA) and width (ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    pub amp: f64,
    pub width: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self {
            amp: 20.0,
            width: 10.0,
        }
    }
}

impl OperatingPoint {
    /// Zero amplitude is accepted as the no-information control.
    pub fn validate(&self) -> Result<()> {
        if !(self.amp >= 0.0 && self.amp.is_finite()) {
            return Err(Error::InvalidParams(format!("amp {} must be >= 0", self.amp)));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParams(format!("width {} must be > 0", self.width)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsmOptions {
    pub dt: f64,
    pub scan_order: ScanOrder,
    pub threshold: u8,
    /// Refresh the node before every stream. Without it the position
    /// carries over from the previous stream of the same image.
    pub reset: bool,
}

impl Default for MsmOptions {
    fn default() -> Self {
        Self {
            dt: skyrmion::DEFAULT_DT,
            scan_order: ScanOrder::RowMajor,
            threshold: DEFAULT_THRESHOLD,
            reset: true,
        }
    }
}

/// Features plus the number of clamp events seen while computing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Harvest<T> {
    pub features: T,
    pub clamp_events: usize,
}

/// Normalized final position for each 4-bit word at one operating point,
/// with the clamp events of that word's run.
#[derive(Debug, Clone, PartialEq)]
pub struct WordTable {
    pub features: [f64; 16],
    pub clamps: [usize; 16],
}

impl WordTable {
    pub fn new(op: OperatingPoint, params: &SkyrmionParams, dt: f64) -> Self {
        let mut features = [0.0; 16];
        let mut clamps = [0; 16];
        for word in 0..16 {
            let train = stream_to_pulses(word_bits(word), op.amp, op.width);
            let run = skyrmion::simulate(SkyrmionState::reset(params), &train, dt, params, false);
            features[word] = normalize(run.state.x, params);
            clamps[word] = run.clamp_events;
        }
        Self { features, clamps }
    }
}

fn normalize(x: f64, params: &SkyrmionParams) -> f64 {
    (x - params.x_init) / params.track_length
}

fn check_msm(op: OperatingPoint, params: &SkyrmionParams, opts: &MsmOptions) -> Result<()> {
    op.validate()?;
    params.validate()?;
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt {} must be > 0", opts.dt)));
    }
    Ok(())
}

fn msm_row(img: &BitImage, table: Option<&WordTable>, op: OperatingPoint, params: &SkyrmionParams, opts: &MsmOptions) -> Harvest<Vec<f64>> {
    let streams = image_to_streams(img, opts.scan_order);
    let mut row = Vec::with_capacity(N_STREAMS);
    let mut clamp_events = 0;
    match table {
        Some(table) => {
            for s in 0..N_STREAMS {
                let w = streams.word(s);
                row.push(table.features[w]);
                clamp_events += table.clamps[w];
            }
        }
        None => {
            let mut state = SkyrmionState::reset(params);
            for stream in streams.streams() {
                let train = stream_to_pulses(*stream, op.amp, op.width);
                let run = skyrmion::simulate(state, &train, opts.dt, params, false);
                state = run.state;
                row.push(normalize(state.x, params));
                clamp_events += run.clamp_events;
            }
        }
    }
    Harvest {
        features: row,
        clamp_events,
    }
}

/// One 196-feature vector: each stream's final position, normalized as
/// `(x - x_init) / track_length`.
///
/// With reset on, a stream's feature depends only on its 4-bit word, so the
/// sixteen possible runs are simulated once and looked up.
pub fn msm_features(img: &BitImage, op: OperatingPoint, params: &SkyrmionParams, opts: &MsmOptions) -> Result<Harvest<Vec<f64>>> {
    check_msm(op, params, opts)?;
    let table = opts.reset.then(|| WordTable::new(op, params, opts.dt));
    Ok(msm_row(img, table.as_ref(), op, params, opts))
}

pub fn stream_meta() -> Vec<String> {
    (0..N_STREAMS).map(|s| format!("stream_{s}")).collect()
}

fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

/// Binarizes and featurizes every image; row `i` belongs to image `i`
/// whatever the thread count.
pub fn msm_feature_batch(
    data: &ImageDataset,
    op: OperatingPoint,
    params: &SkyrmionParams,
    opts: &MsmOptions,
    parallelism: usize,
) -> Result<Harvest<FeatureMatrix>> {
    check_msm(op, params, opts)?;
    let table = opts.reset.then(|| WordTable::new(op, params, opts.dt));
    let rows: Vec<Harvest<Vec<f64>>> = thread_pool(parallelism)?.install(|| {
        (0..data.len())
            .into_par_iter()
            .map(|i| {
                let img = binarize_image(data.image(i), opts.threshold)?;
                Ok(msm_row(&img, table.as_ref(), op, params, opts))
            })
            .collect::<Result<_>>()
    })?;
    let clamp_events = rows.iter().map(|r| r.clamp_events).sum();
    let values = rows.into_iter().flat_map(|r| r.features).collect();
    Ok(Harvest {
        features: FeatureMatrix::new(data.len(), N_STREAMS, values, stream_meta())?,
        clamp_events,
    })
}

/// Where each STNO starts before the first input pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPower {
    /// Free-running power at the node's bias current.
    #[default]
    BiasSteadyState,
    /// The minimum seed power (oscillation starts from rest).
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StnoOptions {
    pub dt: f64,
    pub initial_power: InitialPower,
}

impl Default for StnoOptions {
    fn default() -> Self {
        Self {
            dt: stno::DEFAULT_DT,
            initial_power: InitialPower::BiasSteadyState,
        }
    }
}

/// Envelope `sqrt(p)` of every node at the end of every pulse. Each node is
/// integrated once across the whole sequence, so its state carries history.
pub fn stno_features(u: &[f64], bank: &DriveBank, opts: &StnoOptions, parallelism: usize) -> Result<Harvest<FeatureMatrix>> {
    bank.validate()?;
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt {} must be > 0", opts.dt)));
    }
    let columns: Vec<Harvest<Vec<f64>>> = thread_pool(parallelism)?.install(|| {
        bank.configs
            .par_iter()
            .map(|cfg| {
                let params = cfg.node_params()?;
                let train = series_to_pulse_train(u, cfg)?;
                let p0 = match opts.initial_power {
                    InitialPower::BiasSteadyState => steady_power(cfg.i_offset, &params),
                    InitialPower::Floor => params.p_floor,
                };
                let run = stno::simulate(StnoState::new(p0), &train, opts.dt, &params, false);
                Ok(Harvest {
                    features: run.pulse_ends.iter().map(StnoState::envelope).collect(),
                    clamp_events: run.clamp_events,
                })
            })
            .collect::<Result<_>>()
    })?;
    let n = u.len();
    let cols = columns.len();
    let mut values = vec![0.0; n * cols];
    for (j, col) in columns.iter().enumerate() {
        for (k, v) in col.features.iter().enumerate() {
            values[k * cols + j] = *v;
        }
    }
    let meta = bank
        .configs
        .iter()
        .map(|c| format!("node_{}_d{}", c.node_id, c.diameter))
        .collect();
    Ok(Harvest {
        features: FeatureMatrix::new(n, cols, values, meta)?,
        clamp_events: columns.iter().map(|c| c.clamp_events).sum(),
    })
}
