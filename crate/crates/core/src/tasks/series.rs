//! Nonlinear system-identification benchmarks driven by uniform noise.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rng::SeededRng;
use crate::encoding::INPUT_RANGE;
use crate::error::{Error, Result};

/// Largest seed increment tried before giving up on a divergent draw.
pub const MAX_REGENERATIONS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTask {
    SecondOrder,
    Narma10,
}

impl SeriesTask {
    pub fn generate(self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            SeriesTask::SecondOrder => gen_second_order(u),
            SeriesTask::Narma10 => gen_narma10(u),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeriesTask::SecondOrder => "second_order",
            SeriesTask::Narma10 => "narma10",
        }
    }
}

impl fmt::Display for SeriesTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `n` i.i.d. draws from U[0, 0.5].
pub fn gen_uniform_input(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    let (lo, hi) = INPUT_RANGE;
    (0..n).map(|_| lo + (hi - lo) * rng.next_f64()).collect()
}

fn check_bound(step: usize, value: f64) -> Result<f64> {
    if value.abs() > 1.0 || !value.is_finite() {
        Err(Error::Diverged { step, value })
    } else {
        Ok(value)
    }
}

/// `y(k) = 0.4 y(k-1) + 0.4 y(k-1) y(k-2) + 0.6 u(k)^3 + 0.1`, zero initial
/// outputs. Element 0 of the result is `y(1)`.
pub fn gen_second_order(u: &[f64]) -> Result<Vec<f64>> {
    let mut y = Vec::with_capacity(u.len());
    let (mut y1, mut y2) = (0.0, 0.0);
    for (k, &uk) in u.iter().enumerate() {
        let v = check_bound(k, 0.4 * y1 + 0.4 * y1 * y2 + 0.6 * uk * uk * uk + 0.1)?;
        y.push(v);
        y2 = y1;
        y1 = v;
    }
    Ok(y)
}

/// Tenth-order NARMA recurrence,
/// `y(k) = 0.3 y(k-1) + 0.05 y(k-1) sum_{i=1..10} y(k-i) + 1.5 u(k-1) u(k-10) + 0.1`,
/// with `y(k) = 0` for the first ten steps.
pub fn gen_narma10(u: &[f64]) -> Result<Vec<f64>> {
    if u.len() < 11 {
        return Err(Error::BadLength {
            expected: 11,
            got: u.len(),
        });
    }
    let mut y = vec![0.0; u.len()];
    for k in 10..u.len() {
        let prev = y[k - 1];
        // summed from i = 1 upward so results are reproducible bit for bit
        let window: f64 = (1..=10).map(|i| y[k - i]).sum();
        let v = 0.3 * prev + 0.05 * prev * window + 1.5 * u[k - 1] * u[k - 10] + 0.1;
        y[k] = check_bound(k, v)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDataset {
    pub task: SeriesTask,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Seed requested by the caller.
    pub seed: u64,
    /// Seed that produced a bounded sequence (`seed + attempts - 1`).
    pub effective_seed: u64,
    pub attempts: u64,
}

impl SeriesDataset {
    /// Draws an input sequence and its target, moving to the next seed
    /// whenever the recurrence diverges.
    pub fn generate(task: SeriesTask, n: usize, seed: u64) -> Result<Self> {
        let mut last = None;
        for attempt in 0..MAX_REGENERATIONS {
            let s = seed.wrapping_add(attempt);
            let u = gen_uniform_input(n, s);
            match task.generate(&u) {
                Ok(y) => {
                    return Ok(Self {
                        task,
                        u,
                        y,
                        seed,
                        effective_seed: s,
                        attempts: attempt + 1,
                    })
                }
                Err(e @ Error::Diverged { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// CSV with header `k,u,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,u,y\n");
        for (k, (u, y)) in self.u.iter().zip(&self.y).enumerate() {
            out.push_str(&format!("{k},{u},{y}\n"));
        }
        out
    }
}

/// Keeps the first `train_len` steps of `dataset` for training and draws an
/// independent test sequence of the same length from `test_seed`.
pub fn split_series(
    dataset: &SeriesDataset,
    train_len: usize,
    test_len: usize,
    test_seed: u64,
) -> Result<(SeriesDataset, SeriesDataset)> {
    if test_seed == dataset.seed || test_seed == dataset.effective_seed {
        return Err(Error::IndependenceViolation(test_seed));
    }
    if train_len > dataset.len() {
        return Err(Error::BadLength {
            expected: train_len,
            got: dataset.len(),
        });
    }
    let train = SeriesDataset {
        u: dataset.u[..train_len].to_vec(),
        y: dataset.y[..train_len].to_vec(),
        ..dataset.clone()
    };
    let test = SeriesDataset::generate(dataset.task, test_len, test_seed)?;
    if test.effective_seed == dataset.effective_seed {
        return Err(Error::IndependenceViolation(test.effective_seed));
    }
    Ok((train, test))
}
