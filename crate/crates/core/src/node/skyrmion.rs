//! Overdamped one-dimensional surrogate for a skyrmion on a dumbbell track.
//!
//! The skyrmion is a point particle at position `x` (nm) driven by a current
//! whose local density scales inversely with the strip width `w(x)`, and
//! pushed by a potential made of two exponential edge walls and a Gaussian
//! term centred on the constriction:
//!
//! ```text
//! dx/dt = mu0 * I * w_end / w(x) - U'(x)
//! w(x)  = w_end - (w_end - w_center) * exp(-(x - L/2)^2 / (2 w_sigma^2))
//! U'(x) = -(u_edge/lambda) exp(-(x - x_min)/lambda)
//!         + (u_edge/lambda) exp((x - x_max)/lambda)
//!         + u_c (x - L/2)/sigma_c^2 exp(-(x - L/2)^2 / (2 sigma_c^2))
//! ```
//!
//! Currents are in µA, lengths in nm, times in ns.

use serde::{Deserialize, Serialize};

use super::integrator::rk4_integrate_with;
use super::pulse::{Pulse, PulseTrain};
use crate::encoding::stream_to_pulses;
use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkyrmionParams {
    pub track_length: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub x_init: f64,
    pub w_end: f64,
    pub w_center: f64,
    pub w_sigma: f64,
    pub mu0: f64,
    pub u_edge: f64,
    pub lambda_edge: f64,
    pub u_c: f64,
    pub sigma_c: f64,
}

impl Default for SkyrmionParams {
    /// Calibrated defaults, frozen from `examples/calibrate_msm.rs`.
    fn default() -> Self {
        Self {
            track_length: 200.0,
            x_min: 10.0,
            x_max: 190.0,
            x_init: 30.0,
            w_end: 60.0,
            w_center: 30.0,
            w_sigma: 42.8,
            mu0: 0.228,
            u_edge: 43.1,
            lambda_edge: 11.06,
            u_c: 321.7,
            sigma_c: 40.2,
        }
    }
}

impl SkyrmionParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let finite = [
            self.track_length,
            self.x_min,
            self.x_max,
            self.x_init,
            self.w_end,
            self.w_center,
            self.w_sigma,
            self.mu0,
            self.u_edge,
            self.lambda_edge,
            self.u_c,
            self.sigma_c,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            problems.push("all skyrmion parameters must be finite".to_string());
        }
        if self.track_length <= 0.0 {
            problems.push("track_length must be positive".into());
        }
        if !(0.0 <= self.x_min && self.x_min < self.x_max && self.x_max <= self.track_length) {
            problems.push("need 0 <= x_min < x_max <= track_length".into());
        }
        if !(self.x_min <= self.x_init && self.x_init <= self.x_max) {
            problems.push("need x_min <= x_init <= x_max".into());
        }
        if !(0.0 < self.w_center && self.w_center < self.w_end) {
            problems.push("need 0 < w_center < w_end".into());
        }
        if self.w_sigma <= 0.0 || self.sigma_c <= 0.0 {
            problems.push("w_sigma and sigma_c must be positive".into());
        }
        if self.mu0 <= 0.0 {
            problems.push("mu0 must be positive".into());
        }
        if self.lambda_edge <= 0.0 {
            problems.push("lambda_edge must be positive".into());
        }
        if self.u_edge < 0.0 {
            problems.push("u_edge must be non-negative".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    fn center(&self) -> f64 {
        0.5 * self.track_length
    }

    /// Strip width at `x`.
    pub fn width(&self, x: f64) -> f64 {
        let d = x - self.center();
        self.w_end
            - (self.w_end - self.w_center) * (-d * d / (2.0 * self.w_sigma * self.w_sigma)).exp()
    }

    /// Derivative of the confining potential, `U'(x)`.
    pub fn potential_gradient(&self, x: f64) -> f64 {
        let a = self.u_edge / self.lambda_edge;
        let d = x - self.center();
        let s2 = self.sigma_c * self.sigma_c;
        -a * (-(x - self.x_min) / self.lambda_edge).exp()
            + a * ((x - self.x_max) / self.lambda_edge).exp()
            + self.u_c * d / s2 * (-d * d / (2.0 * s2)).exp()
    }
}

/// Skyrmion velocity (nm/ns) at position `x` under current `current` (µA).
pub fn velocity(x: f64, current: f64, params: &SkyrmionParams) -> f64 {
    params.mu0 * current * (params.w_end / params.width(x)) - params.potential_gradient(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkyrmionState {
    /// Position along the track (nm).
    pub x: f64,
    /// Elapsed time (ns).
    pub t: f64,
}

impl SkyrmionState {
    /// Freshly nucleated skyrmion at `x_init`.
    pub fn reset(params: &SkyrmionParams) -> Self {
        Self {
            x: params.x_init,
            t: 0.0,
        }
    }
}

/// Result of driving the skyrmion with a pulse train.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyrmionRun {
    pub state: SkyrmionState,
    /// Number of substeps at which the hard clamp to `[0, track_length]` fired.
    pub clamp_events: usize,
    /// Dense trace (initial state plus every substep) when requested.
    pub trace: Vec<SkyrmionState>,
}

impl SkyrmionRun {
    pub fn clamp_triggered(&self) -> bool {
        self.clamp_events > 0
    }
}

/// Integrates the skyrmion position across every pulse of `train` with RK4.
pub fn simulate(
    state: SkyrmionState,
    train: &PulseTrain,
    dt: f64,
    params: &SkyrmionParams,
    record_trace: bool,
) -> SkyrmionRun {
    let mut trace = Vec::new();
    if record_trace {
        trace.push(state);
    }
    let mut clamp_events = 0;
    let mut x = state.x;
    let mut t0 = state.t;
    let len = params.track_length;
    for pulse in train {
        let i = pulse.amplitude;
        let y = rk4_integrate_with(
            |y: &[f64; 1]| [velocity(y[0], i, params)],
            [x],
            pulse.duration,
            dt,
            |t, y| {
                if !(0.0..=len).contains(&y[0]) {
                    clamp_events += 1;
                    y[0] = if y[0].is_nan() { params.x_init } else { y[0].clamp(0.0, len) };
                }
                if record_trace {
                    trace.push(SkyrmionState { x: y[0], t: t0 + t });
                }
            },
        );
        x = y[0];
        t0 += pulse.duration;
    }
    SkyrmionRun {
        state: SkyrmionState { x, t: t0 },
        clamp_events,
        trace,
    }
}

/// Final positions for all sixteen 4-bit words at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Indexed by word value; the first pulse is the most significant bit.
    pub positions: [f64; 16],
    /// Number of clusters when positions closer than 0.5 nm are merged.
    pub distinct: usize,
    /// Smallest gap between any two sorted positions (nm).
    pub min_gap: f64,
    pub clamp_events: usize,
}

/// Bits of a 4-bit word, first pulse first.
pub fn word_bits(word: usize) -> [u8; 4] {
    [
        ((word >> 3) & 1) as u8,
        ((word >> 2) & 1) as u8,
        ((word >> 1) & 1) as u8,
        (word & 1) as u8,
    ]
}

/// Simulates each of the 16 words from a fresh reset and returns the final
/// positions together with the clamp-event total.
pub fn word_positions(
    amp: f64,
    width: f64,
    dt: f64,
    params: &SkyrmionParams,
) -> ([f64; 16], usize) {
    let mut positions = [0.0; 16];
    let mut clamps = 0;
    for (word, pos) in positions.iter_mut().enumerate() {
        let train = stream_to_pulses(word_bits(word), amp, width);
        let run = simulate(SkyrmionState::reset(params), &train, dt, params, false);
        *pos = run.state.x;
        clamps += run.clamp_events;
    }
    (positions, clamps)
}

/// Measures how well the 16 input words are separated in final position.
pub fn calibrate_separability(
    params: &SkyrmionParams,
    amp: f64,
    width: f64,
    dt: f64,
) -> SeparabilityReport {
    let (positions, clamp_events) = word_positions(amp, width, dt, params);
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let distinct = 1 + gaps.iter().filter(|&&g| g > 0.5).count();
    SeparabilityReport {
        positions,
        distinct,
        min_gap,
        clamp_events,
    }
}

/// Positions reached under a constant `+current` and `-current` held for
/// `duration` ns from reset, as `(low, high, clamp_events)`.
pub fn confinement_extremes(params: &SkyrmionParams, current: f64, duration: f64, dt: f64) -> (f64, f64, usize) {
    let run = |i: f64| {
        let train = PulseTrain::new(vec![Pulse::new(i, duration)]).expect("positive duration");
        simulate(SkyrmionState::reset(params), &train, dt, params, false)
    };
    let (lo, hi) = (run(-current), run(current));
    (lo.state.x, hi.state.x, lo.clamp_events + hi.clamp_events)
}

/// Distance between the extreme positions visited under an alternating
/// `+amp, -amp, ...` train of `n_pulses` pulses, with the clamp count.
pub fn ac_span(params: &SkyrmionParams, amp: f64, width: f64, n_pulses: usize, dt: f64) -> (f64, usize) {
    let train = PulseTrain::square_wave(amp, width, n_pulses).expect("positive width");
    let run = simulate(SkyrmionState::reset(params), &train, dt, params, true);
    let (lo, hi) = run
        .trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.x), hi.max(s.x)));
    (hi - lo, run.clamp_events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SkyrmionParams::default().validate().unwrap();
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = SkyrmionParams {
            w_center: 70.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SkyrmionParams {
            x_init: 195.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SkyrmionParams {
            mu0: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn centre_is_force_free_at_zero_current() {
        let p = SkyrmionParams::default();
        assert_eq!(velocity(p.track_length / 2.0, 0.0, &p), 0.0);
    }

    #[test]
    fn drive_doubles_at_the_constriction() {
        let p = SkyrmionParams::default();
        let c = p.track_length / 2.0;
        let drive_centre = velocity(c, 16.0, &p) - velocity(c, 0.0, &p);
        assert!((drive_centre - 2.0 * p.mu0 * 16.0).abs() < 1e-12);
        // w_end / w(x) -> 1 far from the constriction.
        let far = SkyrmionParams {
            w_sigma: 1.0,
            ..p
        };
        let drive_far = velocity(40.0, 16.0, &far) - velocity(40.0, 0.0, &far);
        assert!((drive_centre / drive_far - 2.0).abs() < 1e-9);
    }

    #[test]
    fn edge_repulsion_beats_maximum_drive_below_x_min() {
        let p = SkyrmionParams::default();
        let mut x = p.x_min;
        while x > 0.0 {
            if velocity(x, -30.0, &p) > 0.0 {
                break;
            }
            x -= 0.01;
        }
        assert!(x > p.x_min - 5.0, "repulsion only wins at x = {x}");
        let mut x = p.x_max;
        while x < p.track_length {
            if velocity(x, 30.0, &p) < 0.0 {
                break;
            }
            x += 0.01;
        }
        assert!(x < p.x_max + 5.0, "repulsion only wins at x = {x}");
    }

    #[test]
    fn zero_current_at_force_free_point_is_stationary() {
        let p = SkyrmionParams::default();
        let state = SkyrmionState {
            x: p.track_length / 2.0,
            t: 0.0,
        };
        let train = PulseTrain::new(vec![Pulse::new(0.0, 10.0)]).unwrap();
        let run = simulate(state, &train, DEFAULT_DT, &p, false);
        assert!((run.state.x - state.x).abs() < 1e-9);
        assert_eq!(run.state.t, 10.0);
    }

    #[test]
    fn reset_then_zero_current_drifts_by_potential_gradient() {
        let p = SkyrmionParams::default();
        let s0 = SkyrmionState::reset(&p);
        assert_eq!(s0, SkyrmionState { x: 30.0, t: 0.0 });
        let h = 1e-3;
        let train = PulseTrain::new(vec![Pulse::new(0.0, h)]).unwrap();
        let run = simulate(s0, &train, DEFAULT_DT, &p, false);
        let expected = -p.potential_gradient(p.x_init) * h;
        assert!((run.state.x - s0.x - expected).abs() < 1e-3 * expected.abs());
    }

    #[test]
    fn positive_word_ends_right_of_negative_word() {
        let p = SkyrmionParams::default();
        let plus = stream_to_pulses([1, 1, 1, 1], 20.0, 10.0);
        let minus = stream_to_pulses([0, 0, 0, 0], 20.0, 10.0);
        let s0 = SkyrmionState::reset(&p);
        let a = simulate(s0, &plus, DEFAULT_DT, &p, false);
        let b = simulate(s0, &minus, DEFAULT_DT, &p, false);
        assert!(a.state.x > b.state.x);
        assert_eq!(a.clamp_events + b.clamp_events, 0);
    }

    #[test]
    fn trace_has_one_row_per_substep() {
        let p = SkyrmionParams::default();
        let train = PulseTrain::square_wave(16.0, 14.0, 2).unwrap();
        let run = simulate(SkyrmionState::reset(&p), &train, 0.05, &p, true);
        assert_eq!(run.trace.len(), 1 + 2 * 280);
        assert!((run.trace.last().unwrap().t - 28.0).abs() < 1e-12);
        assert_eq!(run.trace.last().unwrap().x, run.state.x);
    }

    #[test]
    fn zero_amplitude_words_are_indistinguishable() {
        let p = SkyrmionParams::default();
        let r = calibrate_separability(&p, 0.0, 10.0, DEFAULT_DT);
        assert_eq!(r.min_gap, 0.0);
        assert_eq!(r.distinct, 1);
    }

    #[test]
    fn word_bits_are_msb_first() {
        assert_eq!(word_bits(0b1011), [1, 0, 1, 1]);
        assert_eq!(word_bits(0), [0, 0, 0, 0]);
    }
}
