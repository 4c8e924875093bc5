//! Auto-oscillator power/phase model of a vortex spin-torque nano-oscillator.
//!
//! ```text
//! dp/dt   = 2p [ -gamma_g (1 + q p) + sigma_i I (1 - p) ]
//! dphi/dt = 2 pi (f0 + n_shift p)
//! ```
//!
//! `p` is the normalized oscillation power and `sqrt(p)` the envelope of
//! `m_x/m`. Currents in mA, times in ns, frequencies in GHz.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::integrator::rk4_integrate_with;
use super::pulse::PulseTrain;
use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 0.01;

/// Nominal device diameters (nm) of the default oscillator bank.
pub const DIAMETERS: [u32; 3] = [240, 270, 300];

/// Lower and upper edge of the stable oscillation window (mA).
pub const CURRENT_WINDOW: (f64, f64) = (0.01, 0.40);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StnoParams {
    pub gamma_g: f64,
    pub q: f64,
    pub sigma_i: f64,
    pub f0: f64,
    pub n_shift: f64,
    pub diameter: u32,
    pub p_floor: f64,
}

impl Default for StnoParams {
    fn default() -> Self {
        Self::for_diameter(240).expect("240 nm is a tabulated diameter")
    }
}

impl StnoParams {
    /// Tabulated parameters of the three device sizes used in the bank.
    pub fn for_diameter(diameter: u32) -> Result<Self> {
        let (gamma_g, sigma_i, f0) = match diameter {
            240 => (0.020, 1.00, 1.0),
            270 => (0.018, 0.80, 0.9),
            300 => (0.016, 0.65, 0.8),
            d => {
                return Err(Error::InvalidParams(format!(
                    "no oscillator parameters tabulated for diameter {d} nm"
                )))
            }
        };
        Ok(Self {
            gamma_g,
            q: 2.0,
            sigma_i,
            f0,
            n_shift: 0.2,
            diameter,
            p_floor: 1e-4,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.gamma_g > 0.0) {
            problems.push("gamma_g must be positive".to_string());
        }
        if !(self.sigma_i > 0.0) {
            problems.push("sigma_i must be positive".to_string());
        }
        if !(self.q >= 0.0) {
            problems.push("q must be non-negative".to_string());
        }
        if !(self.p_floor > 0.0 && self.p_floor < 1e-2) {
            problems.push("p_floor must lie in (0, 1e-2)".to_string());
        }
        if !(self.f0.is_finite() && self.n_shift.is_finite()) {
            problems.push("f0 and n_shift must be finite".to_string());
        }
        let ith = self.threshold_current();
        if problems.is_empty() && !(CURRENT_WINDOW.0 < ith && ith < CURRENT_WINDOW.1) {
            problems.push(format!(
                "threshold current {ith} mA outside ({}, {}) mA",
                CURRENT_WINDOW.0, CURRENT_WINDOW.1
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Threshold current `I_th = gamma_g / sigma_i` (mA).
    pub fn threshold_current(&self) -> f64 {
        self.gamma_g / self.sigma_i
    }

    /// Linear relaxation time (ns) of the power around its fixed point at
    /// current `i`; infinite at or below threshold.
    pub fn relaxation_time(&self, i: f64) -> f64 {
        let p = steady_power(i, self);
        let rate = 2.0 * p * (self.gamma_g * self.q + self.sigma_i * i);
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StnoState {
    /// Normalized oscillation power in [0, 1].
    pub p: f64,
    /// Unwrapped precession phase (rad).
    pub phi: f64,
    /// Elapsed time (ns).
    pub t: f64,
}

impl StnoState {
    pub fn new(p: f64) -> Self {
        Self { p, phi: 0.0, t: 0.0 }
    }

    /// Envelope of `m_x/m`, the reservoir observable.
    pub fn envelope(&self) -> f64 {
        self.p.max(0.0).sqrt()
    }

    /// Phase wrapped to [0, 2 pi).
    pub fn wrapped_phase(&self) -> f64 {
        self.phi.rem_euclid(TAU)
    }
}

/// Right-hand side `(dp/dt, dphi/dt)` at power `p` and current `i`.
pub fn rhs(p: f64, i: f64, params: &StnoParams) -> (f64, f64) {
    let dp = 2.0 * p * (-params.gamma_g * (1.0 + params.q * p) + params.sigma_i * i * (1.0 - p));
    let dphi = TAU * (params.f0 + params.n_shift * p);
    (dp, dphi)
}

/// Stable fixed point of the power equation at constant current `i`.
pub fn steady_power(i: f64, params: &StnoParams) -> f64 {
    let drive = params.sigma_i * i;
    if drive <= params.gamma_g {
        0.0
    } else {
        (drive - params.gamma_g) / (drive + params.q * params.gamma_g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnoRun {
    /// State at the end of every pulse, in order.
    pub pulse_ends: Vec<StnoState>,
    pub state: StnoState,
    /// Substeps at which `p` left [0, 1] and was clamped back.
    pub clamp_events: usize,
    /// Initial state plus every substep, when requested.
    pub trace: Vec<StnoState>,
}

impl StnoRun {
    pub fn clamp_triggered(&self) -> bool {
        self.clamp_events > 0
    }
}

/// Integrates the oscillator across `train` with RK4, seeding the power to
/// at least `p_floor` first.
pub fn simulate(
    state: StnoState,
    train: &PulseTrain,
    dt: f64,
    params: &StnoParams,
    record_trace: bool,
) -> StnoRun {
    let mut y = [state.p.max(params.p_floor), state.phi];
    let mut t0 = state.t;
    let mut clamp_events = 0;
    let mut pulse_ends = Vec::with_capacity(train.len());
    let mut trace = Vec::new();
    if record_trace {
        trace.push(StnoState {
            p: y[0],
            phi: y[1],
            t: t0,
        });
    }
    for pulse in train {
        let i = pulse.amplitude;
        y = rk4_integrate_with(
            |s: &[f64; 2]| {
                let (dp, dphi) = rhs(s[0], i, params);
                [dp, dphi]
            },
            y,
            pulse.duration,
            dt,
            |t, s| {
                if !(0.0..=1.0).contains(&s[0]) {
                    clamp_events += 1;
                    s[0] = if s[0].is_nan() { 0.0 } else { s[0].clamp(0.0, 1.0) };
                }
                if record_trace {
                    trace.push(StnoState {
                        p: s[0],
                        phi: s[1],
                        t: t0 + t,
                    });
                }
            },
        );
        t0 += pulse.duration;
        pulse_ends.push(StnoState {
            p: y[0],
            phi: y[1],
            t: t0,
        });
    }
    StnoRun {
        pulse_ends,
        state: StnoState {
            p: y[0],
            phi: y[1],
            t: t0,
        },
        clamp_events,
        trace,
    }
}
