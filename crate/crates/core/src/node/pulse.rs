use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular current pulse.
///
/// Amplitudes are in µA for the skyrmion memristor and mA for the
/// oscillators; durations are always ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub amplitude: f64,
    pub duration: f64,
}

impl Pulse {
    pub fn new(amplitude: f64, duration: f64) -> Self {
        Self {
            amplitude,
            duration,
        }
    }
}

/// Ordered sequence of pulses applied back to back.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseTrain {
    pulses: Vec<Pulse>,
}

impl PulseTrain {
    /// Builds a train, rejecting non-positive or non-finite durations.
    ///
    /// An empty train is accepted here so scripted traces can be empty; the
    /// encoders always produce at least one pulse.
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        for (k, p) in pulses.iter().enumerate() {
            if !(p.duration > 0.0 && p.duration.is_finite()) || !p.amplitude.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "pulse {k} has amplitude {} and duration {}",
                    p.amplitude, p.duration
                )));
            }
        }
        Ok(Self { pulses })
    }

    /// Alternating square wave `+amp, -amp, +amp, ...` of `n_pulses` pulses.
    pub fn square_wave(amp: f64, width: f64, n_pulses: usize) -> Result<Self> {
        Self::new(
            (0..n_pulses)
                .map(|k| Pulse::new(if k % 2 == 0 { amp } else { -amp }, width))
                .collect(),
        )
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(|p| p.duration).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pulse> {
        self.pulses.iter()
    }
}

impl<'a> IntoIterator for &'a PulseTrain {
    type Item = &'a Pulse;
    type IntoIter = std::slice::Iter<'a, Pulse>;

    fn into_iter(self) -> Self::IntoIter {
        self.pulses.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_duration() {
        assert!(PulseTrain::new(vec![Pulse::new(1.0, 0.0)]).is_err());
        assert!(PulseTrain::new(vec![Pulse::new(1.0, -2.0)]).is_err());
        assert!(PulseTrain::new(vec![Pulse::new(f64::NAN, 2.0)]).is_err());
    }

    #[test]
    fn square_wave_alternates() {
        let t = PulseTrain::square_wave(16.0, 14.0, 3).unwrap();
        let amps: Vec<f64> = t.iter().map(|p| p.amplitude).collect();
        assert_eq!(amps, vec![16.0, -16.0, 16.0]);
        assert_eq!(t.total_duration(), 42.0);
    }
}
