//! Drive envelopes and pulse schedules.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gaussian pulses are cut off at this many widths either side of the centre.
pub const PULSE_CUTOFF: f64 = 1.5;

/// Ω e^{−π(t−t_c)²/τ²}. Its full integral is Ω·τ.
pub fn gaussian_envelope(t: f64, center: f64, width: f64, amplitude: f64) -> f64 {
    let x = (t - center) / width;
    amplitude * (-PI * x * x).exp()
}

/// Gaussian qubit pulse, zero outside ±[`PULSE_CUTOFF`]·width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    pub center: f64,
    pub width: f64,
    /// Peak Rabi strength, rad/s.
    pub amplitude: f64,
}

impl GaussianPulse {
    pub fn half_length(&self) -> f64 {
        PULSE_CUTOFF * self.width
    }

    pub fn start(&self) -> f64 {
        self.center - self.half_length()
    }

    pub fn end(&self) -> f64 {
        self.center + self.half_length()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        if (t - self.center).abs() > self.half_length() {
            0.0
        } else {
            gaussian_envelope(t, self.center, self.width, self.amplitude)
        }
    }
}

/// Constant magnon drive on [start, end].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonDrive {
    pub start: f64,
    pub end: f64,
    /// Ω_d, rad/s.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pulse {
    Qubit(GaussianPulse),
    Magnon(MagnonDrive),
}

impl Pulse {
    fn span(&self) -> (f64, f64) {
        match self {
            Pulse::Qubit(p) => (p.start(), p.end()),
            Pulse::Magnon(m) => (m.start, m.end),
        }
    }
}

/// Ordered drives between the simulation start and the readout time.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    sim_start: f64,
    readout: f64,
    pulses: Vec<Pulse>,
}

impl PulseSchedule {
    pub fn new(sim_start: f64, readout: f64) -> Result<Self> {
        if !sim_start.is_finite() || !readout.is_finite() || readout < sim_start {
            return Err(Error::Schedule(format!(
                "readout {readout:e} s precedes the start {sim_start:e} s"
            )));
        }
        Ok(Self {
            sim_start,
            readout,
            pulses: Vec::new(),
        })
    }

    pub fn with(mut self, pulse: Pulse) -> Result<Self> {
        self.push(pulse)?;
        Ok(self)
    }

    pub fn push(&mut self, pulse: Pulse) -> Result<()> {
        match pulse {
            Pulse::Qubit(p) => {
                if !(p.width > 0.0) || !p.amplitude.is_finite() || !p.center.is_finite() {
                    return Err(Error::Schedule("qubit pulse needs a positive width and finite amplitude".into()));
                }
            }
            Pulse::Magnon(m) => {
                if !m.amplitude.is_finite() || !(m.end >= m.start) {
                    return Err(Error::Schedule("magnon drive needs start ≤ end and a finite amplitude".into()));
                }
            }
        }
        let (a, b) = pulse.span();
        let slack = 1e-12 * (self.readout - self.sim_start).abs().max(1e-9);
        if a < self.sim_start - slack || b > self.readout + slack {
            return Err(Error::Schedule(format!(
                "pulse [{a:e}, {b:e}] s outside [{:e}, {:e}] s",
                self.sim_start, self.readout
            )));
        }
        let at = self.pulses.partition_point(|p| p.span().0 <= a);
        self.pulses.insert(at, pulse);
        Ok(())
    }

    pub fn sim_start(&self) -> f64 {
        self.sim_start
    }

    pub fn readout(&self) -> f64 {
        self.readout
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// Σ of qubit envelopes at `t`.
    pub fn qubit_envelope(&self, t: f64) -> f64 {
        self.pulses
            .iter()
            .map(|p| match p {
                Pulse::Qubit(g) => g.envelope(t),
                Pulse::Magnon(_) => 0.0,
            })
            .sum()
    }

    pub fn magnon_amplitude(&self, t: f64) -> f64 {
        self.pulses
            .iter()
            .map(|p| match p {
                Pulse::Magnon(m) if (m.start..=m.end).contains(&t) => m.amplitude,
                _ => 0.0,
            })
            .sum()
    }

    /// Amplitude of a single magnon drive spanning the whole schedule, if any.
    pub fn constant_magnon(&self) -> Option<f64> {
        let mut drives = self.pulses.iter().filter_map(|p| match p {
            Pulse::Magnon(m) => Some(m),
            Pulse::Qubit(_) => None,
        });
        match (drives.next(), drives.next()) {
            (None, _) => Some(0.0),
            (Some(m), None) if m.start <= self.sim_start && m.end >= self.readout => Some(m.amplitude),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_peaks_at_centre_and_is_truncated() {
        let p = GaussianPulse {
            center: 2.0,
            width: 1.0,
            amplitude: 3.0,
        };
        assert_eq!(p.envelope(2.0), 3.0);
        assert_eq!(p.envelope(3.6), 0.0);
        assert!(p.envelope(3.4) > 0.0);
        assert_eq!((p.start(), p.end()), (0.5, 3.5));
    }

    #[test]
    fn pulses_outside_bounds_are_rejected() {
        let s = PulseSchedule::new(0.0, 1.0).unwrap();
        let p = GaussianPulse {
            center: 0.1,
            width: 0.1,
            amplitude: 1.0,
        };
        assert!(s.clone().with(Pulse::Qubit(p)).is_err());
        let zero_width = GaussianPulse { width: 0.0, center: 0.5, ..p };
        assert!(s.with(Pulse::Qubit(zero_width)).is_err());
    }

    #[test]
    fn constant_magnon_detection() {
        let s = PulseSchedule::new(0.0, 1.0).unwrap();
        assert_eq!(s.constant_magnon(), Some(0.0));
        let full = MagnonDrive {
            start: 0.0,
            end: 1.0,
            amplitude: 2.0,
        };
        let s2 = s.clone().with(Pulse::Magnon(full)).unwrap();
        assert_eq!(s2.constant_magnon(), Some(2.0));
        assert_eq!(s2.magnon_amplitude(0.5), 2.0);
        let part = MagnonDrive { end: 0.5, ..full };
        assert_eq!(s.with(Pulse::Magnon(part)).unwrap().constant_magnon(), None);
    }
}
