//! Single-shot readout records.

use crate::error::{Error, Result};
use magnon_core::analytic::readout_map;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Excited-state probabilities reported for a qubit prepared in |g⟩ and |e⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutAnchors {
    pub p_e_ground: f64,
    pub p_e_excited: f64,
}

impl ReadoutAnchors {
    pub const IDEAL: Self = Self {
        p_e_ground: 0.0,
        p_e_excited: 1.0,
    };

    pub fn map(&self, p_ideal: f64) -> f64 {
        readout_map(p_ideal, self.p_e_ground, self.p_e_excited)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShotMeta {
    pub seed: u64,
    pub stream: u64,
    pub p_ideal: f64,
    /// Success probability after the readout map.
    pub p_measured: f64,
    pub tau: Option<f64>,
    pub delta_s: Option<f64>,
    pub n_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub outcomes: Vec<u8>,
    /// Time per shot, s.
    pub tau_total: f64,
    pub meta: ShotMeta,
}

impl ShotRecord {
    pub fn new(outcomes: Vec<u8>, tau_total: f64, meta: ShotMeta) -> Result<Self> {
        if outcomes.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: outcomes.len(),
            });
        }
        if outcomes.iter().any(|&o| o > 1) {
            return Err(Error::invalid("outcomes", "must be 0 or 1"));
        }
        if !(tau_total > 0.0) {
            return Err(Error::invalid("tau_total", "must be positive"));
        }
        Ok(Self {
            outcomes,
            tau_total,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|&o| o as u64).sum::<u64>() as f64 / self.len() as f64
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.outcomes.iter().map(|&o| o as f64).collect()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.tau_total
    }
}

/// Generator for `(seed, stream)`. Distinct streams are independent.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// i.i.d. Bernoulli shots with success probability `anchors.map(p_ideal)`.
pub fn sample_shots(
    p_ideal: f64,
    n: usize,
    anchors: ReadoutAnchors,
    tau_total: f64,
    seed: u64,
    stream: u64,
) -> Result<ShotRecord> {
    if !(0.0..=1.0).contains(&p_ideal) {
        return Err(Error::Probability(p_ideal));
    }
    let p = anchors.map(p_ideal);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    let mut rng = rng_for(seed, stream);
    let outcomes = (0..n).map(|_| (rng.random::<f64>() < p) as u8).collect();
    ShotRecord::new(
        outcomes,
        tau_total,
        ShotMeta {
            seed,
            stream,
            p_ideal,
            p_measured: p,
            ..ShotMeta::default()
        },
    )
}
