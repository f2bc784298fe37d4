use crate::error::{invalid, Error, Result};
use crate::sensing::{decide, SensingDecision};

use super::SuAction;

/// Listen-before-Talk slot split: the first `sensing_fraction` of a slot is
/// spent listening, the rest transmitting if the channel was judged idle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbtConfig {
    sensing_fraction: f64,
}

/// The half-duplex node senses on both antennas during the sensing sub-slot.
pub const LBT_SENSING_ANTENNAS: usize = 2;

impl LbtConfig {
    pub fn new(sensing_fraction: f64) -> Result<Self> {
        if sensing_fraction > 0.0 && sensing_fraction < 1.0 {
            Ok(Self { sensing_fraction })
        } else {
            Err(invalid(
                "sensing_fraction",
                sensing_fraction,
                "a fraction in (0, 1)",
            ))
        }
    }

    pub fn sensing_fraction(&self) -> f64 {
        self.sensing_fraction
    }

    /// Fraction of the slot available for data.
    pub fn airtime(&self) -> f64 {
        1.0 - self.sensing_fraction
    }

    /// Samples per antenna in the sensing sub-slot, `⌈τN⌉`.
    pub fn sensing_samples(&self, samples_per_slot: usize) -> usize {
        // Guard against τN landing a hair above an integer (0.1 * 1000).
        let exact = self.sensing_fraction * samples_per_slot as f64;
        ((exact - 1e-9).ceil() as usize).max(1)
    }

    /// Samples entering one LBT decision across both antennas.
    pub fn decision_samples(&self, samples_per_slot: usize) -> usize {
        LBT_SENSING_ANTENNAS * self.sensing_samples(samples_per_slot)
    }
}

/// One LBT slot. Each antenna stream holds a full slot of samples; only the
/// sensing sub-slot prefix is used. Returns the action for the rest of the
/// slot, the decision and the statistic it was based on.
pub fn lbt_step(
    config: &LbtConfig,
    eps_silent: f64,
    antenna_samples: &[&[f64]],
) -> Result<(SuAction, SensingDecision, f64)> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for stream in antenna_samples {
        let take = config.sensing_samples(stream.len()).min(stream.len());
        sum += stream[..take].iter().sum::<f64>();
        count += take;
    }
    if count == 0 {
        return Err(Error::EmptySlot);
    }
    let statistic = sum / count as f64;
    let decision = decide(statistic, eps_silent);
    let action = match decision {
        SensingDecision::Idle => SuAction::Transmit,
        SensingDecision::Busy => SuAction::Silent,
    };
    Ok((action, decision, statistic))
}
