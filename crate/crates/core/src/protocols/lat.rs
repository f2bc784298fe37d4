use crate::error::Result;
use crate::sensing::{decide, energy_statistic, SensingDecision, ThresholdPair};

use super::SuAction;

/// Listen-and-Talk state carried across a slot boundary.
///
/// Invariant: `next_action == Transmit` exactly when `last_decision == Idle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatState {
    next_action: SuAction,
    last_decision: SensingDecision,
}

impl Default for LatState {
    /// SUs start silent, as if the previous slot had been judged busy.
    fn default() -> Self {
        Self::after(SensingDecision::Busy)
    }
}

impl LatState {
    pub fn after(decision: SensingDecision) -> Self {
        let next_action = match decision {
            SensingDecision::Idle => SuAction::Transmit,
            SensingDecision::Busy => SuAction::Silent,
        };
        Self {
            next_action,
            last_decision: decision,
        }
    }

    pub fn next_action(&self) -> SuAction {
        self.next_action
    }

    pub fn last_decision(&self) -> SensingDecision {
        self.last_decision
    }

    /// Decide on a slot from its statistic, using the threshold that matches
    /// what the SU itself did during the slot.
    pub fn advance(
        &self,
        thresholds: &ThresholdPair,
        statistic: f64,
        own_action_this_slot: SuAction,
    ) -> (LatState, SensingDecision) {
        let threshold = thresholds.for_activity(own_action_this_slot.is_transmit());
        let decision = decide(statistic, threshold);
        (LatState::after(decision), decision)
    }
}

/// One LAT slot from raw sample energies.
pub fn lat_step(
    state: &LatState,
    thresholds: &ThresholdPair,
    slot_samples: &[f64],
    own_action_this_slot: SuAction,
) -> Result<(LatState, SensingDecision)> {
    let statistic = energy_statistic(slot_samples)?;
    Ok(state.advance(thresholds, statistic, own_action_this_slot))
}
