//! Distributed spectrum access among several secondary users.
//!
//! An idle node listens and starts a packet in the next slot when the
//! channel looks free. A full-duplex node keeps listening while it sends:
//! energy above its own RSI floor by about one interferer makes it abort
//! and back off for a uniform number of slots in `0..W`. A half-duplex node
//! (`fd_abort` off) is deaf while sending and always finishes its packet.
//! PU arrivals and SU collisions look the same to a node; both abort.

use rand::Rng;

use crate::sensing::{decide, SensingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsaMode {
    Idle,
    Transmitting,
    Backoff(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsaNodeState {
    pub mode: DsaMode,
    pub backoff_window: u32,
    /// Slots left in the current packet, counting the current one.
    pub packet_remaining: u32,
}

impl DsaNodeState {
    pub fn new(backoff_window: u32) -> Self {
        Self {
            mode: DsaMode::Idle,
            backoff_window: backoff_window.max(1),
            packet_remaining: 0,
        }
    }

    pub fn is_transmitting(&self) -> bool {
        matches!(self.mode, DsaMode::Transmitting)
    }
}

/// Thresholds and packet rules shared by all nodes of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsaThresholds {
    /// Applied by idle nodes: detects the PU (or any SU) on a quiet channel.
    pub eps_idle: f64,
    /// Applied by transmitting nodes: detects one interferer on top of the
    /// node's own RSI floor.
    pub eps_collision: f64,
    pub packet_length: u32,
    pub fd_abort: bool,
}

/// What happened to a node's packet during the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsaEvent {
    None,
    /// Channel judged free; a packet starts next slot.
    Started,
    /// The packet finished this slot.
    Completed,
    /// The packet finished and, the channel still being free, the next one
    /// follows without a gap (full-duplex nodes only).
    CompletedAndContinued,
    /// Collision detected; transmission stops after this slot.
    Aborted,
}

/// Advance one node by one slot given the energy statistic it observed.
pub fn dsa_step<R: Rng + ?Sized>(
    node: &DsaNodeState,
    statistic: f64,
    thresholds: &DsaThresholds,
    rng: &mut R,
) -> (DsaNodeState, SensingDecision, DsaEvent) {
    let mut next = *node;
    match node.mode {
        DsaMode::Idle => {
            let decision = decide(statistic, thresholds.eps_idle);
            if decision == SensingDecision::Idle {
                next.mode = DsaMode::Transmitting;
                next.packet_remaining = thresholds.packet_length;
                return (next, decision, DsaEvent::Started);
            }
            (next, decision, DsaEvent::None)
        }
        DsaMode::Transmitting => {
            let decision = decide(statistic, thresholds.eps_collision);
            if thresholds.fd_abort && decision == SensingDecision::Busy {
                next.mode = DsaMode::Backoff(rng.random_range(0..node.backoff_window));
                next.packet_remaining = 0;
                return (next, decision, DsaEvent::Aborted);
            }
            next.packet_remaining = node.packet_remaining.saturating_sub(1);
            if next.packet_remaining > 0 {
                return (next, decision, DsaEvent::None);
            }
            if thresholds.fd_abort {
                next.packet_remaining = thresholds.packet_length;
                (next, decision, DsaEvent::CompletedAndContinued)
            } else {
                next.mode = DsaMode::Idle;
                (next, decision, DsaEvent::Completed)
            }
        }
        DsaMode::Backoff(remaining) => {
            let decision = decide(statistic, thresholds.eps_idle);
            next.mode = match remaining {
                0 => DsaMode::Idle,
                r => DsaMode::Backoff(r - 1),
            };
            (next, decision, DsaEvent::None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn thresholds(fd_abort: bool) -> DsaThresholds {
        DsaThresholds {
            eps_idle: 1.5,
            eps_collision: 2.5,
            packet_length: 3,
            fd_abort,
        }
    }

    #[test]
    fn idle_node_starts_on_free_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (n, d, e) = dsa_step(&DsaNodeState::new(8), 1.0, &thresholds(true), &mut rng);
        assert_eq!(d, SensingDecision::Idle);
        assert_eq!(e, DsaEvent::Started);
        assert_eq!(n.mode, DsaMode::Transmitting);
        assert_eq!(n.packet_remaining, 3);

        let (n, _, e) = dsa_step(&DsaNodeState::new(8), 2.0, &thresholds(true), &mut rng);
        assert_eq!((n.mode, e), (DsaMode::Idle, DsaEvent::None));
    }

    #[test]
    fn full_duplex_aborts_on_collision() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let node = DsaNodeState {
            mode: DsaMode::Transmitting,
            backoff_window: 4,
            packet_remaining: 3,
        };
        for _ in 0..100 {
            let (n, _, e) = dsa_step(&node, 3.0, &thresholds(true), &mut rng);
            assert_eq!(e, DsaEvent::Aborted);
            assert!(matches!(n.mode, DsaMode::Backoff(r) if r < 4));
        }
    }

    #[test]
    fn half_duplex_finishes_packet() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut node = DsaNodeState {
            mode: DsaMode::Transmitting,
            backoff_window: 4,
            packet_remaining: 3,
        };
        let mut events = Vec::new();
        for _ in 0..3 {
            let (n, _, e) = dsa_step(&node, 100.0, &thresholds(false), &mut rng);
            node = n;
            events.push(e);
        }
        assert_eq!(
            events,
            [DsaEvent::None, DsaEvent::None, DsaEvent::Completed]
        );
        assert_eq!(node.mode, DsaMode::Idle);
    }

    #[test]
    fn full_duplex_continues_on_free_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let node = DsaNodeState {
            mode: DsaMode::Transmitting,
            backoff_window: 4,
            packet_remaining: 1,
        };
        let (n, _, e) = dsa_step(&node, 1.0, &thresholds(true), &mut rng);
        assert_eq!(e, DsaEvent::CompletedAndContinued);
        assert_eq!((n.mode, n.packet_remaining), (DsaMode::Transmitting, 3));
    }

    #[test]
    fn backoff_rejoins_within_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut node = DsaNodeState {
            mode: DsaMode::Backoff(7),
            backoff_window: 8,
            packet_remaining: 0,
        };
        let mut slots = 0;
        while node.mode != DsaMode::Idle {
            node = dsa_step(&node, 0.0, &thresholds(true), &mut rng).0;
            slots += 1;
        }
        assert_eq!(slots, 8);
    }
}
