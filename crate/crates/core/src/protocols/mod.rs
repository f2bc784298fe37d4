//! Per-slot state machines for the three access protocols.
//!
//! * [`lat`]: Listen-and-Talk, full-duplex sensing while transmitting; the
//!   end-of-slot decision drives the next slot.
//! * [`lbt`]: Listen-before-Talk, a silent sensing sub-slot followed by
//!   transmission in the rest of the same slot.
//! * [`dsa`]: several full-duplex SUs contending for one channel, with
//!   early abort on detected collisions.

pub mod dsa;
pub mod lat;
pub mod lbt;

pub use dsa::{dsa_step, DsaEvent, DsaMode, DsaNodeState, DsaThresholds};
pub use lat::{lat_step, LatState};
pub use lbt::{lbt_step, LbtConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuAction {
    Silent,
    Transmit,
}

impl SuAction {
    pub fn is_transmit(self) -> bool {
        matches!(self, SuAction::Transmit)
    }
}
