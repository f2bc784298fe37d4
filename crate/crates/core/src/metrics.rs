//! Performance metrics over simulated traces.
//!
//! Every slot falls in exactly one [`Case`] according to the PU state and
//! whether any SU transmits. Collision ratio and spectrum waste are ratios of
//! case counts; throughput is `R·(1 − Pw)`. The engine accumulates a
//! [`TraceSummary`] while it runs so that thinned traces still yield metrics;
//! the `*_of` free functions recompute the same quantities by scanning a
//! stored timeline.

use crate::engine::{PacketOutcome, SlotRecord, TimelineView, Trace};
use crate::error::{Error, Result};
use crate::protocols::SuAction;
use crate::radio::PuState;
use crate::sensing::SensingDecision;

/// Joint PU state and SU activity of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// PU busy, SU silent.
    BusySilent,
    /// PU idle, SU transmits: the spectrum hole is used.
    IdleTransmit,
    /// PU idle, SU silent: a wasted hole.
    IdleSilent,
    /// PU busy, SU transmits: a collision.
    BusyTransmit,
}

impl Case {
    pub const ALL: [Case; 4] = [
        Case::BusySilent,
        Case::IdleTransmit,
        Case::IdleSilent,
        Case::BusyTransmit,
    ];

    pub fn classify(pu: PuState, su_transmits: bool) -> Case {
        match (pu, su_transmits) {
            (PuState::Busy, false) => Case::BusySilent,
            (PuState::Idle, true) => Case::IdleTransmit,
            (PuState::Idle, false) => Case::IdleSilent,
            (PuState::Busy, true) => Case::BusyTransmit,
        }
    }

    /// Position in [`Case::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn pu_state(self) -> PuState {
        match self {
            Case::BusySilent | Case::BusyTransmit => PuState::Busy,
            Case::IdleTransmit | Case::IdleSilent => PuState::Idle,
        }
    }

    pub fn su_transmits(self) -> bool {
        matches!(self, Case::IdleTransmit | Case::BusyTransmit)
    }
}

/// `log2(1 + γt)`: the SU link rate in bits/s/Hz.
pub fn rate(su_link_snr: f64) -> f64 {
    (1.0 + su_link_snr).log2()
}

/// Saturated SU throughput `R·(1 − Pw)`.
pub fn throughput(rate: f64, waste_ratio: f64) -> f64 {
    rate * (1.0 - waste_ratio)
}

fn ratio(num: u64, den: u64, name: &'static str) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedMetric(name))
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Whether SU `su` is in a collision during the slot: it transmits while
/// the PU or another SU is on the air.
fn su_collides(record: &SlotRecord<'_>, su: usize) -> bool {
    record.actions[su].is_transmit() && (record.pu_state.is_busy() || record.transmitters() > 1)
}

/// Running accumulators filled slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    n_sus: usize,
    slots: u64,
    case_counts: [u64; 4],
    idle_decisions: u64,
    false_alarms: u64,
    busy_decisions: u64,
    missed_detections: u64,
    collision_runs: Vec<u32>,
    open_runs: Vec<u32>,
}

impl TraceSummary {
    pub fn new(n_sus: usize) -> Self {
        Self {
            n_sus,
            slots: 0,
            case_counts: [0; 4],
            idle_decisions: 0,
            false_alarms: 0,
            busy_decisions: 0,
            missed_detections: 0,
            collision_runs: Vec::new(),
            open_runs: vec![0; n_sus],
        }
    }

    pub fn observe(&mut self, record: &SlotRecord<'_>) {
        self.slots += 1;
        self.case_counts[Case::classify(record.pu_state, record.any_transmit()).index()] += 1;
        for &d in record.decisions {
            match record.pu_state {
                PuState::Idle => {
                    self.idle_decisions += 1;
                    self.false_alarms += u64::from(d == SensingDecision::Busy);
                }
                PuState::Busy => {
                    self.busy_decisions += 1;
                    self.missed_detections += u64::from(d == SensingDecision::Idle);
                }
            }
        }
        for su in 0..self.n_sus {
            if su_collides(record, su) {
                self.open_runs[su] += 1;
            } else if self.open_runs[su] > 0 {
                self.collision_runs.push(self.open_runs[su]);
                self.open_runs[su] = 0;
            }
        }
    }

    /// Close runs still open at the end of the trace.
    pub fn finish(&mut self) {
        for run in self.open_runs.iter_mut() {
            if *run > 0 {
                self.collision_runs.push(*run);
                *run = 0;
            }
        }
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn case_counts(&self) -> [u64; 4] {
        self.case_counts
    }

    /// Collision runs ordered by end slot, then by SU index.
    pub fn collision_runs(&self) -> &[u32] {
        &self.collision_runs
    }
}

/// Case counts over a timeline.
pub fn case_counts_of(view: TimelineView<'_>) -> [u64; 4] {
    let mut counts = [0; 4];
    for r in view.iter() {
        counts[Case::classify(r.pu_state, r.any_transmit()).index()] += 1;
    }
    counts
}

/// Fraction of PU-busy slots in which an SU transmits.
pub fn collision_ratio_of(view: TimelineView<'_>) -> Result<f64> {
    let c = case_counts_of(view);
    ratio(
        c[Case::BusyTransmit.index()],
        c[Case::BusySilent.index()] + c[Case::BusyTransmit.index()],
        "collision_ratio",
    )
}

/// Fraction of PU-idle slots left unused.
pub fn waste_ratio_of(view: TimelineView<'_>) -> Result<f64> {
    let c = case_counts_of(view);
    ratio(
        c[Case::IdleSilent.index()],
        c[Case::IdleTransmit.index()] + c[Case::IdleSilent.index()],
        "waste_ratio",
    )
}

/// Lengths of maximal collision runs, per SU, ordered by end slot then SU.
pub fn collision_durations_of(view: TimelineView<'_>) -> Vec<u32> {
    let mut open = vec![0u32; view.n_sus()];
    let mut runs = Vec::new();
    for r in view.iter() {
        for (su, run) in open.iter_mut().enumerate() {
            if su_collides(&r, su) {
                *run += 1;
            } else if *run > 0 {
                runs.push(*run);
                *run = 0;
            }
        }
    }
    runs.extend(open.into_iter().filter(|&r| r > 0));
    runs
}

/// Empirical `(false alarm, missed detection)` rates over all SU decisions.
pub fn sensing_error_rates_of(view: TimelineView<'_>) -> Result<(f64, f64)> {
    let (mut idle, mut fa, mut busy, mut md) = (0u64, 0u64, 0u64, 0u64);
    for r in view.iter() {
        for &d in r.decisions {
            if r.pu_state.is_busy() {
                busy += 1;
                md += u64::from(d == SensingDecision::Idle);
            } else {
                idle += 1;
                fa += u64::from(d == SensingDecision::Busy);
            }
        }
    }
    Ok((
        ratio(fa, idle, "false_alarm_rate")?,
        ratio(md, busy, "missed_detection_rate")?,
    ))
}

fn mean_of(runs: &[u32]) -> Option<f64> {
    if runs.is_empty() {
        None
    } else {
        Some(runs.iter().map(|&r| f64::from(r)).sum::<f64>() / runs.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub collision_ratio: f64,
    pub waste_ratio: f64,
    pub rate: f64,
    /// `rate · (1 − waste_ratio)`.
    pub throughput: f64,
    /// Rate earned only in slots where an SU transmits to an idle channel,
    /// per slot of the trace.
    pub goodput: f64,
    pub false_alarm_rate: f64,
    pub missed_detection_rate: f64,
    /// Mean collision run length in slots, `None` without collisions.
    pub mean_collision_duration: Option<f64>,
    /// Indexed like [`Case::ALL`].
    pub case_fractions: [f64; 4],
}

impl Metrics {
    /// Assemble metrics from per-case probabilities. Collision and waste
    /// ratios are conditional on the PU state.
    pub fn from_case_fractions(
        case_fractions: [f64; 4],
        false_alarm_rate: f64,
        missed_detection_rate: f64,
        mean_collision_duration: Option<f64>,
        rate: f64,
    ) -> Result<Self> {
        let [c1, c2, c3, c4] = case_fractions;
        if c1 + c4 <= 0.0 {
            return Err(Error::UndefinedMetric("collision_ratio"));
        }
        if c2 + c3 <= 0.0 {
            return Err(Error::UndefinedMetric("waste_ratio"));
        }
        let waste_ratio = c3 / (c2 + c3);
        Ok(Self {
            collision_ratio: c4 / (c1 + c4),
            waste_ratio,
            rate,
            throughput: throughput(rate, waste_ratio),
            goodput: rate * c2,
            false_alarm_rate,
            missed_detection_rate,
            mean_collision_duration,
            case_fractions,
        })
    }

    fn from_counts(counts: [u64; 4], errors: (f64, f64), runs: &[u32], rate: f64) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::UndefinedMetric("case_fractions"));
        }
        let [c1, c2, c3, c4] = counts;
        let collision_ratio = ratio(c4, c1 + c4, "collision_ratio")?;
        let waste_ratio = ratio(c3, c2 + c3, "waste_ratio")?;
        let fractions = counts.map(|c| c as f64 / total as f64);
        Ok(Self {
            collision_ratio,
            waste_ratio,
            rate,
            throughput: throughput(rate, waste_ratio),
            goodput: rate * fractions[Case::IdleTransmit.index()],
            false_alarm_rate: errors.0,
            missed_detection_rate: errors.1,
            mean_collision_duration: mean_of(runs),
            case_fractions: fractions,
        })
    }

    /// Metrics from the accumulators of a trace (works on thinned traces).
    pub fn from_trace(trace: &Trace) -> Result<Self> {
        let s = &trace.summary;
        let errors = (
            ratio(s.false_alarms, s.idle_decisions, "false_alarm_rate")?,
            ratio(
                s.missed_detections,
                s.busy_decisions,
                "missed_detection_rate",
            )?,
        );
        Self::from_counts(
            s.case_counts,
            errors,
            &s.collision_runs,
            trace.config.rate(),
        )
    }

    /// Metrics by scanning a stored timeline.
    pub fn from_view(view: TimelineView<'_>, rate: f64) -> Result<Self> {
        let counts = case_counts_of(view);
        let errors = sensing_error_rates_of(view)?;
        Self::from_counts(counts, errors, &collision_durations_of(view), rate)
    }

    pub fn detection_rate(&self) -> f64 {
        1.0 - self.missed_detection_rate
    }

    pub fn case_fraction(&self, case: Case) -> f64 {
        self.case_fractions[case.index()]
    }
}

/// Contention statistics of a multi-SU run, over the post-warm-up slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DsaMetrics {
    pub collision_durations: Vec<u32>,
    pub mean_collision_duration: Option<f64>,
    /// Slots with two or more SUs on the air.
    pub su_su_collision_slots: u64,
    /// PU-busy slots with at least one SU on the air.
    pub pu_collision_slots: u64,
    /// Slots with exactly one SU on the air and the PU idle.
    pub clean_slots: u64,
    pub packets_completed: u64,
    pub packets_aborted: u64,
    pub slots: u64,
}

impl DsaMetrics {
    pub fn from_trace(trace: &Trace) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::UndefinedMetric("dsa metrics need a stored timeline"));
        }
        let view = trace.measured();
        let (mut su_su, mut pu, mut clean) = (0, 0, 0);
        for r in view.iter() {
            let n = r.transmitters();
            su_su += u64::from(n >= 2);
            pu += u64::from(n >= 1 && r.pu_state.is_busy());
            clean += u64::from(n == 1 && !r.pu_state.is_busy());
        }
        let warmup = trace.config.warmup_slots as u64;
        let count = |o: PacketOutcome| {
            trace
                .packets
                .iter()
                .filter(|p| p.start >= warmup && p.outcome == o)
                .count() as u64
        };
        let durations = collision_durations_of(view);
        Ok(Self {
            mean_collision_duration: mean_of(&durations),
            collision_durations: durations,
            su_su_collision_slots: su_su,
            pu_collision_slots: pu,
            clean_slots: clean,
            packets_completed: count(PacketOutcome::Completed),
            packets_aborted: count(PacketOutcome::Aborted),
            slots: view.len() as u64,
        })
    }
}

/// Convenience for tests and examples: a single-SU view from two columns.
pub fn single_su_timeline(pu: &[PuState], su: &[SuAction]) -> crate::engine::Timeline {
    crate::engine::Timeline::single_su(pu, su)
}
