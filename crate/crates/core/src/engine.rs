//! Slotted simulation engine.
//!
//! Each slot the PU chain advances first, then every SU's energy statistic
//! is synthesized from the PU state and the SU's committed action, then the
//! protocol state machines step. A master seed is split into independent
//! ChaCha streams (one for the PU, two per SU), so paired scenarios that
//! differ only in SU-side parameters see the same PU trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::metrics::TraceSummary;
use crate::protocols::{
    dsa_step, DsaEvent, DsaNodeState, DsaThresholds, LatState, LbtConfig, SuAction,
};
use crate::radio::{
    initial_pu_state, rsi_power, step_pu_state, PuState, PuTrafficModel, RadioParams, RsiModel,
    SlotSynthesizer, Synthesis,
};
use crate::sensing::{decide, make_threshold_pair, SensingDecision, StatisticModel};

/// Contention parameters for the multi-SU access mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsaConfig {
    pub n_sus: usize,
    pub backoff_window: u32,
    pub packet_length: u32,
    pub fd_abort: bool,
    /// Power one SU receives from another transmitting SU.
    pub su_cross_power: f64,
}

impl Default for DsaConfig {
    fn default() -> Self {
        Self {
            n_sus: 4,
            backoff_window: 8,
            packet_length: 10,
            fd_abort: true,
            su_cross_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    Lat,
    Lbt(LbtConfig),
    Dsa(DsaConfig),
}

impl Protocol {
    pub fn n_sus(&self) -> usize {
        match self {
            Protocol::Dsa(d) => d.n_sus,
            _ => 1,
        }
    }

    /// Fraction of a granted slot that carries data.
    pub fn airtime(&self) -> f64 {
        match self {
            Protocol::Lbt(c) => c.airtime(),
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Lat => "lat",
            Protocol::Lbt(_) => "lbt",
            Protocol::Dsa(_) => "dsa",
        }
    }
}

/// Complete, seedable description of one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub radio: RadioParams,
    pub rsi: RsiModel,
    pub traffic: PuTrafficModel,
    pub n_samples_per_slot: usize,
    pub protocol: Protocol,
    pub pd_target: f64,
    pub statistic_model: StatisticModel,
    pub synthesis: Synthesis,
    pub n_slots: usize,
    /// Leading slots excluded from the summary accumulators.
    pub warmup_slots: usize,
    pub seed: u64,
    /// Keep only the running summary, not the per-slot timeline.
    pub thin_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            radio: RadioParams {
                noise_power: 1.0,
                pu_rx_power: 1.0,
                link_gain: 1.0,
                tx_power: 10.0,
            },
            rsi: RsiModel::gaussian(0.01),
            traffic: PuTrafficModel {
                p_idle_to_busy: 0.05,
                p_busy_to_idle: 0.05,
            },
            n_samples_per_slot: 100,
            protocol: Protocol::Lat,
            pd_target: 0.95,
            statistic_model: StatisticModel::Exact,
            synthesis: Synthesis::Statistic,
            n_slots: 100_000,
            warmup_slots: 100,
            seed: 1,
            thin_trace: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.rsi.validate()?;
        self.traffic.validate()?;
        if self.n_samples_per_slot == 0 {
            return Err(invalid("n_samples", 0, "at least one sample per slot"));
        }
        if !(self.pd_target > 0.0 && self.pd_target < 1.0) {
            return Err(invalid(
                "pd_target",
                self.pd_target,
                "a probability in (0, 1)",
            ));
        }
        if self.n_slots == 0 {
            return Err(invalid("n_slots", 0, "at least one slot"));
        }
        match self.protocol {
            Protocol::Lat => {}
            Protocol::Lbt(c) => {
                LbtConfig::new(c.sensing_fraction())?;
            }
            Protocol::Dsa(d) => {
                if d.n_sus == 0 {
                    return Err(invalid("n_sus", 0, "at least one SU"));
                }
                if d.backoff_window == 0 {
                    return Err(invalid(
                        "backoff_window",
                        0,
                        "a window of at least one slot",
                    ));
                }
                if d.packet_length == 0 {
                    return Err(invalid("packet_length", 0, "at least one slot"));
                }
                if !(d.su_cross_power.is_finite() && d.su_cross_power >= 0.0) {
                    return Err(invalid(
                        "su_cross_power",
                        d.su_cross_power,
                        "a finite power >= 0",
                    ));
                }
                if self.thin_trace {
                    return Err(invalid("thin_trace", true, "false in dsa mode"));
                }
            }
        }
        Ok(())
    }

    pub fn n_sus(&self) -> usize {
        self.protocol.n_sus()
    }

    /// Effective rate: `log2(1 + γt)` scaled by the protocol's airtime.
    pub fn rate(&self) -> f64 {
        crate::metrics::rate(self.radio.su_link_snr()) * self.protocol.airtime()
    }

    pub fn with_tx_power(mut self, tx_power: f64) -> Self {
        self.radio.tx_power = tx_power;
        self
    }

    pub fn with_chi_sq(mut self, chi_sq: f64) -> Self {
        self.rsi.chi_sq = chi_sq;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_slots(mut self, n_slots: usize) -> Self {
        self.n_slots = n_slots;
        self
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol = protocol;
        self
    }
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    pub fn pu(&self) -> ChaCha8Rng {
        self.stream(0)
    }

    /// Signal synthesis for SU `node`.
    pub fn synthesis(&self, node: usize) -> ChaCha8Rng {
        self.stream(1 + 2 * node as u64)
    }

    /// Protocol randomness (backoff draws) for SU `node`.
    pub fn protocol(&self, node: usize) -> ChaCha8Rng {
        self.stream(2 + 2 * node as u64)
    }
}

/// One slot of a timeline, borrowed from its columnar storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord<'a> {
    pub slot_index: u64,
    pub pu_state: PuState,
    pub actions: &'a [SuAction],
    pub decisions: &'a [SensingDecision],
    pub statistics: &'a [f64],
}

impl SlotRecord<'_> {
    pub fn any_transmit(&self) -> bool {
        self.actions.iter().any(|a| a.is_transmit())
    }

    pub fn transmitters(&self) -> usize {
        self.actions.iter().filter(|a| a.is_transmit()).count()
    }
}

/// Per-slot ground truth stored column-wise, `n_sus` entries per slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    n_sus: usize,
    first_slot: u64,
    pu: Vec<PuState>,
    actions: Vec<SuAction>,
    decisions: Vec<SensingDecision>,
    statistics: Vec<f64>,
}

impl Timeline {
    pub fn new(n_sus: usize) -> Self {
        Self {
            n_sus,
            ..Self::default()
        }
    }

    pub fn with_capacity(n_sus: usize, slots: usize) -> Self {
        Self {
            n_sus,
            first_slot: 0,
            pu: Vec::with_capacity(slots),
            actions: Vec::with_capacity(slots * n_sus),
            decisions: Vec::with_capacity(slots * n_sus),
            statistics: Vec::with_capacity(slots * n_sus),
        }
    }

    /// Single-SU timeline from parallel columns; decisions default to the
    /// ones implied by the actions of the following slot being unknown, so
    /// they are taken as `Busy` for silent slots and `Idle` otherwise.
    pub fn single_su(pu: &[PuState], actions: &[SuAction]) -> Self {
        assert_eq!(pu.len(), actions.len());
        let mut t = Self::with_capacity(1, pu.len());
        for (&p, &a) in pu.iter().zip(actions) {
            let d = match a {
                SuAction::Transmit => SensingDecision::Idle,
                SuAction::Silent => SensingDecision::Busy,
            };
            t.push(p, &[a], &[d], &[0.0]);
        }
        t
    }

    pub fn push(
        &mut self,
        pu: PuState,
        actions: &[SuAction],
        decisions: &[SensingDecision],
        statistics: &[f64],
    ) {
        assert!(
            actions.len() == self.n_sus
                && decisions.len() == self.n_sus
                && statistics.len() == self.n_sus,
            "per-SU columns must have one entry per SU"
        );
        self.pu.push(pu);
        self.actions.extend_from_slice(actions);
        self.decisions.extend_from_slice(decisions);
        self.statistics.extend_from_slice(statistics);
    }

    pub fn len(&self) -> usize {
        self.pu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pu.is_empty()
    }

    pub fn n_sus(&self) -> usize {
        self.n_sus
    }

    pub fn view(&self) -> TimelineView<'_> {
        TimelineView {
            n_sus: self.n_sus,
            first_slot: self.first_slot,
            pu: &self.pu,
            actions: &self.actions,
            decisions: &self.decisions,
            statistics: &self.statistics,
        }
    }
}

/// Borrowed window over a [`Timeline`].
#[derive(Debug, Clone, Copy)]
pub struct TimelineView<'a> {
    n_sus: usize,
    first_slot: u64,
    pu: &'a [PuState],
    actions: &'a [SuAction],
    decisions: &'a [SensingDecision],
    statistics: &'a [f64],
}

impl<'a> TimelineView<'a> {
    pub fn len(&self) -> usize {
        self.pu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pu.is_empty()
    }

    pub fn n_sus(&self) -> usize {
        self.n_sus
    }

    pub fn record(&self, k: usize) -> SlotRecord<'a> {
        let m = self.n_sus;
        SlotRecord {
            slot_index: self.first_slot + k as u64,
            pu_state: self.pu[k],
            actions: &self.actions[k * m..(k + 1) * m],
            decisions: &self.decisions[k * m..(k + 1) * m],
            statistics: &self.statistics[k * m..(k + 1) * m],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SlotRecord<'a>> + '_ {
        (0..self.len()).map(move |k| self.record(k))
    }

    /// Drops the first `n` slots (all of them if `n` exceeds the length).
    pub fn skip(&self, n: usize) -> TimelineView<'a> {
        let n = n.min(self.len());
        let m = self.n_sus;
        TimelineView {
            n_sus: m,
            first_slot: self.first_slot + n as u64,
            pu: &self.pu[n..],
            actions: &self.actions[n * m..],
            decisions: &self.decisions[n * m..],
            statistics: &self.statistics[n * m..],
        }
    }

    pub fn pu_states(&self) -> &'a [PuState] {
        self.pu
    }

    /// Action column of one SU.
    pub fn actions_of(&self, su: usize) -> impl Iterator<Item = SuAction> + 'a {
        self.actions
            .iter()
            .skip(su)
            .step_by(self.n_sus.max(1))
            .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketOutcome {
    Completed,
    Aborted,
    /// Still on the air when the simulation ended.
    Truncated,
}

/// One packet transmission in multi-SU mode, slots `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub node: usize,
    pub start: u64,
    pub end: u64,
    pub outcome: PacketOutcome,
}

impl PacketRecord {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: ScenarioConfig,
    /// Empty when the config asked for a thinned trace.
    pub timeline: Timeline,
    /// Running accumulators over the post-warm-up slots.
    pub summary: TraceSummary,
    /// Packet log, multi-SU mode only.
    pub packets: Vec<PacketRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.timeline.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timeline.is_empty()
    }

    /// The timeline after the warm-up slots.
    pub fn measured(&self) -> TimelineView<'_> {
        self.timeline.view().skip(self.config.warmup_slots)
    }
}

struct Recorder {
    timeline: Timeline,
    summary: TraceSummary,
    warmup: usize,
    keep: bool,
}

impl Recorder {
    fn new(config: &ScenarioConfig) -> Self {
        let n_sus = config.n_sus();
        let timeline = if config.thin_trace {
            Timeline::new(n_sus)
        } else {
            Timeline::with_capacity(n_sus, config.n_slots)
        };
        Self {
            timeline,
            summary: TraceSummary::new(n_sus),
            warmup: config.warmup_slots,
            keep: !config.thin_trace,
        }
    }

    fn record(
        &mut self,
        k: usize,
        pu: PuState,
        actions: &[SuAction],
        decisions: &[SensingDecision],
        statistics: &[f64],
    ) {
        if k >= self.warmup {
            self.summary.observe(&SlotRecord {
                slot_index: k as u64,
                pu_state: pu,
                actions,
                decisions,
                statistics,
            });
        }
        if self.keep {
            self.timeline.push(pu, actions, decisions, statistics);
        }
    }

    fn finish(mut self, config: &ScenarioConfig, packets: Vec<PacketRecord>) -> Trace {
        self.summary.finish();
        Trace {
            config: *config,
            timeline: self.timeline,
            summary: self.summary,
            packets,
        }
    }
}

/// Simulate one scenario. Pure in `(config, seed)`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Trace> {
    config.validate()?;
    let streams = RngStreams::new(config.seed);
    match config.protocol {
        Protocol::Lat => Ok(run_lat(config, &streams)?),
        Protocol::Lbt(lbt) => Ok(run_lbt(config, &lbt, &streams)?),
        Protocol::Dsa(dsa) => Ok(run_dsa(config, &dsa, &streams)?),
    }
}

/// Simulate many scenarios, possibly in parallel. The output order and
/// contents equal those of sequential [`run_scenario`] calls.
pub fn run_many(configs: &[ScenarioConfig]) -> Vec<Result<Trace>> {
    configs.par_iter().map(run_scenario).collect()
}

struct PuProcess {
    traffic: PuTrafficModel,
    rng: ChaCha8Rng,
    state: Option<PuState>,
}

impl PuProcess {
    fn new(traffic: PuTrafficModel, streams: &RngStreams) -> Self {
        Self {
            traffic,
            rng: streams.pu(),
            state: None,
        }
    }

    fn advance(&mut self) -> PuState {
        let next = match self.state {
            None => initial_pu_state(&self.traffic, &mut self.rng),
            Some(s) => step_pu_state(&self.traffic, s, &mut self.rng),
        };
        self.state = Some(next);
        next
    }
}

fn run_lat(config: &ScenarioConfig, streams: &RngStreams) -> Result<Trace> {
    let thresholds = make_threshold_pair(
        &config.radio,
        &config.rsi,
        config.n_samples_per_slot,
        config.pd_target,
        config.statistic_model,
    )?;
    let synth = SlotSynthesizer::new(
        config.n_samples_per_slot,
        config.synthesis,
        config.rsi.family,
    )?;
    let own_rsi = rsi_power(&config.rsi, config.radio.tx_power);
    let mut pu = PuProcess::new(config.traffic, streams);
    let mut rng = streams.synthesis(0);
    let mut recorder = Recorder::new(config);
    let mut state = LatState::default();
    for k in 0..config.n_slots {
        let pu_state = pu.advance();
        let action = state.next_action();
        let rsi = if action.is_transmit() { own_rsi } else { 0.0 };
        let statistic = synth.statistic(config.radio.external_power(pu_state), rsi, &mut rng);
        let (next, decision) = state.advance(&thresholds, statistic, action);
        recorder.record(k, pu_state, &[action], &[decision], &[statistic]);
        state = next;
    }
    Ok(recorder.finish(config, Vec::new()))
}

fn run_lbt(config: &ScenarioConfig, lbt: &LbtConfig, streams: &RngStreams) -> Result<Trace> {
    let n_decision = lbt.decision_samples(config.n_samples_per_slot);
    let eps = config.statistic_model.threshold_for_detection_target(
        config.radio.noise_power + config.radio.pu_rx_power,
        n_decision,
        config.pd_target,
    )?;
    // Sensing happens while silent, so RSI never enters.
    let synth = SlotSynthesizer::new(n_decision, config.synthesis, config.rsi.family)?;
    let mut pu = PuProcess::new(config.traffic, streams);
    let mut rng = streams.synthesis(0);
    let mut recorder = Recorder::new(config);
    for k in 0..config.n_slots {
        let pu_state = pu.advance();
        let statistic = synth.statistic(config.radio.external_power(pu_state), 0.0, &mut rng);
        let decision = decide(statistic, eps);
        let action = match decision {
            SensingDecision::Idle => SuAction::Transmit,
            SensingDecision::Busy => SuAction::Silent,
        };
        recorder.record(k, pu_state, &[action], &[decision], &[statistic]);
    }
    Ok(recorder.finish(config, Vec::new()))
}

/// Thresholds used by every node in multi-SU mode.
pub fn dsa_thresholds(config: &ScenarioConfig, dsa: &DsaConfig) -> Result<DsaThresholds> {
    let n = config.n_samples_per_slot;
    let noise = config.radio.noise_power;
    let own_rsi = rsi_power(&config.rsi, config.radio.tx_power);
    let model = config.statistic_model;
    Ok(DsaThresholds {
        eps_idle: model.threshold_for_detection_target(
            noise + config.radio.pu_rx_power,
            n,
            config.pd_target,
        )?,
        eps_collision: model.threshold_for_detection_target(
            noise + own_rsi + dsa.su_cross_power,
            n,
            config.pd_target,
        )?,
        packet_length: dsa.packet_length,
        fd_abort: dsa.fd_abort,
    })
}

fn run_dsa(config: &ScenarioConfig, dsa: &DsaConfig, streams: &RngStreams) -> Result<Trace> {
    let m = dsa.n_sus;
    let thresholds = dsa_thresholds(config, dsa)?;
    let synth = SlotSynthesizer::new(
        config.n_samples_per_slot,
        config.synthesis,
        config.rsi.family,
    )?;
    let own_rsi = rsi_power(&config.rsi, config.radio.tx_power);
    let mut pu = PuProcess::new(config.traffic, streams);
    let mut synth_rngs: Vec<_> = (0..m).map(|i| streams.synthesis(i)).collect();
    let mut proto_rngs: Vec<_> = (0..m).map(|i| streams.protocol(i)).collect();
    let mut nodes = vec![DsaNodeState::new(dsa.backoff_window); m];
    let mut open: Vec<Option<u64>> = vec![None; m];
    let mut packets = Vec::new();
    let mut recorder = Recorder::new(config);

    let mut actions = vec![SuAction::Silent; m];
    let mut decisions = vec![SensingDecision::Busy; m];
    let mut statistics = vec![0.0; m];
    for k in 0..config.n_slots {
        let slot = k as u64;
        let pu_state = pu.advance();
        for (a, node) in actions.iter_mut().zip(&nodes) {
            *a = if node.is_transmitting() {
                SuAction::Transmit
            } else {
                SuAction::Silent
            };
        }
        let n_tx = actions.iter().filter(|a| a.is_transmit()).count();
        for i in 0..m {
            let own_tx = actions[i].is_transmit();
            let others = n_tx - usize::from(own_tx);
            let external =
                config.radio.external_power(pu_state) + dsa.su_cross_power * others as f64;
            let rsi = if own_tx { own_rsi } else { 0.0 };
            statistics[i] = synth.statistic(external, rsi, &mut synth_rngs[i]);
            if own_tx && open[i].is_none() {
                open[i] = Some(slot);
            }
            let (next, decision, event) =
                dsa_step(&nodes[i], statistics[i], &thresholds, &mut proto_rngs[i]);
            let outcome = match event {
                DsaEvent::Aborted => Some(PacketOutcome::Aborted),
                DsaEvent::Completed | DsaEvent::CompletedAndContinued => {
                    Some(PacketOutcome::Completed)
                }
                DsaEvent::None | DsaEvent::Started => None,
            };
            if let Some(outcome) = outcome {
                if let Some(start) = open[i].take() {
                    packets.push(PacketRecord {
                        node: i,
                        start,
                        end: slot + 1,
                        outcome,
                    });
                }
            }
            decisions[i] = decision;
            nodes[i] = next;
        }
        recorder.record(k, pu_state, &actions, &decisions, &statistics);
    }
    for (i, start) in open.iter().enumerate() {
        if let Some(start) = *start {
            packets.push(PacketRecord {
                node: i,
                start,
                end: config.n_slots as u64,
                outcome: PacketOutcome::Truncated,
            });
        }
    }
    Ok(recorder.finish(config, packets))
}
