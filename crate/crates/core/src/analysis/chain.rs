//! Closed-form prediction from the joint (PU state, SU action) chain.
//!
//! Under LAT the action in slot `k+1` depends on the decision taken in slot
//! `k`, which in turn depends on the PU state and the SU's own action in
//! slot `k`. That makes the case sequence a 4-state Markov chain whose
//! transition probability factors into the PU transition and the sensing
//! outcome. LBT acts on the same slot it senses, so its case distribution
//! is the PU stationary law times the per-state decision probabilities.

use crate::engine::{Protocol, ScenarioConfig};
use crate::error::{Error, Result};
use crate::metrics::{rate, Case, Metrics};
use crate::radio::{rsi_power, PuState, PuTrafficModel, RsiFamily};
use crate::sensing::make_threshold_pair;

/// Detection behaviour of one SU, split by its own activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingProbabilities {
    pub pf_silent: f64,
    pub pd_silent: f64,
    pub pf_active: f64,
    pub pd_active: f64,
}

impl SensingProbabilities {
    pub const PERFECT: Self = Self {
        pf_silent: 0.0,
        pd_silent: 1.0,
        pf_active: 0.0,
        pd_active: 1.0,
    };

    /// The same detector whether silent or transmitting.
    pub fn uniform(pf: f64, pd: f64) -> Self {
        Self {
            pf_silent: pf,
            pd_silent: pd,
            pf_active: pf,
            pd_active: pd,
        }
    }

    /// Probability of deciding "idle" (and so transmitting next) given the
    /// PU state and the SU's own activity during the sensed slot.
    fn p_idle(&self, pu: PuState, transmitting: bool) -> f64 {
        match (pu, transmitting) {
            (PuState::Idle, false) => 1.0 - self.pf_silent,
            (PuState::Busy, false) => 1.0 - self.pd_silent,
            (PuState::Idle, true) => 1.0 - self.pf_active,
            (PuState::Busy, true) => 1.0 - self.pd_active,
        }
    }
}

/// Transition matrix over [`Case::ALL`], rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChain {
    pub traffic: PuTrafficModel,
    pub sensing: SensingProbabilities,
    pub matrix: [[f64; 4]; 4],
}

const MAX_ITERATIONS: usize = 10_000_000;
const TOLERANCE: f64 = 1e-12;

impl JointChain {
    pub fn lat(traffic: PuTrafficModel, sensing: SensingProbabilities) -> Self {
        let mut matrix = [[0.0; 4]; 4];
        for from in Case::ALL {
            let go = sensing.p_idle(from.pu_state(), from.su_transmits());
            for to in Case::ALL {
                let pu = traffic.transition(from.pu_state(), to.pu_state());
                let act = if to.su_transmits() { go } else { 1.0 - go };
                matrix[from.index()][to.index()] = pu * act;
            }
        }
        Self {
            traffic,
            sensing,
            matrix,
        }
    }

    /// Closed communicating classes of the chain.
    pub fn closed_classes(&self) -> Vec<Vec<Case>> {
        let mut reach = [[false; 4]; 4];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
            for (j, r) in row.iter_mut().enumerate() {
                *r |= self.matrix[i][j] > 0.0;
            }
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    reach[i][j] |= reach[i][k] && reach[k][j];
                }
            }
        }
        let mut classes: Vec<Vec<Case>> = Vec::new();
        for (i, row) in reach.iter().enumerate() {
            let class: Vec<Case> = (0..4)
                .filter(|&j| row[j] && reach[j][i])
                .map(|j| Case::ALL[j])
                .collect();
            // Closed: nothing outside the class is reachable from it.
            let closed = (0..4).all(|j| !row[j] || reach[j][i]);
            if closed && !classes.contains(&class) {
                classes.push(class);
            }
        }
        classes
    }

    /// Stationary distribution by power iteration on the lazy chain.
    pub fn stationary(&self) -> Result<[f64; 4]> {
        let classes = self.closed_classes();
        if classes.len() != 1 {
            return Err(Error::NonErgodic(classes));
        }
        let mut pi = [0.25; 4];
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let mut next = [0.0; 4];
            for (i, &p) in pi.iter().enumerate() {
                for (j, n) in next.iter_mut().enumerate() {
                    *n += p * self.matrix[i][j];
                }
            }
            for (n, &p) in next.iter_mut().zip(&pi) {
                *n = 0.5 * (*n + p);
            }
            let total: f64 = next.iter().sum();
            for n in next.iter_mut() {
                *n /= total;
            }
            residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if residual < TOLERANCE {
                return Ok(pi);
            }
        }
        Err(Error::NotConverged {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

/// Per-state sensing probabilities of a LAT scenario.
pub fn lat_sensing_probabilities(config: &ScenarioConfig) -> Result<SensingProbabilities> {
    gaussian_rsi_only(config)?;
    let r = &config.radio;
    let n = config.n_samples_per_slot;
    let model = config.statistic_model;
    let pair = make_threshold_pair(r, &config.rsi, n, config.pd_target, model)?;
    let rsi = rsi_power(&config.rsi, r.tx_power);
    let h0 = r.noise_power;
    let h1 = r.noise_power + r.pu_rx_power;
    Ok(SensingProbabilities {
        pf_silent: model.exceedance(pair.eps_silent, h0, n),
        pd_silent: model.exceedance(pair.eps_silent, h1, n),
        pf_active: model.exceedance(pair.eps_active, h0 + rsi, n),
        pd_active: model.exceedance(pair.eps_active, h1 + rsi, n),
    })
}

fn gaussian_rsi_only(config: &ScenarioConfig) -> Result<()> {
    match config.rsi.family {
        RsiFamily::Gaussian => Ok(()),
        other => Err(Error::Unsupported(format!(
            "closed-form prediction with {other:?} residual self-interference"
        ))),
    }
}

/// Stationary case probabilities of a LAT scenario.
pub fn lat_case_probabilities(config: &ScenarioConfig) -> Result<[f64; 4]> {
    JointChain::lat(config.traffic, lat_sensing_probabilities(config)?).stationary()
}

/// Collision ratio left by a perfect LAT detector: the PU can only be hit
/// in the first slot after it returns, before the SU has heard it.
pub fn perfect_sensing_collision_floor(traffic: PuTrafficModel) -> Result<f64> {
    let pi = JointChain::lat(traffic, SensingProbabilities::PERFECT).stationary()?;
    let busy = pi[Case::BusySilent.index()] + pi[Case::BusyTransmit.index()];
    Ok(pi[Case::BusyTransmit.index()] / busy)
}

fn lat_metrics(config: &ScenarioConfig, sensing: SensingProbabilities) -> Result<Metrics> {
    let pi = JointChain::lat(config.traffic, sensing).stationary()?;
    let [c1, c2, c3, c4] = pi;
    let false_alarm = (c2 * sensing.pf_active + c3 * sensing.pf_silent) / (c2 + c3);
    let missed = (c1 * (1.0 - sensing.pd_silent) + c4 * (1.0 - sensing.pd_active)) / (c1 + c4);
    // A collision run continues while the PU stays and the SU misses it.
    let stay = (1.0 - config.traffic.p_busy_to_idle) * (1.0 - sensing.pd_active);
    let duration = (c4 > 0.0).then(|| 1.0 / (1.0 - stay));
    Metrics::from_case_fractions(pi, false_alarm, missed, duration, config.rate())
}

fn lbt_metrics(config: &ScenarioConfig, tau: f64) -> Result<Metrics> {
    let lbt = crate::protocols::LbtConfig::new(tau)?;
    let n = lbt.decision_samples(config.n_samples_per_slot);
    let r = &config.radio;
    let model = config.statistic_model;
    let eps =
        model.threshold_for_detection_target(r.noise_power + r.pu_rx_power, n, config.pd_target)?;
    let pf = model.exceedance(eps, r.noise_power, n);
    let pd = model.exceedance(eps, r.noise_power + r.pu_rx_power, n);
    let busy = config
        .traffic
        .stationary_busy()
        .ok_or_else(|| Error::Unsupported("PU chain without a unique stationary law".into()))?;
    let idle = 1.0 - busy;
    let fractions = [busy * pd, idle * (1.0 - pf), idle * pf, busy * (1.0 - pd)];
    let stay = (1.0 - config.traffic.p_busy_to_idle) * (1.0 - pd);
    let duration = (fractions[3] > 0.0).then(|| 1.0 / (1.0 - stay));
    let rate = rate(r.su_link_snr()) * lbt.airtime();
    Metrics::from_case_fractions(fractions, pf, 1.0 - pd, duration, rate)
}

/// Closed-form metrics for a LAT or LBT scenario.
pub fn analytic_metrics(config: &ScenarioConfig) -> Result<Metrics> {
    config.validate()?;
    match config.protocol {
        Protocol::Lat => lat_metrics(config, lat_sensing_probabilities(config)?),
        Protocol::Lbt(c) => lbt_metrics(config, c.sensing_fraction()),
        Protocol::Dsa(_) => Err(Error::Unsupported(
            "closed-form prediction for multi-SU contention".into(),
        )),
    }
}

/// Analytic throughput of LBT with sensing fraction `tau`, the other
/// parameters taken from `config`.
pub fn analytic_lbt_throughput(config: &ScenarioConfig, tau: f64) -> Result<f64> {
    Ok(lbt_metrics(config, tau)?.throughput)
}
