//! Radio environment: primary-user occupancy, residual self-interference
//! and synthesis of the energy samples seen at the sensing antenna.
//!
//! All powers are linear and normalized (the noise power is usually 1).
//! Every sample is the squared magnitude of a circularly-symmetric complex
//! Gaussian, so per-sample energies are exponential with mean equal to the
//! total received power of the slot.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{check_probability, invalid, Result};

/// Occupancy of the licensed channel during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PuState {
    Busy,
    Idle,
}

impl PuState {
    pub fn is_busy(self) -> bool {
        matches!(self, PuState::Busy)
    }
}

/// Two-state Markov chain driving the primary user, one transition per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuTrafficModel {
    pub p_idle_to_busy: f64,
    pub p_busy_to_idle: f64,
}

impl PuTrafficModel {
    pub fn new(p_idle_to_busy: f64, p_busy_to_idle: f64) -> Result<Self> {
        let model = Self {
            p_idle_to_busy,
            p_busy_to_idle,
        };
        model.validate()?;
        Ok(model)
    }

    /// Same switching probability in both directions (busy fraction 1/2).
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_idle_to_busy", self.p_idle_to_busy)?;
        check_probability("p_busy_to_idle", self.p_busy_to_idle)
    }

    /// Stationary probability of `Busy`; `None` for the frozen chain
    /// where both switching probabilities are zero.
    pub fn stationary_busy(&self) -> Option<f64> {
        let total = self.p_idle_to_busy + self.p_busy_to_idle;
        (total > 0.0).then(|| self.p_idle_to_busy / total)
    }

    pub fn transition(&self, from: PuState, to: PuState) -> f64 {
        match (from, to) {
            (PuState::Idle, PuState::Busy) => self.p_idle_to_busy,
            (PuState::Idle, PuState::Idle) => 1.0 - self.p_idle_to_busy,
            (PuState::Busy, PuState::Idle) => self.p_busy_to_idle,
            (PuState::Busy, PuState::Busy) => 1.0 - self.p_busy_to_idle,
        }
    }
}

/// Advance the PU chain by one slot. Consumes exactly one uniform draw.
pub fn step_pu_state<R: Rng + ?Sized>(
    model: &PuTrafficModel,
    current: PuState,
    rng: &mut R,
) -> PuState {
    let u: f64 = rng.random();
    match current {
        PuState::Idle if u < model.p_idle_to_busy => PuState::Busy,
        PuState::Idle => PuState::Idle,
        PuState::Busy if u < model.p_busy_to_idle => PuState::Idle,
        PuState::Busy => PuState::Busy,
    }
}

/// Draw the first PU state from the stationary distribution (one uniform
/// draw). A frozen chain starts idle.
pub fn initial_pu_state<R: Rng + ?Sized>(model: &PuTrafficModel, rng: &mut R) -> PuState {
    let u: f64 = rng.random();
    match model.stationary_busy() {
        Some(busy) if u < busy => PuState::Busy,
        _ => PuState::Idle,
    }
}

/// Distribution of the residual self-interference across slots.
///
/// `Gaussian` treats the residual as additional white noise. `Rayleigh` and
/// `Rician` keep it Gaussian within a slot but scale its power by a
/// unit-mean fading gain drawn once per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RsiFamily {
    Gaussian,
    Rayleigh,
    Rician { k_factor: f64 },
}

impl RsiFamily {
    /// Per-slot power gain with unit mean. The number of random draws
    /// depends only on the family, so paired runs stay aligned.
    pub fn draw_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RsiFamily::Gaussian => 1.0,
            RsiFamily::Rayleigh => Exp1.sample(rng),
            RsiFamily::Rician { k_factor } => {
                let los = (k_factor / (k_factor + 1.0)).sqrt();
                let scatter = (0.5 / (k_factor + 1.0)).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let (re, im) = (los + scatter * re, scatter * im);
                re * re + im * im
            }
        }
    }
}

/// Residual self-interference: `chi_sq` is RSI power over own transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsiModel {
    pub chi_sq: f64,
    pub family: RsiFamily,
}

impl RsiModel {
    pub fn gaussian(chi_sq: f64) -> Self {
        Self {
            chi_sq,
            family: RsiFamily::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi_sq.is_finite() && self.chi_sq >= 0.0) {
            return Err(invalid("chi_sq", self.chi_sq, "a finite ratio >= 0"));
        }
        if let RsiFamily::Rician { k_factor } = self.family {
            if !(k_factor.is_finite() && k_factor >= 0.0) {
                return Err(invalid("k_factor", k_factor, "a finite ratio >= 0"));
            }
        }
        Ok(())
    }
}

/// Expected interference power delivered to the sensing antenna.
pub fn rsi_power(model: &RsiModel, tx_power: f64) -> f64 {
    model.chi_sq * tx_power
}

/// Linear power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Link-level radio parameters of one scenario.
///
/// The SU₁→SU₂ link SNR is `link_gain * tx_power / noise_power`, so sweeping
/// the transmit power moves the link rate and the RSI together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub noise_power: f64,
    pub pu_rx_power: f64,
    pub link_gain: f64,
    pub tx_power: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(invalid(
                "noise_power",
                self.noise_power,
                "a finite power > 0",
            ));
        }
        for (name, value) in [
            ("pu_rx_power", self.pu_rx_power),
            ("link_gain", self.link_gain),
            ("tx_power", self.tx_power),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(invalid(name, value, "a finite value >= 0"));
            }
        }
        Ok(())
    }

    /// Link SNR γt of the secondary pair.
    pub fn su_link_snr(&self) -> f64 {
        self.link_gain * self.tx_power / self.noise_power
    }

    /// Received power without any self-interference.
    pub fn external_power(&self, pu: PuState) -> f64 {
        self.noise_power + if pu.is_busy() { self.pu_rx_power } else { 0.0 }
    }
}

/// Mean received power at the sensing antenna for one slot.
pub fn expected_rx_power(
    params: &RadioParams,
    pu: PuState,
    su_transmitting: bool,
    rsi: &RsiModel,
) -> f64 {
    let own = if su_transmitting {
        rsi_power(rsi, params.tx_power)
    } else {
        0.0
    };
    params.external_power(pu) + own
}

/// Sample energies for one slot, each the squared magnitude of a complex
/// Gaussian whose power is the slot's (fading-conditioned) received power.
pub fn gen_slot_samples<R: Rng + ?Sized>(
    params: &RadioParams,
    pu: PuState,
    su_transmitting: bool,
    rsi: &RsiModel,
    n_samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let own = if su_transmitting {
        rsi_power(rsi, params.tx_power)
    } else {
        0.0
    };
    let gain = rsi.family.draw_gain(rng);
    complex_gaussian_energies(params.external_power(pu) + gain * own, n_samples, rng)
}

pub(crate) fn complex_gaussian_energies<R: Rng + ?Sized>(
    power: f64,
    n_samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let half = 0.5 * power;
    (0..n_samples)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            half * (re * re + im * im)
        })
        .collect()
}

/// How the engine produces a slot's energy statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Synthesis {
    /// Draw the slot mean directly: the mean of `n` exponential energies
    /// with mean `P` is Gamma(n, P/n).
    #[default]
    Statistic,
    /// Generate every complex sample and average the energies.
    Samples,
}

/// Produces per-slot energy statistics for a fixed sample count.
#[derive(Debug, Clone)]
pub struct SlotSynthesizer {
    n_samples: usize,
    synthesis: Synthesis,
    family: RsiFamily,
    unit_mean: Gamma<f64>,
}

impl SlotSynthesizer {
    pub fn new(n_samples: usize, synthesis: Synthesis, family: RsiFamily) -> Result<Self> {
        if n_samples == 0 {
            return Err(invalid(
                "n_samples",
                n_samples,
                "at least one sample per slot",
            ));
        }
        let n = n_samples as f64;
        let unit_mean =
            Gamma::new(n, 1.0 / n).map_err(|_| invalid("n_samples", n_samples, ">= 1"))?;
        Ok(Self {
            n_samples,
            synthesis,
            family,
            unit_mean,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Statistic for a slot whose power is `external` plus `own_rsi` scaled
    /// by a per-slot fading gain. The number of draws per call is fixed for
    /// a given synthesizer, whatever the powers are.
    pub fn statistic<R: Rng + ?Sized>(&self, external: f64, own_rsi: f64, rng: &mut R) -> f64 {
        let gain = self.family.draw_gain(rng);
        let power = external + gain * own_rsi;
        match self.synthesis {
            Synthesis::Statistic => power * self.unit_mean.sample(rng),
            Synthesis::Samples => {
                let energies = complex_gaussian_energies(power, self.n_samples, rng);
                energies.iter().sum::<f64>() / self.n_samples as f64
            }
        }
    }
}
