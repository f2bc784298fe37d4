//! Energy detection: test statistic, false-alarm and detection
//! probabilities, and threshold design for a target detection rate.
//!
//! With complex Gaussian samples the slot statistic (mean of `n` energies of
//! mean `P`) is exactly Gamma(n, P/n), so tail probabilities are regularized
//! upper incomplete gamma functions. The central-limit approximation
//! `Q((t/P - 1)·√n)` is kept alongside as [`StatisticModel::Gaussian`].

use std::f64::consts::SQRT_2;

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::radio::{rsi_power, RadioParams, RsiModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensingDecision {
    Busy,
    Idle,
}

/// Thresholds chosen by activity: the SU checks whether it transmitted
/// during the sensed slot and picks the matching one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub eps_silent: f64,
    pub eps_active: f64,
}

impl ThresholdPair {
    pub fn for_activity(&self, transmitting: bool) -> f64 {
        if transmitting {
            self.eps_active
        } else {
            self.eps_silent
        }
    }
}

/// Mean energy of a slot's samples.
pub fn energy_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySlot);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// `Busy` iff the statistic strictly exceeds the threshold.
pub fn decide(statistic: f64, threshold: f64) -> SensingDecision {
    if statistic > threshold {
        SensingDecision::Busy
    } else {
        SensingDecision::Idle
    }
}

/// Standard Gaussian tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on (0, 1).
pub fn q_inverse(p: f64) -> f64 {
    let x = SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // One Newton step against the more accurate forward function.
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density > 0.0 {
        x + (q_function(x) - p) / density
    } else {
        x
    }
}

/// Distributional model used to turn thresholds into probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatisticModel {
    /// Exact Gamma law of the averaged exponential energies.
    #[default]
    Exact,
    /// Central-limit approximation: mean `P`, variance `P²/n`.
    Gaussian,
}

impl StatisticModel {
    /// `P(statistic > threshold)` when the slot power is `power`.
    pub fn exceedance(self, threshold: f64, power: f64, n_samples: usize) -> f64 {
        match self {
            StatisticModel::Exact => gamma_tail(threshold, power, n_samples),
            StatisticModel::Gaussian => gaussian_tail(threshold, power, n_samples),
        }
    }

    /// Threshold whose exceedance probability under `h1_power` is `pd_target`.
    pub fn threshold_for_detection_target(
        self,
        h1_power: f64,
        n_samples: usize,
        pd_target: f64,
    ) -> Result<f64> {
        check_target(pd_target)?;
        if !(h1_power.is_finite() && h1_power > 0.0) {
            return Err(invalid("h1_power", h1_power, "a finite power > 0"));
        }
        if n_samples == 0 {
            return Err(invalid("n_samples", n_samples, ">= 1"));
        }
        let n = n_samples as f64;
        Ok(match self {
            StatisticModel::Exact => h1_power * upper_gamma_quantile(n, pd_target) / n,
            StatisticModel::Gaussian => {
                (h1_power * (1.0 + q_inverse(pd_target) / n.sqrt())).max(0.0)
            }
        })
    }
}

fn check_target(pd_target: f64) -> Result<()> {
    if pd_target > 0.0 && pd_target < 1.0 {
        Ok(())
    } else {
        Err(invalid("pd_target", pd_target, "a probability in (0, 1)"))
    }
}

fn gamma_tail(threshold: f64, power: f64, n_samples: usize) -> f64 {
    if threshold <= 0.0 {
        return 1.0;
    }
    if threshold.is_infinite() {
        return 0.0;
    }
    let n = n_samples as f64;
    gamma_ur(n, n * threshold / power).clamp(0.0, 1.0)
}

fn gaussian_tail(threshold: f64, power: f64, n_samples: usize) -> f64 {
    if threshold.is_infinite() {
        return 0.0;
    }
    q_function((threshold / power - 1.0) * (n_samples as f64).sqrt())
}

/// Solves `gamma_ur(a, x) = p` for `x`: Newton steps inside a shrinking
/// bracket, falling back to bisection when a step leaves it.
fn upper_gamma_quantile(a: f64, p: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { gamma_ur(a, x) - p } else { 1.0 - p };
    let (mut lo, mut hi) = (0.0_f64, a + 10.0 * a.sqrt() + 10.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // Wilson-Hilferty start.
    let z = q_inverse(p);
    let c = 1.0 / (9.0 * a);
    let mut x = (a * (1.0 - c + z * c.sqrt()).powi(3)).clamp(lo, hi);
    let ln_gamma_a = ln_gamma(a);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() - x - ln_gamma_a).exp();
        let newton = x + fx / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// False-alarm probability: the statistic exceeds `threshold` while the
/// slot holds only `h0_power` (noise, plus own RSI when transmitting).
pub fn analytic_false_alarm(threshold: f64, h0_power: f64, n_samples: usize) -> f64 {
    gamma_tail(threshold, h0_power, n_samples)
}

/// Detection probability under the occupied hypothesis of power `h1_power`.
pub fn analytic_detection(threshold: f64, h1_power: f64, n_samples: usize) -> f64 {
    gamma_tail(threshold, h1_power, n_samples)
}

/// Inverse of [`analytic_detection`] in the threshold.
pub fn threshold_for_detection_target(
    h1_power: f64,
    n_samples: usize,
    pd_target: f64,
) -> Result<f64> {
    StatisticModel::Exact.threshold_for_detection_target(h1_power, n_samples, pd_target)
}

/// Central-limit false-alarm probability `Q((t/P₀ - 1)·√n)`.
pub fn gaussian_false_alarm(threshold: f64, h0_power: f64, n_samples: usize) -> f64 {
    gaussian_tail(threshold, h0_power, n_samples)
}

/// Central-limit detection probability `Q((t/P₁ - 1)·√n)`.
pub fn gaussian_detection(threshold: f64, h1_power: f64, n_samples: usize) -> f64 {
    gaussian_tail(threshold, h1_power, n_samples)
}

/// `P₁·(1 + Q⁻¹(pd)/√n)`, clamped at zero.
pub fn gaussian_threshold_for_detection_target(
    h1_power: f64,
    n_samples: usize,
    pd_target: f64,
) -> Result<f64> {
    StatisticModel::Gaussian.threshold_for_detection_target(h1_power, n_samples, pd_target)
}

/// Silent and active thresholds that both meet `pd_target` against the PU.
/// The active one sits on a noise floor raised by the expected RSI.
pub fn make_threshold_pair(
    params: &RadioParams,
    rsi: &RsiModel,
    n_samples: usize,
    pd_target: f64,
    model: StatisticModel,
) -> Result<ThresholdPair> {
    let h1_silent = params.noise_power + params.pu_rx_power;
    let h1_active = h1_silent + rsi_power(rsi, params.tx_power);
    Ok(ThresholdPair {
        eps_silent: model.threshold_for_detection_target(h1_silent, n_samples, pd_target)?,
        eps_active: model.threshold_for_detection_target(h1_active, n_samples, pd_target)?,
    })
}
