use crate::engine::{run_many, Protocol, ScenarioConfig};
use crate::error::{invalid, Result};
use crate::metrics::Metrics;

use super::chain::analytic_metrics;

/// `n` points spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(invalid("grid", format!("{lo}..{hi}"), "0 < lo <= hi < inf"));
    }
    match n {
        0 => Err(invalid("grid points", 0, "at least one point")),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            Ok((0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect())
        }
    }
}

/// Forty transmit powers from 5 dB to 45 dB above the noise floor.
pub fn default_power_grid() -> Vec<f64> {
    log_grid(10f64.powf(0.5), 10f64.powf(4.5), 40).expect("static grid is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    None,
    /// Running median of three, endpoints kept.
    Median3,
}

fn smooth(values: &[f64], smoothing: Smoothing) -> Vec<f64> {
    match smoothing {
        Smoothing::None => values.to_vec(),
        Smoothing::Median3 => {
            let mut out = values.to_vec();
            for i in 1..values.len().saturating_sub(1) {
                let mut w = [values[i - 1], values[i], values[i + 1]];
                w.sort_by(f64::total_cmp);
                out[i] = w[1];
            }
            out
        }
    }
}

/// Indices of strict interior local maxima.
pub fn interior_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// First interior peak of `values`, allowing a flat top: a run of equal
/// values with a strictly lower neighbour on each side. Returns the run.
fn first_plateau_peak(values: &[f64]) -> Option<(usize, usize)> {
    let mut i = 1;
    while i + 1 < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 < values.len() && values[i - 1] < values[i] && values[j + 1] < values[i] {
            return Some((i, j));
        }
        i = j + 1;
    }
    None
}

/// The first interior local maximum of `(x, y)` points, located on the
/// optionally smoothed curve and reported as the highest raw point of that
/// peak. A running median turns a sharp peak into a short plateau, so flat
/// tops count. `None` when the curve has no interior peak (monotone curves,
/// fewer than three points).
pub fn find_local_optimum(curve: &[(f64, f64)], smoothing: Smoothing) -> Option<(f64, f64)> {
    let ys: Vec<f64> = curve.iter().map(|p| p.1).collect();
    let smoothed = smooth(&ys, smoothing);
    let (lo, hi) = first_plateau_peak(&smoothed)?;
    curve[lo..=hi]
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tx_power: f64,
    pub simulated: Result<Metrics>,
    pub analytic: Result<Metrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweepResult {
    pub chi_sq: f64,
    pub points: Vec<SweepPoint>,
    /// Peak of the analytic curve.
    pub analytic_optimum: Option<(f64, f64)>,
    /// Peak of the median-smoothed simulated curve.
    pub simulated_optimum: Option<(f64, f64)>,
}

impl PowerSweepResult {
    fn curve(&self, pick: impl Fn(&SweepPoint) -> Option<f64>) -> Option<Vec<(f64, f64)>> {
        self.points
            .iter()
            .map(|p| pick(p).map(|c| (p.tx_power, c)))
            .collect()
    }

    /// `(tx_power, C)` of the simulation, `None` if any point failed.
    pub fn simulated_curve(&self) -> Option<Vec<(f64, f64)>> {
        self.curve(|p| p.simulated.as_ref().ok().map(|m| m.throughput))
    }

    pub fn analytic_curve(&self) -> Option<Vec<(f64, f64)>> {
        self.curve(|p| p.analytic.as_ref().ok().map(|m| m.throughput))
    }
}

/// Simulate and predict throughput across a transmit-power grid. All points
/// share the base seed, so the PU trajectory is common to the whole curve.
/// Per-point failures are kept in the result rather than aborting.
/// Single-SU runs keep only their summaries; multi-SU runs need the full
/// timeline and keep it.
pub fn power_sweep(base: &ScenarioConfig, grid: &[f64]) -> Result<PowerSweepResult> {
    base.validate()?;
    let configs: Vec<ScenarioConfig> = grid
        .iter()
        .map(|&p| ScenarioConfig {
            thin_trace: !matches!(base.protocol, Protocol::Dsa(_)),
            ..base.with_tx_power(p)
        })
        .collect();
    let traces = run_many(&configs);
    let points: Vec<SweepPoint> = traces
        .into_iter()
        .zip(&configs)
        .map(|(trace, cfg)| SweepPoint {
            tx_power: cfg.radio.tx_power,
            simulated: trace.and_then(|t| Metrics::from_trace(&t)),
            analytic: analytic_metrics(cfg),
        })
        .collect();
    let mut result = PowerSweepResult {
        chi_sq: base.rsi.chi_sq,
        points,
        analytic_optimum: None,
        simulated_optimum: None,
    };
    result.analytic_optimum = result
        .analytic_curve()
        .and_then(|c| find_local_optimum(&c, Smoothing::None));
    result.simulated_optimum = result
        .simulated_curve()
        .and_then(|c| find_local_optimum(&c, Smoothing::Median3));
    Ok(result)
}
