use crate::engine::{run_many, Protocol, ScenarioConfig};
use crate::error::{invalid, Result};
use crate::metrics::Metrics;
use crate::protocols::LbtConfig;

use super::chain::analytic_metrics;

/// Sensing fractions tried for LBT when none are given.
pub const DEFAULT_TAUS: [f64; 8] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct LbtPoint {
    pub tau: f64,
    pub simulated: Metrics,
    pub analytic_throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub tx_power: f64,
    pub lat: Metrics,
    pub lat_analytic_throughput: f64,
    pub lbt: Vec<LbtPoint>,
    /// Index into `lbt` of the highest simulated throughput.
    pub best: usize,
}

impl CompareRow {
    pub fn best_lbt(&self) -> &LbtPoint {
        &self.lbt[self.best]
    }

    /// LAT simulated throughput minus the best LBT simulated throughput.
    pub fn lat_advantage(&self) -> f64 {
        self.lat.throughput - self.best_lbt().simulated.throughput
    }
}

/// LAT against LBT at each power, LBT tried at every sensing fraction.
/// All runs at a power share the base seed, hence the PU trajectory.
pub fn compare_lat_lbt(
    base: &ScenarioConfig,
    powers: &[f64],
    taus: &[f64],
) -> Result<Vec<CompareRow>> {
    if taus.is_empty() {
        return Err(invalid("taus", "[]", "at least one sensing fraction"));
    }
    let lbts = taus
        .iter()
        .map(|&t| LbtConfig::new(t))
        .collect::<Result<Vec<_>>>()?;
    let per_power = 1 + lbts.len();
    let mut configs = Vec::with_capacity(powers.len() * per_power);
    for &p in powers {
        let cfg = ScenarioConfig {
            thin_trace: true,
            ..base.with_tx_power(p)
        };
        configs.push(cfg.with_protocol(Protocol::Lat));
        configs.extend(lbts.iter().map(|&l| cfg.with_protocol(Protocol::Lbt(l))));
    }
    for c in &configs {
        c.validate()?;
    }
    let traces = run_many(&configs);
    let metrics = traces
        .into_iter()
        .map(|t| t.and_then(|t| Metrics::from_trace(&t)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(powers.len());
    for (k, &p) in powers.iter().enumerate() {
        let chunk = &metrics[k * per_power..(k + 1) * per_power];
        let cfgs = &configs[k * per_power..(k + 1) * per_power];
        let lbt = chunk[1..]
            .iter()
            .zip(&cfgs[1..])
            .zip(&lbts)
            .map(|((m, c), l)| {
                Ok(LbtPoint {
                    tau: l.sensing_fraction(),
                    simulated: *m,
                    analytic_throughput: analytic_metrics(c)?.throughput,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let best = (0..lbt.len())
            .max_by(|&a, &b| {
                lbt[a]
                    .simulated
                    .throughput
                    .total_cmp(&lbt[b].simulated.throughput)
                    .then(b.cmp(&a))
            })
            .expect("at least one tau");
        rows.push(CompareRow {
            tx_power: p,
            lat: chunk[0],
            lat_analytic_throughput: analytic_metrics(&cfgs[0])?.throughput,
            lbt,
            best,
        });
    }
    Ok(rows)
}
