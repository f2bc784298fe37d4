//! Quick analytic-against-Monte-Carlo checks, runnable from the binary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use fdcr::analysis::{analytic_metrics, lat_case_probabilities};
use fdcr::engine::{run_scenario, Protocol, ScenarioConfig};
use fdcr::metrics::{collision_ratio_of, waste_ratio_of, Metrics};
use fdcr::protocols::LbtConfig;
use fdcr::sensing::{q_function, q_inverse, StatisticModel};

use crate::output::fmt_num;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Fraction of `trials` slot means of `n` unit exponentials, scaled by
/// `power`, that exceed `threshold`.
fn monte_carlo_tail(threshold: f64, power: f64, n: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..trials)
        .filter(|_| {
            let sum: f64 = (0..n).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum();
            sum * power / n as f64 > threshold
        })
        .count();
    hits as f64 / trials as f64
}

fn gaussian_tail_checks() -> Vec<Check> {
    let table = [
        (0.0, 0.5),
        (1.0, 0.158_655_253_931_457),
        (2.0, 0.022_750_131_948_179_2),
    ];
    let worst = table
        .iter()
        .map(|&(x, q)| (q_function(x) - q).abs().max((q_inverse(q) - x).abs()))
        .fold(0.0, f64::max);
    vec![Check::new(
        "q_function_table",
        worst < 1e-8,
        format!("max error {worst:e}"),
    )]
}

fn detector_checks() -> Vec<Check> {
    let trials = 100_000;
    let mut out = Vec::new();
    for (k, &n) in [50usize, 100].iter().enumerate() {
        for (j, &p) in [0.1, 0.5, 0.9].iter().enumerate() {
            let model = StatisticModel::Exact;
            let t = model
                .threshold_for_detection_target(1.0, n, p)
                .expect("valid target");
            let mc = monte_carlo_tail(t, 1.0, n, trials, 1000 + (k * 10 + j) as u64);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            out.push(Check::new(
                format!("exceedance n={n} p={p}"),
                (mc - p).abs() < 4.0 * sigma,
                format!("monte carlo {} vs {}", fmt_num(mc), fmt_num(p)),
            ));
        }
    }
    out
}

fn chain_checks() -> Vec<Check> {
    let base = ScenarioConfig::default().with_slots(100_000);
    let mut out = Vec::new();
    for chi in [0.0, 0.01, 0.1] {
        let cfg = base.with_chi_sq(chi).with_tx_power(100.0);
        let check = (|| {
            let pi = lat_case_probabilities(&cfg).ok()?;
            let trace = run_scenario(&cfg).ok()?;
            let m = Metrics::from_trace(&trace).ok()?;
            let same = collision_ratio_of(trace.measured()).ok()? == m.collision_ratio
                && waste_ratio_of(trace.measured()).ok()? == m.waste_ratio;
            let gap = pi
                .iter()
                .zip(&m.case_fractions)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Some((gap, same))
        })();
        out.push(match check {
            Some((gap, same)) => Check::new(
                format!("case fractions chi_sq={}", fmt_num(chi)),
                gap < 0.01 && same,
                format!("max gap {}, rescans agree: {same}", fmt_num(gap)),
            ),
            None => Check::new(
                format!("case fractions chi_sq={}", fmt_num(chi)),
                false,
                "run failed".into(),
            ),
        });
    }
    let lbt = base.with_protocol(Protocol::Lbt(LbtConfig::new(0.15).expect("valid tau")));
    let sim = run_scenario(&lbt)
        .ok()
        .and_then(|t| Metrics::from_trace(&t).ok());
    let ana = analytic_metrics(&lbt).ok();
    out.push(match (sim, ana) {
        (Some(s), Some(a)) => Check::new(
            "lbt throughput",
            (s.throughput - a.throughput).abs() < 0.02 * a.rate,
            format!(
                "simulated {} vs analytic {}",
                fmt_num(s.throughput),
                fmt_num(a.throughput)
            ),
        ),
        _ => Check::new("lbt throughput", false, "run failed".into()),
    });
    out
}

pub fn run_selftest() -> Vec<Check> {
    let mut checks = gaussian_tail_checks();
    checks.extend(detector_checks());
    checks.extend(chain_checks());
    checks
}
