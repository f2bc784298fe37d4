//! Subcommand bodies. Each builds its output files in memory; writing and
//! the manifest are handled by the caller so that every command produces
//! the same kind of reproducible bundle.

use fdcr::analysis::{analytic_metrics, compare_lat_lbt, power_sweep};
use fdcr::engine::{run_many, run_scenario, Protocol, ScenarioConfig, Trace};
use fdcr::metrics::{DsaMetrics, Metrics};
use fdcr::radio::linear_to_db;
use fdcr::sensing::SensingDecision;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{fmt_num, fmt_opt, Csv};

/// Named output files plus a short human-readable report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Vec<String>,
}

impl Outputs {
    fn add(&mut self, name: &str, csv: &Csv) -> Result<(), CliError> {
        self.files.push((name.to_string(), csv.to_bytes()?));
        Ok(())
    }
}

fn protocol_label(p: &Protocol) -> String {
    match p {
        Protocol::Lat => "lat".into(),
        Protocol::Lbt(c) => format!("lbt(tau={})", fmt_num(c.sensing_fraction())),
        Protocol::Dsa(d) => format!(
            "dsa(m={},{})",
            d.n_sus,
            if d.fd_abort { "fd" } else { "hd" }
        ),
    }
}

const METRICS_HEADER: [&str; 19] = [
    "protocol",
    "n_sus",
    "tx_power",
    "chi_sq",
    "rate",
    "C",
    "C_analytic",
    "goodput",
    "Pc",
    "Pc_analytic",
    "Pw",
    "Pw_analytic",
    "Pf",
    "Pmd",
    "mean_collision_duration",
    "case1",
    "case2",
    "case3",
    "case4",
];

fn metrics_row(cfg: &ScenarioConfig, m: &Metrics, analytic: Option<&Metrics>) -> Vec<String> {
    let mut row = vec![
        protocol_label(&cfg.protocol),
        cfg.n_sus().to_string(),
        fmt_num(cfg.radio.tx_power),
        fmt_num(cfg.rsi.chi_sq),
        fmt_num(m.rate),
        fmt_num(m.throughput),
        fmt_opt(analytic.map(|a| a.throughput)),
        fmt_num(m.goodput),
        fmt_num(m.collision_ratio),
        fmt_opt(analytic.map(|a| a.collision_ratio)),
        fmt_num(m.waste_ratio),
        fmt_opt(analytic.map(|a| a.waste_ratio)),
        fmt_num(m.false_alarm_rate),
        fmt_num(m.missed_detection_rate),
        fmt_opt(m.mean_collision_duration),
    ];
    row.extend(m.case_fractions.iter().map(|&f| fmt_num(f)));
    row
}

fn summary_csv(trace: &Trace) -> Csv {
    let s = &trace.summary;
    let mut csv = Csv::new(&["quantity", "value"]);
    let mut put = |k: &str, v: String| csv.push(vec![k.to_string(), v]);
    put("n_slots", trace.config.n_slots.to_string());
    put("warmup_slots", trace.config.warmup_slots.to_string());
    put("measured_slots", s.slots().to_string());
    for (i, c) in s.case_counts().iter().enumerate() {
        put(&format!("case{}_slots", i + 1), c.to_string());
    }
    put("collision_runs", s.collision_runs().len().to_string());
    put(
        "longest_collision_run",
        s.collision_runs()
            .iter()
            .max()
            .copied()
            .unwrap_or(0)
            .to_string(),
    );
    put("packets", trace.packets.len().to_string());
    csv
}

fn trace_csv(trace: &Trace) -> Csv {
    let mut csv = Csv::new(&["slot", "su", "pu", "action", "decision", "statistic"]);
    for r in trace.timeline.view().iter() {
        for su in 0..r.actions.len() {
            csv.push(vec![
                r.slot_index.to_string(),
                su.to_string(),
                if r.pu_state.is_busy() { "busy" } else { "idle" }.to_string(),
                if r.actions[su].is_transmit() {
                    "transmit"
                } else {
                    "silent"
                }
                .to_string(),
                match r.decisions[su] {
                    SensingDecision::Busy => "busy",
                    SensingDecision::Idle => "idle",
                }
                .to_string(),
                fmt_num(r.statistics[su]),
            ]);
        }
    }
    csv
}

/// One scenario: metrics (one row), trace summary, optionally the full trace.
pub fn cmd_run(settings: &Settings, dump_trace: bool) -> Result<Outputs, CliError> {
    let cfg = &settings.scenario;
    if dump_trace && cfg.thin_trace {
        return Err(CliError::Config(
            "--trace needs the per-slot timeline; unset [sim] thin_trace".into(),
        ));
    }
    let trace = run_scenario(cfg)?;
    let m = Metrics::from_trace(&trace)?;
    let analytic = analytic_metrics(cfg).ok();
    let mut out = Outputs::default();
    let mut metrics = Csv::new(&METRICS_HEADER);
    metrics.push(metrics_row(cfg, &m, analytic.as_ref()));
    out.add("metrics.csv", &metrics)?;
    out.add("summary.csv", &summary_csv(&trace))?;
    if dump_trace {
        out.add("trace.csv", &trace_csv(&trace))?;
    }
    out.report.push(format!(
        "{}: C = {} of R = {} (Pw = {}, Pc = {})",
        protocol_label(&cfg.protocol),
        fmt_num(m.throughput),
        fmt_num(m.rate),
        fmt_num(m.waste_ratio),
        fmt_num(m.collision_ratio)
    ));
    Ok(out)
}

fn curve_id(chi: f64) -> String {
    format!("chi_sq={}", fmt_num(chi))
}

/// Power-throughput curves, one per configured chi_sq.
pub fn cmd_sweep(settings: &Settings) -> Result<Outputs, CliError> {
    let mut rows = Csv::new(&[
        "curve",
        "tx_power",
        "tx_power_db",
        "chi_sq",
        "rate",
        "C_sim",
        "C_analytic",
        "Pw",
        "Pw_analytic",
        "Pc",
        "Pc_analytic",
        "Pf",
        "Pd",
        "local_opt",
    ]);
    let mut optima = Csv::new(&[
        "curve",
        "chi_sq",
        "opt_tx_power",
        "opt_C",
        "sim_opt_tx_power",
        "sim_opt_C",
        "top_C_over_R",
    ]);
    let mut out = Outputs::default();
    for &chi in &settings.sweep_chi_sq {
        let result = power_sweep(&settings.scenario.with_chi_sq(chi), &settings.power_grid)?;
        let id = curve_id(chi);
        for p in &result.points {
            let sim = p.simulated.as_ref().ok();
            let ana = p.analytic.as_ref().ok();
            let flagged = result
                .analytic_optimum
                .is_some_and(|(x, _)| x == p.tx_power);
            rows.push(vec![
                id.clone(),
                fmt_num(p.tx_power),
                fmt_num(linear_to_db(p.tx_power)),
                fmt_num(chi),
                fmt_opt(sim.map(|m| m.rate).or(ana.map(|m| m.rate))),
                fmt_opt(sim.map(|m| m.throughput)),
                fmt_opt(ana.map(|m| m.throughput)),
                fmt_opt(sim.map(|m| m.waste_ratio)),
                fmt_opt(ana.map(|m| m.waste_ratio)),
                fmt_opt(sim.map(|m| m.collision_ratio)),
                fmt_opt(ana.map(|m| m.collision_ratio)),
                fmt_opt(sim.map(|m| m.false_alarm_rate)),
                fmt_opt(sim.map(|m| m.detection_rate())),
                u8::from(flagged).to_string(),
            ]);
        }
        let top = result
            .points
            .last()
            .and_then(|p| p.simulated.as_ref().ok())
            .map(|m| m.throughput / m.rate);
        optima.push(vec![
            id.clone(),
            fmt_num(chi),
            fmt_opt(result.analytic_optimum.map(|o| o.0)),
            fmt_opt(result.analytic_optimum.map(|o| o.1)),
            fmt_opt(result.simulated_optimum.map(|o| o.0)),
            fmt_opt(result.simulated_optimum.map(|o| o.1)),
            fmt_opt(top),
        ]);
        out.report.push(match result.analytic_optimum {
            Some((p, c)) => format!(
                "{id}: optimum C = {} at tx_power = {}",
                fmt_num(c),
                fmt_num(p)
            ),
            None => format!("{id}: no interior optimum"),
        });
    }
    out.add("sweep.csv", &rows)?;
    out.add("sweep_optima.csv", &optima)?;
    Ok(out)
}

/// LAT against LBT over the comparison powers and sensing fractions.
pub fn cmd_compare(settings: &Settings) -> Result<Outputs, CliError> {
    let base = &settings.scenario;
    let rows = compare_lat_lbt(base, &settings.compare_powers, &settings.taus)?;
    let mut summary = Csv::new(&[
        "tx_power",
        "tx_power_db",
        "chi_sq",
        "C_lat",
        "C_lat_analytic",
        "best_tau",
        "C_lbt_best",
        "C_lbt_best_analytic",
        "lat_minus_lbt",
    ]);
    let mut per_tau = Csv::new(&["tx_power", "tau", "C_lbt", "C_lbt_analytic", "Pw", "Pc"]);
    let mut lat_wins = 0;
    for r in &rows {
        let best = r.best_lbt();
        summary.push(vec![
            fmt_num(r.tx_power),
            fmt_num(linear_to_db(r.tx_power)),
            fmt_num(base.rsi.chi_sq),
            fmt_num(r.lat.throughput),
            fmt_num(r.lat_analytic_throughput),
            fmt_num(best.tau),
            fmt_num(best.simulated.throughput),
            fmt_num(best.analytic_throughput),
            fmt_num(r.lat_advantage()),
        ]);
        lat_wins += usize::from(r.lat_advantage() >= 0.0);
        for p in &r.lbt {
            per_tau.push(vec![
                fmt_num(r.tx_power),
                fmt_num(p.tau),
                fmt_num(p.simulated.throughput),
                fmt_num(p.analytic_throughput),
                fmt_num(p.simulated.waste_ratio),
                fmt_num(p.simulated.collision_ratio),
            ]);
        }
    }
    let mut out = Outputs::default();
    out.add("compare.csv", &summary)?;
    out.add("compare_tau.csv", &per_tau)?;
    out.report.push(format!(
        "LAT at least matches the best LBT at {lat_wins} of {} powers",
        rows.len()
    ));
    Ok(out)
}

/// Half-duplex and full-duplex contention on the same seed.
pub fn cmd_dsa(settings: &Settings) -> Result<Outputs, CliError> {
    let dsa = settings.file.dsa_config()?;
    let base = ScenarioConfig {
        thin_trace: false,
        ..settings.scenario
    };
    let configs = [false, true].map(|fd| {
        base.with_protocol(Protocol::Dsa(fdcr::DsaConfig {
            fd_abort: fd,
            ..dsa
        }))
    });
    let traces = run_many(&configs);
    let mut metrics = Vec::new();
    for t in traces {
        metrics.push(DsaMetrics::from_trace(&t?)?);
    }
    let (hd, fd) = (&metrics[0], &metrics[1]);
    let longest = hd
        .collision_durations
        .iter()
        .chain(&fd.collision_durations)
        .max()
        .copied()
        .unwrap_or(0);
    let histogram = |m: &DsaMetrics| {
        let mut h = vec![0u64; longest as usize + 1];
        for &d in &m.collision_durations {
            h[d as usize] += 1;
        }
        h
    };
    let (hh, fh) = (histogram(hd), histogram(fd));
    let mut durations = Csv::new(&["duration", "hd_runs", "fd_runs"]);
    for d in 1..=longest as usize {
        durations.push(vec![d.to_string(), hh[d].to_string(), fh[d].to_string()]);
    }
    let mut summary = Csv::new(&["metric", "hd", "fd"]);
    let mut put = |k: &str, a: String, b: String| summary.push(vec![k.into(), a, b]);
    put(
        "mean_collision_duration",
        fmt_opt(hd.mean_collision_duration),
        fmt_opt(fd.mean_collision_duration),
    );
    put(
        "collision_runs",
        hd.collision_durations.len().to_string(),
        fd.collision_durations.len().to_string(),
    );
    put(
        "su_su_collision_slots",
        hd.su_su_collision_slots.to_string(),
        fd.su_su_collision_slots.to_string(),
    );
    put(
        "pu_collision_slots",
        hd.pu_collision_slots.to_string(),
        fd.pu_collision_slots.to_string(),
    );
    put(
        "clean_slots",
        hd.clean_slots.to_string(),
        fd.clean_slots.to_string(),
    );
    put(
        "packets_completed",
        hd.packets_completed.to_string(),
        fd.packets_completed.to_string(),
    );
    put(
        "packets_aborted",
        hd.packets_aborted.to_string(),
        fd.packets_aborted.to_string(),
    );
    put("measured_slots", hd.slots.to_string(), fd.slots.to_string());
    let mut out = Outputs::default();
    out.add("dsa.csv", &durations)?;
    out.add("dsa_summary.csv", &summary)?;
    out.report.push(format!(
        "mean collision duration: half-duplex {}, full-duplex {} slots",
        fmt_opt(hd.mean_collision_duration),
        fmt_opt(fd.mean_collision_duration)
    ));
    Ok(out)
}
