use fdcr::engine::{run_scenario, DsaConfig, Protocol, ScenarioConfig};
use fdcr::metrics::{DsaMetrics, Metrics};
use fdcr::protocols::LbtConfig;
use fdcr::radio::PuTrafficModel;
use fdcr::sensing::SensingDecision;
use proptest::prelude::*;

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        Just(Protocol::Lat),
        (0.02f64..0.9).prop_map(|t| Protocol::Lbt(LbtConfig::new(t).unwrap())),
        (1usize..5, 1u32..10, 1u32..12, any::<bool>()).prop_map(|(m, w, l, fd)| Protocol::Dsa(
            DsaConfig {
                n_sus: m,
                backoff_window: w,
                packet_length: l,
                fd_abort: fd,
                su_cross_power: 1.0,
            }
        )),
    ]
}

prop_compose! {
    fn scenario()(
        chi in prop_oneof![Just(0.0), 1e-4f64..1.0],
        tx in 0.5f64..1e4,
        pib in 0.01f64..0.5,
        pbi in 0.01f64..0.5,
        n in 1usize..200,
        pd in 0.5f64..0.999,
        seed in any::<u64>(),
        protocol in protocol(),
    ) -> ScenarioConfig {
        ScenarioConfig {
            traffic: PuTrafficModel::new(pib, pbi).unwrap(),
            n_samples_per_slot: n,
            pd_target: pd,
            warmup_slots: 10,
            ..ScenarioConfig::default().with_chi_sq(chi).with_tx_power(tx).with_seed(seed).with_slots(2_000).with_protocol(protocol)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_trace_satisfies_the_metric_identities(cfg in scenario()) {
        let trace = run_scenario(&cfg).unwrap();
        prop_assert_eq!(trace.len(), cfg.n_slots);
        let counts = trace.summary.case_counts();
        prop_assert_eq!(counts.iter().sum::<u64>(), (cfg.n_slots - cfg.warmup_slots) as u64);
        if let Ok(m) = Metrics::from_trace(&trace) {
            prop_assert_eq!(m.throughput, m.rate * (1.0 - m.waste_ratio));
            prop_assert!((m.case_fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert_eq!(Metrics::from_view(trace.measured(), cfg.rate()).unwrap(), m);
            prop_assert!((0.0..=1.0).contains(&m.collision_ratio));
            prop_assert!(m.goodput <= m.throughput + 1e-12);
        }
    }

    #[test]
    fn lat_transmits_exactly_after_idle_decisions(cfg in scenario()) {
        let cfg = cfg.with_protocol(Protocol::Lat);
        let trace = run_scenario(&cfg).unwrap();
        let view = trace.timeline.view();
        for k in 1..view.len() {
            let idle = view.record(k - 1).decisions[0] == SensingDecision::Idle;
            prop_assert_eq!(view.record(k).actions[0].is_transmit(), idle);
        }
    }

    #[test]
    fn dsa_runs_never_exceed_packet_length_under_half_duplex(cfg in scenario()) {
        if let Protocol::Dsa(d) = cfg.protocol {
            let d = DsaConfig { fd_abort: false, ..d };
            let trace = run_scenario(&cfg.with_protocol(Protocol::Dsa(d))).unwrap();
            let m = DsaMetrics::from_trace(&trace).unwrap();
            // Back-to-back packets are separated by a sensing slot, so a
            // half-duplex node's collision run is bounded by one packet.
            prop_assert!(m.collision_durations.iter().all(|&r| r <= d.packet_length));
        }
    }
}
