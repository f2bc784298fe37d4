use fdcr::radio::{
    expected_rx_power, gen_slot_samples, rsi_power, step_pu_state, PuState, PuTrafficModel,
    RadioParams, RsiFamily, RsiModel, SlotSynthesizer, Synthesis,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> RadioParams {
    RadioParams {
        noise_power: 1.0,
        pu_rx_power: 1.0,
        link_gain: 1.0,
        tx_power: 2.0,
    }
}

#[test]
fn busy_fraction_converges_to_stationary_value() {
    let model = PuTrafficModel::new(0.2, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = PuState::Idle;
    let n = 1_000_000;
    let mut busy = 0u64;
    for _ in 0..n {
        state = step_pu_state(&model, state, &mut rng);
        busy += u64::from(state.is_busy());
    }
    let frac = busy as f64 / n as f64;
    assert!((frac - 0.5).abs() < 0.005, "{frac}");
}

#[test]
fn degenerate_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let absorbing = PuTrafficModel::new(0.0, 0.5).unwrap();
    let forced = PuTrafficModel::new(0.5, 1.0).unwrap();
    for _ in 0..1000 {
        assert_eq!(
            step_pu_state(&absorbing, PuState::Idle, &mut rng),
            PuState::Idle
        );
        assert_eq!(
            step_pu_state(&forced, PuState::Busy, &mut rng),
            PuState::Idle
        );
    }
}

#[test]
fn received_power_is_additive() {
    let p = RadioParams {
        pu_rx_power: 0.5,
        ..params()
    };
    let rsi = RsiModel::gaussian(0.1);
    assert_eq!(expected_rx_power(&p, PuState::Idle, false, &rsi), 1.0);
    assert!((expected_rx_power(&p, PuState::Busy, true, &rsi) - 1.7).abs() < 1e-15);
    assert!((rsi_power(&rsi, 2.0) - 0.2).abs() < 1e-15);
    let ideal = RsiModel::gaussian(0.0);
    for tx in [0.0, 1.0, 1e4] {
        let q = RadioParams { tx_power: tx, ..p };
        assert_eq!(expected_rx_power(&q, PuState::Idle, true, &ideal), 1.0);
        for pu in [PuState::Idle, PuState::Busy] {
            let diff =
                expected_rx_power(&q, pu, true, &rsi) - expected_rx_power(&q, pu, false, &rsi);
            assert!((diff - rsi_power(&rsi, tx)).abs() < 1e-9);
        }
    }
}

#[test]
fn sample_means_follow_the_hypothesis() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rsi = RsiModel::gaussian(0.0);
    let idle = gen_slot_samples(&params(), PuState::Idle, false, &rsi, 100_000, &mut rng);
    let busy = gen_slot_samples(&params(), PuState::Busy, false, &rsi, 100_000, &mut rng);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&idle) - 1.0).abs() < 0.01);
    assert!((mean(&busy) - 2.0).abs() < 0.02);
    assert!(idle.iter().all(|&e| e >= 0.0));
}

#[test]
fn same_seed_same_samples() {
    let rsi = RsiModel::gaussian(0.1);
    let a = gen_slot_samples(
        &params(),
        PuState::Busy,
        true,
        &rsi,
        64,
        &mut ChaCha8Rng::seed_from_u64(3),
    );
    let b = gen_slot_samples(
        &params(),
        PuState::Busy,
        true,
        &rsi,
        64,
        &mut ChaCha8Rng::seed_from_u64(3),
    );
    assert_eq!(a, b);
}

#[test]
fn fading_families_keep_the_expected_power() {
    for family in [RsiFamily::Rayleigh, RsiFamily::Rician { k_factor: 3.0 }] {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 200_000;
        let mean = (0..n).map(|_| family.draw_gain(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{family:?}: {mean}");
    }
}

/// Both synthesis paths must give the same first two moments of the slot
/// statistic: mean P and variance P²/n.
#[test]
fn synthesis_paths_agree_in_distribution() {
    let n = 20;
    let power = 3.0;
    for synthesis in [Synthesis::Statistic, Synthesis::Samples] {
        let synth = SlotSynthesizer::new(n, synthesis, RsiFamily::Gaussian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trials = 100_000;
        let draws: Vec<f64> = (0..trials)
            .map(|_| synth.statistic(power, 0.0, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / trials as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let want_var = power * power / n as f64;
        assert!(
            (mean - power).abs() < 4.0 * (want_var / trials as f64).sqrt(),
            "{synthesis:?} mean {mean}"
        );
        assert!(
            (var / want_var - 1.0).abs() < 0.03,
            "{synthesis:?} var {var}"
        );
    }
}
