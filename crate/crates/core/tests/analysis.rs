use fdcr::analysis::{
    analytic_lbt_throughput, analytic_metrics, compare_lat_lbt, default_power_grid,
    find_local_optimum, interior_maxima, lat_case_probabilities, perfect_sensing_collision_floor,
    power_sweep, JointChain, SensingProbabilities, Smoothing,
};
use fdcr::engine::{run_scenario, Protocol, ScenarioConfig};
use fdcr::metrics::Metrics;
use fdcr::protocols::LbtConfig;
use fdcr::radio::PuTrafficModel;
use proptest::prelude::*;

/// Stationary law by solving πP = π, Σπ = 1 with Gaussian elimination.
fn solve_stationary(p: &[[f64; 4]; 4]) -> [f64; 4] {
    let mut a = [[0.0; 5]; 4];
    for i in 0..3 {
        for j in 0..4 {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[3] = [1.0, 1.0, 1.0, 1.0, 1.0];
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..4 {
            if row != col {
                let pivot_row = a[col];
                let f = a[row][col] / pivot_row[col];
                for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    [
        a[0][4] / a[0][0],
        a[1][4] / a[1][1],
        a[2][4] / a[2][2],
        a[3][4] / a[3][3],
    ]
}

#[test]
fn power_iteration_matches_direct_solve() {
    let traffic = PuTrafficModel::new(0.07, 0.21).unwrap();
    let sensing = SensingProbabilities {
        pf_silent: 0.03,
        pd_silent: 0.97,
        pf_active: 0.4,
        pd_active: 0.8,
    };
    let chain = JointChain::lat(traffic, sensing);
    let got = chain.stationary().unwrap();
    let want = solve_stationary(&chain.matrix);
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-10, "{got:?} vs {want:?}");
    }
}

#[test]
fn blind_detector_wastes_half() {
    let traffic = PuTrafficModel::symmetric(0.05).unwrap();
    let pi = JointChain::lat(traffic, SensingProbabilities::uniform(0.5, 0.5))
        .stationary()
        .unwrap();
    let pw = pi[2] / (pi[1] + pi[2]);
    assert!((pw - 0.5).abs() < 1e-10);
}

#[test]
fn collision_floor_equals_arrival_probability_for_symmetric_traffic() {
    // Only the first slot of each busy period can be hit, so the floor is
    // (number of busy periods)/(busy slots) = p_ib · π_I / π_B.
    for (pib, pbi) in [(0.05, 0.05), (0.1, 0.3), (0.02, 0.2)] {
        let traffic = PuTrafficModel::new(pib, pbi).unwrap();
        let pi_b = pib / (pib + pbi);
        let expect = pib * (1.0 - pi_b) / pi_b;
        assert!((perfect_sensing_collision_floor(traffic).unwrap() - expect).abs() < 1e-10);
    }
}

#[test]
fn analytic_predicts_simulated_case_fractions() {
    let base = ScenarioConfig::default().with_slots(200_000);
    for chi in [0.0, 1e-2, 1e-1] {
        for p in [5.0, 300.0] {
            let cfg = base.with_chi_sq(chi).with_tx_power(p);
            let pi = lat_case_probabilities(&cfg).unwrap();
            let m = Metrics::from_trace(&run_scenario(&cfg).unwrap()).unwrap();
            for (a, b) in pi.iter().zip(&m.case_fractions) {
                assert!(
                    (a - b).abs() < 0.01,
                    "chi={chi} p={p}: {pi:?} vs {:?}",
                    m.case_fractions
                );
            }
        }
    }
}

#[test]
fn analytic_lbt_matches_simulation() {
    let lbt = Protocol::Lbt(LbtConfig::new(0.15).unwrap());
    let cfg = ScenarioConfig::default()
        .with_slots(200_000)
        .with_protocol(lbt);
    let sim = Metrics::from_trace(&run_scenario(&cfg).unwrap()).unwrap();
    let model = analytic_metrics(&cfg).unwrap();
    assert!((sim.throughput - model.throughput).abs() < 0.02 * model.rate);
    assert_eq!(
        model.throughput,
        analytic_lbt_throughput(&cfg, 0.15).unwrap()
    );
}

#[test]
fn analytic_collision_duration_matches_simulation() {
    let cfg = ScenarioConfig::default()
        .with_slots(300_000)
        .with_chi_sq(0.1)
        .with_tx_power(100.0);
    let sim = Metrics::from_trace(&run_scenario(&cfg).unwrap()).unwrap();
    let model = analytic_metrics(&cfg).unwrap();
    let (s, m) = (
        sim.mean_collision_duration.unwrap(),
        model.mean_collision_duration.unwrap(),
    );
    assert!((s - m).abs() < 0.05 * m, "{s} vs {m}");
}

#[test]
fn ideal_cancellation_has_constant_waste() {
    let base = ScenarioConfig::default().with_chi_sq(0.0);
    let pws: Vec<f64> = default_power_grid()
        .iter()
        .map(|&p| {
            analytic_metrics(&base.with_tx_power(p))
                .unwrap()
                .waste_ratio
        })
        .collect();
    assert!(pws.iter().all(|&w| (w - pws[0]).abs() < 1e-12));
}

#[test]
fn tradeoff_shape_over_the_default_grid() {
    let base = ScenarioConfig::default().with_slots(2_000);
    let mut peaks = Vec::new();
    for chi in [1e-1, 1e-2, 1e-3] {
        let sweep = power_sweep(&base.with_chi_sq(chi), &default_power_grid()).unwrap();
        let curve = sweep.analytic_curve().unwrap();
        let ys: Vec<f64> = curve.iter().map(|c| c.1).collect();
        assert_eq!(interior_maxima(&ys).len(), 1, "chi={chi}");
        peaks.push(sweep.analytic_optimum.unwrap());
    }
    for w in peaks.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1, "{peaks:?}");
    }
    let flat = power_sweep(&base.with_chi_sq(0.9), &default_power_grid()).unwrap();
    assert_eq!(flat.analytic_optimum, None);
}

#[test]
fn lat_and_lbt_trade_places() {
    let taus = [0.05, 0.1, 0.15, 0.2, 0.3];
    let base = ScenarioConfig::default().with_slots(100_000);
    let moderate = compare_lat_lbt(&base.with_chi_sq(1e-3), &[10f64.powf(1.5)], &taus).unwrap();
    assert!(moderate[0].lat_advantage() > 0.0, "{:?}", moderate[0]);
    let grid = default_power_grid();
    let top = compare_lat_lbt(&base.with_chi_sq(0.1), &[*grid.last().unwrap()], &taus).unwrap();
    assert!(top[0].lat_advantage() < 0.0, "{:?}", top[0]);
    assert_eq!(top[0].lbt.len(), taus.len());
}

#[test]
fn peak_detector_examples() {
    assert_eq!(
        find_local_optimum(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)], Smoothing::None),
        Some((2.0, 3.0))
    );
    assert_eq!(
        find_local_optimum(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)], Smoothing::None),
        None
    );
    assert_eq!(find_local_optimum(&[], Smoothing::Median3), None);
}

proptest! {
    #[test]
    fn peak_location_is_scale_invariant(
        ys in prop::collection::vec(0.0f64..10.0, 3..40),
        scale in 0.01f64..100.0,
    ) {
        let curve: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let scaled: Vec<(f64, f64)> = curve.iter().map(|&(x, y)| (x, y * scale)).collect();
        for s in [Smoothing::None, Smoothing::Median3] {
            let a = find_local_optimum(&curve, s).map(|p| p.0);
            let b = find_local_optimum(&scaled, s).map(|p| p.0);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn stationary_law_is_a_fixed_point(
        pib in 0.01f64..0.99, pbi in 0.01f64..0.99,
        pf_s in 0.0f64..0.99, pd_s in 0.01f64..1.0,
        pf_a in 0.0f64..0.99, pd_a in 0.01f64..1.0,
    ) {
        let traffic = PuTrafficModel::new(pib, pbi).unwrap();
        let chain = JointChain::lat(traffic, SensingProbabilities { pf_silent: pf_s, pd_silent: pd_s, pf_active: pf_a, pd_active: pd_a });
        let pi = chain.stationary().unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..4 {
            let next: f64 = (0..4).map(|i| pi[i] * chain.matrix[i][j]).sum();
            prop_assert!((next - pi[j]).abs() < 1e-9);
        }
        let busy = pi[0] + pi[3];
        prop_assert!((busy - pib / (pib + pbi)).abs() < 1e-9);
    }
}
