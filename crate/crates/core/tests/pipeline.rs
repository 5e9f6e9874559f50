use proptest::prelude::*;
use udnsync::harness::{phase_rng, run_point};
use udnsync::scheduler::{
    build_preferences, schedule_table, stable_marriage, swap_matching_round, Scheme, TimeTable,
};
use udnsync::{place_nodes, run_sync, schedule_exchange, SimConfig, UpdateRule};

fn small() -> SimConfig {
    SimConfig {
        num_nodes: 15,
        num_subbands: 2,
        max_snapshots: 3,
        max_iters: 400,
        power_grid_step: 0.05,
        ..SimConfig::default()
    }
}

#[test]
fn end_to_end_is_deterministic() {
    let c = small();
    let topo = place_nodes(&c, &mut phase_rng(9, 0, 0)).unwrap();
    let a = schedule_exchange(&topo, &c, &mut phase_rng(9, 0, 2)).unwrap();
    let b = schedule_exchange(&topo, &c, &mut phase_rng(9, 0, 2)).unwrap();
    assert_eq!(a, b);
    let s1 = run_sync(&c, &topo, &mut phase_rng(9, 0, 1)).unwrap();
    let s2 = run_sync(&c, &topo, &mut phase_rng(9, 0, 1)).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn exchange_phase_ignores_the_consensus_settings() {
    let c = small();
    let topo = place_nodes(&c, &mut phase_rng(4, 2, 0)).unwrap();
    let other = SimConfig {
        max_iters: 17,
        update_rule: UpdateRule::Baseline,
        power_threshold_dbm: -80.0,
        ..c.clone()
    };
    let a = schedule_exchange(&topo, &c, &mut phase_rng(4, 2, 2)).unwrap();
    let b = schedule_exchange(&topo, &other, &mut phase_rng(4, 2, 2)).unwrap();
    assert_eq!(a.noma.exchange_delay_total, b.noma.exchange_delay_total);
}

#[test]
fn rounds_cover_every_triplet_once() {
    let c = SimConfig {
        num_nodes: 31,
        num_subbands: 4,
        ..small()
    };
    let topo = place_nodes(&c, &mut phase_rng(3, 0, 0)).unwrap();
    let ex = schedule_exchange(&topo, &c, &mut phase_rng(3, 0, 2)).unwrap();
    for outcome in [&ex.noma, &ex.oma] {
        // 10 triplets over 4 sub-bands.
        assert_eq!(outcome.rounds.len(), 3);
        let mut seen: Vec<usize> = outcome.rounds.iter().flat_map(|r| r.assignment.matched().map(|(_, t)| t)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        let sum: f64 = outcome.t_max_per_round().iter().sum();
        assert_eq!(sum, outcome.exchange_delay_total);
    }
    assert!(ex.noma.exchange_delay_total <= ex.oma.exchange_delay_total);
}

#[test]
fn schedule_csv_lists_every_scheduled_triplet() {
    let c = small();
    let topo = place_nodes(&c, &mut phase_rng(5, 0, 0)).unwrap();
    let ex = schedule_exchange(&topo, &c, &mut phase_rng(5, 0, 2)).unwrap();
    let mut buf = Vec::new();
    ex.noma.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("round,sub_band,triplet,alpha,t_strong,t_weak,t_pair"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn replications_share_topologies_across_sweep_values() {
    let a = run_point(&small(), 2).unwrap();
    let b = run_point(&SimConfig { num_subbands: 3, ..small() }, 2).unwrap();
    // The consensus phase never sees the sub-band count.
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.n_avg, y.n_avg);
        assert_eq!(x.cf, y.cf);
    }
}

fn table_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..8, 1usize..6).prop_flat_map(|(k, n)| {
        proptest::collection::vec(proptest::collection::vec(1e-3..1.0f64, n), k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // With both sides ranking by pair time, a Pareto swap on the deferred
    // acceptance output would make the moved triplets a blocking pair.
    #[test]
    fn deferred_acceptance_leaves_no_pareto_swap(times in table_strategy()) {
        let table = TimeTable::from_pair_times(times);
        let all: Vec<usize> = (0..table.num_triplets()).collect();
        let a = stable_marriage(&build_preferences(&table, &all), 0);
        let step = swap_matching_round(&a, &table);
        prop_assert!(step.applied.is_none());
    }

    #[test]
    fn delay_scales_with_pair_times(times in table_strategy(), scale in 0.1..10.0f64) {
        let scaled: Vec<Vec<f64>> = times.iter().map(|r| r.iter().map(|t| t * scale).collect()).collect();
        let a = schedule_table(TimeTable::from_pair_times(times), Scheme::Noma, 0.5, 100).unwrap();
        let b = schedule_table(TimeTable::from_pair_times(scaled), Scheme::Noma, 0.5, 100).unwrap();
        prop_assert!((b.exchange_delay_total - scale * a.exchange_delay_total).abs() <= 1e-12 * b.exchange_delay_total);
        for (ra, rb) in a.rounds.iter().zip(&b.rounds) {
            prop_assert_eq!(&ra.assignment, &rb.assignment);
        }
    }
}
