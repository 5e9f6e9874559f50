use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use udnsync::channel::{sample_links, GainSampler};
use udnsync::consensus::{update_proposed, AdjacencyMemory, FadingGraphs, GraphSource};
use udnsync::scheduler::{build_preferences, grid_search_alpha, stable_marriage, TimeTable};
use udnsync::topology::init_clocks;
use udnsync::{place_nodes, Scheme, SimConfig};

fn config(k: usize, n: usize) -> SimConfig {
    SimConfig {
        num_nodes: k,
        num_subbands: n,
        ..SimConfig::default()
    }
}

fn consensus_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("consensus_iteration");
    for k in [60, 120, 250] {
        let cfg = config(k, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let topo = place_nodes(&cfg, &mut rng).unwrap();
        let mut source = FadingGraphs::new(&cfg, &topo).unwrap();
        let mut state = init_clocks(&cfg, &mut rng);
        state.memory = AdjacencyMemory::from_graph(&source.next_graph(&mut rng).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| {
                let g = source.next_graph(&mut rng).unwrap();
                black_box(update_proposed(&state, &g, cfg.step_size))
            })
        });
    }
    group.finish();
}

fn alpha_grid_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_grid_search");
    group.sample_size(10);
    for (k, n) in [(30, 5), (90, 5), (90, 15)] {
        let cfg = config(k, n);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let topo = place_nodes(&cfg, &mut rng).unwrap();
        let sampler = GainSampler::new(cfg.fading).unwrap();
        let links = sample_links(&topo, n, cfg.path_loss_exp, &sampler, &mut rng);
        group.bench_with_input(BenchmarkId::new(format!("k{k}"), n), &n, |b, _| {
            b.iter(|| black_box(grid_search_alpha(&links, &cfg).unwrap().exchange_delay_total))
        });
    }
    group.finish();
}

fn deferred_acceptance(c: &mut Criterion) {
    let mut group = c.benchmark_group("stable_marriage");
    for (k, n) in [(20, 5), (40, 15), (80, 30)] {
        let cfg = config(3 * k, n);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let topo = place_nodes(&cfg, &mut rng).unwrap();
        let sampler = GainSampler::new(cfg.fading).unwrap();
        let links = sample_links(&topo, n, cfg.path_loss_exp, &sampler, &mut rng);
        let table = TimeTable::compute(&links, &cfg, 0.5, Scheme::Noma);
        let all: Vec<usize> = (0..k).collect();
        group.bench_with_input(BenchmarkId::new(format!("k{k}"), n), &n, |b, _| {
            b.iter(|| black_box(stable_marriage(&build_preferences(&table, &all), 0)))
        });
    }
    group.finish();
}

criterion_group!(benches, consensus_iteration, alpha_grid_search, deferred_acceptance);
criterion_main!(benches);
