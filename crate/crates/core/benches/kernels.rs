use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qlm_magic::eigensolver::{ChainSolver, SolverOptions};
use qlm_magic::rk::{rk_state, RkState};
use qlm_magic::sampling::{estimate, SamplingPlan};
use qlm_magic::sre::sre2_pauli_sum;
use qlm_magic::CouplingParams;

/// Run `f` on the default pool and on a single worker. Without the
/// `parallel` feature only the sequential build is measured.
fn both<F: Fn() + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function(BenchmarkId::new("default_pool", rayon::current_num_threads()), |b| b.iter(&f));
        g.bench_function(BenchmarkId::new("single_thread", 1), |b| b.iter(|| one.install(&f)));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(&f));
    g.finish();
}

fn pauli_sum(c: &mut Criterion) {
    let state = rk_state(0.3, 12).unwrap();
    both(c, "sre2_pauli_sum_L12", || {
        std::hint::black_box(sre2_pauli_sum(&state).unwrap());
    });
}

fn sampled_estimate(c: &mut Criterion) {
    let state = RkState::new(0.3, 24).unwrap();
    let plan = SamplingPlan::new(200, 8, 1);
    both(c, "estimate_L24_N200_R8", || {
        std::hint::black_box(estimate(&state, &plan).unwrap());
    });
}

fn ground_state(c: &mut Criterion) {
    let solver = ChainSolver::new(20, SolverOptions::default()).unwrap();
    let p = CouplingParams::new(-3.0, 3.3);
    both(c, "ground_state_L20", || {
        std::hint::black_box(solver.ground_state(&p).unwrap());
    });
}

criterion_group!(benches, pauli_sum, sampled_estimate, ground_state);
criterion_main!(benches);
