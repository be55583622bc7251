use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use posetinfo::scan::gain_scan;
use posetinfo::{Parallelism, SolverConfig};
use posetinfo_oracle::{random_distribution, random_poset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("gain_scan");
    group.sample_size(10);
    for size in [200, 800] {
        let poset = Arc::new(random_poset(&mut rng, size, 4.0 / size as f64));
        let p = random_distribution(&mut rng, poset);
        for (name, par) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Auto)] {
            group.bench_with_input(BenchmarkId::new(name, size), &p, |b, p| {
                b.iter(|| gain_scan(black_box(p), 1000, None, &cfg, par).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
