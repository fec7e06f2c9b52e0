use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use rwb_bench::triples;
use rwb_core::CollisionPair;

fn post_collision(c: &mut Criterion) {
    let data = triples(1024);
    let mut group = c.benchmark_group("post_collision");
    for r in [1.0, 1e3] {
        group.bench_function(format!("omega_r/R={r}"), |b| {
            b.iter(|| {
                let mut acc = 0.0;
                for (v, u, w) in &data {
                    let p = CollisionPair::from_vecs(*v, *u, r).unwrap();
                    acc += p.post_omega_r_raw(w).1;
                }
                black_box(acc)
            })
        });
        group.bench_function(format!("omega_rs/R={r}"), |b| {
            b.iter(|| {
                let mut acc = 0.0;
                for (v, u, w) in &data {
                    let p = CollisionPair::from_vecs(*v, *u, r).unwrap();
                    acc += p.post_omega_rs_raw(w).1;
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn pair_sweep(c: &mut Criterion) {
    // One pair, many directions: the inner loop of the quadrature.
    let data = triples(64);
    let (v, u, _) = data[3];
    let p = CollisionPair::from_vecs(v, u, 2.0).unwrap();
    c.bench_function("angular_sweep_64", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for (_, _, w) in &data {
                acc += p.cutoff_quantity(w) + p.post_omega_r_raw(w).0.x;
            }
            black_box(acc)
        })
    });
}

criterion_group!(benches, post_collision, pair_sweep);
criterion_main!(benches);
