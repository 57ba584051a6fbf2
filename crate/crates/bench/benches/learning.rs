use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use supcfg::{enumerate_trees, learn, parse_grammar, parse_mta, partition_functions, Limits, Teacher};

const ANBN: &str = include_str!("../../../fixtures/anbn.g");
const LEARNED: &str = include_str!("../../../fixtures/learned.g");
const A3: &str = include_str!("../../../fixtures/a3.mta");

fn learning(c: &mut Criterion) {
    let mut group = c.benchmark_group("learn_anbn");
    group.sample_size(10);
    for bound in [9, 11, 13] {
        group.bench_with_input(BenchmarkId::from_parameter(bound), &bound, |b, &bound| {
            b.iter(|| {
                let teacher = Teacher::new(parse_grammar(ANBN).unwrap(), bound).unwrap();
                black_box(learn(&teacher, Limits::default()).unwrap())
            })
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let g = parse_grammar(ANBN).unwrap();
    let a = parse_mta(A3).unwrap();
    let trees: Vec<_> = enumerate_trees(g.alphabet(), 11).collect();
    c.bench_function("tree_weight_upto_11", |b| {
        b.iter(|| {
            let mut w = g.evaluator();
            for t in &trees {
                black_box(w.tree_weight(t).unwrap());
            }
        })
    });
    c.bench_function("cmta_value_upto_11", |b| {
        b.iter(|| {
            for t in &trees {
                black_box(a.value(t).unwrap());
            }
        })
    });
}

fn partition(c: &mut Criterion) {
    let g = parse_grammar(LEARNED).unwrap();
    c.bench_function("partition_learned", |b| b.iter(|| black_box(partition_functions(&g, 1e-12, 1_000_000).unwrap())));
}

criterion_group!(benches, learning, evaluation, partition);
criterion_main!(benches);
