use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use isojet::characteristics::{conoid_sample, ConoidOptions, FlowOptions, PrincipalSymbol};
use isojet::embedding::{singular_metric_order, solve_at_base_points, SingularOptions};
use isojet::metric::MetricJet;
use isojet::{ExecPolicy, Jet};

fn model2(order: usize) -> MetricJet<f64> {
    MetricJet::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Jet::one(2, order),
        (1, 1) => Jet::from_terms(2, order, [(vec![2, 0], 1.0), (vec![0, 2], 1.0)]),
        _ => Jet::zero(2, order),
    })
    .unwrap()
}

fn base_points(c: &mut Criterion) {
    let k = 4;
    let g = model2(singular_metric_order(2, k) + 4);
    let points: Vec<Vec<f64>> = (1..=8).map(|i| vec![0.04 * i as f64]).collect();
    let opts = SingularOptions::default();
    let mut group = c.benchmark_group("base_point_solves");
    group.sample_size(10);
    for policy in [ExecPolicy::Sequential, ExecPolicy::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{policy:?}")), &policy, |b, &policy| {
            b.iter(|| solve_at_base_points(&g, &points, 0.5, k, &opts, policy))
        });
    }
    group.finish();
}

fn conoid_rays(c: &mut Criterion) {
    // g = p1 p2 + x1 p2², characteristic at the origin for s = x2 − x1²
    let g = Jet::from_terms(4, 3, [(vec![0, 0, 1, 1], 1.0), (vec![1, 0, 0, 2], 1.0)]);
    let sym = PrincipalSymbol::scalar(2, g).expect("homogeneous symbol");
    let s = Jet::from_terms(2, 3, [(vec![0, 1], 1.0), (vec![2, 0], -1.0)]);
    let opts = ConoidOptions {
        rays: 16,
        flow: FlowOptions {
            t_end: 0.5,
            ..FlowOptions::default()
        },
        nearby: Vec::new(),
    };
    let mut group = c.benchmark_group("conoid_rays");
    group.sample_size(10);
    for policy in [ExecPolicy::Sequential, ExecPolicy::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{policy:?}")), &policy, |b, &policy| {
            b.iter(|| conoid_sample(&sym, &[0.0, 0.0], &s, &opts, policy))
        });
    }
    group.finish();
}

criterion_group!(benches, base_points, conoid_rays);
criterion_main!(benches);
