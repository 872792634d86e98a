use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use dof_forge::phase1::synthesize_skeletal;
use dof_forge::{solve_scene, synthesize_library, ExecConfig, GeomKind, Phase1Config, RuleBase};
use dof_forge_bench::{tangent_scene, two_line_spec};

fn phase1(c: &mut Criterion) {
    let spec = two_line_spec();
    c.bench_function("phase1/two-lines", |b| {
        b.iter(|| synthesize_skeletal(black_box(&spec), RuleBase::builtin(), &Phase1Config::default()).unwrap())
    });
}

fn library(c: &mut Criterion) {
    let mut g = c.benchmark_group("library");
    g.sample_size(10);
    for kind in GeomKind::ALL {
        g.bench_function(kind.name(), |b| {
            b.iter(|| synthesize_library(kind, RuleBase::builtin(), &Phase1Config::default(), 1).unwrap())
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let (lib, _) = synthesize_library(GeomKind::Circle, RuleBase::builtin(), &Phase1Config::default(), 0).unwrap();
    let mut g = c.benchmark_group("solve");
    for n in [1, 4, 16] {
        let scene = tangent_scene(n);
        g.bench_with_input(BenchmarkId::from_parameter(2 * n), &scene, |b, s| {
            b.iter(|| solve_scene(s, &lib, RuleBase::builtin(), &ExecConfig::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, phase1, library, solve);
criterion_main!(benches);
