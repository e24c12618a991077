use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treeshift::broom::{build_broom_conjugation, solve_h_sequence};
use treeshift::decider::{sylvester_space, word_trace_obstruction};
use treeshift::{decide_shift, DecideOptions};
use treeshift_bench::{decaying_schedule, symmetric_two_branch, uneven_path};

fn decider(c: &mut Criterion) {
    let opts = DecideOptions::default();
    let mut g = c.benchmark_group("decide_cs");
    for kappa in 0..=3 {
        let s = symmetric_two_branch(kappa);
        g.bench_with_input(BenchmarkId::new("two_branch_cs", s.dim()), &s, |b, s| b.iter(|| decide_shift(s, &opts)));
    }
    for n in [4, 8, 12] {
        let s = uneven_path(n);
        g.bench_with_input(BenchmarkId::new("path_not_cs", n), &s, |b, s| b.iter(|| decide_shift(s, &opts)));
    }
    g.finish();
}

fn stages(c: &mut Criterion) {
    let s = symmetric_two_branch(3);
    c.bench_function("sylvester_space/12", |b| b.iter(|| sylvester_space(s.matrix(), 1e-10)));
    c.bench_function("word_trace/12/len8", |b| b.iter(|| word_trace_obstruction(s.matrix(), 8, 1e-10)));
}

fn broom(c: &mut Criterion) {
    let sched = decaying_schedule(6);
    c.bench_function("broom/h_sequence/6", |b| b.iter(|| solve_h_sequence(&sched).unwrap()));
    let h = solve_h_sequence(&sched).unwrap();
    c.bench_function("broom/conjugation/6x13", |b| b.iter(|| build_broom_conjugation(&sched, &h, 13, 1e-8).unwrap()));
}

criterion_group!(benches, decider, stages, broom);
criterion_main!(benches);
