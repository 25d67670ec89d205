use criterion::{criterion_group, criterion_main, Criterion};
use limavg::fit::{fit_bounded, fit_tree, FitProblem};
use limavg::gadgets::*;
use limavg::learn::{learn, Teacher};
use limavg::{distance, minimize_almost_exact};
use std::hint::black_box;

fn analysis(c: &mut Criterion) {
    let (x, y) = (a1(), a2());
    c.bench_function("distance three-branch", |b| b.iter(|| distance(black_box(&x), black_box(&y), None)));
    let (a, l) = (two_branch(6), two_branch_large(6));
    c.bench_function("distance two-branch n=6", |b| b.iter(|| distance(black_box(&a), black_box(&l), None)));
    let (p, q) = characterization(8);
    c.bench_function("distance characterization n=8", |b| b.iter(|| distance(black_box(&p), black_box(&q), None)));
    c.bench_function("minimize two-branch large n=6", |b| b.iter(|| minimize_almost_exact(black_box(&l))));
}

fn learning(c: &mut Criterion) {
    let hidden = two_branch(4);
    c.bench_function("learn two-branch n=4", |b| b.iter(|| learn(&Teacher::new(black_box(&hidden)))));
}

fn fitting(c: &mut Criterion) {
    let clause = |vars: &[usize], positive| Clause { vars: vars.iter().copied().collect(), positive };
    let sat = Sat0Formula::new(2, vec![clause(&[0, 1], true), clause(&[1], false)]).unwrap();
    let unsat = Sat0Formula::new(2, vec![clause(&[0], true), clause(&[0], false)]).unwrap();
    let (s, u) = (sat0_to_usample(&sat), sat0_to_usample(&unsat));
    c.bench_function("fit tree", |b| b.iter(|| fit_tree(black_box(&s))));
    c.bench_function("fit 2 states, satisfiable", |b| b.iter(|| fit_bounded(&FitProblem::new(black_box(&s), 2))));
    c.bench_function("fit 2 states, unsatisfiable", |b| b.iter(|| fit_bounded(&FitProblem::new(black_box(&u), 2))));
}

criterion_group!(benches, analysis, learning, fitting);
criterion_main!(benches);
