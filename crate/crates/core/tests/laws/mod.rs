//! Property laws shared by the property suite and the acceptance run.
//!
//! Every randomized law draws 1000 cases from a ChaCha generator with a fixed seed, so a
//! failure reproduces on every run. Exhaustive laws enumerate their whole family.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Debug;

use limavg::fit::{check_fit, fit_bounded, fit_tree, FitOutcome, FitProblem};
use limavg::gadgets::*;
use limavg::learn::{build_hypothesis, close_table, learn, process_counterexample, ObservationTable, Teacher};
use limavg::learn::Consistency;
use limavg::measures::{draw_sample, SampleSpec};
use limavg::rational::{int, ratio, to_f64};
use limavg::*;
use num_traits::{One, Signed, Zero};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CASES: u32 = 1000;

/// Regression constant for the expectation-query envelope `c·(m²|Σ| + m·ℓ)`.
pub const QUERY_ENVELOPE: u64 = 4;

pub type Outcome = Result<(), String>;

pub struct Law {
    pub name: &'static str,
    pub run: fn() -> Outcome,
}

pub fn check<S>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: Debug,
{
    check_cases(CASES, strategy, test)
}

pub fn check_cases<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(fail(format!($($fmt)+)));
        }
    };
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, TestCaseError> {
    r.map_err(|e| fail(format!("library error: {e}")))
}

// ---- generators ----

pub fn weight() -> impl Strategy<Value = Rational> {
    (-8i64..=8, 1i64..=8).prop_map(|(p, q)| ratio(p, q))
}

pub fn automaton_over(k: usize, max_states: usize) -> BoxedStrategy<Automaton> {
    (1..=max_states)
        .prop_flat_map(move |n| (vec(0..n, n * k), vec(weight(), n * k)))
        .prop_map(move |(d, w)| Automaton::from_tables(Alphabet::abc(k), 0, d, w).unwrap())
        .boxed()
}

/// At most `max_states` states over at most `max_letters` letters; weights `p/q` with
/// `|p| ≤ 8`, `1 ≤ q ≤ 8`.
pub fn automaton(max_states: usize, max_letters: usize) -> BoxedStrategy<Automaton> {
    (1..=max_letters).prop_flat_map(move |k| automaton_over(k, max_states)).boxed()
}

pub fn pair(max_states: usize, max_letters: usize) -> BoxedStrategy<(Automaton, Automaton)> {
    (1..=max_letters)
        .prop_flat_map(move |k| (automaton_over(k, max_states), automaton_over(k, max_states)))
        .boxed()
}

/// Row entries are small integers normalized per state; an all-zero row becomes a
/// uniform self-loop.
pub fn chain_over(k: usize, max_states: usize) -> BoxedStrategy<MarkovChain> {
    (1..=max_states)
        .prop_flat_map(move |n| (Just(n), vec(vec(0u32..3, n * k), n), 0..n))
        .prop_map(move |(n, rows, init)| {
            let edges = rows
                .into_iter()
                .enumerate()
                .map(|(s, row)| {
                    let total: u32 = row.iter().sum();
                    if total == 0 {
                        return (0..k).map(|a| (a, s, ratio(1, k as i64))).collect();
                    }
                    row.iter()
                        .enumerate()
                        .map(|(i, &w)| (i / n, i % n, ratio(w as i64, total as i64)))
                        .collect()
                })
                .collect();
            MarkovChain::new(Alphabet::abc(k), init, edges).unwrap()
        })
        .boxed()
}

pub fn formula(max_vars: usize) -> BoxedStrategy<Sat0Formula> {
    (1..=max_vars)
        .prop_flat_map(|n| (Just(n), vec((1usize..(1 << n), any::<bool>()), n)))
        .prop_map(|(n, cs)| Sat0Formula::new(n, cs.into_iter().map(|(m, p)| clause(n, m, p)).collect()).unwrap())
        .boxed()
}

fn clause(n: usize, mask: usize, positive: bool) -> Clause {
    Clause { vars: (0..n).filter(|v| mask >> v & 1 == 1).collect(), positive }
}

/// Every formula with `n` variables and `n` clauses.
pub fn all_formulas(n: usize) -> Vec<Sat0Formula> {
    let options: Vec<Clause> =
        (1..1usize << n).flat_map(|m| [true, false].map(|p| clause(n, m, p))).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|cs: Vec<Clause>| {
                options.iter().map(move |c| {
                    let mut cs = cs.clone();
                    cs.push(c.clone());
                    cs
                })
            })
            .collect();
    }
    out.into_iter().map(|cs| Sat0Formula::new(n, cs).unwrap()).collect()
}

/// All words of length at most `max` over `k` letters, shortlex.
pub fn words_upto(k: usize, max: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|w: &Word| {
                (0..k).map(move |a| {
                    let mut w = w.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn words_of_len(k: usize, len: usize) -> Vec<Word> {
    words_upto(k, len).into_iter().filter(|w| w.len() == len).collect()
}

/// Satisfiability by truth table, independent of the formula's own solver.
pub fn truth_table(phi: &Sat0Formula) -> bool {
    let n = phi.variables();
    (0..1u32 << n).any(|m| {
        phi.clauses().iter().all(|c| c.vars.iter().any(|&v| (m >> v & 1 == 1) == c.positive))
    })
}

// ---- distance oracles ----

/// Product states `(p, q)`, encoded `p·|B| + q`, that lie in a bottom component of the
/// product graph, with the least member of their component.
fn product_bottoms(a: &Automaton, b: &Automaton) -> (Vec<bool>, Vec<usize>) {
    let nb = b.state_count();
    let n = a.state_count() * nb;
    let k = a.letters();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        reach[s][s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for c in 0..k {
                let t = a.next(v / nb, c) * nb + b.next(v % nb, c);
                if !reach[s][t] {
                    reach[s][t] = true;
                    stack.push(t);
                }
            }
        }
    }
    let bottom = (0..n).map(|s| (0..n).all(|t| !reach[s][t] || reach[t][s])).collect();
    let rep = (0..n).map(|s| (0..n).find(|&t| reach[s][t] && reach[t][s]).unwrap()).collect();
    (bottom, rep)
}

/// Mean over all `|Σ|^len` words of `|avg_A − avg_B|` over the first `len` steps; `None`
/// (flagged) when some word's product run is outside every product bottom component by then.
pub fn truncated_oracle(a: &Automaton, b: &Automaton, len: u32) -> Option<f64> {
    let k = a.letters();
    let nb = b.state_count();
    let (bottom, _) = product_bottoms(a, b);
    let total = (k as u64).pow(len);
    let mut sum = 0.0;
    for mut m in 0..total {
        let (mut p, mut q) = (a.initial(), b.initial());
        let mut diff = 0.0;
        for _ in 0..len {
            let c = (m % k as u64) as usize;
            m /= k as u64;
            diff += to_f64(a.weight(p, c)) - to_f64(b.weight(q, c));
            p = a.next(p, c);
            q = b.next(q, c);
        }
        if !bottom[p * nb + q] {
            return None;
        }
        sum += diff.abs() / len as f64;
    }
    Some(sum / total as f64)
}

/// Long-horizon oracle by mass propagation over the product: for each product bottom
/// component, the mean weight difference over every step spent inside it by any word of
/// length `len`, weighted by the mass that ends there. Floating point, no linear algebra.
pub fn horizon_oracle(a: &Automaton, b: &Automaton, len: usize) -> f64 {
    let k = a.letters();
    let nb = b.state_count();
    let n = a.state_count() * nb;
    let (bottom, rep) = product_bottoms(a, b);
    let step_diff: Vec<f64> = (0..n)
        .map(|v| (0..k).map(|c| to_f64(a.weight(v / nb, c)) - to_f64(b.weight(v % nb, c))).sum::<f64>() / k as f64)
        .collect();
    let mut mass = vec![0.0; n];
    mass[a.initial() * nb + b.initial()] = 1.0;
    let mut inside: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for _ in 0..len {
        let mut next = vec![0.0; n];
        for v in 0..n {
            if mass[v] == 0.0 {
                continue;
            }
            if bottom[v] {
                let e = inside.entry(rep[v]).or_default();
                e.0 += mass[v] * step_diff[v];
                e.1 += mass[v];
            }
            for c in 0..k {
                next[a.next(v / nb, c) * nb + b.next(v % nb, c)] += mass[v] / k as f64;
            }
        }
        mass = next;
    }
    let mut end: BTreeMap<usize, f64> = BTreeMap::new();
    for v in (0..n).filter(|&v| bottom[v]) {
        *end.entry(rep[v]).or_default() += mass[v];
    }
    end.iter().map(|(r, m)| inside.get(r).map_or(0.0, |(d, steps)| m * (d / steps).abs())).sum()
}

// ---- core ----

fn lasso_case() -> BoxedStrategy<(Automaton, Word, Word)> {
    automaton(6, 3)
        .prop_flat_map(|a| {
            let k = a.letters();
            (Just(a), vec(0..k, 0..5), vec(0..k, 1..5))
        })
        .boxed()
}

pub fn lasso_canonical_value() -> Outcome {
    check(lasso_case(), |(a, u, v)| {
        let w = Lasso::new(u, v).unwrap();
        ensure!(lib(a.eval_lasso(&w))? == lib(a.eval_lasso(&w.canonical()))?, "canonical form changed the value");
        Ok(())
    })
}

pub fn lasso_unrolling_value() -> Outcome {
    check(lasso_case(), |(a, u, v)| {
        let base = lib(a.eval_lasso(&Lasso::new(u.clone(), v.clone()).unwrap()))?;
        let uv = [u.clone(), v.clone()].concat();
        let vv = [v.clone(), v.clone()].concat();
        ensure!(base == lib(a.eval_lasso(&Lasso::new(uv, v.clone()).unwrap()))?, "(uv, v) differs");
        ensure!(base == lib(a.eval_lasso(&Lasso::new(u, vv).unwrap()))?, "(u, vv) differs");
        Ok(())
    })
}

pub fn contraction_preserves_expectations() -> Outcome {
    check(automaton(6, 3), |a| {
        let c = lib(contract_bottom_sccs(&a, None))?;
        let (x, y) = (Analysis::uniform(&a), Analysis::uniform(&c.automaton));
        for u in words_upto(a.letters(), 4) {
            ensure!(
                lib(x.conditional_expectation(&u))? == lib(y.conditional_expectation(&u))?,
                "expectation after {u:?} changed"
            );
        }
        Ok(())
    })
}

pub fn scc_bottom_closed() -> Outcome {
    check(automaton(6, 3), |a| {
        let d = scc_decompose(&a);
        for (c, members) in d.components.iter().enumerate() {
            let leaves = members
                .iter()
                .any(|&q| (0..a.letters()).any(|x| d.component_of[a.next(q, x)] != c));
            ensure!(d.is_bottom[c] != leaves, "component {c} bottom flag disagrees with its exits");
        }
        Ok(())
    })
}

// ---- measures ----

pub fn uniform_term_length_mass() -> Outcome {
    check((1usize..=3, (1i64..=9, 2i64..=10).prop_filter("0<λ<1", |(p, q)| p < q)), |(k, (p, q))| {
        let lambda = ratio(p, q);
        let d = lib(Distribution::uniform_term(k, lambda.clone()))?;
        for len in 0..=6 {
            let total: Rational =
                words_of_len(k, len).iter().map(|w| d.word_probability(w).unwrap()).sum();
            let expected = num_traits::pow(Rational::one() - &lambda, len) * &lambda;
            ensure!(total == expected, "length {len}: mass {total} vs {expected}");
        }
        Ok(())
    })
}

pub fn cylinder_additivity() -> Outcome {
    let case = (1usize..=3).prop_flat_map(|k| (chain_over(k, 3), vec(0..k, 0..=4)));
    check(case, |(m, u)| {
        let k = m.alphabet().len();
        let parent = lib(m.cylinder_probability(&u))?;
        let children: Rational =
            (0..k).map(|a| m.cylinder_probability(&[u.clone(), vec![a]].concat()).unwrap()).sum();
        ensure!(parent == children, "chain cylinder {u:?}: {parent} vs {children}");
        let d = Distribution::UniformInfinite { letters: k };
        let parent = lib(d.word_probability(&u))?;
        let children: Rational =
            (0..k).map(|a| d.word_probability(&[u.clone(), vec![a]].concat()).unwrap()).sum();
        ensure!(parent == children, "uniform cylinder {u:?}");
        Ok(())
    })
}

fn sample_spec() -> impl Strategy<Value = SampleSpec> {
    prop_oneof![
        ((1i64..=3), (1i64..=3)).prop_map(|(a, b)| SampleSpec::U { lambda1: ratio(a, 4), lambda2: ratio(b, 4) }),
        (1i64..=3).prop_map(|a| SampleSpec::E { lambda: ratio(a, 4) }),
        (0usize..=4).prop_map(|n| SampleSpec::En { n }),
    ]
}

pub fn draw_sample_labels() -> Outcome {
    check((automaton(6, 3), sample_spec(), 0usize..12, any::<u64>()), |(a, spec, count, seed)| {
        let s = lib(draw_sample(&spec, &a, count, &mut ChaCha8Rng::seed_from_u64(seed)))?;
        let an = Analysis::uniform(&a);
        for ex in &s.examples {
            let value = match &ex.v {
                Some(v) => lib(a.eval_lasso(&Lasso::new(ex.u.clone(), v.clone()).unwrap()))?,
                None => lib(an.conditional_expectation(&ex.u))?,
            };
            ensure!(value == ex.value, "label of {:?} is {} not {}", ex.u, ex.value, value);
            if let SampleSpec::En { n } = spec {
                ensure!(ex.u.len() == n, "(E,{n}) word of length {}", ex.u.len());
            }
        }
        Ok(())
    })
}

pub fn non_vanishing_cylinders() -> Outcome {
    let case = (1usize..=3).prop_flat_map(|k| chain_over(k, 3));
    check(case, |m| {
        if m.is_non_vanishing() {
            for u in words_upto(m.alphabet().len(), 4) {
                ensure!(lib(m.cylinder_probability(&u))? > Rational::zero(), "cylinder {u:?} is null");
            }
        }
        Ok(())
    })
}

// ---- analysis ----

pub fn reach_sums_to_one() -> Outcome {
    let case = (1usize..=3).prop_flat_map(|k| (automaton_over(k, 6), chain_over(k, 2)));
    check(case, |(a, m)| {
        for measure in [None, Some(&m)] {
            let total: Rational = lib(reach_probabilities(&a, a.initial(), measure))?.values().sum();
            ensure!(total.is_one(), "absorption mass {total}");
        }
        Ok(())
    })
}

pub fn total_expectation() -> Outcome {
    let case = (1usize..=3).prop_flat_map(|k| (automaton_over(k, 6), chain_over(k, 2)));
    check(case, |(a, m)| {
        let k = a.letters();
        let an = Analysis::uniform(&a);
        let am = lib(Analysis::new(&a, Some(&m)))?;
        let p = ratio(1, k as i64);
        for u in words_upto(k, 3) {
            let ext = |a: usize| [u.clone(), vec![a]].concat();
            let split: Rational = (0..k).map(|x| &p * an.conditional_expectation(&ext(x)).unwrap()).sum();
            ensure!(lib(an.conditional_expectation(&u))? == split, "uniform split at {u:?}");
            let pu = lib(m.cylinder_probability(&u))?;
            if pu.is_zero() {
                continue;
            }
            let mut split = Rational::zero();
            for x in 0..k {
                let pa = lib(m.cylinder_probability(&ext(x)))?;
                if !pa.is_zero() {
                    split += pa / &pu * lib(am.conditional_expectation(&ext(x)))?;
                }
            }
            ensure!(lib(am.conditional_expectation(&u))? == split, "chain split at {u:?}");
        }
        Ok(())
    })
}

pub fn distance_pseudometric() -> Outcome {
    let case = (1usize..=3).prop_flat_map(|k| (automaton_over(k, 5), automaton_over(k, 5), automaton_over(k, 5)));
    check(case, |(a, b, c)| {
        let d = |x: &Automaton, y: &Automaton| distance(x, y, None).map(|r| r.total);
        let (ab, ba, bc, ac) = (lib(d(&a, &b))?, lib(d(&b, &a))?, lib(d(&b, &c))?, lib(d(&a, &c))?);
        ensure!(ab == ba, "asymmetric: {ab} vs {ba}");
        ensure!(ac <= &ab + &bc, "triangle: {ac} > {ab} + {bc}");
        ensure!(lib(d(&a, &a))?.is_zero(), "d(A, A) != 0");
        Ok(())
    })
}

/// Report fields agree with each other: the pair masses sum to 1 and the total is
/// their weighted absolute difference.
pub fn distance_report_consistent() -> Outcome {
    check(pair(5, 3), |(a, b)| {
        let r = lib(distance(&a, &b, None))?;
        let mass: Rational = r.pairs.iter().map(|p| p.probability.clone()).sum();
        let total: Rational = r.pairs.iter().map(|p| &p.probability * (&p.x - &p.y).abs()).sum();
        ensure!(mass.is_one(), "pair mass {mass}");
        ensure!(total == r.total, "total {} vs {}", r.total, total);
        Ok(())
    })
}

/// The oracle exactly as stated: all `2^12` words truncated at length 12.
pub fn truncated_oracle_agrees() -> Outcome {
    check(pair_two_letters(), |(a, b)| {
        let exact = to_f64(&lib(distance(&a, &b, None))?.total);
        if let Some(est) = truncated_oracle(&a, &b, 12) {
            ensure!((est - exact).abs() <= 0.02, "exact {exact:.4}, truncated oracle {est:.4}");
        }
        Ok(())
    })
}

pub fn horizon_oracle_agrees() -> Outcome {
    check(pair_two_letters(), |(a, b)| {
        let exact = to_f64(&lib(distance(&a, &b, None))?.total);
        let est = horizon_oracle(&a, &b, 4096);
        ensure!((est - exact).abs() <= 0.02, "exact {exact:.4}, horizon oracle {est:.4}");
        Ok(())
    })
}

pub fn pair_two_letters() -> BoxedStrategy<(Automaton, Automaton)> {
    (automaton_over(2, 4), automaton_over(2, 4)).boxed()
}

pub fn minimize_idempotent() -> Outcome {
    check(automaton(6, 3), |a| {
        let m = lib(minimize_almost_exact(&a))?;
        ensure!(lib(distance(&a, &m, None))?.total.is_zero(), "minimization moved the value");
        ensure!(lib(minimize_almost_exact(&m))? == m, "minimizing twice changed the automaton");
        ensure!(m.state_count() <= a.state_count(), "minimization grew the automaton");
        Ok(())
    })
}

pub fn rigid_refines_distance() -> Outcome {
    check((pair(4, 2), 0i64..=8), |((a, b), e)| {
        let eps = ratio(e, 4);
        let r = lib(rigid_check(&a, &b, &eps))?;
        let d = lib(distance(&a, &b, None))?.total;
        ensure!(r.max_distance >= d, "rigid {} below plain {}", r.max_distance, d);
        ensure!(r.within == (r.max_distance <= eps), "within flag disagrees with the maximum");
        for p in &r.pairs {
            ensure!(
                a.run(&p.witness) == p.a_state && b.run(&p.witness) == p.b_state,
                "witness {:?} does not reach its pair",
                p.witness
            );
        }
        Ok(())
    })
}

// ---- learn ----

pub fn table_invariants() -> Outcome {
    check(automaton(6, 3), |hidden| {
        let teacher = Teacher::new(&hidden);
        let index = lib(minimize_almost_exact(&hidden))?.state_count();
        let k = hidden.letters();
        let mut tbl = ObservationTable::new();
        loop {
            lib(close_table(&mut tbl, &teacher))?;
            ensure!(tbl.is_closed(k) && tbl.is_separable(), "table not closed and separable");
            ensure!(tbl.access_words().len() <= index, "{} access words above index {index}", tbl.access_words().len());
            let h = lib(build_hypothesis(&tbl, &teacher))?;
            match lib(teacher.consistency(&h, &Rational::zero()))? {
                Consistency::Yes => return Ok(()),
                Consistency::Counterexample(u) => {
                    let before = tbl.access_words().len();
                    lib(process_counterexample(&mut tbl, &teacher, &u, &h))?;
                    ensure!(tbl.access_words().len() > before, "counterexample {u:?} added no access word");
                }
            }
        }
    })
}

pub fn learn_exact_minimal() -> Outcome {
    check(automaton(6, 3), |hidden| {
        let (h, _) = lib(learn(&Teacher::new(&hidden)))?;
        ensure!(lib(distance(&h, &hidden, None))?.total.is_zero(), "learned automaton differs");
        let m = lib(minimize_almost_exact(&hidden))?.state_count();
        ensure!(h.state_count() == m, "{} states, minimal is {m}", h.state_count());
        Ok(())
    })
}

pub fn query_envelope() -> Outcome {
    check(automaton(6, 3), |hidden| {
        let (h, stats) = lib(learn(&Teacher::new(&hidden)))?;
        let (m, k, l) = (h.state_count() as u64, hidden.letters() as u64, stats.max_counterexample_length as u64);
        let bound = QUERY_ENVELOPE * (m * m * k + m * l);
        ensure!(stats.expectation_queries <= bound, "{} queries above {bound}", stats.expectation_queries);
        Ok(())
    })
}

// ---- fit ----

fn fit_case() -> BoxedStrategy<(Automaton, SampleSpec, usize, u64)> {
    (automaton(3, 2), sample_spec(), 1usize..=6, any::<u64>()).boxed()
}

fn drawn(a: &Automaton, spec: &SampleSpec, count: usize, seed: u64) -> std::result::Result<Sample, TestCaseError> {
    lib(draw_sample(spec, a, count, &mut ChaCha8Rng::seed_from_u64(seed)))
}

pub fn fit_sound() -> Outcome {
    check((fit_case(), 1usize..=3), |((a, spec, count, seed), n)| {
        let s = drawn(&a, &spec, count, seed)?;
        let mut p = FitProblem::new(&s, n);
        p.budget = 200_000;
        if let FitOutcome::Found(f) = lib(fit_bounded(&p))? {
            ensure!(f.state_count() <= n, "{} states above bound {n}", f.state_count());
            ensure!(lib(check_fit(&f, &s, None))?.is_empty(), "returned automaton misfits");
        }
        Ok(())
    })
}

pub fn fit_complete_micro() -> Outcome {
    check(fit_case(), |(a, spec, count, seed)| {
        let s = drawn(&a, &spec, count, seed)?;
        let out = lib(fit_bounded(&FitProblem::new(&s, a.state_count())))?;
        ensure!(matches!(out, FitOutcome::Found(_)), "no fit with {} states: {out:?}", a.state_count());
        Ok(())
    })
}

pub fn fit_tree_fits() -> Outcome {
    check((automaton(6, 3), sample_spec(), 0usize..8, any::<u64>()), |(a, spec, count, seed)| {
        let s = drawn(&a, &spec, count, seed)?;
        let t = lib(fit_tree(&s))?;
        ensure!(lib(check_fit(&t, &s, None))?.is_empty(), "tree misfits");
        ensure!(t.state_count() <= s.total_length() + 2, "{} states for ‖S‖ = {}", t.state_count(), s.total_length());
        Ok(())
    })
}

/// Whether `fit_bounded` finds an automaton with at most `n` states; `Err` when the
/// budget runs out first.
pub fn fits(s: &Sample, n: usize) -> std::result::Result<bool, String> {
    let mut p = FitProblem::new(s, n);
    p.budget = 20_000_000;
    match fit_bounded(&p).map_err(|e| e.to_string())? {
        FitOutcome::Found(a) => Ok(check_fit(&a, s, None).map_err(|e| e.to_string())?.is_empty()),
        FitOutcome::None => Ok(false),
        FitOutcome::BudgetExhausted => Err("budget exhausted".into()),
    }
}

/// Three satisfiable and three unsatisfiable formulas with three variables.
pub fn curated_formulas() -> Vec<Sat0Formula> {
    let c = |vars: &[usize], positive| Clause { vars: vars.iter().copied().collect(), positive };
    [
        [c(&[0, 1, 2], true), c(&[0], false), c(&[1], false)],
        [c(&[0], true), c(&[1], true), c(&[2], true)],
        [c(&[0, 1, 2], false), c(&[0], true), c(&[1], true)],
        [c(&[0], true), c(&[0], false), c(&[1], true)],
        [c(&[0, 1], true), c(&[0], false), c(&[1], false)],
        [c(&[1, 2], true), c(&[1], false), c(&[2], false)],
    ]
    .into_iter()
    .map(|cs| Sat0Formula::new(3, cs.to_vec()).unwrap())
    .collect()
}

/// Every formula with one or two variables, plus the curated three-variable set for U-samples.
pub fn round_trip_family(esample: bool) -> Vec<Sat0Formula> {
    let mut out: Vec<Sat0Formula> = (1..=2).flat_map(all_formulas).collect();
    // (n + 2)-state E searches at three variables run for minutes each
    if !esample {
        out.extend(curated_formulas());
    }
    out
}

fn round_trip(esample: bool) -> Outcome {
    for phi in round_trip_family(esample) {
        let sat = truth_table(&phi);
        let (s, n) = if esample {
            (sat0_to_esample(&phi), phi.variables() + 2)
        } else {
            (sat0_to_usample(&phi), phi.variables())
        };
        let got = fits(&s, n)?;
        if got != sat {
            return Err(format!("{phi:?}: fit with {n} states {got}, satisfiable {sat}"));
        }
    }
    Ok(())
}

pub fn sat_round_trip_u() -> Outcome {
    round_trip(false)
}

pub fn sat_round_trip_e() -> Outcome {
    round_trip(true)
}

// ---- gadgets ----

fn valid(a: &Automaton) -> bool {
    validate(&a.to_raw()).is_empty()
}

pub fn gadgets_valid() -> Outcome {
    let mut fixed = vec![a1(), a2(), a3(), two_branch_small()];
    for n in 1..=4 {
        fixed.extend([a_exp(n), a_exp_merged(n, 0), a_exp_merged(n, 5), two_branch(n), two_branch_large(n)]);
        let (x, y) = characterization(n);
        fixed.extend([x, y]);
    }
    if let Some(i) = fixed.iter().position(|a| !valid(a)) {
        return Err(format!("fixed gadget {i} has defects"));
    }
    check(formula(3), |phi| {
        let (u, e) = (sat0_to_usample(&phi), sat0_to_esample(&phi));
        if let Some(sigma) = phi.solve() {
            for (variant, s) in [(Sat0Variant::U, &u), (Sat0Variant::E, &e)] {
                let a = lib(sat0_canonical_automaton(&phi, &sigma, variant))?;
                ensure!(valid(&a), "{variant:?} canonical automaton has defects");
                ensure!(lib(check_fit(&a, s, None))?.is_empty(), "{variant:?} canonical automaton misfits");
            }
        }
        Ok(())
    })
}

pub fn characterization_distance() -> Outcome {
    for n in 1..=6 {
        let (a, b) = characterization(n);
        let d = distance(&a, &b, None).map_err(|e| e.to_string())?.total;
        if d != int(2) {
            return Err(format!("n = {n}: distance {d}"));
        }
    }
    Ok(())
}

pub fn exp_family_rigid_variants() -> Outcome {
    for n in 1..=3 {
        let target = a_exp(n);
        let eps = ratio(1, 8 * n as i64);
        let variants: Vec<Automaton> = (0..1u64 << n).map(|c| a_exp_merged(n, c)).collect();
        for (c, v) in variants.iter().enumerate() {
            let r = rigid_check(&target, v, &eps).map_err(|e| e.to_string())?;
            if !r.within {
                return Err(format!("n = {n}, variant {c}: rigid distance {}", r.max_distance));
            }
            let m = minimize_almost_exact(v).map_err(|e| e.to_string())?;
            if m.state_count() != v.state_count() || v.state_count() != variants[0].state_count() {
                return Err(format!("n = {n}, variant {c} is not minimal of the common size"));
            }
        }
        for i in 0..variants.len() {
            for j in i + 1..variants.len() {
                let e = almost_equivalent(&variants[i], &variants[j], None).map_err(|e| e.to_string())?;
                if e == Equivalence::Equivalent {
                    return Err(format!("n = {n}: variants {i} and {j} are almost equivalent"));
                }
            }
        }
    }
    Ok(())
}

fn boolean_instance() -> BoxedStrategy<(Vec<Vec<bool>>, usize, usize)> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(n, m)| (vec(vec(any::<bool>(), m), n), 1usize..=3, 0usize..=4))
        .boxed()
}

fn rationals(v: &[Vec<bool>]) -> Vec<Vec<Rational>> {
    v.iter().map(|r| r.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }).collect()).collect()
}

pub fn modified_instance_conditions() -> Outcome {
    check(boolean_instance(), |(vs, k, t)| {
        let m = vs[0].len();
        let inst = lib(VectorInstance::new(rationals(&vs), k, Some(t)))?;
        let h = (2 * t).max(m).max(vs.len()) + 1;
        let out = lib(modify_bkmp(&inst, None))?;
        ensure!(condition_c1(&out), "C1 fails");
        ensure!(condition_c2(&out), "C2 fails");
        ensure!(condition_c3(&out, m, h), "C3 fails");
        ensure!(out.k == k + 2 && out.t == Some(2 * t), "parameters ({}, {:?})", out.k, out.t);
        Ok(())
    })
}

pub fn median_forward_bound() -> Outcome {
    let case = (1usize..=4, 0usize..=2)
        .prop_flat_map(|(n, pad)| {
            let m = n + 2 * pad;
            (vec(vec(any::<bool>(), m), n), vec(vec(any::<bool>(), m), 0..=2), vec(0usize..8, n))
        });
    check(case, |(vs, extra, pick)| {
        let (n, m) = (vs.len(), vs[0].len());
        let mut centers = vec![vec![false; m], vec![true; m]];
        centers.extend(extra);
        let assignment = pick.iter().map(|&c| c % centers.len()).collect();
        let sol = MedianSolution { centers, assignment };
        let inst = lib(VectorInstance::new(rationals(&vs), sol.centers.len(), None))?;
        let a = lib(bkmp_automaton(&inst, BkmpVariant::Boolean))?;
        let d = lib(distance(&a, &lib(median_automaton(&inst, &sol))?, None))?.total;
        let cost = sol.cost(&inst);
        let (n, m) = (n as i64, m as i64);
        ensure!(d == &cost / Rational::from_integer((m * m).into()), "distance {d} vs cost {cost}");
        ensure!(d <= cost / Rational::from_integer((n * m).into()), "distance above t/(nM)");
        Ok(())
    })
}

pub fn all() -> Vec<Law> {
    macro_rules! laws {
        ($($f:ident),* $(,)?) => { vec![$(Law { name: stringify!($f), run: $f }),*] };
    }
    laws![
        lasso_canonical_value,
        lasso_unrolling_value,
        contraction_preserves_expectations,
        scc_bottom_closed,
        uniform_term_length_mass,
        cylinder_additivity,
        draw_sample_labels,
        non_vanishing_cylinders,
        reach_sums_to_one,
        total_expectation,
        distance_pseudometric,
        distance_report_consistent,
        truncated_oracle_agrees,
        horizon_oracle_agrees,
        minimize_idempotent,
        rigid_refines_distance,
        table_invariants,
        learn_exact_minimal,
        query_envelope,
        fit_sound,
        fit_complete_micro,
        fit_tree_fits,
        sat_round_trip_u,
        sat_round_trip_e,
        gadgets_valid,
        characterization_distance,
        exp_family_rigid_variants,
        modified_instance_conditions,
        median_forward_bound,
    ]
}
