//! Passive learning: checking and constructing automata consistent with a sample.
//!
//! Bounded fitting enumerates transition structures only. For a fixed structure every
//! example constrains the weights linearly, so feasibility is exact linear algebra
//! (or an exact simplex when a slack is allowed).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::analysis::{distance, Analysis};
use crate::automaton::{Alphabet, Automaton, Builder, Word};
use crate::error::{Error, Result};
use crate::linalg::{feasible_point, EqualitySystem, Interval};
use crate::measures::{check_sample_consistency, MarkovChain, Sample, SampleKind};
use crate::rational::Rational;
use crate::scc::scc_decompose;

/// Indices of the examples `a` gets wrong; `a` fits `s` iff the list is empty.
/// Expectation examples whose prefix has probability 0 under the measure count as wrong.
pub fn check_fit(a: &Automaton, s: &Sample, measure: Option<&MarkovChain>) -> Result<Vec<usize>> {
    if a.alphabet() != &s.alphabet {
        return Err(Error::AlphabetMismatch("automaton and sample".into()));
    }
    let analysis = if s.kind.is_expectation() { Some(Analysis::new(a, measure)?) } else { None };
    let mut bad = Vec::new();
    for (i, ex) in s.examples.iter().enumerate() {
        let ok = match (&analysis, ex.as_lasso()) {
            (None, Some(w)) => a.eval_lasso(&w)? == ex.value,
            (Some(an), _) => match an.conditional_expectation(&ex.u) {
                Ok(v) => v == ex.value,
                Err(Error::ZeroProbability(_)) => false,
                Err(e) => return Err(e),
            },
            (None, None) => return Err(Error::internal("lasso example without a period")),
        };
        if !ok {
            bad.push(i);
        }
    }
    Ok(bad)
}

fn ensure_consistent(s: &Sample) -> Result<()> {
    match check_sample_consistency(s).into_iter().next() {
        Some(c) => Err(Error::InconsistentSample(c.to_string())),
        None => Ok(()),
    }
}

/// A trie over finite words; node 0 is the root and nodes are numbered in insertion order.
#[derive(Default)]
struct Trie {
    children: Vec<BTreeMap<usize, usize>>,
}

impl Trie {
    fn new() -> Self {
        Trie { children: vec![BTreeMap::new()] }
    }

    fn insert(&mut self, w: &[usize]) -> usize {
        let mut v = 0;
        for &a in w {
            v = match self.children[v].get(&a) {
                Some(&c) => c,
                None => {
                    self.children.push(BTreeMap::new());
                    let c = self.children.len() - 1;
                    self.children[v].insert(a, c);
                    c
                }
            };
        }
        v
    }

    fn node(&self, w: &[usize]) -> usize {
        w.iter().fold(0, |v, a| self.children[v][a])
    }
}

/// Index of the first letter where two lassos differ; they must denote different words.
fn first_difference(x: &crate::lasso::Lasso, y: &crate::lasso::Lasso) -> usize {
    // two ultimately periodic words agreeing on this many letters are equal
    let horizon = x.prefix().len().max(y.prefix().len()) + x.period().len() + y.period().len();
    (0..horizon).find(|&i| x.at(i) != y.at(i)).expect("distinct lassos differ early")
}

/// A tree-shaped automaton consistent with a consistent sample.
///
/// E-samples: the trie of the example words, with the values in between solved as a
/// harmonic function; letters leaving the trie go to sinks carrying the solved values.
/// U-samples: the trie of lasso unfoldings, each closed into a cycle that only its
/// own example uses; the closing edge carries the whole cycle weight.
pub fn fit_tree(s: &Sample) -> Result<Automaton> {
    ensure_consistent(s)?;
    if s.kind.is_expectation() {
        fit_tree_expectation(s)
    } else {
        fit_tree_lasso(s)
    }
}

fn fit_tree_expectation(s: &Sample) -> Result<Automaton> {
    let k = s.alphabet.len();
    let mut trie = Trie::new();
    for ex in &s.examples {
        trie.insert(&ex.u);
    }
    let nodes = trie.children.len();
    // variable y_v: value of the sink behind the letters leaving the trie at v
    // (for a leaf, the leaf itself is that sink)
    let mut form = vec![Vec::new(); nodes];
    let kr = Rational::from_integer((k as i64).into());
    for v in (0..nodes).rev() {
        let mut f = vec![Rational::zero(); nodes];
        let free = k - trie.children[v].len();
        if free > 0 {
            f[v] = Rational::from_integer((free as i64).into()) / &kr;
        }
        for &c in trie.children[v].values() {
            // children are inserted after their parent, so their forms are ready
            let fc: &Vec<Rational> = &form[c];
            for (x, y) in f.iter_mut().zip(fc) {
                *x += y / &kr;
            }
        }
        form[v] = f;
    }
    // Unknowns are shifted by the label of some example, so every sink value left
    // free by the system equals that label. Then the distinct sink values number at most the
    // rank, which keeps the automaton within ‖S‖ + 2 states.
    let base = s.examples.first().map_or_else(Rational::zero, |ex| ex.value.clone());
    let mut sys = EqualitySystem::new(nodes);
    for ex in &s.examples {
        let f = &form[trie.node(&ex.u)];
        let rhs = &ex.value - f.iter().sum::<Rational>() * &base;
        if !sys.push(f.clone(), rhs) {
            return Err(Error::InconsistentSample("tree values admit no solution".into()));
        }
    }
    let y: Vec<Rational> = sys.solution().into_iter().map(|z| z + &base).collect();
    let internal: Vec<usize> = (0..nodes).filter(|&v| !trie.children[v].is_empty()).collect();
    let state_of: BTreeMap<usize, usize> = internal.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut sinks: Vec<Rational> = Vec::new();
    let mut sink = |x: &Rational| match sinks.iter().position(|s| s == x) {
        Some(i) => internal.len() + i,
        None => {
            sinks.push(x.clone());
            internal.len() + sinks.len() - 1
        }
    };
    let mut edges = Vec::new();
    if internal.is_empty() {
        sink(&y[0]);
    }
    for &v in &internal {
        for a in 0..k {
            let to = match trie.children[v].get(&a) {
                Some(c) if !trie.children[*c].is_empty() => state_of[c],
                Some(c) => sink(&y[*c]),
                None => sink(&y[v]),
            };
            edges.push((state_of[&v], a, to));
        }
    }
    let mut b = Builder::new(s.alphabet.clone(), internal.len() + sinks.len());
    for (q, a, to) in edges {
        b.set(q, a, to, Rational::zero());
    }
    for (i, x) in sinks.iter().enumerate() {
        b.sink(internal.len() + i, x.clone());
    }
    b.build(0)
}

fn fit_tree_lasso(s: &Sample) -> Result<Automaton> {
    let mut seen = BTreeSet::new();
    let mut lassos = Vec::new();
    for ex in &s.examples {
        let w = ex.as_lasso().ok_or_else(|| Error::internal("lasso example without a period"))?;
        if seen.insert(w.canonical()) {
            lassos.push((w, ex.value.clone()));
        }
    }
    let mut trie = Trie::new();
    let mut closings = Vec::new();
    for (i, (w, x)) in lassos.iter().enumerate() {
        // the cycle starts at a period boundary far enough in that the word of length
        // base + |v| belongs to this example alone
        let exclusive = lassos
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, (y, _))| first_difference(w, y) + 1)
            .max()
            .unwrap_or(0);
        let (ul, vl) = (w.prefix().len(), w.period().len());
        let mut base = ul;
        while base + vl < exclusive {
            base += vl;
        }
        let end = trie.insert(&w.unfold(base + vl - 1));
        let base_node = trie.node(&w.unfold(base));
        let weight = x * Rational::from_integer((vl as i64).into());
        closings.push((end, w.at(base + vl - 1), base_node, weight));
    }
    let nodes = trie.children.len();
    let mut b = Builder::new(s.alphabet.clone(), nodes);
    for v in 0..nodes {
        for (&a, &c) in &trie.children[v] {
            b.set(v, a, c, Rational::zero());
        }
    }
    for (from, a, to, w) in closings {
        if b.is_defined(from, a) {
            return Err(Error::internal("cycle closing edge is shared"));
        }
        b.set(from, a, to, w);
    }
    for v in 0..nodes {
        b.fill(v, 0, Rational::zero());
    }
    b.build(0)
}

/// Result of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FitOutcome {
    Found(Automaton),
    /// The search space is exhausted: no automaton within the bound fits.
    None,
    /// The node budget ran out before the search finished.
    BudgetExhausted,
}

/// A bounded fitting instance.
#[derive(Clone, Debug)]
pub struct FitProblem<'a> {
    pub sample: &'a Sample,
    pub max_states: usize,
    /// Measure for expectation semantics; uniform when absent.
    pub measure: Option<&'a MarkovChain>,
    /// Per-example tolerance; exact fitting when absent.
    pub slack: Option<Rational>,
    /// Search nodes allowed in each independent subtree of the enumeration.
    pub budget: u64,
}

impl<'a> FitProblem<'a> {
    pub fn new(sample: &'a Sample, max_states: usize) -> Self {
        FitProblem { sample, max_states, measure: None, slack: None, budget: 50_000_000 }
    }
}

/// Linear constraints over the unknowns, with rollback.
#[derive(Clone)]
enum Constraints {
    Exact(EqualitySystem),
    Relaxed { vars: usize, slack: Rational, rows: Vec<Interval> },
}

impl Constraints {
    fn new(vars: usize, slack: Option<&Rational>) -> Self {
        match slack {
            Some(s) if !s.is_zero() => Constraints::Relaxed { vars, slack: s.clone(), rows: Vec::new() },
            _ => Constraints::Exact(EqualitySystem::new(vars)),
        }
    }

    fn mark(&self) -> usize {
        match self {
            Constraints::Exact(s) => s.rank(),
            Constraints::Relaxed { rows, .. } => rows.len(),
        }
    }

    fn rollback(&mut self, mark: usize) {
        match self {
            Constraints::Exact(s) => s.truncate(mark),
            Constraints::Relaxed { rows, .. } => rows.truncate(mark),
        }
    }

    /// Adds `coeffs · x = rhs`, widened to `± scale·slack` when `relax` is set.
    fn push(&mut self, coeffs: Vec<Rational>, rhs: Rational, relax: Option<&Rational>) -> bool {
        match self {
            Constraints::Exact(s) => s.push(coeffs, rhs),
            Constraints::Relaxed { vars, slack, rows } => {
                let tol = relax.map(|scale| scale * &*slack).unwrap_or_else(Rational::zero);
                rows.push(Interval { coeffs, lo: &rhs - &tol, hi: rhs + tol });
                if feasible_point(*vars, rows).is_some() {
                    true
                } else {
                    rows.pop();
                    false
                }
            }
        }
    }

    fn solution(&self) -> Vec<Rational> {
        match self {
            Constraints::Exact(s) => s.solution(),
            Constraints::Relaxed { vars, rows, .. } => {
                feasible_point(*vars, rows).expect("pushed constraints stay feasible")
            }
        }
    }
}

enum Flow {
    Found(Automaton),
    Dead,
    Exhausted,
    /// Probe mode stopped at an unforced branch point with this many options.
    Probe(usize),
}

/// Search control: a forced choice prefix, probe mode and the node budget.
struct Ctl {
    path: Vec<usize>,
    probe: bool,
    nodes: u64,
    budget: u64,
    /// Frontier index of this subtree, and the lowest index known to have succeeded.
    index: usize,
    best: Arc<AtomicUsize>,
}

impl Ctl {
    /// Options to explore at a branch point of the given depth.
    fn options(&self, depth: usize, count: usize) -> std::result::Result<Vec<usize>, Flow> {
        if depth < self.path.len() {
            Ok(if self.path[depth] < count { vec![self.path[depth]] } else { Vec::new() })
        } else if self.probe {
            Err(Flow::Probe(count))
        } else {
            Ok((0..count).collect())
        }
    }

    /// False once the budget is spent or an earlier subtree has already succeeded.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.nodes <= self.budget && self.index < self.best.load(Ordering::Relaxed)
    }
}

/// A partial transition structure numbered in order of discovery from state 0.
#[derive(Clone)]
struct Structure {
    k: usize,
    n: usize,
    delta: Vec<Option<usize>>,
    used: usize,
}

impl Structure {
    fn new(k: usize, n: usize) -> Self {
        Structure { k, n, delta: vec![None; n * k], used: 1 }
    }

    fn choices(&self) -> usize {
        self.used + usize::from(self.used < self.n)
    }

    /// Sets `δ(q, a) = t` (`t == used` creates a state) and returns whether one was created.
    fn assign(&mut self, q: usize, a: usize, t: usize) -> bool {
        self.delta[q * self.k + a] = Some(t);
        let fresh = t == self.used;
        if fresh {
            self.used += 1;
        }
        fresh
    }

    fn unassign(&mut self, q: usize, a: usize, fresh: bool) {
        self.delta[q * self.k + a] = None;
        if fresh {
            self.used -= 1;
        }
    }
}

/// Runs a search over frontier subtrees in parallel. The answer is the first success in
/// enumeration order, else "budget exhausted" if any subtree ran out, else none; it does
/// not depend on scheduling. Subtrees after a known success are cancelled.
fn run_search<S: Clone + Send + Sync>(
    start: S,
    budget: u64,
    go: impl Fn(&mut S, &mut Ctl) -> Flow + Sync,
) -> FitOutcome {
    const FRONTIER: usize = 64;
    enum Leaf {
        Open(Vec<usize>),
        Done(FitOutcome),
    }
    let best = Arc::new(AtomicUsize::new(usize::MAX));
    let ctl = |path: Vec<usize>, probe: bool, index: usize| Ctl {
        path,
        probe,
        nodes: 0,
        budget,
        index,
        best: best.clone(),
    };
    let mut frontier = vec![Leaf::Open(Vec::new())];
    loop {
        let open = frontier.iter().filter(|l| matches!(l, Leaf::Open(_))).count();
        if open == 0 || open >= FRONTIER {
            break;
        }
        let mut next = Vec::new();
        let mut grew = false;
        for leaf in frontier {
            match leaf {
                Leaf::Open(path) => match go(&mut start.clone(), &mut ctl(path.clone(), true, 0)) {
                    Flow::Probe(c) => {
                        grew = true;
                        next.extend((0..c).map(|i| {
                            let mut p = path.clone();
                            p.push(i);
                            Leaf::Open(p)
                        }));
                    }
                    Flow::Found(a) => next.push(Leaf::Done(FitOutcome::Found(a))),
                    Flow::Dead => next.push(Leaf::Done(FitOutcome::None)),
                    Flow::Exhausted => next.push(Leaf::Done(FitOutcome::BudgetExhausted)),
                },
                done => next.push(done),
            }
        }
        frontier = next;
        if !grew {
            break;
        }
    }
    if let Some(i) = frontier.iter().position(|l| matches!(l, Leaf::Done(FitOutcome::Found(_)))) {
        best.store(i, Ordering::Relaxed);
    }
    let results: Vec<FitOutcome> = frontier
        .into_par_iter()
        .enumerate()
        .map(|(i, leaf)| match leaf {
            Leaf::Done(r) => r,
            Leaf::Open(path) => {
                if i > best.load(Ordering::Relaxed) {
                    return FitOutcome::BudgetExhausted;
                }
                match go(&mut start.clone(), &mut ctl(path, false, i)) {
                    Flow::Found(a) => {
                        best.fetch_min(i, Ordering::Relaxed);
                        FitOutcome::Found(a)
                    }
                    Flow::Dead => FitOutcome::None,
                    Flow::Exhausted => FitOutcome::BudgetExhausted,
                    Flow::Probe(_) => unreachable!("probing is off"),
                }
            }
        })
        .collect();
    let mut exhausted = false;
    for r in results {
        match r {
            FitOutcome::Found(_) => return r,
            FitOutcome::BudgetExhausted => exhausted = true,
            FitOutcome::None => {}
        }
    }
    if exhausted {
        FitOutcome::BudgetExhausted
    } else {
        FitOutcome::None
    }
}

/// Exhaustive search for an automaton with at most `max_states` states fitting the sample.
pub fn fit_bounded(p: &FitProblem) -> Result<FitOutcome> {
    if p.max_states == 0 {
        return Err(Error::input("max_states must be positive"));
    }
    if let Some(m) = p.measure {
        crate::analysis::check_alphabets(&Automaton::constant(p.sample.alphabet.clone(), Rational::zero()), m)?;
    }
    ensure_consistent(p.sample)?;
    let outcome = match (p.sample.kind, p.measure) {
        (SampleKind::U, _) => fit_lasso(p),
        (_, Some(m)) if !m.is_uniform() => fit_expectation_measure(p, m),
        _ => fit_expectation_uniform(p),
    };
    if let FitOutcome::Found(a) = &outcome {
        if a.state_count() > p.max_states {
            return Err(Error::internal("fitted automaton exceeds the state bound"));
        }
        if p.slack.is_none() && !check_fit(a, p.sample, p.measure)?.is_empty() {
            return Err(Error::internal("fitted automaton fails the sample"));
        }
    }
    Ok(outcome)
}

#[derive(Clone)]
struct LassoSearch {
    alphabet: Alphabet,
    st: Structure,
    cons: Constraints,
    examples: Vec<(Word, Word, Rational)>,
}

enum Walk {
    Missing(usize, usize),
    /// Edge multiplicities on the cycle, and the cycle length.
    Cycle(Vec<Rational>, usize),
}

impl LassoSearch {
    fn walk(&self, i: usize) -> Walk {
        let (u, v, _) = &self.examples[i];
        let k = self.st.k;
        let mut q = 0;
        for &a in u {
            match self.st.delta[q * k + a] {
                Some(t) => q = t,
                None => return Walk::Missing(q, a),
            }
        }
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut trail = Vec::new();
        let mut pos = 0;
        loop {
            if let Some(&start) = seen.get(&(q, pos)) {
                let mut counts = vec![Rational::zero(); self.st.n * k];
                for &e in &trail[start..] {
                    counts[e] += Rational::one();
                }
                return Walk::Cycle(counts, trail.len() - start);
            }
            seen.insert((q, pos), trail.len());
            let a = v[pos];
            match self.st.delta[q * k + a] {
                Some(t) => {
                    trail.push(q * k + a);
                    q = t;
                }
                None => return Walk::Missing(q, a),
            }
            pos = (pos + 1) % v.len();
        }
    }

    fn go(&mut self, ctl: &mut Ctl, i: usize, depth: usize) -> Flow {
        if i == self.examples.len() {
            return Flow::Found(self.build());
        }
        match self.walk(i) {
            Walk::Missing(q, a) => {
                let opts = match ctl.options(depth, self.st.choices()) {
                    Ok(o) => o,
                    Err(f) => return f,
                };
                for t in opts {
                    if !ctl.tick() {
                        return Flow::Exhausted;
                    }
                    let fresh = self.st.assign(q, a, t);
                    let r = self.go(ctl, i, depth + 1);
                    self.st.unassign(q, a, fresh);
                    if !matches!(r, Flow::Dead) {
                        return r;
                    }
                }
                Flow::Dead
            }
            Walk::Cycle(counts, len) => {
                let len = Rational::from_integer((len as i64).into());
                let mark = self.cons.mark();
                let rhs = &self.examples[i].2 * &len;
                if !self.cons.push(counts, rhs, Some(&len)) {
                    return Flow::Dead;
                }
                let r = self.go(ctl, i + 1, depth);
                self.cons.rollback(mark);
                r
            }
        }
    }

    fn build(&self) -> Automaton {
        let k = self.st.k;
        let w = self.cons.solution();
        let n = self.st.used;
        let mut b = Builder::new(self.alphabet.clone(), n);
        for q in 0..n {
            for a in 0..k {
                match self.st.delta[q * k + a] {
                    Some(t) => b.set(q, a, t, w[q * k + a].clone()),
                    None => b.set(q, a, q, Rational::zero()),
                };
            }
        }
        b.build(0).expect("complete structure")
    }
}

fn fit_lasso(p: &FitProblem) -> FitOutcome {
    let k = p.sample.alphabet.len();
    let n = p.max_states;
    let examples = p
        .sample
        .examples
        .iter()
        .map(|e| (e.u.clone(), e.v.clone().unwrap_or_default(), e.value.clone()))
        .collect();
    let start = LassoSearch {
        alphabet: p.sample.alphabet.clone(),
        st: Structure::new(k, n),
        cons: Constraints::new(n * k, p.slack.as_ref()),
        examples,
    };
    run_search(start, p.budget, |s, ctl| s.go(ctl, 0, 0))
}

/// Expectation fitting under the uniform measure. Unknowns are the state expectations
/// `h(q)`: a structure fits iff some `h` is harmonic (`h(q)` is the mean of its
/// successors) and matches every example at the state its word reaches.
///
/// States are processed one at a time. A letter whose trie continuation at `q` goes on
/// past one step gets a concrete target. The other letters are grouped by what the
/// trie says one step ahead (nothing, or the example values there); letters of a group
/// are interchangeable, so each group only fixes a multiset of targets, which is all
/// the harmonic equation sees. A grouped letter is bound to a concrete target when a
/// trie node arriving at `q` later reads it. States never reached by a trie node
/// become sinks with a free value; any fitting automaton can be brought to this form
/// without changing its expectations.
#[derive(Clone)]
struct HarmonicSearch {
    alphabet: Alphabet,
    st: Structure,
    cons: Constraints,
    /// Trie children and the example value at each node.
    children: Arc<Vec<BTreeMap<usize, usize>>>,
    values: Arc<Vec<Option<Rational>>>,
    /// State of each trie node once known; `SETTLED` for leaves covered by a group.
    at: Vec<Option<usize>>,
    processed: Vec<bool>,
    /// Group of each unbound letter, per `q * k + a`.
    group_of: Vec<Option<usize>>,
    /// Per state, per group: remaining unbound letters per target.
    bags: Vec<Vec<Vec<usize>>>,
    /// Mapped nodes that may still have unmapped children.
    pending: Vec<usize>,
}

const SETTLED: usize = usize::MAX;

enum Next {
    Bind(usize, usize),
    Process(usize),
    Done,
}

/// Letters of one group and the values the trie requires behind them.
struct Group {
    letters: Vec<usize>,
    values: Vec<Rational>,
}

impl HarmonicSearch {
    /// `None` when the empty word's own example already contradicts the bound.
    fn new(p: &FitProblem) -> Option<Self> {
        let k = p.sample.alphabet.len();
        let n = p.max_states;
        let mut trie = Trie::new();
        let ends: Vec<usize> = p.sample.examples.iter().map(|e| trie.insert(&e.u)).collect();
        let mut values = vec![None; trie.children.len()];
        for (e, &v) in p.sample.examples.iter().zip(&ends) {
            values[v] = Some(e.value.clone());
        }
        let mut s = HarmonicSearch {
            alphabet: p.sample.alphabet.clone(),
            st: Structure::new(k, n),
            cons: Constraints::new(n, p.slack.as_ref()),
            at: vec![None; trie.children.len()],
            children: trie.children.into(),
            values: values.into(),
            processed: vec![false; n],
            group_of: vec![None; n * k],
            bags: vec![Vec::new(); n],
            pending: Vec::new(),
        };
        s.map(0, 0).then_some(s)
    }

    fn value_is(&mut self, q: usize, x: &Rational) -> bool {
        let mut coeffs = vec![Rational::zero(); self.st.n];
        coeffs[q] = Rational::one();
        self.cons.push(coeffs, x.clone(), Some(&Rational::one()))
    }

    /// Maps `node` to `q`, with `h(q) = x` if the node is an example.
    fn map(&mut self, node: usize, q: usize) -> bool {
        self.at[node] = Some(q);
        self.pending.push(node);
        match self.values[node].clone() {
            Some(x) => self.value_is(q, &x),
            None => true,
        }
    }

    /// Maps every child reachable through fixed transitions; `None` on a contradiction.
    fn propagate(&mut self) -> Option<Next> {
        let k = self.st.k;
        let mut waiting = Vec::new();
        let mut bind = None;
        while let Some(node) = self.pending.pop() {
            let q = self.at[node].expect("pending nodes are mapped");
            if !self.processed[q] {
                waiting.push(node);
                continue;
            }
            let children = self.children.clone();
            let mut open = false;
            for (&a, &c) in &children[node] {
                if self.at[c].is_some() {
                    continue;
                }
                match self.st.delta[q * k + a] {
                    Some(t) => {
                        if !self.map(c, t) {
                            return None;
                        }
                    }
                    None => {
                        open = true;
                        bind.get_or_insert((q, a));
                    }
                }
            }
            if open {
                waiting.push(node);
            }
        }
        self.pending = waiting;
        if let Some((q, a)) = bind {
            return Some(Next::Bind(q, a));
        }
        let next = self.pending.iter().map(|&v| self.at[v].unwrap()).min();
        Some(next.map_or(Next::Done, Next::Process))
    }

    fn step(mut self, ctl: &mut Ctl, depth: usize) -> Flow {
        match self.propagate() {
            None => Flow::Dead,
            Some(Next::Done) => Flow::Found(self.build()),
            Some(Next::Bind(q, a)) => {
                let k = self.st.k;
                let g = self.group_of[q * k + a].expect("unbound letters belong to a group");
                let targets: Vec<usize> = (0..self.st.n).filter(|&t| self.bags[q][g][t] > 0).collect();
                let opts = match ctl.options(depth, targets.len()) {
                    Ok(o) => o,
                    Err(f) => return f,
                };
                for o in opts {
                    if !ctl.tick() {
                        return Flow::Exhausted;
                    }
                    let mut next = self.clone();
                    next.bags[q][g][targets[o]] -= 1;
                    next.group_of[q * k + a] = None;
                    next.st.delta[q * k + a] = Some(targets[o]);
                    let r = next.step(ctl, depth + 1);
                    if !matches!(r, Flow::Dead) {
                        return r;
                    }
                }
                Flow::Dead
            }
            Some(Next::Process(q)) => {
                let nodes: Vec<usize> = self.pending.iter().copied().filter(|&v| self.at[v] == Some(q)).collect();
                let mut single = Vec::new();
                let mut groups: BTreeMap<Vec<Option<Rational>>, Vec<usize>> = BTreeMap::new();
                for a in 0..self.st.k {
                    let kids: Vec<Option<usize>> = nodes.iter().map(|&v| self.children[v].get(&a).copied()).collect();
                    if kids.iter().flatten().any(|&c| !self.children[c].is_empty()) {
                        single.push(a);
                        continue;
                    }
                    let signature = kids.iter().map(|c| c.and_then(|c| self.values[c].clone())).collect();
                    groups.entry(signature).or_default().push(a);
                    for &c in kids.iter().flatten() {
                        self.at[c] = Some(SETTLED);
                    }
                }
                let groups: Vec<Group> = groups
                    .into_iter()
                    .map(|(sig, letters)| {
                        let mut values: Vec<Rational> = sig.into_iter().flatten().collect();
                        values.sort();
                        values.dedup();
                        Group { letters, values }
                    })
                    .collect();
                self.assign_single(ctl, depth, q, &single, &groups)
            }
        }
    }

    /// Chooses `δ(q, a)` for the letters whose trie continues past the next step.
    fn assign_single(&self, ctl: &mut Ctl, depth: usize, q: usize, single: &[usize], groups: &[Group]) -> Flow {
        let Some((&a, rest)) = single.split_first() else {
            let mut next = self.clone();
            next.bags[q] = Vec::with_capacity(groups.len());
            return next.next_group(ctl, depth, q, groups);
        };
        let opts = match ctl.options(depth, self.st.choices()) {
            Ok(o) => o,
            Err(f) => return f,
        };
        for t in opts {
            if !ctl.tick() {
                return Flow::Exhausted;
            }
            let mut next = self.clone();
            next.st.assign(q, a, t);
            let r = next.assign_single(ctl, depth + 1, q, rest, groups);
            if !matches!(r, Flow::Dead) {
                return r;
            }
        }
        Flow::Dead
    }

    /// Distributes the next group, or closes `q` once every group has a bag.
    fn next_group(&self, ctl: &mut Ctl, depth: usize, q: usize, groups: &[Group]) -> Flow {
        let g = self.bags[q].len();
        if g == groups.len() {
            return self.close(ctl, depth, q);
        }
        let slots = self.st.n;
        let left = groups[g].letters.len();
        self.distribute(ctl, depth, q, groups, vec![0; slots], 0, left)
    }

    /// Splits a group over existing states and then fresh ones; fresh states are
    /// interchangeable, so their counts are non-increasing.
    #[allow(clippy::too_many_arguments)]
    fn distribute(
        &self,
        ctl: &mut Ctl,
        depth: usize,
        q: usize,
        groups: &[Group],
        mut counts: Vec<usize>,
        slot: usize,
        left: usize,
    ) -> Flow {
        if slot == counts.len() || left == 0 {
            if left > 0 {
                return Flow::Dead;
            }
            let mut next = self.clone();
            let g = next.bags[q].len();
            let existing = next.st.used;
            let mut bag = vec![0; next.st.n];
            for (slot, &c) in counts.iter().enumerate() {
                if c > 0 {
                    let t = if slot < existing {
                        slot
                    } else {
                        next.st.used += 1;
                        next.st.used - 1
                    };
                    bag[t] = c;
                    if groups[g].values.iter().any(|x| !next.value_is(t, x)) {
                        return Flow::Dead;
                    }
                }
            }
            let k = next.st.k;
            for &a in &groups[g].letters {
                next.group_of[q * k + a] = Some(g);
            }
            next.bags[q].push(bag);
            return next.next_group(ctl, depth, q, groups);
        }
        let existing = self.st.used;
        if slot >= existing + (self.st.n - existing) {
            return Flow::Dead;
        }
        let cap = if slot > existing { left.min(counts[slot - 1]) } else { left };
        let opts = match ctl.options(depth, cap + 1) {
            Ok(o) => o,
            Err(f) => return f,
        };
        for o in opts {
            if !ctl.tick() {
                return Flow::Exhausted;
            }
            counts[slot] = cap - o;
            let r = self.distribute(ctl, depth + 1, q, groups, counts.clone(), slot + 1, left - (cap - o));
            if !matches!(r, Flow::Dead) {
                return r;
            }
        }
        Flow::Dead
    }

    /// Pushes the harmonic equation of `q` and continues with the next state.
    fn close(&self, ctl: &mut Ctl, depth: usize, q: usize) -> Flow {
        let k = self.st.k;
        let mut next = self.clone();
        // k·h(q) − Σ_a h(δ(q, a)) = 0, with grouped letters counted by target
        let mut coeffs = vec![Rational::zero(); next.st.n];
        coeffs[q] += Rational::from_integer((k as i64).into());
        for a in 0..k {
            if let Some(t) = next.st.delta[q * k + a] {
                coeffs[t] -= Rational::one();
            }
        }
        for bag in &next.bags[q] {
            for (t, &c) in bag.iter().enumerate() {
                coeffs[t] -= Rational::from_integer((c as i64).into());
            }
        }
        if !next.cons.push(coeffs, Rational::zero(), None) {
            return Flow::Dead;
        }
        next.processed[q] = true;
        next.step(ctl, depth)
    }

    fn build(&self) -> Automaton {
        let k = self.st.k;
        let n = self.st.used;
        let h = self.cons.solution();
        let mut skeleton = Builder::new(self.alphabet.clone(), n);
        for q in 0..n {
            if !self.processed[q] {
                skeleton.fill(q, q, Rational::zero());
                continue;
            }
            let mut bags = self.bags[q].clone();
            for a in 0..k {
                let t = match (self.st.delta[q * k + a], self.group_of[q * k + a]) {
                    (Some(t), _) => t,
                    (None, Some(g)) => {
                        let t = bags[g].iter().position(|&c| c > 0).expect("bag covers its letters");
                        bags[g][t] -= 1;
                        t
                    }
                    (None, None) => unreachable!("processed states have every letter bound or grouped"),
                };
                skeleton.set(q, a, t, Rational::zero());
            }
        }
        let skeleton = skeleton.build(0).expect("complete structure");
        let scc = scc_decompose(&skeleton);
        let mut b = Builder::new(self.alphabet.clone(), n);
        for q in 0..n {
            let w = if scc.in_bottom(q) { h[q].clone() } else { Rational::zero() };
            for a in 0..k {
                b.set(q, a, skeleton.next(q, a), w.clone());
            }
        }
        b.build(0).expect("complete structure")
    }
}

fn fit_expectation_uniform(p: &FitProblem) -> FitOutcome {
    match HarmonicSearch::new(p) {
        Some(start) => run_search(start, p.budget, |s, ctl| s.clone().step(ctl, 0)),
        None => FitOutcome::None,
    }
}

/// Expectation fitting under a general chain: every complete structure is tried in
/// canonical order and each example becomes a linear form in the weights.
#[derive(Clone)]
struct MeasureSearch<'a> {
    st: Structure,
    sample: &'a Sample,
    chain: &'a MarkovChain,
    slack: Option<Rational>,
}

impl MeasureSearch<'_> {
    fn go(&mut self, ctl: &mut Ctl, depth: usize) -> Flow {
        let k = self.st.k;
        let next = (0..self.st.used * k).find(|&i| self.st.delta[i].is_none());
        let Some(slot) = next else {
            return self.evaluate();
        };
        let (q, a) = (slot / k, slot % k);
        let opts = match ctl.options(depth, self.st.choices()) {
            Ok(o) => o,
            Err(f) => return f,
        };
        for t in opts {
            if !ctl.tick() {
                return Flow::Exhausted;
            }
            let fresh = self.st.assign(q, a, t);
            let r = self.go(ctl, depth + 1);
            self.st.unassign(q, a, fresh);
            if !matches!(r, Flow::Dead) {
                return r;
            }
        }
        Flow::Dead
    }

    fn evaluate(&self) -> Flow {
        let k = self.st.k;
        let n = self.st.used;
        let delta: Vec<usize> = self.st.delta[..n * k].iter().map(|t| t.unwrap()).collect();
        let zero = vec![Rational::zero(); n * k];
        let skeleton = Automaton::from_tables(self.sample.alphabet.clone(), 0, delta.clone(), zero)
            .expect("complete structure");
        let Ok(an) = Analysis::new(&skeleton, Some(self.chain)) else {
            return Flow::Dead;
        };
        let mut cons = Constraints::new(n * k, self.slack.as_ref());
        for ex in &self.sample.examples {
            let Ok(form) = an.expectation_form(&ex.u) else {
                return Flow::Dead;
            };
            if !cons.push(form, ex.value.clone(), Some(&Rational::one())) {
                return Flow::Dead;
            }
        }
        let w = cons.solution();
        Flow::Found(Automaton::from_tables(self.sample.alphabet.clone(), 0, delta, w).expect("complete structure"))
    }
}

fn fit_expectation_measure(p: &FitProblem, chain: &MarkovChain) -> FitOutcome {
    let start = MeasureSearch {
        st: Structure::new(p.sample.alphabet.len(), p.max_states),
        sample: p.sample,
        chain,
        slack: p.slack.clone(),
    };
    run_search(start, p.budget, |s, ctl| s.go(ctl, 0))
}

/// Every complete transition structure with at most `n` states over `k` letters,
/// numbered canonically in order of discovery from state 0.
pub fn canonical_structures(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(st: &mut Structure, out: &mut Vec<Vec<usize>>) {
        let k = st.k;
        match (0..st.used * k).find(|&i| st.delta[i].is_none()) {
            None => out.push(st.delta[..st.used * k].iter().map(|t| t.unwrap()).collect()),
            Some(slot) => {
                for t in 0..st.choices() {
                    let fresh = st.assign(slot / k, slot % k, t);
                    rec(st, out);
                    st.unassign(slot / k, slot % k, fresh);
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Structure::new(k, n), &mut out);
    out
}

/// The least distance to `target` over all automata with at most `n` states, found by
/// exhaustive enumeration, with one automaton attaining it. For a fixed structure each
/// bottom component's best value is a weighted median of the target values it meets.
pub fn approx_minimize_bounded(target: &Automaton, n: usize) -> Result<(Rational, Automaton)> {
    if n == 0 {
        return Err(Error::input("n must be positive"));
    }
    let k = target.letters();
    let mut best: Option<(Rational, Automaton)> = None;
    for delta in canonical_structures(k, n) {
        let states = delta.len() / k;
        let zero = vec![Rational::zero(); delta.len()];
        let cand = Automaton::from_tables(target.alphabet().clone(), 0, delta.clone(), zero)?;
        let report = distance(target, &cand, None)?;
        let mut groups: BTreeMap<usize, Vec<(Rational, Rational)>> = BTreeMap::new();
        for p in report.pairs {
            groups.entry(p.b_component).or_default().push((p.x, p.probability));
        }
        let scc = scc_decompose(&cand);
        let mut weights = vec![Rational::zero(); delta.len()];
        let mut cost = Rational::zero();
        for (comp, mut pts) in groups {
            pts.sort();
            let total: Rational = pts.iter().map(|p| &p.1).sum();
            let mut acc = Rational::zero();
            let mut median = pts[0].0.clone();
            for (x, w) in &pts {
                acc += w;
                if &acc + &acc >= total {
                    median = x.clone();
                    break;
                }
            }
            cost += pts.iter().map(|(x, w)| w * (x - &median).abs()).sum::<Rational>();
            for &q in &scc.components[comp] {
                for a in 0..k {
                    weights[q * k + a] = median.clone();
                }
            }
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            let a = Automaton::from_tables(target.alphabet().clone(), 0, delta, weights)?;
            debug_assert_eq!(a.state_count(), states);
            best = Some((cost, a));
        }
    }
    Ok(best.expect("at least one structure"))
}
