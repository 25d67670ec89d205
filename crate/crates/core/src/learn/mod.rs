//! Exact active learning from expectation and consistency queries.
//!
//! Rows of the observation table are compared by exact equality of conditional
//! expectations. A hypothesis state stands for an access word `u` and its expected
//! value is `E(L | u Σ^ω)`; closedness makes that assignment harmonic, so the
//! hypothesis' own conditional expectation after `w` is the table entry of the access
//! word reached by `w`.

mod teacher;

use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;
use serde_json::json;

use crate::analysis::Analysis;
use crate::automaton::{Automaton, Builder, Word};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scc::scc_decompose;

pub use teacher::{Consistency, QueryLog, Teacher};

fn shortlex(a: &Word, b: &Word) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn concat(a: &[usize], b: &[usize]) -> Word {
    let mut w = Vec::with_capacity(a.len() + b.len());
    w.extend_from_slice(a);
    w.extend_from_slice(b);
    w
}

/// Access words `𝒬` (starting with ε), test words `𝒯` (starting with ε) and a cache of
/// answered expectations keyed by full word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationTable {
    access: Vec<Word>,
    tests: Vec<Word>,
    cells: HashMap<Word, Rational>,
}

impl Default for ObservationTable {
    fn default() -> Self {
        ObservationTable { access: vec![Vec::new()], tests: vec![Vec::new()], cells: HashMap::new() }
    }
}

impl ObservationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn access_words(&self) -> &[Word] {
        &self.access
    }

    pub fn test_words(&self) -> &[Word] {
        &self.tests
    }

    /// Number of distinct words whose expectation is cached.
    pub fn cached(&self) -> usize {
        self.cells.len()
    }

    fn query(&mut self, teacher: &Teacher, w: Word) -> Result<Rational> {
        if let Some(v) = self.cells.get(&w) {
            return Ok(v.clone());
        }
        let v = teacher.expectation(&w)?;
        self.cells.insert(w, v.clone());
        Ok(v)
    }

    /// Queries every missing cell of `𝒬 ∪ 𝒬Σ` against `𝒯`.
    fn fill(&mut self, teacher: &Teacher) -> Result<()> {
        let k = teacher.hidden().letters();
        let mut rows: Vec<Word> = self.access.clone();
        for u in &self.access {
            rows.extend((0..k).map(|a| concat(u, &[a])));
        }
        for u in rows {
            for t in self.tests.clone() {
                self.query(teacher, concat(&u, &t))?;
            }
        }
        Ok(())
    }

    /// The row of `u`; every cell must be filled.
    pub fn row(&self, u: &[usize]) -> Vec<Rational> {
        self.tests.iter().map(|t| self.cells[&concat(u, t)].clone()).collect()
    }

    fn matching(&self, u: &[usize]) -> Option<usize> {
        let r = self.row(u);
        self.access.iter().position(|q| self.row(q) == r)
    }

    pub fn is_separable(&self) -> bool {
        let rows: Vec<Vec<Rational>> = self.access.iter().map(|q| self.row(q)).collect();
        (0..rows.len()).all(|i| (i + 1..rows.len()).all(|j| rows[i] != rows[j]))
    }

    pub fn is_closed(&self, letters: usize) -> bool {
        self.access.iter().all(|u| (0..letters).all(|a| self.matching(&concat(u, &[a])).is_some()))
    }

    fn snapshot(&self, teacher: &Teacher) {
        teacher.record(|| {
            let al = teacher.hidden().alphabet();
            json!({
                "table": {
                    "access": self.access.iter().map(|w| al.format_word(w)).collect::<Vec<_>>(),
                    "tests": self.tests.iter().map(|w| al.format_word(w)).collect::<Vec<_>>(),
                    "rows": self.access.iter()
                        .map(|q| self.row(q).iter().map(ToString::to_string).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                }
            })
        });
    }
}

/// Adds one-letter extensions matching no access row, shortlex-least first, until the
/// table is closed.
pub fn close_table(tbl: &mut ObservationTable, teacher: &Teacher) -> Result<()> {
    let k = teacher.hidden().letters();
    loop {
        tbl.fill(teacher)?;
        let mut open: Vec<Word> = tbl
            .access
            .iter()
            .flat_map(|u| (0..k).map(move |a| concat(u, &[a])))
            .filter(|ua| tbl.matching(ua).is_none())
            .collect();
        open.sort_by(shortlex);
        match open.into_iter().next() {
            Some(w) => tbl.access.push(w),
            None => return Ok(()),
        }
    }
}

/// One state per access word, in table order; weights inside bottom components are
/// the access word's expectation, all others 0.
pub fn build_hypothesis(tbl: &ObservationTable, teacher: &Teacher) -> Result<Automaton> {
    let k = teacher.hidden().letters();
    if !tbl.is_separable() {
        return Err(Error::internal("observation table is not separable"));
    }
    let n = tbl.access.len();
    let mut b = Builder::new(teacher.hidden().alphabet().clone(), n);
    for (i, u) in tbl.access.iter().enumerate() {
        for a in 0..k {
            let j = tbl
                .matching(&concat(u, &[a]))
                .ok_or_else(|| Error::internal("observation table is not closed"))?;
            b.set(i, a, j, Rational::zero());
        }
    }
    let skeleton = b.build(0)?;
    let scc = scc_decompose(&skeleton);
    let mut b = Builder::new(teacher.hidden().alphabet().clone(), n);
    for (i, u) in tbl.access.iter().enumerate() {
        let w = if scc.in_bottom(i) { tbl.cells[u].clone() } else { Rational::zero() };
        for a in 0..k {
            b.set(i, a, skeleton.next(i, a), w.clone());
        }
    }
    b.build(0)
}

/// Splits a counterexample `u` at the first position where replacing the read prefix by
/// its access word changes the expectation, and adds the resulting access word and
/// test word. `h` must be the hypothesis built from `tbl`.
pub fn process_counterexample(
    tbl: &mut ObservationTable,
    teacher: &Teacher,
    u: &[usize],
    h: &Automaton,
) -> Result<()> {
    teacher.hidden().alphabet().check_word(u)?;
    if h.state_count() != tbl.access.len() {
        return Err(Error::input("the hypothesis does not belong to this table"));
    }
    let expected = tbl.query(teacher, u.to_vec())?;
    if expected == Analysis::uniform(h).conditional_expectation(u)? {
        return Err(Error::input("not a counterexample: expectations agree"));
    }
    // alpha(i) = E(L | acc(u[..i]) u[i..]); alpha(0) = E(L|u), alpha(|u|) = E(H|u)
    let alpha = |tbl: &mut ObservationTable, i: usize| -> Result<Rational> {
        let acc = &tbl.access[h.run(&u[..i])].clone();
        tbl.query(teacher, concat(acc, &u[i..]))
    };
    let mut prev = expected;
    for i in 0..u.len() {
        let next = alpha(tbl, i + 1)?;
        if next != prev {
            let acc = tbl.access[h.run(&u[..i])].clone();
            tbl.access.push(concat(&acc, &[u[i]]));
            let test = u[i + 1..].to_vec();
            if !tbl.tests.contains(&test) {
                tbl.tests.push(test);
            }
            return tbl.fill(teacher);
        }
        prev = next;
    }
    Err(Error::internal("hypothesis expectations are not harmonic"))
}

/// Summary of a learning run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LearnStats {
    pub expectation_queries: u64,
    pub consistency_queries: u64,
    pub queried_length: u64,
    pub counterexamples: usize,
    pub max_counterexample_length: usize,
    pub access_words: usize,
    pub test_words: usize,
}

/// Learns an automaton almost equivalent to the teacher's hidden one, with as many
/// states as its almost-exact minimization.
pub fn learn(teacher: &Teacher) -> Result<(Automaton, LearnStats)> {
    let mut tbl = ObservationTable::new();
    let mut stats = LearnStats::default();
    let k = teacher.hidden().letters();
    loop {
        close_table(&mut tbl, teacher)?;
        if !tbl.is_closed(k) || !tbl.is_separable() {
            return Err(Error::internal("table lost closedness or separability"));
        }
        tbl.snapshot(teacher);
        let h = build_hypothesis(&tbl, teacher)?;
        match teacher.consistency(&h, &Rational::zero())? {
            Consistency::Yes => {
                let log = teacher.log();
                stats.expectation_queries = log.expectation_queries;
                stats.consistency_queries = log.consistency_queries;
                stats.queried_length = log.queried_length;
                stats.access_words = tbl.access.len();
                stats.test_words = tbl.tests.len();
                return Ok((h, stats));
            }
            Consistency::Counterexample(u) => {
                let before = tbl.access.len();
                stats.counterexamples += 1;
                stats.max_counterexample_length = stats.max_counterexample_length.max(u.len());
                process_counterexample(&mut tbl, teacher, &u, &h)?;
                if tbl.access.len() <= before {
                    return Err(Error::internal("counterexample did not add an access word"));
                }
            }
        }
    }
}
