use std::collections::{BTreeMap, HashSet, VecDeque};

use num_traits::{Signed, Zero};

use super::product::Product;
use super::{check_alphabets, Analysis};
use crate::automaton::{Automaton, Word};
use crate::error::{Error, Result};
use crate::measures::MarkovChain;
use crate::rational::Rational;

/// Probability mass that ends up in bottom component `a_component` of A and
/// `b_component` of B simultaneously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BottomPair {
    pub a_component: usize,
    pub b_component: usize,
    pub probability: Rational,
    pub x: Rational,
    pub y: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceReport {
    pub pairs: Vec<BottomPair>,
    /// `E(|A - B|)`.
    pub total: Rational,
}

fn check_same_alphabet(a: &Automaton, b: &Automaton) -> Result<()> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            a.alphabet().letters(),
            b.alphabet().letters()
        )));
    }
    Ok(())
}

type Triple = (usize, usize, usize);

fn triple_product(a: &Automaton, b: &Automaton, m: &MarkovChain, roots: Vec<Triple>) -> Product<Triple> {
    Product::explore(roots, |&(q, r, s)| {
        m.edges(s)
            .iter()
            .map(|(x, t, p)| (*x, (a.next(q, *x), b.next(r, *x), *t), p.clone()))
            .collect()
    })
}

/// Value of each bottom component of the triple product under A's and B's weights,
/// checked against the factor analyses.
fn bottom_pairs(
    prod: &Product<Triple>,
    an_a: &Analysis,
    an_b: &Analysis,
) -> Result<BTreeMap<usize, (usize, usize, Rational, Rational)>> {
    let (a, b) = (an_a.automaton(), an_b.automaton());
    let mut out = BTreeMap::new();
    for c in prod.scc.bottoms() {
        let x = prod.bottom_value(c, |&(q, _, _), l| a.weight(q, l).clone())?;
        let y = prod.bottom_value(c, |&(_, r, _), l| b.weight(r, l).clone())?;
        let (q, r, s) = prod.keys[prod.scc.components[c][0]];
        let ca = project(an_a, q, s, &x)?;
        let cb = project(an_b, r, s, &y)?;
        out.insert(c, (ca, cb, x, y));
    }
    Ok(out)
}

/// Factor component of `(q, s)`; it must be bottom and carry value `x`.
fn project(an: &Analysis, q: usize, s: usize, x: &Rational) -> Result<usize> {
    let v = an
        .vertex(q, s)
        .ok_or_else(|| Error::internal("product vertex missing from factor"))?;
    let c = an.component_of_vertex(v);
    match an.bottom_value(c) {
        Ok(y) if y == *x => Ok(c),
        Ok(y) => Err(Error::internal(format!(
            "product bottom value {x} differs from factor bottom value {y}"
        ))),
        Err(_) => Err(Error::internal("product bottom projects onto a transient factor component")),
    }
}

fn measure_or_uniform(a: &Automaton, measure: Option<&MarkovChain>) -> Result<MarkovChain> {
    match measure {
        Some(m) => {
            check_alphabets(a, m)?;
            Ok(m.clone())
        }
        None => Ok(MarkovChain::uniform(a.alphabet().clone())),
    }
}

/// `E(|A - B|)` with its decomposition over pairs of bottom components.
pub fn distance(a: &Automaton, b: &Automaton, measure: Option<&MarkovChain>) -> Result<DistanceReport> {
    check_same_alphabet(a, b)?;
    let m = measure_or_uniform(a, measure)?;
    let an_a = Analysis::new(a, Some(&m))?;
    let an_b = Analysis::new(b, Some(&m))?;
    distance_with(&an_a, &an_b)
}

pub(crate) fn distance_with(an_a: &Analysis, an_b: &Analysis) -> Result<DistanceReport> {
    let (a, b, m) = (an_a.automaton(), an_b.automaton(), an_a.chain());
    let prod = triple_product(a, b, m, vec![(a.initial(), b.initial(), m.initial())]);
    let bottoms = bottom_pairs(&prod, an_a, an_b)?;
    let reach = prod.absorption()?;
    let mut grouped: BTreeMap<(usize, usize), BottomPair> = BTreeMap::new();
    for (c, p) in &reach[0] {
        let (ca, cb, x, y) = &bottoms[c];
        grouped
            .entry((*ca, *cb))
            .and_modify(|bp| bp.probability += p)
            .or_insert_with(|| BottomPair {
                a_component: *ca,
                b_component: *cb,
                probability: p.clone(),
                x: x.clone(),
                y: y.clone(),
            });
    }
    let pairs: Vec<BottomPair> = grouped.into_values().collect();
    let total = pairs.iter().map(|bp| &bp.probability * (&bp.x - &bp.y).abs()).sum();
    Ok(DistanceReport { pairs, total })
}

/// Shortest word (ties broken by letter order) with positive probability and
/// `|E(A | uΣ^ω) - E(B | uΣ^ω)| > eps`. Only call when `E(|A - B|) > eps`: such a word
/// then exists, and the search terminates.
pub fn separating_word(an_a: &Analysis, an_b: &Analysis, eps: &Rational) -> Result<Word> {
    let (a, b, m) = (an_a.automaton(), an_b.automaton(), an_a.chain());
    let start = (a.initial(), b.initial(), m.initial_mass());
    let mut seen: HashSet<(usize, usize, Vec<Rational>)> = HashSet::new();
    let mut queue: VecDeque<(usize, usize, Vec<Rational>, Word)> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start.0, start.1, start.2, Vec::new()));
    while let Some((q, r, mass, word)) = queue.pop_front() {
        let ea = an_a.expectation_under(q, &mass).expect("positive mass");
        let eb = an_b.expectation_under(r, &mass).expect("positive mass");
        if (ea - eb).abs() > *eps {
            return Ok(word);
        }
        for x in 0..a.letters() {
            let next = m.step_mass(&mass, x);
            let total: Rational = next.iter().sum();
            if total.is_zero() {
                continue;
            }
            let next: Vec<Rational> = next.into_iter().map(|v| v / &total).collect();
            let key = (a.next(q, x), b.next(r, x), next);
            if seen.insert(key.clone()) {
                let mut w = word.clone();
                w.push(x);
                queue.push_back((key.0, key.1, key.2, w));
            }
        }
    }
    Err(Error::internal("no separating word although the distance exceeds the threshold"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// A shortest word whose conditional expectations differ.
    Counterexample(Word),
}

/// Decides almost equivalence; a counterexample `u` has `E(A|uΣ^ω) ≠ E(B|uΣ^ω)`.
pub fn almost_equivalent(a: &Automaton, b: &Automaton, measure: Option<&MarkovChain>) -> Result<Equivalence> {
    check_same_alphabet(a, b)?;
    let m = measure_or_uniform(a, measure)?;
    let an_a = Analysis::new(a, Some(&m))?;
    let an_b = Analysis::new(b, Some(&m))?;
    if distance_with(&an_a, &an_b)?.total.is_zero() {
        return Ok(Equivalence::Equivalent);
    }
    Ok(Equivalence::Counterexample(separating_word(&an_a, &an_b, &Rational::zero())?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidPair {
    pub a_state: usize,
    pub b_state: usize,
    /// Shortlex-least word leading to this pair.
    pub witness: Word,
    /// `E(|A_q - B_s|)` for the automata rooted at the pair.
    pub distance: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidReport {
    pub pairs: Vec<RigidPair>,
    /// `sup_u E(|A - B| | uΣ^ω)`.
    pub max_distance: Rational,
    pub within: bool,
}

/// Rigid approximation check under the uniform measure: every co-reachable pair of
/// states must be within `eps`.
pub fn rigid_check(a: &Automaton, b: &Automaton, eps: &Rational) -> Result<RigidReport> {
    check_same_alphabet(a, b)?;
    let m = MarkovChain::uniform(a.alphabet().clone());
    let an_a = Analysis::new(a, Some(&m))?;
    let an_b = Analysis::new(b, Some(&m))?;
    let prod = triple_product(a, b, &m, vec![(a.initial(), b.initial(), 0)]);
    let bottoms = bottom_pairs(&prod, &an_a, &an_b)?;
    let reach = prod.absorption()?;
    let mut pairs = Vec::with_capacity(prod.len());
    let mut max = Rational::zero();
    for (v, &(q, r, _)) in prod.keys.iter().enumerate() {
        let d: Rational = reach[v]
            .iter()
            .map(|(c, p)| {
                let (_, _, x, y) = &bottoms[c];
                p * (x - y).abs()
            })
            .sum();
        if d > max {
            max = d.clone();
        }
        pairs.push(RigidPair { a_state: q, b_state: r, witness: prod.witness(v), distance: d });
    }
    let within = max <= *eps;
    Ok(RigidReport { pairs, max_distance: max, within })
}
