use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Zero};
use rand::Rng;

use crate::automaton::{Alphabet, Word};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// A finite letter-emitting Markov chain. Each step from state `s` emits letter `a`
/// and moves to `s'` with probability `E(s, a, s')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovChain {
    alphabet: Alphabet,
    initial: usize,
    /// Per state: `(letter, target, probability)` with positive probabilities.
    edges: Vec<Vec<(usize, usize, Rational)>>,
}

impl MarkovChain {
    /// Rows are checked to be stochastic; zero-probability edges are dropped.
    pub fn new(
        alphabet: Alphabet,
        initial: usize,
        edges: Vec<Vec<(usize, usize, Rational)>>,
    ) -> Result<Self> {
        let n = edges.len();
        if n == 0 {
            return Err(Error::input("Markov chain has no states"));
        }
        if initial >= n {
            return Err(Error::input(format!("initial chain state {initial} out of range")));
        }
        let mut clean = Vec::with_capacity(n);
        for (s, row) in edges.into_iter().enumerate() {
            let mut sum = Rational::zero();
            let mut kept = Vec::new();
            for (a, t, p) in row {
                if a >= alphabet.len() || t >= n {
                    return Err(Error::input(format!("chain edge out of range at state {s}")));
                }
                if p < Rational::zero() {
                    return Err(Error::input(format!("negative probability at state {s}")));
                }
                sum += &p;
                if !p.is_zero() {
                    kept.push((a, t, p));
                }
            }
            if !sum.is_one() {
                return Err(Error::input(format!(
                    "outgoing probabilities of chain state {s} sum to {sum}, not 1"
                )));
            }
            clean.push(kept);
        }
        Ok(MarkovChain { alphabet, initial, edges: clean })
    }

    /// One state emitting every letter with probability `1/|Σ|`: the uniform measure.
    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        let p = Rational::new(1.into(), (k as i64).into());
        let row = (0..k).map(|a| (a, 0, p.clone())).collect();
        MarkovChain { alphabet, initial: 0, edges: vec![row] }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn edges(&self, s: usize) -> &[(usize, usize, Rational)] {
        &self.edges[s]
    }

    /// Is this the single-state uniform chain?
    pub fn is_uniform(&self) -> bool {
        self.edges.len() == 1 && {
            let k = self.alphabet.len();
            let p = Rational::new(1.into(), (k as i64).into());
            let mut letters: Vec<usize> = self.edges[0].iter().map(|e| e.0).collect();
            letters.sort_unstable();
            letters == (0..k).collect::<Vec<_>>() && self.edges[0].iter().all(|e| e.2 == p)
        }
    }

    /// Probability mass over chain states after emitting `word` from `start`.
    pub fn mass_after(&self, start: &[Rational], word: &[usize]) -> Vec<Rational> {
        let mut mass = start.to_vec();
        for &a in word {
            mass = self.step_mass(&mass, a);
        }
        mass
    }

    pub fn step_mass(&self, mass: &[Rational], a: usize) -> Vec<Rational> {
        let mut next = vec![Rational::zero(); self.state_count()];
        for (s, m) in mass.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (b, t, p) in &self.edges[s] {
                if *b == a {
                    next[*t] += m * p;
                }
            }
        }
        next
    }

    pub fn initial_mass(&self) -> Vec<Rational> {
        let mut m = vec![Rational::zero(); self.state_count()];
        m[self.initial] = Rational::one();
        m
    }

    /// Cylinder probability `P(u Σ^ω)`.
    pub fn cylinder_probability(&self, u: &[usize]) -> Result<Rational> {
        self.alphabet.check_word(u)?;
        Ok(self.mass_after(&self.initial_mass(), u).into_iter().sum())
    }

    /// Samples a word of length `len`.
    pub fn draw_word<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Word {
        let mut s = self.initial;
        let mut word = Vec::with_capacity(len);
        for _ in 0..len {
            let row = &self.edges[s];
            let i = pick_weighted(row.iter().map(|e| &e.2), rng);
            word.push(row[i].0);
            s = row[i].1;
        }
        word
    }

    /// Whether every finite word has positive probability. Explores the reachable
    /// support sets; from each, every letter must be emitted by some member.
    pub fn is_non_vanishing(&self) -> bool {
        let start: BTreeSet<usize> = [self.initial].into_iter().collect();
        let mut seen = HashSet::new();
        let mut todo = vec![start.clone()];
        seen.insert(start);
        while let Some(set) = todo.pop() {
            for a in 0..self.alphabet.len() {
                let next: BTreeSet<usize> = set
                    .iter()
                    .flat_map(|&s| self.edges[s].iter().filter(|e| e.0 == a).map(|e| e.1))
                    .collect();
                if next.is_empty() {
                    return false;
                }
                if seen.insert(next.clone()) {
                    todo.push(next);
                }
            }
        }
        true
    }
}

/// Index drawn with probability proportional to the given nonnegative rationals.
pub(crate) fn pick_weighted<'a, R: Rng + ?Sized>(
    probs: impl Iterator<Item = &'a Rational> + Clone,
    rng: &mut R,
) -> usize {
    let weights: Vec<f64> = probs.map(crate::rational::to_f64).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
