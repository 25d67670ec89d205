//! The chain that spreads probability evenly over the cylinders of a sample's words.

use std::collections::BTreeMap;

use num_traits::One;

use crate::automaton::Word;
use crate::error::{Error, Result};
use crate::measures::{MarkovChain, Sample};
use crate::rational::Rational;

/// Each example cylinder `u_i Σ^ω` gets probability `1/k` and is uniform inside; words
/// outside every cylinder get probability 0. States are the proper prefixes of the
/// words (a trie, in BFS order) plus one uniform state, which comes last.
pub fn sample_chain(s: &Sample) -> Result<MarkovChain> {
    let words: Vec<&Word> = s.examples.iter().map(|e| &e.u).collect();
    if words.is_empty() {
        return Err(Error::input("the sample has no words"));
    }
    for (i, u) in words.iter().enumerate() {
        for (j, w) in words.iter().enumerate() {
            if i != j && w.starts_with(u) {
                return Err(Error::input(format!("example words {} and {} are prefix-comparable", i, j)));
            }
        }
    }
    let k = s.alphabet.len();
    // proper prefixes in shortlex order are exactly BFS order of the trie
    let mut prefixes: Vec<Word> = words.iter().flat_map(|u| (0..u.len()).map(|l| u[..l].to_vec())).collect();
    prefixes.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    prefixes.dedup();
    let index: BTreeMap<&Word, usize> = prefixes.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let uniform = prefixes.len();
    let count = |p: &[usize]| words.iter().filter(|u| u.starts_with(p)).count() as i64;
    let mut edges = Vec::with_capacity(uniform + 1);
    for p in &prefixes {
        let total = count(p);
        let mut row = Vec::new();
        for a in 0..k {
            let mut pa = p.clone();
            pa.push(a);
            let c = count(&pa);
            if c > 0 {
                let to = index.get(&pa).copied().unwrap_or(uniform);
                row.push((a, to, Rational::new(c.into(), total.into())));
            }
        }
        edges.push(row);
    }
    let share = Rational::one() / Rational::from_integer((k as i64).into());
    edges.push((0..k).map(|a| (a, uniform, share.clone())).collect());
    MarkovChain::new(s.alphabet.clone(), 0, edges)
}
