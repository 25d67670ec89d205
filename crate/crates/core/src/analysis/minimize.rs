use std::collections::HashMap;

use num_traits::Zero;

use super::Analysis;
use crate::automaton::{Automaton, Builder};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scc::SccDecomposition;

/// The minimal automaton almost equivalent to `a` under the uniform measure.
///
/// Two states are merged iff every word leads them to states of equal expected value,
/// which is exactly almost-equality of the rooted automata. Bottom components of the
/// quotient are single states whose self-loops carry their value; every other weight is 0.
pub fn minimize_almost_exact(a: &Automaton) -> Result<Automaton> {
    let an = Analysis::uniform(a);
    let reach = a.reachable();
    let k = a.letters();
    // Moore refinement on the reachable part, starting from the expectation partition
    let mut class: HashMap<usize, usize> = HashMap::new();
    {
        let mut ids: HashMap<&Rational, usize> = HashMap::new();
        for &q in &reach {
            let n = ids.len();
            class.insert(q, *ids.entry(an.state_expectation(q)).or_insert(n));
        }
    }
    loop {
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut next = HashMap::new();
        for &q in &reach {
            let sig: Vec<usize> =
                std::iter::once(class[&q]).chain((0..k).map(|x| class[&a.next(q, x)])).collect();
            let n = ids.len();
            next.insert(q, *ids.entry(sig).or_insert(n));
        }
        let stable = ids.len() == class.values().collect::<std::collections::HashSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }
    // number classes in BFS order from the initial state
    let mut number: HashMap<usize, usize> = HashMap::new();
    let mut rep = Vec::new();
    for &q in &reach {
        if !number.contains_key(&class[&q]) {
            number.insert(class[&q], rep.len());
            rep.push(q);
        }
    }
    let n = rep.len();
    let delta: Vec<usize> = (0..n)
        .flat_map(|i| (0..k).map(move |x| (i, x)))
        .map(|(i, x)| number[&class[&a.next(rep[i], x)]])
        .collect();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| delta[i * k..(i + 1) * k].to_vec()).collect();
    let scc = SccDecomposition::of_graph(&succ);
    let mut b = Builder::new(a.alphabet().clone(), n);
    for i in 0..n {
        let c = scc.component_of[i];
        if scc.is_bottom[c] {
            if scc.components[c].len() != 1 || succ[i].iter().any(|&t| t != i) {
                return Err(Error::internal("bottom component of the quotient is not a single state"));
            }
            b.sink(i, an.state_expectation(rep[i]).clone());
        } else {
            for x in 0..k {
                b.set(i, x, succ[i][x], Rational::zero());
            }
        }
    }
    b.build(0)
}
