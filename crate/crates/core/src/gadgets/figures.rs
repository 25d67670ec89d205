//! The small example automata: three-branch functions and their merges, the
//! block family with exponentially many minimal approximations, and the
//! "different minimal sizes" family.

use num_traits::Zero;

use crate::automaton::{Alphabet, Automaton, Builder};
use crate::rational::{ratio, Rational};

/// Root reading one letter of `{a, b, c}` into a sink; `values[i]` is the value of
/// the sink reached by letter `i`. Equal values share a sink. Edges into a sink carry
/// the sink value.
pub fn branches(values: [Rational; 3]) -> Automaton {
    let mut distinct: Vec<Rational> = Vec::new();
    for v in &values {
        if !distinct.contains(v) {
            distinct.push(v.clone());
        }
    }
    let mut b = Builder::new(Alphabet::abc(3), 1 + distinct.len());
    for (x, v) in values.iter().enumerate() {
        let sink = 1 + distinct.iter().position(|d| d == v).unwrap();
        b.set(0, x, sink, v.clone());
    }
    for (i, v) in distinct.iter().enumerate() {
        b.sink(i + 1, v.clone());
    }
    b.build(0).unwrap()
}

/// Sinks 0, 1/2, 1.
pub fn a1() -> Automaton {
    branches([ratio(0, 1), ratio(1, 2), ratio(1, 1)])
}

/// Branches a and b merged at 1/4.
pub fn a2() -> Automaton {
    branches([ratio(1, 4), ratio(1, 4), ratio(1, 1)])
}

/// Branches b and c merged at 3/4.
pub fn a3() -> Automaton {
    branches([ratio(0, 1), ratio(3, 4), ratio(3, 4)])
}

/// How the root of the block family reaches block `i`: a ternary tree whose leaves,
/// read in lexicographic order, lead to blocks `0, 1, ...`; surplus leaves go to the last block.
fn block_tree(b: &mut Builder, n: usize) -> Vec<usize> {
    let blocks: Vec<usize> = (0..n).map(|_| b.add_state()).collect();
    if n == 1 {
        return blocks;
    }
    let mut depth = 0;
    while 3usize.pow(depth) < n {
        depth += 1;
    }
    // BFS over tree levels; the last level's edges go straight into block roots
    let mut level = vec![0usize];
    for d in 1..=depth {
        let mut next = Vec::new();
        for (i, &node) in level.iter().enumerate() {
            for x in 0..3 {
                let leaf = i * 3 + x;
                if d == depth {
                    b.set(node, x, blocks[leaf.min(n - 1)], Rational::zero());
                } else {
                    let child = b.add_state();
                    b.set(node, x, child, Rational::zero());
                    next.push(child);
                }
            }
        }
        level = next;
    }
    blocks
}

/// Root tree leading to `n` blocks; block `i` reads one letter into sinks of values
/// `4i/4n`, `(4i+1)/4n`, `(4i+2)/4n`. For `n = 1` the root is the block.
pub fn a_exp(n: usize) -> Automaton {
    assert!(n >= 1);
    a_exp_with(n, |i| {
        let d = 4 * n as i64;
        let base = 4 * i as i64;
        [ratio(base, d), ratio(base + 1, d), ratio(base + 2, d)]
    })
}

/// The block family with arbitrary per-block sink values (equal values share a sink).
pub fn a_exp_with(n: usize, values: impl Fn(usize) -> [Rational; 3]) -> Automaton {
    let mut b = if n == 1 { Builder::new(Alphabet::abc(3), 0) } else { Builder::new(Alphabet::abc(3), 1) };
    let blocks = block_tree(&mut b, n);
    for (i, &root) in blocks.iter().enumerate() {
        let vals = values(i);
        let mut sinks: Vec<(Rational, usize)> = Vec::new();
        for (x, v) in vals.iter().enumerate() {
            let s = match sinks.iter().find(|(w, _)| w == v) {
                Some((_, s)) => *s,
                None => {
                    let s = b.add_state();
                    b.sink(s, v.clone());
                    sinks.push((v.clone(), s));
                    s
                }
            };
            b.set(root, x, s, v.clone());
        }
    }
    b.build(0).unwrap()
}

/// A variant of the block family where each block merges two neighbouring sinks
/// at their midpoint: bit `i` of `choice` set merges the upper pair of block `i`
/// (`b`, `c`), clear merges the lower pair (`a`, `b`). Each variant is a rigid
/// `1/(8n)`-approximation of [`a_exp`].
pub fn a_exp_merged(n: usize, choice: u64) -> Automaton {
    a_exp_with(n, |i| {
        let d = 8 * n as i64;
        let base = 8 * i as i64;
        if choice >> i & 1 == 1 {
            [ratio(base, d), ratio(base + 3, d), ratio(base + 3, d)]
        } else {
            [ratio(base + 1, d), ratio(base + 1, d), ratio(base + 4, d)]
        }
    })
}

/// Over `{a, b}`: the first letter selects a branch, `n` further states skip letters,
/// and the next letter selects a sink. Values 0 / 1/2 on the `a` branch and 1/2 / 1 on
/// the `b` branch; the two 1/2 sinks are separate states. `2n + 5` states.
pub fn two_branch(n: usize) -> Automaton {
    assert!(n >= 1);
    let mut b = Builder::new(Alphabet::abc(2), 1);
    let values = [[ratio(0, 1), ratio(1, 2)], [ratio(1, 2), ratio(1, 1)]];
    let mut lasts = Vec::new();
    for (first, _) in values.iter().enumerate() {
        let mut prev = b.add_state();
        b.set(0, first, prev, Rational::zero());
        for _ in 1..n {
            let s = b.add_state();
            b.fill(prev, s, Rational::zero());
            prev = s;
        }
        lasts.push(prev);
    }
    for (last, vals) in lasts.into_iter().zip(values) {
        for (x, v) in vals.into_iter().enumerate() {
            let s = b.add_state();
            b.sink(s, v.clone());
            b.set(last, x, s, v);
        }
    }
    b.build(0).unwrap()
}

/// The large approximation: a chain of `n` states after the root ignoring letters,
/// then sinks 1/4 (on `a`) and 3/4 (on `b`). `n + 3` states.
pub fn two_branch_large(n: usize) -> Automaton {
    assert!(n >= 1);
    let mut b = Builder::new(Alphabet::abc(2), n + 3);
    for i in 0..n {
        b.fill(i, i + 1, Rational::zero());
    }
    b.set(n, 0, n + 1, ratio(1, 4)).set(n, 1, n + 2, ratio(3, 4));
    b.sink(n + 1, ratio(1, 4)).sink(n + 2, ratio(3, 4));
    b.build(0).unwrap()
}

/// The small approximation: the first letter selects sink 1/4 (`a`) or 3/4 (`b`).
pub fn two_branch_small() -> Automaton {
    let mut b = Builder::new(Alphabet::abc(2), 3);
    b.set(0, 0, 1, ratio(1, 4)).set(0, 1, 2, ratio(3, 4));
    b.sink(1, ratio(1, 4)).sink(2, ratio(3, 4));
    b.build(0).unwrap()
}
