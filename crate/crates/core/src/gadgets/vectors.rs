//! Vector instances behind the approximate and rigid minimization reductions:
//! the two-letter lookup automata, the modified k-median padding, and the
//! dominating-set encoding.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::automaton::{Alphabet, Automaton, Builder};
use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};

/// Vectors of equal length, with a target count `k` and an optional cost budget `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorInstance {
    pub vectors: Vec<Vec<Rational>>,
    pub k: usize,
    pub t: Option<usize>,
}

impl VectorInstance {
    pub fn new(vectors: Vec<Vec<Rational>>, k: usize, t: Option<usize>) -> Result<Self> {
        if let Some(first) = vectors.first() {
            if vectors.iter().any(|v| v.len() != first.len()) {
                return Err(Error::input("vectors have different lengths"));
            }
        }
        Ok(VectorInstance { vectors, k, t })
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn is_boolean(&self) -> bool {
        self.vectors.iter().flatten().all(|x| x.is_zero() || x.is_one())
    }

    pub fn is_ternary(&self) -> bool {
        let half = ratio(1, 2);
        self.vectors.iter().flatten().all(|x| x.is_zero() || x.is_one() || *x == half)
    }
}

/// Which lookup automaton to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BkmpVariant {
    /// Boolean vectors of length `M`, padded with `N = (M - n)/2` copies of `0` and of `1`.
    Boolean,
    /// Vectors over `{0, 1/2, 1}`, as many as their length, and three sinks.
    Ternary,
}

fn letters(m: usize) -> Alphabet {
    Alphabet::new((1..=m).map(|i| format!("a{i}"))).unwrap()
}

/// The automaton whose expectation after `a_i a_j` is `v_i[j]`.
///
/// Boolean states: `q0`, `s_1..s_n`, sinks `p0`, `p1` (`n + 3`). Padding letters
/// `a_{n+1}..a_{n+N}` go straight to `p0`, the rest to `p1`.
/// Ternary states: `q0`, `s_1..s_n`, sinks `p0`, `p½`, `p1` (`n + 4`).
pub fn bkmp_automaton(inst: &VectorInstance, variant: BkmpVariant) -> Result<Automaton> {
    let n = inst.vectors.len();
    let m = inst.dimension();
    if n == 0 {
        return Err(Error::input("no vectors"));
    }
    let values: Vec<Rational> = match variant {
        BkmpVariant::Boolean => {
            if !inst.is_boolean() {
                return Err(Error::input("entries must be 0 or 1"));
            }
            if m < n || (m - n) % 2 != 0 {
                return Err(Error::input(format!(
                    "vector length {m} must be at least the vector count {n}, with even difference"
                )));
            }
            vec![Rational::zero(), Rational::one()]
        }
        BkmpVariant::Ternary => {
            if !inst.is_ternary() {
                return Err(Error::input("entries must be 0, 1/2 or 1"));
            }
            if m != n {
                return Err(Error::input(format!("{n} vectors of length {m}; the counts must agree")));
            }
            vec![Rational::zero(), ratio(1, 2), Rational::one()]
        }
    };
    let sink0 = n + 1;
    let mut b = Builder::new(letters(m), n + 1 + values.len());
    for (i, v) in values.iter().enumerate() {
        b.sink(sink0 + i, v.clone());
    }
    let sink_of = |x: &Rational| sink0 + values.iter().position(|v| v == x).unwrap();
    for (i, v) in inst.vectors.iter().enumerate() {
        b.set(0, i, i + 1, Rational::zero());
        for (j, x) in v.iter().enumerate() {
            b.set(i + 1, j, sink_of(x), Rational::zero());
        }
    }
    let pad = (m - n) / 2;
    for j in n..m {
        let target = if j < n + pad { sink0 } else { sink0 + values.len() - 1 };
        b.set(0, j, target, Rational::zero());
    }
    b.build(0)
}

/// A k-median solution: Boolean centers, including the all-0 and all-1 vectors, and
/// the center index of every vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MedianSolution {
    pub centers: Vec<Vec<bool>>,
    pub assignment: Vec<usize>,
}

impl MedianSolution {
    /// Total L1 cost over the instance.
    pub fn cost(&self, inst: &VectorInstance) -> Rational {
        inst.vectors
            .iter()
            .zip(&self.assignment)
            .map(|(v, &c)| {
                v.iter()
                    .zip(&self.centers[c])
                    .map(|(x, &u)| if u { Rational::one() - x } else { x.clone() })
                    .sum::<Rational>()
            })
            .sum()
    }
}

/// The `(k + 1)`-state automaton of a k-median solution: the root reads `a_i` into the
/// center of `v_i` (padding letters into the 0 and 1 centers), and each center reads
/// `a_j` into the 0-sink or the 1-sink.
pub fn median_automaton(inst: &VectorInstance, sol: &MedianSolution) -> Result<Automaton> {
    let n = inst.vectors.len();
    let m = inst.dimension();
    let k = sol.centers.len();
    if sol.assignment.len() != n || sol.assignment.iter().any(|&c| c >= k) {
        return Err(Error::input("assignment does not match the instance"));
    }
    if sol.centers.iter().any(|c| c.len() != m) {
        return Err(Error::input("center length differs from the vector length"));
    }
    let zero = sol.centers.iter().position(|c| c.iter().all(|&x| !x));
    let one = sol.centers.iter().position(|c| c.iter().all(|&x| x));
    let (Some(zero), Some(one)) = (zero, one) else {
        return Err(Error::input("the centers must include the all-0 and all-1 vectors"));
    };
    // state 0 is the root, center c is state c + 1
    let mut b = Builder::new(letters(m), k + 1);
    for (i, &c) in sol.assignment.iter().enumerate() {
        b.set(0, i, c + 1, Rational::zero());
    }
    let pad = (m - n) / 2;
    for j in n..m {
        b.set(0, j, if j < n + pad { zero + 1 } else { one + 1 }, Rational::zero());
    }
    for (c, center) in sol.centers.iter().enumerate() {
        if c == zero {
            b.sink(c + 1, Rational::zero());
        } else if c == one {
            b.sink(c + 1, Rational::one());
        } else {
            for (j, &bit) in center.iter().enumerate() {
                b.set(c + 1, j, if bit { one + 1 } else { zero + 1 }, Rational::zero());
            }
        }
    }
    b.build(0)
}

/// Pads Boolean vectors of length `m` to `2m + 2h`: `v`, its complement, `h` ones, `h` zeros.
/// Adds the all-0 and all-1 vectors first. The result asks for `k + 2` centers at cost `2t`.
/// `h` defaults to `max(2t, m, n) + 1`.
pub fn modify_bkmp(inst: &VectorInstance, h: Option<usize>) -> Result<VectorInstance> {
    if !inst.is_boolean() {
        return Err(Error::input("entries must be 0 or 1"));
    }
    let m = inst.dimension();
    let t = inst.t.unwrap_or(0);
    let h = h.unwrap_or_else(|| (2 * t).max(m).max(inst.vectors.len()) + 1);
    let len = 2 * m + 2 * h;
    let mut vectors = vec![vec![Rational::zero(); len], vec![Rational::one(); len]];
    for v in &inst.vectors {
        let mut w = v.clone();
        w.extend(v.iter().map(|x| Rational::one() - x));
        w.extend(std::iter::repeat(Rational::one()).take(h));
        w.extend(std::iter::repeat(Rational::zero()).take(h));
        vectors.push(w);
    }
    VectorInstance::new(vectors, inst.k + 2, Some(2 * t))
}

fn is_const(v: &[Rational], x: &Rational) -> bool {
    v.iter().all(|y| y == x)
}

/// The instance contains the all-0 and all-1 vectors.
pub fn condition_c1(inst: &VectorInstance) -> bool {
    let (z, o) = (Rational::zero(), Rational::one());
    inst.vectors.iter().any(|v| is_const(v, &z)) && inst.vectors.iter().any(|v| is_const(v, &o))
}

fn non_constant(inst: &VectorInstance) -> impl Iterator<Item = &Vec<Rational>> {
    let (z, o) = (Rational::zero(), Rational::one());
    inst.vectors.iter().filter(move |v| !is_const(v, &z) && !is_const(v, &o))
}

/// Every other vector has as many zeros as ones.
pub fn condition_c2(inst: &VectorInstance) -> bool {
    non_constant(inst).all(|v| 2 * v.iter().filter(|x| x.is_one()).count() == v.len())
}

/// Every other vector has `h` ones then `h` zeros after position `2m`.
pub fn condition_c3(inst: &VectorInstance, m: usize, h: usize) -> bool {
    inst.dimension() == 2 * m + 2 * h
        && non_constant(inst).all(|v| {
            v[2 * m..2 * m + h].iter().all(One::is_one) && v[2 * m + h..].iter().all(Zero::is_zero)
        })
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![BTreeSet::new(); vertices];
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(Error::input(format!("edge ({u}, {v}) leaves the vertex range")));
            }
            if u == v {
                return Err(Error::input(format!("self-loop at {u}")));
            }
            if !adj[u].insert(v) {
                return Err(Error::input(format!("duplicate edge ({u}, {v})")));
            }
            adj[v].insert(u);
        }
        Ok(Graph { vertices, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.vertices)
            .flat_map(|u| self.adj[u].iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    pub fn neighbours(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    fn distances_from(&self, s: usize) -> Vec<Option<usize>> {
        let mut d = vec![None; self.vertices];
        d[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if d[v].is_none() {
                    d[v] = Some(d[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        d
    }

    /// Length of a shortest cycle; `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for s in 0..self.vertices {
            let mut d = vec![usize::MAX; self.vertices];
            let mut parent = vec![usize::MAX; self.vertices];
            d[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        parent[v] = u;
                        queue.push_back(v);
                    } else if parent[u] != v {
                        let c = d[u] + d[v] + 1;
                        best = Some(best.map_or(c, |b| b.min(c)));
                    }
                }
            }
        }
        best
    }

    /// Replaces every edge by a path of `len` edges.
    pub fn subdivide(&self, len: usize) -> Graph {
        assert!(len >= 1);
        let mut edges = Vec::new();
        let mut next = self.vertices;
        for (u, v) in self.edges() {
            let mut prev = u;
            for _ in 1..len {
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
            edges.push((prev, v));
        }
        Graph::new(next, &edges).unwrap()
    }

    pub fn is_dominating(&self, set: &[usize]) -> bool {
        (0..self.vertices).all(|v| set.iter().any(|&d| d == v || self.adj[d].contains(&v)))
    }
}

/// Vectors `v_j[i]`: 1 on the diagonal, 1/2 within distance 2, 0 otherwise. The graph
/// must have girth at least 5; `subdivide` first replaces every edge by a 5-edge path.
pub fn dominating_set_to_vectors(g: &Graph, k: usize, subdivide: bool) -> Result<(Graph, VectorInstance)> {
    let g = if subdivide { g.subdivide(5) } else { g.clone() };
    if let Some(girth) = g.girth() {
        if girth < 5 {
            return Err(Error::input(format!("graph has a cycle of length {girth} (< 5)")));
        }
    }
    let n = g.vertex_count();
    let vectors = (0..n)
        .map(|j| {
            let d = g.distances_from(j);
            (0..n)
                .map(|i| match d[i] {
                    Some(0) => Rational::one(),
                    Some(1) | Some(2) => ratio(1, 2),
                    _ => Rational::zero(),
                })
                .collect()
        })
        .collect();
    Ok((g, VectorInstance::new(vectors, k, None)?))
}

/// Cover vectors of a dominating set: `3/4` on the dominator and its neighbours, `1/4` elsewhere.
pub fn dominating_set_cover(g: &Graph, set: &[usize]) -> Vec<Vec<Rational>> {
    set.iter()
        .map(|&d| {
            (0..g.vertex_count())
                .map(|j| if j == d || g.neighbours(d).contains(&j) { ratio(3, 4) } else { ratio(1, 4) })
                .collect()
        })
        .collect()
}

/// Whether every vector lies within 1/4 (sup norm) of some cover vector.
pub fn is_quarter_cover(inst: &VectorInstance, cover: &[Vec<Rational>]) -> bool {
    let q = ratio(1, 4);
    inst.vectors.iter().all(|v| {
        cover.iter().any(|u| v.iter().zip(u).all(|(x, y)| (x - y).abs() <= q))
    })
}

/// The `(k + 3)`-state automaton of a cover over `{1/4, 3/4}`: the root reads `a_i` into
/// the first cover vector within 1/4 of `v_i`; cover states read `a_j` into a 1/4-sink or a 3/4-sink.
pub fn cover_automaton(inst: &VectorInstance, cover: &[Vec<Rational>]) -> Result<Automaton> {
    let n = inst.vectors.len();
    let k = cover.len();
    let (lo, hi) = (ratio(1, 4), ratio(3, 4));
    if cover.iter().flatten().any(|x| *x != lo && *x != hi) {
        return Err(Error::input("cover entries must be 1/4 or 3/4"));
    }
    if !is_quarter_cover(inst, cover) || inst.dimension() != n {
        return Err(Error::input("not a 1/4-cover of the instance"));
    }
    let (s_lo, s_hi) = (k + 1, k + 2);
    let mut b = Builder::new(letters(n), k + 3);
    let q = ratio(1, 4);
    for (i, v) in inst.vectors.iter().enumerate() {
        let c = cover.iter().position(|u| v.iter().zip(u).all(|(x, y)| (x - y).abs() <= q)).unwrap();
        b.set(0, i, c + 1, Rational::zero());
    }
    for (c, u) in cover.iter().enumerate() {
        for (j, x) in u.iter().enumerate() {
            b.set(c + 1, j, if *x == lo { s_lo } else { s_hi }, Rational::zero());
        }
    }
    b.sink(s_lo, lo).sink(s_hi, hi);
    b.build(0)
}
