//! Finite Markov chains obtained by synchronizing automata with a word measure,
//! and their exact absorption and stationary quantities.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::Rational;
use crate::scc::SccDecomposition;

#[derive(Clone, Debug)]
pub(crate) struct Edge {
    pub to: usize,
    pub letter: usize,
    pub prob: Rational,
}

#[derive(Clone, Debug)]
pub(crate) struct Product<K> {
    pub keys: Vec<K>,
    pub index: HashMap<K, usize>,
    pub edges: Vec<Vec<Edge>>,
    /// BFS tree: predecessor and letter for every non-root vertex.
    pub parent: Vec<Option<(usize, usize)>>,
    pub scc: SccDecomposition,
}

impl<K: Clone + Eq + Hash> Product<K> {
    /// Breadth-first exploration from `roots`; `step` lists `(letter, successor, probability)`
    /// with positive probabilities, letters ascending.
    pub fn explore(
        roots: impl IntoIterator<Item = K>,
        mut step: impl FnMut(&K) -> Vec<(usize, K, Rational)>,
    ) -> Self {
        let mut keys = Vec::new();
        let mut index = HashMap::new();
        let mut parent = Vec::new();
        let mut queue = VecDeque::new();
        for r in roots {
            if !index.contains_key(&r) {
                index.insert(r.clone(), keys.len());
                queue.push_back(keys.len());
                keys.push(r);
                parent.push(None);
            }
        }
        let mut edges: Vec<Vec<Edge>> = Vec::new();
        while let Some(v) = queue.pop_front() {
            let succ = step(&keys[v]);
            let mut out = Vec::with_capacity(succ.len());
            for (letter, k, prob) in succ {
                let to = match index.get(&k) {
                    Some(&i) => i,
                    None => {
                        let i = keys.len();
                        index.insert(k.clone(), i);
                        keys.push(k);
                        parent.push(Some((v, letter)));
                        queue.push_back(i);
                        i
                    }
                };
                out.push(Edge { to, letter, prob });
            }
            if edges.len() <= v {
                edges.resize_with(v + 1, Vec::new);
            }
            edges[v] = out;
        }
        edges.resize_with(keys.len(), Vec::new);
        let succ: Vec<Vec<usize>> =
            edges.iter().map(|es| es.iter().map(|e| e.to).collect()).collect();
        let scc = SccDecomposition::of_graph(&succ);
        Product { keys, index, edges, parent, scc }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// Shortlex-least word leading from a root to `v`.
    pub fn witness(&self, mut v: usize) -> Vec<usize> {
        let mut w = Vec::new();
        while let Some((p, a)) = self.parent[v] {
            w.push(a);
            v = p;
        }
        w.reverse();
        w
    }

    /// Long-run mean weight inside bottom component `c`, where `weight(key, letter)`
    /// is the reward collected on each edge.
    pub fn bottom_value(&self, c: usize, weight: impl Fn(&K, usize) -> Rational) -> Result<Rational> {
        if !self.scc.is_bottom[c] {
            return Err(Error::input(format!("component {c} is not a bottom component")));
        }
        let members = &self.scc.components[c];
        let mean = |v: usize| -> Rational {
            self.edges[v].iter().map(|e| &e.prob * weight(&self.keys[v], e.letter)).sum()
        };
        if members.len() == 1 {
            return Ok(mean(members[0]));
        }
        let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = members.len();
        let mut p = vec![vec![Rational::zero(); n]; n];
        for (i, &v) in members.iter().enumerate() {
            for e in &self.edges[v] {
                p[i][pos[&e.to]] += &e.prob;
            }
        }
        let pi = linalg::stationary(&p)
            .ok_or_else(|| Error::internal("bottom component has no unique stationary law"))?;
        Ok(members.iter().zip(pi).map(|(&v, w)| w * mean(v)).sum())
    }

    /// Bottom value of `c` as a linear form over reward variables; `var(key, letter)`
    /// names the variable collected on an edge.
    pub fn bottom_form(
        &self,
        c: usize,
        vars: usize,
        var: impl Fn(&K, usize) -> usize,
    ) -> Result<Vec<Rational>> {
        let members = &self.scc.components[c];
        let pi = if members.len() == 1 {
            vec![Rational::one()]
        } else {
            let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let n = members.len();
            let mut p = vec![vec![Rational::zero(); n]; n];
            for (i, &v) in members.iter().enumerate() {
                for e in &self.edges[v] {
                    p[i][pos[&e.to]] += &e.prob;
                }
            }
            linalg::stationary(&p).ok_or_else(|| Error::internal("bottom component has no unique stationary law"))?
        };
        let mut form = vec![Rational::zero(); vars];
        for (&v, w) in members.iter().zip(pi) {
            for e in &self.edges[v] {
                form[var(&self.keys[v], e.letter)] += &w * &e.prob;
            }
        }
        Ok(form)
    }

    /// For every vertex, the probability of being absorbed in each bottom component.
    pub fn absorption(&self) -> Result<Vec<BTreeMap<usize, Rational>>> {
        let mut out: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); self.len()];
        for &c in self.scc.topological.iter().rev() {
            let members = &self.scc.components[c];
            if self.scc.is_bottom[c] {
                for &v in members {
                    out[v].insert(c, Rational::one());
                }
                continue;
            }
            let pos: HashMap<usize, usize> =
                members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let n = members.len();
            // (I - P_inner) X = R, one column per reachable bottom
            let mut a = vec![vec![Rational::zero(); n]; n];
            let mut rhs: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
            for (i, &v) in members.iter().enumerate() {
                a[i][i] += Rational::one();
                for e in &self.edges[v] {
                    if let Some(&j) = pos.get(&e.to) {
                        a[i][j] -= &e.prob;
                    } else {
                        for (b, p) in &out[e.to] {
                            *rhs[i].entry(*b).or_insert_with(Rational::zero) += &e.prob * p;
                        }
                    }
                }
            }
            let cols: Vec<usize> = {
                let mut cs: Vec<usize> = rhs.iter().flat_map(|m| m.keys().copied()).collect();
                cs.sort_unstable();
                cs.dedup();
                cs
            };
            if n == 1 {
                let inv = a[0][0].recip();
                out[members[0]] = rhs.pop().unwrap().into_iter().map(|(b, p)| (b, p * &inv)).collect();
                continue;
            }
            let b: Vec<Vec<Rational>> = rhs
                .iter()
                .map(|m| cols.iter().map(|c| m.get(c).cloned().unwrap_or_else(Rational::zero)).collect())
                .collect();
            let x = linalg::solve(a, b)
                .ok_or_else(|| Error::internal("singular absorption system"))?;
            for (i, row) in x.into_iter().enumerate() {
                out[members[i]] = cols
                    .iter()
                    .zip(row)
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(c, p)| (*c, p))
                    .collect();
            }
        }
        Ok(out)
    }
}
