//! Strongly connected components with deterministic numbering.

use crate::automaton::Automaton;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccDecomposition {
    /// Component id of every vertex.
    pub component_of: Vec<usize>,
    /// Members of each component, ascending. Ids are ordered by minimal member.
    pub components: Vec<Vec<usize>>,
    pub is_bottom: Vec<bool>,
    /// Components such that every edge goes from an earlier to a later (or the same) one.
    pub topological: Vec<usize>,
}

impl SccDecomposition {
    /// Decomposes the graph on `0..n` given by successor lists.
    pub fn of_graph(succ: &[Vec<usize>]) -> Self {
        let n = succ.len();
        let raw = tarjan(succ);
        // Tarjan emits components in reverse topological order.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&c| raw[c][0]);
        let mut rename = vec![0; raw.len()];
        for (new, &old) in order.iter().enumerate() {
            rename[old] = new;
        }
        let mut component_of = vec![0; n];
        let mut components = vec![Vec::new(); raw.len()];
        for (old, members) in raw.iter().enumerate() {
            for &v in members {
                component_of[v] = rename[old];
            }
            components[rename[old]] = members.clone();
        }
        let mut is_bottom = vec![true; components.len()];
        for v in 0..n {
            if succ[v].iter().any(|&w| component_of[w] != component_of[v]) {
                is_bottom[component_of[v]] = false;
            }
        }
        let topological = (0..raw.len()).rev().map(|old| rename[old]).collect();
        SccDecomposition { component_of, components, is_bottom, topological }
    }

    pub fn of_automaton(a: &Automaton) -> Self {
        let succ: Vec<Vec<usize>> = (0..a.state_count())
            .map(|q| (0..a.letters()).map(|x| a.next(q, x)).collect())
            .collect();
        Self::of_graph(&succ)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn bottoms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&c| self.is_bottom[c])
    }

    pub fn in_bottom(&self, v: usize) -> bool {
        self.is_bottom[self.component_of[v]]
    }
}

pub fn scc_decompose(a: &Automaton) -> SccDecomposition {
    SccDecomposition::of_automaton(a)
}

/// Iterative Tarjan. Each returned component is sorted ascending.
fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&(v, next)) = call.last() {
            if index[v] == UNSEEN {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = succ[v].get(next) {
                call.last_mut().unwrap().1 += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}
