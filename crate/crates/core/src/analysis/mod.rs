//! Exact expectations, distances, equivalence, rigidity and minimization.

mod distance;
mod estimate;
mod minimize;
pub(crate) mod product;

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::automaton::{Automaton, Builder};
use crate::error::{Error, Result};
use crate::measures::MarkovChain;
use crate::rational::Rational;
use product::Product;

pub use distance::{
    almost_equivalent, distance, rigid_check, separating_word, BottomPair, DistanceReport,
    Equivalence, RigidPair, RigidReport,
};
pub use estimate::{estimate_conditional_expectation, PartialAverage, ScaledAutomaton};
pub use minimize::minimize_almost_exact;

/// An automaton synchronized with a word measure, with every absorption probability
/// and bottom value solved exactly.
///
/// Product vertices are pairs `(state, chain state)`. Under the uniform measure the chain
/// has one state and vertex `q` is automaton state `q`, so component ids coincide with
/// those of [`crate::scc::scc_decompose`].
#[derive(Clone, Debug)]
pub struct Analysis {
    automaton: Automaton,
    chain: MarkovChain,
    pub(crate) product: Product<(usize, usize)>,
    values: BTreeMap<usize, Rational>,
    absorption: Vec<BTreeMap<usize, Rational>>,
    expectation: Vec<Rational>,
}

pub(crate) fn check_alphabets(a: &Automaton, m: &MarkovChain) -> Result<()> {
    if a.alphabet() != m.alphabet() {
        return Err(Error::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            a.alphabet().letters(),
            m.alphabet().letters()
        )));
    }
    Ok(())
}

impl Analysis {
    pub fn new(a: &Automaton, measure: Option<&MarkovChain>) -> Result<Self> {
        let chain = match measure {
            Some(m) => {
                check_alphabets(a, m)?;
                m.clone()
            }
            None => MarkovChain::uniform(a.alphabet().clone()),
        };
        let s0 = chain.initial();
        let product = Product::explore((0..a.state_count()).map(|q| (q, s0)), |&(q, s)| {
            chain
                .edges(s)
                .iter()
                .map(|(x, t, p)| (*x, (a.next(q, *x), *t), p.clone()))
                .collect()
        });
        let mut values = BTreeMap::new();
        for c in product.scc.bottoms() {
            values.insert(c, product.bottom_value(c, |&(q, _), x| a.weight(q, x).clone())?);
        }
        let absorption = product.absorption()?;
        let expectation = absorption
            .iter()
            .map(|m| m.iter().map(|(c, p)| p * &values[c]).sum())
            .collect();
        Ok(Analysis { automaton: a.clone(), chain, product, values, absorption, expectation })
    }

    pub fn uniform(a: &Automaton) -> Self {
        Self::new(a, None).expect("uniform analysis of a valid automaton")
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// Product vertex of automaton state `q` paired with chain state `s`, if reachable.
    pub(crate) fn vertex(&self, q: usize, s: usize) -> Option<usize> {
        self.product.index.get(&(q, s)).copied()
    }

    fn root(&self, q: usize) -> usize {
        self.vertex(q, self.chain.initial()).expect("every state is a root")
    }

    /// Bottom components of the product, ascending.
    pub fn bottom_components(&self) -> Vec<usize> {
        self.values.keys().copied().collect()
    }

    /// Members `(state, chain state)` of a product component.
    pub fn component_members(&self, c: usize) -> Vec<(usize, usize)> {
        self.product.scc.components[c].iter().map(|&v| self.product.keys[v]).collect()
    }

    pub(crate) fn component_of_vertex(&self, v: usize) -> usize {
        self.product.scc.component_of[v]
    }

    /// Expected LimAvg value of almost every run absorbed in bottom component `c`.
    pub fn bottom_value(&self, c: usize) -> Result<Rational> {
        self.values
            .get(&c)
            .cloned()
            .ok_or_else(|| Error::input(format!("component {c} is not a bottom component")))
    }

    /// Absorption probabilities from state `q` (paired with the initial chain state).
    pub fn reach_probabilities(&self, q: usize) -> Result<BTreeMap<usize, Rational>> {
        if q >= self.automaton.state_count() {
            return Err(Error::input(format!("state {q} out of range")));
        }
        Ok(self.absorption[self.root(q)].clone())
    }

    /// Expected value of the automaton rooted at `q` (with the chain at its initial state).
    pub fn state_expectation(&self, q: usize) -> &Rational {
        &self.expectation[self.root(q)]
    }

    /// `E(A | u Σ^ω)`.
    pub fn conditional_expectation(&self, u: &[usize]) -> Result<Rational> {
        self.automaton.alphabet().check_word(u)?;
        let q = self.automaton.run(u);
        if self.chain.state_count() == 1 {
            if self.chain.cylinder_probability(u)?.is_zero() {
                return Err(Error::ZeroProbability(self.automaton.alphabet().format_word(u)));
            }
            return Ok(self.state_expectation(q).clone());
        }
        let mass = self.chain.mass_after(&self.chain.initial_mass(), u);
        self.expectation_under(q, &mass)
            .ok_or_else(|| Error::ZeroProbability(self.automaton.alphabet().format_word(u)))
    }

    /// Expectation from automaton state `q` when the chain state is distributed as `mass`
    /// (not necessarily normalized). `None` if the mass is zero.
    pub(crate) fn expectation_under(&self, q: usize, mass: &[Rational]) -> Option<Rational> {
        let total: Rational = mass.iter().sum();
        if total.is_zero() {
            return None;
        }
        let mut acc = Rational::zero();
        for (s, m) in mass.iter().enumerate() {
            if !m.is_zero() {
                let v = self.vertex(q, s).expect("positive-mass vertices are explored");
                acc += m * &self.expectation[v];
            }
        }
        Some(acc / total)
    }

    /// `E(A | u Σ^ω)` as a linear form in the weights, variable `q·|Σ| + a` standing for
    /// the weight of `(q, a)`. Only the transition structure of the analysed automaton matters.
    pub(crate) fn expectation_form(&self, u: &[usize]) -> Result<Vec<Rational>> {
        let a = &self.automaton;
        let k = a.letters();
        let vars = a.state_count() * k;
        let q = a.run(u);
        let mass = self.chain.mass_after(&self.chain.initial_mass(), u);
        let total: Rational = mass.iter().sum();
        if total.is_zero() {
            return Err(Error::ZeroProbability(a.alphabet().format_word(u)));
        }
        let mut form = vec![Rational::zero(); vars];
        for (s, m) in mass.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let v = self.vertex(q, s).expect("positive-mass vertices are explored");
            for (c, p) in &self.absorption[v] {
                let bf = self.product.bottom_form(*c, vars, |&(q, _), x| q * k + x)?;
                let f = m * p / &total;
                for (acc, b) in form.iter_mut().zip(bf) {
                    *acc += &f * b;
                }
            }
        }
        Ok(form)
    }

    pub fn expected_value(&self) -> Rational {
        self.state_expectation(self.automaton.initial()).clone()
    }
}

pub fn bottom_scc_value(a: &Automaton, c: usize, measure: Option<&MarkovChain>) -> Result<Rational> {
    Analysis::new(a, measure)?.bottom_value(c)
}

pub fn reach_probabilities(
    a: &Automaton,
    from: usize,
    measure: Option<&MarkovChain>,
) -> Result<BTreeMap<usize, Rational>> {
    Analysis::new(a, measure)?.reach_probabilities(from)
}

pub fn conditional_expectation(
    a: &Automaton,
    u: &[usize],
    measure: Option<&MarkovChain>,
) -> Result<Rational> {
    Analysis::new(a, measure)?.conditional_expectation(u)
}

pub fn expected_value(a: &Automaton, measure: Option<&MarkovChain>) -> Result<Rational> {
    Ok(Analysis::new(a, measure)?.expected_value())
}

/// Result of contracting bottom components.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub automaton: Automaton,
    /// New state of every original state.
    pub state_map: Vec<usize>,
    /// Places where the contraction depends on the measure being non-vanishing.
    pub caveats: Vec<String>,
}

/// Replaces every bottom component of `a` by one state whose self-loops carry the
/// component's expected value; all other weights become 0.
pub fn contract_bottom_sccs(a: &Automaton, measure: Option<&MarkovChain>) -> Result<Contraction> {
    let an = Analysis::new(a, measure)?;
    let scc = crate::scc::scc_decompose(a);
    let mut caveats = Vec::new();
    let mut state_map = vec![usize::MAX; a.state_count()];
    let mut next = 0;
    // bottom component -> new state, assigned in order of minimal member
    let mut bottom_state = vec![usize::MAX; scc.len()];
    for q in 0..a.state_count() {
        let c = scc.component_of[q];
        if scc.is_bottom[c] {
            if bottom_state[c] == usize::MAX {
                bottom_state[c] = next;
                next += 1;
            }
            state_map[q] = bottom_state[c];
        } else {
            state_map[q] = next;
            next += 1;
        }
    }
    let mut values: Vec<Option<Rational>> = vec![None; scc.len()];
    for pc in an.bottom_components() {
        let x = an.bottom_value(pc)?;
        let members = an.component_members(pc);
        let c = scc.component_of[members[0].0];
        if !scc.is_bottom[c] {
            caveats.push(format!(
                "transient state {} is absorbing under the measure; its value {x} is dropped",
                members[0].0
            ));
            continue;
        }
        match &values[c] {
            Some(y) if *y != x => caveats.push(format!(
                "bottom component of state {} has values {y} and {x} under the measure; keeping {y}",
                scc.components[c][0]
            )),
            Some(_) => {}
            None => values[c] = Some(x),
        }
    }
    let mut b = Builder::new(a.alphabet().clone(), next);
    for q in 0..a.state_count() {
        let c = scc.component_of[q];
        if scc.is_bottom[c] {
            if q == scc.components[c][0] {
                let x = values[c].clone().unwrap_or_else(|| {
                    caveats.push(format!(
                        "bottom component of state {q} carries no probability under the measure"
                    ));
                    Rational::zero()
                });
                b.sink(state_map[q], x);
            }
        } else {
            for x in 0..a.letters() {
                b.set(state_map[q], x, state_map[a.next(q, x)], Rational::zero());
            }
        }
    }
    let automaton = b.build(state_map[a.initial()])?;
    Ok(Contraction { automaton, state_map, caveats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::Alphabet;
    use crate::rational::{int, ratio};

    /// root --x--> sink with value x/2 for x in {a, b, c}
    fn three_branches() -> Automaton {
        let s = Alphabet::abc(3);
        let mut b = Builder::new(s, 4);
        for x in 0..3 {
            b.set(0, x, x + 1, int(0));
            b.sink(x + 1, ratio(x as i64, 2));
        }
        b.build(0).unwrap()
    }

    #[test]
    fn branch_probabilities_and_expectations() {
        let a = three_branches();
        let an = Analysis::uniform(&a);
        let reach = an.reach_probabilities(0).unwrap();
        assert_eq!(reach.len(), 3);
        assert!(reach.values().all(|p| *p == ratio(1, 3)));
        assert_eq!(an.expected_value(), ratio(1, 2));
        assert_eq!(an.conditional_expectation(&[0]).unwrap(), int(0));
        assert_eq!(an.conditional_expectation(&[2, 1]).unwrap(), int(1));
    }

    #[test]
    fn flip_flop_bottom_value() {
        let a = Automaton::from_tables(
            Alphabet::abc(2),
            0,
            vec![1, 1, 0, 0],
            vec![int(0), int(0), int(1), int(1)],
        )
        .unwrap();
        assert_eq!(bottom_scc_value(&a, 0, None).unwrap(), ratio(1, 2));
    }

    #[test]
    fn contraction_of_two_cycle() {
        // 0 -a-> 1 (weight 0), 0 -b-> 0 (weight 0); 1 -a-> 0 (weight 1), 1 -b-> 1 (weight 1)
        let a = Automaton::from_tables(
            Alphabet::abc(2),
            0,
            vec![1, 0, 0, 1],
            vec![int(0), int(0), int(1), int(1)],
        )
        .unwrap();
        let c = contract_bottom_sccs(&a, None).unwrap();
        assert_eq!(c.automaton.state_count(), 1);
        assert_eq!(*c.automaton.weight(0, 0), ratio(1, 2));
        assert!(c.caveats.is_empty());
    }

    #[test]
    fn zero_probability_condition() {
        let m = MarkovChain::new(Alphabet::abc(3), 0, vec![vec![(0, 0, int(1))]]).unwrap();
        let an = Analysis::new(&three_branches(), Some(&m)).unwrap();
        assert_eq!(an.conditional_expectation(&[]).unwrap(), int(0));
        assert!(matches!(an.conditional_expectation(&[1]), Err(Error::ZeroProbability(_))));
    }
}
