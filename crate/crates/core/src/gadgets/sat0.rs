//! SAT₀ formulas (every clause all-positive or all-negative) and the sample-fitting
//! reductions built from them.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::automaton::{Alphabet, Automaton, Builder};
use crate::error::{Error, Result};
use crate::measures::{LabeledExample, Sample, SampleKind};
use crate::rational::{int, Rational};

/// A clause over variables `0..n`, all literals of one polarity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub vars: BTreeSet<usize>,
    pub positive: bool,
}

impl Clause {
    pub fn satisfied_by(&self, valuation: &[bool]) -> bool {
        self.vars.iter().any(|&v| valuation[v] == self.positive)
    }
}

/// `n` variables and exactly `n` clauses; clause `i` is paired with variable `i` by the
/// reductions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sat0Formula {
    variables: usize,
    clauses: Vec<Clause>,
}

impl Sat0Formula {
    pub fn new(variables: usize, clauses: Vec<Clause>) -> Result<Self> {
        if variables == 0 {
            return Err(Error::input("a formula needs at least one variable"));
        }
        if clauses.len() != variables {
            return Err(Error::input(format!(
                "{} clauses over {variables} variables; the counts must agree",
                clauses.len()
            )));
        }
        for (i, c) in clauses.iter().enumerate() {
            if c.vars.is_empty() {
                return Err(Error::input(format!("clause {} is empty", i + 1)));
            }
            if let Some(v) = c.vars.iter().find(|&&v| v >= variables) {
                return Err(Error::input(format!("clause {} mentions variable {}", i + 1, v + 1)));
            }
        }
        Ok(Sat0Formula { variables, clauses })
    }

    /// Parses DIMACS CNF. With `V` variables and `C` clauses, the formula gets
    /// `max(V, C)` variables; missing clauses repeat the last one.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut declared = None;
        let mut clauses = Vec::new();
        let mut current: Vec<i64> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 3 || f[0] != "cnf" {
                    return Err(Error::Parse(format!("bad problem line: {line}")));
                }
                let v: usize = f[1].parse().map_err(|_| Error::Parse(format!("bad problem line: {line}")))?;
                let c: usize = f[2].parse().map_err(|_| Error::Parse(format!("bad problem line: {line}")))?;
                declared = Some((v, c));
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|_| Error::Parse(format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let (v, _) = declared.ok_or_else(|| Error::Parse("missing `p cnf` line".into()))?;
        let mut out = Vec::new();
        for (i, lits) in clauses.iter().enumerate() {
            if lits.is_empty() {
                return Err(Error::input(format!("clause {} is empty", i + 1)));
            }
            let positive = lits[0] > 0;
            if lits.iter().any(|&l| (l > 0) != positive) {
                return Err(Error::input(format!("clause {} mixes polarities", i + 1)));
            }
            let vars: BTreeSet<usize> = lits.iter().map(|l| l.unsigned_abs() as usize - 1).collect();
            if vars.iter().any(|&x| x >= v) {
                return Err(Error::input(format!("clause {} exceeds the declared variables", i + 1)));
            }
            out.push(Clause { vars, positive });
        }
        if out.is_empty() {
            return Err(Error::input("formula has no clauses"));
        }
        let n = v.max(out.len());
        while out.len() < n {
            out.push(out.last().unwrap().clone());
        }
        Sat0Formula::new(n, out)
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn satisfied_by(&self, valuation: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(valuation))
    }

    /// Truth-table search; the first satisfying valuation in binary counting order.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let n = self.variables;
        assert!(n < 32, "truth tables beyond 31 variables");
        (0u32..1 << n)
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect::<Vec<bool>>())
            .find(|val| self.satisfied_by(val))
    }
}

/// Letters `a1..an`, `c1..cn`, `d1..dn`, `b`, `t`, in that order.
pub fn sat0_alphabet(n: usize) -> Alphabet {
    let mut names = Vec::with_capacity(3 * n + 2);
    for p in ["a", "c", "d"] {
        names.extend((1..=n).map(|i| format!("{p}{i}")));
    }
    names.push("b".into());
    names.push("t".into());
    Alphabet::new(names).unwrap()
}

struct Letters {
    n: usize,
}

impl Letters {
    fn a(&self, i: usize) -> usize {
        i
    }
    fn c(&self, i: usize) -> usize {
        self.n + i
    }
    fn d(&self, i: usize) -> usize {
        2 * self.n + i
    }
    fn b(&self) -> usize {
        3 * self.n
    }
    fn t(&self) -> usize {
        3 * self.n + 1
    }
}

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// The `(prefix, period, value)` triples of the lasso reduction, groups S1 to S4 in order.
fn triples(phi: &Sat0Formula) -> Vec<(Vec<usize>, Vec<usize>, Rational)> {
    let n = phi.variables;
    let l = Letters { n };
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push((vec![l.c(i)], vec![l.a(j)], indicator(i == j)));
        }
    }
    for i in 0..n {
        for j in 0..n {
            out.push((vec![l.c(i)], vec![l.d(j)], indicator(phi.clauses[j].vars.contains(&i))));
        }
    }
    for i in 0..n {
        out.push((vec![l.c(i), l.b()], vec![l.d(i)], Rational::one()));
    }
    for i in 0..n {
        out.push((vec![l.c(i), l.b()], vec![l.t()], indicator(phi.clauses[i].positive)));
    }
    out
}

/// The U-sample: fittable by `n` states iff the formula is satisfiable.
pub fn sat0_to_usample(phi: &Sat0Formula) -> Sample {
    let examples = triples(phi).into_iter().map(|(u, v, x)| LabeledExample::lasso(u, v, x)).collect();
    Sample::new(sat0_alphabet(phi.variables), SampleKind::U, examples).unwrap()
}

/// The E-sample: each triple `(u, v, x)` becomes `(uv, x)`; fittable by `n + 2` states
/// iff the formula is satisfiable.
pub fn sat0_to_esample(phi: &Sat0Formula) -> Sample {
    let examples = triples(phi)
        .into_iter()
        .map(|(mut u, v, x)| {
            u.extend(v);
            LabeledExample::expectation(u, x)
        })
        .collect();
    Sample::new(sat0_alphabet(phi.variables), SampleKind::E, examples).unwrap()
}

/// Which reduction a canonical automaton answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sat0Variant {
    U,
    E,
}

/// The witness automaton built from a satisfying valuation. `U`: states `q_1..q_n` with
/// weighted self-loops. `E`: the same skeleton plus sinks `q_T` (value 1) and `q_F` (value 0).
pub fn sat0_canonical_automaton(phi: &Sat0Formula, sigma: &[bool], variant: Sat0Variant) -> Result<Automaton> {
    let n = phi.variables;
    if sigma.len() != n || !phi.satisfied_by(sigma) {
        return Err(Error::input("the valuation does not satisfy the formula"));
    }
    let l = Letters { n };
    // b from q_i goes to the first variable satisfying clause i
    let chosen: Vec<usize> = phi
        .clauses
        .iter()
        .map(|c| *c.vars.iter().find(|&&v| sigma[v] == c.positive).unwrap())
        .collect();
    let (states, qt, qf) = match variant {
        Sat0Variant::U => (n, 0, 0),
        Sat0Variant::E => (n + 2, n, n + 1),
    };
    let mut b = Builder::new(sat0_alphabet(n), states);
    let zero = Rational::zero;
    for i in 0..n {
        b.set(0, l.c(i), i, if i == 0 { int(1) } else { zero() });
    }
    for i in 0..n {
        b.set(i, l.b(), chosen[i], zero());
        let marks = (0..n)
            .map(|j| (l.a(j), i == j))
            .chain((0..n).map(|j| (l.d(j), phi.clauses[j].vars.contains(&i))))
            .chain([(l.t(), sigma[i])]);
        for (x, on) in marks {
            match variant {
                Sat0Variant::U => {
                    b.set(i, x, i, indicator(on));
                }
                Sat0Variant::E => {
                    b.set(i, x, if on { qt } else { qf }, zero());
                }
            }
        }
        match variant {
            Sat0Variant::U => b.fill(i, i, zero()),
            Sat0Variant::E => b.fill(i, qf, zero()),
        };
    }
    if variant == Sat0Variant::E {
        b.sink(qt, int(1)).sink(qf, zero());
    }
    b.build(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi_sat() -> Sat0Formula {
        // (x1 ∨ x2) ∧ (¬x1)
        Sat0Formula::new(
            2,
            vec![
                Clause { vars: [0, 1].into(), positive: true },
                Clause { vars: [0].into(), positive: false },
            ],
        )
        .unwrap()
    }

    #[test]
    fn sample_shapes() {
        let s = sat0_to_usample(&phi_sat());
        assert_eq!(s.examples.len(), 12);
        assert_eq!(s.alphabet.len(), 8);
        let e = sat0_to_esample(&phi_sat());
        assert!(e.examples.iter().all(|x| (2..=3).contains(&x.u.len())));
    }

    #[test]
    fn solve_and_canonical() {
        let phi = phi_sat();
        let sigma = phi.solve().unwrap();
        assert_eq!(sigma, vec![false, true]);
        let a = sat0_canonical_automaton(&phi, &sigma, Sat0Variant::U).unwrap();
        assert_eq!(a.state_count(), 2);
        let e = sat0_canonical_automaton(&phi, &sigma, Sat0Variant::E).unwrap();
        assert_eq!(e.state_count(), 4);
        assert!(sat0_canonical_automaton(&phi, &[true, true], Sat0Variant::U).is_err());
    }

    #[test]
    fn dimacs() {
        let phi = Sat0Formula::from_dimacs("c demo\np cnf 2 2\n1 2 0\n-1 0\n").unwrap();
        assert_eq!(phi, phi_sat());
        assert!(Sat0Formula::from_dimacs("p cnf 2 1\n1 -2 0\n").is_err());
        // three variables, one clause: the clause is repeated
        let phi = Sat0Formula::from_dimacs("p cnf 3 1\n-3 0\n").unwrap();
        assert_eq!(phi.clauses().len(), 3);
    }
}
