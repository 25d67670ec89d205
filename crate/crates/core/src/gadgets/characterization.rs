//! The pair `A_n`, `Ā_n` over `{a, b}`: both track the first occurrence of `a^n b`
//! and then read one more letter into a ±1 sink. They differ on almost every word,
//! yet agree on every word that avoids `a^n b`.

use num_traits::Zero;

use crate::automaton::{Alphabet, Automaton, Builder};
use crate::rational::{int, Rational};

/// `(A_n, Ā_n)`, each with `n + 4` states: counters `m_0..m_n` (state `i` = length of the
/// current run of `a`, capped at `n`), the state `f` after the first `a^n b`, and sinks
/// `q_a`, `q_b`. `A_n` gives `q_a` weight 1 and `q_b` weight −1; `Ā_n` swaps them.
pub fn characterization(n: usize) -> (Automaton, Automaton) {
    assert!(n >= 1);
    let build = |wa: Rational, wb: Rational| {
        let (f, qa, qb) = (n + 1, n + 2, n + 3);
        let mut b = Builder::new(Alphabet::abc(2), n + 4);
        for i in 0..=n {
            b.set(i, 0, (i + 1).min(n), Rational::zero());
            b.set(i, 1, if i == n { f } else { 0 }, Rational::zero());
        }
        b.set(f, 0, qa, Rational::zero()).set(f, 1, qb, Rational::zero());
        b.sink(qa, wa).sink(qb, wb);
        b.build(0).unwrap()
    };
    (build(int(1), int(-1)), build(int(-1), int(1)))
}

/// Whether `word` contains the infix `a^n b` (letters 0 and 1).
pub fn has_marker(word: &[usize], n: usize) -> bool {
    let mut run = 0;
    for &x in word {
        if x == 1 && run >= n {
            return true;
        }
        run = if x == 0 { run + 1 } else { 0 };
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::Lasso;

    #[test]
    fn values_on_lassos() {
        let (a, abar) = characterization(2);
        let al = a.alphabet().clone();
        let w = Lasso::new(al.parse_word("aaba").unwrap(), al.parse_word("a").unwrap()).unwrap();
        assert_eq!(a.eval_lasso(&w).unwrap(), int(1));
        assert_eq!(abar.eval_lasso(&w).unwrap(), int(-1));
        let w = Lasso::new(vec![1], vec![1]).unwrap();
        assert_eq!(a.eval_lasso(&w).unwrap(), int(0));
    }

    #[test]
    fn marker() {
        assert!(has_marker(&[0, 0, 1], 2));
        assert!(has_marker(&[1, 0, 0, 0, 1], 2));
        assert!(!has_marker(&[0, 1, 0, 1], 2));
    }
}
