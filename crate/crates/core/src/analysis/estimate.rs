use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::automaton::{Automaton, Word};
use crate::rational::{common_denominator, Rational};

/// Black-box access to the partial averages of a function on infinite words.
pub trait PartialAverage {
    fn letters(&self) -> usize;
    /// Average weight of the first `word.len()` steps of any infinite continuation of `word`.
    fn partial_average(&self, word: &[usize]) -> Rational;
}

/// An automaton with weights scaled to machine integers, for fast partial averages.
#[derive(Clone, Debug)]
pub struct ScaledAutomaton {
    automaton: Automaton,
    denominator: BigInt,
    scaled: Option<Vec<i128>>,
}

impl ScaledAutomaton {
    pub fn new(a: &Automaton) -> Self {
        let denominator = common_denominator(a.weight_table());
        let scaled = a
            .weight_table()
            .iter()
            .map(|w| (w * Rational::from_integer(denominator.clone())).to_integer().to_i64().map(i128::from))
            .collect();
        ScaledAutomaton { automaton: a.clone(), denominator, scaled }
    }
}

impl PartialAverage for ScaledAutomaton {
    fn letters(&self) -> usize {
        self.automaton.letters()
    }

    fn partial_average(&self, word: &[usize]) -> Rational {
        let a = &self.automaton;
        let len = BigInt::from(word.len().max(1));
        let mut q = a.initial();
        match &self.scaled {
            Some(w) => {
                let k = a.letters();
                let mut sum: i128 = 0;
                for &x in word {
                    sum += w[q * k + x];
                    q = a.next(q, x);
                }
                Rational::new(BigInt::from(sum), &self.denominator * len)
            }
            None => {
                let mut sum = Rational::from_integer(0.into());
                for &x in word {
                    sum += a.weight(q, x);
                    q = a.next(q, x);
                }
                sum / Rational::from_integer(len)
            }
        }
    }
}

/// Mean over `k` random continuations `v_i` of length `k` of the partial average of `u v_i`.
pub fn estimate_conditional_expectation<B: PartialAverage + ?Sized, R: Rng + ?Sized>(
    blackbox: &B,
    u: &[usize],
    k: usize,
    rng: &mut R,
) -> Rational {
    assert!(k >= 1, "the estimator needs k >= 1");
    let mut word: Word = u.to_vec();
    let mut total = Rational::from_integer(0.into());
    for _ in 0..k {
        word.truncate(u.len());
        word.extend((0..k).map(|_| rng.gen_range(0..blackbox.letters())));
        total += blackbox.partial_average(&word);
    }
    total / Rational::from_integer(BigInt::from(k))
}
