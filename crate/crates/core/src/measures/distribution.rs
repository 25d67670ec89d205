use num_traits::{One, Zero};
use rand::Rng;

use crate::automaton::Word;
use crate::error::{Error, Result};
use crate::measures::MarkovChain;
use crate::rational::Rational;

/// Measures on finite words (and cylinders of infinite words) over `letters` letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform over words of length exactly `n`.
    UniformN { letters: usize, n: usize },
    /// Each step stops with probability `lambda`, otherwise emits a uniform letter.
    UniformTerm { letters: usize, lambda: Rational },
    /// Uniform measure on infinite words; finite words denote cylinders.
    UniformInfinite { letters: usize },
    /// Cylinder measure of a chain; drawn words have length `cutoff`.
    Chain { chain: MarkovChain, cutoff: usize },
}

impl Distribution {
    pub fn uniform_term(letters: usize, lambda: Rational) -> Result<Self> {
        if lambda <= Rational::zero() || lambda >= Rational::one() {
            return Err(Error::input(format!("lambda = {lambda} must lie strictly in (0, 1)")));
        }
        Ok(Distribution::UniformTerm { letters, lambda })
    }

    pub fn letters(&self) -> usize {
        match self {
            Distribution::UniformN { letters, .. }
            | Distribution::UniformTerm { letters, .. }
            | Distribution::UniformInfinite { letters } => *letters,
            Distribution::Chain { chain, .. } => chain.alphabet().len(),
        }
    }

    /// Point probability of `u` (cylinder probability for the infinite-word measures).
    pub fn word_probability(&self, u: &[usize]) -> Result<Rational> {
        let k = self.letters();
        if let Some(&a) = u.iter().find(|&&a| a >= k) {
            return Err(Error::UnknownLetter(format!("#{a}")));
        }
        let letter = Rational::new(1.into(), (k as i64).into());
        let pow = |r: &Rational, e: usize| num_traits::pow(r.clone(), e);
        Ok(match self {
            Distribution::UniformN { n, .. } => {
                if u.len() == *n {
                    pow(&letter, *n)
                } else {
                    Rational::zero()
                }
            }
            Distribution::UniformTerm { lambda, .. } => {
                pow(&letter, u.len()) * pow(&(Rational::one() - lambda), u.len()) * lambda
            }
            Distribution::UniformInfinite { .. } => pow(&letter, u.len()),
            Distribution::Chain { chain, .. } => chain.cylinder_probability(u)?,
        })
    }

    pub fn draw_word<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Word> {
        match self {
            Distribution::UniformN { letters, n } => {
                Ok((0..*n).map(|_| rng.gen_range(0..*letters)).collect())
            }
            Distribution::UniformTerm { letters, lambda } => {
                let stop = crate::rational::to_f64(lambda);
                let mut w = Vec::new();
                while !rng.gen_bool(stop) {
                    w.push(rng.gen_range(0..*letters));
                }
                Ok(w)
            }
            Distribution::UniformInfinite { .. } => Err(Error::Unsupported(
                "cannot draw an infinite word from the uniform measure".into(),
            )),
            Distribution::Chain { chain, cutoff } => Ok(chain.draw_word(*cutoff, rng)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::Alphabet;
    use crate::rational::ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formula_values() {
        let d = Distribution::uniform_term(2, ratio(1, 2)).unwrap();
        assert_eq!(d.word_probability(&[0, 1]).unwrap(), ratio(1, 32));
        let d = Distribution::UniformN { letters: 2, n: 3 };
        assert_eq!(d.word_probability(&[0, 1, 0]).unwrap(), ratio(1, 8));
        assert_eq!(d.word_probability(&[0]).unwrap(), ratio(0, 1));
        let d = Distribution::Chain { chain: MarkovChain::uniform(Alphabet::abc(2)), cutoff: 3 };
        assert_eq!(d.word_probability(&[0, 0]).unwrap(), ratio(1, 4));
    }

    #[test]
    fn lambda_range_enforced() {
        assert!(Distribution::uniform_term(2, ratio(1, 1)).is_err());
        assert!(Distribution::uniform_term(2, ratio(0, 1)).is_err());
    }

    #[test]
    fn draws_respect_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d0 = Distribution::UniformN { letters: 2, n: 0 };
        assert!(d0.draw_word(&mut rng).unwrap().is_empty());
        let d5 = Distribution::UniformN { letters: 2, n: 5 };
        assert_eq!(d5.draw_word(&mut rng).unwrap().len(), 5);
        assert!(Distribution::UniformInfinite { letters: 2 }.draw_word(&mut rng).is_err());
    }

    #[test]
    fn geometric_mean_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Distribution::uniform_term(2, ratio(1, 2)).unwrap();
        let total: usize = (0..10_000).map(|_| d.draw_word(&mut rng).unwrap().len()).sum();
        let mean = total as f64 / 10_000.0;
        assert!((mean - 1.0).abs() <= 0.1, "mean length {mean}");
    }
}
