//! Monte Carlo check that small random samples rarely tell `A_n` from `Ā_n`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::Distribution;
use crate::rational::Rational;

use super::characterization::has_marker;

/// Sample semantics for the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Lassos `(u, v)`; the example word is `uv`.
    U,
    /// Finite prefixes `u`.
    E,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentReport {
    pub n: usize,
    pub trials: usize,
    pub distinguishing: usize,
    /// Mean `‖S‖` over all trials.
    pub mean_total_length: Rational,
    /// `min(1, mean ‖S‖ / 2^n)`.
    pub bound: Rational,
}

impl ExperimentReport {
    pub fn frequency(&self) -> Rational {
        Rational::new(self.distinguishing.into(), self.trials.into())
    }
}

/// Draws `trials` samples over `{a, b}`, each grown example by example until `‖S‖` reaches
/// `target`, with word lengths from `U_λ`. A sample distinguishes when some example word
/// contains `a^n b`. Trial `i` uses stream `i` of a ChaCha generator seeded with `seed`,
/// so the report does not depend on scheduling.
pub fn experiment_distinguish(
    n: usize,
    kind: ExperimentKind,
    target: usize,
    trials: usize,
    lambda: &Rational,
    seed: u64,
) -> Result<ExperimentReport> {
    if n == 0 || trials == 0 {
        return Err(Error::input("n and trials must be positive"));
    }
    let dist = Distribution::uniform_term(2, lambda.clone())?;
    let results: Vec<(bool, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut total = 0;
            let mut hit = false;
            while total < target.max(1) {
                let mut word = dist.draw_word(&mut rng)?;
                if kind == ExperimentKind::U {
                    let v = loop {
                        let v = dist.draw_word(&mut rng)?;
                        if !v.is_empty() {
                            break v;
                        }
                    };
                    word.extend(v);
                }
                total += word.len();
                hit |= has_marker(&word, n);
            }
            Ok((hit, total))
        })
        .collect::<Result<_>>()?;
    let distinguishing = results.iter().filter(|r| r.0).count();
    let sum: usize = results.iter().map(|r| r.1).sum();
    let mean = Rational::new(sum.into(), trials.into());
    let cap = Rational::from_integer(1.into());
    let bound = (&mean / Rational::from_integer(num_bigint::BigInt::from(2).pow(n as u32))).min(cap);
    Ok(ExperimentReport { n, trials, distinguishing, mean_total_length: mean, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn deterministic_and_rejects_zero_trials() {
        let a = experiment_distinguish(3, ExperimentKind::E, 30, 50, &ratio(1, 10), 7).unwrap();
        let b = experiment_distinguish(3, ExperimentKind::E, 30, 50, &ratio(1, 10), 7).unwrap();
        assert_eq!(a, b);
        assert!(experiment_distinguish(3, ExperimentKind::E, 30, 0, &ratio(1, 10), 7).is_err());
    }
}
