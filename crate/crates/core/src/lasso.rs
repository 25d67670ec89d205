//! Ultimately periodic words `u v^ω`.

use crate::automaton::Word;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lasso {
    prefix: Word,
    period: Word,
}

impl Lasso {
    pub fn new(prefix: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::input("lasso period must be non-empty"));
        }
        Ok(Lasso { prefix, period })
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    /// Letter at position `i` of the infinite word.
    pub fn at(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `n` letters of the infinite word.
    pub fn unfold(&self, n: usize) -> Word {
        (0..n).map(|i| self.at(i)).collect()
    }

    /// Unique representative of the denoted infinite word: the period is primitive and
    /// the prefix is as short as possible, which also fixes the phase of the period.
    pub fn canonical(&self) -> Lasso {
        let mut period = primitive_root(&self.period).to_vec();
        let mut prefix = self.prefix.clone();
        while let (Some(&u), Some(&v)) = (prefix.last(), period.last()) {
            if u != v {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        Lasso { prefix, period }
    }
}

/// Shortest `r` with `w = r^k`.
pub fn primitive_root(w: &[usize]) -> &[usize] {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| w[i] == w[i - p]) {
            return &w[..p];
        }
    }
    w
}
