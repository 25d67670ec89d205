//! Certified sample-size bound for the characterization argument.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Rational bounds `lo < ln x < hi` for `x > 0`, tightening with `terms`.
pub fn ln_bounds(x: &Rational, terms: usize) -> (Rational, Rational) {
    assert!(x.is_positive());
    // x = 2^e · y with 1 <= y < 2
    let two = Rational::from_integer(2.into());
    let mut y = x.clone();
    let mut e: i64 = 0;
    while y >= two {
        y /= &two;
        e += 1;
    }
    while y < Rational::one() {
        y *= &two;
        e -= 1;
    }
    let (l2_lo, l2_hi) = atanh_bounds(&Rational::new(1.into(), 3.into()), terms);
    let z = (&y - Rational::one()) / (&y + Rational::one());
    let (ly_lo, ly_hi) = atanh_bounds(&z, terms);
    let (l2_lo, l2_hi) = (&l2_lo + &l2_lo, &l2_hi + &l2_hi);
    let (ly_lo, ly_hi) = (&ly_lo + &ly_lo, &ly_hi + &ly_hi);
    let ef = Rational::from_integer(e.into());
    let (a, b) = if e >= 0 { (&ef * l2_lo, &ef * l2_hi) } else { (&ef * l2_hi, &ef * l2_lo) };
    (a + ly_lo, b + ly_hi)
}

/// Bounds on `atanh z = Σ z^(2j+1)/(2j+1)` for `0 <= z < 1`.
fn atanh_bounds(z: &Rational, terms: usize) -> (Rational, Rational) {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = Rational::zero();
    for j in 0..terms {
        sum += &power / Rational::from_integer((2 * j as i64 + 1).into());
        power *= &z2;
    }
    // remaining terms are at most z^(2N+1)/(2N+1) · 1/(1 - z²)
    let tail = &power / Rational::from_integer((2 * terms as i64 + 1).into()) / (Rational::one() - z2);
    let hi = &sum + tail;
    (sum, hi)
}

fn ceil(x: &Rational) -> BigInt {
    let (q, r) = x.numer().div_mod_floor(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// `⌈σ^l · (1−λ)^(−l) · λ^(−1) · ln(σ^l / ε)⌉`. The logarithm is bracketed until both
/// ends of the bracket round up to the same integer, so the result is exact.
pub fn estimate_sample_size(sigma: u32, l: u32, lambda: &Rational, eps: &Rational) -> Result<BigInt> {
    let (zero, one) = (Rational::zero(), Rational::one());
    if sigma < 2 || l < 1 || *lambda <= zero || *lambda >= one || *eps <= zero || *eps >= one {
        return Err(Error::input("need σ ≥ 2, l ≥ 1 and λ, ε strictly between 0 and 1"));
    }
    let sl = Rational::from_integer(BigInt::from(sigma).pow(l));
    let coeff = &sl / (&one - lambda).pow(l as i32) / lambda;
    let x = &sl / eps;
    let mut terms = 8;
    loop {
        let (lo, hi) = ln_bounds(&x, terms);
        let (a, b) = (ceil(&(&coeff * lo)), ceil(&(&coeff * hi)));
        if a == b {
            return Ok(a);
        }
        // ln x is irrational for rational x != 1, so the bracket eventually separates
        terms *= 2;
        if terms > 1 << 16 {
            return Err(Error::internal("logarithm bracket failed to converge"));
        }
    }
}
