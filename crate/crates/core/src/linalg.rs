//! Exact linear algebra over the rationals: Gauss-Jordan solving, incremental
//! equality feasibility and a small simplex for interval constraints.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Solves `a · x = b` for a square nonsingular `a` and several right-hand sides
/// (`b` has one row per equation). Returns `None` if `a` is singular.
/// The pivot is the first nonzero entry of the column.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut().skip(col) {
            *x *= &inv;
        }
        for x in b[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            let (src, dst) = pick(&mut a, col, r);
            for c in col..n {
                if !src[c].is_zero() {
                    dst[c] -= &f * &src[c];
                }
            }
            let (src, dst) = pick(&mut b, col, r);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                if !s.is_zero() {
                    *d -= &f * s;
                }
            }
        }
    }
    Some(b)
}

fn pick<T>(rows: &mut [Vec<T>], src: usize, dst: usize) -> (&Vec<T>, &mut Vec<T>) {
    if src < dst {
        let (lo, hi) = rows.split_at_mut(dst);
        (&lo[src], &mut hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(src);
        (&hi[0], &mut lo[dst])
    }
}

/// Stationary distribution of an irreducible stochastic matrix `p` (rows sum to 1):
/// the unique `π` with `π p = π` and `Σ π = 1`.
pub fn stationary(p: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let n = p.len();
    // transpose of (p - I), with the last equation replaced by normalization
    let mut a = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            a[j][i] = p[i][j].clone();
        }
        a[i][i] -= Rational::one();
    }
    a[n - 1] = vec![Rational::one(); n];
    let mut b = vec![vec![Rational::zero()]; n];
    b[n - 1][0] = Rational::one();
    solve(a, b).map(|x| x.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// A growing system of linear equations kept in echelon form, with cheap rollback.
#[derive(Clone, Debug)]
pub struct EqualitySystem {
    vars: usize,
    rows: Vec<(usize, Vec<Rational>, Rational)>,
}

impl EqualitySystem {
    pub fn new(vars: usize) -> Self {
        EqualitySystem { vars, rows: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `coeffs · x = rhs`. Returns `false`, leaving the system unchanged,
    /// if the equation contradicts the ones already present.
    pub fn push(&mut self, mut coeffs: Vec<Rational>, mut rhs: Rational) -> bool {
        debug_assert_eq!(coeffs.len(), self.vars);
        for (p, row, r) in &self.rows {
            if coeffs[*p].is_zero() {
                continue;
            }
            let f = coeffs[*p].clone();
            for (c, x) in coeffs.iter_mut().zip(row) {
                if !x.is_zero() {
                    *c -= &f * x;
                }
            }
            rhs -= &f * r;
        }
        match coeffs.iter().position(|c| !c.is_zero()) {
            None => rhs.is_zero(),
            Some(p) => {
                let inv = coeffs[p].recip();
                for c in coeffs.iter_mut() {
                    *c *= &inv;
                }
                rhs *= &inv;
                self.rows.push((p, coeffs, rhs));
                true
            }
        }
    }

    /// Rolls back to a previous rank.
    pub fn truncate(&mut self, rank: usize) {
        self.rows.truncate(rank);
    }

    /// One solution, with all free variables set to zero.
    pub fn solution(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.vars];
        for (p, row, rhs) in self.rows.iter().rev() {
            let mut v = rhs.clone();
            for (j, c) in row.iter().enumerate() {
                if j != *p && !c.is_zero() {
                    v -= c * &x[j];
                }
            }
            x[*p] = v;
        }
        x
    }
}

/// A constraint `lo <= coeffs · x <= hi` over free (unbounded) variables.
#[derive(Clone, Debug)]
pub struct Interval {
    pub coeffs: Vec<Rational>,
    pub lo: Rational,
    pub hi: Rational,
}

/// Finds some `x` satisfying every interval constraint, or `None` if infeasible.
/// Exact simplex on the auxiliary (phase I) problem, with Bland's rule.
pub fn feasible_point(vars: usize, constraints: &[Interval]) -> Option<Vec<Rational>> {
    if constraints.iter().any(|c| c.lo > c.hi) {
        return None;
    }
    // Standard form over nonnegative columns:
    //   x = p - q;  row·(p - q) - s = lo;  s + t = hi - lo
    let m = constraints.len();
    let cols = 2 * vars + 2 * m;
    let rows = 2 * m;
    let mut eqs: Vec<(Vec<Rational>, Rational)> = Vec::with_capacity(rows);
    for (i, c) in constraints.iter().enumerate() {
        let mut r = vec![Rational::zero(); cols];
        for (j, a) in c.coeffs.iter().enumerate() {
            r[j] = a.clone();
            r[vars + j] = -a.clone();
        }
        r[2 * vars + i] = -Rational::one();
        eqs.push((r, c.lo.clone()));
        let mut r = vec![Rational::zero(); cols];
        r[2 * vars + i] = Rational::one();
        r[2 * vars + m + i] = Rational::one();
        eqs.push((r, &c.hi - &c.lo));
    }
    let total = cols + rows;
    // tableau rows: coefficients over all columns (originals then artificials), rhs last
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(rows + 1);
    let mut basis = Vec::with_capacity(rows);
    for (i, (mut r, mut b)) in eqs.into_iter().enumerate() {
        if b.is_negative() {
            for x in r.iter_mut() {
                *x = -x.clone();
            }
            b = -b;
        }
        r.resize(total, Rational::zero());
        r[cols + i] = Rational::one();
        r.push(b);
        tab.push(r);
        basis.push(cols + i);
    }
    // w = obj[total] + Σ obj[j]·x_j over nonbasic columns, w = sum of artificials
    let mut obj = vec![Rational::zero(); total + 1];
    for r in &tab {
        for j in 0..cols {
            obj[j] -= &r[j];
        }
        obj[total] += &r[total];
    }
    loop {
        let Some(enter) = (0..total).find(|&j| obj[j].is_negative()) else { break };
        let mut leave: Option<(usize, Rational)> = None;
        for (i, r) in tab.iter().enumerate() {
            if r[enter].is_positive() {
                let ratio = &r[total] / &r[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (li, _) = leave?;
        pivot(&mut tab, &mut obj, li, enter);
        basis[li] = enter;
    }
    if !obj[total].is_zero() {
        return None;
    }
    let mut col_value = vec![Rational::zero(); total];
    for (i, &b) in basis.iter().enumerate() {
        col_value[b] = tab[i][total].clone();
    }
    Some((0..vars).map(|j| &col_value[j] - &col_value[vars + j]).collect())
}

fn pivot(tab: &mut [Vec<Rational>], obj: &mut [Rational], row: usize, col: usize) {
    let inv = tab[row][col].recip();
    for x in tab[row].iter_mut() {
        *x *= &inv;
    }
    let src = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let f = r[col].clone();
        for (x, s) in r.iter_mut().zip(&src) {
            if !s.is_zero() {
                *x -= &f * s;
            }
        }
    }
    let f = obj[col].clone();
    if !f.is_zero() {
        let n = obj.len() - 1;
        for (x, s) in obj[..n].iter_mut().zip(&src) {
            if !s.is_zero() {
                *x -= &f * s;
            }
        }
        obj[n] += &f * &src[n];
    }
}
