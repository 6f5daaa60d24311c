//! Small dense simplex over exact rationals.
//!
//! Solves `min c.z` subject to `A z <= b`, `z >= 0` with a two-phase
//! tableau and Bland's rule, so it cannot cycle.

use num_traits::{Signed, Zero};

use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Q, z: Vec<Q> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x = &*x / &p;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pr) {
                *x -= &f * y;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over columns `0..active`; returns false when unbounded.
    fn run(&mut self, cost: &[Q], active: usize) -> bool {
        let rhs = self.cols;
        loop {
            // Reduced cost of column j: cost[j] - sum over rows of cost[basis] * a_ij.
            let reduced = |t: &Tableau, j: usize| -> Q {
                let mut r = cost[j].clone();
                for (i, row) in t.rows.iter().enumerate() {
                    r -= &cost[t.basis[i]] * &row[j];
                }
                r
            };
            let Some(enter) = (0..active).find(|j| !self.basis.contains(j) && reduced(self, *j).is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[rhs] / &row[enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, enter);
        }
    }
}

pub fn minimize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let negative: Vec<usize> = (0..m).filter(|i| b[*i].is_negative()).collect();
    let k = negative.len();
    // Columns: z (n), slacks (m), artificials (k), rhs.
    let cols = n + m + k;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Q::zero(); cols + 1];
        let sign = if b[i].is_negative() { -Q::from_integer(1.into()) } else { Q::from_integer(1.into()) };
        for j in 0..n {
            row[j] = &a[i][j] * &sign;
        }
        row[n + i] = sign.clone();
        row[cols] = &b[i] * &sign;
        if let Some(p) = negative.iter().position(|x| *x == i) {
            row[n + m + p] = Q::from_integer(1.into());
            basis.push(n + m + p);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, cols };
    if k > 0 {
        let mut cost1 = vec![Q::zero(); cols];
        for p in 0..k {
            cost1[n + m + p] = Q::from_integer(1.into());
        }
        t.run(&cost1, cols);
        let infeas: Q = (0..m).filter(|i| t.basis[*i] >= n + m).map(|i| t.rows[i][cols].clone()).sum();
        if infeas.is_positive() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining zero-valued artificials out of the basis.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|j| !t.rows[i][*j].is_zero()) {
                    t.pivot(i, j);
                }
            }
        }
    }
    let mut cost2 = vec![Q::zero(); cols];
    cost2[..n].clone_from_slice(c);
    if !t.run(&cost2, n + m) {
        return LpOutcome::Unbounded;
    }
    let mut z = vec![Q::zero(); n];
    for (i, bv) in t.basis.iter().enumerate() {
        if *bv < n {
            z[*bv] = t.rows[i][cols].clone();
        }
    }
    let value = c.iter().zip(&z).map(|(x, y)| x * y).sum();
    LpOutcome::Optimal { value, z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn small_programs() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6.
        let out = minimize(&[qi(-1), qi(-1)], &[vec![qi(1), qi(2)], vec![qi(3), qi(1)]], &[qi(4), qi(6)]);
        assert_eq!(out, LpOutcome::Optimal { value: q(-14, 5), z: vec![q(8, 5), q(6, 5)] });
        // min x s.t. x >= 2 (as -x <= -2).
        let out = minimize(&[qi(1)], &[vec![qi(-1)]], &[qi(-2)]);
        assert_eq!(out, LpOutcome::Optimal { value: qi(2), z: vec![qi(2)] });
        assert_eq!(minimize(&[qi(1)], &[vec![qi(-1)], vec![qi(1)]], &[qi(-2), qi(1)]), LpOutcome::Infeasible);
        assert_eq!(minimize(&[qi(-1)], &[vec![qi(-1)]], &[qi(0)]), LpOutcome::Unbounded);
    }
}
