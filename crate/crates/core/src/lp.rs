//! Exact feasibility of `A x = b, x ≥ 0` over the rationals.
//!
//! The system is first reduced to independent rows by exact Gauss–Jordan elimination,
//! then a phase-one simplex with Bland's rule finds a basic feasible solution. Pivot
//! choices depend only on variable and row order, so results are deterministic.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// A linear equality system over non-negative variables.
#[derive(Debug, Clone, Default)]
pub struct EqualitySystem {
    num_vars: usize,
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
}

impl EqualitySystem {
    pub fn new(num_vars: usize) -> Self {
        EqualitySystem { num_vars, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `Σ coeffs[j]·x_j = rhs`. Panics if `coeffs` has the wrong length.
    pub fn push(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars, "coefficient row has wrong length");
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    /// A non-negative solution, or `None` if the system is infeasible.
    pub fn solve(&self) -> Option<Vec<Rational>> {
        let (rows, rhs, pivots) = reduce(&self.rows, &self.rhs, self.num_vars)?;
        phase_one(rows, rhs, pivots, self.num_vars)
    }
}

/// Independent rows with their right-hand sides, plus the pivot column of each row.
type Reduced = (Vec<Vec<Rational>>, Vec<Rational>, Vec<usize>);

/// Gauss–Jordan elimination; `None` when some row reduces to `0 = c ≠ 0`.
fn reduce(rows: &[Vec<Rational>], rhs: &[Rational], num_vars: usize) -> Option<Reduced> {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let mut b: Vec<Rational> = rhs.to_vec();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..num_vars {
        let Some(p) = (rank..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        b.swap(rank, p);
        let inv = Rational::one() / &a[rank][col];
        for v in a[rank].iter_mut() {
            *v = &*v * &inv;
        }
        b[rank] = &b[rank] * &inv;
        let (pivot_row, pivot_b) = (a[rank].clone(), b[rank].clone());
        for i in 0..a.len() {
            if i == rank || a[i][col].is_zero() {
                continue;
            }
            let factor = a[i][col].clone();
            for (v, pv) in a[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            b[i] -= &factor * &pivot_b;
        }
        pivots.push(col);
        rank += 1;
    }
    if b[rank..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    a.truncate(rank);
    b.truncate(rank);
    Some((a, b, pivots))
}

fn phase_one(
    mut rows: Vec<Vec<Rational>>,
    mut rhs: Vec<Rational>,
    pivots: Vec<usize>,
    num_vars: usize,
) -> Option<Vec<Rational>> {
    let m = rows.len();
    // Rows with a negative right-hand side are negated and given an artificial column.
    let mut artificial_of_row = vec![None; m];
    let mut num_art = 0;
    for i in 0..m {
        if rhs[i].is_negative() {
            for v in rows[i].iter_mut() {
                *v = -&*v;
            }
            rhs[i] = -&rhs[i];
            artificial_of_row[i] = Some(num_art);
            num_art += 1;
        }
    }
    let width = num_vars + num_art;
    let mut tab: Vec<Vec<Rational>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r.resize(width, Rational::zero());
            if let Some(k) = artificial_of_row[i] {
                r[num_vars + k] = Rational::one();
            }
            r
        })
        .collect();
    let mut basis: Vec<usize> = (0..m)
        .map(|i| match artificial_of_row[i] {
            Some(k) => num_vars + k,
            None => pivots[i],
        })
        .collect();

    // Reduced costs of the phase-one objective (minimise the sum of artificials).
    let mut cost = vec![Rational::zero(); width];
    let mut objective = Rational::zero();
    for i in 0..m {
        if artificial_of_row[i].is_some() {
            for (c, v) in cost.iter_mut().zip(&tab[i]) {
                *c -= v;
            }
            objective += &rhs[i];
        }
    }
    for i in 0..m {
        if artificial_of_row[i].is_some() {
            cost[basis[i]] = Rational::zero();
        }
    }

    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<usize> = None;
        let mut best: Option<Rational> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &rhs[i] / &tab[i][enter];
            let better = match &best {
                None => true,
                Some(b) => ratio < *b || (ratio == *b && basis[i] < basis[leave.unwrap()]),
            };
            if better {
                best = Some(ratio);
                leave = Some(i);
            }
        }
        // Phase one is bounded below by zero, so an entering column always has a leaving row.
        let r = leave.expect("phase-one objective is bounded");
        pivot(&mut tab, &mut rhs, &mut cost, &mut objective, r, enter);
        basis[r] = enter;
    }

    if !objective.is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); num_vars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < num_vars {
            x[bv] = rhs[i].clone();
        }
    }
    Some(x)
}

fn pivot(
    tab: &mut [Vec<Rational>],
    rhs: &mut [Rational],
    cost: &mut [Rational],
    objective: &mut Rational,
    r: usize,
    col: usize,
) {
    let inv = Rational::one() / &tab[r][col];
    for v in tab[r].iter_mut() {
        *v = &*v * &inv;
    }
    rhs[r] = &rhs[r] * &inv;
    let prow = tab[r].clone();
    let prhs = rhs[r].clone();
    for i in 0..tab.len() {
        if i == r || tab[i][col].is_zero() {
            continue;
        }
        let f = tab[i][col].clone();
        for (v, pv) in tab[i].iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
        rhs[i] -= &f * &prhs;
    }
    if !cost[col].is_zero() {
        let f = cost[col].clone();
        for (c, pv) in cost.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *c -= &f * pv;
            }
        }
        *objective -= &f * &prhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rational};

    fn sys(n: usize, rows: &[(&[i64], i64)]) -> EqualitySystem {
        let mut s = EqualitySystem::new(n);
        for (c, b) in rows {
            s.push(c.iter().map(|&v| int(v)).collect(), int(*b));
        }
        s
    }

    fn check(s: &EqualitySystem, x: &[Rational]) {
        for (row, b) in s.rows.iter().zip(&s.rhs) {
            let lhs: Rational = row.iter().zip(x).map(|(a, v)| a * v).sum();
            assert_eq!(&lhs, b);
        }
        assert!(x.iter().all(|v| !v.is_negative()));
    }

    #[test]
    fn simplex_point() {
        let s = sys(2, &[(&[1, 1], 1), (&[1, -1], 0)]);
        let x = s.solve().unwrap();
        assert_eq!(x, vec![rational(1, 2), rational(1, 2)]);
    }

    #[test]
    fn negative_only_solution_is_infeasible() {
        let s = sys(2, &[(&[1, 1], -1)]);
        assert!(s.solve().is_none());
        let s = sys(2, &[(&[1, -1], 3), (&[0, 1], 0), (&[1, 0], 2)]);
        assert!(s.solve().is_none());
    }

    #[test]
    fn redundant_and_contradictory_rows() {
        let s = sys(3, &[(&[1, 1, 1], 1), (&[2, 2, 2], 2), (&[0, 0, 0], 0)]);
        check(&s, &s.solve().unwrap());
        let s = sys(3, &[(&[1, 1, 1], 1), (&[2, 2, 2], 3)]);
        assert!(s.solve().is_none());
    }

    #[test]
    fn needs_phase_one_pivots() {
        // x0 - x1 + x2 = -1 forces x1 >= 1 while x1 + x3 = 2 bounds it.
        let s = sys(4, &[(&[1, -1, 1, 0], -1), (&[0, 1, 0, 1], 2), (&[1, 0, 0, 0], 0)]);
        let x = s.solve().unwrap();
        check(&s, &x);
    }

    #[test]
    fn empty_system_is_feasible() {
        let s = EqualitySystem::new(3);
        assert_eq!(s.solve().unwrap(), vec![int(0); 3]);
    }
}
