//! Exact Gaussian elimination over the rationals.

use std::collections::BTreeMap;

use crate::rat::Rat;

/// A sparse linear equation `sum coeffs[j] * x_j = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub coeffs: BTreeMap<usize, Rat>,
    pub rhs: Rat,
}

impl Equation {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, Rat)>, rhs: Rat) -> Equation {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Equation { coeffs, rhs }
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.is_empty() && self.rhs.is_zero()
    }

    /// `0 = c` with `c != 0`.
    pub fn is_contradiction(&self) -> bool {
        self.coeffs.is_empty() && !self.rhs.is_zero()
    }
}

/// Outcome of solving a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    /// Values for every unknown; `free` lists the unknowns that were not
    /// determined and were set to zero.
    Solved { values: Vec<Rat>, free: Vec<usize> },
    /// The system has no solution; `certificate` is a combination of the
    /// input rows reducing to `0 = rhs != 0`.
    Inconsistent { certificate: Vec<(usize, Rat)> },
}

/// Solve for `n` unknowns. Undetermined unknowns are set to zero.
pub fn solve(n: usize, eqs: &[Equation]) -> Solution {
    // Each row carries the combination of original rows it came from.
    let mut rows: Vec<(Equation, BTreeMap<usize, Rat>)> =
        eqs.iter().enumerate().map(|(i, e)| (e.clone(), BTreeMap::from([(i, Rat::one())]))).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].0.coeffs.contains_key(&col)) else { continue };
        rows.swap(r, p);
        let inv = rows[r].0.coeffs[&col].recip();
        scale_row(&mut rows[r], &inv);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            if let Some(f) = row.0.coeffs.get(&col).cloned() {
                axpy(row, &pivot, &-f);
            }
        }
        pivots.push((r, col));
        r += 1;
    }
    if let Some(bad) = rows.iter().find(|row| row.0.is_contradiction()) {
        return Solution::Inconsistent { certificate: bad.1.iter().map(|(i, c)| (*i, c.clone())).collect() };
    }
    let mut values = vec![Rat::zero(); n];
    let pivot_cols: Vec<usize> = pivots.iter().map(|(_, c)| *c).collect();
    for (row, col) in &pivots {
        // Free unknowns are zero, so each pivot equals its reduced right-hand side.
        values[*col] = rows[*row].0.rhs.clone();
    }
    let free = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    Solution::Solved { values, free }
}

fn scale_row(row: &mut (Equation, BTreeMap<usize, Rat>), f: &Rat) {
    for c in row.0.coeffs.values_mut() {
        *c *= f;
    }
    row.0.rhs *= f;
    for c in row.1.values_mut() {
        *c *= f;
    }
}

fn axpy(row: &mut (Equation, BTreeMap<usize, Rat>), other: &(Equation, BTreeMap<usize, Rat>), f: &Rat) {
    add_scaled(&mut row.0.coeffs, &other.0.coeffs, f);
    row.0.rhs += &(&other.0.rhs * f);
    add_scaled(&mut row.1, &other.1, f);
}

fn add_scaled(a: &mut BTreeMap<usize, Rat>, b: &BTreeMap<usize, Rat>, f: &Rat) {
    for (k, v) in b {
        let e = a.entry(*k).or_insert_with(Rat::zero);
        *e += &(v * f);
        if e.is_zero() {
            a.remove(k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_solution() {
        // x + y = 3, x - y = 1
        let eqs = [
            Equation::new([(0, Rat::one()), (1, Rat::one())], Rat::int(3)),
            Equation::new([(0, Rat::one()), (1, Rat::int(-1))], Rat::one()),
        ];
        assert_eq!(solve(2, &eqs), Solution::Solved { values: vec![Rat::int(2), Rat::one()], free: vec![] });
    }

    #[test]
    fn inconsistent_with_certificate() {
        let eqs = [
            Equation::new([(0, Rat::one())], Rat::new(-1, 2)),
            Equation::new([(0, Rat::one())], Rat::zero()),
        ];
        match solve(1, &eqs) {
            Solution::Inconsistent { certificate } => {
                assert_eq!(certificate.len(), 2);
            }
            s => panic!("expected inconsistency, got {s:?}"),
        }
    }

    #[test]
    fn free_unknowns_are_zero() {
        let eqs = [Equation::new([(0, Rat::one()), (1, Rat::one())], Rat::int(5))];
        assert_eq!(solve(2, &eqs), Solution::Solved { values: vec![Rat::int(5), Rat::zero()], free: vec![1] });
    }
}
