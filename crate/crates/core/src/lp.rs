//! Small dense linear programs.
//!
//! A two-phase tableau simplex that runs over exact rationals or `f64`.
//! Variables are implicitly non-negative. Pivoting uses the largest reduced
//! cost and falls back to Bland's rule once progress stalls, which rules out
//! cycling.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arithmetic needed by the tableau. Sign tests absorb the tolerance for
/// floating point and are exact for rationals.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_negligible(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

/// Absolute tolerance used for all floating-point sign tests.
pub const F64_TOL: f64 = 1e-9;

impl Scalar for f64 {
    fn is_pos(&self) -> bool {
        *self > F64_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -F64_TOL
    }
}

impl Scalar for BigRational {
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `optimize c·x subject to rows, x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense, objective: Vec<T>) -> Self {
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a row. Short coefficient vectors are padded with zeros.
    pub fn add_constraint(&mut self, mut coeffs: Vec<T>, relation: Relation, rhs: T) {
        assert!(
            coeffs.len() <= self.num_vars(),
            "constraint has more coefficients than the program has variables"
        );
        coeffs.resize(self.num_vars(), T::zero());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution<T>> {
        Tableau::build(self).run(self)
    }
}

struct Tableau<T> {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced-cost row for the current phase, same layout as `rows`.
    cost: Vec<T>,
    basis: Vec<usize>,
    n_struct: usize,
    /// Columns `>= first_artificial` are artificial.
    first_artificial: usize,
}

const STALL_LIMIT: usize = 64;
const MAX_PIVOTS: usize = 200_000;

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.num_vars();
        // Normalize to non-negative right-hand sides.
        let normalized: Vec<(Vec<T>, Relation, T)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs.is_neg() {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (
                        c.coeffs.iter().map(|a| -a.clone()).collect(),
                        flipped,
                        -c.rhs.clone(),
                    )
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();

        let n_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art + 1;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (coeffs, relation, rhs) in normalized {
            let mut row = vec![T::zero(); width];
            row[..n].clone_from_slice(&coeffs);
            row[width - 1] = rhs;
            match relation {
                Relation::Le => {
                    row[next_slack] = T::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -T::one();
                    next_slack += 1;
                    row[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }

        Tableau {
            rows,
            cost: vec![T::zero(); width],
            basis,
            n_struct: n,
            first_artificial,
        }
    }

    fn width(&self) -> usize {
        self.cost.len()
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
        let rhs = self.width() - 1;

        if self.first_artificial < rhs {
            // Phase one: maximize minus the sum of artificials.
            let mut cost = vec![T::zero(); self.width()];
            for c in &mut cost[self.first_artificial..rhs] {
                *c = T::one();
            }
            self.cost = cost;
            for r in 0..self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    self.cost = sub_scaled(&self.cost, &self.rows[r], &T::one());
                }
            }
            self.optimize(rhs)?;
            if self.cost[rhs].is_neg() {
                return Err(Error::LpInfeasible);
            }
            self.evict_artificials();
        }

        // Phase two on the structural and slack columns only.
        let limit = self.first_artificial;
        let mut cost = vec![T::zero(); self.width()];
        for (j, c) in lp.objective.iter().enumerate() {
            cost[j] = match lp.sense {
                Sense::Maximize => -c.clone(),
                Sense::Minimize => c.clone(),
            };
        }
        for r in 0..self.rows.len() {
            let b = self.basis[r];
            if !cost[b].is_zero() {
                let factor = cost[b].clone();
                cost = sub_scaled(&cost, &self.rows[r], &factor);
            }
        }
        self.cost = cost;
        self.optimize(limit)?;

        let mut x = vec![T::zero(); self.n_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rows[r][rhs].clone();
            }
        }
        let objective = lp
            .objective
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
        Ok(LpSolution { x, objective })
    }

    /// Pivots until no column below `limit` has a negative reduced cost.
    fn optimize(&mut self, limit: usize) -> Result<()> {
        let rhs = self.width() - 1;
        let mut stalled = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = stalled >= STALL_LIMIT;
            let entering = if bland {
                (0..limit).find(|&j| self.cost[j].is_neg())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if self.cost[j].is_neg()
                        && best.is_none_or(|b| self.cost[j] < self.cost[b])
                    {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, T)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[col].is_pos() {
                    continue;
                }
                let ratio = row[rhs].clone() / row[col].clone();
                let better = match &leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio
                            || (!(ratio > *lratio) && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((row, ratio)) = leaving else {
                return Err(Error::LpUnbounded);
            };
            if ratio.is_pos() {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(row, col);
        }
        Err(Error::Infeasible(format!(
            "simplex did not converge within {MAX_PIVOTS} pivots"
        )))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        let pivot_row: Vec<T> = self.rows[row].iter().map(|a| a.clone() / p.clone()).collect();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r != row && !other[col].is_zero() {
                let factor = other[col].clone();
                *other = sub_scaled(other, &pivot_row, &factor);
            }
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            self.cost = sub_scaled(&self.cost, &pivot_row, &factor);
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// After a feasible phase one, artificials left in the basis sit at zero.
    /// Pivot them out where possible and drop rows that are redundant.
    fn evict_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.first_artificial {
                r += 1;
                continue;
            }
            match (0..self.first_artificial).find(|&j| !self.rows[r][j].is_negligible()) {
                Some(col) => {
                    self.pivot(r, col);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}

fn sub_scaled<T: Scalar>(a: &[T], b: &[T], factor: &T) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if y.is_zero() {
                x.clone()
            } else {
                x.clone() - factor.clone() * y.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::new(Sense::Maximize, vec![r(3, 1), r(5, 1)]);
        lp.add_constraint(vec![r(1, 1), r(0, 1)], Relation::Le, r(4, 1));
        lp.add_constraint(vec![r(0, 1), r(2, 1)], Relation::Le, r(12, 1));
        lp.add_constraint(vec![r(3, 1), r(2, 1)], Relation::Le, r(18, 1));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, r(36, 1));
        assert_eq!(sol.x, vec![r(2, 1), r(6, 1)]);
    }

    #[test]
    fn minimum_with_equality_and_ge() {
        // min x + 2y, x + y = 1, y >= 1/3
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![0.0, 1.0], Relation::Ge, 1.0 / 3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x <= -2 means x >= 2
        let mut lp = LinearProgram::new(Sense::Minimize, vec![r(1, 1)]);
        lp.add_constraint(vec![r(-1, 1)], Relation::Le, r(-2, 1));
        assert_eq!(lp.solve().unwrap().objective, r(2, 1));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![r(1, 1)]);
        lp.add_constraint(vec![r(1, 1)], Relation::Le, r(1, 1));
        lp.add_constraint(vec![r(1, 1)], Relation::Ge, r(2, 1));
        assert!(matches!(lp.solve(), Err(Error::LpInfeasible)));

        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.add_constraint(vec![-1.0, 1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(Error::LpUnbounded)));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![r(1, 1), r(1, 1)]);
        lp.add_constraint(vec![r(1, 1), r(1, 1)], Relation::Eq, r(1, 1));
        lp.add_constraint(vec![r(2, 1), r(2, 1)], Relation::Eq, r(2, 1));
        lp.add_constraint(vec![r(1, 1)], Relation::Le, r(1, 2));
        assert_eq!(lp.solve().unwrap().objective, r(1, 1));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive largest-coefficient pivoting.
        let mut lp = LinearProgram::new(
            Sense::Minimize,
            vec![r(-3, 4), r(150, 1), r(-1, 50), r(6, 1)],
        );
        lp.add_constraint(vec![r(1, 4), r(-60, 1), r(-1, 25), r(9, 1)], Relation::Le, r(0, 1));
        lp.add_constraint(vec![r(1, 2), r(-90, 1), r(-1, 50), r(3, 1)], Relation::Le, r(0, 1));
        lp.add_constraint(vec![r(0, 1), r(0, 1), r(1, 1), r(0, 1)], Relation::Le, r(1, 1));
        assert_eq!(lp.solve().unwrap().objective, r(-1, 20));
    }
}
