//! Sparse linear systems over ℚ whose solution sets are reported as affine
//! families, plus the divisibility constraints used to impose mutability on
//! polynomials with unknown coefficients.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{rational_rref, IntVector};
use crate::laurent::{AffineForm, LaurentPolynomial};

/// A coefficient that is either fixed or a variable of a [`LinearSystem`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coefficient {
    Known(BigRational),
    Unknown(usize),
}

/// Equations `Σ c_j x_j = rhs`.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    vars: usize,
    equations: Vec<(BTreeMap<usize, BigRational>, BigRational)>,
}

/// Every variable as an affine form in the free parameters.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    pub values: Vec<AffineForm>,
    /// Free variables, in parameter order.
    pub free: Vec<usize>,
}

impl LinearSystem {
    pub fn new(vars: usize) -> Self {
        LinearSystem {
            vars,
            equations: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn equations(&self) -> usize {
        self.equations.len()
    }

    pub fn add_var(&mut self) -> usize {
        self.vars += 1;
        self.vars - 1
    }

    /// Adds `Σ terms = rhs`, merging repeated variables.
    pub fn add_equation(&mut self, terms: &[(usize, BigRational)], rhs: BigRational) {
        let mut row: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (j, c) in terms {
            let e = row.entry(*j).or_insert_with(BigRational::zero);
            *e += c;
        }
        row.retain(|_, c| !c.is_zero());
        if row.is_empty() && rhs.is_zero() {
            return;
        }
        self.equations.push((row, rhs));
    }

    /// Solves the system. Columns are eliminated in `priority` order, so
    /// variables late in the list are the ones left free. Variables absent
    /// from `priority` are appended in index order.
    pub fn solve(&self, priority: &[usize], name: impl Fn(usize) -> String) -> Result<AffineSolution> {
        let mut order: Vec<usize> = priority.to_vec();
        let seen: BTreeSet<usize> = order.iter().copied().collect();
        order.extend((0..self.vars).filter(|j| !seen.contains(j)));
        let mut col_of = vec![0; self.vars];
        for (c, &j) in order.iter().enumerate() {
            col_of[j] = c;
        }
        let n = self.vars;
        let mut rows: Vec<Vec<BigRational>> = self
            .equations
            .iter()
            .map(|(terms, rhs)| {
                let mut row = vec![BigRational::zero(); n + 1];
                for (j, c) in terms {
                    row[col_of[*j]] = c.clone();
                }
                row[n] = rhs.clone();
                row
            })
            .collect();
        let pivots = rational_rref(&mut rows);
        if pivots.last() == Some(&n) {
            return Err(Error::Inconsistent(format!(
                "{} equations in {} unknowns",
                self.equations.len(),
                n
            )));
        }
        let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
        let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_set.contains(c)).collect();
        let names: BTreeMap<usize, String> = free_cols.iter().enumerate().map(|(k, &c)| (c, name(k))).collect();
        let mut values = vec![AffineForm::zero(); n];
        for &c in &free_cols {
            values[order[c]] = AffineForm::parameter(&names[&c]);
        }
        for (row, &pc) in rows.iter().zip(&pivots) {
            let mut form = AffineForm::constant(row[n].clone());
            for &c in &free_cols {
                if !row[c].is_zero() {
                    form = &form - &AffineForm::parameter(&names[&c]).scale(&row[c]);
                }
            }
            values[order[pc]] = form;
        }
        Ok(AffineSolution {
            values,
            free: free_cols.iter().map(|&c| order[c]).collect(),
        })
    }
}

/// Imposes divisibility of `Σ slice[e] x^e` by `divisor`, introducing one
/// auxiliary variable per candidate quotient exponent. The slice lists every
/// admissible exponent; missing ones are zero. Returns the quotient
/// variables. The divisor must have constant coefficients.
pub fn add_divisibility(
    sys: &mut LinearSystem,
    slice: &BTreeMap<IntVector, Coefficient>,
    divisor: &LaurentPolynomial,
) -> Result<Vec<(IntVector, usize)>> {
    let dterms: Vec<(IntVector, BigRational)> = divisor
        .terms()
        .iter()
        .map(|(e, c)| {
            c.as_constant()
                .cloned()
                .map(|c| (e.clone(), c))
                .ok_or_else(|| Error::Parametric(divisor.to_string()))
        })
        .collect::<Result<_>>()?;
    let Some((e0, _)) = dterms.first() else {
        return Err(Error::ZeroPolynomial);
    };
    let candidates: Vec<IntVector> = slice
        .keys()
        .map(|p| p - e0)
        .filter(|u| dterms.iter().all(|(e, _)| slice.contains_key(&(u + e))))
        .collect();
    let quotient: Vec<(IntVector, usize)> = candidates.into_iter().map(|u| (u, sys.add_var())).collect();
    let mut contributions: BTreeMap<IntVector, Vec<(usize, BigRational)>> = BTreeMap::new();
    for (u, q) in &quotient {
        for (e, c) in &dterms {
            contributions.entry(u + e).or_default().push((*q, -c.clone()));
        }
    }
    for (x, coef) in slice {
        let mut terms = contributions.remove(x).unwrap_or_default();
        let rhs = match coef {
            Coefficient::Known(c) => -c.clone(),
            Coefficient::Unknown(j) => {
                terms.push((*j, BigRational::one()));
                BigRational::zero()
            }
        };
        sys.add_equation(&terms, rhs);
    }
    Ok(quotient)
}

/// A linear constraint `Σ c_j x_j = rhs` on system variables.
pub type Constraint = (Vec<(usize, BigRational)>, BigRational);

/// Divisibility of a slice by `divisor`, with the quotient unknowns
/// eliminated locally: only the resulting constraints on the slice's own
/// unknowns are returned.
pub fn divisibility_constraints(
    slice: &BTreeMap<IntVector, Coefficient>,
    divisor: &LaurentPolynomial,
) -> Result<Vec<Constraint>> {
    let unknowns: Vec<usize> = slice
        .values()
        .filter_map(|c| match c {
            Coefficient::Unknown(j) => Some(*j),
            Coefficient::Known(_) => None,
        })
        .collect();
    let local_of: BTreeMap<usize, usize> = unknowns.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let local_slice: BTreeMap<IntVector, Coefficient> = slice
        .iter()
        .map(|(e, c)| {
            let c = match c {
                Coefficient::Unknown(j) => Coefficient::Unknown(local_of[j]),
                known => known.clone(),
            };
            (e.clone(), c)
        })
        .collect();
    let mut sys = LinearSystem::new(unknowns.len());
    add_divisibility(&mut sys, &local_slice, divisor)?;
    let nq = sys.vars() - unknowns.len();
    let n = sys.vars();
    // Columns: quotient variables first, then slice unknowns, then rhs.
    let col = |j: usize| {
        if j >= unknowns.len() {
            j - unknowns.len()
        } else {
            nq + j
        }
    };
    let mut rows: Vec<Vec<BigRational>> = sys
        .equations
        .iter()
        .map(|(terms, rhs)| {
            let mut row = vec![BigRational::zero(); n + 1];
            for (j, c) in terms {
                row[col(*j)] = c.clone();
            }
            row[n] = rhs.clone();
            row
        })
        .collect();
    let pivots = rational_rref(&mut rows);
    let mut out = Vec::new();
    for (row, &p) in rows.iter().zip(&pivots) {
        if p == n {
            return Err(Error::Inconsistent(format!("slice not divisible by {divisor}")));
        }
        if p < nq {
            continue;
        }
        let terms: Vec<(usize, BigRational)> = (nq..n)
            .filter(|&c| !row[c].is_zero())
            .map(|c| (unknowns[c - nq], row[c].clone()))
            .collect();
        out.push((terms, row[n].clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn affine_family() {
        // x0 + x1 = 2, x2 free.
        let mut sys = LinearSystem::new(3);
        sys.add_equation(&[(0, q(1)), (1, q(1))], q(2));
        let sol = sys.solve(&[0, 1, 2], |k| format!("p{}", k + 1)).unwrap();
        assert_eq!(sol.free, vec![1, 2]);
        assert_eq!(sol.values[0].to_string(), "2-p1");
        assert_eq!(sol.values[2].to_string(), "p2");
    }

    #[test]
    fn inconsistent() {
        let mut sys = LinearSystem::new(1);
        sys.add_equation(&[(0, q(1))], q(1));
        sys.add_equation(&[(0, q(2))], q(1));
        assert!(matches!(sys.solve(&[], |k| k.to_string()), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn binomial_divisibility() {
        // 1 + b x + x^2 divisible by (1+x)^2 forces b = 2.
        let mut sys = LinearSystem::new(1);
        let mut slice = BTreeMap::new();
        slice.insert(IntVector::from_slice(&[0]), Coefficient::Known(q(1)));
        slice.insert(IntVector::from_slice(&[1]), Coefficient::Unknown(0));
        slice.insert(IntVector::from_slice(&[2]), Coefficient::Known(q(1)));
        let d = LaurentPolynomial::parse_in_dim("(1+x)^2", 1).unwrap();
        add_divisibility(&mut sys, &slice, &d).unwrap();
        let sol = sys.solve(&[1, 0], |k| k.to_string()).unwrap();
        assert_eq!(sol.values[0], AffineForm::from_int(2));
        assert!(sol.free.is_empty());
    }
}
