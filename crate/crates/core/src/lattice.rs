//! Exact integer linear algebra on ℤⁿ.
//!
//! Vectors carry machine integers (exponents and polytope coordinates stay
//! tiny in practice) while every matrix reduction runs over [`BigInt`], so
//! no intermediate value can overflow. The canonical matrix form is the
//! row-style Hermite normal form: upper echelon, positive pivots, entries
//! above each pivot reduced into `[0, pivot)`, zero rows last.

use std::fmt;
use std::ops::{Add, Deref, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A lattice vector, either in N or in the dual lattice M.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IntVector(SmallVec<[i64; 4]>);

impl IntVector {
    pub fn new(entries: Vec<i64>) -> Self {
        IntVector(SmallVec::from_vec(entries))
    }

    pub fn from_slice(entries: &[i64]) -> Self {
        IntVector(SmallVec::from_slice(entries))
    }

    pub fn zero(dim: usize) -> Self {
        IntVector(SmallVec::from_elem(0, dim))
    }

    /// The `i`-th standard basis vector of ℤ^dim.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i] = 1;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, other: &IntVector) -> i64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, k: i64) -> IntVector {
        IntVector(self.0.iter().map(|x| x * k).collect())
    }

    /// Non-negative gcd of the entries; zero for the zero vector.
    pub fn content(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &x| g.gcd(&x))
    }

    pub fn to_vec(&self) -> Vec<i64> {
        self.0.to_vec()
    }

    pub fn as_mut_slice(&mut self) -> &mut [i64] {
        &mut self.0
    }

    /// Entries joined by commas, the format used on the command line.
    pub fn to_csv(&self) -> String {
        self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Parses a comma- or whitespace-separated list of integers.
    pub fn parse(text: &str) -> Result<IntVector> {
        let mut out = Vec::new();
        for (i, tok) in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let t = tok.trim_start_matches('(').trim_end_matches(')');
            out.push(
                t.parse::<i64>()
                    .map_err(|_| Error::parse(i, format!("bad integer `{tok}`")))?,
            );
        }
        if out.is_empty() {
            return Err(Error::parse(0, "empty vector"));
        }
        Ok(IntVector::new(out))
    }
}

impl Deref for IntVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for IntVector {
    fn from(v: Vec<i64>) -> Self {
        IntVector::new(v)
    }
}

impl<const N: usize> From<[i64; N]> for IntVector {
    fn from(v: [i64; N]) -> Self {
        IntVector::from_slice(&v)
    }
}

impl fmt::Debug for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_csv())
    }
}

impl fmt::Display for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_csv())
    }
}

impl Add for &IntVector {
    type Output = IntVector;
    fn add(self, rhs: &IntVector) -> IntVector {
        IntVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &IntVector {
    type Output = IntVector;
    fn sub(self, rhs: &IntVector) -> IntVector {
        IntVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &IntVector {
    type Output = IntVector;
    fn neg(self) -> IntVector {
        IntVector(self.0.iter().map(|a| -a).collect())
    }
}

/// Divides `v` by the gcd of its entries, preserving sign.
pub fn primitive(v: &IntVector) -> Result<IntVector> {
    let g = v.content();
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(IntVector(v.0.iter().map(|x| x / g).collect()))
}

/// Dense integer matrix, row-major, arbitrary precision.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_vectors(rows: &[IntVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.dim());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.dim() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.dim(),
                });
            }
            data.extend(r.iter().map(|&x| BigInt::from(x)));
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let v: Vec<IntVector> = rows.iter().map(|r| IntVector::from_slice(r)).collect();
        Self::from_vectors(&v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `i` as a machine-integer vector, if it fits.
    pub fn row_vector(&self, i: usize) -> Option<IntVector> {
        self.row(i)
            .iter()
            .map(|x| x.to_i64())
            .collect::<Option<Vec<_>>>()
            .map(IntVector::new)
    }

    pub fn row_vectors(&self) -> Option<Vec<IntVector>> {
        (0..self.rows).map(|i| self.row_vector(i)).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &IntVector) -> Result<IntVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.dim(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = BigInt::zero();
            for (a, &x) in self.row(i).iter().zip(v.iter()) {
                acc += a * x;
            }
            out.push(
                acc.to_i64()
                    .ok_or_else(|| Error::Unsupported("coordinate overflow".into()))?,
            );
        }
        Ok(IntVector::new(out))
    }

    /// `v · self` for a row vector `v`.
    pub fn vec_mul(&self, v: &IntVector) -> Result<IntVector> {
        self.transpose().mul_vec(v)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Row operation `row[target] += k · row[source]`.
    pub fn add_row_multiple(&mut self, target: usize, source: usize, k: &BigInt) {
        for j in 0..self.cols {
            let s = self.data[source * self.cols + j].clone();
            self.data[target * self.cols + j] += k * s;
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -&self.data[i * self.cols + j];
            self.data[i * self.cols + j] = v;
        }
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| self.row(i).to_vec()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * a[n - 1][n - 1].clone())
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().map(|d| d.abs().is_one()).unwrap_or(false)
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        if !self.is_unimodular() {
            return Err(Error::NotUnimodular);
        }
        let (h, u) = hermite_normal_form(self);
        debug_assert_eq!(h, IntMatrix::identity(self.rows));
        Ok(u)
    }

    /// Sub-matrix of the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> IntMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        IntMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Sub-matrix of the given columns.
    pub fn select_cols(&self, cols: &[usize]) -> IntMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &c in cols {
                data.push(self.get(i, c).clone());
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn to_rational_rows(&self) -> Vec<Vec<BigRational>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|x| BigRational::from_integer(x.clone()))
                    .collect()
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        let (h, _) = hermite_normal_form(self);
        (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).count()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let r: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", r.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Row-style Hermite normal form with transform: returns `(h, u)` where
/// `u` is unimodular and `h = u · m`.
pub fn hermite_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let (r, c) = (m.rows, m.cols);
    let mut h = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut p = 0;
    for j in 0..c {
        if p == r {
            break;
        }
        loop {
            let best = (p..r)
                .filter(|&i| !h.get(i, j).is_zero())
                .min_by(|&a, &b| h.get(a, j).abs().cmp(&h.get(b, j).abs()));
            let Some(b) = best else { break };
            h.swap_rows(p, b);
            u.swap_rows(p, b);
            let mut clean = true;
            for i in p + 1..r {
                if h.get(i, j).is_zero() {
                    continue;
                }
                let q = -h.get(i, j).div_floor(h.get(p, j));
                h.add_row_multiple(i, p, &q);
                u.add_row_multiple(i, p, &q);
                if !h.get(i, j).is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if h.get(p, j).is_zero() {
            continue;
        }
        if h.get(p, j).is_negative() {
            h.negate_row(p);
            u.negate_row(p);
        }
        for i in 0..p {
            let q = -h.get(i, j).div_floor(h.get(p, j));
            if !q.is_zero() {
                h.add_row_multiple(i, p, &q);
                u.add_row_multiple(i, p, &q);
            }
        }
        p += 1;
    }
    (h, u)
}

/// Index and Hermite basis of the sublattice spanned by a set of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublatticeReport {
    /// `None` when the points do not span ℚⁿ (infinite index).
    pub index: Option<BigInt>,
    /// Nonzero rows of the Hermite normal form of the point matrix.
    pub basis: IntMatrix,
}

impl SublatticeReport {
    pub fn is_finite(&self) -> bool {
        self.index.is_some()
    }
}

impl fmt::Display for SublatticeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            Some(i) => write!(f, "index={} basis={}", i, self.basis),
            None => write!(f, "index=infinite basis={}", self.basis),
        }
    }
}

/// Hermite basis and index of `Σ v·ℤ` inside ℤⁿ.
pub fn sublattice_generated(points: &[IntVector]) -> Result<SublatticeReport> {
    let m = IntMatrix::from_vectors(points)?;
    let n = m.cols;
    let (h, _) = hermite_normal_form(&m);
    let nonzero: Vec<usize> = (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).collect();
    let basis = h.select_rows(&nonzero);
    let index = if nonzero.len() == n {
        Some((0..n).fold(BigInt::one(), |acc, i| acc * basis.get(i, i)))
    } else {
        None
    };
    Ok(SublatticeReport { index, basis })
}

/// Coordinates of `points` with respect to the Hermite basis of `report`.
pub fn restrict_to_sublattice(points: &[IntVector], report: &SublatticeReport) -> Result<Vec<IntVector>> {
    if !report.is_finite() {
        return Err(Error::InfiniteIndex);
    }
    let b = &report.basis;
    let n = b.cols;
    points
        .iter()
        .map(|p| {
            if p.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.dim(),
                });
            }
            // Lower-triangular solve of c · B = p.
            let mut c: Vec<BigInt> = Vec::with_capacity(n);
            for j in 0..n {
                let mut rest = BigInt::from(p[j]);
                for (i, ci) in c.iter().enumerate() {
                    rest -= ci * b.get(i, j);
                }
                let (q, r) = rest.div_rem(b.get(j, j));
                if !r.is_zero() {
                    return Err(Error::OutsideSublattice(p.to_vec()));
                }
                c.push(q);
            }
            c.iter()
                .map(|x| x.to_i64())
                .collect::<Option<Vec<_>>>()
                .map(IntVector::new)
                .ok_or_else(|| Error::Unsupported("coordinate overflow".into()))
        })
        .collect()
}

/// Basis of the integer kernel `{x ∈ ℤ^cols : m·x = 0}`, one row per
/// generator, in Hermite normal form.
pub fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let (h, u) = hermite_normal_form(&m.transpose());
    let zero_rows: Vec<usize> = (0..h.rows).filter(|&i| h.row(i).iter().all(|x| x.is_zero())).collect();
    let k = u.select_rows(&zero_rows);
    if k.rows == 0 {
        return k;
    }
    hermite_normal_form(&k).0
}

/// Unimodular matrix whose last row is the primitive vector `w`.
pub fn complete_to_unimodular(w: &IntVector) -> Result<IntMatrix> {
    let w = {
        let p = primitive(w)?;
        if &p != w {
            return Err(Error::InvalidMutationData(format!("{w} is not primitive")));
        }
        p
    };
    let n = w.dim();
    let col = IntMatrix::from_vectors(std::slice::from_ref(&w))?.transpose();
    let (_, u) = hermite_normal_form(&col);
    // u · wᵀ = e₁, so the first column of u⁻¹ is wᵀ.
    let v = u.inverse_unimodular()?.transpose();
    let order: Vec<usize> = (1..n).chain(std::iter::once(0)).collect();
    Ok(v.select_rows(&order))
}

/// Integer coordinates on the lattice points of an affine span.
///
/// For points spanning an affine subspace of dimension `d`, every lattice
/// point of that subspace has unique local coordinates in ℤ^d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeFrame {
    origin: IntVector,
    dim: usize,
    to_local: IntMatrix,
    from_local: IntMatrix,
}

impl LatticeFrame {
    /// Frame of the affine span of `points`, anchored at the first point.
    pub fn new(points: &[IntVector]) -> Result<Self> {
        let origin = points
            .first()
            .cloned()
            .ok_or_else(|| Error::Unsupported("frame of an empty point set".into()))?;
        let n = origin.dim();
        let diffs: Vec<IntVector> = points.iter().map(|p| p - &origin).collect();
        for d in &diffs {
            if d.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.dim(),
                });
            }
        }
        let dt = IntMatrix::from_vectors(&diffs)?.transpose();
        let (h, u) = hermite_normal_form(&dt);
        let dim = (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).count();
        let from_local = u.inverse_unimodular()?;
        Ok(LatticeFrame {
            origin,
            dim,
            to_local: u,
            from_local,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.dim()
    }

    pub fn origin(&self) -> &IntVector {
        &self.origin
    }

    /// Whether `p` lies on the affine span.
    pub fn contains(&self, p: &IntVector) -> bool {
        self.full_local(p)
            .map(|y| y[self.dim..].iter().all(|&x| x == 0))
            .unwrap_or(false)
    }

    fn full_local(&self, p: &IntVector) -> Result<IntVector> {
        self.to_local.mul_vec(&(p - &self.origin))
    }

    /// Local coordinates of a lattice point of the span.
    pub fn local(&self, p: &IntVector) -> Result<IntVector> {
        let y = self.full_local(p)?;
        if y[self.dim..].iter().any(|&x| x != 0) {
            return Err(Error::OutsideSublattice(p.to_vec()));
        }
        Ok(IntVector::from_slice(&y[..self.dim]))
    }

    /// Ambient point with the given local coordinates.
    pub fn global(&self, y: &IntVector) -> Result<IntVector> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.dim(),
            });
        }
        let mut full = y.to_vec();
        full.resize(self.ambient_dim(), 0);
        let d = self.from_local.mul_vec(&IntVector::new(full))?;
        Ok(&self.origin + &d)
    }

    /// Primitive dual vectors vanishing on the span directions; together
    /// they cut out the linear part of the span.
    pub fn annihilator(&self) -> Vec<IntVector> {
        (self.dim..self.ambient_dim())
            .map(|i| self.to_local.row_vector(i).expect("small entries"))
            .collect()
    }

    /// Basis vectors of the span directions, as ambient vectors.
    pub fn directions(&self) -> Vec<IntVector> {
        let cols: Vec<usize> = (0..self.dim).collect();
        self.from_local
            .select_cols(&cols)
            .transpose()
            .row_vectors()
            .expect("small entries")
    }
}

/// Reduced row echelon form over ℚ, in place. Zero rows are dropped and the
/// pivot column of each remaining row is returned.
pub fn rational_rref(rows: &mut Vec<Vec<BigRational>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut p = 0;
    for j in 0..ncols {
        if p == rows.len() {
            break;
        }
        let Some(b) = (p..rows.len()).find(|&i| !rows[i][j].is_zero()) else {
            continue;
        };
        rows.swap(p, b);
        let inv = rows[p][j].recip();
        for x in rows[p].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[p].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == p || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for (x, y) in row.iter_mut().zip(pivot_row.iter()) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(j);
        p += 1;
    }
    rows.truncate(p);
    pivots
}

/// Solves `A x = b` over ℚ; returns one solution or `None`.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first().map_or(0, |r| r.len());
    let mut rows: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b.iter())
        .map(|(r, x)| {
            let mut r = r.clone();
            r.push(x.clone());
            r
        })
        .collect();
    let pivots = rational_rref(&mut rows);
    if pivots.last() == Some(&n) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (row, &j) in rows.iter().zip(pivots.iter()) {
        x[j] = row[n].clone();
    }
    Some(x)
}
