//! Mirror constructions: vertex, binomial and Minkowski ansatzes, and the
//! regularised quantum period of a toric manifold from its weight matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{complete_to_unimodular, hermite_normal_form, integer_kernel, primitive, IntMatrix, IntVector};
use crate::laurent::{AffineForm, LaurentPolynomial, PeriodKind, PeriodSequence};
use crate::mutation::binomial_factor;
use crate::polytope::LatticePolytope;

/// Sum of the vertex monomials of a Fano polytope.
pub fn vertex_ansatz(p: &LatticePolytope) -> Result<LaurentPolynomial> {
    if !p.is_fano() {
        return Err(Error::NotFano);
    }
    LaurentPolynomial::from_exponents(p.dim(), p.vertices())
}

/// Binomial coefficients along every edge of a reflexive polygon, zero
/// constant term.
pub fn binomial_ansatz(p: &LatticePolytope) -> Result<LaurentPolynomial> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.dim(),
        });
    }
    if !p.is_reflexive() {
        return Err(Error::NotReflexive);
    }
    let vs = p.vertices();
    let mut f = LaurentPolynomial::zero(2);
    for i in 0..vs.len() {
        let a = &vs[i];
        let e = &vs[(i + 1) % vs.len()] - a;
        let k = e.content();
        let w = primitive(&e)?;
        f = f.add(&binomial_factor(&w, k as u32)?.shift(a));
        f.add_term(a.clone(), &AffineForm::from_int(-1));
    }
    Ok(f)
}

/// GIT weight data: a `k × r` integer matrix whose columns are the weights
/// of the torus-invariant divisors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMatrix {
    matrix: IntMatrix,
}

impl WeightMatrix {
    /// Requires full row rank.
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if matrix.rank() != matrix.rows() {
            return Err(Error::Unsupported(
                "weight matrix without full row rank: summation cone is not pointed".into(),
            ));
        }
        Ok(WeightMatrix { matrix })
    }

    /// Rows separated by `;`, entries by spaces or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<i64>> = text
            .split(';')
            .map(|row| {
                row.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<i64>()
                            .map_err(|_| Error::parse(0, format!("bad weight entry `{t}`")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(Error::parse(0, "weight rows must be non-empty and equally long"));
        }
        WeightMatrix::new(IntMatrix::from_rows(&rows)?)
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// Number of characters.
    pub fn columns(&self) -> usize {
        self.matrix.cols()
    }

    /// Rank of the torus.
    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }
}

impl fmt::Display for WeightMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.matrix)
    }
}

/// The vertex matrix: one column per vertex.
pub fn vertex_matrix(p: &LatticePolytope) -> Result<IntMatrix> {
    Ok(IntMatrix::from_vectors(p.vertices())?.transpose())
}

/// Weight matrix Gale dual to the vertex matrix: its rows are a basis of
/// the integer relations among the vertices.
pub fn gale_dual(vertex_matrix: &IntMatrix) -> Result<WeightMatrix> {
    WeightMatrix::new(integer_kernel(vertex_matrix))
}

/// `A·Bᵀ = 0`, complementary ranks, and the rows of `B` span every integer
/// relation among the columns of `A`.
pub fn is_gale_dual(a: &IntMatrix, b: &WeightMatrix) -> Result<bool> {
    let b = b.matrix();
    if a.cols() != b.cols() {
        return Ok(false);
    }
    let prod = a.mul(&b.transpose())?;
    if (0..prod.rows()).any(|i| prod.row(i).iter().any(|x| !x.is_zero())) {
        return Ok(false);
    }
    if a.rank() + b.rank() != a.cols() {
        return Ok(false);
    }
    Ok(hermite_normal_form(b).0 == integer_kernel(a))
}

fn factorials(n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for k in 1..=n {
        let next = out[k - 1].clone() * k;
        out.push(next);
    }
    out
}

/// Calls `visit` with every `u ∈ ℤ^r_{≥0}` of total `d`.
fn compositions(r: usize, d: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(buf: &mut Vec<usize>, r: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == r {
            buf.push(left);
            visit(buf);
            buf.pop();
            return;
        }
        for x in (0..=left).rev() {
            buf.push(x);
            go(buf, r, left - x, visit);
            buf.pop();
        }
    }
    if r == 0 {
        if d == 0 {
            visit(&[]);
        }
        return;
    }
    go(&mut Vec::with_capacity(r), r, d, visit);
}

/// Regularised quantum period `Σ (Σ⟨v,B_i⟩)! / Π⟨v,B_i⟩! · t^{Σ⟨v,B_i⟩}`
/// over `v` with all pairings nonnegative, to order `order`.
///
/// Summands are enumerated as `u = vB ≥ 0`; membership of `u` in the row
/// lattice is decided through an invertible maximal column submatrix.
pub fn quantum_period_toric(b: &WeightMatrix, order: usize) -> Result<PeriodSequence> {
    let m = b.matrix();
    let (k, r) = (m.rows(), m.cols());
    // Greedy choice of k independent columns.
    let mut cols: Vec<usize> = Vec::new();
    for j in 0..r {
        let mut trial = cols.clone();
        trial.push(j);
        if m.select_cols(&trial).rank() == trial.len() {
            cols = trial;
        }
        if cols.len() == k {
            break;
        }
    }
    let sub = m.select_cols(&cols).to_rational_rows();
    // v · sub = u_J  ⇔  subᵀ vᵀ = u_Jᵀ.
    let subt: Vec<Vec<BigRational>> = (0..k).map(|j| (0..k).map(|i| sub[i][j].clone()).collect()).collect();
    let inv = rational_inverse(&subt).ok_or_else(|| Error::Unsupported("singular weight submatrix".into()))?;
    let rows: Vec<Vec<BigRational>> = m.to_rational_rows();
    let fact = factorials(order);
    let mut coefficients = vec![BigRational::zero(); order + 1];
    for d in 0..=order {
        let mut total = BigInt::zero();
        compositions(r, d, &mut |u| {
            let v: Vec<BigRational> = (0..k)
                .map(|i| {
                    (0..k).fold(BigRational::zero(), |acc, j| {
                        acc + &inv[i][j] * BigRational::from_integer(BigInt::from(u[cols[j]]))
                    })
                })
                .collect();
            if v.iter().any(|x| !x.is_integer()) {
                return;
            }
            let ok = (0..r).all(|c| {
                let s = (0..k).fold(BigRational::zero(), |acc, i| acc + &v[i] * &rows[i][c]);
                s == BigRational::from_integer(BigInt::from(u[c]))
            });
            if ok {
                let denom = u.iter().fold(BigInt::one(), |acc, &x| acc * &fact[x]);
                total += &fact[d] / denom;
            }
        });
        coefficients[d] = BigRational::from_integer(total);
    }
    Ok(PeriodSequence {
        coefficients,
        kind: PeriodKind::Regularized,
    })
}

fn rational_inverse(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut rows: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            r
        })
        .collect();
    let pivots = crate::lattice::rational_rref(&mut rows);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| i != p) {
        return None;
    }
    Some(rows.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Shape of an admissible Minkowski summand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SummandKind {
    /// Lattice length one.
    Segment,
    /// Equivalent to `conv{0, e₁, n·e₂}`.
    Triangle(u32),
}

/// One summand, in facet coordinates, anchored at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Summand {
    pub kind: SummandKind,
    pub vertices: Vec<IntVector>,
}

impl Summand {
    /// `1 + x^{a₁}` for a segment, `x^{a₁} + (1 + x^{a₂})^n` for a triangle,
    /// anchored at the summand's first vertex.
    pub fn polynomial(&self) -> Result<LaurentPolynomial> {
        match self.kind {
            SummandKind::Segment => LaurentPolynomial::from_exponents(2, &self.vertices),
            SummandKind::Triangle(n) => {
                let vs = &self.vertices;
                // The long edge has lattice length n; for n = 1 any edge will do.
                let (i, len) = (0..3)
                    .map(|i| (i, (&vs[(i + 1) % 3] - &vs[i]).content()))
                    .max_by_key(|&(i, l)| (l, std::cmp::Reverse(i)))
                    .expect("three edges");
                debug_assert_eq!(len, n as i64);
                let a = &vs[i];
                let dir = primitive(&(&vs[(i + 1) % 3] - a))?;
                let apex = &vs[(i + 2) % 3];
                let mut f = binomial_factor(&dir, n)?.shift(a);
                f.add_term(apex.clone(), &AffineForm::one());
                Ok(f)
            }
        }
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        match self.kind {
            SummandKind::Segment => write!(f, "segment {}", verts.join(" ")),
            SummandKind::Triangle(n) => write!(f, "A{n} {}", verts.join(" ")),
        }
    }
}

/// A facet written as a Minkowski sum of admissible summands.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MinkowskiDecomposition {
    /// Sorted.
    pub summands: Vec<Summand>,
}

impl MinkowskiDecomposition {
    /// `Π f_{Q_i}`, translated so its Newton polygon is exactly `facet`.
    pub fn polynomial(&self, facet: &LatticePolytope) -> Result<LaurentPolynomial> {
        let mut f = LaurentPolynomial::one(2);
        let mut lo = IntVector::zero(2);
        for s in &self.summands {
            f = f.mul(&s.polynomial()?)?;
            lo = &lo + s.vertices.iter().min().expect("summand vertices");
        }
        let target = facet.vertices().iter().min().expect("facet vertices");
        Ok(f.shift(&(target - &lo)))
    }
}

impl fmt::Display for MinkowskiDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.summands.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn det2(a: &IntVector, b: &IntVector) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

/// All admissible decompositions of a lattice polygon, up to reordering and
/// translation of summands. Summands correspond to closing sub-multisets of
/// the primitive edge vectors.
pub fn admissible_decompositions(facet: &LatticePolytope) -> Result<Vec<MinkowskiDecomposition>> {
    if facet.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: facet.dim(),
        });
    }
    let vs = facet.vertices();
    let mut dirs: Vec<IntVector> = Vec::new();
    let mut mult: Vec<i64> = Vec::new();
    for i in 0..vs.len() {
        let e = &vs[(i + 1) % vs.len()] - &vs[i];
        dirs.push(primitive(&e)?);
        mult.push(e.content());
    }
    let m = dirs.len();
    // Candidate pieces as count vectors.
    let mut pieces: Vec<(Vec<i64>, SummandKind)> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if dirs[j] == -&dirs[i] {
                let mut c = vec![0; m];
                c[i] = 1;
                c[j] = 1;
                pieces.push((c, SummandKind::Segment));
            }
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let idx = [i, j, k];
                for long in 0..3 {
                    let (a, b, l) = (idx[(long + 1) % 3], idx[(long + 2) % 3], idx[long]);
                    let s = &dirs[a] + &dirs[b];
                    // s = -n·dirs[l] for some n ≥ 1.
                    let n = if dirs[l][0] != 0 {
                        -s[0] / dirs[l][0]
                    } else {
                        -s[1] / dirs[l][1]
                    };
                    if n < 1 || s != dirs[l].scale(-n) || n > mult[l] || det2(&dirs[a], &dirs[l]).abs() != 1 {
                        continue;
                    }
                    let mut c = vec![0; m];
                    c[a] = 1;
                    c[b] = 1;
                    c[l] = n;
                    let piece = (c, SummandKind::Triangle(n as u32));
                    if !pieces.contains(&piece) {
                        pieces.push(piece);
                    }
                }
            }
        }
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut chosen = Vec::new();
    cover(&pieces, &mut mult.clone(), 0, &mut chosen, &mut found);
    let mut out: Vec<MinkowskiDecomposition> = found
        .into_iter()
        .map(|sel| {
            let mut summands: Vec<Summand> = sel
                .iter()
                .map(|&p| {
                    let (counts, kind) = &pieces[p];
                    let mut at = IntVector::zero(2);
                    let mut vertices = vec![at.clone()];
                    for (d, c) in dirs.iter().zip(counts) {
                        if *c > 0 {
                            at = &at + &d.scale(*c);
                            vertices.push(at.clone());
                        }
                    }
                    vertices.pop();
                    Summand { kind: *kind, vertices }
                })
                .collect();
            summands.sort();
            MinkowskiDecomposition { summands }
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Exact covers of `left` by pieces, with nondecreasing piece indices.
fn cover(
    pieces: &[(Vec<i64>, SummandKind)],
    left: &mut Vec<i64>,
    from: usize,
    chosen: &mut Vec<usize>,
    found: &mut BTreeSet<Vec<usize>>,
) {
    if left.iter().all(|&c| c == 0) {
        found.insert(chosen.clone());
        return;
    }
    let first = left.iter().position(|&c| c > 0).expect("nonzero remainder");
    for (p, (counts, _)) in pieces.iter().enumerate().skip(from) {
        if counts[first] == 0 || counts.iter().zip(left.iter()).any(|(c, l)| c > l) {
            continue;
        }
        for (l, c) in left.iter_mut().zip(counts) {
            *l -= c;
        }
        chosen.push(p);
        cover(pieces, left, p, chosen, found);
        chosen.pop();
        for (l, c) in left.iter_mut().zip(counts) {
            *l += c;
        }
    }
}

/// Coordinates on the affine plane `normal · x = offset` for the full
/// lattice of that plane.
#[derive(Clone, Debug)]
pub struct PlaneFrame {
    to_local: IntMatrix,
    from_local: IntMatrix,
    offset: i64,
}

impl PlaneFrame {
    pub fn new(normal: &IntVector, offset: i64) -> Result<Self> {
        let to_local = complete_to_unimodular(normal)?;
        let from_local = to_local.inverse_unimodular()?;
        Ok(PlaneFrame {
            to_local,
            from_local,
            offset,
        })
    }

    pub fn local(&self, x: &IntVector) -> Result<IntVector> {
        let y = self.to_local.mul_vec(x)?;
        Ok(IntVector::from_slice(&y[..y.dim() - 1]))
    }

    pub fn global(&self, y: &IntVector) -> Result<IntVector> {
        let mut full = y.to_vec();
        full.push(self.offset);
        self.from_local.mul_vec(&IntVector::new(full))
    }
}

/// A facet of a three-dimensional polytope flattened to its plane lattice.
pub fn facet_polygon(p: &LatticePolytope, facet: usize) -> Result<(LatticePolytope, PlaneFrame)> {
    let f = p
        .facets()
        .get(facet)
        .ok_or_else(|| Error::NotFound(format!("facet {facet}")))?;
    let frame = PlaneFrame::new(&f.normal, f.offset)?;
    let local: Vec<IntVector> = f
        .vertices
        .iter()
        .map(|&i| frame.local(&p.vertices()[i]))
        .collect::<Result<_>>()?;
    Ok((LatticePolytope::convex_hull(&local)?, frame))
}

/// Minkowski ansatz polynomials of a three-dimensional reflexive polytope,
/// one per combination of facet decompositions, deduplicated.
pub fn minkowski_ansatz(p: &LatticePolytope) -> Result<Vec<LaurentPolynomial>> {
    if p.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: p.dim(),
        });
    }
    if !p.is_reflexive() {
        return Err(Error::NotReflexive);
    }
    let mut per_facet: Vec<Vec<LaurentPolynomial>> = Vec::new();
    let mut failing = Vec::new();
    for i in 0..p.facets().len() {
        let (poly, frame) = facet_polygon(p, i)?;
        let decs = admissible_decompositions(&poly)?;
        if decs.is_empty() {
            failing.push(i);
            continue;
        }
        let mut polys = Vec::new();
        for d in &decs {
            let local = d.polynomial(&poly)?;
            let mut global = LaurentPolynomial::zero(3);
            for (e, c) in local.terms() {
                global.add_term(frame.global(e)?, c);
            }
            polys.push(global);
        }
        polys.sort();
        polys.dedup();
        per_facet.push(polys);
    }
    if !failing.is_empty() {
        return Err(Error::NoAdmissibleDecomposition(failing));
    }
    let mut out: BTreeSet<LaurentPolynomial> = BTreeSet::new();
    let mut idx = vec![0usize; per_facet.len()];
    loop {
        let mut coeffs: BTreeMap<IntVector, AffineForm> = BTreeMap::new();
        for (choice, polys) in idx.iter().zip(&per_facet) {
            for (e, c) in polys[*choice].terms() {
                match coeffs.get(e) {
                    Some(prev) if prev != c => {
                        return Err(Error::InconsistentAssembly {
                            point: e.to_vec(),
                            first: prev.to_string(),
                            second: c.to_string(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        coeffs.insert(e.clone(), c.clone());
                    }
                }
            }
        }
        out.insert(LaurentPolynomial::from_terms(3, coeffs)?);
        // Next combination.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(out.into_iter().collect());
            }
            idx[pos] += 1;
            if idx[pos] < per_facet[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
