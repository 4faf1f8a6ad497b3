//! Mutations of Laurent polynomials and of lattice polytopes.
//!
//! A mutation datum is a primitive dual vector `w` with a factor `a`
//! supported on `w⊥`. The polynomial mutation is the birational map
//! `x^v ↦ x^v a^{w(v)}`; it is defined on `f` exactly when every slice of
//! negative `w`-height `h` is divisible by `a^{|h|}`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::{primitive, IntVector};
use crate::laurent::{AffineForm, LaurentPolynomial};
use crate::polytope::{EmbeddedPolytope, LatticePolytope};

/// A primitive dual vector with a factor supported on its orthogonal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MutationData {
    w: IntVector,
    factor: LaurentPolynomial,
}

impl MutationData {
    /// Validates primitivity of `w` and that `a` is a normalised polynomial
    /// with nonnegative integer coefficients supported on `w⊥`.
    pub fn new(w: IntVector, factor: LaurentPolynomial) -> Result<Self> {
        if w.dim() != factor.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: factor.dim(),
            });
        }
        if primitive(&w)? != w {
            return Err(Error::InvalidMutationData(format!("{w} is not primitive")));
        }
        if factor.is_empty() {
            return Err(Error::InvalidMutationData("zero factor".into()));
        }
        if let Some(e) = factor.support().iter().find(|e| w.dot(e) != 0) {
            return Err(Error::InvalidMutationData(format!(
                "factor exponent {e} is not orthogonal to {w}"
            )));
        }
        if !factor.has_nonnegative_integer_coefficients() || !factor.is_normalised() {
            return Err(Error::InvalidMutationData(
                "factor must be normalised with nonnegative integer coefficients".into(),
            ));
        }
        Ok(MutationData { w, factor })
    }

    pub fn w(&self) -> &IntVector {
        &self.w
    }

    pub fn factor(&self) -> &LaurentPolynomial {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    /// A monomial factor gives a mere change of basis.
    pub fn is_trivial(&self) -> bool {
        self.factor.len() == 1
    }

    /// The datum `(−w, a)`, whose mutation inverts this one.
    pub fn inverse(&self) -> MutationData {
        MutationData {
            w: -&self.w,
            factor: self.factor.clone(),
        }
    }

    pub fn label(&self) -> EdgeLabel {
        canonical_edge_label(self)
    }

    /// Combinatorial shadow `(w, Newt a)`.
    pub fn to_polytope_data(&self) -> Result<PolytopeMutationData> {
        PolytopeMutationData::new(self.w.clone(), &self.factor.support())
    }

    /// Parses `w= 1,0 ; a= 1+y`.
    pub fn parse_line(line: &str, dim: Option<usize>) -> Result<Self> {
        let (wpart, apart) = line
            .split_once(';')
            .ok_or_else(|| Error::parse(0, "expected `w= ... ; a= ...`"))?;
        let wtext = wpart
            .trim()
            .strip_prefix("w=")
            .ok_or_else(|| Error::parse(0, "expected `w=`"))?;
        let atext = apart
            .trim()
            .strip_prefix("a=")
            .ok_or_else(|| Error::parse(wpart.len() + 1, "expected `a=`"))?;
        let w = IntVector::parse(wtext)?;
        let dim = dim.unwrap_or(w.dim());
        if w.dim() != dim {
            return Err(Error::parse(0, format!("w must have {dim} entries")));
        }
        let a = LaurentPolynomial::parse_in_dim(atext, dim)?;
        MutationData::new(w, a)
    }

    /// One datum per non-empty, non-comment line.
    pub fn parse_list(text: &str, dim: Option<usize>) -> Result<Vec<Self>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| Self::parse_line(l, dim))
            .collect()
    }
}

impl fmt::Display for MutationData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w= {} ; a= {}", self.w.to_csv(), self.factor)
    }
}

/// Edge label `(⟨w⟩, a · x^{w⊥})`, keeping the orientation of `w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLabel {
    /// `±w` with first nonzero entry positive.
    pub line: IntVector,
    /// `+1` when `w = line`, `−1` when `w = −line`.
    pub orientation: i8,
    /// Factor translated so its lex-smallest exponent is the origin.
    pub factor: LaurentPolynomial,
}

impl EdgeLabel {
    /// Equality of span and factor class, ignoring orientation.
    pub fn same_span_and_factor(&self, other: &EdgeLabel) -> bool {
        self.line == other.line && self.factor == other.factor
    }

    /// The oriented dual vector.
    pub fn w(&self) -> IntVector {
        self.line.scale(self.orientation as i64)
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L(({}),{})", self.w().to_csv(), self.factor)
    }
}

/// Canonical label of a mutation datum.
pub fn canonical_edge_label(md: &MutationData) -> EdgeLabel {
    let first = md.w.iter().find(|&&x| x != 0).copied().unwrap_or(1);
    let (line, orientation) = if first > 0 { (md.w.clone(), 1) } else { (-&md.w, -1) };
    let lo = md.factor.min_exponent().cloned().expect("nonzero factor");
    EdgeLabel {
        line,
        orientation,
        factor: md.factor.shift(&-&lo),
    }
}

/// Quotients certifying mutability, and the mutated polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutationWitness {
    /// `r_h` with `slice_h(f) = r_h · a^{|h|}` for each negative height `h`.
    pub quotients: BTreeMap<i64, LaurentPolynomial>,
    pub result: LaurentPolynomial,
}

/// Exact division `p / d` in the Laurent ring, or `None` when `d` does not
/// divide `p`. Quotient exponents are confined to the region allowed by the
/// Minkowski-sum bound, which also guarantees termination.
pub fn exact_divide(p: &LaurentPolynomial, d: &LaurentPolynomial) -> Option<LaurentPolynomial> {
    if p.is_empty() {
        return Some(LaurentPolynomial::zero(p.dim()));
    }
    let (d_lead, d_coef) = d.terms().iter().next_back()?;
    let d_coef = d_coef.as_constant()?.clone();
    if d_coef.is_zero() {
        return None;
    }
    let n = p.dim();
    let lo: Vec<i64> = (0..n).map(|i| p.terms().keys().map(|e| e[i]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..n).map(|i| p.terms().keys().map(|e| e[i]).max().unwrap()).collect();
    let d_lo: Vec<i64> = (0..n).map(|i| d.terms().keys().map(|e| e[i]).min().unwrap()).collect();
    let d_hi: Vec<i64> = (0..n).map(|i| d.terms().keys().map(|e| e[i]).max().unwrap()).collect();
    let inv = d_coef.recip();
    let mut rem = p.clone();
    let mut quot = LaurentPolynomial::zero(n);
    while let Some((e, c)) = rem.terms().iter().next_back() {
        let u = e - d_lead;
        if (0..n).any(|i| u[i] + d_lo[i] < lo[i] || u[i] + d_hi[i] > hi[i]) {
            return None;
        }
        let qc = c.scale(&inv);
        let step = d
            .shift(&u)
            .mul(&LaurentPolynomial::monomial(IntVector::zero(n), qc.clone()));
        rem = rem.sub(&step.ok()?);
        quot.add_term(u, &qc);
    }
    Some(quot)
}

/// Decides mutability of `f` with respect to `md`, returning the quotients.
pub fn is_mutable(f: &LaurentPolynomial, md: &MutationData) -> Result<MutationWitness> {
    is_mutable_with(f, md, false)
}

/// As [`is_mutable`], optionally accepting monomial factors.
pub fn is_mutable_with(f: &LaurentPolynomial, md: &MutationData, allow_trivial: bool) -> Result<MutationWitness> {
    if f.dim() != md.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: md.dim(),
        });
    }
    if md.is_trivial() && !allow_trivial {
        return Err(Error::TrivialMutation);
    }
    let a = &md.factor;
    let mut powers: Vec<LaurentPolynomial> = vec![LaurentPolynomial::one(f.dim())];
    let mut power = |k: usize| -> Result<LaurentPolynomial> {
        while powers.len() <= k {
            let next = powers.last().unwrap().mul(a)?;
            powers.push(next);
        }
        Ok(powers[k].clone())
    };
    let mut quotients = BTreeMap::new();
    let mut result = LaurentPolynomial::zero(f.dim());
    for (h, slice) in f.grade(&md.w) {
        if h < 0 {
            let ak = power(h.unsigned_abs() as usize)?;
            let r = exact_divide(&slice, &ak).ok_or(Error::NotMutable { height: h })?;
            result = result.add(&r);
            quotients.insert(h, r);
        } else {
            let ak = power(h as usize)?;
            result = result.add(&slice.mul(&ak)?);
        }
    }
    Ok(MutationWitness { quotients, result })
}

/// The mutated polynomial `μ_{w,a}(f)`.
pub fn mutate(f: &LaurentPolynomial, md: &MutationData) -> Result<LaurentPolynomial> {
    Ok(is_mutable(f, md)?.result)
}

/// A primitive dual vector with a factor polytope in `w⊥`.
#[derive(Clone, Debug)]
pub struct PolytopeMutationData {
    w: IntVector,
    factor: EmbeddedPolytope,
}

impl PolytopeMutationData {
    pub fn new(w: IntVector, factor_points: &[IntVector]) -> Result<Self> {
        if primitive(&w)? != w {
            return Err(Error::InvalidMutationData(format!("{w} is not primitive")));
        }
        if let Some(p) = factor_points.iter().find(|p| p.dim() != w.dim()) {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: p.dim(),
            });
        }
        if let Some(e) = factor_points.iter().find(|e| w.dot(e) != 0) {
            return Err(Error::InvalidMutationData(format!(
                "factor point {e} is not orthogonal to {w}"
            )));
        }
        Ok(PolytopeMutationData {
            w,
            factor: EmbeddedPolytope::new(factor_points)?,
        })
    }

    pub fn w(&self) -> &IntVector {
        &self.w
    }

    pub fn factor(&self) -> &EmbeddedPolytope {
        &self.factor
    }

    pub fn inverse(&self) -> PolytopeMutationData {
        PolytopeMutationData {
            w: -&self.w,
            factor: self.factor.clone(),
        }
    }
}

/// Lattice points `u` at height `h < 0` with `u + |h|·A ⊆ P`.
fn admissible_points(p: &LatticePolytope, pmd: &PolytopeMutationData, h: i64) -> Vec<IntVector> {
    let k = h.abs();
    let av = pmd.factor.vertices();
    p.lattice_points()
        .iter()
        .filter(|u| pmd.w.dot(u) == h)
        .filter(|u| av.iter().all(|a| p.contains(&(*u + &a.scale(k)))))
        .cloned()
        .collect()
}

/// Computes the maximal `R_h` for each negative height, as lattice point
/// sets, or reports the first height where a vertex is not covered.
pub fn polytope_mutable(p: &LatticePolytope, pmd: &PolytopeMutationData) -> Result<BTreeMap<i64, Vec<IntVector>>> {
    if p.dim() != pmd.w.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: pmd.w.dim(),
        });
    }
    let (lo, _) = p.height_range(&pmd.w);
    let av = pmd.factor.vertices();
    let mut out = BTreeMap::new();
    for h in lo..0 {
        let adm = admissible_points(p, pmd, h);
        for v in p.vertices().iter().filter(|v| pmd.w.dot(v) == h) {
            let covered = av.iter().any(|a| adm.binary_search(&(v - &a.scale(h.abs()))).is_ok());
            if !covered {
                return Err(Error::NotMutable { height: h });
            }
        }
        out.insert(h, adm);
    }
    Ok(out)
}

/// `conv(∪ R_h ∪ ∪_{h ≥ 0}(P_h + h·A))` with the maximal `R_h`.
pub fn mutate_polytope(p: &LatticePolytope, pmd: &PolytopeMutationData) -> Result<LatticePolytope> {
    let rs = polytope_mutable(p, pmd)?;
    assemble_mutation(p, pmd, &rs)
}

/// Polytope mutation with caller-chosen `R_h` point sets. Each choice must
/// cover the vertices at its height; the result does not depend on it.
pub fn mutate_polytope_with(
    p: &LatticePolytope,
    pmd: &PolytopeMutationData,
    choose: impl Fn(i64, &[IntVector]) -> Vec<IntVector>,
) -> Result<LatticePolytope> {
    let maximal = polytope_mutable(p, pmd)?;
    let av = pmd.factor.vertices();
    let mut chosen = BTreeMap::new();
    for (h, adm) in &maximal {
        let r = choose(*h, adm);
        if r.iter().any(|u| adm.binary_search(u).is_err()) {
            return Err(Error::InvalidMutationData(format!(
                "chosen points at height {h} are not admissible"
            )));
        }
        let r_poly: Vec<IntVector> = r.clone();
        for v in p.vertices().iter().filter(|v| pmd.w.dot(v) == *h) {
            let ok = av.iter().any(|a| {
                let u = v - &a.scale(h.abs());
                r_poly.contains(&u)
            });
            if !ok {
                return Err(Error::NotMutable { height: *h });
            }
        }
        chosen.insert(*h, r);
    }
    assemble_mutation(p, pmd, &chosen)
}

fn assemble_mutation(
    p: &LatticePolytope,
    pmd: &PolytopeMutationData,
    rs: &BTreeMap<i64, Vec<IntVector>>,
) -> Result<LatticePolytope> {
    let av = pmd.factor.vertices();
    let mut pts: Vec<IntVector> = rs.values().flatten().cloned().collect();
    for u in p.lattice_points() {
        let h = pmd.w.dot(u);
        if h >= 0 {
            for a in &av {
                pts.push(u + &a.scale(h));
            }
        }
    }
    LatticePolytope::convex_hull(&pts)
}

/// Builds the binomial factor `(1 + x^v)^k` in the given dimension.
pub fn binomial_factor(v: &IntVector, k: u32) -> Result<LaurentPolynomial> {
    let base = LaurentPolynomial::from_terms(
        v.dim(),
        [
            (IntVector::zero(v.dim()), AffineForm::one()),
            (v.clone(), AffineForm::one()),
        ],
    )?;
    base.pow(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::classical_period;
    use crate::polytope::gl_equivalent;

    fn p(s: &str) -> LaurentPolynomial {
        LaurentPolynomial::parse(s).unwrap()
    }

    fn p2d(s: &str) -> LaurentPolynomial {
        LaurentPolynomial::parse_in_dim(s, 2).unwrap()
    }

    fn v(x: &[i64]) -> IntVector {
        IntVector::from_slice(x)
    }

    fn poly(pts: &[&[i64]]) -> LatticePolytope {
        LatticePolytope::convex_hull(&pts.iter().map(|p| v(p)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn p2_mutation() {
        let f = p("x+y+1/(x*y)");
        let md = MutationData::new(v(&[-1, -1]), p2d("1+x/y")).unwrap();
        let wit = is_mutable(&f, &md).unwrap();
        assert_eq!(wit.quotients[&-1], p2d("y"));
        let g = wit.result;
        assert_eq!(g, p("y+2/y^2+x/y^3+1/(x*y)"));
        assert_eq!(classical_period(&f, 9).unwrap(), classical_period(&g, 9).unwrap());
        let newt = g.newton_polytope().unwrap();
        let mut verts = newt.vertices().to_vec();
        verts.sort();
        assert_eq!(verts, vec![v(&[-1, -1]), v(&[0, 1]), v(&[1, -3])]);
        assert_eq!(mutate(&g, &md.inverse()).unwrap(), f);
    }

    #[test]
    fn p2_not_mutable_the_other_way() {
        let f = p("x+y+1/(x*y)");
        let md = MutationData::new(v(&[1, 1]), p2d("1+x/y")).unwrap();
        assert_eq!(is_mutable(&f, &md), Err(Error::NotMutable { height: -2 }));
    }

    #[test]
    fn vacuous_and_trivial() {
        // Every exponent has nonnegative height: nothing to divide.
        let f = p("x+y+x*y");
        let md = MutationData::new(v(&[1, 1]), p2d("1+x/y")).unwrap();
        let g = mutate(&f, &md).unwrap();
        assert_eq!(g, p("2x+y+x^2/y+x*y+2x^2+x^3/y"));
        let md = MutationData::new(v(&[0, 1]), p2d("x")).unwrap();
        assert!(md.is_trivial());
        assert_eq!(is_mutable(&p("x+y+1/(xy)"), &md), Err(Error::TrivialMutation));
        assert!(is_mutable_with(&p("x+y+1/(xy)"), &md, true).is_ok());
    }

    #[test]
    fn data_validation() {
        assert!(MutationData::new(v(&[2, 0]), p2d("1+y")).is_err());
        assert!(MutationData::new(v(&[0, 1]), p2d("1+y")).is_err());
        assert!(MutationData::new(v(&[0, 1]), p2d("2+x")).is_err());
        let md = MutationData::parse_line("w= 0,1 ; a= 1+x", Some(2)).unwrap();
        assert_eq!(md.w(), &v(&[0, 1]));
        let list = MutationData::parse_list("# c\nw= 0,1 ; a= 1+x\n\nw= 1,0 ; a=1+y\n", Some(2)).unwrap();
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn labels() {
        let a = MutationData::new(v(&[0, 1]), p2d("1+x")).unwrap();
        let b = MutationData::new(v(&[0, 1]), p2d("x^-3*(1+x)")).unwrap();
        assert_eq!(a.label(), b.label());
        let c = MutationData::new(v(&[0, 1]), p2d("(1+x)^2")).unwrap();
        assert_ne!(a.label(), c.label());
        let d = MutationData::new(v(&[0, -1]), p2d("1+x")).unwrap();
        assert_ne!(a.label(), d.label());
        assert!(a.label().same_span_and_factor(&d.label()));
        assert_eq!(a.label().to_string(), "L((0,1),x+1)");
        assert_eq!(d.label().to_string(), "L((0,-1),x+1)");
    }

    fn quadrilateral_left() -> LatticePolytope {
        poly(&[&[-2, -3], &[-2, 1], &[-1, 2], &[2, -3]])
    }

    fn quadrilateral_right() -> LatticePolytope {
        poly(&[&[-2, -3], &[-2, 1], &[-1, 2], &[1, 2], &[-1, -3]])
    }

    #[test]
    fn quadrilateral_polytope_mutation() {
        let pmd = PolytopeMutationData::new(v(&[0, 1]), &[v(&[0, 0]), v(&[1, 0])]).unwrap();
        let rs = polytope_mutable(&quadrilateral_left(), &pmd).unwrap();
        let mut r3 = rs[&-3].clone();
        r3.sort();
        assert_eq!(r3.len(), 2);
        let q = mutate_polytope(&quadrilateral_left(), &pmd).unwrap();
        assert_eq!(q, quadrilateral_right());
        // Empty choices at heights without vertices.
        let minimal = mutate_polytope_with(&quadrilateral_left(), &pmd, |h, adm| {
            if h == -3 {
                adm.to_vec()
            } else {
                Vec::new()
            }
        })
        .unwrap();
        assert_eq!(minimal, quadrilateral_right());
        let back = mutate_polytope(&q, &pmd.inverse()).unwrap();
        assert!(gl_equivalent(&back, &quadrilateral_left()).unwrap());
        assert!(q.is_fano());
    }

    #[test]
    fn newton_compatibility_on_p2() {
        let f = p("x+y+1/(x*y)");
        let md = MutationData::new(v(&[-1, -1]), p2d("1+x/y")).unwrap();
        let g = mutate(&f, &md).unwrap();
        let q = mutate_polytope(&f.newton_polytope().unwrap(), &md.to_polytope_data().unwrap()).unwrap();
        assert_eq!(q, g.newton_polytope().unwrap());
    }

    #[test]
    fn point_factor_is_always_mutable() {
        let pmd = PolytopeMutationData::new(v(&[0, 1]), &[v(&[0, 0])]).unwrap();
        let q = mutate_polytope(&quadrilateral_left(), &pmd).unwrap();
        assert_eq!(q, quadrilateral_left());
    }

    #[test]
    fn exact_division() {
        let q = exact_divide(&p("1+3x+3x^2+x^3"), &p("1+x")).unwrap();
        assert_eq!(q, p("1+2x+x^2"));
        assert!(exact_divide(&p("1+x^2"), &p("1+x")).is_none());
        let q = exact_divide(&p2d("(8+a1)*x+(8+a1)*y"), &p2d("x+y")).unwrap();
        assert_eq!(q, p2d("8+a1"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Polynomials mutable by construction with respect to `w = (0,1)`,
        /// `a = (1+x)^k`: negative slices are multiples of `a^{|h|}`.
        fn mutable_pair() -> impl Strategy<Value = (LaurentPolynomial, MutationData)> {
            let slice = prop::collection::vec((-2i64..=2, 1i64..=3), 1..3);
            (1u32..=2, prop::collection::vec(slice, 4), any::<bool>()).prop_map(|(k, slices, swap)| {
                let a = binomial_factor(&v(&[1, 0]), k).unwrap();
                let mut f = LaurentPolynomial::zero(2);
                for (idx, terms) in slices.iter().enumerate() {
                    let h = idx as i64 - 2;
                    let mut r = LaurentPolynomial::zero(2);
                    for (i, c) in terms {
                        r.add_term(v(&[*i, h]), &AffineForm::from_int(*c));
                    }
                    let piece = if h < 0 {
                        r.mul(&a.pow(h.unsigned_abs() as u32).unwrap()).unwrap()
                    } else {
                        r
                    };
                    f = f.add(&piece);
                }
                let mut w = v(&[0, 1]);
                let mut a = a;
                if swap {
                    let u = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
                    f = f.monomial_change_of_basis(&u).unwrap();
                    a = a.monomial_change_of_basis(&u).unwrap();
                    w = v(&[1, 0]);
                }
                (f, MutationData::new(w, a).unwrap())
            })
        }

        use crate::lattice::IntMatrix;

        proptest! {
            #[test]
            fn inverse_law((f, md) in mutable_pair()) {
                let g = mutate(&f, &md).unwrap();
                prop_assert_eq!(mutate(&g, &md.inverse()).unwrap(), f);
            }

            #[test]
            fn period_is_preserved((f, md) in mutable_pair()) {
                let g = mutate(&f, &md).unwrap();
                prop_assert_eq!(classical_period(&f, 6).unwrap(), classical_period(&g, 6).unwrap());
            }

            #[test]
            fn newton_compatibility((f, md) in mutable_pair()) {
                let g = mutate(&f, &md).unwrap();
                let (Ok(pf), Ok(pg)) = (f.newton_polytope(), g.newton_polytope()) else {
                    return Ok(());
                };
                let q = mutate_polytope(&pf, &md.to_polytope_data().unwrap()).unwrap();
                prop_assert_eq!(q, pg);
            }
        }
    }
}
