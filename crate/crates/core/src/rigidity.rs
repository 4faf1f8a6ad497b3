//! Spaces of polynomials mutable with respect to a set of mutations, the
//! bounded search for the mutations a polynomial supports, and rigidity
//! certificates.
//!
//! A polynomial is certified rigid when it is the only normalised
//! polynomial on its Newton polytope with zero constant term that supports
//! all of its mutations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{primitive, IntVector};
use crate::laurent::{AffineForm, LaurentPolynomial};
use crate::linear::{divisibility_constraints, Coefficient, Constraint, LinearSystem};
use crate::mutation::{binomial_factor, is_mutable, EdgeLabel, MutationData};
use crate::par::{self, ExecMode};
use crate::polytope::LatticePolytope;

/// The affine family of coefficient assignments on a polytope that are
/// mutable with respect to every member of a mutation set.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpace {
    /// General member, or `None` when no assignment exists.
    pub polynomial: Option<LaurentPolynomial>,
    pub parameters: Vec<String>,
    /// Number of independent constraints contributed by each datum.
    pub provenance: Vec<(EdgeLabel, usize)>,
}

impl CoefficientSpace {
    pub fn is_empty(&self) -> bool {
        self.polynomial.is_none()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.polynomial.as_ref().map(|_| self.parameters.len())
    }

    /// Parameter values realising `f`, if `f` is a member.
    pub fn locate(&self, f: &LaurentPolynomial) -> Result<Option<BTreeMap<String, BigRational>>> {
        let Some(g) = &self.polynomial else {
            return Ok(None);
        };
        if f.support().iter().any(|e| g.coefficient(e).is_zero()) {
            return Ok(None);
        }
        let index: BTreeMap<&String, usize> = self.parameters.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut sys = LinearSystem::new(self.parameters.len());
        for (e, form) in g.terms() {
            let target = f
                .coefficient(e)
                .as_constant()
                .cloned()
                .ok_or_else(|| Error::Parametric(f.to_string()))?;
            let terms: Vec<(usize, BigRational)> =
                form.linear_part().iter().map(|(p, c)| (index[p], c.clone())).collect();
            sys.add_equation(&terms, target - form.constant_part());
        }
        match sys.solve(&[], |k| k.to_string()) {
            Ok(sol) => Ok(Some(
                self.parameters
                    .iter()
                    .zip(&sol.values)
                    .map(|(p, v)| (p.clone(), v.constant_part().clone()))
                    .collect(),
            )),
            Err(Error::Inconsistent(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

fn param_name(k: usize) -> String {
    format!("a{}", k + 1)
}

/// Slices of the polytope at negative heights, with coefficient roles.
fn slice_constraints(
    p: &LatticePolytope,
    unknown: &BTreeMap<IntVector, usize>,
    md: &MutationData,
) -> Result<Vec<Constraint>> {
    let vertices: BTreeSet<&IntVector> = p.vertices().iter().collect();
    let role = |x: &IntVector| match unknown.get(x) {
        Some(&j) => Coefficient::Unknown(j),
        None if vertices.contains(x) => Coefficient::Known(BigRational::one()),
        None => Coefficient::Known(BigRational::zero()),
    };
    let (lo, _) = p.height_range(md.w());
    let mut out = Vec::new();
    let mut power = LaurentPolynomial::one(p.dim());
    for k in 1..=(-lo).max(0) {
        power = power.mul(md.factor())?;
        let slice: BTreeMap<IntVector, Coefficient> = p
            .lattice_points()
            .iter()
            .filter(|x| md.w().dot(x) == -k)
            .map(|x| (x.clone(), role(x)))
            .collect();
        out.extend(divisibility_constraints(&slice, &power)?);
    }
    Ok(out)
}

/// The space `L_P(S)`: vertices pinned to 1, origin to 0, every other
/// lattice point free, subject to mutability for each datum in `mutations`.
pub fn coefficient_space(p: &LatticePolytope, mutations: &[MutationData]) -> Result<CoefficientSpace> {
    coefficient_space_with(p, mutations, ExecMode::default())
}

pub fn coefficient_space_with(
    p: &LatticePolytope,
    mutations: &[MutationData],
    mode: ExecMode,
) -> Result<CoefficientSpace> {
    if !p.is_fano() {
        return Err(Error::NotFano);
    }
    if let Some(md) = mutations.iter().find(|m| m.dim() != p.dim()) {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: md.dim(),
        });
    }
    let vertices: BTreeSet<&IntVector> = p.vertices().iter().collect();
    let mut unknown: BTreeMap<IntVector, usize> = BTreeMap::new();
    for x in p.lattice_points() {
        if !x.is_zero() && !vertices.contains(x) {
            let id = unknown.len();
            unknown.insert(x.clone(), id);
        }
    }
    let per_datum = par::map(mode, mutations, |md| slice_constraints(p, &unknown, md));
    let mut sys = LinearSystem::new(unknown.len());
    let mut provenance = Vec::new();
    let mut empty = false;
    for (md, cons) in mutations.iter().zip(per_datum) {
        match cons {
            Ok(cons) => {
                provenance.push((md.label(), cons.len()));
                for (terms, rhs) in cons {
                    sys.add_equation(&terms, rhs);
                }
            }
            Err(Error::Inconsistent(_)) => {
                provenance.push((md.label(), 0));
                empty = true;
            }
            Err(e) => return Err(e),
        }
    }
    // Points deeper inside are eliminated last, so free parameters sit
    // close to the origin.
    let mut order: Vec<(usize, &IntVector)> = unknown.iter().map(|(x, &j)| (j, x)).collect();
    order.sort_by_key(|(_, x)| std::cmp::Reverse(p.facets().iter().map(|f| f.normal.dot(x) - f.offset).min()));
    let priority: Vec<usize> = order.iter().map(|(j, _)| *j).collect();
    let solved = if empty {
        Err(Error::Inconsistent(String::new()))
    } else {
        sys.solve(&priority, param_name)
    };
    let sol = match solved {
        Ok(sol) => sol,
        Err(Error::Inconsistent(_)) => {
            return Ok(CoefficientSpace {
                polynomial: None,
                parameters: Vec::new(),
                provenance,
            })
        }
        Err(e) => return Err(e),
    };
    let mut f = LaurentPolynomial::zero(p.dim());
    for x in p.lattice_points() {
        let c = match unknown.get(x) {
            Some(&j) => sol.values[j].clone(),
            None if x.is_zero() => continue,
            None => AffineForm::one(),
        };
        f.add_term(x.clone(), &c);
    }
    Ok(CoefficientSpace {
        polynomial: Some(f),
        parameters: (0..sol.free.len()).map(param_name).collect(),
        provenance,
    })
}

/// Bounds for the candidate-mutation search in dimension three.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MutationSearchBudget {
    /// Largest coefficient in combinations of adjacent facet normals.
    pub max_w: i64,
    /// Largest exponent of a binomial factor.
    pub max_power: u32,
    /// Largest `n` for `A_n` triangle factors.
    pub max_triangle: u32,
}

impl Default for MutationSearchBudget {
    fn default() -> Self {
        MutationSearchBudget {
            max_w: 3,
            max_power: 3,
            max_triangle: 3,
        }
    }
}

/// Dual vectors worth trying: facet normals and, in dimension three, the
/// lattice points of each edge's normal cone in the fundamental
/// parallelogram of its two facet normals or small combinations of them.
fn candidate_directions(p: &LatticePolytope, budget: &MutationSearchBudget) -> Result<Vec<IntVector>> {
    let mut out: BTreeSet<IntVector> = p.facets().iter().map(|f| f.normal.clone()).collect();
    if p.dim() == 3 {
        for e in p.edges() {
            let [f1, f2] = [e.facets[0], e.facets[1]];
            let (n1, n2) = (&p.facets()[f1].normal, &p.facets()[f2].normal);
            for a in 1..=budget.max_w {
                for b in 1..=budget.max_w {
                    if a.gcd(&b) == 1 {
                        out.insert(primitive(&(&n1.scale(a) + &n2.scale(b)))?);
                    }
                }
            }
            // Fundamental parallelogram: w = λ n1 + μ n2, 0 ≤ λ, μ < 1.
            let plane = cross3(n1, n2);
            let corners = [IntVector::zero(3), n1.clone(), n2.clone(), n1 + n2];
            let lo: Vec<i64> = (0..3).map(|i| corners.iter().map(|c| c[i]).min().unwrap()).collect();
            let hi: Vec<i64> = (0..3).map(|i| corners.iter().map(|c| c[i]).max().unwrap()).collect();
            let g11 = n1.dot(n1);
            let g12 = n1.dot(n2);
            let g22 = n2.dot(n2);
            let det = g11 * g22 - g12 * g12;
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        let w = IntVector::from_slice(&[x, y, z]);
                        if w.is_zero() || plane.dot(&w) != 0 {
                            continue;
                        }
                        let (b1, b2) = (w.dot(n1), w.dot(n2));
                        let lam = b1 * g22 - b2 * g12;
                        let mu = b2 * g11 - b1 * g12;
                        if lam > 0 && mu > 0 && lam < det && mu < det {
                            out.insert(primitive(&w)?);
                        }
                    }
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn cross3(a: &IntVector, b: &IntVector) -> IntVector {
    IntVector::from_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Normalised area of a lattice triangle with edge vectors `a`, `b` inside
/// the plane lattice orthogonal to a primitive vector.
fn plane_area(a: &IntVector, b: &IntVector) -> i64 {
    match a.dim() {
        2 => (a[0] * b[1] - a[1] * b[0]).abs(),
        _ => cross3(a, b).content(),
    }
}

/// Segment and `A_n` triangle factors whose `r`-fold dilate fits in the
/// face of lattice points `face`.
fn candidate_factors(
    face: &[IntVector],
    r: i64,
    budget: &MutationSearchBudget,
    dim: usize,
) -> Result<Vec<LaurentPolynomial>> {
    let mut out: BTreeSet<LaurentPolynomial> = BTreeSet::new();
    let divisible = |v: &IntVector| v.iter().all(|x| x % r == 0);
    let shrink = |v: &IntVector| IntVector::new(v.iter().map(|x| x / r).collect());
    for (i, p0) in face.iter().enumerate() {
        for p1 in &face[i + 1..] {
            let d = p1 - p0;
            if !divisible(&d) {
                continue;
            }
            let d = shrink(&d);
            let k = d.content();
            if k as u32 <= budget.max_power {
                let u = primitive(&d)?;
                let u = if u.iter().find(|&&x| x != 0).copied().unwrap_or(1) < 0 {
                    -&u
                } else {
                    u
                };
                out.insert(binomial_factor(&u, k as u32)?);
            }
        }
    }
    if dim == 3 && budget.max_triangle > 0 {
        for (i, p0) in face.iter().enumerate() {
            for (j, p1) in face.iter().enumerate().skip(i + 1) {
                for p2 in &face[j + 1..] {
                    let (a, b) = (p1 - p0, p2 - p0);
                    if !divisible(&a) || !divisible(&b) {
                        continue;
                    }
                    let verts = [IntVector::zero(dim), shrink(&a), shrink(&b)];
                    let area = plane_area(&verts[1], &verts[2]);
                    if area == 0 {
                        continue;
                    }
                    let edges: Vec<(usize, i64)> = (0..3)
                        .map(|t| (t, (&verts[(t + 1) % 3] - &verts[t]).content()))
                        .collect();
                    let (long, n) = *edges.iter().max_by_key(|(t, l)| (*l, std::cmp::Reverse(*t))).unwrap();
                    let ones = edges.iter().filter(|(_, l)| *l == 1).count();
                    if n as u32 > budget.max_triangle || area != n || ones < 2 {
                        continue;
                    }
                    let start = &verts[long];
                    let dir = primitive(&(&verts[(long + 1) % 3] - start))?;
                    let mut f = binomial_factor(&dir, n as u32)?.shift(start);
                    f.add_term(verts[(long + 2) % 3].clone(), &AffineForm::one());
                    let lo = f.min_exponent().cloned().unwrap();
                    out.insert(f.shift(&-&lo));
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// All nontrivial mutations of `f` found by the search, one per edge label,
/// sorted by label. Complete in dimension two, where only edge normals can
/// carry nontrivial factors and every binomial power is tried.
pub fn candidate_mutations(f: &LaurentPolynomial, budget: &MutationSearchBudget) -> Result<Vec<MutationData>> {
    candidate_mutations_with(f, budget, ExecMode::default())
}

pub fn candidate_mutations_with(
    f: &LaurentPolynomial,
    budget: &MutationSearchBudget,
    mode: ExecMode,
) -> Result<Vec<MutationData>> {
    let p = f.newton_polytope()?;
    if !p.contains_origin_strictly() {
        return Err(Error::OriginNotInterior);
    }
    let mut data = Vec::new();
    for w in candidate_directions(&p, budget)? {
        let (lo, _) = p.height_range(&w);
        if lo >= 0 {
            continue;
        }
        let face: Vec<IntVector> = p.lattice_points().iter().filter(|x| w.dot(x) == lo).cloned().collect();
        let budget = if p.dim() == 2 {
            MutationSearchBudget {
                max_power: u32::MAX,
                ..*budget
            }
        } else {
            *budget
        };
        for a in candidate_factors(&face, -lo, &budget, p.dim())? {
            data.push(MutationData::new(w.clone(), a)?);
        }
    }
    let ok = par::map(mode, &data, |md| is_mutable(f, md).is_ok());
    let mut found: BTreeMap<EdgeLabel, MutationData> = BTreeMap::new();
    for (md, good) in data.into_iter().zip(ok) {
        if good {
            found.entry(md.label()).or_insert(md);
        }
    }
    Ok(found.into_values().collect())
}

/// Verdict of a rigidity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    Rigid,
    /// A different member of the coefficient space.
    NotRigid {
        witness: LaurentPolynomial,
        parameters: usize,
    },
    /// The search was budget-limited and left free parameters.
    Inconclusive {
        parameters: usize,
    },
}

impl Certificate {
    pub fn tag(&self) -> &'static str {
        match self {
            Certificate::Rigid => "rigid",
            Certificate::NotRigid { .. } => "not_rigid",
            Certificate::Inconclusive { .. } => "inconclusive",
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Rigid => write!(f, "rigid"),
            Certificate::NotRigid { witness, parameters } => {
                write!(f, "not_rigid parameters={parameters} witness={witness}")
            }
            Certificate::Inconclusive { parameters } => write!(f, "inconclusive parameters={parameters}"),
        }
    }
}

/// Certificate together with the data it was derived from.
#[derive(Clone, Debug)]
pub struct RigidityReport {
    pub certificate: Certificate,
    pub mutations: Vec<MutationData>,
    pub space: CoefficientSpace,
}

/// Decides whether `f` is pinned down by its mutations. Uses `mutations`
/// when given, otherwise the bounded search.
pub fn certify_rigid(
    f: &LaurentPolynomial,
    mutations: Option<&[MutationData]>,
    budget: &MutationSearchBudget,
) -> Result<RigidityReport> {
    if !f.has_constant_coefficients() {
        return Err(Error::Parametric(f.to_string()));
    }
    if !f.is_normalised() || !f.has_zero_constant_term() {
        return Err(Error::Unsupported(
            "rigidity needs a normalised polynomial with zero constant term".into(),
        ));
    }
    let p = f.newton_polytope()?;
    if !p.is_fano() {
        return Err(Error::NotFano);
    }
    let searched = mutations.is_none();
    let mutations = match mutations {
        Some(s) => {
            for md in s {
                is_mutable(f, md)?;
            }
            s.to_vec()
        }
        None => candidate_mutations(f, budget)?,
    };
    let space = coefficient_space(&p, &mutations)?;
    let values = space
        .locate(f)?
        .ok_or_else(|| Error::Inconsistent("polynomial is not in its coefficient space".into()))?;
    let m = space.parameters.len();
    let certificate = if m == 0 {
        Certificate::Rigid
    } else if searched && p.dim() > 2 {
        Certificate::Inconclusive { parameters: m }
    } else {
        let mut shifted = values.clone();
        *shifted.get_mut(&space.parameters[0]).unwrap() += BigRational::one();
        let witness = space.polynomial.as_ref().unwrap().specialize(&shifted)?;
        Certificate::NotRigid { witness, parameters: m }
    };
    Ok(RigidityReport {
        certificate,
        mutations,
        space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon2d::{edge_mutation_set, mmlp_family};

    fn lp(s: &str) -> LaurentPolynomial {
        LaurentPolynomial::parse(s).unwrap()
    }

    fn v(x: &[i64]) -> IntVector {
        IntVector::from_slice(x)
    }

    fn poly(pts: &[&[i64]]) -> LatticePolytope {
        LatticePolytope::convex_hull(&pts.iter().map(|p| v(p)).collect::<Vec<_>>()).unwrap()
    }

    fn square() -> LatticePolytope {
        poly(&[&[-2, 3], &[2, 3], &[2, -1], &[-2, -1]])
    }

    #[test]
    fn spaces() {
        let p2 = poly(&[&[1, 0], &[0, 1], &[-1, -1]]);
        let s = coefficient_space(&p2, &edge_mutation_set(&p2).unwrap()).unwrap();
        assert_eq!(s.polynomial.unwrap(), lp("x+y+1/(xy)"));
        let sq = square();
        let s = coefficient_space(&sq, &edge_mutation_set(&sq).unwrap()).unwrap();
        assert_eq!(s.dimension(), Some(1));
        assert_eq!(s.provenance.len(), 4);
        let fam = mmlp_family(&sq).unwrap().polynomial;
        // Same family: the residual coefficient parametrises both.
        let g = s.polynomial.unwrap();
        for alpha in [0i64, 3, -5] {
            let mut vals = BTreeMap::new();
            vals.insert("a1".to_string(), BigRational::from_integer(alpha.into()));
            let member = fam.specialize(&vals).unwrap();
            let space = coefficient_space(&sq, &edge_mutation_set(&sq).unwrap()).unwrap();
            assert!(space.locate(&member).unwrap().is_some());
        }
        assert_eq!(g.parameters().len(), 1);
        let free = coefficient_space(&sq, &[]).unwrap();
        assert_eq!(free.dimension(), Some(sq.lattice_points().len() - 4 - 1));
    }

    #[test]
    fn p2_candidates() {
        let c = candidate_mutations(&lp("x+y+1/(xy)"), &MutationSearchBudget::default()).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn triangle_candidates() {
        let f = lp("y+(1+x)^2/(x*y)");
        let labels: Vec<String> = candidate_mutations(&f, &MutationSearchBudget::default())
            .unwrap()
            .iter()
            .map(|m| m.label().to_string())
            .collect();
        let mut want = vec![
            "L((0,1),x^2+2*x+1)".to_string(),
            "L((0,1),x+1)".to_string(),
            "L((2,-1),x*y^2+1)".to_string(),
            "L((-2,-1),x*y^-2+1)".to_string(),
        ];
        let mut got = labels.clone();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn monomial_has_no_mutations() {
        // A lone monomial has no Fano Newton polytope; a vertex-only
        // polynomial on a simplex has only trivial slices.
        assert!(candidate_mutations(&lp("x"), &MutationSearchBudget::default()).is_err());
        let c = candidate_mutations(&lp("x+y+z+1/(xyz)"), &MutationSearchBudget::default()).unwrap();
        assert!(c.iter().all(|m| !m.is_trivial()));
    }

    #[test]
    fn certificates() {
        let budget = MutationSearchBudget::default();
        let r = certify_rigid(&lp("x+y+z+1/(xyz)"), None, &budget).unwrap();
        assert_eq!(r.certificate, Certificate::Rigid);
        let r = certify_rigid(&lp("x^2/(yz)+x+y+z+1/x"), None, &budget).unwrap();
        assert_eq!(r.certificate, Certificate::Rigid);
        let id428 = lp("xy^2+2xyz+2xy+xz^2+2xz+x+2/(xz)+2/(xy)+2/(xyz)+1/(x^3y^2z^2)");
        let r = certify_rigid(&id428, None, &budget).unwrap();
        assert_eq!(r.certificate, Certificate::Rigid);
        let fam = mmlp_family(&square()).unwrap().polynomial;
        let mut vals = BTreeMap::new();
        vals.insert("a1".to_string(), BigRational::zero());
        let f = fam.specialize(&vals).unwrap();
        let r = certify_rigid(&f, None, &budget).unwrap();
        assert_eq!(r.certificate.tag(), "not_rigid");
        if let Certificate::NotRigid { witness, .. } = &r.certificate {
            assert_ne!(witness, &f);
            assert_eq!(witness.newton_polytope().unwrap(), f.newton_polytope().unwrap());
        }
    }

    #[test]
    fn supplied_mutations_must_apply() {
        let f = lp("x+y+1/(xy)");
        let md = MutationData::new(v(&[1, 1]), LaurentPolynomial::parse_in_dim("1+x/y", 2).unwrap()).unwrap();
        assert!(certify_rigid(&f, Some(&[md]), &MutationSearchBudget::default()).is_err());
    }

    fn unimodular(n: usize, ops: &[(usize, usize, i64)]) -> crate::lattice::IntMatrix {
        let mut u = crate::lattice::IntMatrix::identity(n);
        for &(a, b, k) in ops {
            let (a, b) = (a % n, b % n);
            if a == b {
                u.swap_rows(a, (a + 1) % n);
            } else {
                u.add_row_multiple(a, b, &num_bigint::BigInt::from(k));
            }
        }
        u
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]

        #[test]
        fn verdict_is_basis_independent(
            which in 0usize..4,
            ops in proptest::collection::vec((0usize..3, 0usize..3, -2i64..=2), 0..4),
        ) {
            let sources = [
                "y+(1+x)^2/(x*y)",
                "x^2/(yz)+x+y+z+1/x",
                "x+y+z+2/(xy)+1/(x^2y^2z)",
                "xy^2+2xyz+2xy+xz^2+2xz+x+2/(xz)+2/(xy)+2/(xyz)+1/(x^3y^2z^2)",
            ];
            let f = lp(sources[which]);
            let u = unimodular(f.dim(), &ops);
            let g = f.monomial_change_of_basis(&u).unwrap();
            let budget = MutationSearchBudget::default();
            let a = certify_rigid(&f, None, &budget).unwrap();
            let b = certify_rigid(&g, None, &budget).unwrap();
            proptest::prop_assert_eq!(a.certificate.tag(), b.certificate.tag());
            proptest::prop_assert_eq!(a.mutations.len(), b.mutations.len());
            proptest::prop_assert_eq!(a.space.dimension(), b.space.dimension());
        }
    }
}
