//! Fano polygons: cone singularities, singularity content, residual points,
//! and the general maximally mutable Laurent polynomial on a polygon.
//!
//! Edges are taken in the counter-clockwise order of the hull, so the cone
//! over edge `i` is spanned by vertices `i` and `i + 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{rational_rref, IntVector};
use crate::laurent::{AffineForm, LaurentPolynomial};
use crate::linear::{add_divisibility, Coefficient, LinearSystem};
use crate::mutation::{binomial_factor, exact_divide, MutationData};
use crate::polytope::LatticePolytope;

/// Cyclic quotient singularity `1/m(1,q)` up to isomorphism, or nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Residue {
    Empty,
    Cyclic { m: i64, q: i64 },
}

impl Residue {
    /// `1/m(1,q)` with `q` replaced by the smaller of `q` and `q⁻¹ mod m`.
    pub fn cyclic(m: i64, q: i64) -> Residue {
        let q = q.rem_euclid(m);
        let inv = (1..m).find(|x| (x * q).rem_euclid(m) == 1 % m).unwrap_or(q);
        Residue::Cyclic { m, q: q.min(inv) }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Residue::Empty)
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Residue::Empty => write!(f, "empty"),
            Residue::Cyclic { m, q } => write!(f, "1/{m}(1,{q})"),
        }
    }
}

/// Local data of the cone over one edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeData {
    pub edge: usize,
    /// Primitive rays in counter-clockwise order.
    pub rays: [IntVector; 2],
    /// Primitive inward normal of the edge.
    pub normal: IntVector,
    /// Primitive direction from the first ray to the second.
    pub direction: IntVector,
    /// Lattice height of the edge.
    pub r: i64,
    /// Lattice length of the edge.
    pub d: i64,
    /// The cone is `1/m(1,q)` with `m = d·r`.
    pub m: i64,
    pub q: i64,
    /// `q + 1 = k·d`.
    pub k: i64,
    /// Number of primitive T-cones.
    pub n: i64,
    /// `d = n·r + s`.
    pub s: i64,
    pub residue: Residue,
}

/// `(n, basket)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SingularityContent {
    pub n: i64,
    /// Nonempty residues, sorted.
    pub basket: Vec<Residue>,
}

impl fmt::Display for SingularityContent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut counts: BTreeMap<Residue, usize> = BTreeMap::new();
        for r in &self.basket {
            *counts.entry(*r).or_default() += 1;
        }
        let parts: Vec<String> = counts
            .iter()
            .map(|(r, c)| if *c > 1 { format!("{r} x{c}") } else { r.to_string() })
            .collect();
        write!(f, "n={} basket=[{}]", self.n, parts.join(", "))
    }
}

/// Residual points together with the crepant subdivision that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualPointSet {
    pub points: Vec<IntVector>,
    /// Edge owning each point.
    pub owners: Vec<usize>,
    pub t_cones: Vec<[IntVector; 2]>,
    pub r_cones: Vec<[IntVector; 2]>,
}

impl ResidualPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn cross(a: &IntVector, b: &IntVector) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Closed cone test for rays in counter-clockwise order.
fn in_cone(p: &IntVector, rays: &[IntVector; 2]) -> bool {
    cross(&rays[0], p) >= 0 && cross(p, &rays[1]) >= 0
}

/// Type `(m, q)` of the cone spanned by two primitive rays.
fn cone_type(a: &IntVector, b: &IntVector) -> (i64, i64) {
    let m = cross(a, b).abs();
    let q = (0..m.max(1))
        .find(|q| (0..2).all(|i| (q * a[i] + b[i]).rem_euclid(m.max(1)) == 0))
        .unwrap_or(0);
    (m, q)
}

fn require_fano_polygon(p: &LatticePolytope) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.dim(),
        });
    }
    if !p.is_fano() {
        return Err(Error::NotFano);
    }
    Ok(())
}

/// Cone data of the cone over edge `edge`.
pub fn cone_data(p: &LatticePolytope, edge: usize) -> Result<ConeData> {
    require_fano_polygon(p)?;
    let nv = p.vertices().len();
    if edge >= nv {
        return Err(Error::NotFound(format!("edge {edge}")));
    }
    let facet = &p.facets()[edge];
    let a = p.vertices()[edge].clone();
    let b = p.vertices()[(edge + 1) % nv].clone();
    let diff = &b - &a;
    let d = diff.content();
    let direction = IntVector::from_slice(&[diff[0] / d, diff[1] / d]);
    let r = facet.height();
    let (m, q) = cone_type(&a, &b);
    let k = (q + 1) / d;
    let (n, s) = d.div_mod_floor(&r);
    let residue = if s == 0 {
        Residue::Empty
    } else {
        let start = &a + &direction.scale(n * r);
        let (rm, rq) = cone_type(&start, &b);
        Residue::cyclic(rm, rq)
    };
    Ok(ConeData {
        edge,
        rays: [a, b],
        normal: facet.normal.clone(),
        direction,
        r,
        d,
        m,
        q,
        k,
        n,
        s,
        residue,
    })
}

/// Cone data for every edge, in order.
pub fn all_cone_data(p: &LatticePolytope) -> Result<Vec<ConeData>> {
    (0..p.facets().len()).map(|i| cone_data(p, i)).collect()
}

/// Singularity content of a Fano polygon.
pub fn singularity_content(p: &LatticePolytope) -> Result<SingularityContent> {
    let cones = all_cone_data(p)?;
    let n = cones.iter().map(|c| c.n).sum();
    let mut basket: Vec<Residue> = cones.iter().map(|c| c.residue).filter(|r| !r.is_empty()).collect();
    basket.sort();
    Ok(SingularityContent { n, basket })
}

/// Residual points of the subdivision that packs primitive T-cones from
/// the counter-clockwise-first end of each edge.
pub fn residual_points(p: &LatticePolytope) -> Result<ResidualPointSet> {
    let cones = all_cone_data(p)?;
    let mut out = ResidualPointSet {
        points: Vec::new(),
        owners: Vec::new(),
        t_cones: Vec::new(),
        r_cones: Vec::new(),
    };
    for c in &cones {
        let step = c.direction.scale(c.r);
        let mut start = c.rays[0].clone();
        for _ in 0..c.n {
            let next = &start + &step;
            out.t_cones.push([start.clone(), next.clone()]);
            start = next;
        }
        if c.s > 0 {
            let rays = [start, c.rays[1].clone()];
            for x in p.lattice_points() {
                if !x.is_zero() && *x != rays[0] && *x != rays[1] && in_cone(x, &rays) {
                    out.points.push(x.clone());
                    out.owners.push(c.edge);
                }
            }
            out.r_cones.push(rays);
        }
    }
    Ok(out)
}

/// The general maximally mutable family on a polygon.
#[derive(Clone, Debug)]
pub struct MmlpFamily {
    pub polynomial: LaurentPolynomial,
    /// Parameter names, in the order of the residual points.
    pub parameters: Vec<String>,
    pub residual: ResidualPointSet,
}

impl MmlpFamily {
    pub fn is_rigid(&self) -> bool {
        self.parameters.is_empty()
    }
}

fn param_name(k: usize) -> String {
    format!("a{}", k + 1)
}

/// Edge factors `(1 + x^{v_e})^{n_e}`, one per edge.
fn edge_factors(cones: &[ConeData]) -> Result<Vec<LaurentPolynomial>> {
    cones
        .iter()
        .map(|c| binomial_factor(&c.direction, c.n as u32))
        .collect()
}

/// Computes the general normalised polynomial with Newton polygon `p`, zero
/// constant term, mutable along `(w_e, (1+x^{v_e})^{n_e})` for every edge.
///
/// Parameters are normalised so that parameter `i` is the coefficient of the
/// line quotient matched, in positional order, with residual point `i`
/// among the residual and out-of-cone points on its line.
pub fn mmlp_family(p: &LatticePolytope) -> Result<MmlpFamily> {
    let cones = all_cone_data(p)?;
    let residual = residual_points(p)?;
    let factors = edge_factors(&cones)?;
    let vertices: BTreeSet<&IntVector> = p.vertices().iter().collect();
    let pts = p.lattice_points();
    let mut unknown: BTreeMap<IntVector, usize> = BTreeMap::new();
    for x in pts {
        if !x.is_zero() && !vertices.contains(x) {
            let id = unknown.len();
            unknown.insert(x.clone(), id);
        }
    }
    let mut sys = LinearSystem::new(unknown.len());
    let coefficient = |x: &IntVector| -> Coefficient {
        match unknown.get(x) {
            Some(&j) => Coefficient::Unknown(j),
            None if x.is_zero() => Coefficient::Known(BigRational::zero()),
            None => Coefficient::Known(BigRational::one()),
        }
    };
    for (c, a) in cones.iter().zip(&factors) {
        if c.n == 0 {
            continue;
        }
        for j in 1..=c.r {
            let slice: BTreeMap<IntVector, Coefficient> = pts
                .iter()
                .filter(|x| c.normal.dot(x) == -j)
                .map(|x| (x.clone(), coefficient(x)))
                .collect();
            add_divisibility(&mut sys, &slice, &a.pow(j as u32)?)?;
        }
    }
    let residual_ids: Vec<usize> = residual.points.iter().map(|x| unknown[x]).collect();
    let residual_set: BTreeSet<usize> = residual_ids.iter().copied().collect();
    let mut priority: Vec<usize> = (unknown.len()..sys.vars()).collect();
    priority.extend((0..unknown.len()).filter(|j| !residual_set.contains(j)));
    priority.extend(&residual_ids);
    let sol = sys.solve(&priority, param_name)?;
    let mut f = LaurentPolynomial::zero(2);
    for x in pts {
        let c = match unknown.get(x) {
            Some(&j) => sol.values[j].clone(),
            None if x.is_zero() => continue,
            None => AffineForm::one(),
        };
        f.add_term(x.clone(), &c);
    }
    let parameters: Vec<String> = (0..sol.free.len()).map(param_name).collect();
    if sol.free != residual_ids {
        return Ok(MmlpFamily {
            polynomial: f,
            parameters,
            residual,
        });
    }
    let f = quotient_normalisation(&f, &cones, &factors, &residual, p).unwrap_or(f);
    Ok(MmlpFamily {
        polynomial: f,
        parameters,
        residual,
    })
}

/// Reparametrises by line-quotient coefficients; `None` when the
/// identification is not invertible.
fn quotient_normalisation(
    f: &LaurentPolynomial,
    cones: &[ConeData],
    factors: &[LaurentPolynomial],
    residual: &ResidualPointSet,
    p: &LatticePolytope,
) -> Option<LaurentPolynomial> {
    let m = residual.len();
    if m == 0 {
        return Some(f.clone());
    }
    let residual_set: BTreeSet<&IntVector> = residual.points.iter().collect();
    let mut alphas = Vec::with_capacity(m);
    for (x, &e) in residual.points.iter().zip(&residual.owners) {
        let c = &cones[e];
        let h = c.normal.dot(x);
        let divisor = factors[e].pow(h.unsigned_abs() as u32).ok()?;
        let quotient = exact_divide(&f.slice(&c.normal, h), &divisor)?;
        let mut line: Vec<&IntVector> = p.lattice_points().iter().filter(|y| c.normal.dot(y) == h).collect();
        line.sort_by_key(|y| c.direction.dot(y));
        let first = line.first()?;
        let special: Vec<&IntVector> = line
            .iter()
            .copied()
            .filter(|y| residual_set.contains(y) || !in_cone(y, &c.rays))
            .collect();
        let rank = special.iter().position(|y| *y == x)?;
        let pos = *first + &c.direction.scale(rank as i64);
        alphas.push(quotient.coefficient(&pos));
    }
    let names: Vec<String> = (0..m).map(param_name).collect();
    // alpha = M a + b; invert M.
    let mut rows: Vec<Vec<BigRational>> = alphas
        .iter()
        .enumerate()
        .map(|(l, form)| {
            let mut row: Vec<BigRational> = names
                .iter()
                .map(|n| form.linear_part().get(n).cloned().unwrap_or_else(BigRational::zero))
                .collect();
            row.extend((0..m).map(|k| {
                if k == l {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    let pivots = rational_rref(&mut rows);
    if pivots.len() != m || pivots.iter().enumerate().any(|(i, &c)| c != i) {
        return None;
    }
    let mut map = BTreeMap::new();
    for (k, row) in rows.iter().enumerate() {
        let mut form = AffineForm::zero();
        for l in 0..m {
            let c = &row[m + l];
            if c.is_zero() {
                continue;
            }
            let shifted = &AffineForm::parameter(&names[l]) - &AffineForm::constant(alphas[l].constant_part().clone());
            form = &form + &shifted.scale(c);
        }
        map.insert(names[k].clone(), form);
    }
    Some(f.substitute(&map))
}

/// True when the maximally mutable family on `p` has no parameters.
pub fn is_rigid_2d(p: &LatticePolytope) -> Result<bool> {
    Ok(mmlp_family(p)?.is_rigid())
}

/// The unique rigid maximally mutable polynomial on `p`.
pub fn rigid_mmlp_2d(p: &LatticePolytope) -> Result<LaurentPolynomial> {
    let fam = mmlp_family(p)?;
    if fam.is_rigid() {
        Ok(fam.polynomial)
    } else {
        Err(Error::NotRigid {
            parameters: fam.parameters.len(),
        })
    }
}

/// Edge mutations `(w_e, (1+x^{v_e})^{n_e})` for edges with `n_e > 0`.
pub fn edge_mutation_set(p: &LatticePolytope) -> Result<Vec<MutationData>> {
    let cones = all_cone_data(p)?;
    let factors = edge_factors(&cones)?;
    cones
        .iter()
        .zip(factors)
        .filter(|(c, _)| c.n > 0)
        .map(|(c, a)| MutationData::new(c.normal.clone(), a))
        .collect()
}

/// The sixteen reflexive polygons up to `GL(2,ℤ)`, as subpolygons of the
/// three maximal ones, sorted by number of lattice points then normal form.
pub fn reflexive_polygons() -> Vec<LatticePolytope> {
    let maximal: [&[[i64; 2]]; 3] = [
        &[[-1, -1], [2, -1], [-1, 2]],
        &[[-1, -1], [1, -1], [1, 1], [-1, 1]],
        &[[-1, -1], [3, -1], [-1, 1]],
    ];
    let mut found: BTreeMap<(usize, Vec<u8>), LatticePolytope> = BTreeMap::new();
    for verts in maximal {
        let outer = LatticePolytope::convex_hull(&verts.iter().map(|v| IntVector::from_slice(v)).collect::<Vec<_>>())
            .expect("maximal polygon");
        let boundary: Vec<IntVector> = outer
            .lattice_points()
            .iter()
            .filter(|x| !x.is_zero())
            .cloned()
            .collect();
        for mask in 1u32..(1 << boundary.len()) {
            if mask.count_ones() < 3 {
                continue;
            }
            let subset: Vec<IntVector> = boundary
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, x)| x.clone())
                .collect();
            let Ok(q) = LatticePolytope::convex_hull(&subset) else {
                continue;
            };
            if !q.contains_origin_strictly() || !q.is_reflexive() {
                continue;
            }
            let key = q.normal_form().expect("polygon normal form");
            found
                .entry((q.lattice_points().len(), key.as_bytes().to_vec()))
                .or_insert(q);
        }
    }
    found.into_values().collect()
}
