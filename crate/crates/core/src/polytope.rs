//! Convex lattice polytopes of dimension at most three.
//!
//! A [`LatticePolytope`] is always full-dimensional in its ambient lattice.
//! Lower-dimensional point sets (mutation factors, facets, slices) are
//! handled through [`EmbeddedPolytope`], which flattens the affine span
//! onto ℤ^d with a [`LatticeFrame`].
//!
//! Vertex order is fixed: counter-clockwise from the lex-smallest vertex in
//! dimension two, lexicographic otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{hermite_normal_form, primitive, IntMatrix, IntVector, LatticeFrame};

/// A facet with inward primitive normal: `normal · x ≥ offset` on the
/// polytope, with equality exactly on the facet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    /// Vertex indices; cyclic and counter-clockwise seen from outside in
    /// dimension three.
    pub vertices: Vec<usize>,
    pub normal: IntVector,
    pub offset: i64,
}

impl Facet {
    /// Lattice distance of the supporting hyperplane from the origin.
    pub fn height(&self) -> i64 {
        -self.offset
    }
}

/// A one-dimensional face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Incident facets (one in dimension two, two in dimension three).
    pub facets: Vec<usize>,
}

/// Full-dimensional convex lattice polytope.
#[derive(Clone)]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<IntVector>,
    facets: Vec<Facet>,
    edges: Vec<Edge>,
    points: OnceLock<Vec<IntVector>>,
}

impl PartialEq for LatticePolytope {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl Eq for LatticePolytope {}

impl fmt::Debug for LatticePolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv{:?}", self.vertices)
    }
}

/// Polytope with rational vertices, produced by dualization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPolytope {
    pub vertices: Vec<Vec<BigRational>>,
}

/// Canonical GL(n,ℤ)-invariant byte string of a polytope.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalFormKey(Vec<u8>);

impl NormalFormKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ascii key")
    }

    /// First 16 hex digits of the SHA-256 hash of the key.
    pub fn digest(&self) -> String {
        let h = Sha256::digest(&self.0);
        h.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for NormalFormKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for NormalFormKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Normal form together with every transform realizing it.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub key: NormalFormKey,
    /// Unimodular `u` such that `u · v` lists the canonical vertex
    /// coordinates. Distinct entries differ by automorphisms.
    pub transforms: Vec<IntMatrix>,
}

fn cross(a: &IntVector, b: &IntVector) -> IntVector {
    IntVector::from_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

fn cross2(o: &IntVector, a: &IntVector, b: &IntVector) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull of planar points, starting at the lex-smallest,
/// with collinear points dropped. Returns indices into `points`.
pub fn hull_2d(points: &[IntVector]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].cmp(&points[b]));
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && cross2(
                &points[lower[lower.len() - 2]],
                &points[lower[lower.len() - 1]],
                &points[i],
            ) <= 0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross2(
                &points[upper[upper.len() - 2]],
                &points[upper[upper.len() - 1]],
                &points[i],
            ) <= 0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && points[lower[0]] == points[lower[1]] {
        lower.pop();
    }
    lower
}

/// Supporting planes `(inward primitive normal, offset)` of a
/// full-dimensional 3D point set, by incremental hull.
fn hull_3d_planes(points: &[IntVector]) -> Vec<(IntVector, i64)> {
    let pts = points;
    let a = 0;
    let b = (1..pts.len()).find(|&i| pts[i] != pts[a]).expect("full dim");
    let c = (1..pts.len())
        .find(|&i| !cross(&(&pts[b] - &pts[a]), &(&pts[i] - &pts[a])).is_zero())
        .expect("full dim");
    let n_abc = cross(&(&pts[b] - &pts[a]), &(&pts[c] - &pts[a]));
    let d = (1..pts.len())
        .find(|&i| n_abc.dot(&(&pts[i] - &pts[a])) != 0)
        .expect("full dim");

    let outward = |t: [usize; 3]| cross(&(&pts[t[1]] - &pts[t[0]]), &(&pts[t[2]] - &pts[t[0]]));
    let mut tris: Vec<Option<[usize; 3]>> = Vec::new();
    let simplex = [a, b, c, d];
    for skip in 0..4 {
        let f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| simplex[i]).collect();
        let mut t = [f[0], f[1], f[2]];
        let other = simplex[skip];
        if outward(t).dot(&(&pts[other] - &pts[t[0]])) > 0 {
            t.swap(1, 2);
        }
        tris.push(Some(t));
    }
    let mut normals: Vec<IntVector> = tris.iter().map(|t| outward(t.unwrap())).collect();

    for p in 0..pts.len() {
        if simplex.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = (0..tris.len())
            .filter(|&i| tris[i].is_some_and(|t| normals[i].dot(&(&pts[p] - &pts[t[0]])) > 0))
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, t) in tris.iter().enumerate() {
            if let Some(t) = t {
                for k in 0..3 {
                    owner.insert((t[k], t[(k + 1) % 3]), i);
                }
            }
        }
        let vis: BTreeSet<usize> = visible.iter().copied().collect();
        let mut horizon = Vec::new();
        for &i in &visible {
            let t = tris[i].unwrap();
            for k in 0..3 {
                let (x, y) = (t[k], t[(k + 1) % 3]);
                if !vis.contains(&owner[&(y, x)]) {
                    horizon.push((x, y));
                }
            }
        }
        for &i in &visible {
            tris[i] = None;
        }
        for (x, y) in horizon {
            let t = [x, y, p];
            normals.push(outward(t));
            tris.push(Some(t));
        }
    }

    let mut planes: BTreeSet<(IntVector, i64)> = BTreeSet::new();
    for (i, t) in tris.iter().enumerate() {
        if let Some(t) = t {
            let n = -&primitive(&normals[i]).expect("nondegenerate triangle");
            let off = n.dot(&pts[t[0]]);
            planes.insert((n, off));
        }
    }
    planes.into_iter().collect()
}

impl LatticePolytope {
    /// Convex hull of full-dimensional points.
    pub fn convex_hull(points: &[IntVector]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Unsupported("convex hull of no points".into()))?;
        let n = first.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
        if n > 3 {
            return Err(Error::Unsupported(format!("dimension {n}")));
        }
        let mut pts: Vec<IntVector> = points.to_vec();
        pts.sort();
        pts.dedup();
        if n == 0 {
            return Ok(Self::assemble(0, pts, Vec::new()));
        }
        let frame = LatticeFrame::new(&pts)?;
        if frame.dim() < n {
            return Err(Error::Degenerate {
                ambient_dim: n,
                affine_dim: frame.dim(),
                span: frame.directions().iter().map(|d| d.to_vec()).collect(),
            });
        }
        match n {
            1 => {
                let lo = pts[0].clone();
                let hi = pts[pts.len() - 1].clone();
                let facets = vec![
                    Facet {
                        vertices: vec![0],
                        normal: IntVector::from_slice(&[1]),
                        offset: lo[0],
                    },
                    Facet {
                        vertices: vec![1],
                        normal: IntVector::from_slice(&[-1]),
                        offset: -hi[0],
                    },
                ];
                Ok(Self::assemble(1, vec![lo, hi], facets))
            }
            2 => {
                let order = hull_2d(&pts);
                let verts: Vec<IntVector> = order.iter().map(|&i| pts[i].clone()).collect();
                let k = verts.len();
                let facets = (0..k)
                    .map(|i| {
                        let e = &verts[(i + 1) % k] - &verts[i];
                        let normal = primitive(&IntVector::from_slice(&[-e[1], e[0]])).unwrap();
                        let offset = normal.dot(&verts[i]);
                        Facet {
                            vertices: vec![i, (i + 1) % k],
                            normal,
                            offset,
                        }
                    })
                    .collect();
                Ok(Self::assemble(2, verts, facets))
            }
            _ => {
                let planes = hull_3d_planes(&pts);
                let mut cycles: Vec<(Vec<IntVector>, IntVector, i64)> = Vec::new();
                for (normal, offset) in planes {
                    let on: Vec<IntVector> = pts.iter().filter(|p| normal.dot(p) == offset).cloned().collect();
                    let fr = LatticeFrame::new(&on)?;
                    let local: Vec<IntVector> = on.iter().map(|p| fr.local(p)).collect::<Result<_>>()?;
                    let mut cyc: Vec<IntVector> = hull_2d(&local).iter().map(|&i| on[i].clone()).collect();
                    let turn = cross(&(&cyc[1] - &cyc[0]), &(&cyc[2] - &cyc[1]));
                    if turn.dot(&normal) > 0 {
                        cyc.reverse();
                    }
                    cycles.push((cyc, normal, offset));
                }
                let mut verts: Vec<IntVector> = cycles.iter().flat_map(|c| c.0.iter().cloned()).collect();
                verts.sort();
                verts.dedup();
                let index: BTreeMap<&IntVector, usize> = verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
                let facets = cycles
                    .iter()
                    .map(|(cyc, normal, offset)| {
                        let ids: Vec<usize> = cyc.iter().map(|v| index[v]).collect();
                        // Rotate so the smallest index leads, for determinism.
                        let m = (0..ids.len()).min_by_key(|&i| ids[i]).unwrap();
                        let mut ids2 = ids[m..].to_vec();
                        ids2.extend_from_slice(&ids[..m]);
                        Facet {
                            vertices: ids2,
                            normal: normal.clone(),
                            offset: *offset,
                        }
                    })
                    .collect();
                Ok(Self::assemble(3, verts, facets))
            }
        }
    }

    fn assemble(dim: usize, vertices: Vec<IntVector>, facets: Vec<Facet>) -> Self {
        let edges = match dim {
            2 => facets
                .iter()
                .enumerate()
                .map(|(i, f)| Edge {
                    vertices: [f.vertices[0], f.vertices[1]],
                    facets: vec![i],
                })
                .collect(),
            3 => {
                let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
                for (fi, f) in facets.iter().enumerate() {
                    let k = f.vertices.len();
                    for i in 0..k {
                        let (a, b) = (f.vertices[i], f.vertices[(i + 1) % k]);
                        map.entry((a.min(b), a.max(b))).or_default().push(fi);
                    }
                }
                map.into_iter()
                    .map(|((a, b), fs)| Edge {
                        vertices: [a, b],
                        facets: fs,
                    })
                    .collect()
            }
            1 => vec![Edge {
                vertices: [0, 1],
                facets: vec![0, 1],
            }],
            _ => Vec::new(),
        };
        LatticePolytope {
            dim,
            vertices,
            facets,
            edges,
            points: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[IntVector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, p: &IntVector) -> bool {
        self.facets.iter().all(|f| f.normal.dot(p) >= f.offset)
    }

    pub fn strictly_contains(&self, p: &IntVector) -> bool {
        self.facets.iter().all(|f| f.normal.dot(p) > f.offset)
    }

    pub fn contains_origin_strictly(&self) -> bool {
        self.dim > 0 && self.facets.iter().all(|f| f.offset < 0)
    }

    /// All lattice points in lex order, by bounding-box scan.
    pub fn lattice_points(&self) -> &[IntVector] {
        self.points.get_or_init(|| {
            if self.dim == 0 {
                return self.vertices.clone();
            }
            let lo: Vec<i64> = (0..self.dim)
                .map(|i| self.vertices.iter().map(|v| v[i]).min().unwrap())
                .collect();
            let hi: Vec<i64> = (0..self.dim)
                .map(|i| self.vertices.iter().map(|v| v[i]).max().unwrap())
                .collect();
            let mut out = Vec::new();
            let mut cur = lo.clone();
            loop {
                let p = IntVector::from_slice(&cur);
                if self.contains(&p) {
                    out.push(p);
                }
                let mut i = self.dim;
                loop {
                    if i == 0 {
                        return out;
                    }
                    i -= 1;
                    if cur[i] < hi[i] {
                        cur[i] += 1;
                        for (j, c) in cur.iter_mut().enumerate().skip(i + 1) {
                            *c = lo[j];
                        }
                        break;
                    }
                }
            }
        })
    }

    pub fn interior_points(&self) -> Vec<IntVector> {
        self.lattice_points()
            .iter()
            .filter(|p| self.strictly_contains(p))
            .cloned()
            .collect()
    }

    /// Full-dimensional, origin strictly interior, primitive vertices.
    pub fn is_fano(&self) -> bool {
        self.dim > 0 && self.contains_origin_strictly() && self.vertices.iter().all(|v| v.content() == 1)
    }

    pub fn is_reflexive(&self) -> bool {
        self.contains_origin_strictly() && self.facets.iter().all(|f| f.offset == -1)
    }

    /// Polar dual `{u : u(v) ≥ −1 for all v ∈ P}`.
    pub fn dual(&self) -> Result<RationalPolytope> {
        if !self.contains_origin_strictly() {
            return Err(Error::OriginNotInterior);
        }
        let vertices = self
            .facets
            .iter()
            .map(|f| {
                let h = BigInt::from(f.height());
                f.normal
                    .iter()
                    .map(|&x| BigRational::new(BigInt::from(x), h.clone()))
                    .collect()
            })
            .collect();
        Ok(RationalPolytope { vertices })
    }

    /// `dim! · volume`, an integer for lattice polytopes.
    pub fn normalized_volume(&self) -> BigInt {
        match self.dim {
            0 => BigInt::one(),
            1 => BigInt::from(self.vertices[1][0] - self.vertices[0][0]),
            2 => {
                let k = self.vertices.len();
                let s: i64 = (0..k)
                    .map(|i| {
                        let (a, b) = (&self.vertices[i], &self.vertices[(i + 1) % k]);
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum();
                BigInt::from(s.abs())
            }
            _ => {
                let apex = &self.vertices[0];
                let mut total = BigInt::zero();
                for f in &self.facets {
                    if f.vertices.contains(&0) {
                        continue;
                    }
                    let f0 = &self.vertices[f.vertices[0]];
                    let dist = (f.normal.dot(apex) - f.offset) as i128;
                    // Twice the area of the facet in its own lattice, times
                    // the lattice distance of the apex, sums unit simplices.
                    let mut twice_area: i128 = 0;
                    for w in f.vertices[1..].windows(2) {
                        let a = &self.vertices[w[0]] - f0;
                        let b = &self.vertices[w[1]] - f0;
                        let c = cross(&a, &b);
                        let g = c.content() as i128;
                        twice_area += g;
                    }
                    total += BigInt::from(twice_area * dist);
                }
                total
            }
        }
    }

    pub fn transform(&self, u: &IntMatrix) -> Result<LatticePolytope> {
        if !u.is_unimodular() {
            return Err(Error::NotUnimodular);
        }
        let pts: Vec<IntVector> = self.vertices.iter().map(|v| u.mul_vec(v)).collect::<Result<_>>()?;
        LatticePolytope::convex_hull(&pts)
    }

    /// Minimum and maximum of `w` over the polytope.
    pub fn height_range(&self, w: &IntVector) -> (i64, i64) {
        let hs = self.vertices.iter().map(|v| w.dot(v));
        let lo = hs.clone().min().unwrap_or(0);
        let hi = hs.max().unwrap_or(0);
        (lo, hi)
    }

    /// Text form: `dim D` then one vertex per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for v in &self.vertices {
            let r: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            s.push_str(&r.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the text form; the listed points are hulled.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match dim {
                None => {
                    let rest = line
                        .strip_prefix("dim")
                        .ok_or_else(|| Error::parse(lineno, "expected `dim D`"))?;
                    dim = Some(rest.trim().parse().map_err(|_| Error::parse(lineno, "bad dimension"))?);
                }
                Some(d) => {
                    let v = IntVector::parse(line).map_err(|_| Error::parse(lineno, "bad vertex"))?;
                    if v.dim() != d {
                        return Err(Error::parse(lineno, format!("expected {d} coordinates")));
                    }
                    pts.push(v);
                }
            }
        }
        if dim.is_none() || pts.is_empty() {
            return Err(Error::parse(0, "no vertices"));
        }
        Self::convex_hull(&pts)
    }

    /// Parses `1,0;0,1;-1,-1` style vertex lists.
    pub fn from_inline(text: &str) -> Result<Self> {
        let pts: Vec<IntVector> = text
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(IntVector::parse)
            .collect::<Result<_>>()?;
        if pts.is_empty() {
            return Err(Error::parse(0, "no vertices"));
        }
        Self::convex_hull(&pts)
    }

    /// Orderings of the vertices determined by flags; the set of orderings
    /// is carried to itself by every lattice automorphism.
    fn flag_orders(&self) -> Vec<Vec<usize>> {
        let k = self.vertices.len();
        match self.dim {
            0 => vec![vec![0]],
            1 => vec![vec![0, 1], vec![1, 0]],
            2 => {
                let mut out = Vec::with_capacity(2 * k);
                for s in 0..k {
                    out.push((0..k).map(|i| (s + i) % k).collect());
                    out.push((0..k).map(|i| (s + k - i) % k).collect());
                }
                out
            }
            _ => {
                let rot = self.rotation_system();
                let mut out = Vec::new();
                for v in 0..k {
                    for &x in rot[v].keys() {
                        for forward in [true, false] {
                            out.push(self.bfs_order(&rot, v, x, forward));
                        }
                    }
                }
                out
            }
        }
    }

    /// For each vertex, the successor map of its neighbours in rotation
    /// order (counter-clockwise seen from outside).
    fn rotation_system(&self) -> Vec<BTreeMap<usize, usize>> {
        let mut rot: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.vertices.len()];
        for f in &self.facets {
            let k = f.vertices.len();
            for i in 0..k {
                let prev = f.vertices[(i + k - 1) % k];
                let v = f.vertices[i];
                let next = f.vertices[(i + 1) % k];
                rot[v].insert(next, prev);
            }
        }
        rot
    }

    fn bfs_order(&self, rot: &[BTreeMap<usize, usize>], start: usize, first: usize, forward: bool) -> Vec<usize> {
        let inverse: Vec<BTreeMap<usize, usize>> =
            rot.iter().map(|m| m.iter().map(|(&a, &b)| (b, a)).collect()).collect();
        let step = |v: usize, x: usize| {
            if forward {
                rot[v][&x]
            } else {
                inverse[v][&x]
            }
        };
        let mut seen = vec![false; self.vertices.len()];
        let mut order = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([(start, first)]);
        while let Some((v, s)) = queue.pop_front() {
            let mut x = s;
            loop {
                if !seen[x] {
                    seen[x] = true;
                    order.push(x);
                    queue.push_back((x, v));
                }
                x = step(v, x);
                if x == s {
                    break;
                }
            }
        }
        order
    }

    /// GL(n,ℤ) normal form with its realizing transforms.
    ///
    /// For every flag ordering of the vertices, the Hermite normal form of
    /// the matrix with the ordered vertices as columns is computed; the
    /// lexicographically smallest one is the key.
    pub fn normal_form_full(&self) -> Result<NormalForm> {
        if self.dim > 3 {
            return Err(Error::Unsupported(format!("normal form in dimension {}", self.dim)));
        }
        let mut best: Option<(Vec<BigInt>, Vec<IntMatrix>)> = None;
        for order in self.flag_orders() {
            let cols: Vec<IntVector> = order.iter().map(|&i| self.vertices[i].clone()).collect();
            let m = IntMatrix::from_vectors(&cols)?.transpose();
            let (h, u) = hermite_normal_form(&m);
            let flat: Vec<BigInt> = (0..h.rows()).flat_map(|i| h.row(i).to_vec()).collect();
            match &mut best {
                Some((b, us)) if *b == flat => {
                    if !us.contains(&u) {
                        us.push(u);
                    }
                }
                Some((b, _)) if *b < flat => {}
                _ => best = Some((flat, vec![u])),
            }
        }
        let (flat, mut transforms) = best.expect("nonempty polytope");
        transforms.sort_by_key(|u| u.to_string());
        let body: Vec<String> = flat.iter().map(|x| x.to_string()).collect();
        let key = format!("d{};v{};{}", self.dim, self.vertices.len(), body.join(","));
        Ok(NormalForm {
            key: NormalFormKey(key.into_bytes()),
            transforms,
        })
    }

    pub fn normal_form(&self) -> Result<NormalFormKey> {
        Ok(self.normal_form_full()?.key)
    }

    /// Some unimodular `u` with `u · self = other`, if one exists.
    pub fn equivalence_to(&self, other: &LatticePolytope) -> Result<Option<IntMatrix>> {
        let a = self.normal_form_full()?;
        let b = other.normal_form_full()?;
        if a.key != b.key {
            return Ok(None);
        }
        let binv = b.transforms[0].inverse_unimodular()?;
        Ok(Some(binv.mul(&a.transforms[0])?))
    }
}

/// Whether two polytopes are related by a GL(n,ℤ) transform.
pub fn gl_equivalent(p: &LatticePolytope, q: &LatticePolytope) -> Result<bool> {
    Ok(p.dim == q.dim && p.vertices.len() == q.vertices.len() && p.normal_form()? == q.normal_form()?)
}

impl fmt::Display for LatticePolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.vertices.iter().map(|v| v.to_csv()).collect();
        write!(f, "{}", v.join(";"))
    }
}

impl RationalPolytope {
    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    fn common_denominator(&self) -> BigInt {
        self.vertices
            .iter()
            .flatten()
            .fold(BigInt::one(), |l, x| l.lcm(x.denom()))
    }

    /// The same polytope as a lattice polytope, when all vertices are integral.
    pub fn to_lattice(&self) -> Option<LatticePolytope> {
        if !self.common_denominator().is_one() {
            return None;
        }
        let pts: Vec<IntVector> = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| i64::try_from(x.to_integer()).ok())
                    .collect::<Option<Vec<_>>>()
                    .map(IntVector::new)
            })
            .collect::<Option<_>>()?;
        LatticePolytope::convex_hull(&pts).ok()
    }

    /// `dim! · volume`, computed on the dilate by the common denominator.
    pub fn normalized_volume(&self) -> Result<BigRational> {
        let l = self.common_denominator();
        let pts: Vec<IntVector> = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| i64::try_from((x * &l).to_integer()).ok())
                    .collect::<Option<Vec<_>>>()
                    .map(IntVector::new)
                    .ok_or_else(|| Error::Unsupported("coordinate overflow".into()))
            })
            .collect::<Result<_>>()?;
        let p = LatticePolytope::convex_hull(&pts)?;
        let scale = num_traits::pow(l, self.dim());
        Ok(BigRational::new(p.normalized_volume(), scale))
    }
}

/// Polytope of any dimension d inside ℤⁿ, stored in local coordinates.
#[derive(Clone, Debug)]
pub struct EmbeddedPolytope {
    frame: LatticeFrame,
    local: LatticePolytope,
}

impl EmbeddedPolytope {
    pub fn new(points: &[IntVector]) -> Result<Self> {
        let frame = LatticeFrame::new(points)?;
        let local: Vec<IntVector> = points.iter().map(|p| frame.local(p)).collect::<Result<_>>()?;
        let local = LatticePolytope::convex_hull(&local)?;
        Ok(EmbeddedPolytope { frame, local })
    }

    pub fn dim(&self) -> usize {
        self.local.dim()
    }

    pub fn frame(&self) -> &LatticeFrame {
        &self.frame
    }

    pub fn local(&self) -> &LatticePolytope {
        &self.local
    }

    pub fn vertices(&self) -> Vec<IntVector> {
        self.local
            .vertices()
            .iter()
            .map(|y| self.frame.global(y).expect("frame point"))
            .collect()
    }

    pub fn lattice_points(&self) -> Vec<IntVector> {
        let mut pts: Vec<IntVector> = self
            .local
            .lattice_points()
            .iter()
            .map(|y| self.frame.global(y).expect("frame point"))
            .collect();
        pts.sort();
        pts
    }

    pub fn contains(&self, p: &IntVector) -> bool {
        self.frame.contains(p) && self.frame.local(p).map(|y| self.local.contains(&y)).unwrap_or(false)
    }
}

/// Convex hull of the pairwise sums of two point sets.
pub fn minkowski_sum(a: &[IntVector], b: &[IntVector]) -> Vec<IntVector> {
    let mut out: Vec<IntVector> = a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[i64]) -> IntVector {
        IntVector::from_slice(x)
    }

    fn poly(pts: &[&[i64]]) -> LatticePolytope {
        LatticePolytope::convex_hull(&pts.iter().map(|p| v(p)).collect::<Vec<_>>()).unwrap()
    }

    fn p2() -> LatticePolytope {
        poly(&[&[1, 0], &[0, 1], &[-1, -1]])
    }

    fn quadrilateral_left() -> LatticePolytope {
        poly(&[&[-2, -3], &[-2, 1], &[-1, 2], &[2, -3], &[0, 0], &[0, -3], &[-2, 0]])
    }

    fn example_p() -> LatticePolytope {
        poly(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, 0], &[1, 2, 1], &[-1, -2, -1]])
    }

    fn example_q() -> LatticePolytope {
        poly(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, 0], &[1, 2, 3], &[-1, -2, -3]])
    }

    fn bipyramid() -> LatticePolytope {
        poly(&[
            &[1, 0, 0],
            &[0, 1, 0],
            &[-1, 1, 0],
            &[-1, 0, 0],
            &[0, -1, 0],
            &[1, -1, 0],
            &[0, 0, 1],
            &[0, 0, -1],
        ])
    }

    /// Exhaustive box scan with barycentric-free membership: a point is
    /// inside iff adding it does not change the hull.
    fn scan_oracle(p: &LatticePolytope) -> Vec<IntVector> {
        let d = p.dim();
        let lo: Vec<i64> = (0..d)
            .map(|i| p.vertices().iter().map(|v| v[i]).min().unwrap())
            .collect();
        let hi: Vec<i64> = (0..d)
            .map(|i| p.vertices().iter().map(|v| v[i]).max().unwrap())
            .collect();
        let mut out = Vec::new();
        let mut stack = vec![Vec::new()];
        while let Some(cur) = stack.pop() {
            if cur.len() == d {
                let q = IntVector::new(cur);
                let mut pts = p.vertices().to_vec();
                pts.push(q.clone());
                if LatticePolytope::convex_hull(&pts).unwrap().vertices() == p.vertices() {
                    out.push(q);
                }
                continue;
            }
            for x in lo[cur.len()]..=hi[cur.len()] {
                let mut c = cur.clone();
                c.push(x);
                stack.push(c);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        assert_eq!(
            poly(&[&[1, 0], &[0, 1], &[-1, -1], &[0, 0]]).vertices(),
            &[v(&[-1, -1]), v(&[1, 0]), v(&[0, 1])]
        );
        let mut verts = quadrilateral_left().vertices().to_vec();
        verts.sort();
        assert_eq!(verts, vec![v(&[-2, -3]), v(&[-2, 1]), v(&[-1, 2]), v(&[2, -3])]);
        let err = LatticePolytope::convex_hull(&[v(&[0, 0]), v(&[1, 0]), v(&[2, 0])]).unwrap_err();
        match err {
            Error::Degenerate { affine_dim, span, .. } => {
                assert_eq!(affine_dim, 1);
                assert_eq!(span, vec![vec![1, 0]]);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn lattice_point_counts() {
        assert_eq!(example_p().lattice_points().len(), 6);
        assert_eq!(example_q().lattice_points().len(), 6);
        assert_eq!(poly(&[&[0], &[1]]).lattice_points().len(), 2);
        assert_eq!(p2().lattice_points().len(), 4);
        assert_eq!(p2().lattice_points(), scan_oracle(&p2()).as_slice());
        let b = bipyramid();
        assert_eq!(b.lattice_points(), scan_oracle(&b).as_slice());
    }

    #[test]
    fn fano_predicates() {
        assert!(p2().is_fano());
        assert!(!poly(&[&[2, 0], &[0, 1], &[-2, -1]]).is_fano());
        assert!(quadrilateral_left().is_fano());
        assert!(example_p().is_reflexive());
        assert!(!quadrilateral_left().is_reflexive());
    }

    #[test]
    fn duals_and_volumes() {
        let d = p2().dual().unwrap();
        let lat = d.to_lattice().unwrap();
        let mut verts = lat.vertices().to_vec();
        verts.sort();
        assert_eq!(verts, vec![v(&[-1, -1]), v(&[-1, 2]), v(&[2, -1])]);
        assert!(p2().is_reflexive());
        let q = |n: i64| BigRational::from_integer(n.into());
        assert_eq!(example_p().dual().unwrap().normalized_volume().unwrap(), q(54));
        assert_eq!(example_q().dual().unwrap().normalized_volume().unwrap(), q(18));
        assert_eq!(poly(&[&[0, 0], &[1, 0], &[0, 1]]).normalized_volume(), BigInt::from(1));
        assert_eq!(
            poly(&[&[1, 1], &[-1, 1], &[-1, -1], &[1, -1]]).normalized_volume(),
            BigInt::from(8)
        );
        let outside = poly(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(outside.dual(), Err(Error::OriginNotInterior));
    }

    #[test]
    fn dual_of_dual_is_identity_for_reflexive() {
        for p in [p2(), example_p(), bipyramid()] {
            let dd = p.dual().unwrap().to_lattice().unwrap().dual().unwrap();
            assert_eq!(dd.to_lattice().unwrap(), p);
        }
    }

    #[test]
    fn face_structure() {
        let p = p2();
        assert_eq!(p.edges().len(), 3);
        assert!(p.facets().iter().all(|f| f.height() == 1));
        let b = bipyramid();
        let mut sizes: Vec<usize> = b.facets().iter().map(|f| f.vertices.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3; 12]);
        // The hexagon facet of the bipyramid over it, with apex below.
        let hp = poly(&[
            &[1, 0, 1],
            &[0, 1, 1],
            &[-1, 1, 1],
            &[-1, 0, 1],
            &[0, -1, 1],
            &[1, -1, 1],
            &[0, 0, -1],
        ]);
        let mut sizes: Vec<usize> = hp.facets().iter().map(|f| f.vertices.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 3, 3, 3, 3, 6]);
        let bottom = quadrilateral_left()
            .facets()
            .iter()
            .find(|f| f.normal == v(&[0, 1]))
            .cloned()
            .unwrap();
        assert_eq!(bottom.height(), 3);
        for e in b.edges() {
            assert_eq!(e.facets.len(), 2);
        }
        assert_eq!(b.edges().len(), 18);
    }

    #[test]
    fn normal_forms_separate_and_identify() {
        let p114 = poly(&[&[0, 1], &[-1, -1], &[1, -3]]);
        assert_ne!(p2().normal_form().unwrap(), p114.normal_form().unwrap());
        let right = poly(&[&[-2, -3], &[-2, 1], &[-1, 2], &[1, 2], &[-1, -3]]);
        assert_ne!(
            quadrilateral_left().normal_form().unwrap(),
            right.normal_form().unwrap()
        );
        let swapped = poly(&[&[0, 1], &[1, 0], &[-1, -1]]);
        assert!(gl_equivalent(&p2(), &swapped).unwrap());
    }

    #[test]
    fn text_round_trip() {
        for p in [p2(), quadrilateral_left(), example_p(), bipyramid()] {
            let t = p.to_text();
            let q = LatticePolytope::from_text(&t).unwrap();
            assert_eq!(q, p);
            assert_eq!(q.to_text(), t);
        }
        let p = LatticePolytope::from_text("# comment\ndim 2\n1 0\n0 1\n-1 -1\n").unwrap();
        assert_eq!(p, p2());
        assert!(LatticePolytope::from_text("dim 2\n1 0 0\n").is_err());
        assert_eq!(LatticePolytope::from_inline("1,0;0,1;-1,-1").unwrap(), p2());
    }

    #[test]
    fn embedded_segment() {
        let s = EmbeddedPolytope::new(&[v(&[0, 0, 0]), v(&[2, -2, 0])]).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.lattice_points().len(), 3);
        assert!(s.contains(&v(&[1, -1, 0])));
        assert!(!s.contains(&v(&[1, 0, 0])));
        let pt = EmbeddedPolytope::new(&[v(&[1, 2])]).unwrap();
        assert_eq!(pt.dim(), 0);
        assert_eq!(pt.vertices(), vec![v(&[1, 2])]);
    }

    #[test]
    fn transforms_realize_the_key() {
        for p in [p2(), quadrilateral_left(), example_p(), bipyramid()] {
            let nf = p.normal_form_full().unwrap();
            let canon: Vec<LatticePolytope> = nf.transforms.iter().map(|u| p.transform(u).unwrap()).collect();
            for c in &canon {
                assert_eq!(c, &canon[0]);
                assert_eq!(c.normal_form().unwrap(), nf.key);
            }
        }
    }

    fn random_unimodular(n: usize, ops: &[(usize, usize, i64)]) -> IntMatrix {
        let mut u = IntMatrix::identity(n);
        for &(a, b, k) in ops {
            let (a, b) = (a % n, b % n);
            if a == b {
                u.swap_rows(a, (a + 1) % n);
            } else {
                u.add_row_multiple(a, b, &BigInt::from(k));
            }
        }
        u
    }

    fn small_polytope(n: usize) -> impl Strategy<Value = LatticePolytope> {
        proptest::collection::vec(proptest::collection::vec(-3i64..4, n), n + 1..9).prop_filter_map(
            "full-dimensional",
            |pts| {
                let pts: Vec<IntVector> = pts.into_iter().map(IntVector::new).collect();
                LatticePolytope::convex_hull(&pts).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unimodular_invariants_2d(
            p in small_polytope(2),
            ops in proptest::collection::vec((0usize..2, 0usize..2, -2i64..3), 0..6),
        ) {
            let u = random_unimodular(2, &ops);
            let q = p.transform(&u).unwrap();
            prop_assert_eq!(p.normalized_volume(), q.normalized_volume());
            prop_assert_eq!(p.lattice_points().len(), q.lattice_points().len());
            prop_assert_eq!(p.normal_form().unwrap(), q.normal_form().unwrap());
        }

        #[test]
        fn unimodular_invariants_3d(
            p in small_polytope(3),
            ops in proptest::collection::vec((0usize..3, 0usize..3, -2i64..3), 0..6),
        ) {
            let u = random_unimodular(3, &ops);
            let q = p.transform(&u).unwrap();
            prop_assert_eq!(p.normalized_volume(), q.normalized_volume());
            prop_assert_eq!(p.lattice_points().len(), q.lattice_points().len());
            prop_assert_eq!(p.normal_form().unwrap(), q.normal_form().unwrap());
            let back = p.equivalence_to(&q).unwrap().unwrap();
            prop_assert_eq!(p.transform(&back).unwrap(), q);
        }

        #[test]
        fn hull_contains_inputs(
            pts in proptest::collection::vec(proptest::collection::vec(-4i64..5, 3), 4..14),
        ) {
            let pts: Vec<IntVector> = pts.into_iter().map(IntVector::new).collect();
            if let Ok(p) = LatticePolytope::convex_hull(&pts) {
                for x in &pts {
                    prop_assert!(p.contains(x));
                }
                for v in p.vertices() {
                    let others: Vec<IntVector> = p.vertices().iter().filter(|w| *w != v).cloned().collect();
                    let h = LatticePolytope::convex_hull(&others);
                    prop_assert!(h.map(|h| !h.contains(v)).unwrap_or(true));
                }
                for f in p.facets() {
                    prop_assert_eq!(f.normal.content(), 1);
                    for &i in &f.vertices {
                        prop_assert_eq!(f.normal.dot(&p.vertices()[i]), f.offset);
                    }
                }
            }
        }

        #[test]
        fn fano_facets_have_positive_height(p in small_polytope(3)) {
            if p.is_fano() {
                prop_assert!(p.facets().iter().all(|f| f.height() >= 1));
            }
            if p.is_reflexive() && p.vertices().iter().all(|v| v.content() == 1) {
                prop_assert!(p.is_fano());
            }
        }
    }
}
