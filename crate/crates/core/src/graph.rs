//! Bounded breadth-first exploration of mutation graphs.
//!
//! Nodes are GL(n,ℤ) classes of polynomials, each stored through a
//! canonical representative: among the transforms taking its Newton
//! polytope to normal form, the one giving the lexicographically smallest
//! polynomial. Edges are directed: expanding a node records one edge per
//! mutation of its representative, labelled in the representative's
//! coordinates. An edge and its inverse both appear once both endpoints
//! have been expanded.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::laurent::LaurentPolynomial;
use crate::mutation::{mutate, EdgeLabel, MutationData};
use crate::par::{self, ExecMode};
use crate::polytope::{LatticePolytope, NormalFormKey};
use crate::rigidity::{candidate_mutations_with, MutationSearchBudget};

/// Canonical representative of the GL(n,ℤ) class of `f`.
pub fn canonical_representative(f: &LaurentPolynomial) -> Result<(NormalFormKey, LaurentPolynomial)> {
    let nf = f.newton_polytope()?.normal_form_full()?;
    let mut best: Option<LaurentPolynomial> = None;
    for u in &nf.transforms {
        let g = f.monomial_change_of_basis(u)?;
        if best.as_ref().is_none_or(|b| g < *b) {
            best = Some(g);
        }
    }
    Ok((nf.key, best.expect("at least one transform")))
}

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub key: NormalFormKey,
    pub polynomial: LaurentPolynomial,
    pub polytope: LatticePolytope,
    pub depth: usize,
    pub expanded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    pub label: EdgeLabel,
}

/// A finite portion of a mutation graph.
#[derive(Clone, Debug)]
pub struct MutationGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// Deepest level that was fully expanded, plus one.
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub depth: usize,
    pub max_nodes: usize,
    pub budget: MutationSearchBudget,
    pub mode: ExecMode,
    /// Shuffles candidate mutations before use; the result must not change.
    pub shuffle_seed: Option<u64>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            depth: 1,
            max_nodes: 200,
            budget: MutationSearchBudget::default(),
            mode: ExecMode::default(),
            shuffle_seed: None,
        }
    }
}

struct Expansion {
    label: EdgeLabel,
    key: NormalFormKey,
    polynomial: LaurentPolynomial,
}

fn expand(g: &LaurentPolynomial, opts: &ExploreOptions, salt: usize) -> Result<Vec<Expansion>> {
    let mut cands: Vec<MutationData> = candidate_mutations_with(g, &opts.budget, opts.mode)?;
    if let Some(seed) = opts.shuffle_seed {
        cands.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ salt as u64));
    }
    let mut out = Vec::with_capacity(cands.len());
    for md in &cands {
        let h = mutate(g, md)?;
        let (key, polynomial) = canonical_representative(&h)?;
        out.push(Expansion {
            label: md.label(),
            key,
            polynomial,
        });
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(out)
}

/// Explores the mutation graph of `f` to `opts.depth` levels, stopping
/// early once `opts.max_nodes` nodes exist.
pub fn explore(f: &LaurentPolynomial, opts: &ExploreOptions) -> Result<MutationGraph> {
    if !f.has_constant_coefficients() {
        return Err(Error::Parametric(f.to_string()));
    }
    if !f.is_normalised() || !f.has_zero_constant_term() {
        return Err(Error::Unsupported(
            "exploration needs a normalised polynomial with zero constant term".into(),
        ));
    }
    if !f.newton_polytope()?.is_fano() {
        return Err(Error::NotFano);
    }
    let (key, rep) = canonical_representative(f)?;
    let mut nodes = vec![GraphNode {
        key,
        polytope: rep.newton_polytope()?,
        polynomial: rep.clone(),
        depth: 0,
        expanded: false,
    }];
    let mut index: BTreeMap<LaurentPolynomial, usize> = BTreeMap::from([(rep, 0)]);
    let mut edges: Vec<GraphEdge> = Vec::new();
    let mut level = vec![0usize];
    let mut depth = 0;
    while depth < opts.depth && !level.is_empty() && nodes.len() < opts.max_nodes {
        let reps: Vec<(usize, LaurentPolynomial)> = level.iter().map(|&i| (i, nodes[i].polynomial.clone())).collect();
        let results = par::map(opts.mode, &reps, |(i, g)| expand(g, opts, *i));
        // New nodes of this level, ordered canonically before numbering.
        let mut fresh: BTreeMap<LaurentPolynomial, NormalFormKey> = BTreeMap::new();
        let results: Vec<Vec<Expansion>> = results.into_iter().collect::<Result<_>>()?;
        for ex in results.iter().flatten() {
            if !index.contains_key(&ex.polynomial) {
                fresh.entry(ex.polynomial.clone()).or_insert_with(|| ex.key.clone());
            }
        }
        for (poly, key) in fresh {
            index.insert(poly.clone(), nodes.len());
            nodes.push(GraphNode {
                key,
                polytope: poly.newton_polytope()?,
                polynomial: poly,
                depth: depth + 1,
                expanded: false,
            });
        }
        for (&source, exs) in level.iter().zip(&results) {
            for ex in exs {
                edges.push(GraphEdge {
                    source,
                    target: index[&ex.polynomial],
                    label: ex.label.clone(),
                });
            }
            nodes[source].expanded = true;
        }
        depth += 1;
        level = (0..nodes.len()).filter(|&i| nodes[i].depth == depth).collect();
    }
    edges.sort();
    Ok(MutationGraph { nodes, edges, depth })
}

impl MutationGraph {
    pub fn root(&self) -> &GraphNode {
        &self.nodes[0]
    }

    /// Number of mutations leaving an expanded node.
    pub fn valency(&self, node: usize) -> Result<usize> {
        let n = self
            .nodes
            .get(node)
            .ok_or_else(|| Error::NotFound(format!("node {node}")))?;
        if !n.expanded {
            return Err(Error::FrontierNode);
        }
        Ok(self.edges.iter().filter(|e| e.source == node).count())
    }

    /// Number of distinct polytope classes.
    pub fn class_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| &n.key)
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    }

    /// Graphviz text; node labels are normal-form digests.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph mutations {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if n.expanded { "ellipse" } else { "box" };
            let _ = writeln!(out, "  n{i} [label=\"{}\" shape={shape}];", n.key.digest());
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.source, e.target, e.label);
        }
        out.push_str("}\n");
        out
    }
}

/// Graphviz text for `g`.
pub fn emit_dot(g: &MutationGraph) -> String {
    g.to_dot()
}
