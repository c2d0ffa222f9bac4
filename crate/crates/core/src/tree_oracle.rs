//! Brute-force Bass–Serre tree at bounded depth.
//!
//! Tree vertices are cosets `gG_v`, labelled by the normal form of `g` with the
//! trailing coefficient dropped. The oracle enumerates subgroup elements by
//! products of generators, identifies ball vertices and edges along their
//! action, and compares the resulting quotient with the folded subgroup graph.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::finite_group::Elem;
use crate::folding::{subgroup_graph, FoldError};
use crate::graph_of_groups::{GWord, GraphOfGroups};
use crate::serre_graph::{graphs_isomorphic, EdgeId, SerreGraph, VertexId};

pub const MAX_RADIUS: usize = 12;
pub const MAX_BALL_VERTICES: usize = 1_000_000;
pub const MAX_ELEMENTS: usize = 100_000;

/// Size limits for one oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub ball_vertices: usize,
    pub elements: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            ball_vertices: MAX_BALL_VERTICES,
            elements: MAX_ELEMENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("radius {0} exceeds the cap of {MAX_RADIUS}")]
    RadiusTooLarge(usize),
    #[error("ball exceeds {0} vertices")]
    BallTooLarge(usize),
    #[error("element set exceeds {0} elements")]
    SetTooLarge(usize),
    #[error("generator {0} is not a loop at the base vertex")]
    NotALoop(usize),
}

type Label = Vec<(Elem, EdgeId)>;
/// Vertex pairs and edge pairs to glue.
type Identifications = (Vec<(usize, usize)>, Vec<(EdgeId, EdgeId)>);

/// The ball of radius `R` about the base vertex of the Bass–Serre tree.
#[derive(Debug, Clone)]
pub struct TreeBall {
    gog: Arc<GraphOfGroups>,
    radius: usize,
    labels: Vec<Label>,
    vtype: Vec<VertexId>,
    depth: Vec<usize>,
    /// Ball edge `2k` runs from parent to child; `child_edge[v]` is that edge into `v`.
    child_edge: Vec<Option<EdgeId>>,
    edge_type: Vec<EdgeId>,
    graph: SerreGraph,
    index: HashMap<Label, usize>,
}

impl TreeBall {
    pub fn build(gog: &Arc<GraphOfGroups>, radius: usize) -> Result<Self, OracleError> {
        Self::build_capped(gog, radius, MAX_BALL_VERTICES)
    }

    pub fn build_capped(
        gog: &Arc<GraphOfGroups>,
        radius: usize,
        cap: usize,
    ) -> Result<Self, OracleError> {
        if radius > MAX_RADIUS {
            return Err(OracleError::RadiusTooLarge(radius));
        }
        let mut ball = TreeBall {
            gog: gog.clone(),
            radius,
            labels: vec![Vec::new()],
            vtype: vec![gog.base()],
            depth: vec![0],
            child_edge: vec![None],
            edge_type: Vec::new(),
            graph: SerreGraph::new(1),
            index: HashMap::from([(Vec::new(), 0)]),
        };
        let y = gog.graph();
        let mut head = 0;
        while head < ball.labels.len() {
            let u = head;
            head += 1;
            if ball.depth[u] == radius {
                continue;
            }
            let last = ball.labels[u].last().map(|&(_, e)| e);
            for &e in y.out_edges(ball.vtype[u]) {
                for &t in gog.alpha(e).left_transversal() {
                    if last == Some(e ^ 1) && t == 0 {
                        continue;
                    }
                    if ball.labels.len() >= cap {
                        return Err(OracleError::BallTooLarge(cap));
                    }
                    let mut label = ball.labels[u].clone();
                    label.push((t, e));
                    let v = ball.labels.len();
                    let be = ball.graph.add_vertex();
                    debug_assert_eq!(be, v);
                    let edge = ball.graph.add_edge(u, v);
                    ball.edge_type.push(e);
                    ball.edge_type.push(e ^ 1);
                    ball.index.insert(label.clone(), v);
                    ball.labels.push(label);
                    ball.vtype.push(y.dst(e));
                    ball.depth.push(ball.depth[u] + 1);
                    ball.child_edge.push(Some(edge));
                }
            }
        }
        Ok(ball)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn graph(&self) -> &SerreGraph {
        &self.graph
    }

    pub fn vertex_type(&self, v: usize) -> VertexId {
        self.vtype[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn edge_type(&self, e: EdgeId) -> EdgeId {
        self.edge_type[e]
    }

    /// A path word from the base whose coset is vertex `v`.
    pub fn vertex_word(&self, v: usize) -> GWord {
        label_word(self.gog.base(), &self.labels[v])
    }

    pub fn vertex_of(&self, w: &GWord) -> Option<usize> {
        self.index.get(&label_of(w)).copied()
    }

    /// Tree degree expected at a vertex of type `v`.
    pub fn expected_degree(&self, v: VertexId) -> usize {
        self.gog.tree_degree(v)
    }

    /// Directed ball edge from `u` to an adjacent `w`.
    fn edge_between(&self, u: usize, w: usize) -> EdgeId {
        match self.child_edge[w] {
            Some(e) if self.graph.src(e) == u => e,
            _ => self.child_edge[u].expect("vertices are adjacent") ^ 1,
        }
    }

    fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.out_edges(u).iter().map(move |&e| self.graph.dst(e))
    }

    /// Image of vertex `v` under `h`, as a full path word.
    fn act(&self, h: &GWord, v: usize) -> GWord {
        self.gog
            .multiply(h, &self.vertex_word(v))
            .expect("loops compose with based paths")
    }

    /// Vertex and edge identifications `x ~ h·x` over the convex region of the
    /// ball that `h` maps back into the ball.
    fn identifications(&self, h: &GWord) -> Identifications {
        let d = h.len();
        let mut vpairs = Vec::new();
        let mut epairs = Vec::new();
        if d > 2 * self.radius {
            return (vpairs, epairs);
        }
        let hinv = self.gog.invert(h);
        let start_label: Label = label_of(&hinv)[..d.div_ceil(2)].to_vec();
        let Some(&start) = self.index.get(&start_label) else {
            return (vpairs, epairs);
        };
        let Some(img) = self.vertex_of(&self.act(h, start)) else {
            return (vpairs, epairs);
        };
        let mut image: HashMap<usize, usize> = HashMap::from([(start, img)]);
        let mut queue = vec![start];
        while let Some(u) = queue.pop() {
            let hu = image[&u];
            vpairs.push((u, hu));
            for w in self.neighbors(u) {
                let hw = match image.get(&w) {
                    Some(&hw) => Some(hw),
                    None => {
                        let found = self.vertex_of(&self.act(h, w));
                        if let Some(hw) = found {
                            image.insert(w, hw);
                            queue.push(w);
                        }
                        found
                    }
                };
                if let Some(hw) = hw {
                    if u < w {
                        epairs.push((self.edge_between(u, w), self.edge_between(hu, hw)));
                    }
                }
            }
        }
        (vpairs, epairs)
    }

    /// A nonidentity element of `hs` fixing a ball vertex, with that vertex.
    pub fn fixed_vertex_witness(&self, hs: &ElementSet) -> Option<(GWord, usize)> {
        hs.elements.iter().find_map(|h| {
            let d = h.len();
            if d % 2 == 1 || d > 2 * self.radius || self.gog.is_identity(h) {
                return None;
            }
            let mid = *self.index.get(&label_of(h)[..d / 2])?;
            (self.vertex_of(&self.act(h, mid)) == Some(mid)).then(|| (h.clone(), mid))
        })
    }

    /// Identifies the ball along `hs` and returns the quotient graph.
    pub fn quotient(&self, hs: &ElementSet) -> QuotientBall {
        let nv = self.num_vertices();
        let ne = self.graph.num_edges();
        let mut vuf = UnionFind::new(nv);
        let mut euf = UnionFind::new(ne);
        let mut seen = HashSet::new();
        let reps: Vec<&GWord> = hs
            .elements
            .iter()
            .filter(|h| {
                let inv = self.gog.invert(h);
                if seen.contains(&inv) {
                    return false;
                }
                seen.insert((*h).clone());
                !h.is_empty() || h.coeffs[0] != 0
            })
            .collect();
        for chunk in reps.chunks(256) {
            let found: Vec<_> = chunk.par_iter().map(|h| self.identifications(h)).collect();
            for (vpairs, epairs) in found {
                for (a, b) in vpairs {
                    vuf.union(a, b);
                }
                for (a, b) in epairs {
                    euf.union(a, b);
                    euf.union(a ^ 1, b ^ 1);
                }
            }
        }
        let mut vclass = HashMap::new();
        let mut vertex_map = Vec::with_capacity(nv);
        for v in 0..nv {
            let r = vuf.find(v);
            let next = vclass.len();
            vertex_map.push(*vclass.entry(r).or_insert(next));
        }
        let mut graph = SerreGraph::new(vclass.len());
        let mut eclass: HashMap<usize, EdgeId> = HashMap::new();
        let mut edge_map = vec![0; ne];
        let mut inversions = 0;
        for e in 0..ne {
            let r = euf.find(e);
            if let Some(&q) = eclass.get(&r) {
                edge_map[e] = q;
                continue;
            }
            let rbar = euf.find(e ^ 1);
            if rbar == r {
                inversions += 1;
                continue;
            }
            let q = graph.add_edge(vertex_map[self.graph.src(e)], vertex_map[self.graph.dst(e)]);
            eclass.insert(r, q);
            eclass.insert(rbar, q ^ 1);
            edge_map[e] = q;
        }
        QuotientBall {
            graph,
            vertex_map,
            edge_map,
            inversions,
        }
    }
}

fn label_of(w: &GWord) -> Label {
    w.coeffs.iter().copied().zip(w.edges.iter().copied()).collect()
}

fn label_word(base: VertexId, label: &Label) -> GWord {
    let mut coeffs: Vec<Elem> = label.iter().map(|&(t, _)| t).collect();
    coeffs.push(0);
    GWord::from_parts(base, coeffs, label.iter().map(|&(_, e)| e).collect())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// The ball modulo a finite set of subgroup elements.
#[derive(Debug, Clone)]
pub struct QuotientBall {
    pub graph: SerreGraph,
    /// Ball vertex to quotient vertex.
    pub vertex_map: Vec<usize>,
    /// Ball edge to quotient edge; meaningless where an inversion was found.
    pub edge_map: Vec<EdgeId>,
    /// Edge classes identified with their own inverse.
    pub inversions: usize,
}

impl QuotientBall {
    /// Core of the quotient, `None` when the quotient is a tree.
    pub fn core(&self) -> Option<SerreGraph> {
        self.graph.core().ok().map(|(c, _)| c)
    }

    pub fn rank(&self) -> usize {
        self.graph.fundamental_rank().unwrap_or(0)
    }
}

/// A finite, deduplicated set of normal-form loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSet {
    /// Sorted.
    pub elements: Vec<GWord>,
    pub length: usize,
}

impl ElementSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, w: &GWord) -> bool {
        self.elements.binary_search(w).is_ok()
    }

    pub fn intersect(&self, other: &ElementSet) -> ElementSet {
        ElementSet {
            elements: self
                .elements
                .iter()
                .filter(|w| other.contains(w))
                .cloned()
                .collect(),
            length: self.length.min(other.length),
        }
    }
}

/// All products of at most `length` generators and their inverses.
///
/// With `max_edges`, products longer than that many edges are neither kept nor
/// extended further.
pub fn enumerate_subgroup(
    gog: &GraphOfGroups,
    gens: &[GWord],
    length: usize,
    max_edges: Option<usize>,
) -> Result<ElementSet, OracleError> {
    enumerate_subgroup_capped(gog, gens, length, max_edges, MAX_ELEMENTS)
}

pub fn enumerate_subgroup_capped(
    gog: &GraphOfGroups,
    gens: &[GWord],
    length: usize,
    max_edges: Option<usize>,
    cap: usize,
) -> Result<ElementSet, OracleError> {
    let mut letters = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        if !gog.is_loop(g) {
            return Err(OracleError::NotALoop(i));
        }
        letters.push(gog.normal_form(g));
        letters.push(gog.invert(g));
    }
    let mut all: HashSet<GWord> = HashSet::from([gog.identity()]);
    let mut frontier = vec![gog.identity()];
    for _ in 0..length {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                let p = gog.multiply(w, l).expect("loops at one base");
                if max_edges.is_some_and(|m| p.len() > m) || all.contains(&p) {
                    continue;
                }
                if all.len() >= cap {
                    return Err(OracleError::SetTooLarge(cap));
                }
                all.insert(p.clone());
                next.push(p);
            }
        }
        frontier = next;
    }
    let mut elements: Vec<GWord> = all.into_iter().collect();
    elements.sort();
    Ok(ElementSet { elements, length })
}

/// One-sided membership: `false` only means "not found among short products".
pub fn brute_member(
    gog: &GraphOfGroups,
    gens: &[GWord],
    w: &GWord,
    length: usize,
) -> Result<bool, OracleError> {
    Ok(enumerate_subgroup(gog, gens, length, None)?.contains(&gog.normal_form(w)))
}

/// Max over ball edges of the number of stabilizer elements found in `hs_h·hs_k`.
pub fn stab_count_lower(ball: &TreeBall, hs_h: &ElementSet, hs_k: &ElementSet) -> usize {
    let gog = &ball.gog;
    let mut best = 0;
    for x in ball.graph.positive_edges() {
        let parent = ball.graph.src(x);
        let e = ball.edge_type[x];
        let child = ball.graph.dst(x);
        let t = ball.labels[child].last().expect("child has a label").0;
        let mut g = ball.vertex_word(parent);
        *g.coeffs.last_mut().unwrap() = t;
        let ginv = gog.invert(&g);
        let mut count = 0;
        for c in gog.edge_group(e).elements() {
            let a = GWord::vertex_element(gog.graph().src(e), gog.alpha(e).apply(c));
            let s = gog
                .multiply(&gog.multiply(&g, &a).unwrap(), &ginv)
                .unwrap();
            let found = hs_h.elements.iter().any(|h| {
                let rest = gog.multiply(&gog.invert(h), &s).unwrap();
                hs_k.contains(&rest)
            });
            if found {
                count += 1;
            }
        }
        best = best.max(count);
    }
    best
}

/// Outcome of comparing the ball quotient with the folded subgroup graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub radius: usize,
    pub length: usize,
    pub ball_vertices: usize,
    pub elements: usize,
    pub stabilized: bool,
    pub oracle_rank: Option<usize>,
    pub folding_rank: usize,
    pub isomorphic: Option<bool>,
    pub verdict: String,
}

/// Quotient core at `(R, L)`, plus whether `(R + 2, L + 2)` gives the same core.
pub fn stabilized_core(
    gog: &Arc<GraphOfGroups>,
    gens: &[GWord],
    radius: usize,
    length: usize,
) -> Result<(Option<SerreGraph>, bool, usize, usize), OracleError> {
    stabilized_core_with(gog, gens, radius, length, OracleCaps::default())
}

pub fn stabilized_core_with(
    gog: &Arc<GraphOfGroups>,
    gens: &[GWord],
    radius: usize,
    length: usize,
    caps: OracleCaps,
) -> Result<(Option<SerreGraph>, bool, usize, usize), OracleError> {
    let at = |r: usize, l: usize| -> Result<(Option<SerreGraph>, usize, usize), OracleError> {
        let ball = TreeBall::build_capped(gog, r, caps.ball_vertices)?;
        let hs = enumerate_subgroup_capped(gog, gens, l, Some(2 * r), caps.elements)?;
        let q = ball.quotient(&hs);
        Ok((q.core(), ball.num_vertices(), hs.len()))
    };
    let (c1, nv, ne) = at(radius, length)?;
    let reaches = gens.iter().all(|g| gog.normal_form(g).len() <= radius);
    let stable = reaches
        && radius + 2 <= MAX_RADIUS
        && {
            let (c2, _, _) = at(radius + 2, length + 2)?;
            match (&c1, &c2) {
                (None, None) => true,
                (Some(a), Some(b)) => graphs_isomorphic(a, b).unwrap_or(false),
                _ => false,
            }
        };
    Ok((c1, stable, nv, ne))
}

/// Runs the oracle on `⟨gens⟩` and compares with the folded core.
pub fn corroborate(
    gog: &Arc<GraphOfGroups>,
    gens: &[GWord],
    radius: usize,
    length: usize,
) -> Result<Result<OracleReport, FoldError>, OracleError> {
    corroborate_with(gog, gens, radius, length, OracleCaps::default())
}

pub fn corroborate_with(
    gog: &Arc<GraphOfGroups>,
    gens: &[GWord],
    radius: usize,
    length: usize,
    caps: OracleCaps,
) -> Result<Result<OracleReport, FoldError>, OracleError> {
    let folded = match subgroup_graph(gog, gens) {
        Ok(f) => f,
        Err(e) => return Ok(Err(e)),
    };
    let core = folded.core();
    let (qcore, stabilized, nv, ne) = stabilized_core_with(gog, gens, radius, length, caps)?;
    let oracle_rank = qcore
        .as_ref()
        .map(|c| c.num_positive_edges() + 1 - c.num_vertices())
        .or(Some(0));
    let isomorphic = stabilized.then(|| match &qcore {
        None => core.is_trivial(),
        Some(c) => !core.is_trivial() && graphs_isomorphic(c, &core.psi).unwrap_or(false),
    });
    let verdict = match isomorphic {
        Some(true) => "corroborated",
        Some(false) => "disagrees",
        None => "inconclusive",
    };
    Ok(Ok(OracleReport {
        radius,
        length,
        ball_vertices: nv,
        elements: ne,
        stabilized,
        oracle_rank,
        folding_rank: core.rank,
        isomorphic,
        verdict: verdict.to_string(),
    }))
}
