//! Finite graphs of finite groups and their fundamental groups.
//!
//! Group elements are kept in the loop model: a word `g₀ e₁ g₁ … eₙ gₙ` where
//! `e₁…eₙ` is a path in the underlying graph `Y` and each `gᵢ` lies in the
//! vertex group at the end of `eᵢ`. Crossing `e` satisfies
//! `α_e(c)·e = e·ω_e(c)` with `ω_e = α_{inv(e)}`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::finite_group::{Elem, FiniteGroup, MonoError, Monomorphism};
use crate::serre_graph::{EdgeId, GraphError, Path, SerreGraph, SpanningTree, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GogError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("expected {expected} {what}, got {got}")]
    WrongCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("edge {edge} and its inverse carry different edge groups")]
    EdgePairGroupMismatch { edge: EdgeId },
    #[error("embedding for edge {edge}: {source}")]
    Embedding { edge: EdgeId, source: MonoError },
    #[error("embedding for edge {edge} does not target the group of vertex {vertex}")]
    EmbeddingTarget { edge: EdgeId, vertex: VertexId },
    #[error("base vertex {0} does not exist")]
    BaseOutOfRange(VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("words do not compose: first ends at vertex {end}, second starts at vertex {start}")]
    BaseMismatch { end: VertexId, start: VertexId },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("element {element} is not in the group of vertex {vertex}")]
    UnknownElement { vertex: VertexId, element: Elem },
    #[error("malformed word: {0}")]
    Malformed(String),
}

/// A finite graph of finite groups with a base vertex and a fixed spanning tree.
#[derive(Debug, Clone)]
pub struct GraphOfGroups {
    y: SerreGraph,
    vertex_groups: Vec<Arc<FiniteGroup>>,
    edge_groups: Vec<Arc<FiniteGroup>>,
    alpha: Vec<Monomorphism>,
    base: VertexId,
    spanning: SpanningTree,
}

impl GraphOfGroups {
    /// Validates a graph of groups.
    ///
    /// `edge_groups` and `alpha` are indexed by directed edge of `y`; the group
    /// on `e` must equal the group on `inv(e)`, and `alpha[e]` maps it into the
    /// group of `src(e)`.
    pub fn new(
        y: SerreGraph,
        vertex_groups: Vec<Arc<FiniteGroup>>,
        edge_groups: Vec<Arc<FiniteGroup>>,
        alpha: Vec<Vec<Elem>>,
        base: VertexId,
    ) -> Result<Self, GogError> {
        if vertex_groups.len() != y.num_vertices() {
            return Err(GogError::WrongCount {
                what: "vertex groups",
                expected: y.num_vertices(),
                got: vertex_groups.len(),
            });
        }
        if edge_groups.len() != y.num_edges() {
            return Err(GogError::WrongCount {
                what: "edge groups",
                expected: y.num_edges(),
                got: edge_groups.len(),
            });
        }
        if alpha.len() != y.num_edges() {
            return Err(GogError::WrongCount {
                what: "edge embeddings",
                expected: y.num_edges(),
                got: alpha.len(),
            });
        }
        if base >= y.num_vertices() {
            return Err(GogError::BaseOutOfRange(base));
        }
        for e in y.positive_edges() {
            if edge_groups[e] != edge_groups[e ^ 1] {
                return Err(GogError::EdgePairGroupMismatch { edge: e });
            }
        }
        let spanning = y.spanning_tree(base)?;
        let mut monos = Vec::with_capacity(y.num_edges());
        for (e, map) in alpha.into_iter().enumerate() {
            let m = Monomorphism::new(
                edge_groups[e & !1].clone(),
                vertex_groups[y.src(e)].clone(),
                map,
            )
            .map_err(|source| GogError::Embedding { edge: e, source })?;
            monos.push(m);
        }
        let edge_groups = y.positive_edges().map(|e| edge_groups[e].clone()).collect();
        Ok(GraphOfGroups {
            y,
            vertex_groups,
            edge_groups,
            alpha: monos,
            base,
            spanning,
        })
    }

    pub fn graph(&self) -> &SerreGraph {
        &self.y
    }

    pub fn base(&self) -> VertexId {
        self.base
    }

    pub fn spanning_tree(&self) -> &SpanningTree {
        &self.spanning
    }

    #[inline]
    pub fn vertex_group(&self, v: VertexId) -> &FiniteGroup {
        &self.vertex_groups[v]
    }

    pub fn vertex_group_arc(&self, v: VertexId) -> &Arc<FiniteGroup> {
        &self.vertex_groups[v]
    }

    #[inline]
    pub fn edge_group(&self, e: EdgeId) -> &FiniteGroup {
        &self.edge_groups[e >> 1]
    }

    /// `α_e : G_e → G_{src(e)}`.
    #[inline]
    pub fn alpha(&self, e: EdgeId) -> &Monomorphism {
        &self.alpha[e]
    }

    /// `ω_e = α_{inv(e)} : G_e → G_{dst(e)}`.
    #[inline]
    pub fn omega(&self, e: EdgeId) -> &Monomorphism {
        &self.alpha[e ^ 1]
    }

    /// Largest edge group order.
    pub fn max_edge_group_order(&self) -> usize {
        self.edge_groups.iter().map(|g| g.order()).max().unwrap_or(1)
    }

    pub fn max_vertex_group_order(&self) -> usize {
        self.vertex_groups.iter().map(|g| g.order()).max().unwrap_or(1)
    }

    /// Positive edges inside the spanning tree (amalgamated products) and
    /// outside it (HNN extensions).
    pub fn construction_counts(&self) -> (usize, usize) {
        let tree = self.spanning.positive_edges().len();
        (tree, self.y.num_positive_edges() - tree)
    }

    /// Number of edges of the Bass–Serre tree at a vertex of type `v`.
    pub fn tree_degree(&self, v: VertexId) -> usize {
        self.y.out_edges(v).iter().map(|&e| self.alpha(e).index()).sum()
    }

    pub fn identity(&self) -> GWord {
        GWord::vertex_element(self.base, 0)
    }

    pub fn end(&self, w: &GWord) -> VertexId {
        w.edges.last().map_or(w.start, |&e| self.y.dst(e))
    }

    pub fn is_loop(&self, w: &GWord) -> bool {
        w.start == self.base && self.end(w) == self.base
    }

    /// Structural validity: path consistency and coefficient ranges.
    pub fn check_word(&self, w: &GWord) -> Result<(), WordError> {
        if w.start >= self.y.num_vertices() {
            return Err(WordError::UnknownVertex(w.start));
        }
        if w.coeffs.len() != w.edges.len() + 1 {
            return Err(WordError::Malformed(
                "coefficient count must exceed edge count by one".into(),
            ));
        }
        let mut at = w.start;
        for (i, &g) in w.coeffs.iter().enumerate() {
            if g >= self.vertex_group(at).order() {
                return Err(WordError::UnknownElement {
                    vertex: at,
                    element: g,
                });
            }
            if let Some(&e) = w.edges.get(i) {
                if e >= self.y.num_edges() {
                    return Err(WordError::UnknownEdge(e));
                }
                if self.y.src(e) != at {
                    return Err(WordError::Malformed(format!(
                        "edge {e} does not start at vertex {at}"
                    )));
                }
                at = self.y.dst(e);
            }
        }
        Ok(())
    }

    /// No pinch `e · ω_e(c) · inv(e)` remains.
    pub fn is_reduced(&self, w: &GWord) -> bool {
        (1..w.edges.len()).all(|i| {
            let (a, b) = (w.edges[i - 1], w.edges[i]);
            b != a ^ 1 || !self.omega(a).in_image(w.coeffs[i])
        })
    }

    /// Reduced, and every coefficient but the last is a transversal
    /// representative for the image of the following edge.
    pub fn is_normal(&self, w: &GWord) -> bool {
        self.is_reduced(w)
            && w
                .edges
                .iter()
                .enumerate()
                .all(|(i, &e)| self.alpha(e).coset_rep(w.coeffs[i]) == w.coeffs[i])
    }

    /// Removes pinches `e · ω_e(c) · inv(e) ↦ α_e(c)` until none remain.
    pub fn reduce(&self, w: &GWord) -> GWord {
        let mut coeffs = Vec::with_capacity(w.coeffs.len());
        let mut edges: Vec<EdgeId> = Vec::with_capacity(w.edges.len());
        coeffs.push(w.coeffs[0]);
        for (&e, &g) in w.edges.iter().zip(&w.coeffs[1..]) {
            self.push_syllable(&mut coeffs, &mut edges, e, g);
        }
        GWord {
            start: w.start,
            coeffs,
            edges,
        }
    }

    fn push_syllable(&self, coeffs: &mut Vec<Elem>, edges: &mut Vec<EdgeId>, e: EdgeId, g: Elem) {
        if let Some(&last) = edges.last() {
            if e == last ^ 1 {
                if let Some(c) = self.omega(last).preimage(*coeffs.last().unwrap()) {
                    edges.pop();
                    coeffs.pop();
                    let group = self.vertex_group(self.y.src(last));
                    let prev = coeffs.last_mut().unwrap();
                    *prev = group.mul(group.mul(*prev, self.alpha(last).apply(c)), g);
                    return;
                }
            }
        }
        edges.push(e);
        coeffs.push(g);
    }

    /// Canonical form: two words represent the same element iff their normal
    /// forms are identical.
    pub fn normal_form(&self, w: &GWord) -> GWord {
        let mut r = self.reduce(w);
        self.sweep(&mut r);
        r
    }

    /// Pushes the non-transversal part of each coefficient across the next edge.
    fn sweep(&self, w: &mut GWord) {
        for i in 0..w.edges.len() {
            let e = w.edges[i];
            let (rep, c) = self.alpha(e).split(w.coeffs[i]);
            w.coeffs[i] = rep;
            let next = self.vertex_group(self.y.dst(e));
            w.coeffs[i + 1] = next.mul(self.omega(e).apply(c), w.coeffs[i + 1]);
        }
    }

    pub fn multiply(&self, a: &GWord, b: &GWord) -> Result<GWord, WordError> {
        let end = self.end(a);
        if end != b.start {
            return Err(WordError::BaseMismatch {
                end,
                start: b.start,
            });
        }
        let mut coeffs = a.coeffs.clone();
        let mut edges = a.edges.clone();
        let group = self.vertex_group(end);
        let last = coeffs.last_mut().unwrap();
        *last = group.mul(*last, b.coeffs[0]);
        for (&e, &g) in b.edges.iter().zip(&b.coeffs[1..]) {
            self.push_syllable(&mut coeffs, &mut edges, e, g);
        }
        // `a` alone may not be reduced; a full pass keeps the result canonical.
        Ok(self.normal_form(&GWord {
            start: a.start,
            coeffs,
            edges,
        }))
    }

    pub fn invert(&self, a: &GWord) -> GWord {
        let mut v = a.start;
        let groups: Vec<&FiniteGroup> = std::iter::once(v)
            .chain(a.edges.iter().map(|&e| {
                v = self.y.dst(e);
                v
            }))
            .map(|v| self.vertex_group(v))
            .collect();
        let coeffs = a
            .coeffs
            .iter()
            .zip(&groups)
            .rev()
            .map(|(&g, grp)| grp.inv(g))
            .collect();
        let edges = a.edges.iter().rev().map(|&e| e ^ 1).collect();
        self.normal_form(&GWord {
            start: self.end(a),
            coeffs,
            edges,
        })
    }

    pub fn equal(&self, a: &GWord, b: &GWord) -> bool {
        a.start == b.start && self.normal_form(a) == self.normal_form(b)
    }

    pub fn is_identity(&self, w: &GWord) -> bool {
        let n = self.normal_form(w);
        n.edges.is_empty() && n.coeffs[0] == 0
    }

    /// The path in `Y` underlying a word, with identity coefficients.
    pub fn path_word(&self, p: &Path) -> GWord {
        GWord {
            start: p.start,
            coeffs: vec![0; p.edges.len() + 1],
            edges: p.edges.clone(),
        }
    }

    /// Converts a word over vertex-group letters and stable letters into a
    /// based loop: `(v, g) ↦ r_v·g·r_v⁻¹` and `t_e ↦ r_{src e}·e·r_{dst e}⁻¹`,
    /// where `r_v` is the spanning-tree path from the base vertex.
    pub fn from_spres(&self, w: &SPresWord) -> Result<GWord, WordError> {
        let mut acc = self.identity();
        for letter in &w.letters {
            let piece = match *letter {
                SPresLetter::Vertex { vertex, element } => {
                    if vertex >= self.y.num_vertices() {
                        return Err(WordError::UnknownVertex(vertex));
                    }
                    if element >= self.vertex_group(vertex).order() {
                        return Err(WordError::UnknownElement { vertex, element });
                    }
                    let r = self.path_word(&self.spanning.path_to(&self.y, vertex));
                    let mut mid = GWord::vertex_element(vertex, element);
                    mid = self.multiply(&r, &mid)?;
                    self.multiply(&mid, &self.invert(&r))?
                }
                SPresLetter::Stable { pair, inverse } => {
                    if pair >= self.y.num_positive_edges() {
                        return Err(WordError::UnknownEdge(pair));
                    }
                    let e = if inverse { 2 * pair + 1 } else { 2 * pair };
                    let mut edges = self.spanning.path_to(&self.y, self.y.src(e)).edges;
                    edges.push(e);
                    let back = self.spanning.path_to(&self.y, self.y.dst(e)).edges;
                    edges.extend(back.iter().rev().map(|&f| f ^ 1));
                    self.normal_form(&self.path_word(&Path {
                        start: self.base,
                        edges,
                    }))
                }
            };
            acc = self.multiply(&acc, &piece)?;
        }
        Ok(acc)
    }

    /// Inverse of [`from_spres`](Self::from_spres) on based loops: tree edges
    /// become trivial stable letters and identity coefficients are dropped.
    pub fn to_spres(&self, w: &GWord) -> SPresWord {
        let mut letters = Vec::new();
        let mut at = w.start;
        for (i, &g) in w.coeffs.iter().enumerate() {
            if g != 0 {
                letters.push(SPresLetter::Vertex {
                    vertex: at,
                    element: g,
                });
            }
            if let Some(&e) = w.edges.get(i) {
                if !self.spanning.contains(e) {
                    letters.push(SPresLetter::Stable {
                        pair: e >> 1,
                        inverse: e & 1 == 1,
                    });
                }
                at = self.y.dst(e);
            }
        }
        SPresWord { letters }
    }

    /// For each `k ≤ max_edges`, the number of normal-form based loops with
    /// exactly `k` edges; plus the completion table used for sampling.
    fn loop_counts(&self, max_edges: usize) -> LoopCounts {
        let ne = self.y.num_edges();
        let nv = self.y.num_vertices();
        // completions[k][state]: state = edge just crossed (0..ne) or `ne + v` at start.
        let mut completions = vec![vec![0u128; ne + nv]; max_edges + 1];
        let vertex_of = |state: usize| {
            if state < ne {
                self.y.dst(state)
            } else {
                state - ne
            }
        };
        for (state, slot) in completions[0].iter_mut().enumerate() {
            let v = vertex_of(state);
            if v == self.base {
                *slot = self.vertex_group(v).order() as u128;
            }
        }
        for k in 1..=max_edges {
            for state in 0..ne + nv {
                let v = vertex_of(state);
                let last = (state < ne).then_some(state);
                let mut total = 0u128;
                for &e in self.y.out_edges(v) {
                    let choices = self.coefficient_choices(last, e);
                    total = total.saturating_add(choices.saturating_mul(completions[k - 1][e]));
                }
                completions[k][state] = total;
            }
        }
        LoopCounts { completions, ne }
    }

    fn coefficient_choices(&self, last: Option<EdgeId>, e: EdgeId) -> u128 {
        let reps = self.alpha(e).left_transversal().len() as u128;
        if last == Some(e ^ 1) {
            reps - 1
        } else {
            reps
        }
    }

    /// Number of normal-form based loops with exactly `k` edges, `k = 0..=max_edges`.
    pub fn count_normal_loops(&self, max_edges: usize) -> Vec<u128> {
        let lc = self.loop_counts(max_edges);
        (0..=max_edges)
            .map(|k| lc.completions[k][lc.ne + self.base])
            .collect()
    }

    /// A uniformly random normal-form based loop with at most `max_edges` edges.
    pub fn random_element(&self, max_edges: usize, seed: u64) -> GWord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_element_with(max_edges, &mut rng)
    }

    pub fn random_element_with<R: Rng + ?Sized>(&self, max_edges: usize, rng: &mut R) -> GWord {
        let lc = self.loop_counts(max_edges);
        let start_state = lc.ne + self.base;
        let weights: Vec<u128> = (0..=max_edges).map(|k| lc.completions[k][start_state]).collect();
        let k = pick_weighted(rng, &weights);
        self.sample_loop(&lc, k, rng)
    }

    /// A uniformly random normal-form based loop with exactly `edges` edges, if any exist.
    pub fn random_element_of_length<R: Rng + ?Sized>(&self, edges: usize, rng: &mut R) -> Option<GWord> {
        let lc = self.loop_counts(edges);
        (lc.completions[edges][lc.ne + self.base] > 0).then(|| self.sample_loop(&lc, edges, rng))
    }

    fn sample_loop<R: Rng + ?Sized>(&self, lc: &LoopCounts, k: usize, rng: &mut R) -> GWord {
        let mut state = lc.ne + self.base;
        let mut w = GWord::vertex_element(self.base, 0);
        for remaining in (1..=k).rev() {
            let v = w.end_vertex(&self.y);
            let last = (state < lc.ne).then_some(state);
            let out = self.y.out_edges(v);
            let weights: Vec<u128> = out
                .iter()
                .map(|&e| {
                    self.coefficient_choices(last, e)
                        .saturating_mul(lc.completions[remaining - 1][e])
                })
                .collect();
            let e = out[pick_weighted(rng, &weights)];
            let reps: Vec<Elem> = self
                .alpha(e)
                .left_transversal()
                .iter()
                .copied()
                .filter(|&t| !(last == Some(e ^ 1) && t == 0))
                .collect();
            *w.coeffs.last_mut().unwrap() = reps[rng.random_range(0..reps.len())];
            w.edges.push(e);
            w.coeffs.push(0);
            state = e;
        }
        let order = self.vertex_group(self.base).order();
        *w.coeffs.last_mut().unwrap() = rng.random_range(0..order);
        w
    }

    /// Visits every normal-form based loop with at most `max_edges` edges.
    pub fn for_each_normal_loop(&self, max_edges: usize, mut f: impl FnMut(&GWord)) {
        let mut w = self.identity();
        self.visit_loops(&mut w, None, max_edges, &mut f);
    }

    fn visit_loops(
        &self,
        w: &mut GWord,
        last: Option<EdgeId>,
        budget: usize,
        f: &mut impl FnMut(&GWord),
    ) {
        let v = w.end_vertex(&self.y);
        if v == self.base {
            for g in self.vertex_group(v).elements() {
                *w.coeffs.last_mut().unwrap() = g;
                f(w);
            }
        }
        if budget == 0 {
            return;
        }
        for &e in self.y.out_edges(v) {
            for &t in self.alpha(e).left_transversal() {
                if last == Some(e ^ 1) && t == 0 {
                    continue;
                }
                *w.coeffs.last_mut().unwrap() = t;
                w.edges.push(e);
                w.coeffs.push(0);
                self.visit_loops(w, Some(e), budget - 1, f);
                w.edges.pop();
                w.coeffs.pop();
            }
        }
        *w.coeffs.last_mut().unwrap() = 0;
    }

    /// Human-readable rendering using element names where available.
    pub fn display_word(&self, w: &GWord) -> String {
        let mut parts = Vec::new();
        let mut at = w.start;
        for (i, &g) in w.coeffs.iter().enumerate() {
            if g != 0 || w.edges.is_empty() {
                parts.push(format!("{}:{}", at, self.vertex_group(at).name(g)));
            }
            if let Some(&e) = w.edges.get(i) {
                parts.push(format!("e{}{}", e >> 1, if e & 1 == 0 { "+" } else { "-" }));
                at = self.y.dst(e);
            }
        }
        parts.join(" ")
    }
}

struct LoopCounts {
    completions: Vec<Vec<u128>>,
    ne: usize,
}

fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[u128]) -> usize {
    let total: u128 = weights.iter().fold(0u128, |a, &w| a.saturating_add(w));
    assert!(total > 0, "no loops to sample from");
    let mut x = rng.random_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("weighted pick out of range")
}

/// An element in loop form: `g₀ e₁ g₁ … eₙ gₙ` starting at `start`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GWord {
    pub start: VertexId,
    pub coeffs: Vec<Elem>,
    pub edges: Vec<EdgeId>,
}

impl GWord {
    pub fn vertex_element(v: VertexId, g: Elem) -> Self {
        GWord {
            start: v,
            coeffs: vec![g],
            edges: Vec::new(),
        }
    }

    /// Builds a word from its alternating parts; see [`GraphOfGroups::check_word`].
    pub fn from_parts(start: VertexId, coeffs: Vec<Elem>, edges: Vec<EdgeId>) -> Self {
        GWord {
            start,
            coeffs,
            edges,
        }
    }

    /// Number of edge syllables.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end_vertex(&self, y: &SerreGraph) -> VertexId {
        self.edges.last().map_or(self.start, |&e| y.dst(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SPresLetter {
    /// An element of a vertex group.
    Vertex { vertex: VertexId, element: Elem },
    /// `t_e` or `t_e⁻¹` for the `pair`-th positive edge of `Y`.
    Stable { pair: usize, inverse: bool },
}

/// A word in the generators of the presentation of π₁(Γ, Y, S).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SPresWord {
    pub letters: Vec<SPresLetter>,
}

impl SPresWord {
    /// Parses whitespace-separated tokens `v:g`, `k+`, `k-`.
    pub fn parse(s: &str) -> Result<Self, WordError> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let bad = || WordError::Malformed(format!("bad token `{tok}`"));
            if let Some((v, g)) = tok.split_once(':') {
                letters.push(SPresLetter::Vertex {
                    vertex: v.parse().map_err(|_| bad())?,
                    element: g.parse().map_err(|_| bad())?,
                });
            } else if let Some(k) = tok.strip_suffix('+') {
                letters.push(SPresLetter::Stable {
                    pair: k.parse().map_err(|_| bad())?,
                    inverse: false,
                });
            } else if let Some(k) = tok.strip_suffix('-') {
                letters.push(SPresLetter::Stable {
                    pair: k.parse().map_err(|_| bad())?,
                    inverse: true,
                });
            } else {
                return Err(bad());
            }
        }
        Ok(SPresWord { letters })
    }
}

impl fmt::Display for SPresWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match l {
                SPresLetter::Vertex { vertex, element } => write!(f, "{vertex}:{element}")?,
                SPresLetter::Stable { pair, inverse } => {
                    write!(f, "{pair}{}", if *inverse { '-' } else { '+' })?
                }
            }
        }
        Ok(())
    }
}
