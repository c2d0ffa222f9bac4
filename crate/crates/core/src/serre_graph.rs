//! Graphs with an edge involution (every edge paired with its inverse), paths,
//! spanning trees, ranks, cores and exact isomorphism testing.
//!
//! Edges are created in inverse pairs: the pair created `k`-th occupies ids
//! `2k` (positively oriented) and `2k + 1`, so `inv(e) == e ^ 1`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Vertex limit for [`graphs_isomorphic`].
pub const MAX_ISO_VERTICES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is disconnected: no path from vertex {0} to vertex {1}")]
    Disconnected(VertexId, VertexId),
    #[error("path is not closed: starts at {start}, ends at {end}")]
    NotClosed { start: VertexId, end: VertexId },
    #[error("graph is a tree and has an empty core")]
    IsATree,
    #[error("graph has {0} vertices, above the isomorphism limit")]
    TooLarge(usize),
    #[error("graph has no vertices")]
    Empty,
    #[error("edge {edge} does not continue the path at vertex {at}")]
    BrokenPath { edge: EdgeId, at: VertexId },
    #[error("morphism does not commute with the graph structure at {0}")]
    NotAMorphism(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SerreGraph {
    num_vertices: usize,
    src: Vec<VertexId>,
    dst: Vec<VertexId>,
    out: Vec<Vec<EdgeId>>,
}

impl SerreGraph {
    pub fn new(num_vertices: usize) -> Self {
        SerreGraph {
            num_vertices,
            src: Vec::new(),
            dst: Vec::new(),
            out: vec![Vec::new(); num_vertices],
        }
    }

    /// Rose with `k` loops at a single vertex.
    pub fn rose(k: usize) -> Self {
        let mut g = SerreGraph::new(1);
        for _ in 0..k {
            g.add_edge(0, 0);
        }
        g
    }

    /// Cycle on `n ≥ 1` vertices.
    pub fn circle(n: usize) -> Self {
        let mut g = SerreGraph::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n);
        }
        g
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.out.push(Vec::new());
        self.num_vertices += 1;
        self.num_vertices - 1
    }

    /// Adds the positive edge `src → dst` and its inverse; returns the positive id.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId) -> EdgeId {
        assert!(src < self.num_vertices && dst < self.num_vertices);
        let e = self.src.len();
        self.src.push(src);
        self.dst.push(dst);
        self.src.push(dst);
        self.dst.push(src);
        self.out[src].push(e);
        self.out[dst].push(e + 1);
        e
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Number of edges, counting both members of each inverse pair.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    #[inline]
    pub fn num_positive_edges(&self) -> usize {
        self.src.len() / 2
    }

    #[inline]
    pub fn src(&self, e: EdgeId) -> VertexId {
        self.src[e]
    }

    #[inline]
    pub fn dst(&self, e: EdgeId) -> VertexId {
        self.dst[e]
    }

    #[inline]
    pub fn inv(&self, e: EdgeId) -> EdgeId {
        e ^ 1
    }

    #[inline]
    pub fn is_positive(&self, e: EdgeId) -> bool {
        e & 1 == 0
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.num_vertices
    }

    pub fn edges(&self) -> std::ops::Range<EdgeId> {
        0..self.src.len()
    }

    pub fn positive_edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.src.len()).step_by(2)
    }

    /// Edges beginning at `v`, in ascending id order.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out[v]
    }

    /// Number of edges beginning at `v`; a loop contributes 2.
    pub fn degree(&self, v: VertexId) -> usize {
        self.out[v].len()
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices > 0 && self.unreached_from(0).is_none()
    }

    fn unreached_from(&self, root: VertexId) -> Option<VertexId> {
        let mut seen = vec![false; self.num_vertices];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.dst[e];
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    fn require_connected(&self) -> Result<(), GraphError> {
        if self.num_vertices == 0 {
            return Err(GraphError::Empty);
        }
        match self.unreached_from(0) {
            Some(w) => Err(GraphError::Disconnected(0, w)),
            None => Ok(()),
        }
    }

    /// `|E⁺| − |V| + 1` for a finite connected graph.
    pub fn fundamental_rank(&self) -> Result<usize, GraphError> {
        self.require_connected()?;
        Ok(self.num_positive_edges() + 1 - self.num_vertices)
    }

    /// Breadth-first spanning tree from `root`, scanning edges in ascending id order.
    pub fn spanning_tree(&self, root: VertexId) -> Result<SpanningTree, GraphError> {
        if self.num_vertices == 0 {
            return Err(GraphError::Empty);
        }
        let mut parent_edge = vec![None; self.num_vertices];
        let mut seen = vec![false; self.num_vertices];
        let mut in_tree = vec![false; self.num_edges()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.dst[e];
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = Some(e);
                    in_tree[e] = true;
                    in_tree[e ^ 1] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(w) = seen.iter().position(|s| !s) {
            return Err(GraphError::Disconnected(root, w));
        }
        Ok(SpanningTree {
            root,
            parent_edge,
            in_tree,
        })
    }

    /// Free generators `r_src · e · r_dst⁻¹` of π₁(g, root), one per positive
    /// edge outside the tree.
    pub fn free_generator_paths(&self, tree: &SpanningTree) -> Vec<Path> {
        self.positive_edges()
            .filter(|&e| !tree.contains(e))
            .map(|e| {
                let mut edges = tree.path_to(self, self.src(e)).edges;
                edges.push(e);
                let back = tree.path_to(self, self.dst(e));
                edges.extend(back.edges.iter().rev().map(|&f| f ^ 1));
                Path {
                    start: tree.root,
                    edges,
                }
            })
            .collect()
    }

    pub fn check_path(&self, p: &Path) -> Result<(), GraphError> {
        let mut at = p.start;
        for &e in &p.edges {
            if self.src(e) != at {
                return Err(GraphError::BrokenPath { edge: e, at });
            }
            at = self.dst(e);
        }
        Ok(())
    }

    pub fn path_end(&self, p: &Path) -> VertexId {
        p.edges.last().map_or(p.start, |&e| self.dst(e))
    }

    /// Freely reduces `p` by deleting subpaths `e·inv(e)` until none remain.
    pub fn reduce_path(&self, p: &Path) -> Path {
        let mut out: Vec<EdgeId> = Vec::with_capacity(p.edges.len());
        for &e in &p.edges {
            if out.last() == Some(&(e ^ 1)) {
                out.pop();
            } else {
                out.push(e);
            }
        }
        Path {
            start: p.start,
            edges: out,
        }
    }

    pub fn is_reduced(&self, p: &Path) -> bool {
        p.edges.windows(2).all(|w| w[1] != w[0] ^ 1)
    }

    pub fn is_cyclically_reduced(&self, p: &Path) -> Result<bool, GraphError> {
        let end = self.path_end(p);
        if end != p.start {
            return Err(GraphError::NotClosed {
                start: p.start,
                end,
            });
        }
        Ok(match (p.edges.first(), p.edges.last()) {
            (Some(&first), Some(&last)) => self.is_reduced(p) && first != last ^ 1,
            _ => true,
        })
    }

    /// The maximal subgraph of minimum degree ≥ 2, obtained by repeatedly
    /// deleting vertices of degree ≤ 1, together with its embedding into `self`.
    pub fn core(&self) -> Result<(SerreGraph, GraphMorphism), GraphError> {
        self.require_connected()?;
        let mut alive_v = vec![true; self.num_vertices];
        let mut alive_e = vec![true; self.num_edges()];
        let mut deg: Vec<usize> = self.vertices().map(|v| self.degree(v)).collect();
        let mut stack: Vec<VertexId> = self.vertices().filter(|&v| deg[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if !alive_v[v] {
                continue;
            }
            alive_v[v] = false;
            for &e in &self.out[v] {
                if !alive_e[e] {
                    continue;
                }
                alive_e[e] = false;
                alive_e[e ^ 1] = false;
                let w = self.dst[e];
                deg[w] -= 1;
                if alive_v[w] && deg[w] <= 1 {
                    stack.push(w);
                }
            }
        }
        if !alive_v.iter().any(|&a| a) {
            return Err(GraphError::IsATree);
        }
        Ok(self.induced(&alive_v, &alive_e))
    }

    /// Subgraph on the kept vertices and edge pairs, renumbered in ascending order.
    pub fn induced(&self, keep_v: &[bool], keep_e: &[bool]) -> (SerreGraph, GraphMorphism) {
        let mut new_id = vec![usize::MAX; self.num_vertices];
        let mut vertex_map = Vec::new();
        for v in self.vertices().filter(|&v| keep_v[v]) {
            new_id[v] = vertex_map.len();
            vertex_map.push(v);
        }
        let mut sub = SerreGraph::new(vertex_map.len());
        let mut edge_map = Vec::new();
        for e in self.positive_edges().filter(|&e| keep_e[e]) {
            sub.add_edge(new_id[self.src(e)], new_id[self.dst(e)]);
            edge_map.push(e);
            edge_map.push(e ^ 1);
        }
        (
            sub,
            GraphMorphism {
                vertex_map,
                edge_map,
            },
        )
    }

    /// Connected components as vertex lists, each sorted, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let mut comp = vec![usize::MAX; self.num_vertices];
        let mut out = Vec::new();
        for s in self.vertices() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[s] = id;
            let mut members = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &e in &self.out[v] {
                    let w = self.dst[e];
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Subgraph spanned by the component containing `v`.
    pub fn component_of(&self, v: VertexId) -> (SerreGraph, GraphMorphism) {
        let comp = self
            .components()
            .into_iter()
            .find(|c| c.binary_search(&v).is_ok())
            .expect("vertex exists");
        let mut keep_v = vec![false; self.num_vertices];
        for &w in &comp {
            keep_v[w] = true;
        }
        let keep_e: Vec<bool> = self.edges().map(|e| keep_v[self.src(e)]).collect();
        self.induced(&keep_v, &keep_e)
    }

    /// Graphviz rendering: positive edges only, inverse pairs collapsed.
    pub fn to_dot<V, E>(&self, name: &str, vertex_label: V, edge_label: E) -> String
    where
        V: Fn(VertexId) -> String,
        E: Fn(EdgeId) -> EdgeDecoration,
    {
        let mut s = String::new();
        let _ = writeln!(s, "digraph {} {{", dot_id(name));
        for v in self.vertices() {
            let _ = writeln!(s, "  v{} [label={}];", v, dot_string(&vertex_label(v)));
        }
        for e in self.positive_edges() {
            let deco = edge_label(e);
            let mut attrs = Vec::new();
            if let Some(l) = deco.label {
                attrs.push(format!("label={}", dot_string(&l)));
            }
            if let Some(l) = deco.taillabel {
                attrs.push(format!("taillabel={}", dot_string(&l)));
            }
            if let Some(l) = deco.headlabel {
                attrs.push(format!("headlabel={}", dot_string(&l)));
            }
            let _ = write!(s, "  v{} -> v{}", self.src(e), self.dst(e));
            if !attrs.is_empty() {
                let _ = write!(s, " [{}]", attrs.join(", "));
            }
            s.push_str(";\n");
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeDecoration {
    pub label: Option<String>,
    pub taillabel: Option<String>,
    pub headlabel: Option<String>,
}

impl EdgeDecoration {
    pub fn label(l: impl Into<String>) -> Self {
        EdgeDecoration {
            label: Some(l.into()),
            ..Default::default()
        }
    }
}

fn dot_id(name: &str) -> String {
    if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        name.to_string()
    } else {
        dot_string(name)
    }
}

fn dot_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// A path given by its start vertex and edge sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: VertexId,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn trivial(start: VertexId) -> Self {
        Path {
            start,
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: VertexId,
    parent_edge: Vec<Option<EdgeId>>,
    in_tree: Vec<bool>,
}

impl SpanningTree {
    pub fn contains(&self, e: EdgeId) -> bool {
        self.in_tree[e]
    }

    pub fn parent_edge(&self, v: VertexId) -> Option<EdgeId> {
        self.parent_edge[v]
    }

    pub fn positive_edges(&self) -> Vec<EdgeId> {
        (0..self.in_tree.len())
            .step_by(2)
            .filter(|&e| self.in_tree[e])
            .collect()
    }

    /// The reduced tree path from the root to `v`.
    pub fn path_to(&self, g: &SerreGraph, v: VertexId) -> Path {
        let mut edges = Vec::new();
        let mut at = v;
        while let Some(e) = self.parent_edge[at] {
            edges.push(e);
            at = g.src(e);
        }
        edges.reverse();
        Path {
            start: self.root,
            edges,
        }
    }
}

/// Vertex and edge maps between two graphs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphMorphism {
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<EdgeId>,
}

impl GraphMorphism {
    /// Checks that the maps commute with `src`, `dst` and `inv`.
    pub fn check(&self, domain: &SerreGraph, codomain: &SerreGraph) -> Result<(), GraphError> {
        if self.vertex_map.len() != domain.num_vertices()
            || self.edge_map.len() != domain.num_edges()
        {
            return Err(GraphError::NotAMorphism("map sizes".into()));
        }
        for e in domain.edges() {
            let f = self.edge_map[e];
            if f >= codomain.num_edges() {
                return Err(GraphError::NotAMorphism(format!("edge {e} out of range")));
            }
            if codomain.src(f) != self.vertex_map[domain.src(e)]
                || codomain.dst(f) != self.vertex_map[domain.dst(e)]
                || self.edge_map[e ^ 1] != f ^ 1
            {
                return Err(GraphError::NotAMorphism(format!("edge {e}")));
            }
        }
        Ok(())
    }

    /// `None` when locally injective; otherwise two distinct edges with a common
    /// source and a common image.
    pub fn local_injectivity_witness(&self, domain: &SerreGraph) -> Option<(EdgeId, EdgeId)> {
        for v in domain.vertices() {
            let out = domain.out_edges(v);
            for (i, &a) in out.iter().enumerate() {
                for &b in &out[i + 1..] {
                    if self.edge_map[a] == self.edge_map[b] {
                        return Some((a, b));
                    }
                }
            }
        }
        None
    }

    pub fn is_locally_injective(&self, domain: &SerreGraph) -> bool {
        self.local_injectivity_witness(domain).is_none()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            vertex_map: self.vertex_map.iter().map(|&v| next.vertex_map[v]).collect(),
            edge_map: self.edge_map.iter().map(|&e| next.edge_map[e]).collect(),
        }
    }
}

/// Exact isomorphism test respecting `src`, `dst` and `inv`.
pub fn graphs_isomorphic(g1: &SerreGraph, g2: &SerreGraph) -> Result<bool, GraphError> {
    Ok(find_isomorphism(g1, g2)?.is_some())
}

/// A vertex bijection `g1 → g2` preserving edge multiplicities between every
/// ordered vertex pair, if one exists. Any such bijection extends to an
/// isomorphism of graphs with involution.
pub fn find_isomorphism(
    g1: &SerreGraph,
    g2: &SerreGraph,
) -> Result<Option<Vec<VertexId>>, GraphError> {
    for g in [g1, g2] {
        if g.num_vertices() > MAX_ISO_VERTICES {
            return Err(GraphError::TooLarge(g.num_vertices()));
        }
    }
    let n = g1.num_vertices();
    if n != g2.num_vertices() || g1.num_edges() != g2.num_edges() {
        return Ok(None);
    }
    let mult = |g: &SerreGraph| {
        let mut m = vec![0u32; n * n];
        for e in g.edges() {
            m[g.src(e) * n + g.dst(e)] += 1;
        }
        m
    };
    let m1 = mult(g1);
    let m2 = mult(g2);
    let sig = |g: &SerreGraph, m: &[u32], v: VertexId| (g.degree(v), m[v * n + v]);
    let mut s1: Vec<_> = g1.vertices().map(|v| sig(g1, &m1, v)).collect();
    let mut s2: Vec<_> = g2.vertices().map(|v| sig(g2, &m2, v)).collect();
    let sig1 = s1.clone();
    let sig2 = s2.clone();
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return Ok(None);
    }

    // Assign g1's vertices in BFS order so each new vertex is constrained by
    // an already mapped neighbour whenever possible.
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for s in g1.vertices() {
        if placed[s] {
            continue;
        }
        placed[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &e in g1.out_edges(v) {
                let w = g1.dst(e);
                if !placed[w] {
                    placed[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }

    struct Search<'a> {
        n: usize,
        order: &'a [VertexId],
        m1: &'a [u32],
        m2: &'a [u32],
        sig1: &'a [(usize, u32)],
        sig2: &'a [(usize, u32)],
        map: Vec<usize>,
        used: Vec<bool>,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize) -> bool {
            if depth == self.order.len() {
                return true;
            }
            let v = self.order[depth];
            for c in 0..self.n {
                if self.used[c] || self.sig1[v] != self.sig2[c] {
                    continue;
                }
                let consistent = self.order[..depth].iter().all(|&u| {
                    let fu = self.map[u];
                    self.m1[v * self.n + u] == self.m2[c * self.n + fu]
                        && self.m1[u * self.n + v] == self.m2[fu * self.n + c]
                });
                if !consistent {
                    continue;
                }
                self.map[v] = c;
                self.used[c] = true;
                if self.go(depth + 1) {
                    return true;
                }
                self.used[c] = false;
            }
            false
        }
    }

    let mut search = Search {
        n,
        order: &order,
        m1: &m1,
        m2: &m2,
        sig1: &sig1,
        sig2: &sig2,
        map: vec![usize::MAX; n],
        used: vec![false; n],
    };
    Ok(if search.go(0) { Some(search.map) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_graph(n: usize) -> SerreGraph {
        let mut g = SerreGraph::new(n);
        for i in 1..n {
            g.add_edge(i - 1, i);
        }
        g
    }

    fn theta() -> SerreGraph {
        let mut g = SerreGraph::new(2);
        for _ in 0..3 {
            g.add_edge(0, 1);
        }
        g
    }

    #[test]
    fn reduce_examples() {
        let g = circle_with_tail();
        let p = Path {
            start: 0,
            edges: vec![0, 1],
        };
        assert_eq!(g.reduce_path(&p), Path::trivial(0));

        let q = Path {
            start: 0,
            edges: vec![0, 2],
        };
        assert_eq!(g.reduce_path(&q), q);

        // e1 e2 inv(e2) inv(e1) e3 → e3
        let mut h = SerreGraph::new(3);
        let e1 = h.add_edge(0, 1);
        let e2 = h.add_edge(1, 2);
        let e3 = h.add_edge(0, 2);
        let p = Path {
            start: 0,
            edges: vec![e1, e2, e2 ^ 1, e1 ^ 1, e3],
        };
        h.check_path(&p).unwrap();
        assert_eq!(h.reduce_path(&p).edges, vec![e3]);
    }

    // Triangle 0-1-2 with a pendant vertex 3 hanging off 0.
    fn circle_with_tail() -> SerreGraph {
        let mut g = SerreGraph::circle(3);
        let t = g.add_vertex();
        g.add_edge(0, t);
        g
    }

    #[test]
    fn cyclic_reduction() {
        let g = SerreGraph::rose(2);
        assert!(g.is_cyclically_reduced(&Path::trivial(0)).unwrap());
        assert!(!g
            .is_cyclically_reduced(&Path {
                start: 0,
                edges: vec![0, 1]
            })
            .unwrap());
        assert!(g
            .is_cyclically_reduced(&Path {
                start: 0,
                edges: vec![0, 2]
            })
            .unwrap());
        let p = path_graph(2);
        assert_eq!(
            p.is_cyclically_reduced(&Path {
                start: 0,
                edges: vec![0]
            }),
            Err(GraphError::NotClosed { start: 0, end: 1 })
        );
    }

    #[test]
    fn spanning_tree_examples() {
        assert!(SerreGraph::new(1).spanning_tree(0).unwrap().positive_edges().is_empty());
        assert!(SerreGraph::rose(3).spanning_tree(0).unwrap().positive_edges().is_empty());
        assert_eq!(
            path_graph(3).spanning_tree(0).unwrap().positive_edges(),
            vec![0, 2]
        );
        let mut g = SerreGraph::new(3);
        g.add_edge(0, 1);
        assert_eq!(g.spanning_tree(0), Err(GraphError::Disconnected(0, 2)));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(SerreGraph::rose(2).fundamental_rank(), Ok(2));
        assert_eq!(path_graph(5).fundamental_rank(), Ok(0));
        // |E⁺| = 5, |V| = 3
        let mut g = SerreGraph::new(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 0);
        g.add_edge(0, 0);
        g.add_edge(1, 2);
        assert_eq!(g.fundamental_rank(), Ok(3));
    }

    #[test]
    fn core_examples() {
        let c = SerreGraph::circle(4);
        let (core, emb) = c.core().unwrap();
        assert_eq!(core, c);
        assert_eq!(emb.vertex_map, vec![0, 1, 2, 3]);

        let (core, emb) = circle_with_tail().core().unwrap();
        assert!(graphs_isomorphic(&core, &SerreGraph::circle(3)).unwrap());
        emb.check(&core, &circle_with_tail()).unwrap();

        assert_eq!(path_graph(4).core(), Err(GraphError::IsATree));
    }

    #[test]
    fn theta_with_tail_core_matches_path_enumeration() {
        let mut g = theta();
        let a = g.add_vertex();
        let b = g.add_vertex();
        g.add_edge(1, a);
        g.add_edge(a, b);
        let (core, emb) = g.core().unwrap();
        assert!(graphs_isomorphic(&core, &theta()).unwrap());
        let (vs, es) = cyclic_path_union(&g, 6);
        let mut cv = emb.vertex_map.clone();
        cv.sort_unstable();
        let mut ce = emb.edge_map.clone();
        ce.sort_unstable();
        assert_eq!(cv, vs);
        assert_eq!(ce, es);
    }

    #[test]
    fn free_generator_examples() {
        let tree = path_graph(4);
        let t = tree.spanning_tree(0).unwrap();
        assert!(tree.free_generator_paths(&t).is_empty());

        let rose = SerreGraph::rose(2);
        let t = rose.spanning_tree(0).unwrap();
        let gens = rose.free_generator_paths(&t);
        assert_eq!(
            gens,
            vec![
                Path {
                    start: 0,
                    edges: vec![0]
                },
                Path {
                    start: 0,
                    edges: vec![2]
                }
            ]
        );

        let th = theta();
        let t = th.spanning_tree(0).unwrap();
        assert_eq!(t.positive_edges(), vec![0]);
        let gens = th.free_generator_paths(&t);
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[0].edges, vec![2, 1]);
        assert_eq!(gens[1].edges, vec![4, 1]);
        for p in &gens {
            th.check_path(p).unwrap();
            assert!(th.is_reduced(p));
            assert_eq!(th.path_end(p), 0);
        }
    }

    #[test]
    fn degree_examples() {
        let mut g = SerreGraph::new(2);
        g.add_edge(0, 0);
        assert_eq!(g.degree(1), 0);
        assert_eq!(g.degree(0), 2);
        assert_eq!(SerreGraph::circle(5).degree(3), 2);
    }

    #[test]
    fn local_injectivity_examples() {
        let th = theta();
        let id = GraphMorphism {
            vertex_map: vec![0, 1],
            edge_map: th.edges().collect(),
        };
        id.check(&th, &th).unwrap();
        assert!(id.is_locally_injective(&th));

        // fold the first two parallel edges together
        let fold = GraphMorphism {
            vertex_map: vec![0, 1],
            edge_map: vec![0, 1, 0, 1, 4, 5],
        };
        fold.check(&th, &th).unwrap();
        assert_eq!(fold.local_injectivity_witness(&th), Some((0, 2)));

        // double cover of a circle of length 1 by a circle of length 2
        let c2 = SerreGraph::circle(2);
        let c1 = SerreGraph::circle(1);
        let cover = GraphMorphism {
            vertex_map: vec![0, 0],
            edge_map: vec![0, 1, 0, 1],
        };
        cover.check(&c2, &c1).unwrap();
        assert!(cover.is_locally_injective(&c2));
    }

    #[test]
    fn isomorphism_examples() {
        let th = theta();
        assert!(graphs_isomorphic(&th, &th).unwrap());
        assert!(!graphs_isomorphic(&SerreGraph::rose(2), &SerreGraph::circle(2)).unwrap());
        // theta with vertices swapped and edges listed in a different orientation
        let mut th2 = SerreGraph::new(2);
        th2.add_edge(1, 0);
        th2.add_edge(0, 1);
        th2.add_edge(1, 0);
        assert!(graphs_isomorphic(&th, &th2).unwrap());
        let big = SerreGraph::new(65);
        assert_eq!(graphs_isomorphic(&big, &big), Err(GraphError::TooLarge(65)));
    }

    #[test]
    fn dot_export_collapses_pairs() {
        let dot = SerreGraph::rose(2).to_dot("rose", |v| format!("v{v}"), |e| {
            EdgeDecoration::label(format!("e{e}"))
        });
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("v0 -> v0 [label=\"e2\"]"));
    }

    /// Union of vertices/edges lying on some nontrivial cyclically reduced closed
    /// path of length ≤ `max_len`, by exhaustive enumeration.
    fn cyclic_path_union(g: &SerreGraph, max_len: usize) -> (Vec<VertexId>, Vec<EdgeId>) {
        let mut on_v = vec![false; g.num_vertices()];
        let mut on_e = vec![false; g.num_edges()];
        fn dfs(
            g: &SerreGraph,
            start: VertexId,
            path: &mut Vec<EdgeId>,
            max_len: usize,
            on_v: &mut [bool],
            on_e: &mut [bool],
        ) {
            let at = path.last().map_or(start, |&e| g.dst(e));
            if !path.is_empty() && at == start && path[0] != path[path.len() - 1] ^ 1 {
                for &e in path.iter() {
                    on_e[e] = true;
                    on_v[g.src(e)] = true;
                }
            }
            if path.len() == max_len {
                return;
            }
            for &e in g.out_edges(at) {
                if path.last() == Some(&(e ^ 1)) {
                    continue;
                }
                path.push(e);
                dfs(g, start, path, max_len, on_v, on_e);
                path.pop();
            }
        }
        for s in g.vertices() {
            dfs(g, s, &mut Vec::new(), max_len, &mut on_v, &mut on_e);
        }
        (
            g.vertices().filter(|&v| on_v[v]).collect(),
            g.edges().filter(|&e| on_e[e]).collect(),
        )
    }

    /// Edge `e` lies on a cyclically reduced closed path iff some edge `f` with
    /// `dst(f) = src(e)`, `f ≠ inv(e)` is reachable from `e` by non-backtracking steps.
    fn non_backtracking_core(g: &SerreGraph) -> (Vec<VertexId>, Vec<EdgeId>) {
        let mut on_e = vec![false; g.num_edges()];
        for e in g.edges() {
            let mut seen = vec![false; g.num_edges()];
            seen[e] = true;
            let mut queue = VecDeque::from([e]);
            while let Some(f) = queue.pop_front() {
                if g.dst(f) == g.src(e) && f != e ^ 1 {
                    on_e[e] = true;
                    break;
                }
                for &h in g.out_edges(g.dst(f)) {
                    if h != f ^ 1 && !seen[h] {
                        seen[h] = true;
                        queue.push_back(h);
                    }
                }
            }
        }
        let mut on_v = vec![false; g.num_vertices()];
        for e in g.edges().filter(|&e| on_e[e]) {
            on_v[g.src(e)] = true;
        }
        (
            g.vertices().filter(|&v| on_v[v]).collect(),
            g.edges().filter(|&e| on_e[e]).collect(),
        )
    }

    fn arb_connected_graph(max_v: usize, max_extra: usize) -> impl Strategy<Value = SerreGraph> {
        (1..=max_v).prop_flat_map(move |n| {
            let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n), 0..=max_extra);
            (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
                let mut g = SerreGraph::new(n);
                for (i, p) in parents.iter().enumerate() {
                    let v = i + 1;
                    g.add_edge(p.index(v), v);
                }
                for (a, b) in extra {
                    g.add_edge(a, b);
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn rank_is_spanning_tree_independent(g in arb_connected_graph(8, 6), root in 0usize..8) {
            let root = root % g.num_vertices();
            let t = g.spanning_tree(root).unwrap();
            let r = g.fundamental_rank().unwrap();
            prop_assert_eq!(r, g.num_positive_edges() - t.positive_edges().len());
            prop_assert_eq!(g.free_generator_paths(&t).len(), r);
        }

        #[test]
        fn degree_sum_is_twice_positive_edges(g in arb_connected_graph(8, 6)) {
            let total: usize = g.vertices().map(|v| g.degree(v)).sum();
            prop_assert_eq!(total, 2 * g.num_positive_edges());
        }

        #[test]
        fn core_properties(g in arb_connected_graph(7, 4)) {
            match g.core() {
                Err(GraphError::IsATree) => prop_assert_eq!(g.fundamental_rank().unwrap(), 0),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
                Ok((core, emb)) => {
                    emb.check(&core, &g).unwrap();
                    prop_assert!(core.vertices().all(|v| core.degree(v) >= 2));
                    prop_assert!(core.is_connected());
                    prop_assert_eq!(core.fundamental_rank(), g.fundamental_rank());
                    let (again, _) = core.core().unwrap();
                    prop_assert_eq!(&again, &core);
                    let mut vs = emb.vertex_map.clone();
                    vs.sort_unstable();
                    let mut es = emb.edge_map.clone();
                    es.sort_unstable();
                    prop_assert_eq!((vs, es), non_backtracking_core(&g));
                }
            }
        }

        #[test]
        fn small_cores_match_path_enumeration(g in arb_connected_graph(4, 3)) {
            prop_assume!(g.num_positive_edges() <= 6);
            let expected = match g.core() {
                Ok((_, emb)) => {
                    let mut vs = emb.vertex_map.clone();
                    vs.sort_unstable();
                    let mut es = emb.edge_map.clone();
                    es.sort_unstable();
                    (vs, es)
                }
                Err(_) => (vec![], vec![]),
            };
            prop_assert_eq!(cyclic_path_union(&g, 2 * g.num_positive_edges() + 2), expected);
        }

        #[test]
        fn free_generators_are_reduced_loops(g in arb_connected_graph(6, 5)) {
            let t = g.spanning_tree(0).unwrap();
            for p in g.free_generator_paths(&t) {
                g.check_path(&p).unwrap();
                prop_assert!(g.is_reduced(&p));
                prop_assert_eq!(g.path_end(&p), 0);
                prop_assert_eq!(g.reduce_path(&p), p);
            }
        }

        #[test]
        fn relabelled_graphs_are_isomorphic(g in arb_connected_graph(7, 5), seed in any::<u64>()) {
            let n = g.num_vertices();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut h = SerreGraph::new(n);
            for e in g.positive_edges().collect::<Vec<_>>().into_iter().rev() {
                if e % 4 == 0 {
                    h.add_edge(perm[g.dst(e)], perm[g.src(e)]);
                } else {
                    h.add_edge(perm[g.src(e)], perm[g.dst(e)]);
                }
            }
            prop_assert!(graphs_isomorphic(&g, &h).unwrap());
        }
    }
}
