//! Subgroup graphs Δ(H) of free-acting subgroups, built by folding.
//!
//! A block is a vertex of the quotient of the Bass–Serre tree by `H`, carried
//! together with its full fiber: the elements of the vertex group of its type,
//! on which `G_v` acts on the right. A packet of type `e` joins two blocks and
//! stands for the `G_e`-orbit of transitions `(x·α_e(c), y·ω_e(c))`.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::finite_group::{Elem, FiniteGroup};
use crate::graph_of_groups::{GWord, GraphOfGroups};
use crate::serre_graph::{EdgeDecoration, EdgeId, GraphMorphism, SerreGraph, VertexId};

pub type BlockId = usize;
pub type PacketId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("generator {0} is the identity")]
    IdentityGenerator(usize),
    #[error("generator {0} is not a loop at the base vertex")]
    NotALoop(usize),
    #[error(
        "subgroup does not act freely: element {element} of the group at vertex {vertex} \
         fixes a tree vertex"
    )]
    FreeActionViolation { vertex: VertexId, element: Elem },
}

/// One `G_e`-orbit of transitions from block `src` to block `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Packet {
    pub edge: EdgeId,
    pub src: BlockId,
    pub src_anchor: Elem,
    pub dst: BlockId,
    pub dst_anchor: Elem,
}

/// Packets come in mirror pairs `2k`, `2k + 1`, like edges of a Serre graph.
#[derive(Debug, Clone)]
pub struct BlockGraph {
    gog: Arc<GraphOfGroups>,
    block_type: Vec<VertexId>,
    packets: Vec<Packet>,
    folded: bool,
    lookup: HashMap<(BlockId, EdgeId, Elem), PacketId>,
}

impl PartialEq for BlockGraph {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.gog, &other.gog)
            && self.folded == other.folded
            && self.block_type == other.block_type
            && self.packets == other.packets
    }
}

impl Eq for BlockGraph {}

/// The core Ψ of a subgroup graph and its rank data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreData {
    /// Empty when the subgroup is trivial.
    pub psi: SerreGraph,
    /// Ψ into the full block graph.
    pub embedding: GraphMorphism,
    pub rank: usize,
    pub reduced_rank: usize,
    pub degrees: Vec<usize>,
}

impl CoreData {
    pub fn is_trivial(&self) -> bool {
        self.rank == 0
    }
}

/// The least transition pair of the orbit through `(x, y)`.
fn canonical_anchor(gog: &GraphOfGroups, e: EdgeId, x: Elem, y: Elem) -> (Elem, Elem) {
    let src = gog.vertex_group(gog.graph().src(e));
    let dst = gog.vertex_group(gog.graph().dst(e));
    gog.edge_group(e)
        .elements()
        .map(|c| {
            (
                src.mul(x, gog.alpha(e).apply(c)),
                dst.mul(y, gog.omega(e).apply(c)),
            )
        })
        .min()
        .expect("edge groups are nonempty")
}

/// One chain of fresh blocks per generator, each closing back at the basepoint.
pub fn wedge(gog: &Arc<GraphOfGroups>, generators: &[GWord]) -> Result<BlockGraph, FoldError> {
    let base = gog.base();
    let mut block_type = vec![base];
    let mut packets = Vec::new();
    for (i, w) in generators.iter().enumerate() {
        if !gog.is_loop(w) || gog.check_word(w).is_err() {
            return Err(FoldError::NotALoop(i));
        }
        let w = gog.normal_form(w);
        if w.edges.is_empty() {
            if w.coeffs[0] == 0 {
                return Err(FoldError::IdentityGenerator(i));
            }
            return Err(FoldError::FreeActionViolation {
                vertex: base,
                element: w.coeffs[0],
            });
        }
        let n = w.edges.len();
        let mut at = 0;
        for (k, &e) in w.edges.iter().enumerate() {
            let (to, y) = if k + 1 == n {
                (0, gog.vertex_group(base).inv(w.coeffs[n]))
            } else {
                block_type.push(gog.graph().dst(e));
                (block_type.len() - 1, 0)
            };
            push_pair(gog, &mut packets, e, at, w.coeffs[k], to, y);
            at = to;
        }
    }
    let mut b = BlockGraph {
        gog: gog.clone(),
        block_type,
        packets,
        folded: false,
        lookup: HashMap::new(),
    };
    b.rebuild_lookup();
    Ok(b)
}

fn push_pair(
    gog: &GraphOfGroups,
    packets: &mut Vec<Packet>,
    e: EdgeId,
    src: BlockId,
    x: Elem,
    dst: BlockId,
    y: Elem,
) {
    let (x, y) = canonical_anchor(gog, e, x, y);
    let (y2, x2) = canonical_anchor(gog, e ^ 1, y, x);
    packets.push(Packet {
        edge: e,
        src,
        src_anchor: x,
        dst,
        dst_anchor: y,
    });
    packets.push(Packet {
        edge: e ^ 1,
        src: dst,
        src_anchor: y2,
        dst: src,
        dst_anchor: x2,
    });
}

/// Folds the wedge of `generators`: the subgroup graph Δ(H) of `H = ⟨generators⟩`.
pub fn subgroup_graph(
    gog: &Arc<GraphOfGroups>,
    generators: &[GWord],
) -> Result<BlockGraph, FoldError> {
    wedge(gog, generators)?.fold()
}

impl BlockGraph {
    pub fn gog(&self) -> &Arc<GraphOfGroups> {
        &self.gog
    }

    pub fn num_blocks(&self) -> usize {
        self.block_type.len()
    }

    /// Number of packets, mirrors included.
    pub fn num_packets(&self) -> usize {
        self.packets.len()
    }

    pub fn block_type(&self, b: BlockId) -> VertexId {
        self.block_type[b]
    }

    pub fn block_types(&self) -> &[VertexId] {
        &self.block_type
    }

    pub fn packet(&self, p: PacketId) -> &Packet {
        &self.packets[p]
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn mirror(&self, p: PacketId) -> PacketId {
        p ^ 1
    }

    /// Block of the basepoint `(B₀, 0)`.
    pub fn base_block(&self) -> BlockId {
        0
    }

    pub fn is_folded(&self) -> bool {
        self.folded
    }

    /// Packets leaving `b`, the loop convention counting a loop pair twice.
    pub fn degree(&self, b: BlockId) -> usize {
        self.packets.iter().filter(|p| p.src == b).count()
    }

    /// Underlying graph: blocks as vertices, packet `p` as edge `p`.
    pub fn graph(&self) -> SerreGraph {
        let mut g = SerreGraph::new(self.num_blocks());
        for p in self.packets.iter().step_by(2) {
            g.add_edge(p.src, p.dst);
        }
        g
    }

    /// Map of the underlying graph onto `Y` by types.
    pub fn type_morphism(&self) -> GraphMorphism {
        GraphMorphism {
            vertex_map: self.block_type.clone(),
            edge_map: self.packets.iter().map(|p| p.edge).collect(),
        }
    }

    fn rebuild_lookup(&mut self) {
        self.lookup.clear();
        for (id, p) in self.packets.iter().enumerate() {
            let rep = self.gog.alpha(p.edge).coset_rep(p.src_anchor);
            self.lookup.entry((p.src, p.edge, rep)).or_insert(id);
        }
    }

    /// The packet of type `e` whose source set contains `(b, z)`.
    pub fn packet_at(&self, b: BlockId, e: EdgeId, z: Elem) -> Option<PacketId> {
        let rep = self.gog.alpha(e).coset_rep(z);
        self.lookup.get(&(b, e, rep)).copied()
    }

    /// Crossing packet `p` from element `z` of its source block.
    pub fn transition(&self, p: PacketId, z: Elem) -> Elem {
        let pk = &self.packets[p];
        let g = self.gog.vertex_group(self.block_type[pk.src]);
        let c = self
            .gog
            .alpha(pk.edge)
            .preimage(g.mul(g.inv(pk.src_anchor), z))
            .expect("element lies in the packet's source set");
        let h = self.gog.vertex_group(self.block_type[pk.dst]);
        h.mul(pk.dst_anchor, self.gog.omega(pk.edge).apply(c))
    }

    /// Traces `w` from `start`; `None` when some transition is missing.
    pub fn trace(&self, start: (BlockId, Elem), w: &GWord) -> Option<(BlockId, Elem)> {
        let (mut b, mut z) = start;
        for (i, &g) in w.coeffs.iter().enumerate() {
            z = self.gog.vertex_group(self.block_type[b]).mul(z, g);
            if let Some(&e) = w.edges.get(i) {
                let p = self.packet_at(b, e, z)?;
                z = self.transition(p, z);
                b = self.packets[p].dst;
            }
        }
        Some((b, z))
    }

    /// Whether the based loop `w` lies in the subgroup. Requires a folded graph.
    pub fn member(&self, w: &GWord) -> bool {
        debug_assert!(self.folded, "membership needs a folded graph");
        if !self.gog.is_loop(w) {
            return false;
        }
        let w = self.gog.normal_form(w);
        self.trace((0, 0), &w) == Some((0, 0))
    }

    /// Folds until packets out of every element are unique per edge type.
    pub fn fold(&self) -> Result<BlockGraph, FoldError> {
        self.fold_with_order(&(0..self.packets.len()).collect::<Vec<_>>())
    }

    /// As [`fold`](Self::fold), with packets first queued in the given order.
    pub fn fold_with_order(&self, order: &[PacketId]) -> Result<BlockGraph, FoldError> {
        let mut f = Folder::new(self);
        f.queue.extend(order.iter().copied());
        f.queue.extend(0..self.packets.len());
        f.run()?;
        Ok(f.canonicalize())
    }

    /// Ψ: the core of the underlying graph, with rank data.
    pub fn core(&self) -> CoreData {
        let g = self.graph();
        let rank = g.fundamental_rank().expect("subgroup graphs are connected");
        if rank == 0 {
            return CoreData {
                psi: SerreGraph::new(0),
                embedding: GraphMorphism::default(),
                rank: 0,
                reduced_rank: 0,
                degrees: Vec::new(),
            };
        }
        let (psi, embedding) = g.core().expect("graph of positive rank has a core");
        let degrees = psi.vertices().map(|v| psi.degree(v)).collect();
        let reduced_rank = psi.num_positive_edges() - psi.num_vertices();
        CoreData {
            psi,
            embedding,
            rank,
            reduced_rank,
            degrees,
        }
    }

    /// One based loop per positive packet outside a BFS spanning tree.
    pub fn free_generators(&self) -> Vec<GWord> {
        let g = self.graph();
        let tree = g.spanning_tree(0).expect("subgroup graphs are connected");
        let mut out = Vec::new();
        for p in g.positive_edges().filter(|&p| !tree.contains(p)) {
            let mut edges = tree.path_to(&g, g.src(p)).edges;
            edges.push(p);
            let back = tree.path_to(&g, g.dst(p)).edges;
            edges.extend(back.iter().rev().map(|&q| q ^ 1));
            out.push(self.spell(&edges));
        }
        out
    }

    /// The based loop reading the packet path `packets` from the basepoint.
    pub fn spell(&self, packets: &[PacketId]) -> GWord {
        let mut coeffs = Vec::with_capacity(packets.len() + 1);
        let mut edges = Vec::with_capacity(packets.len());
        let mut z = 0;
        let mut b = 0;
        for &p in packets {
            let pk = &self.packets[p];
            debug_assert_eq!(pk.src, b);
            let g = self.gog.vertex_group(self.block_type[b]);
            coeffs.push(g.mul(g.inv(z), pk.src_anchor));
            edges.push(pk.edge);
            z = pk.dst_anchor;
            b = pk.dst;
        }
        coeffs.push(self.gog.vertex_group(self.block_type[b]).inv(z));
        self.gog.normal_form(&GWord::from_parts(self.gog.base(), coeffs, edges))
    }

    pub fn to_dot(&self, name: &str) -> String {
        let g = self.graph();
        let gog = &self.gog;
        g.to_dot(
            name,
            |b| {
                let star = if b == 0 { "*" } else { "" };
                format!("B{b}{star} : v{}", self.block_type[b])
            },
            |p| {
                let pk = &self.packets[p];
                let sname = gog.vertex_group(self.block_type[pk.src]).name(pk.src_anchor);
                let dname = gog.vertex_group(self.block_type[pk.dst]).name(pk.dst_anchor);
                EdgeDecoration {
                    label: Some(format!("e{}{}", pk.edge >> 1, if pk.edge & 1 == 0 { "+" } else { "-" })),
                    taillabel: Some(sname),
                    headlabel: Some(dname),
                }
            },
        )
    }

    /// Assembles a graph from parts; packets must come in mirror pairs and be canonical.
    pub(crate) fn from_parts(
        gog: Arc<GraphOfGroups>,
        block_type: Vec<VertexId>,
        packets: Vec<Packet>,
        folded: bool,
    ) -> BlockGraph {
        let mut b = BlockGraph {
            gog,
            block_type,
            packets,
            folded,
            lookup: HashMap::new(),
        };
        b.rebuild_lookup();
        b
    }
}

/// Working state of a fold: blocks in a union-find where `(b, z)` is identified
/// with `(parent[b], twist[b]·z)`.
struct Folder<'a> {
    src: &'a BlockGraph,
    parent: Vec<BlockId>,
    twist: Vec<Elem>,
    out: Vec<Vec<PacketId>>,
    alive: Vec<bool>,
    index: HashMap<(BlockId, EdgeId, Elem), PacketId>,
    queue: VecDeque<PacketId>,
}

impl<'a> Folder<'a> {
    fn new(src: &'a BlockGraph) -> Self {
        let n = src.num_blocks();
        let mut out = vec![Vec::new(); n];
        for (id, p) in src.packets.iter().enumerate() {
            out[p.src].push(id);
        }
        Folder {
            src,
            parent: (0..n).collect(),
            twist: vec![0; n],
            out,
            alive: vec![true; src.packets.len()],
            index: HashMap::new(),
            queue: VecDeque::new(),
        }
    }

    fn group(&self, b: BlockId) -> &'a FiniteGroup {
        let src: &'a BlockGraph = self.src;
        src.gog.vertex_group(src.block_type[b])
    }

    /// `(b, z) = (root, t·z)`.
    fn find(&mut self, b: BlockId) -> (BlockId, Elem) {
        let mut chain = Vec::new();
        let mut at = b;
        while self.parent[at] != at {
            chain.push(at);
            at = self.parent[at];
        }
        let root = at;
        let g = self.src.gog.vertex_group(self.src.block_type[b]);
        let mut acc = 0;
        for &c in chain.iter().rev() {
            acc = g.mul(acc, self.twist[c]);
            self.parent[c] = root;
            self.twist[c] = acc;
        }
        (root, if chain.is_empty() { 0 } else { self.twist[b] })
    }

    fn resolve(&mut self, b: BlockId, z: Elem) -> (BlockId, Elem) {
        let (r, t) = self.find(b);
        (r, self.group(r).mul(t, z))
    }

    fn key(&mut self, p: PacketId) -> (BlockId, EdgeId, Elem) {
        let pk = self.src.packets[p];
        let (r, x) = self.resolve(pk.src, pk.src_anchor);
        (r, pk.edge, self.src.gog.alpha(pk.edge).coset_rep(x))
    }

    fn run(&mut self) -> Result<(), FoldError> {
        while let Some(q) = self.queue.pop_front() {
            if !self.alive[q] {
                continue;
            }
            let key = self.key(q);
            match self.index.get(&key).copied() {
                Some(p) if p != q && self.alive[p] => self.merge(p, q)?,
                _ => {
                    self.index.insert(key, q);
                }
            }
        }
        Ok(())
    }

    /// `p` and `q` leave the same coset; identify their targets and drop `q`.
    fn merge(&mut self, p: PacketId, q: PacketId) -> Result<(), FoldError> {
        let gog = self.src.gog.clone();
        let (pp, pq) = (self.src.packets[p], self.src.packets[q]);
        let e = pp.edge;
        let (_, xp) = self.resolve(pp.src, pp.src_anchor);
        let (_, xq) = self.resolve(pq.src, pq.src_anchor);
        let (dp, yp) = self.resolve(pp.dst, pp.dst_anchor);
        let (dq, yq) = self.resolve(pq.dst, pq.dst_anchor);
        let sg = self.group(pp.src);
        let c0 = gog
            .alpha(e)
            .preimage(sg.mul(sg.inv(xp), xq))
            .expect("packets share a source coset");
        let dg = self.group(dp);
        // (dq, z) ≡ (dp, s·z)
        let s = dg.mul(dg.mul(yp, gog.omega(e).apply(c0)), dg.inv(yq));
        self.alive[q] = false;
        self.alive[q ^ 1] = false;
        if dp == dq {
            if s != 0 {
                return Err(FoldError::FreeActionViolation {
                    vertex: self.src.block_type[dp],
                    element: s,
                });
            }
            return Ok(());
        }
        let (keep, gone, t) = if self.out[dp].len() >= self.out[dq].len() {
            (dp, dq, s)
        } else {
            (dq, dp, dg.inv(s))
        };
        self.parent[gone] = keep;
        self.twist[gone] = t;
        let moved = std::mem::take(&mut self.out[gone]);
        self.queue.extend(moved.iter().copied());
        self.out[keep].extend(moved);
        Ok(())
    }

    /// Renumbers blocks by BFS from the basepoint and retwists each block so
    /// the result depends only on the folded structure.
    fn canonicalize(mut self) -> BlockGraph {
        let gog = self.src.gog.clone();
        let n = self.src.num_blocks();
        let (r0, t0) = self.find(0);
        let mut new_id = vec![usize::MAX; n];
        // (root, z) ↦ (new_id[root], retwist[root]·z)
        let mut retwist = vec![0; n];
        let mut order = vec![r0];
        new_id[r0] = 0;
        retwist[r0] = self.group(r0).inv(t0);
        let mut head = 0;
        let mut pairs: Vec<(BlockId, Elem, BlockId, Elem, EdgeId)> = Vec::new();
        while head < order.len() {
            let r = order[head];
            head += 1;
            let mut outs: Vec<(EdgeId, Elem, Elem, PacketId)> = Vec::new();
            let live: Vec<PacketId> = self.out[r].iter().copied().filter(|&p| self.alive[p]).collect();
            for p in live {
                let pk = self.src.packets[p];
                let (_, x) = self.resolve(pk.src, pk.src_anchor);
                let g = self.group(r);
                let x = g.mul(retwist[r], x);
                let c = gog
                    .edge_group(pk.edge)
                    .elements()
                    .min_by_key(|&c| g.mul(x, gog.alpha(pk.edge).apply(c)))
                    .unwrap();
                outs.push((pk.edge, x, c, p));
            }
            outs.sort_by_key(|&(e, x, c, _)| {
                let g = self.group(r);
                (e, g.mul(x, gog.alpha(e).apply(c)))
            });
            for (e, x, c, p) in outs {
                let pk = self.src.packets[p];
                let (d, y) = self.resolve(pk.dst, pk.dst_anchor);
                let h = self.group(d);
                let y_at = h.mul(y, gog.omega(e).apply(c));
                if new_id[d] == usize::MAX {
                    new_id[d] = order.len();
                    retwist[d] = h.inv(y_at);
                    order.push(d);
                }
                let g = self.group(r);
                pairs.push((
                    new_id[r],
                    g.mul(x, gog.alpha(e).apply(c)),
                    new_id[d],
                    h.mul(retwist[d], y_at),
                    e,
                ));
            }
        }
        let block_type: Vec<VertexId> = order.iter().map(|&r| self.src.block_type[r]).collect();
        let mut positive: Vec<(BlockId, EdgeId, Elem, BlockId, Elem)> = pairs
            .into_iter()
            .filter(|p| p.4 & 1 == 0)
            .map(|(s, x, d, y, e)| {
                let (x, y) = canonical_anchor(&gog, e, x, y);
                (s, e, x, d, y)
            })
            .collect();
        positive.sort_unstable();
        let mut packets = Vec::with_capacity(2 * positive.len());
        for (s, e, x, d, y) in positive {
            push_pair(&gog, &mut packets, e, s, x, d, y);
        }
        BlockGraph::from_parts(gog, block_type, packets, true)
    }
}
