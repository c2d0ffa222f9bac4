//! Intersections of free-acting subgroups through the fiber product of their
//! subgroup graphs, with the degree and multiplicity accounting behind the
//! rank bound `r̄(H∩K) ≤ 6·m·r̄(H)·r̄(K)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::finite_group::Elem;
use crate::folding::{subgroup_graph, BlockGraph, BlockId, CoreData, FoldError, Packet, PacketId};
use crate::graph_of_groups::{GWord, GraphOfGroups};
use crate::serre_graph::{EdgeDecoration, EdgeId, GraphMorphism, SerreGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntersectionError {
    #[error("subgroup graphs live over different graphs of groups")]
    AmbientMismatch,
    #[error("subgroup {subgroup}: {source}")]
    Fold {
        subgroup: String,
        source: FoldError,
    },
}

/// A product block: the diagonal orbit of pairs `((B, z), (C, d·z))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProductBlock {
    pub left: BlockId,
    pub right: BlockId,
    pub offset: Elem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductPacket {
    pub left: PacketId,
    pub right: PacketId,
    pub packet: Packet,
}

/// All compatible pairs of blocks and packets of two subgroup graphs.
#[derive(Debug, Clone)]
pub struct FiberProduct {
    left: BlockGraph,
    right: BlockGraph,
    blocks: Vec<ProductBlock>,
    packets: Vec<ProductPacket>,
    graph: SerreGraph,
    pi_h: GraphMorphism,
    pi_k: GraphMorphism,
}

/// Ψ(H∩K) inside the fiber product, with both projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionCore {
    pub psi: SerreGraph,
    pub to_product: GraphMorphism,
    pub pi_h: GraphMorphism,
    pub pi_k: GraphMorphism,
    pub rank: usize,
    pub reduced_rank: usize,
}

impl IntersectionCore {
    pub fn is_trivial(&self) -> bool {
        self.rank == 0
    }
}

/// Fiber data over one vertex pair `(a, b)` of Ψ(H) × Ψ(K).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairRecord {
    pub a: VertexId,
    pub b: VertexId,
    pub deg_a: usize,
    pub deg_b: usize,
    pub fiber: Vec<VertexId>,
    pub fiber_degrees: Vec<usize>,
    pub degree_within_min: bool,
    pub degree_sum_within: bool,
    pub pair_inequality: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentRecord {
    pub blocks: usize,
    pub rank: usize,
    pub reduced_rank: usize,
    pub contains_base: bool,
}

/// Checks along the proof of the rank bound; every one must hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainVerdicts {
    pub local_injectivity: bool,
    pub core_projection: bool,
    pub fiber_degree_bound: bool,
    pub fiber_degree_sum: bool,
    pub pair_inequality: bool,
    pub global_inequality: bool,
    pub multiplicity_bound: bool,
    pub rank_identities: bool,
}

impl ChainVerdicts {
    pub fn all(&self) -> bool {
        self.local_injectivity
            && self.core_projection
            && self.fiber_degree_bound
            && self.fiber_degree_sum
            && self.pair_inequality
            && self.global_inequality
            && self.multiplicity_bound
            && self.rank_identities
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub rank_h: usize,
    pub rank_k: usize,
    pub rank_intersection: usize,
    pub reduced_rank_h: usize,
    pub reduced_rank_k: usize,
    pub reduced_rank_intersection: usize,
    /// Largest edge-group order.
    pub m_prime: usize,
    /// Largest multiplicity seen over pairs of core edges; a lower bound for `m`.
    pub m_lower: usize,
    /// `6·m′·r̄(H)·r̄(K)`.
    pub bound: usize,
    pub holds: bool,
    /// All edge groups trivial, so the constant is exactly 6.
    pub trivial_edge_groups: bool,
    /// Informational: `r̄(H∩K) ≤ r̄(H)·r̄(K)`.
    pub neumann_product_holds: bool,
    pub chain: ChainVerdicts,
    /// Largest number of base-component blocks over one pair of blocks.
    pub max_block_fiber: usize,
}

impl BoundReport {
    pub fn all_verdicts_hold(&self) -> bool {
        self.holds && self.chain.all()
    }
}

/// Builds the product of two folded subgroup graphs over the same ambient group.
pub fn fiber_product(h: &BlockGraph, k: &BlockGraph) -> Result<FiberProduct, IntersectionError> {
    if !Arc::ptr_eq(h.gog(), k.gog()) {
        return Err(IntersectionError::AmbientMismatch);
    }
    let gog = h.gog().clone();
    let mut blocks = Vec::new();
    let mut index = HashMap::new();
    for b in 0..h.num_blocks() {
        let v = h.block_type(b);
        for c in (0..k.num_blocks()).filter(|&c| k.block_type(c) == v) {
            for d in gog.vertex_group(v).elements() {
                let pb = ProductBlock {
                    left: b,
                    right: c,
                    offset: d,
                };
                index.insert(pb, blocks.len());
                blocks.push(pb);
            }
        }
    }
    let mut by_edge: BTreeMap<EdgeId, Vec<PacketId>> = BTreeMap::new();
    for (q, pk) in k.packets().iter().enumerate() {
        by_edge.entry(pk.edge).or_default().push(q);
    }
    let mut packets = Vec::new();
    for (p, pp) in h.packets().iter().enumerate() {
        let e = pp.edge;
        if e & 1 == 1 {
            continue;
        }
        let sg = gog.vertex_group(gog.graph().src(e));
        let dg = gog.vertex_group(gog.graph().dst(e));
        for &q in by_edge.get(&e).map(Vec::as_slice).unwrap_or(&[]) {
            let pq = k.packet(q);
            for c in gog.edge_group(e).elements() {
                let d = sg.mul(sg.mul(pq.src_anchor, gog.alpha(e).apply(c)), sg.inv(pp.src_anchor));
                let d2 = dg.mul(dg.mul(pq.dst_anchor, gog.omega(e).apply(c)), dg.inv(pp.dst_anchor));
                let src = index[&ProductBlock {
                    left: pp.src,
                    right: pq.src,
                    offset: d,
                }];
                let dst = index[&ProductBlock {
                    left: pp.dst,
                    right: pq.dst,
                    offset: d2,
                }];
                let mirror = h.packet(p ^ 1);
                packets.push(ProductPacket {
                    left: p,
                    right: q,
                    packet: Packet { src, dst, ..*pp },
                });
                packets.push(ProductPacket {
                    left: p ^ 1,
                    right: q ^ 1,
                    packet: Packet {
                        src: dst,
                        dst: src,
                        ..*mirror
                    },
                });
            }
        }
    }
    let mut graph = SerreGraph::new(blocks.len());
    for pk in packets.iter().step_by(2) {
        graph.add_edge(pk.packet.src, pk.packet.dst);
    }
    let pi_h = GraphMorphism {
        vertex_map: blocks.iter().map(|b| b.left).collect(),
        edge_map: packets.iter().map(|p| p.left).collect(),
    };
    let pi_k = GraphMorphism {
        vertex_map: blocks.iter().map(|b| b.right).collect(),
        edge_map: packets.iter().map(|p| p.right).collect(),
    };
    Ok(FiberProduct {
        left: h.clone(),
        right: k.clone(),
        blocks,
        packets,
        graph,
        pi_h,
        pi_k,
    })
}

/// Folds both subgroups, intersects them and checks the full inequality chain.
pub fn verify_bound(
    gog: &Arc<GraphOfGroups>,
    h: &[GWord],
    k: &[GWord],
) -> Result<BoundReport, IntersectionError> {
    let dh = subgroup_graph(gog, h).map_err(|source| IntersectionError::Fold {
        subgroup: "H".into(),
        source,
    })?;
    let dk = subgroup_graph(gog, k).map_err(|source| IntersectionError::Fold {
        subgroup: "K".into(),
        source,
    })?;
    Ok(fiber_product(&dh, &dk)?.bound_report())
}

impl FiberProduct {
    pub fn left(&self) -> &BlockGraph {
        &self.left
    }

    pub fn right(&self) -> &BlockGraph {
        &self.right
    }

    pub fn blocks(&self) -> &[ProductBlock] {
        &self.blocks
    }

    pub fn packets(&self) -> &[ProductPacket] {
        &self.packets
    }

    pub fn graph(&self) -> &SerreGraph {
        &self.graph
    }

    pub fn pi_h(&self) -> &GraphMorphism {
        &self.pi_h
    }

    pub fn pi_k(&self) -> &GraphMorphism {
        &self.pi_k
    }

    /// The product block of the paired basepoints.
    pub fn base_block(&self) -> usize {
        0
    }

    /// Sorted product blocks of the base component.
    pub fn base_component(&self) -> Vec<usize> {
        self.graph
            .components()
            .into_iter()
            .find(|c| c.first() == Some(&0))
            .expect("base block exists")
    }

    /// The base component as a canonical subgroup graph: Δ(H∩K).
    pub fn intersection_graph(&self) -> BlockGraph {
        let (sub, emb) = self.graph.component_of(0);
        let types = emb
            .vertex_map
            .iter()
            .map(|&b| self.left.block_type(self.blocks[b].left))
            .collect();
        let mut new_id = vec![usize::MAX; self.blocks.len()];
        for (i, &b) in emb.vertex_map.iter().enumerate() {
            new_id[b] = i;
        }
        let packets = emb
            .edge_map
            .iter()
            .map(|&p| {
                let pk = self.packets[p].packet;
                Packet {
                    src: new_id[pk.src],
                    dst: new_id[pk.dst],
                    ..pk
                }
            })
            .collect();
        debug_assert_eq!(sub.num_edges(), emb.edge_map.len());
        BlockGraph::from_parts(self.left.gog().clone(), types, packets, true)
            .fold()
            .expect("a product of folded graphs is folded")
    }

    pub fn intersection_core(&self) -> IntersectionCore {
        let (sub, emb) = self.graph.component_of(0);
        let rank = sub.fundamental_rank().expect("components are connected");
        if rank == 0 {
            return IntersectionCore {
                psi: SerreGraph::new(0),
                to_product: GraphMorphism::default(),
                pi_h: GraphMorphism::default(),
                pi_k: GraphMorphism::default(),
                rank: 0,
                reduced_rank: 0,
            };
        }
        let (psi, inner) = sub.core().expect("positive rank");
        let to_product = inner.then(&emb);
        let reduced_rank = psi.num_positive_edges() - psi.num_vertices();
        IntersectionCore {
            pi_h: to_product.then(&self.pi_h),
            pi_k: to_product.then(&self.pi_k),
            psi,
            to_product,
            rank,
            reduced_rank,
        }
    }

    /// For each pair of positive core edges `(x ∈ Ψ(H), y ∈ Ψ(K))`, the number of
    /// edges of Ψ(H∩K) over both. Keys are packet ids of the two subgroup graphs.
    pub fn multiplicity_table(&self, core: &IntersectionCore) -> BTreeMap<(PacketId, PacketId), usize> {
        let mut table = BTreeMap::new();
        for e in core.psi.positive_edges() {
            let key = (core.pi_h.edge_map[e], core.pi_k.edge_map[e]);
            let key = if key.0 & 1 == 1 { (key.0 ^ 1, key.1 ^ 1) } else { key };
            *table.entry(key).or_insert(0) += 1;
        }
        table
    }

    /// Fiber records over every vertex pair of Ψ(H) × Ψ(K).
    pub fn degree_chain_diagnostics(
        &self,
        core: &IntersectionCore,
        core_h: &CoreData,
        core_k: &CoreData,
        m: usize,
    ) -> Vec<PairRecord> {
        let mut fibers: BTreeMap<(VertexId, VertexId), Vec<VertexId>> = BTreeMap::new();
        let to_h = inverse_vertices(core_h, self.left.num_blocks());
        let to_k = inverse_vertices(core_k, self.right.num_blocks());
        for w in core.psi.vertices() {
            let a = to_h[core.pi_h.vertex_map[w]];
            let b = to_k[core.pi_k.vertex_map[w]];
            if let (Some(a), Some(b)) = (a, b) {
                fibers.entry((a, b)).or_default().push(w);
            }
        }
        let mut out = Vec::new();
        for a in core_h.psi.vertices() {
            for b in core_k.psi.vertices() {
                let fiber = fibers.remove(&(a, b)).unwrap_or_default();
                let deg_a = core_h.degrees[a];
                let deg_b = core_k.degrees[b];
                let fiber_degrees: Vec<usize> = fiber.iter().map(|&w| core.psi.degree(w)).collect();
                let sum: usize = fiber_degrees.iter().sum();
                let excess: i64 = fiber_degrees.iter().map(|&d| d as i64 - 2).sum();
                out.push(PairRecord {
                    a,
                    b,
                    deg_a,
                    deg_b,
                    degree_within_min: fiber_degrees.iter().all(|&d| d <= deg_a.min(deg_b)),
                    degree_sum_within: sum <= m * deg_a * deg_b,
                    pair_inequality: excess
                        <= 3 * m as i64 * (deg_a as i64 - 2) * (deg_b as i64 - 2),
                    fiber,
                    fiber_degrees,
                });
            }
        }
        out
    }

    /// Every component of the product that is not a tree, the base one marked.
    pub fn conjugate_components(&self) -> Vec<ComponentRecord> {
        let mut out = Vec::new();
        for comp in self.graph.components() {
            let (sub, _) = self.graph.component_of(comp[0]);
            let rank = sub.fundamental_rank().expect("components are connected");
            if rank == 0 {
                continue;
            }
            out.push(ComponentRecord {
                blocks: comp.len(),
                rank,
                reduced_rank: rank - 1,
                contains_base: comp[0] == 0,
            });
        }
        out
    }

    pub fn bound_report(&self) -> BoundReport {
        let gog = self.left.gog();
        let core_h = self.left.core();
        let core_k = self.right.core();
        let core = self.intersection_core();
        let m = gog.max_edge_group_order();
        let local_injectivity = self.pi_h.check(&self.graph, &self.left.graph()).is_ok()
            && self.pi_k.check(&self.graph, &self.right.graph()).is_ok()
            && self.pi_h.is_locally_injective(&self.graph)
            && self.pi_k.is_locally_injective(&self.graph);
        let core_projection = core.is_trivial()
            || (projects_into(&core.pi_h, &core.psi, &core_h)
                && projects_into(&core.pi_k, &core.psi, &core_k));
        let records = if core.is_trivial() || !core_projection {
            Vec::new()
        } else {
            self.degree_chain_diagnostics(&core, &core_h, &core_k, m)
        };
        let table = if core.is_trivial() {
            BTreeMap::new()
        } else {
            self.multiplicity_table(&core)
        };
        let m_lower = table.values().copied().max().unwrap_or(1);
        let excess = |degs: &[usize]| degs.iter().map(|&d| d as i64 - 2).sum::<i64>();
        let core_degrees: Vec<usize> = core.psi.vertices().map(|v| core.psi.degree(v)).collect();
        let rank_identities = [
            (&core_h.degrees, core_h.reduced_rank, &core_h.psi),
            (&core_k.degrees, core_k.reduced_rank, &core_k.psi),
            (&core_degrees, core.reduced_rank, &core.psi),
        ]
        .iter()
        .all(|(degs, rr, psi)| {
            excess(degs) == 2 * *rr as i64
                && psi.num_positive_edges() as i64 - psi.num_vertices() as i64 == *rr as i64
        });
        let global_inequality = excess(&core_degrees)
            <= 3 * m as i64 * excess(&core_h.degrees) * excess(&core_k.degrees);
        let chain = ChainVerdicts {
            local_injectivity,
            core_projection,
            fiber_degree_bound: records.iter().all(|r| r.degree_within_min),
            fiber_degree_sum: records.iter().all(|r| r.degree_sum_within),
            pair_inequality: records.iter().all(|r| r.pair_inequality),
            global_inequality,
            multiplicity_bound: table.values().all(|&n| n <= m),
            rank_identities,
        };
        let bound = 6 * m * core_h.reduced_rank * core_k.reduced_rank;
        BoundReport {
            rank_h: core_h.rank,
            rank_k: core_k.rank,
            rank_intersection: core.rank,
            reduced_rank_h: core_h.reduced_rank,
            reduced_rank_k: core_k.reduced_rank,
            reduced_rank_intersection: core.reduced_rank,
            m_prime: m,
            m_lower,
            bound,
            holds: core.reduced_rank <= bound,
            trivial_edge_groups: m == 1,
            neumann_product_holds: core.reduced_rank
                <= core_h.reduced_rank * core_k.reduced_rank,
            chain,
            max_block_fiber: self.max_block_fiber(),
        }
    }

    /// Largest number of base-component blocks lying over a single pair of blocks.
    pub fn max_block_fiber(&self) -> usize {
        let mut counts: HashMap<(BlockId, BlockId), usize> = HashMap::new();
        for b in self.base_component() {
            let pb = self.blocks[b];
            *counts.entry((pb.left, pb.right)).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    /// Graphviz rendering of the base component, labelled by both projections.
    pub fn to_dot(&self, name: &str) -> String {
        let (sub, emb) = self.graph.component_of(0);
        sub.to_dot(
            name,
            |v| {
                let b = self.blocks[emb.vertex_map[v]];
                format!("H{} K{} d{}", b.left, b.right, b.offset)
            },
            |e| {
                let p = &self.packets[emb.edge_map[e]];
                EdgeDecoration::label(format!("e{} H{} K{}", p.packet.edge >> 1, p.left >> 1, p.right >> 1))
            },
        )
    }
}

fn inverse_vertices(core: &CoreData, n: usize) -> Vec<Option<VertexId>> {
    let mut inv = vec![None; n];
    for (v, &b) in core.embedding.vertex_map.iter().enumerate() {
        inv[b] = Some(v);
    }
    inv
}

fn projects_into(pi: &GraphMorphism, psi: &SerreGraph, target: &CoreData) -> bool {
    if target.is_trivial() {
        return psi.num_vertices() == 0;
    }
    let in_v: std::collections::HashSet<usize> = target.embedding.vertex_map.iter().copied().collect();
    let in_e: std::collections::HashSet<usize> = target.embedding.edge_map.iter().copied().collect();
    psi.vertices().all(|v| in_v.contains(&pi.vertex_map[v]))
        && psi.edges().all(|e| in_e.contains(&pi.edge_map[e]))
}
