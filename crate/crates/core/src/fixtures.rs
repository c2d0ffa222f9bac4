//! Named graphs of groups used by tests, the oracle and the corpus.
//!
//! Each fixture with torsion carries a homomorphism onto a finite group that is
//! injective on every vertex group. Its kernel meets no conjugate of a vertex
//! group, so every subgroup of the kernel acts freely on the tree.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::finite_group::{Elem, FiniteGroup};
use crate::formats::{parse_word, InstanceDocument};
use crate::graph_of_groups::{GWord, GraphOfGroups};
use crate::serre_graph::{SerreGraph, VertexId};

/// A homomorphism `π₁ → Q` given on vertex groups and on stable letters.
#[derive(Debug, Clone)]
pub struct KernelMap {
    pub target: FiniteGroup,
    pub vertex_maps: Vec<Vec<Elem>>,
    /// Image of `t_e` for each positive edge; identity on spanning-tree edges.
    pub stable: Vec<Elem>,
}

impl KernelMap {
    fn edge_image(&self, gog: &GraphOfGroups, e: usize) -> Elem {
        if gog.spanning_tree().contains(e) {
            return 0;
        }
        let t = self.stable[e >> 1];
        if e & 1 == 0 {
            t
        } else {
            self.target.inv(t)
        }
    }

    pub fn eval(&self, gog: &GraphOfGroups, w: &GWord) -> Elem {
        let q = &self.target;
        let mut acc = 0;
        let mut at: VertexId = w.start;
        for (i, &g) in w.coeffs.iter().enumerate() {
            acc = q.mul(acc, self.vertex_maps[at][g]);
            if let Some(&e) = w.edges.get(i) {
                acc = q.mul(acc, self.edge_image(gog, e));
                at = gog.graph().dst(e);
            }
        }
        acc
    }

    pub fn in_kernel(&self, gog: &GraphOfGroups, w: &GWord) -> bool {
        self.eval(gog, w) == 0
    }

    /// Homomorphism on each vertex group, injective there, and compatible with
    /// every edge relation `α_e(c)·t_e = t_e·ω_e(c)`.
    pub fn check(&self, gog: &GraphOfGroups) -> Result<(), String> {
        let q = &self.target;
        let y = gog.graph();
        for v in y.vertices() {
            let g = gog.vertex_group(v);
            let f = &self.vertex_maps[v];
            if f.len() != g.order() {
                return Err(format!("vertex {v}: wrong map length"));
            }
            for a in g.elements() {
                for b in g.elements() {
                    if f[g.mul(a, b)] != q.mul(f[a], f[b]) {
                        return Err(format!("vertex {v}: not a homomorphism"));
                    }
                    if a != b && f[a] == f[b] {
                        return Err(format!("vertex {v}: not injective"));
                    }
                }
            }
        }
        for e in y.positive_edges() {
            let t = self.edge_image(gog, e);
            for c in gog.edge_group(e).elements() {
                let lhs = q.mul(self.vertex_maps[y.src(e)][gog.alpha(e).apply(c)], t);
                let rhs = q.mul(t, self.vertex_maps[y.dst(e)][gog.omega(e).apply(c)]);
                if lhs != rhs {
                    return Err(format!("edge {e}: relation fails for {c}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub gog: Arc<GraphOfGroups>,
    /// Named generator lists in `v:g` / `k±` syntax.
    pub subgroups: BTreeMap<String, Vec<String>>,
    /// `None` when the group is torsion-free.
    pub kernel: Option<KernelMap>,
    /// Subgroup names expected to contain torsion.
    pub torsion: Vec<String>,
}

impl Fixture {
    pub fn document(&self) -> InstanceDocument {
        InstanceDocument::from_gog(&self.gog, self.subgroups.clone())
    }

    pub fn words(&self, name: &str) -> Vec<GWord> {
        self.subgroups[name]
            .iter()
            .map(|w| parse_word(&self.gog, w).expect("fixture words parse"))
            .collect()
    }

    /// Subgroups expected to act freely.
    pub fn free_subgroups(&self) -> impl Iterator<Item = &str> {
        self.subgroups
            .keys()
            .map(String::as_str)
            .filter(|n| !self.torsion.iter().any(|t| t == n))
    }

    /// Whether every edge group is trivial.
    pub fn trivial_edge_groups(&self) -> bool {
        self.gog.max_edge_group_order() == 1
    }
}

fn g(x: FiniteGroup) -> Arc<FiniteGroup> {
    Arc::new(x)
}

fn z(n: usize) -> Arc<FiniteGroup> {
    g(FiniteGroup::cyclic(n).expect("small cyclic group"))
}

fn one() -> Arc<FiniteGroup> {
    g(FiniteGroup::trivial())
}

/// Homomorphism `ℤ/n → Q` sending 1 to `x`.
fn cyclic_map(q: &FiniteGroup, n: usize, x: Elem) -> Vec<Elem> {
    let mut out = vec![0; n];
    for k in 1..n {
        out[k] = q.mul(out[k - 1], x);
    }
    out
}

fn subgroups(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    entries
        .iter()
        .map(|(k, ws)| (k.to_string(), ws.iter().map(|w| w.to_string()).collect()))
        .collect()
}

/// Graph of groups on `y` with the given vertex groups and, per positive edge,
/// an edge group with its two embeddings.
fn build(
    y: SerreGraph,
    vertex_groups: Vec<Arc<FiniteGroup>>,
    edges: Vec<(Arc<FiniteGroup>, Vec<Elem>, Vec<Elem>)>,
) -> Arc<GraphOfGroups> {
    let mut eg = Vec::new();
    let mut alpha = Vec::new();
    for (grp, a, w) in edges {
        eg.push(grp.clone());
        eg.push(grp);
        alpha.push(a);
        alpha.push(w);
    }
    Arc::new(GraphOfGroups::new(y, vertex_groups, eg, alpha, 0).expect("fixture is valid"))
}

fn one_edge(a: Arc<FiniteGroup>, b: Arc<FiniteGroup>, c: Arc<FiniteGroup>, alpha: Vec<Elem>, omega: Vec<Elem>) -> Arc<GraphOfGroups> {
    let mut y = SerreGraph::new(2);
    y.add_edge(0, 1);
    build(y, vec![a, b], vec![(c, alpha, omega)])
}

/// A free product `ℤ/p * ℤ/q` mapped into `ℤ/p × ℤ/q`.
fn cyclic_free_product(name: &'static str, p: usize, q: usize, subs: &[(&str, &[&str])]) -> Fixture {
    let target = FiniteGroup::direct_product(&z(p), &z(q)).unwrap();
    Fixture {
        name,
        gog: one_edge(z(p), z(q), one(), vec![0], vec![0]),
        subgroups: subgroups(subs),
        kernel: Some(KernelMap {
            vertex_maps: vec![cyclic_map(&target, p, 1), cyclic_map(&target, q, p)],
            stable: vec![0],
            target,
        }),
        torsion: Vec::new(),
    }
}

pub fn f2() -> Fixture {
    Fixture {
        name: "f2",
        gog: build(SerreGraph::rose(2), vec![one()], vec![(one(), vec![0], vec![0]); 2]),
        subgroups: subgroups(&[
            ("H", &["0+ 0+", "1+ 0+ 1-"]),
            ("K", &["0+", "1+ 1+"]),
            ("whole", &["0+", "1+"]),
        ]),
        kernel: None,
        torsion: Vec::new(),
    }
}

pub fn theta() -> Fixture {
    let mut y = SerreGraph::new(2);
    for _ in 0..3 {
        y.add_edge(0, 1);
    }
    Fixture {
        name: "theta",
        gog: build(y, vec![one(), one()], vec![(one(), vec![0], vec![0]); 3]),
        subgroups: subgroups(&[("H", &["1+", "2+ 2+"]), ("K", &["1+ 2+", "2+ 1+"])]),
        kernel: None,
        torsion: Vec::new(),
    }
}

/// `ℤ/2 * ℤ/3` with `a` at vertex 0 and `b` at vertex 1, mapped onto `ℤ/6`.
pub fn z2_free_z3() -> Fixture {
    let target = FiniteGroup::cyclic(6).unwrap();
    Fixture {
        name: "z2_free_z3",
        gog: one_edge(z(2), z(3), one(), vec![0], vec![0]),
        subgroups: subgroups(&[
            ("H", &["0:1 1:1 0:1 1:2", "0:1 1:2 0:1 1:1"]),
            ("K", &["0:1 1:1 0:1 1:1"]),
            ("torsion", &["0:1"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![cyclic_map(&target, 2, 3), cyclic_map(&target, 3, 2)],
            stable: vec![0],
            target,
        }),
        torsion: vec!["torsion".into()],
    }
}

/// `ℤ/4 *_{ℤ/2} ℤ/6`, mapped onto `ℤ/12`.
pub fn z4_amalg_z2_z6() -> Fixture {
    let target = FiniteGroup::cyclic(12).unwrap();
    Fixture {
        name: "z4_amalg_z2_z6",
        gog: one_edge(z(4), z(6), z(2), vec![0, 2], vec![0, 3]),
        subgroups: subgroups(&[
            ("H", &["0:1 1:1 0:3 1:5", "0:1 1:2 0:3 1:4"]),
            ("K", &["0:1 1:1 0:1 1:1"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![cyclic_map(&target, 4, 3), cyclic_map(&target, 6, 2)],
            stable: vec![0],
            target,
        }),
        torsion: Vec::new(),
    }
}

/// `ℤ/2 * ℤ` as an HNN extension with trivial edge group.
pub fn z2_hnn_trivial() -> Fixture {
    let target = FiniteGroup::cyclic(2).unwrap();
    Fixture {
        name: "z2_hnn_trivial",
        gog: build(SerreGraph::rose(1), vec![z(2)], vec![(one(), vec![0], vec![0])]),
        subgroups: subgroups(&[
            ("H", &["0+", "0:1 0+ 0:1"]),
            ("K", &["0+ 0+", "0:1 0+ 0+ 0:1 0+"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![vec![0, 1]],
            stable: vec![0],
            target,
        }),
        torsion: Vec::new(),
    }
}

/// Klein four-group with a stable letter swapping two of its involutions,
/// mapped into the dihedral group of order 8.
pub fn klein_hnn_z2() -> Fixture {
    let v = FiniteGroup::direct_product(&FiniteGroup::cyclic(2).unwrap(), &FiniteGroup::cyclic(2).unwrap()).unwrap();
    let target = FiniteGroup::dihedral(4).unwrap();
    let (r2, s) = (2, 4);
    let r2s = target.mul(r2, s);
    Fixture {
        name: "klein_hnn_z2",
        gog: build(SerreGraph::rose(1), vec![g(v)], vec![(z(2), vec![0, 1], vec![0, 2])]),
        subgroups: subgroups(&[
            ("H", &["0+ 0+ 0+ 0+", "0:3 0+ 0:3 0+ 0:3 0+ 0:3 0+"]),
            ("K", &["0:1 0+ 0:1 0+"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![vec![0, s, r2s, r2]],
            stable: vec![target.inv(1)],
            target,
        }),
        torsion: Vec::new(),
    }
}

pub fn z3_free_z3() -> Fixture {
    cyclic_free_product(
        "z3_free_z3",
        3,
        3,
        &[
            ("H", &["0:1 1:1 0:2 1:2", "0:1 1:2 0:2 1:1"]),
            ("K", &["0:1 1:1 0:1 1:1 0:1 1:1"]),
        ],
    )
}

pub fn z2_free_z2() -> Fixture {
    cyclic_free_product(
        "z2_free_z2",
        2,
        2,
        &[
            ("H", &["0:1 1:1 0:1 1:1"]),
            ("K", &["0:1 1:1 0:1 1:1 0:1 1:1 0:1 1:1"]),
        ],
    )
}

/// `S₃ * ℤ/2`, mapped into `S₃ × ℤ/2`.
pub fn s3_free_z2() -> Fixture {
    let s3 = FiniteGroup::dihedral(3).unwrap();
    let target = FiniteGroup::direct_product(&s3, &FiniteGroup::cyclic(2).unwrap()).unwrap();
    Fixture {
        name: "s3_free_z2",
        gog: one_edge(g(s3), z(2), one(), vec![0], vec![0]),
        subgroups: subgroups(&[
            ("H", &["0:1 1:1 0:2 1:1", "0:3 1:1 0:3 1:1"]),
            ("K", &["0:1 1:1 0:1 1:1 0:1 1:1"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![(0..6).collect(), vec![0, 6]],
            stable: vec![0],
            target,
        }),
        torsion: Vec::new(),
    }
}

/// `ℤ/4 *_{ℤ/2} ℤ/4`, mapped into `ℤ/4 × ℤ/4`.
pub fn z4_amalg_z2_z4() -> Fixture {
    let target = FiniteGroup::direct_product(&FiniteGroup::cyclic(4).unwrap(), &FiniteGroup::cyclic(4).unwrap()).unwrap();
    Fixture {
        name: "z4_amalg_z2_z4",
        gog: one_edge(z(4), z(4), z(2), vec![0, 2], vec![0, 2]),
        subgroups: subgroups(&[
            ("H", &["0:1 1:1 0:3 1:3", "0:1 1:3 0:1 1:3"]),
            ("K", &["0:1 1:1 0:1 1:1"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![cyclic_map(&target, 4, 1), cyclic_map(&target, 4, 1 + 4 * 2)],
            stable: vec![0],
            target,
        }),
        torsion: Vec::new(),
    }
}

/// A triangle of `ℤ/2` vertex groups with trivial edge groups.
pub fn triangle_z2() -> Fixture {
    let mut y = SerreGraph::new(3);
    y.add_edge(0, 1);
    y.add_edge(1, 2);
    y.add_edge(2, 0);
    let z2 = FiniteGroup::cyclic(2).unwrap();
    let target = FiniteGroup::direct_product(&FiniteGroup::direct_product(&z2, &z2).unwrap(), &z2).unwrap();
    Fixture {
        name: "triangle_z2",
        gog: build(y, vec![z(2), z(2), z(2)], vec![(one(), vec![0], vec![0]); 3]),
        subgroups: subgroups(&[
            ("H", &["1+", "0:1 1:1 0:1 1:1"]),
            ("K", &["0:1 1+ 0:1", "1:1 2:1 1:1 2:1"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![vec![0, 1], vec![0, 2], vec![0, 4]],
            stable: vec![0, 0, 0],
            target,
        }),
        torsion: Vec::new(),
    }
}

/// `ℤ/6` with a stable letter inverting its subgroup of order 3, mapped into
/// the dihedral group of order 12.
pub fn z6_hnn_z3() -> Fixture {
    let target = FiniteGroup::dihedral(6).unwrap();
    Fixture {
        name: "z6_hnn_z3",
        gog: build(SerreGraph::rose(1), vec![z(6)], vec![(z(3), vec![0, 2, 4], vec![0, 4, 2])]),
        subgroups: subgroups(&[
            ("H", &["0+ 0+", "0:1 0+ 0:1 0+"]),
            ("K", &["0+ 0:1 0+ 0:5"]),
        ]),
        kernel: Some(KernelMap {
            vertex_maps: vec![cyclic_map(&target, 6, 1)],
            stable: vec![6],
            target,
        }),
        torsion: Vec::new(),
    }
}

pub fn all() -> Vec<Fixture> {
    vec![
        f2(),
        theta(),
        z2_free_z3(),
        z4_amalg_z2_z6(),
        z2_hnn_trivial(),
        klein_hnn_z2(),
        z3_free_z3(),
        z2_free_z2(),
        s3_free_z2(),
        z4_amalg_z2_z4(),
        triangle_z2(),
        z6_hnn_z3(),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_maps_are_valid() {
        for f in all() {
            if let Some(k) = &f.kernel {
                k.check(&f.gog).unwrap_or_else(|e| panic!("{}: {e}", f.name));
            }
        }
    }

    #[test]
    fn named_subgroups_parse_and_sit_in_kernels() {
        for f in all() {
            for name in f.subgroups.keys() {
                let ws = f.words(name);
                assert!(!ws.is_empty());
                if name == "H" {
                    if let Some(k) = &f.kernel {
                        for w in &ws {
                            assert!(k.in_kernel(&f.gog, w), "{} {name}", f.name);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn at_least_twelve_fixtures() {
        let fs = all();
        assert!(fs.len() >= 12);
        let mut names: Vec<_> = fs.iter().map(|f| f.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), fs.len());
    }
}
