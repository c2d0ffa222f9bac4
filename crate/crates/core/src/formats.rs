//! JSON instance documents and their canonical serialization.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::finite_group::{FiniteGroup, GroupError};
use crate::graph_of_groups::{GWord, GogError, GraphOfGroups, SPresWord, WordError};
use crate::serre_graph::SerreGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    /// The document does not have the expected shape.
    #[error("schema: {0}")]
    Schema(String),
    /// The document is well formed but the data is not a graph of groups.
    #[error("algebra: {0}")]
    Algebra(String),
}

impl FormatError {
    pub fn exit_code(&self) -> i32 {
        match self {
            FormatError::Schema(_) => 2,
            FormatError::Algebra(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Positive edges as `[src, dst]`.
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    /// The string `"trivial"`.
    Named(String),
    /// A multiplication table with identity 0.
    Table(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub alpha: Vec<usize>,
    pub omega: Vec<usize>,
}

/// The on-disk description of a graph of groups with named subgroups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub graph: GraphSpec,
    pub vertex_groups: Vec<GroupSpec>,
    /// One per positive edge.
    pub edge_groups: Vec<GroupSpec>,
    /// One per positive edge: `alpha` into the source group, `omega` into the target.
    pub embeddings: Vec<EmbeddingSpec>,
    pub base_vertex: usize,
    #[serde(default)]
    pub subgroups: BTreeMap<String, Vec<String>>,
}

/// A validated document.
#[derive(Debug, Clone)]
pub struct Instance {
    pub document: InstanceDocument,
    pub gog: Arc<GraphOfGroups>,
}

fn group_of(spec: &GroupSpec, what: &str) -> Result<FiniteGroup, FormatError> {
    match spec {
        GroupSpec::Named(s) if s == "trivial" => Ok(FiniteGroup::trivial()),
        GroupSpec::Named(s) => Err(FormatError::Schema(format!(
            "{what}: unknown group name `{s}`"
        ))),
        GroupSpec::Table(rows) => FiniteGroup::from_table(rows).map_err(|e| match e {
            GroupError::EmptyTable | GroupError::NotSquare { .. } | GroupError::EntryOutOfRange { .. } => {
                FormatError::Schema(format!("{what}: {e}"))
            }
            _ => FormatError::Algebra(format!("{what}: {e}")),
        }),
    }
}

fn spec_of(g: &FiniteGroup) -> GroupSpec {
    if g.is_trivial() {
        GroupSpec::Named("trivial".into())
    } else {
        GroupSpec::Table(g.table_rows())
    }
}

impl InstanceDocument {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        serde_json::from_str(text).map_err(|e| FormatError::Schema(e.to_string()))
    }

    /// Sorted keys, no insignificant whitespace.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("documents serialize");
        serde_json::to_string(&value).expect("values serialize")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn from_gog(gog: &GraphOfGroups, subgroups: BTreeMap<String, Vec<String>>) -> Self {
        let y = gog.graph();
        InstanceDocument {
            graph: GraphSpec {
                vertices: y.num_vertices(),
                edges: y.positive_edges().map(|e| [y.src(e), y.dst(e)]).collect(),
            },
            vertex_groups: y.vertices().map(|v| spec_of(gog.vertex_group(v))).collect(),
            edge_groups: y.positive_edges().map(|e| spec_of(gog.edge_group(e))).collect(),
            embeddings: y
                .positive_edges()
                .map(|e| EmbeddingSpec {
                    alpha: gog.alpha(e).map().to_vec(),
                    omega: gog.omega(e).map().to_vec(),
                })
                .collect(),
            base_vertex: gog.base(),
            subgroups,
        }
    }

    pub fn validate(&self) -> Result<Instance, FormatError> {
        let n = self.graph.vertices;
        let m = self.graph.edges.len();
        if self.vertex_groups.len() != n {
            return Err(FormatError::Schema(format!(
                "expected {n} vertex groups, got {}",
                self.vertex_groups.len()
            )));
        }
        if self.edge_groups.len() != m || self.embeddings.len() != m {
            return Err(FormatError::Schema(format!(
                "expected {m} edge groups and embeddings, got {} and {}",
                self.edge_groups.len(),
                self.embeddings.len()
            )));
        }
        if self.base_vertex >= n {
            return Err(FormatError::Schema(format!(
                "base vertex {} out of range",
                self.base_vertex
            )));
        }
        let mut y = SerreGraph::new(n);
        for (i, &[s, d]) in self.graph.edges.iter().enumerate() {
            if s >= n || d >= n {
                return Err(FormatError::Schema(format!("edge {i} has an endpoint out of range")));
            }
            y.add_edge(s, d);
        }
        let vgroups = self
            .vertex_groups
            .iter()
            .enumerate()
            .map(|(v, g)| group_of(g, &format!("vertex group {v}")).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        let mut egroups = Vec::with_capacity(2 * m);
        let mut alpha = Vec::with_capacity(2 * m);
        for (i, (g, emb)) in self.edge_groups.iter().zip(&self.embeddings).enumerate() {
            let g = Arc::new(group_of(g, &format!("edge group {i}"))?);
            egroups.push(g.clone());
            egroups.push(g);
            alpha.push(emb.alpha.clone());
            alpha.push(emb.omega.clone());
        }
        let gog = GraphOfGroups::new(y, vgroups, egroups, alpha, self.base_vertex).map_err(|e| match e {
            GogError::WrongCount { .. } | GogError::BaseOutOfRange(_) => FormatError::Schema(e.to_string()),
            _ => FormatError::Algebra(e.to_string()),
        })?;
        let instance = Instance {
            document: self.clone(),
            gog: Arc::new(gog),
        };
        for name in self.subgroups.keys() {
            instance.subgroup(name)?;
        }
        Ok(instance)
    }
}

impl Instance {
    pub fn load(path: &std::path::Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FormatError::Schema(format!("{}: {e}", path.display())))?;
        InstanceDocument::parse(&text)?.validate()
    }

    /// Generators of a named subgroup, as based loops.
    pub fn subgroup(&self, name: &str) -> Result<Vec<GWord>, FormatError> {
        let words = self
            .document
            .subgroups
            .get(name)
            .ok_or_else(|| FormatError::Schema(format!("no subgroup named `{name}`")))?;
        words
            .iter()
            .map(|w| parse_word(&self.gog, w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::Schema(format!("subgroup `{name}`: {e}")))
    }
}

/// Parses `v:g`, `k+`, `k-` tokens into a based loop.
pub fn parse_word(gog: &GraphOfGroups, text: &str) -> Result<GWord, WordError> {
    gog.from_spres(&SPresWord::parse(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z2_Z3: &str = r#"{
        "graph": {"vertices": 2, "edges": [[0, 1]]},
        "vertex_groups": [[[0,1],[1,0]], [[0,1,2],[1,2,0],[2,0,1]]],
        "edge_groups": ["trivial"],
        "embeddings": [{"alpha": [0], "omega": [0]}],
        "base_vertex": 0,
        "subgroups": {"H": ["0:1 1:1 0:1 1:2", "0:1 1:2 0:1 1:1"], "A": ["0:1"]}
    }"#;

    #[test]
    fn parse_and_validate() {
        let doc = InstanceDocument::parse(Z2_Z3).unwrap();
        let inst = doc.validate().unwrap();
        assert_eq!(inst.gog.vertex_group(1).order(), 3);
        assert_eq!(inst.subgroup("H").unwrap().len(), 2);
        assert!(matches!(inst.subgroup("Q"), Err(FormatError::Schema(_))));
    }

    #[test]
    fn canonical_round_trip() {
        let doc = InstanceDocument::parse(Z2_Z3).unwrap();
        let text = doc.canonical();
        assert!(!text.contains(' ') || text.contains("0:1 "));
        assert!(!text.contains('\n'));
        let again = InstanceDocument::parse(&text).unwrap();
        assert_eq!(again, doc);
        assert_eq!(again.canonical(), text);
        assert_eq!(doc.digest().len(), 64);
        let inst = doc.validate().unwrap();
        let rebuilt = InstanceDocument::from_gog(&inst.gog, doc.subgroups.clone());
        assert_eq!(rebuilt, doc);
    }

    #[test]
    fn schema_and_algebra_errors() {
        let ragged = Z2_Z3.replace("[[0,1,2],[1,2,0],[2,0,1]]", "[[0,1,2],[1,2,0]]");
        let err = InstanceDocument::parse(&ragged).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let bad_map = Z2_Z3
            .replace("\"trivial\"]", "[[0,1],[1,0]]]")
            .replace("{\"alpha\": [0], \"omega\": [0]}", "{\"alpha\": [0, 1], \"omega\": [0, 1]}");
        let err = InstanceDocument::parse(&bad_map).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let extra = Z2_Z3.replace("\"base_vertex\"", "\"colour\": 1, \"base_vertex\"");
        assert_eq!(InstanceDocument::parse(&extra).unwrap_err().exit_code(), 2);
        let bad_word = Z2_Z3.replace("\"0:1\"]", "\"0:7\"]");
        let err = InstanceDocument::parse(&bad_word).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let non_group = Z2_Z3.replace("[[0,1],[1,0]], [[0,1,2]", "[[0,1],[1,1]], [[0,1,2]");
        let err = InstanceDocument::parse(&non_group).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
