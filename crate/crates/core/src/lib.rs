//! Subgroup intersections in fundamental groups of finite graphs of finite groups.

pub mod cli;
pub mod corpus;
pub mod finite_group;
pub mod fixtures;
pub mod folding;
pub mod formats;
pub mod graph_of_groups;
pub mod intersection;
pub mod serre_graph;
pub mod tree_oracle;
