//! Seeded random instances over the fixtures, checked end to end.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fixtures::{self, Fixture};
use crate::folding::subgroup_graph;
use crate::graph_of_groups::GWord;
use crate::intersection::{fiber_product, BoundReport};
use crate::tree_oracle::{corroborate, TreeBall, MAX_RADIUS};

/// Longest generator, in edges.
pub const MAX_GENERATOR_EDGES: usize = 8;
pub const MAX_GENERATORS: usize = 4;
/// Attempts with unconstrained generators before sampling only from the kernel.
const MIXED_ATTEMPTS: usize = 20;
/// Oracle runs are skipped when the larger ball would exceed this many vertices.
pub const ORACLE_BALL_BUDGET: usize = 20_000;
const ORACLE_LENGTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Free,
    Amalgam,
    Hnn,
    Mixed,
}

impl Profile {
    pub fn fixtures(self) -> Vec<Fixture> {
        match self {
            Profile::Free => vec![
                fixtures::f2(),
                fixtures::theta(),
                fixtures::z2_free_z3(),
                fixtures::z3_free_z3(),
                fixtures::z2_free_z2(),
                fixtures::s3_free_z2(),
                fixtures::triangle_z2(),
                fixtures::z2_hnn_trivial(),
            ],
            Profile::Amalgam => vec![fixtures::z4_amalg_z2_z6(), fixtures::z4_amalg_z2_z4()],
            Profile::Hnn => vec![
                fixtures::z2_hnn_trivial(),
                fixtures::klein_hnn_z2(),
                fixtures::z6_hnn_z3(),
            ],
            Profile::Mixed => fixtures::all(),
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(Profile::Free),
            "amalgam" => Ok(Profile::Amalgam),
            "hnn" => Ok(Profile::Hnn),
            "mixed" => Ok(Profile::Mixed),
            _ => Err(format!("unknown profile `{s}` (free, amalgam, hnn, mixed)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Profile::Free => "free",
            Profile::Amalgam => "amalgam",
            Profile::Hnn => "hnn",
            Profile::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleSummary {
    pub verdict: String,
    pub radius: usize,
    pub oracle_rank: Option<usize>,
    pub folding_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusRecord {
    pub index: usize,
    pub fixture: String,
    pub h: Vec<String>,
    pub k: Vec<String>,
    /// Subgroups thrown away because they did not act freely.
    pub resamples: usize,
    pub bound: BoundReport,
    pub oracle_h: OracleSummary,
    pub oracle_k: OracleSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub instances: usize,
    pub bound_holds: usize,
    pub chain_holds: usize,
    pub nontrivial_edge_groups: usize,
    pub trivial_edge_groups: usize,
    /// Among instances with trivial edge groups.
    pub neumann_product_holds: usize,
    pub max_m_lower: usize,
    pub oracle_corroborated: usize,
    pub oracle_disagrees: usize,
    pub oracle_inconclusive: usize,
    pub oracle_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusReport {
    pub version: String,
    pub profile: Profile,
    pub seed: u64,
    pub count: usize,
    pub summary: CorpusSummary,
    pub instances: Vec<CorpusRecord>,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Every instance satisfied the bound and every chain verdict.
    pub fn all_hold(&self) -> bool {
        self.summary.bound_holds == self.count && self.summary.chain_holds == self.count
    }
}

/// Per-instance generator: the same `(seed, index)` always gives the same stream.
pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn sample_generator(f: &Fixture, rng: &mut ChaCha8Rng, kernel_only: bool) -> GWord {
    let gog = &f.gog;
    let in_kernel = f.kernel.is_some() && (kernel_only || rng.random_bool(0.5));
    loop {
        let max_edges = rng.random_range(1..=MAX_GENERATOR_EDGES);
        let w = gog.random_element_with(max_edges, rng);
        if gog.is_identity(&w) {
            continue;
        }
        if in_kernel && !f.kernel.as_ref().is_some_and(|k| k.in_kernel(gog, &w)) {
            continue;
        }
        return w;
    }
}

/// A random subgroup acting freely on the tree, with the number of rejected draws.
pub fn sample_subgroup(f: &Fixture, rng: &mut ChaCha8Rng) -> (Vec<GWord>, usize) {
    let mut rejected = 0;
    loop {
        let kernel_only = rejected >= MIXED_ATTEMPTS;
        let n = rng.random_range(1..=MAX_GENERATORS);
        let gens: Vec<GWord> = (0..n).map(|_| sample_generator(f, rng, kernel_only)).collect();
        if subgroup_graph(&f.gog, &gens).is_ok() {
            return (gens, rejected);
        }
        rejected += 1;
    }
}

/// Oracle run sized to the generators, skipped when the ball would be too big.
pub fn bounded_oracle(f: &Fixture, gens: &[GWord]) -> OracleSummary {
    let gog = &f.gog;
    let folding_rank = subgroup_graph(gog, gens).map(|d| d.core().rank).unwrap_or(0);
    let radius = gens.iter().map(|g| gog.normal_form(g).len()).max().unwrap_or(0).max(1);
    let skipped = || OracleSummary {
        verdict: "skipped".into(),
        radius,
        oracle_rank: None,
        folding_rank,
    };
    if radius + 2 > MAX_RADIUS || TreeBall::build_capped(gog, radius + 2, ORACLE_BALL_BUDGET).is_err() {
        return skipped();
    }
    match corroborate(gog, gens, radius, ORACLE_LENGTH) {
        Ok(Ok(r)) => OracleSummary {
            verdict: r.verdict,
            radius,
            oracle_rank: r.oracle_rank,
            folding_rank,
        },
        _ => skipped(),
    }
}

fn words(f: &Fixture, gens: &[GWord]) -> Vec<String> {
    gens.iter().map(|g| f.gog.to_spres(g).to_string()).collect()
}

pub fn run_instance(fixtures: &[Fixture], seed: u64, index: usize, oracle: bool) -> CorpusRecord {
    let f = &fixtures[index % fixtures.len()];
    let mut rng = instance_rng(seed, index);
    let (h, rh) = sample_subgroup(f, &mut rng);
    let (k, rk) = sample_subgroup(f, &mut rng);
    let dh = subgroup_graph(&f.gog, &h).expect("sampled subgroups fold");
    let dk = subgroup_graph(&f.gog, &k).expect("sampled subgroups fold");
    let bound = fiber_product(&dh, &dk).expect("same ambient group").bound_report();
    let (oracle_h, oracle_k) = if oracle {
        (bounded_oracle(f, &h), bounded_oracle(f, &k))
    } else {
        let off = |d: &crate::folding::BlockGraph| OracleSummary {
            verdict: "skipped".into(),
            radius: 0,
            oracle_rank: None,
            folding_rank: d.core().rank,
        };
        (off(&dh), off(&dk))
    };
    CorpusRecord {
        index,
        fixture: f.name.to_string(),
        h: words(f, &h),
        k: words(f, &k),
        resamples: rh + rk,
        bound,
        oracle_h,
        oracle_k,
    }
}

pub fn run_corpus(profile: Profile, seed: u64, count: usize, oracle: bool) -> CorpusReport {
    let fixtures = profile.fixtures();
    let instances: Vec<CorpusRecord> = (0..count)
        .into_par_iter()
        .map(|i| run_instance(&fixtures, seed, i, oracle))
        .collect();
    let mut summary = CorpusSummary {
        instances: count,
        ..CorpusSummary::default()
    };
    for r in &instances {
        let b = &r.bound;
        summary.bound_holds += b.holds as usize;
        summary.chain_holds += b.chain.all() as usize;
        if b.trivial_edge_groups {
            summary.trivial_edge_groups += 1;
            summary.neumann_product_holds += b.neumann_product_holds as usize;
        } else {
            summary.nontrivial_edge_groups += 1;
        }
        summary.max_m_lower = summary.max_m_lower.max(b.m_lower);
        for o in [&r.oracle_h, &r.oracle_k] {
            match o.verdict.as_str() {
                "corroborated" => summary.oracle_corroborated += 1,
                "disagrees" => summary.oracle_disagrees += 1,
                "inconclusive" => summary.oracle_inconclusive += 1,
                _ => summary.oracle_skipped += 1,
            }
        }
    }
    CorpusReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        profile,
        seed,
        count,
        summary,
        instances,
    }
}
