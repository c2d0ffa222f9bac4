//! The `vfkit` command line.
//!
//! Exit codes: 0 success, 2 schema or usage, 3 algebra, 4 a subgroup does not act
//! freely, 5 a bound verdict failed, 6 an oracle cap was exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{run_corpus, Profile};
use crate::folding::{subgroup_graph, BlockGraph, FoldError};
use crate::formats::{parse_word, FormatError, Instance};
use crate::graph_of_groups::GWord;
use crate::intersection::{fiber_product, BoundReport, ComponentRecord, PairRecord};
use crate::tree_oracle::{
    corroborate_with, enumerate_subgroup_capped, stab_count_lower, OracleCaps, OracleError,
    OracleReport, TreeBall, MAX_BALL_VERTICES, MAX_ELEMENTS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_ALGEBRA: i32 = 3;
pub const EXIT_NOT_FREE: i32 = 4;
pub const EXIT_BOUND: i32 = 5;
pub const EXIT_CAPS: i32 = 6;

/// Overrides every `--seed` flag when set.
pub const SEED_ENV: &str = "VFKIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "vfkit", version, about = "Subgroup graphs and intersections in graphs of finite groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file and summarize it.
    Validate { path: PathBuf },
    /// Fold a named subgroup and print its rank.
    Rank {
        path: PathBuf,
        subgroup: String,
        /// Write the folded subgroup graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Print a free basis.
        #[arg(long)]
        gens: bool,
    },
    /// Intersect two named subgroups and check the rank bound.
    Intersect {
        path: PathBuf,
        h: String,
        k: String,
        /// Write the fiber product as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Include per-vertex-pair fiber records.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Decide whether a word lies in a named subgroup.
    Member {
        path: PathBuf,
        subgroup: String,
        word: String,
    },
    /// Compare folding with a quotient of a ball in the tree.
    Oracle {
        path: PathBuf,
        subgroup: String,
        /// A second subgroup; adds a stabilizer count for the pair.
        other: Option<String>,
        #[arg(short = 'R', long, default_value_t = 8)]
        radius: usize,
        #[arg(short = 'L', long, default_value_t = 6)]
        length: usize,
        #[arg(long, default_value_t = MAX_BALL_VERTICES)]
        max_ball_vertices: usize,
        #[arg(long, default_value_t = MAX_ELEMENTS)]
        max_elements: usize,
    },
    /// Run a seeded batch of random instances.
    Corpus {
        #[arg(long, default_value = "mixed")]
        profile: Profile,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip the oracle cross-check.
        #[arg(long)]
        no_oracle: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command printed and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: stderr.into(),
        }
    }
}

impl From<FormatError> for Outcome {
    fn from(e: FormatError) -> Self {
        Outcome::fail(e.exit_code(), format!("error: {e}\n"))
    }
}

impl From<OracleError> for Outcome {
    fn from(e: OracleError) -> Self {
        Outcome::fail(EXIT_CAPS, format!("error: {e}\n"))
    }
}

fn fold_failure(name: &str, e: &FoldError) -> Outcome {
    let code = match e {
        FoldError::FreeActionViolation { .. } => EXIT_NOT_FREE,
        _ => EXIT_ALGEBRA,
    };
    Outcome::fail(code, format!("error: subgroup `{name}`: {e}\n"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), Outcome> {
    std::fs::write(path, text)
        .map_err(|e| Outcome::fail(EXIT_SCHEMA, format!("error: {}: {e}\n", path.display())))
}

/// `VFKIT_SEED` if set, else the flag.
pub fn effective_seed(flag: u64) -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV} is not an unsigned integer: `{s}`")),
        Err(_) => Ok(flag),
    }
}

/// Parses arguments and runs; usage errors exit with the schema code.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome::fail(EXIT_SCHEMA, text)
            } else {
                Outcome::ok(text)
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let result = match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Rank {
            path,
            subgroup,
            dot,
            gens,
        } => cmd_rank(&path, &subgroup, dot.as_deref(), gens),
        Command::Intersect {
            path,
            h,
            k,
            dot,
            diagnostics,
        } => cmd_intersect(&path, &h, &k, dot.as_deref(), diagnostics),
        Command::Member {
            path,
            subgroup,
            word,
        } => cmd_member(&path, &subgroup, &word),
        Command::Oracle {
            path,
            subgroup,
            other,
            radius,
            length,
            max_ball_vertices,
            max_elements,
        } => cmd_oracle(
            &path,
            &subgroup,
            other.as_deref(),
            radius,
            length,
            OracleCaps {
                ball_vertices: max_ball_vertices,
                elements: max_elements,
            },
        ),
        Command::Corpus {
            profile,
            count,
            seed,
            no_oracle,
            out,
        } => cmd_corpus(profile, count, seed, !no_oracle, out.as_deref()),
    };
    result.unwrap_or_else(|e| e)
}

pub fn cmd_validate(path: &Path) -> Result<Outcome, Outcome> {
    let inst = Instance::load(path)?;
    let y = inst.gog.graph();
    let (amalgams, hnn) = inst.gog.construction_counts();
    let mut out = String::new();
    writeln!(out, "valid").unwrap();
    writeln!(out, "vertices: {}", y.num_vertices()).unwrap();
    writeln!(out, "edges: {}", y.num_positive_edges()).unwrap();
    writeln!(out, "amalgamated products: {amalgams}").unwrap();
    writeln!(out, "hnn extensions: {hnn}").unwrap();
    writeln!(out, "subgroups: {}", inst.document.subgroups.len()).unwrap();
    writeln!(out, "digest: {}", inst.document.digest()).unwrap();
    Ok(Outcome::ok(out))
}

fn fold_named(inst: &Instance, name: &str) -> Result<(Vec<GWord>, BlockGraph), Outcome> {
    let gens = inst.subgroup(name)?;
    let folded = subgroup_graph(&inst.gog, &gens).map_err(|e| fold_failure(name, &e))?;
    Ok((gens, folded))
}

#[derive(Debug, Serialize)]
struct SubgroupSummary {
    name: String,
    generators: Vec<String>,
    rank: usize,
    reduced_rank: usize,
    core_vertices: usize,
    core_edges: usize,
}

fn summarize(inst: &Instance, name: &str, folded: &BlockGraph) -> SubgroupSummary {
    let core = folded.core();
    SubgroupSummary {
        name: name.to_string(),
        generators: inst.document.subgroups[name].clone(),
        rank: core.rank,
        reduced_rank: core.reduced_rank,
        core_vertices: core.psi.num_vertices(),
        core_edges: core.psi.num_positive_edges(),
    }
}

pub fn cmd_rank(path: &Path, name: &str, dot: Option<&Path>, gens: bool) -> Result<Outcome, Outcome> {
    let inst = Instance::load(path)?;
    let (_, folded) = fold_named(&inst, name)?;
    let s = summarize(&inst, name, &folded);
    let mut out = String::new();
    writeln!(out, "subgroup: {name}").unwrap();
    writeln!(out, "rank: {}", s.rank).unwrap();
    writeln!(out, "reduced rank: {}", s.reduced_rank).unwrap();
    writeln!(out, "core vertices: {}", s.core_vertices).unwrap();
    writeln!(out, "core edges: {}", s.core_edges).unwrap();
    if gens {
        writeln!(out, "free basis:").unwrap();
        for g in folded.free_generators() {
            writeln!(out, "  {}", inst.gog.to_spres(&g)).unwrap();
        }
    }
    if let Some(p) = dot {
        write_file(p, &folded.to_dot(name))?;
    }
    Ok(Outcome::ok(out))
}

#[derive(Debug, Serialize)]
struct IntersectReport {
    version: &'static str,
    digest: String,
    h: SubgroupSummary,
    k: SubgroupSummary,
    bound: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<Vec<ComponentRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Vec<PairRecord>>,
}

pub fn cmd_intersect(
    path: &Path,
    h: &str,
    k: &str,
    dot: Option<&Path>,
    diagnostics: bool,
) -> Result<Outcome, Outcome> {
    let inst = Instance::load(path)?;
    let (_, dh) = fold_named(&inst, h)?;
    let (_, dk) = fold_named(&inst, k)?;
    let fp = fiber_product(&dh, &dk).expect("one ambient group");
    let bound = fp.bound_report();
    let (components, diag) = if diagnostics {
        let core = fp.intersection_core();
        let rows = fp.degree_chain_diagnostics(&core, &dh.core(), &dk.core(), bound.m_prime);
        (Some(fp.conjugate_components()), Some(rows))
    } else {
        (None, None)
    };
    if let Some(p) = dot {
        write_file(p, &fp.to_dot("fiber_product"))?;
    }
    let code = if bound.all_verdicts_hold() { EXIT_OK } else { EXIT_BOUND };
    let report = IntersectReport {
        version: env!("CARGO_PKG_VERSION"),
        digest: inst.document.digest(),
        h: summarize(&inst, h, &dh),
        k: summarize(&inst, k, &dk),
        bound,
        components,
        diagnostics: diag,
    };
    Ok(Outcome {
        code,
        stdout: to_json(&report),
        stderr: String::new(),
    })
}

pub fn cmd_member(path: &Path, name: &str, word: &str) -> Result<Outcome, Outcome> {
    let inst = Instance::load(path)?;
    let (_, folded) = fold_named(&inst, name)?;
    let w = parse_word(&inst.gog, word)
        .map_err(|e| Outcome::fail(EXIT_SCHEMA, format!("error: word: {e}\n")))?;
    Ok(Outcome::ok(format!("{}\n", folded.member(&w))))
}

#[derive(Debug, Serialize)]
struct FixedVertex {
    element: String,
    ball_vertex: usize,
    depth: usize,
}

#[derive(Debug, Serialize)]
struct ViolationReport {
    subgroup: String,
    error: String,
    fixed_vertex: Option<FixedVertex>,
}

#[derive(Debug, Serialize)]
struct OracleRun {
    subgroup: String,
    report: OracleReport,
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    version: &'static str,
    digest: String,
    runs: Vec<OracleRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stab_count_lower: Option<usize>,
    m_prime: usize,
}

pub fn cmd_oracle(
    path: &Path,
    name: &str,
    other: Option<&str>,
    radius: usize,
    length: usize,
    caps: OracleCaps,
) -> Result<Outcome, Outcome> {
    let inst = Instance::load(path)?;
    let gog = &inst.gog;
    let mut names = vec![name];
    names.extend(other);
    let mut runs = Vec::new();
    let mut sets = Vec::new();
    for n in &names {
        let gens = inst.subgroup(n)?;
        match corroborate_with(gog, &gens, radius, length, caps)? {
            Ok(report) => runs.push(OracleRun {
                subgroup: n.to_string(),
                report,
            }),
            Err(e) => {
                let ball = TreeBall::build_capped(gog, radius, caps.ball_vertices)?;
                let hs = enumerate_subgroup_capped(gog, &gens, length, Some(2 * radius), caps.elements)?;
                let fixed_vertex = ball.fixed_vertex_witness(&hs).map(|(h, v)| FixedVertex {
                    element: gog.to_spres(&h).to_string(),
                    ball_vertex: v,
                    depth: ball.depth(v),
                });
                let report = ViolationReport {
                    subgroup: n.to_string(),
                    error: e.to_string(),
                    fixed_vertex,
                };
                return Err(Outcome {
                    code: EXIT_NOT_FREE,
                    stdout: to_json(&report),
                    stderr: format!("error: subgroup `{n}`: {e}\n"),
                });
            }
        }
        if other.is_some() {
            sets.push(enumerate_subgroup_capped(gog, &gens, length, Some(2 * radius), caps.elements)?);
        }
    }
    let stab_count_lower = if sets.len() == 2 {
        let ball = TreeBall::build_capped(gog, radius, caps.ball_vertices)?;
        Some(stab_count_lower(&ball, &sets[0], &sets[1]))
    } else {
        None
    };
    let output = OracleOutput {
        version: env!("CARGO_PKG_VERSION"),
        digest: inst.document.digest(),
        runs,
        stab_count_lower,
        m_prime: gog.max_edge_group_order(),
    };
    Ok(Outcome::ok(to_json(&output)))
}

pub fn cmd_corpus(
    profile: Profile,
    count: usize,
    seed: u64,
    oracle: bool,
    out: Option<&Path>,
) -> Result<Outcome, Outcome> {
    let seed = effective_seed(seed).map_err(|e| Outcome::fail(EXIT_SCHEMA, format!("error: {e}\n")))?;
    let report = run_corpus(profile, seed, count, oracle);
    let code = if report.all_hold() { EXIT_OK } else { EXIT_BOUND };
    let json = format!("{}\n", report.to_json());
    let stdout = match out {
        Some(p) => {
            write_file(p, &json)?;
            let s = &report.summary;
            format!(
                "{} instances, {} bound verdicts hold, {} chain verdicts hold\n",
                s.instances, s.bound_holds, s.chain_holds
            )
        }
        None => json,
    };
    Ok(Outcome {
        code,
        stdout,
        stderr: String::new(),
    })
}
