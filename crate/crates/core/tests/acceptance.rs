//! One line per acceptance criterion. Run with `--nocapture` to see them.

use std::time::Instant;

use vfkit_core::cli::run_args;
use vfkit_core::corpus::{run_corpus, CorpusReport, Profile};
use vfkit_core::fixtures;
use vfkit_core::folding::{subgroup_graph, FoldError};
use vfkit_core::intersection::verify_bound;
use vfkit_core::tree_oracle::{corroborate, enumerate_subgroup, enumerate_subgroup_capped, TreeBall};

const SEED: u64 = 1;

/// Found by searching the amalgam profile: instance 0 at seed 1 has a pair of
/// core edges with two edges of Ψ(H∩K) over it.
const AMALGAM_WITNESS_INDEX: usize = 0;

type Verdict = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Verdict {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

struct Corpus {
    reports: Vec<CorpusReport>,
}

impl Corpus {
    fn build() -> Self {
        Corpus {
            reports: vec![
                run_corpus(Profile::Free, SEED, 200, true),
                run_corpus(Profile::Amalgam, SEED, 150, true),
                run_corpus(Profile::Hnn, SEED, 150, true),
            ],
        }
    }

    fn records(&self) -> impl Iterator<Item = &vfkit_core::corpus::CorpusRecord> {
        self.reports.iter().flat_map(|r| r.instances.iter())
    }
}

fn criterion_1(c: &Corpus, secs: f64) -> Verdict {
    let n = c.records().count();
    let holds = c.records().filter(|r| r.bound.holds).count();
    let disagree: usize = c.reports.iter().map(|r| r.summary.oracle_disagrees).sum();
    let corroborated: usize = c.reports.iter().map(|r| r.summary.oracle_corroborated).sum();
    let witness = &c.reports[1].instances[AMALGAM_WITNESS_INDEX];
    let nontrivial = c.records().filter(|r| !r.bound.trivial_edge_groups).count();
    check(
        n >= 500 && holds == n && disagree == 0 && witness.bound.m_lower == 2 && witness.bound.m_prime == 2,
        format!(
            "{holds}/{n} instances satisfy the bound ({nontrivial} with nontrivial edge groups), \
             {corroborated} oracle corroborations, 0 disagreements, amalgam witness N = 2, {secs:.1}s"
        ),
        format!(
            "{holds}/{n} hold, {disagree} oracle disagreements, witness N = {}",
            witness.bound.m_lower
        ),
    )
}

fn criterion_2(c: &Corpus) -> Verdict {
    let free: Vec<_> = c.records().filter(|r| r.bound.trivial_edge_groups).collect();
    let ok = free.iter().all(|r| {
        let b = &r.bound;
        b.m_prime == 1
            && b.bound == 6 * b.reduced_rank_h * b.reduced_rank_k
            && b.reduced_rank_intersection <= b.bound
    });
    let neumann = free.iter().filter(|r| r.bound.neumann_product_holds).count();
    let free_groups: Vec<_> = free
        .iter()
        .filter(|r| r.fixture == "f2" || r.fixture == "theta")
        .collect();
    let neumann_free = free_groups.iter().filter(|r| r.bound.neumann_product_holds).count();
    check(
        !free.is_empty() && ok,
        format!(
            "{} trivial-edge-group instances within 6·r̄(H)·r̄(K); informational: r̄(H∩K) ≤ r̄(H)·r̄(K) on \
             {neumann}/{} of them, {neumann_free}/{} on free groups",
            free.len(),
            free.len(),
            free_groups.len()
        ),
        format!("{} instances, constant-6 check failed", free.len()),
    )
}

fn criterion_3(c: &Corpus) -> Verdict {
    let n = c.records().count();
    let names = [
        "local injectivity",
        "core projection",
        "fiber degree bound",
        "fiber degree sum",
        "pair inequality",
        "multiplicity bound",
        "rank identities",
    ];
    let mut failed = Vec::new();
    for r in c.records() {
        let v = &r.bound.chain;
        let flags = [
            v.local_injectivity,
            v.core_projection,
            v.fiber_degree_bound,
            v.fiber_degree_sum,
            v.pair_inequality,
            v.multiplicity_bound,
            v.rank_identities,
        ];
        for (name, ok) in names.iter().zip(flags) {
            if !ok {
                failed.push(format!("{name} on {} #{}", r.fixture, r.index));
            }
        }
    }
    check(
        failed.is_empty(),
        format!("all {} proof-chain checks pass on {n} instances", names.len()),
        format!("{} failures, first: {}", failed.len(), failed.first().cloned().unwrap_or_default()),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut runs = 0;
    let mut loops = 0;
    let all = fixtures::all();
    for f in &all {
        let gog = &f.gog;
        for name in ["H", "K"] {
            let gens = f.words(name);
            runs += 1;
            match corroborate(gog, &gens, 8, 6) {
                Ok(Ok(r)) if r.stabilized && r.verdict == "corroborated" && r.oracle_rank == Some(r.folding_rank) => {}
                other => problems.push(format!("{} {name}: {other:?}", f.name)),
            }
            let folded = subgroup_graph(gog, &gens).unwrap();
            let max_gen = gens.iter().map(|g| g.len()).max().unwrap_or(0);
            let hs = enumerate_subgroup_capped(gog, &gens, 12, Some(6 + 2 * max_gen), 400_000).unwrap();
            gog.for_each_normal_loop(6, |w| {
                loops += 1;
                if hs.contains(w) != folded.member(w) {
                    problems.push(format!("{} {name}: membership of {}", f.name, gog.display_word(w)));
                }
            });
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        all.len() >= 12 && problems.is_empty(),
        format!(
            "{} fixtures, {runs} subgroups corroborated, membership agrees on {loops} loops of ≤ 6 edges, {secs:.1}s",
            all.len()
        ),
        format!("{} problems, first: {}", problems.len(), problems.first().cloned().unwrap_or_default()),
    )
}

fn criterion_5() -> Verdict {
    let f = fixtures::z2_free_z3();
    let h = f.words("H");
    let core = subgroup_graph(&f.gog, &h).unwrap().core();
    let oracle = corroborate(&f.gog, &h, 8, 6).unwrap().unwrap();
    let b = verify_bound(&f.gog, &h, &h).unwrap();
    check(
        core.rank == 2 && core.reduced_rank == 1 && oracle.oracle_rank == Some(2) && b.reduced_rank_intersection == 1 && b.bound == 6 && b.all_verdicts_hold(),
        format!(
            "ℤ/2 * ℤ/3: rank {} (oracle {:?}), r̄ = {}, r̄(H∩H) = {} ≤ {}",
            core.rank, oracle.oracle_rank, core.reduced_rank, b.reduced_rank_intersection, b.bound
        ),
        format!("rank {}, r̄ {}, r̄(H∩H) {}", core.rank, core.reduced_rank, b.reduced_rank_intersection),
    )
}

fn criterion_6() -> Verdict {
    let f = fixtures::z2_free_z3();
    let a = f.words("torsion");
    let fold = subgroup_graph(&f.gog, &a);
    let violation = matches!(fold, Err(FoldError::FreeActionViolation { .. }));
    let ball = TreeBall::build(&f.gog, 4).unwrap();
    let hs = enumerate_subgroup(&f.gog, &a, 2, None).unwrap();
    let fixed = ball.fixed_vertex_witness(&hs);
    let path = format!("{}/fixtures/z2_free_z3.json", env!("CARGO_MANIFEST_DIR"));
    let code = run_args(["vfkit", "rank", &path, "torsion"]).code;
    check(
        violation && fixed.is_some() && code == 4,
        format!("⟨a⟩ raises a free-action violation, fixes ball vertex {:?}, rank exits 4", fixed.as_ref().map(|x| x.1)),
        format!("violation {violation}, fixed {fixed:?}, exit {code}"),
    )
}

fn criterion_7() -> Verdict {
    let args = ["vfkit", "corpus", "--profile", "mixed", "--count", "120", "--seed", "17"];
    let a = run_args(args);
    let b = run_args(args);
    check(
        a.code == 0 && a.stdout == b.stdout && !a.stdout.is_empty(),
        format!("two corpus runs give identical {}-byte reports", a.stdout.len()),
        format!("exit {} / {}, reports differ: {}", a.code, b.code, a.stdout != b.stdout),
    )
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let corpus = Corpus::build();
    let corpus_secs = start.elapsed().as_secs_f64();
    let verdicts = [
        criterion_1(&corpus, corpus_secs),
        criterion_2(&corpus),
        criterion_3(&corpus),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let mut failed = 0;
    for (i, v) in verdicts.iter().enumerate() {
        match v {
            Ok(msg) => println!("criterion {}: PASS  {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {msg}", i + 1);
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
