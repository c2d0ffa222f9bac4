use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vfkit_core::corpus::{instance_rng, sample_subgroup};
use vfkit_core::fixtures::{self, Fixture};
use vfkit_core::folding::{subgroup_graph, wedge};
use vfkit_core::graph_of_groups::GWord;
use vfkit_core::intersection::fiber_product;
use vfkit_core::tree_oracle::TreeBall;

fn fixture(i: usize) -> Fixture {
    let all = fixtures::all();
    all[i % all.len()].clone()
}

fn words(f: &Fixture, seed: u64, n: usize, max_edges: usize) -> Vec<GWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| f.gog.random_element_with(max_edges, &mut rng)).collect()
}

#[test]
fn word_times_inverse_is_identity() {
    for f in fixtures::all() {
        let gog = &f.gog;
        for w in words(&f, 11, 1000, 8) {
            let p = gog.multiply(&w, &gog.invert(&w)).unwrap();
            assert!(gog.is_identity(&p), "{}: {}", f.name, gog.display_word(&w));
            let q = gog.multiply(&gog.invert(&w), &w).unwrap();
            assert!(gog.is_identity(&q));
        }
    }
}

/// Two loops with trivial edge groups are equal exactly when they move every
/// vertex of a large enough ball the same way.
#[test]
fn equality_matches_action_on_a_ball() {
    for f in fixtures::all().into_iter().filter(|f| f.trivial_edge_groups()) {
        let gog = &f.gog;
        if gog.max_vertex_group_order() > 6 {
            continue;
        }
        let ball = TreeBall::build(gog, 6).unwrap();
        let ws = words(&f, 5, 60, 4);
        let action = |h: &GWord| -> Vec<Option<usize>> {
            (0..ball.num_vertices())
                .filter(|&v| ball.depth(v) <= 2)
                .map(|v| ball.vertex_of(&gog.multiply(h, &ball.vertex_word(v)).unwrap()))
                .collect()
        };
        let acts: Vec<_> = ws.iter().map(action).collect();
        for i in 0..ws.len() {
            for j in 0..ws.len() {
                assert_eq!(gog.equal(&ws[i], &ws[j]), acts[i] == acts[j], "{}", f.name);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_forms_are_stable(fi in 0usize..12, seed in any::<u64>()) {
        let f = fixture(fi);
        let gog = &f.gog;
        let ws = words(&f, seed, 3, 6);
        let (a, b, c) = (&ws[0], &ws[1], &ws[2]);
        let n = gog.normal_form(a);
        prop_assert_eq!(gog.normal_form(&n), n.clone());
        prop_assert!(gog.is_normal(&n));
        prop_assert!(gog.reduce(a).len() <= a.len());
        prop_assert_eq!(gog.multiply(a, &gog.identity()).unwrap(), n);
        let left = gog.multiply(&gog.multiply(a, b).unwrap(), c).unwrap();
        let right = gog.multiply(a, &gog.multiply(b, c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        let ab = gog.multiply(a, b).unwrap();
        prop_assert!(ab.len() <= a.len() + b.len());
        let round = gog.from_spres(&gog.to_spres(a)).unwrap();
        prop_assert!(gog.equal(&round, a));
    }

    #[test]
    fn folding_is_confluent(fi in 0usize..12, seed in any::<u64>()) {
        let f = fixture(fi);
        let mut rng = instance_rng(seed, 0);
        let (gens, _) = sample_subgroup(&f, &mut rng);
        let w = wedge(&f.gog, &gens).unwrap();
        let a = w.fold().unwrap();
        let mut order: Vec<_> = (0..w.num_packets()).collect();
        order.shuffle(&mut rng);
        prop_assert_eq!(&a, &w.fold_with_order(&order).unwrap());
        let mut shuffled = gens.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(&a, &subgroup_graph(&f.gog, &shuffled).unwrap());
        let twice = a.fold().unwrap();
        prop_assert_eq!(&a, &twice);
    }

    #[test]
    fn folded_graphs_contain_their_generators(fi in 0usize..12, seed in any::<u64>()) {
        let f = fixture(fi);
        let gog = &f.gog;
        let mut rng = instance_rng(seed, 1);
        let (gens, _) = sample_subgroup(&f, &mut rng);
        let d = subgroup_graph(gog, &gens).unwrap();
        for g in &gens {
            prop_assert!(d.member(g));
            prop_assert!(d.member(&gog.invert(g)));
            for h in &gens {
                prop_assert!(d.member(&gog.multiply(g, h).unwrap()));
            }
        }
        for b in 0..d.num_blocks() {
            prop_assert!(d.degree(b) <= gog.tree_degree(d.block_type(b)));
        }
        let core = d.core();
        let basis = d.free_generators();
        prop_assert_eq!(basis.len(), core.rank);
        for g in &basis {
            prop_assert!(d.member(g));
        }
        if !basis.is_empty() {
            let again = subgroup_graph(gog, &basis).unwrap();
            prop_assert_eq!(&again, &d);
        }
        let mut extra = gens.clone();
        extra.push(gog.multiply(&gens[0], &gens[gens.len() - 1]).unwrap());
        if !gog.is_identity(&extra[extra.len() - 1]) {
            prop_assert_eq!(&subgroup_graph(gog, &extra).unwrap(), &d);
        }
    }

    #[test]
    fn intersection_is_symmetric_and_bounded(fi in 0usize..12, seed in any::<u64>()) {
        let f = fixture(fi);
        let mut rng = instance_rng(seed, 2);
        let (h, _) = sample_subgroup(&f, &mut rng);
        let (k, _) = sample_subgroup(&f, &mut rng);
        let dh = subgroup_graph(&f.gog, &h).unwrap();
        let dk = subgroup_graph(&f.gog, &k).unwrap();
        let hk = fiber_product(&dh, &dk).unwrap();
        let kh = fiber_product(&dk, &dh).unwrap();
        let a = hk.bound_report();
        let b = kh.bound_report();
        prop_assert_eq!(a.reduced_rank_intersection, b.reduced_rank_intersection);
        prop_assert_eq!(a.rank_intersection, b.rank_intersection);
        prop_assert!(a.all_verdicts_hold(), "{:?}", a);
        prop_assert!(b.all_verdicts_hold(), "{:?}", b);
        prop_assert!(a.m_lower <= a.m_prime);
        prop_assert_eq!(&hk.intersection_graph(), &kh.intersection_graph());
    }

    #[test]
    fn intersection_membership(fi in 0usize..12, seed in any::<u64>()) {
        let f = fixture(fi);
        let gog = &f.gog;
        let mut rng = instance_rng(seed, 3);
        let (h, _) = sample_subgroup(&f, &mut rng);
        let (k, _) = sample_subgroup(&f, &mut rng);
        let dh = subgroup_graph(gog, &h).unwrap();
        let dk = subgroup_graph(gog, &k).unwrap();
        let meet = fiber_product(&dh, &dk).unwrap().intersection_graph();
        let mut probes = words(&f, seed, 40, 6);
        probes.extend(h.iter().cloned());
        probes.extend(k.iter().cloned());
        for g in meet.free_generators() {
            prop_assert!(dh.member(&g) && dk.member(&g));
            probes.push(g);
        }
        for w in &probes {
            prop_assert_eq!(meet.member(w), dh.member(w) && dk.member(w));
        }
    }
}
