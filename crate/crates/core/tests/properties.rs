//! Pathwise invariants of the graphical construction, checked on random
//! graphs, sets, rates and seeds.

use contact_core::graphical::{evolve, DualSweep, Sweep};
use contact_core::rng::CounterRng;
use contact_core::{build_graph, Configuration, Graph, GraphSpec, GraphicalSample};
use proptest::prelude::*;

const TIMES: [f64; 4] = [0.3, 1.0, 2.5, 4.0];

fn graph_spec() -> impl Strategy<Value = GraphSpec> {
    prop_oneof![
        (1u32..=2, 1u32..=6).prop_map(|(d, r)| GraphSpec::lattice(d, r.min(if d == 2 { 3 } else { 6 }))),
        (1u32..=12).prop_map(GraphSpec::half_line),
        (3u32..=4, 1u32..=3).prop_map(|(k, h)| GraphSpec::regular_tree(k, h)),
    ]
}

fn subset(n: usize, bits: u64) -> Vec<usize> {
    (0..n).filter(|&v| bits.rotate_right(v as u32) & 1 == 1).collect()
}

/// States of the process from `set` at each of `TIMES`.
fn states(sample: &GraphicalSample, set: &[usize]) -> Vec<Vec<bool>> {
    let mut sweep = Sweep::from_set(sample, set, 0.0);
    TIMES
        .iter()
        .map(|&t| {
            while sweep.next_flip(t).is_some() {}
            sweep.state().to_vec()
        })
        .collect()
}

fn built(spec: &GraphSpec) -> Graph {
    build_graph(spec).expect("valid spec")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_in_the_initial_set(spec in graph_spec(), lambda in 0.0f64..4.0, seed: u64, a_bits: u64, b_bits: u64) {
        let g = built(&spec);
        let b = subset(g.len(), a_bits | b_bits);
        let a = subset(g.len(), a_bits);
        let sample = GraphicalSample::new(&g, (0.0, 4.0), lambda, seed);
        for (sa, sb) in states(&sample, &a).iter().zip(states(&sample, &b)) {
            prop_assert!(sa.iter().zip(&sb).all(|(x, y)| !x || *y));
        }
    }

    #[test]
    fn additive_over_unions(spec in graph_spec(), lambda in 0.0f64..4.0, seed: u64, a_bits: u64, b_bits: u64) {
        let g = built(&spec);
        let (a, b) = (subset(g.len(), a_bits), subset(g.len(), b_bits));
        let ab = subset(g.len(), a_bits | b_bits);
        let sample = GraphicalSample::new(&g, (0.0, 4.0), lambda, seed);
        let (sa, sb, sab) = (states(&sample, &a), states(&sample, &b), states(&sample, &ab));
        for k in 0..TIMES.len() {
            let union: Vec<bool> = sa[k].iter().zip(&sb[k]).map(|(x, y)| *x || *y).collect();
            prop_assert_eq!(&union, &sab[k]);
        }
    }

    #[test]
    fn forward_and_dual_agree(spec in graph_spec(), lambda in 0.0f64..4.0, seed: u64, a_bits: u64, b_bits: u64, t in 0.0f64..4.0) {
        let g = built(&spec);
        let (a, b) = (subset(g.len(), a_bits), subset(g.len(), b_bits));
        let sample = GraphicalSample::new(&g, (0.0, 4.0), lambda, seed);
        let mut fwd = Sweep::from_set(&sample, &a, 0.0);
        while fwd.next_flip(t).is_some() {}
        let mut dual = DualSweep::new(&sample, &b, t);
        while dual.next_flip(0.0).is_some() {}
        let forward = b.iter().any(|&v| fwd.is_infected(v));
        let backward = a.iter().any(|&v| dual.state()[v]);
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn monotone_in_the_rate_under_thinning(spec in graph_spec(), l1 in 0.0f64..4.0, l2 in 0.0f64..4.0, seed: u64, bits: u64) {
        let g = built(&spec);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let set = subset(g.len(), bits);
        let cap = 4.0;
        let s_lo = GraphicalSample::thinned(&g, (0.0, 4.0), lo, cap, seed);
        let s_hi = GraphicalSample::thinned(&g, (0.0, 4.0), hi, cap, seed);
        for (x, y) in states(&s_lo, &set).iter().zip(states(&s_hi, &set)) {
            prop_assert!(x.iter().zip(&y).all(|(p, q)| !p || *q));
        }
    }

    #[test]
    fn same_seed_same_trajectory(spec in graph_spec(), lambda in 0.0f64..4.0, seed: u64, bits: u64) {
        let g = built(&spec);
        let init = Configuration::from_set(g.len(), &subset(g.len(), bits), 0.0);
        let all: Vec<usize> = (0..g.len()).collect();
        let one = evolve(&GraphicalSample::new(&g, (0.0, 3.0), lambda, seed), &init, &all).unwrap();
        let two = evolve(&GraphicalSample::new(&g, (0.0, 3.0), lambda, seed), &init, &all).unwrap();
        prop_assert_eq!(one, two);
    }

    #[test]
    fn extending_the_window_keeps_the_past(spec in graph_spec(), lambda in 0.0f64..4.0, seed: u64, bits: u64) {
        let g = built(&spec);
        let set = subset(g.len(), bits);
        let short = GraphicalSample::new(&g, (0.0, 4.0), lambda, seed);
        let long = GraphicalSample::new(&g, (0.0, 9.0), lambda, seed);
        prop_assert_eq!(states(&short, &set), states(&long, &set));
    }

    #[test]
    fn lattice_structure(dim in 1u32..=3, radius in 0u32..=4) {
        let g = built(&GraphSpec::lattice(dim, radius));
        prop_assert_eq!(g.len(), (2 * radius as usize + 1).pow(dim));
        prop_assert_eq!(g.origin(), 0);
        prop_assert!(g.coords(0).iter().all(|&c| c == 0));
        for v in 0..g.len() {
            prop_assert_eq!(g.vertex_at(g.coords(v)), Some(v));
            prop_assert!(g.degree(v) <= 2 * dim as usize);
            for u in g.neighbors(v) {
                prop_assert!(g.neighbors(u).any(|w| w == v));
                let l1: i64 = g.coords(u).iter().zip(g.coords(v)).map(|(a, b)| (a - b).abs()).sum();
                prop_assert_eq!(l1, 1);
            }
        }
        // the inner boxes are prefixes of the id range
        for r in 0..=radius as usize {
            let n = (2 * r + 1).pow(dim);
            prop_assert!((0..g.len()).all(|v| (v < n) == g.coords(v).iter().all(|c| c.unsigned_abs() as usize <= r)));
        }
    }

    #[test]
    fn tree_degrees(k in 3u32..=5, depth in 0u32..=3) {
        let g = built(&GraphSpec::regular_tree(k, depth));
        prop_assert_eq!(g.edge_count() / 2 + 1, g.len());
        prop_assert!((0..g.len()).all(|v| g.degree(v) <= k as usize));
        if depth > 0 {
            prop_assert_eq!(g.degree(g.origin()), k as usize);
        }
    }

    #[test]
    fn rng_ranges(key: u64, n in 1u64..1000, rate in 0.01f64..100.0) {
        let mut r = CounterRng::new(key);
        for _ in 0..32 {
            prop_assert!(r.next_below(n) < n);
            let u = r.next_open01();
            prop_assert!(u > 0.0 && u < 1.0);
            let e = r.next_exp(rate);
            prop_assert!(e.is_finite() && e > 0.0);
        }
    }
}
