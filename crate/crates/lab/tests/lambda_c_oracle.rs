//! Critical-rate oracle from a naive Gillespie simulation on the integers.
//!
//! The simulator below shares nothing with the engine: no graphical
//! construction, no truncation, its own generator. `ORACLE_LAMBDA_C` was
//! produced by `recompute_oracle` (run with `--ignored`) and is frozen here.

use std::collections::HashMap;

use contact_core::{build_graph, GraphSpec, Serial};
use contact_lab::estimators::estimate_survival_prob;
use contact_lab::stats::two_proportion_test;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Bisection point where survival from the origin to t = 200 crosses 0.05,
/// 20000 runs per rate.
pub const ORACLE_LAMBDA_C: f64 = 1.5068;
const HORIZON: f64 = 200.0;

fn survives(lambda: f64, horizon: f64, rng: &mut StdRng) -> bool {
    let mut infected: Vec<i64> = vec![0];
    let mut index: HashMap<i64, usize> = HashMap::from([(0, 0)]);
    let per_site = 1.0 + 2.0 * lambda;
    let mut t = 0.0;
    while !infected.is_empty() {
        t += -(1.0 - rng.random::<f64>()).ln() / (infected.len() as f64 * per_site);
        if t > horizon {
            return true;
        }
        let i = rng.random_range(0..infected.len());
        let x = infected[i];
        let u = rng.random::<f64>() * per_site;
        if u < 1.0 {
            infected.swap_remove(i);
            index.remove(&x);
            if i < infected.len() {
                index.insert(infected[i], i);
            }
        } else {
            let y = if u < 1.0 + lambda { x - 1 } else { x + 1 };
            if !index.contains_key(&y) {
                index.insert(y, infected.len());
                infected.push(y);
            }
        }
    }
    false
}

fn survival(lambda: f64, reps: u64, seed: u64) -> u64 {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..reps).filter(|_| survives(lambda, HORIZON, &mut rng)).count() as u64
}

#[test]
#[ignore = "long run; prints the value frozen in ORACLE_LAMBDA_C"]
fn recompute_oracle() {
    let reps = 20_000;
    let (mut lo, mut hi) = (1.0, 2.5);
    let mut step = 0;
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        let p = survival(mid, reps, 1000 + step) as f64 / reps as f64;
        println!("lambda {mid:.4}: survival {p:.4}");
        if p > 0.05 {
            hi = mid;
        } else {
            lo = mid;
        }
        step += 1;
    }
    println!("oracle {:.4}", 0.5 * (lo + hi));
}

#[test]
fn oracle_lies_in_the_bracket() {
    assert!((1.5..=1.8).contains(&ORACLE_LAMBDA_C), "{ORACLE_LAMBDA_C}");
}

#[test]
fn engine_survival_matches_the_naive_simulation() {
    // at the oracle rate both should report survival near the threshold
    let reps = 3000;
    let naive = survival(ORACLE_LAMBDA_C, reps, 77);
    let g = build_graph(&GraphSpec::lattice(1, 400)).unwrap();
    let e = estimate_survival_prob(&g, ORACLE_LAMBDA_C, 0, HORIZON, reps, 78, &Serial).unwrap();
    let engine = (e.value * reps as f64).round() as u64;
    let test = two_proportion_test(naive, reps, engine, reps);
    assert!(!test.rejected(0.01), "naive {naive}, engine {engine}: {test:?}");
}
