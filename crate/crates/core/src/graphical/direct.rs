use alloc::vec::Vec;

use super::trajectory::{Configuration, Event, Trajectory};
use crate::graph::Graph;
use crate::rng::CounterRng;

/// Simulates the contact process straight from its transition rates: each
/// infected vertex recovers at rate 1 and infects each healthy neighbor at
/// rate `lambda`. Independent of the graphical construction; it exists as a
/// distributional oracle for [`super::evolve`].
///
/// Runs over `[initial.time, initial.time + horizon]` and records every
/// vertex. Events are drawn at the uniform rate `I * (1 + lambda * D)` and
/// thinned, which keeps each step O(1) on bounded-degree graphs.
pub fn evolve_direct(
    graph: &Graph,
    lambda: f64,
    initial: &Configuration,
    horizon: f64,
    seed: u64,
) -> Trajectory {
    assert_eq!(initial.len(), graph.len(), "configuration length");
    let start = initial.time;
    let end = start + horizon;
    let d = graph.degree_bound();
    let mut rng = CounterRng::new(seed);
    let mut state = initial.bits.clone();
    let mut infected: Vec<usize> = initial.infected().collect();
    let mut position = alloc::vec![usize::MAX; graph.len()];
    for (i, &v) in infected.iter().enumerate() {
        position[v] = i;
    }
    let per_site = 1.0 + lambda * d as f64;
    let mut events = Vec::new();
    let mut t = start;
    while !infected.is_empty() {
        t += rng.next_exp(infected.len() as f64 * per_site);
        if t > end {
            break;
        }
        let x = infected[rng.next_below(infected.len() as u64) as usize];
        let u = rng.next_open01() * per_site;
        if u < 1.0 {
            let i = position[x];
            infected.swap_remove(i);
            if i < infected.len() {
                position[infected[i]] = i;
            }
            position[x] = usize::MAX;
            state[x] = false;
            events.push(Event { time: t, site: x, infected: false });
            continue;
        }
        let slot = ((u - 1.0) / lambda) as usize;
        if slot >= graph.degree(x) {
            continue;
        }
        let y = graph.edge_target(graph.out_edges(x).start + slot);
        if !state[y] {
            state[y] = true;
            position[y] = infected.len();
            infected.push(y);
            events.push(Event { time: t, site: y, infected: true });
        }
    }
    Trajectory {
        delta: (0..graph.len()).collect(),
        initial: initial.bits.clone(),
        events,
        window: (start, end),
        final_config: Some(Configuration { bits: state, time: end }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};

    #[test]
    fn all_healthy_stays_healthy() {
        let g = build_graph(&GraphSpec::lattice(1, 3)).unwrap();
        let t = evolve_direct(&g, 2.0, &Configuration::zeros(g.len(), 0.0), 10.0, 1);
        assert!(t.events.is_empty());
    }

    #[test]
    fn pure_death_mean_is_one() {
        let g = build_graph(&GraphSpec::lattice(1, 2)).unwrap();
        let reps = 100_000;
        let total: f64 = (0..reps)
            .map(|i| {
                let t = evolve_direct(&g, 0.0, &Configuration::from_set(g.len(), &[0], 0.0), 1e3, i);
                t.first_all_healthy().expect("dies")
            })
            .sum();
        let mean = total / reps as f64;
        assert!((0.99..=1.01).contains(&mean), "{mean}");
    }

    #[test]
    fn trajectory_is_consistent() {
        let g = build_graph(&GraphSpec::lattice(1, 4)).unwrap();
        let t = evolve_direct(&g, 2.0, &Configuration::ones(g.len(), 1.0), 5.0, 3);
        assert!(t.is_consistent());
        assert_eq!(t.window, (1.0, 6.0));
    }
}
