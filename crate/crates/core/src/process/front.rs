use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::SimError;
use crate::graph::{build_graph, truncation_radius, Graph, GraphSpec};
use crate::graphical::{DualSweep, GraphicalSample, Sweep};

/// The process started healthy inside the box `Δ_n` and infected outside it
/// (within the truncation), observed on `Δ_r` at a fixed time `t`.
#[derive(Debug, Clone)]
pub struct InteriorHealthySampler {
    graph: Graph,
    n_len: usize,
    r_len: usize,
    lambda: f64,
    t: f64,
}

impl InteriorHealthySampler {
    /// Builds the truncated lattice. Without an explicit `radius` the box is
    /// `truncation_radius(diam Δ_r, t, λ, 2d, safety)` (at least `n + 1`);
    /// an explicit radius below that is rejected.
    pub fn new(dim: u32, n: u32, r: u32, lambda: f64, t: f64, safety: f64, radius: Option<u32>) -> Result<Self, SimError> {
        if r > n {
            return Err(SimError::InvalidConfig(format!("observation radius {r} exceeds box radius {n}")));
        }
        if dim == 0 || !(t >= 0.0) || !(lambda >= 0.0) {
            return Err(SimError::InvalidConfig(format!("need dim >= 1, t >= 0, lambda >= 0 (got {dim}, {t}, {lambda})")));
        }
        let diam = 2 * r as usize * dim as usize;
        let needed = truncation_radius(diam, t, lambda, 2 * dim as usize, safety).max(n as usize + 1);
        let radius = match radius {
            Some(given) if (given as usize) < needed => {
                return Err(SimError::TruncationTooSmall(format!(
                    "radius {given} below the {needed} needed to cover spread into the observed box by t={t}"
                )))
            }
            Some(given) => given,
            None => u32::try_from(needed).map_err(|_| SimError::TruncationTooSmall(format!("radius {needed} too large")))?,
        };
        let graph = build_graph(&GraphSpec::lattice(dim, radius))?;
        let n_len = graph.box_len(n as usize).expect("lattice");
        let r_len = graph.box_len(r as usize).expect("lattice");
        Ok(Self { graph, n_len, r_len, lambda, t })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Sites of `Δ_r` (vertex ids `0..|Δ_r|`).
    pub fn observed(&self) -> core::ops::Range<usize> {
        0..self.r_len
    }

    /// Configuration on `Δ_r` at time `t`, bit `i` for vertex `i`.
    ///
    /// Site `x` is infected at `t` iff an active path joins `Δ_n^c × {0}` to
    /// `(x, t)`, so each site is decided by the dual from `{x}`; this reads
    /// the same sample as the forward sweep and returns the same
    /// configuration, at a cost that does not grow with the truncation.
    pub fn sample(&self, seed: u64) -> u64 {
        let sample = GraphicalSample::new(&self.graph, (0.0, self.t), self.lambda, seed);
        let mut atom = 0u64;
        for x in self.observed() {
            let mut dual = DualSweep::new(&sample, &[x], self.t);
            while dual.next_flip(0.0).is_some() {
                if dual.occupied_count() == 0 {
                    break;
                }
            }
            if dual.state()[self.n_len..].iter().any(|&b| b) {
                atom |= 1 << x;
            }
        }
        atom
    }

    /// The same configuration computed by the forward sweep.
    pub fn sample_forward(&self, seed: u64) -> u64 {
        let sample = GraphicalSample::new(&self.graph, (0.0, self.t), self.lambda, seed);
        let initial: Vec<bool> = (0..self.graph.len()).map(|v| v >= self.n_len).collect();
        let mut sweep = Sweep::new(&sample, &initial, 0.0);
        while sweep.next_flip(self.t).is_some() {}
        self.observed().fold(0, |a, x| a | (u64::from(sweep.is_infected(x)) << x))
    }
}

/// One-off interior-healthy draw on the lattice `Z^dim`.
pub fn sample_interior_healthy(dim: u32, n: u32, r: u32, lambda: f64, t: f64, seed: u64) -> Result<u64, SimError> {
    Ok(InteriorHealthySampler::new(dim, n, r, lambda, t, 1.5, None)?.sample(seed))
}

/// Position of the rightmost infected site at a grid time; `None` once the
/// process is extinct.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrontPoint {
    pub time: f64,
    pub position: Option<i64>,
}

/// Rightmost infected site over time, on `Z` truncated to `[-radius, radius]`
/// started from every site `<= 0`, or on the half-line `{0, .., radius}`
/// started from `{0}`. Records the front at `0, step, 2 step, ..` up to
/// `horizon`; reaching the last site aborts.
pub fn rightmost_front(half_line: bool, lambda: f64, radius: u32, horizon: f64, step: f64, seed: u64) -> Result<Vec<FrontPoint>, SimError> {
    if !(step > 0.0) || !(horizon >= 0.0) {
        return Err(SimError::InvalidConfig(format!("need step > 0 and horizon >= 0 (got {step}, {horizon})")));
    }
    let spec = if half_line { GraphSpec::half_line(radius) } else { GraphSpec::lattice(1, radius) };
    let g = build_graph(&spec)?;
    let lo = if half_line { 0 } else { -(radius as i64) };
    let hi = radius as i64;
    // vertex at coordinate lo + i
    let by_pos: Vec<usize> = (lo..=hi).map(|x| g.vertex_at(&[x]).expect("in range")).collect();
    let initial: Vec<bool> = (0..g.len()).map(|v| g.coords(v)[0] <= 0).collect();
    let sample = GraphicalSample::new(&g, (0.0, horizon), lambda, seed);
    let mut sweep = Sweep::new(&sample, &initial, 0.0);
    let mut front = Some(0i64);
    let mut out = vec![FrontPoint { time: 0.0, position: front }];
    let steps = libm::floor(horizon / step + 1e-9) as u64;
    for k in 1..=steps {
        let t = (k as f64 * step).min(horizon);
        while let Some(f) = sweep.next_flip(t) {
            let x = g.coords(f.vertex)[0];
            if f.infected {
                if front.map_or(true, |r| x > r) {
                    front = Some(x);
                    if x == hi {
                        return Err(SimError::FrontAtBoundary { time: f.time });
                    }
                }
            } else if front == Some(x) {
                front = (lo..x).rev().find(|&y| sweep.is_infected(by_pos[(y - lo) as usize]));
            }
        }
        out.push(FrontPoint { time: t, position: front });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_starts_healthy() {
        let s = InteriorHealthySampler::new(1, 5, 1, 2.0, 0.0, 1.5, None).unwrap();
        assert_eq!(s.sample(1), 0);
        assert_eq!(sample_interior_healthy(1, 5, 1, 0.0, 7.0, 3).unwrap(), 0);
    }

    #[test]
    fn dual_matches_forward() {
        let s = InteriorHealthySampler::new(1, 4, 2, 2.0, 6.0, 1.0, Some(40)).unwrap();
        let mut infected = 0;
        for seed in 0..300 {
            let a = s.sample(seed);
            assert_eq!(a, s.sample_forward(seed), "seed {seed}");
            infected += u32::from(a != 0);
        }
        assert!(infected > 50);
        let s = InteriorHealthySampler::new(2, 3, 1, 1.0, 3.0, 1.0, None).unwrap();
        for seed in 0..100 {
            assert_eq!(s.sample(seed), s.sample_forward(seed));
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(InteriorHealthySampler::new(1, 5, 6, 2.0, 1.0, 1.5, None), Err(SimError::InvalidConfig(_))));
        assert!(matches!(
            InteriorHealthySampler::new(1, 5, 1, 2.0, 10.0, 1.5, Some(10)),
            Err(SimError::TruncationTooSmall(_))
        ));
        let s = InteriorHealthySampler::new(1, 5, 1, 2.0, 5.0, 1.5, None).unwrap();
        assert_eq!(s.graph().radius(), Some(2 + 30));
    }

    #[test]
    fn front_without_infection_retreats() {
        let f = rightmost_front(false, 0.0, 20, 5.0, 0.5, 2).unwrap();
        assert_eq!(f[0], FrontPoint { time: 0.0, position: Some(0) });
        assert_eq!(f.len(), 11);
        for w in f.windows(2) {
            assert!(w[1].position.map_or(i64::MIN, |x| x) <= w[0].position.unwrap_or(i64::MIN));
        }
    }

    #[test]
    fn front_matches_state_scan() {
        let g = build_graph(&GraphSpec::lattice(1, 60)).unwrap();
        let f = rightmost_front(false, 2.0, 60, 10.0, 1.0, 8).unwrap();
        let initial: Vec<bool> = (0..g.len()).map(|v| g.coords(v)[0] <= 0).collect();
        let sample = GraphicalSample::new(&g, (0.0, 10.0), 2.0, 8);
        let mut sweep = Sweep::new(&sample, &initial, 0.0);
        for p in &f[1..] {
            while sweep.next_flip(p.time).is_some() {}
            let rightmost = (0..g.len()).filter(|&v| sweep.is_infected(v)).map(|v| g.coords(v)[0]).max();
            assert_eq!(rightmost, p.position);
        }
    }

    #[test]
    fn front_hitting_boundary_aborts() {
        let err = rightmost_front(false, 4.0, 3, 50.0, 1.0, 1).unwrap_err();
        assert!(matches!(err, SimError::FrontAtBoundary { .. }));
    }

    #[test]
    fn half_line_front() {
        let f = rightmost_front(true, 2.0, 200, 20.0, 1.0, 5).unwrap();
        assert_eq!(f[0].position, Some(0));
        assert!(f.iter().all(|p| p.position.map_or(true, |x| (0..200).contains(&x))));
    }
}
