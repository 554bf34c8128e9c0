use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Conditioned, RejectionPolicy};
use crate::error::SimError;
use crate::graph::{build_graph, Graph, GraphSpec};
use crate::graphical::{Event, GraphicalSample, Sweep, Trajectory};
use crate::rng::derive_seed;
use crate::Replicate;

/// Upper stationary process projected on `delta`: run from all-infected at
/// `-burn_in` and observe `delta` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryConfig {
    /// Graph family with its truncation.
    pub graph: GraphSpec,
    pub delta: Vec<usize>,
    pub lambda: f64,
    pub burn_in: f64,
    pub horizon: f64,
    pub seed: u64,
    /// TV tolerance for the burn-in doubling and truncation doubling checks.
    pub burn_in_tolerance: f64,
}

impl StationaryConfig {
    pub fn new(graph: GraphSpec, delta: Vec<usize>, lambda: f64, burn_in: f64, horizon: f64, seed: u64) -> Self {
        Self { graph, delta, lambda, burn_in, horizon, seed, burn_in_tolerance: 0.005 }
    }

    fn check(&self, g: &Graph) -> Result<(), SimError> {
        if !(self.burn_in > 0.0 && self.horizon > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "burn-in and horizon must be positive (got {} and {})",
                self.burn_in, self.horizon
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SimError::InvalidConfig(format!("lambda must be finite and >= 0 (got {})", self.lambda)));
        }
        if self.delta.is_empty() || self.delta.len() > 64 {
            return Err(SimError::InvalidConfig(format!("delta must hold 1..=64 sites (got {})", self.delta.len())));
        }
        if let Some(&v) = self.delta.iter().find(|&&v| v >= g.len()) {
            return Err(SimError::InvalidConfig(format!("delta vertex {v} outside the truncation")));
        }
        let mut sorted = self.delta.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.delta.len() {
            return Err(SimError::InvalidConfig("delta has repeated vertices".into()));
        }
        Ok(())
    }
}

/// Draws replicas of the stationary projection. Replica `rep` uses the
/// sample seed `derive_seed(cfg.seed, rep)`; since streams never depend on
/// the window, longer burn-ins and earlier observation starts extend the
/// same sample.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cfg: StationaryConfig,
    graph: Graph,
    ones: Vec<bool>,
}

impl StationarySampler {
    pub fn new(cfg: StationaryConfig) -> Result<Self, SimError> {
        let graph = build_graph(&cfg.graph)?;
        cfg.check(&graph)?;
        let ones = vec![true; graph.len()];
        Ok(Self { cfg, graph, ones })
    }

    pub fn config(&self) -> &StationaryConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn replica_seed(&self, rep: u64) -> u64 {
        derive_seed(self.cfg.seed, rep)
    }

    /// Replica `rep` on `[0, horizon]`.
    pub fn sample(&self, rep: u64) -> Trajectory {
        self.sample_seeded(self.replica_seed(rep), 0.0)
    }

    /// Replica `rep` observed on `[from, horizon]` (`from <= 0`), burnt in
    /// from `from - burn_in`.
    pub fn sample_from(&self, rep: u64, from: f64) -> Trajectory {
        self.sample_seeded(self.replica_seed(rep), from)
    }

    pub fn sample_seeded(&self, seed: u64, from: f64) -> Trajectory {
        self.run(&self.graph, seed, from, self.cfg.burn_in, self.cfg.horizon)
    }

    /// The joint state on `delta` at time 0 only; cheaper than a trajectory.
    pub fn atom_at_zero(&self, rep: u64) -> u64 {
        self.run(&self.graph, self.replica_seed(rep), 0.0, self.cfg.burn_in, 0.0).initial_atom()
    }

    fn run(&self, graph: &Graph, seed: u64, from: f64, burn_in: f64, to: f64) -> Trajectory {
        let start = from - burn_in;
        let sample = GraphicalSample::new(graph, (start, to), self.cfg.lambda, seed);
        let ones = if graph.len() == self.ones.len() { self.ones.clone() } else { vec![true; graph.len()] };
        let mut sweep = Sweep::new(&sample, &ones, start);
        while sweep.next_flip(from).is_some() {}
        let delta = self.cfg.delta.clone();
        let initial: Vec<bool> = delta.iter().map(|&v| sweep.is_infected(v)).collect();
        let mut slots = BTreeMap::new();
        for (i, &v) in delta.iter().enumerate() {
            slots.insert(v, i);
        }
        let mut events = Vec::new();
        while let Some(f) = sweep.next_flip(to) {
            if let Some(&site) = slots.get(&f.vertex) {
                events.push(Event { time: f.time, site, infected: f.infected });
            }
        }
        Trajectory { delta, initial, events, window: (from, to), final_config: Some(sweep.configuration()) }
    }
}

/// Plug-in total variation between the empirical laws of two atom samples.
pub(crate) fn atom_tv(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut counts: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for &x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for &x in b {
        counts.entry(x).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    0.5 * counts.values().map(|&(p, q)| (p as f64 / na - q as f64 / nb).abs()).sum::<f64>()
}

/// Result of rerunning a pilot batch on a doubled truncation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationReport {
    pub radius: usize,
    pub doubled_radius: usize,
    pub replicates: u64,
    /// Largest single-time marginal TV on `delta` over the checked times.
    pub discrepancy: f64,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub flagged: bool,
}

/// Reruns `pilot` replicas at truncation `r` and `2r` with shared seeds and
/// compares the marginal laws on `delta` at times `0`, `horizon/2` and
/// `horizon`. Only lattice, half-line and tree families can be doubled.
pub fn validate_truncation<R: Replicate>(cfg: &StationaryConfig, pilot: u64, exec: &R) -> Result<TruncationReport, SimError> {
    let r = cfg.graph.truncation.ok_or_else(|| SimError::TruncationTooSmall("explicit graphs have no truncation to double".into()))?;
    let small = StationarySampler::new(cfg.clone())?;
    let mut doubled = cfg.clone();
    doubled.graph = cfg.graph.with_truncation(r.saturating_mul(2).max(r + 1));
    let large = StationarySampler::new(doubled.clone())?;
    let times = vec![0.0, cfg.horizon / 2.0, cfg.horizon];
    let pairs = exec.run(pilot, |rep| {
        let seed = small.replica_seed(rep);
        (small.sample_seeded(seed, 0.0).atoms_at(&times), large.sample_seeded(seed, 0.0).atoms_at(&times))
    });
    let discrepancy = (0..times.len())
        .map(|k| {
            let a: Vec<u64> = pairs.iter().map(|p| p.0[k]).collect();
            let b: Vec<u64> = pairs.iter().map(|p| p.1[k]).collect();
            atom_tv(&a, &b)
        })
        .fold(0.0, f64::max);
    Ok(TruncationReport {
        radius: r as usize,
        doubled_radius: doubled.graph.truncation.unwrap_or(r) as usize,
        replicates: pilot,
        discrepancy,
        times,
        tolerance: cfg.burn_in_tolerance,
        flagged: discrepancy > cfg.burn_in_tolerance,
    })
}

/// Outcome of the burn-in doubling search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BurnInReport {
    pub burn_in: f64,
    /// `(S, TV between S and 2S)` for each tried `S`.
    pub history: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Doubles the burn-in, starting from `cfg.burn_in`, until the time-0
/// marginal on `delta` moves by less than the tolerance when the burn-in
/// doubles. Both runs of a pair share their sample.
pub fn choose_burn_in<R: Replicate>(
    cfg: &StationaryConfig,
    pilot: u64,
    max_doublings: u32,
    exec: &R,
) -> Result<BurnInReport, SimError> {
    let sampler = StationarySampler::new(cfg.clone())?;
    let mut s = cfg.burn_in;
    let mut history = Vec::new();
    for _ in 0..=max_doublings {
        let pairs = exec.run(pilot, |rep| {
            let seed = sampler.replica_seed(rep);
            let a = sampler.run(&sampler.graph, seed, 0.0, s, 0.0).initial_atom();
            let b = sampler.run(&sampler.graph, seed, 0.0, 2.0 * s, 0.0).initial_atom();
            (a, b)
        });
        let a: Vec<u64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u64> = pairs.iter().map(|p| p.1).collect();
        let tv = atom_tv(&a, &b);
        history.push((s, tv));
        if tv < cfg.burn_in_tolerance {
            return Ok(BurnInReport { burn_in: s, history, converged: true });
        }
        s *= 2.0;
    }
    Ok(BurnInReport { burn_in: s, history, converged: false })
}

/// A cylinder event on the observed sites over a past time window.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PastEvent {
    Always,
    /// Every listed vertex healthy throughout `[from, to]`.
    AllHealthy { sites: Vec<usize>, from: f64, to: f64 },
    /// Every listed vertex infected throughout `[from, to]`.
    AllInfected { sites: Vec<usize>, from: f64, to: f64 },
}

impl PastEvent {
    /// Earliest time the event looks at (0 for the vacuous event).
    pub fn start(&self) -> f64 {
        match self {
            PastEvent::Always => 0.0,
            PastEvent::AllHealthy { from, .. } | PastEvent::AllInfected { from, .. } => from.min(0.0),
        }
    }

    fn parts(&self) -> Option<(&[usize], f64, f64, bool)> {
        match self {
            PastEvent::Always => None,
            PastEvent::AllHealthy { sites, from, to } => Some((sites, *from, *to, false)),
            PastEvent::AllInfected { sites, from, to } => Some((sites, *from, *to, true)),
        }
    }

    /// Checks that the event is a past cylinder on `delta`.
    pub fn validate(&self, delta: &[usize]) -> Result<(), SimError> {
        let Some((sites, from, to, _)) = self.parts() else {
            return Ok(());
        };
        if !(from <= to && to <= 0.0) {
            return Err(SimError::InvalidConfig(format!("past window [{from}, {to}] must satisfy from <= to <= 0")));
        }
        if let Some(v) = sites.iter().find(|v| !delta.contains(v)) {
            return Err(SimError::InvalidConfig(format!("past event site {v} is not observed")));
        }
        Ok(())
    }

    /// Whether the event holds on `traj`, which must cover its window and
    /// observe its sites.
    pub fn holds(&self, traj: &Trajectory) -> bool {
        let Some((sites, from, to, infected)) = self.parts() else {
            return true;
        };
        let mask = sites
            .iter()
            .map(|v| traj.delta.iter().position(|d| d == v).expect("site observed"))
            .fold(0u64, |m, i| m | (1 << i));
        let want = if infected { mask } else { 0 };
        if traj.atom_at(from) & mask != want {
            return false;
        }
        !traj
            .events
            .iter()
            .filter(|e| e.time > from && e.time <= to)
            .any(|e| mask & (1 << e.site) != 0 && e.infected != infected)
    }
}

/// The stationary projection on `[0, horizon]` conditioned, by rejection,
/// on a past cylinder event. Attempt `k` of replica `rep` uses the seed
/// `derive_seed(derive_seed(cfg.seed, rep), k)`.
pub fn sample_conditioned_past(
    sampler: &StationarySampler,
    past: &PastEvent,
    rep: u64,
    policy: RejectionPolicy,
) -> Result<Conditioned<Trajectory>, SimError> {
    past.validate(&sampler.cfg.delta)?;
    let from = past.start();
    let horizon = sampler.cfg.horizon;
    let (value, attempts) = policy.run(sampler.replica_seed(rep), |seed| {
        let t = sampler.sample_seeded(seed, from);
        past.holds(&t).then(|| t.restrict(0.0, horizon))
    })?;
    Ok(Conditioned { value, attempts })
}
