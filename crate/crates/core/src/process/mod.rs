//! Samplers for the processes studied on top of the graphical construction:
//! survival and hitting times, the process conditioned on survival, the
//! upper stationary process projected on a finite set, and the cutoff
//! experiments.

mod front;
mod stationary;

pub use front::{rightmost_front, sample_interior_healthy, FrontPoint, InteriorHealthySampler};
pub use stationary::{
    choose_burn_in, sample_conditioned_past, validate_truncation, BurnInReport, PastEvent,
    StationaryConfig, StationarySampler, TruncationReport,
};

use alloc::vec::Vec;

use crate::error::SimError;
use crate::graph::Graph;
use crate::graphical::{GraphicalSample, Sweep, Trajectory};
use crate::graphical::{evolve, Configuration};
use crate::rng::derive_seed;

/// A time observed before a horizon, or censored at it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CensoredTime {
    Observed(f64),
    Censored(f64),
}

impl CensoredTime {
    /// The observed time, or the horizon for censored values.
    pub fn value(&self) -> f64 {
        match *self {
            CensoredTime::Observed(t) | CensoredTime::Censored(t) => t,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, CensoredTime::Censored(_))
    }

    pub fn observed(&self) -> Option<f64> {
        match *self {
            CensoredTime::Observed(t) => Some(t),
            CensoredTime::Censored(_) => None,
        }
    }
}

/// Acceptance floor for rejection samplers. A sampler gives up after
/// `ceil(10 / floor)` consecutive rejections: at a true acceptance rate equal
/// to the floor that happens with probability about `e^-10`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RejectionPolicy {
    pub floor: f64,
}

impl Default for RejectionPolicy {
    fn default() -> Self {
        Self { floor: 1e-3 }
    }
}

impl RejectionPolicy {
    pub fn max_attempts(&self) -> u64 {
        libm::ceil(10.0 / self.floor.max(1e-12)) as u64
    }

    /// Calls `attempt` with seeds derived from `seed` until it returns
    /// `Some`. Returns the accepted value and the number of attempts.
    pub fn run<T>(&self, seed: u64, mut attempt: impl FnMut(u64) -> Option<T>) -> Result<(T, u64), SimError> {
        let max = self.max_attempts();
        for k in 0..max {
            if let Some(v) = attempt(derive_seed(seed, k)) {
                return Ok((v, k + 1));
            }
        }
        Err(SimError::AcceptanceFloor { accepted: 0, attempts: max, floor: self.floor, estimate: 0.0 })
    }
}

/// A conditioned sample and the number of proposals it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned<T> {
    pub value: T,
    pub attempts: u64,
}

fn check_vertices(g: &Graph, set: &[usize]) -> Result<(), SimError> {
    match set.iter().find(|&&v| v >= g.len()) {
        Some(&v) => Err(crate::graph::GraphError::UnknownVertex(v).into()),
        None => Ok(()),
    }
}

/// First time the process started from `initial` at time 0 is entirely
/// healthy; censored at `horizon`.
pub fn survival_time(g: &Graph, lambda: f64, initial: &[usize], horizon: f64, seed: u64) -> Result<CensoredTime, SimError> {
    check_vertices(g, initial)?;
    if initial.is_empty() {
        return Ok(CensoredTime::Observed(0.0));
    }
    let sample = GraphicalSample::new(g, (0.0, horizon), lambda, seed);
    let mut sweep = Sweep::from_set(&sample, initial, 0.0);
    Ok(match sweep.run_to_extinction(horizon) {
        Some(t) => CensoredTime::Observed(t),
        None => CensoredTime::Censored(horizon),
    })
}

/// The process from `{x}` conditioned (by rejection) to be alive at
/// `horizon`, recorded on `record`. The conditioning approximates survival
/// forever; the bias is the probability of dying after `horizon`.
pub fn condition_on_survival(
    g: &Graph,
    lambda: f64,
    x: usize,
    horizon: f64,
    record: &[usize],
    seed: u64,
    policy: RejectionPolicy,
) -> Result<Conditioned<Trajectory>, SimError> {
    check_vertices(g, &[x])?;
    check_vertices(g, record)?;
    let initial = Configuration::from_set(g.len(), &[x], 0.0);
    let (value, attempts) = policy.run(seed, |s| {
        let sample = GraphicalSample::new(g, (0.0, horizon), lambda, s);
        let t = evolve(&sample, &initial, record).expect("validated inputs");
        let alive = t.final_config.as_ref().is_some_and(|c| !c.is_all_healthy());
        alive.then_some(t)
    })?;
    Ok(Conditioned { value, attempts })
}

/// Runs `observe` on surviving runs from `{start}`: the closure drives a
/// fresh sweep to `horizon` and the run is accepted if anything is still
/// infected at the end.
fn surviving<T>(
    g: &Graph,
    lambda: f64,
    start: usize,
    horizon: f64,
    seed: u64,
    policy: RejectionPolicy,
    mut observe: impl FnMut(&mut Sweep<'_, GraphicalSample<'_>>) -> T,
) -> Result<Conditioned<T>, SimError> {
    let (value, attempts) = policy.run(seed, |s| {
        let sample = GraphicalSample::new(g, (0.0, horizon), lambda, s);
        let mut sweep = Sweep::from_set(&sample, &[start], 0.0);
        let value = observe(&mut sweep);
        sweep.run_to_extinction(horizon);
        (sweep.infected_count() > 0).then_some(value)
    })?;
    Ok(Conditioned { value, attempts })
}

/// First time `target` is infected in the run from the origin, among runs
/// alive at `horizon`.
pub fn hitting_time(
    g: &Graph,
    lambda: f64,
    target: usize,
    horizon: f64,
    seed: u64,
    policy: RejectionPolicy,
) -> Result<Conditioned<CensoredTime>, SimError> {
    check_vertices(g, &[target])?;
    let origin = g.origin();
    if target == origin {
        return Ok(Conditioned { value: CensoredTime::Observed(0.0), attempts: 0 });
    }
    surviving(g, lambda, origin, horizon, seed, policy, |sweep| {
        while let Some(f) = sweep.next_flip(horizon) {
            if f.vertex == target {
                return CensoredTime::Observed(f.time);
            }
            if sweep.infected_count() == 0 {
                break;
            }
        }
        CensoredTime::Censored(horizon)
    })
}

/// Coupling time at `x`: the first `T` after which the process from the
/// origin and the process from all-infected agree at `x` up to `horizon`,
/// both driven by one sample, among origin runs alive at `horizon`.
///
/// Also returns the number of times the monotone order `from_origin <=
/// from_all` was seen violated at `x` (always 0 for a correct engine).
pub fn coupling_time(
    g: &Graph,
    lambda: f64,
    x: usize,
    horizon: f64,
    seed: u64,
    policy: RejectionPolicy,
) -> Result<Conditioned<(CensoredTime, u64)>, SimError> {
    check_vertices(g, &[x])?;
    let origin = g.origin();
    let ones = alloc::vec![true; g.len()];
    let (value, attempts) = policy.run(seed, |s| {
        let sample = GraphicalSample::new(g, (0.0, horizon), lambda, s);
        let mut low = Sweep::from_set(&sample, &[origin], 0.0);
        let mut flips_low = Vec::new();
        while let Some(f) = low.next_flip(horizon) {
            if f.vertex == x {
                flips_low.push((f.time, f.infected));
            }
        }
        if low.infected_count() == 0 {
            return None;
        }
        let mut high = Sweep::new(&sample, &ones, 0.0);
        let mut flips_high = Vec::new();
        while let Some(f) = high.next_flip(horizon) {
            if f.vertex == x {
                flips_high.push((f.time, f.infected));
            }
        }
        Some(last_disagreement(x == origin, &flips_low, true, &flips_high, horizon))
    })?;
    Ok(Conditioned { value, attempts })
}

/// Walks two flip lists of one site and finds when they last start to
/// agree. Flips sharing a time are applied together before comparing.
fn last_disagreement(
    init_low: bool,
    low: &[(f64, bool)],
    init_high: bool,
    high: &[(f64, bool)],
    horizon: f64,
) -> (CensoredTime, u64) {
    let (mut a, mut b) = (init_low, init_high);
    let (mut i, mut j) = (0, 0);
    let mut violations = u64::from(a && !b);
    let mut agree_since = if a == b { Some(0.0) } else { None };
    while i < low.len() || j < high.len() {
        let t = match (low.get(i), high.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < low.len() && low[i].0 == t {
            a = low[i].1;
            i += 1;
        }
        while j < high.len() && high[j].0 == t {
            b = high[j].1;
            j += 1;
        }
        if a && !b {
            violations += 1;
        }
        match (a == b, agree_since) {
            (true, None) => agree_since = Some(t),
            (false, Some(_)) => agree_since = None,
            _ => {}
        }
    }
    let time = match agree_since {
        Some(t) => CensoredTime::Observed(t),
        None => CensoredTime::Censored(horizon),
    };
    (time, violations)
}
