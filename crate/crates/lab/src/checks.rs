//! Property checks of the engine against structural facts of the process:
//! monotone coupling, additivity, duality, correlation inequalities and
//! agreement with the generator.
//!
//! Deterministic checks count violations on shared samples and fail on any.
//! Statistical checks fail when their statistic exceeds the critical value
//! at the declared significance.

use std::collections::BTreeMap;

use contact_core::graphical::{evolve, evolve_direct, DualSweep, Sweep};
use contact_core::process::{PastEvent, StationaryConfig, StationarySampler};
use contact_core::rng::{derive_seed, CounterRng};
use contact_core::{Configuration, Graph, GraphicalSample, Replicate, SimError, Trajectory};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::estimators::{invalid, EstimateError};
use crate::events::{AtomEvent, Cylinder, EventError};
use crate::stats::{chi_square_homogeneity, counts, expm, pooled, proportion, tv_to_law, two_proportion_test};

pub const SIGNIFICANCE: f64 = 0.01;
/// Violations of an inequality are counted beyond this many standard errors.
pub const SIGMA_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: f64,
    pub replicates: u64,
    pub seed: u64,
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl CheckReport {
    fn new(name: &str, statistic: f64, threshold: f64, replicates: u64, seed: u64, deterministic: bool) -> Self {
        let verdict = if statistic.is_nan() {
            Verdict::Inconclusive
        } else if statistic > threshold {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        Self { name: name.to_owned(), verdict, statistic, threshold, replicates, seed, deterministic, details: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(key.to_owned(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Deliberate engine fault for exercising the failure path: `Desync` runs
/// the second process of a coupling on a different sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    Desync,
}

impl Fault {
    fn seed(self, seed: u64) -> u64 {
        match self {
            Fault::None => seed,
            Fault::Desync => seed.wrapping_add(1),
        }
    }
}

fn record_all(g: &Graph) -> Vec<usize> {
    (0..g.len()).collect()
}

fn run_from(g: &Graph, lambda: f64, set: &[usize], horizon: f64, seed: u64) -> Trajectory {
    let sample = GraphicalSample::new(g, (0.0, horizon), lambda, seed);
    evolve(&sample, &Configuration::from_set(g.len(), set, 0.0), &record_all(g)).expect("valid set")
}

/// Walks several full-graph trajectories together. Flips sharing a time are
/// applied together, then `check` sees the states and the touched sites.
fn walk(trajs: &[Trajectory], mut check: impl FnMut(&[Vec<bool>], &[usize]) -> u64) -> u64 {
    let mut states: Vec<Vec<bool>> = trajs.iter().map(|t| t.initial.clone()).collect();
    let all: Vec<usize> = (0..states[0].len()).collect();
    let mut bad = check(&states, &all);
    let mut pos = vec![0usize; trajs.len()];
    let mut touched = Vec::new();
    loop {
        let next = trajs.iter().zip(&pos).filter_map(|(t, &i)| t.events.get(i).map(|e| e.time)).reduce(f64::min);
        let Some(time) = next else { break };
        touched.clear();
        for (k, t) in trajs.iter().enumerate() {
            while let Some(e) = t.events.get(pos[k]).filter(|e| e.time == time) {
                states[k][e.site] = e.infected;
                touched.push(e.site);
                pos[k] += 1;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        bad += check(&states, &touched);
    }
    bad
}

/// Random `A ⊆ B`: each vertex joins `B` with probability 1/2 and each
/// member of `B` joins `A` with probability 1/2.
fn nested_pair(n: usize, rng: &mut CounterRng) -> (Vec<usize>, Vec<usize>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for v in 0..n {
        if rng.next_below(2) == 1 {
            b.push(v);
            if rng.next_below(2) == 1 {
                a.push(v);
            }
        }
    }
    (a, b)
}

/// `η^A ≤ η^B` at every event time for random nested pairs on shared samples.
pub fn check_monotone_coupling<R: Replicate>(
    g: &Graph,
    lambda: f64,
    horizon: f64,
    reps: u64,
    seed: u64,
    fault: Fault,
    exec: &R,
) -> CheckReport {
    let per_rep = exec.run(reps, |rep| {
        let s = derive_seed(seed, rep);
        let (a, b) = nested_pair(g.len(), &mut CounterRng::new(derive_seed(s, 0xA)));
        let ta = run_from(g, lambda, &a, horizon, s);
        let tb = run_from(g, lambda, &b, horizon, fault.seed(s));
        walk(&[ta, tb], |st, touched| touched.iter().filter(|&&v| st[0][v] && !st[1][v]).count() as u64)
    });
    deterministic_report("monotone_coupling", &per_rep, reps, seed).with("graph_vertices", g.len())
}

/// `η^{A∪B} = η^A ∨ η^B` at every event time on shared samples.
pub fn check_additivity<R: Replicate>(
    g: &Graph,
    lambda: f64,
    horizon: f64,
    reps: u64,
    seed: u64,
    fault: Fault,
    exec: &R,
) -> CheckReport {
    let per_rep = exec.run(reps, |rep| {
        let s = derive_seed(seed, rep);
        let mut rng = CounterRng::new(derive_seed(s, 0xB));
        let (a, _) = nested_pair(g.len(), &mut rng);
        let (b, _) = nested_pair(g.len(), &mut rng);
        let mut union: Vec<usize> = a.iter().chain(&b).copied().collect();
        union.sort_unstable();
        union.dedup();
        let trajs = [run_from(g, lambda, &a, horizon, s), run_from(g, lambda, &b, horizon, s), run_from(g, lambda, &union, horizon, fault.seed(s))];
        walk(&trajs, |st, touched| touched.iter().filter(|&&v| st[2][v] != (st[0][v] || st[1][v])).count() as u64)
    });
    deterministic_report("additivity", &per_rep, reps, seed).with("graph_vertices", g.len())
}

/// On one sample, `η_t^A` meets `B` exactly when the dual from `B` at `t`
/// meets `A` at time 0.
pub fn check_duality_identity<R: Replicate>(
    g: &Graph,
    lambda: f64,
    t: f64,
    reps: u64,
    seed: u64,
    fault: Fault,
    exec: &R,
) -> CheckReport {
    let per_rep = exec.run(reps, |rep| {
        let s = derive_seed(seed, rep);
        let mut rng = CounterRng::new(derive_seed(s, 0xD));
        let (a, _) = nested_pair(g.len(), &mut rng);
        let (b, _) = nested_pair(g.len(), &mut rng);
        let sample = GraphicalSample::new(g, (0.0, t), lambda, s);
        let mut fwd = Sweep::from_set(&sample, &a, 0.0);
        while fwd.next_flip(t).is_some() {}
        let forward = b.iter().any(|&v| fwd.is_infected(v));
        let other = GraphicalSample::new(g, (0.0, t), lambda, fault.seed(s));
        let mut dual = DualSweep::new(&other, &b, t);
        while dual.next_flip(0.0).is_some() {}
        let backward = a.iter().any(|&v| dual.state()[v]);
        u64::from(forward != backward)
    });
    deterministic_report("duality_identity", &per_rep, reps, seed)
}

fn deterministic_report(name: &str, per_rep: &[u64], reps: u64, seed: u64) -> CheckReport {
    let total: u64 = per_rep.iter().sum();
    let failing: Vec<u64> = per_rep.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i as u64).take(10).collect();
    CheckReport::new(name, total as f64, 0.0, reps, seed, true)
        .with("violations", total)
        .with("replicates_with_violations", per_rep.iter().filter(|&&v| v > 0).count())
        .with("first_failing_replicates", failing)
}

/// Two-sample test of `P(η_t^Δ ∩ Λ ≠ ∅) = P(η_t^Λ ∩ Δ ≠ ∅)` on independent
/// batches.
#[allow(clippy::too_many_arguments)]
pub fn check_self_duality<R: Replicate>(
    g: &Graph,
    lambda: f64,
    delta: &[usize],
    big_lambda: &[usize],
    t: f64,
    reps: u64,
    seed: u64,
    exec: &R,
) -> Result<CheckReport, EstimateError> {
    if reps == 0 || !(t >= 0.0) {
        return invalid("need reps >= 1 and t >= 0");
    }
    if let Some(&v) = delta.iter().chain(big_lambda).find(|&&v| v >= g.len()) {
        return Err(contact_core::GraphError::UnknownVertex(v).into());
    }
    let hits = |from: &[usize], to: &[usize], stream: u64| -> u64 {
        exec.run(reps, |rep| {
            let sample = GraphicalSample::new(g, (0.0, t), lambda, derive_seed(derive_seed(seed, stream), rep));
            let mut sweep = Sweep::from_set(&sample, from, 0.0);
            while sweep.next_flip(t).is_some() {}
            u64::from(to.iter().any(|&v| sweep.is_infected(v)))
        })
        .into_iter()
        .sum()
    };
    let (k1, k2) = (hits(delta, big_lambda, 0), hits(big_lambda, delta, 1));
    let test = two_proportion_test(k1, reps, k2, reps);
    let critical = statrs::distribution::Normal::standard().inverse_cdf(1.0 - SIGNIFICANCE / 2.0);
    Ok(CheckReport::new("self_duality", test.statistic.abs(), critical, reps, seed, false)
        .with("forward", proportion(k1, reps))
        .with("backward", proportion(k2, reps))
        .with("p_value", test.p_value))
}

/// `sqrt(Var)/sqrt(n)` of the plug-in covariance `p̂_AB - p̂_A p̂_B`, from
/// its influence function `1_AB - p_B 1_A - p_A 1_B`.
fn covariance(a: &[bool], b: &[bool]) -> (f64, f64) {
    let n = a.len() as f64;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let pab = a.iter().zip(b).filter(|(&x, &y)| x && y).count() as f64 / n;
    let infl: Vec<f64> =
        a.iter().zip(b).map(|(&x, &y)| f64::from(u8::from(x && y)) - pb * f64::from(u8::from(x)) - pa * f64::from(u8::from(y))).collect();
    let m = infl.iter().sum::<f64>() / n;
    let var = infl.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (pab - pa * pb, (var / n).sqrt())
}

/// How many standard errors `value` falls below zero (0 when it does not).
fn shortfall(value: f64, se: f64) -> f64 {
    if value >= 0.0 {
        0.0
    } else if se > 0.0 {
        -value / se
    } else {
        f64::INFINITY
    }
}

fn batch(sampler: &StationarySampler, from: f64, reps: u64, exec: &impl Replicate) -> Vec<Trajectory> {
    exec.run(reps, |rep| sampler.sample_from(rep, from))
}

fn cylinder_span(cyls: &[&Cylinder]) -> (f64, f64) {
    cyls.iter().flat_map(|c| c.parts.iter().map(|p| p.time)).fold((0.0, 0.0), |(lo, hi), t| (f64::min(lo, t), f64::max(hi, t)))
}

fn check_cylinder(c: &Cylinder, sites: usize) -> Result<(), EstimateError> {
    for p in &c.parts {
        if p.event.sites() != sites {
            return invalid(format!("event `{}` is on {} sites, the observed set has {sites}", c.label, p.event.sites()));
        }
        // events read from files skip the constructor checks
        AtomEvent::new(sites, p.event.atoms().iter().copied())?;
        p.event.check_increasing()?;
    }
    Ok(())
}

fn check_window(cfg: &StationaryConfig, lo: f64, hi: f64) -> Result<(), EstimateError> {
    if hi > cfg.horizon {
        return invalid(format!("event time {hi} beyond the horizon {}", cfg.horizon));
    }
    if !lo.is_finite() {
        return invalid("event times must be finite");
    }
    Ok(())
}

/// `P(A ∩ B) ≥ P(A) P(B)` for pairs of increasing cylinders under the
/// stationary law, one batch shared by every pair.
pub fn check_positive_association<R: Replicate>(
    cfg: &StationaryConfig,
    pairs: &[(Cylinder, Cylinder)],
    reps: u64,
    exec: &R,
) -> Result<CheckReport, EstimateError> {
    if pairs.is_empty() || reps < 2 {
        return invalid("need at least one pair and reps >= 2");
    }
    let sites = cfg.delta.len();
    for (a, b) in pairs {
        check_cylinder(a, sites)?;
        check_cylinder(b, sites)?;
    }
    let all: Vec<&Cylinder> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    let (lo, hi) = cylinder_span(&all);
    check_window(cfg, lo, hi)?;
    let sampler = StationarySampler::new(cfg.clone())?;
    let runs = batch(&sampler, lo, reps, exec);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (a, b) in pairs {
        let ha: Vec<bool> = runs.iter().map(|t| a.holds(t)).collect();
        let hb: Vec<bool> = runs.iter().map(|t| b.holds(t)).collect();
        let (cov, se) = covariance(&ha, &hb);
        let s = shortfall(cov, se);
        worst = worst.max(s);
        rows.push(serde_json::json!({"a": a.label, "b": b.label, "covariance": cov, "std_error": se, "shortfall": s}));
    }
    Ok(CheckReport::new("positive_association", worst, SIGMA_TOLERANCE, reps, cfg.seed, false).with("pairs", rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfkgParams {
    pub stationary: StationaryConfig,
    /// The all-healthy past on the observed set is taken over this window.
    pub zero_window: (f64, f64),
    pub pasts: Vec<PastEvent>,
    pub futures: Vec<Cylinder>,
    pub reps: u64,
    /// Smallest acceptable fraction of the batch satisfying a past.
    pub floor: f64,
}

/// Downward FKG: conditioning on the all-healthy past gives the smallest
/// probability of every increasing future among the tested pasts, and the
/// futures stay positively associated under that conditioning.
///
/// Conditional laws come from one shared stationary batch filtered by each
/// past, which is rejection sampling with independent proposals.
pub fn check_dfkg<R: Replicate>(p: &DfkgParams, exec: &R) -> Result<CheckReport, EstimateError> {
    let cfg = &p.stationary;
    let sites = cfg.delta.len();
    if p.futures.is_empty() || p.reps < 2 {
        return invalid("need at least one future and reps >= 2");
    }
    for f in &p.futures {
        check_cylinder(f, sites)?;
        if f.parts.iter().any(|q| q.time < 0.0) {
            return invalid(format!("future `{}` looks at negative times", f.label));
        }
    }
    let zero = PastEvent::AllHealthy { sites: cfg.delta.clone(), from: p.zero_window.0, to: p.zero_window.1 };
    let mut pasts = vec![zero];
    pasts.extend(p.pasts.iter().cloned());
    for past in &pasts {
        past.validate(&cfg.delta)?;
    }
    let futures: Vec<&Cylinder> = p.futures.iter().collect();
    let (_, hi) = cylinder_span(&futures);
    let from = pasts.iter().map(PastEvent::start).fold(0.0, f64::min);
    check_window(cfg, from, hi)?;
    let sampler = StationarySampler::new(cfg.clone())?;
    let runs = batch(&sampler, from, p.reps, exec);

    let holds: Vec<Vec<&Trajectory>> = pasts.iter().map(|past| runs.iter().filter(|t| past.holds(t)).collect()).collect();
    for kept in &holds {
        let rate = kept.len() as f64 / p.reps as f64;
        if rate < p.floor || kept.len() < 2 {
            let accepted = kept.len() as u64;
            return Err(SimError::AcceptanceFloor { accepted, attempts: p.reps, floor: p.floor, estimate: rate }.into());
        }
    }
    let prob = |kept: &[&Trajectory], f: &Cylinder| {
        let k = kept.iter().filter(|t| f.holds(t)).count() as u64;
        proportion(k, kept.len() as u64)
    };
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for f in &p.futures {
        let (p0, s0) = prob(&holds[0], f);
        for (past, kept) in pasts.iter().zip(&holds).skip(1) {
            let (pa, sa) = prob(kept, f);
            let se = pooled(s0, sa);
            let s = shortfall(pa - p0, se);
            worst = worst.max(s);
            rows.push(serde_json::json!({"future": f.label, "past": format!("{past:?}"), "p_zero": p0, "p_past": pa, "std_error": se, "shortfall": s}));
        }
    }
    // positive association under the all-healthy conditioning
    for (i, a) in p.futures.iter().enumerate() {
        for b in &p.futures[i..] {
            let ha: Vec<bool> = holds[0].iter().map(|t| a.holds(t)).collect();
            let hb: Vec<bool> = holds[0].iter().map(|t| b.holds(t)).collect();
            let (cov, se) = covariance(&ha, &hb);
            let s = shortfall(cov, se);
            worst = worst.max(s);
            rows.push(serde_json::json!({"a": a.label, "b": b.label, "conditional_covariance": cov, "std_error": se, "shortfall": s}));
        }
    }
    let accepted: Vec<usize> = holds.iter().map(Vec::len).collect();
    Ok(CheckReport::new("dfkg", worst, SIGMA_TOLERANCE, p.reps, cfg.seed, false).with("comparisons", rows).with("accepted", accepted))
}

/// Default correlation events on a two-site observed set `{x, y}`: single
/// and joint infections at times 0, 0.5 and 1.
pub fn default_pairs() -> Result<Vec<(Cylinder, Cylinder)>, EventError> {
    let x0 = Cylinder::at("x@0", 0.0, AtomEvent::all_infected(2, &[0])?);
    let y1 = Cylinder::at("y@1", 1.0, AtomEvent::all_infected(2, &[1])?);
    let x1 = Cylinder::at("x@1", 1.0, AtomEvent::all_infected(2, &[0])?);
    let any_half = Cylinder::at("any@0.5", 0.5, AtomEvent::any_infected(2, &[0, 1])?);
    let both0 = Cylinder::at("both@0", 0.0, AtomEvent::all_infected(2, &[0, 1])?);
    let path = Cylinder::at("x@0,y@0.5", 0.0, AtomEvent::all_infected(2, &[0])?).and(0.5, AtomEvent::all_infected(2, &[1])?);
    Ok(vec![
        (x0.clone(), y1.clone()),
        (x0.clone(), x1.clone()),
        (both0.clone(), any_half.clone()),
        (path, y1.clone()),
        (x0.clone(), x0),
        (both0, x1),
    ])
}

/// Default increasing futures for the dFKG check on `{x, y}`.
pub fn default_futures() -> Result<Vec<Cylinder>, EventError> {
    Ok(vec![
        Cylinder::at("x@1", 1.0, AtomEvent::all_infected(2, &[0])?),
        Cylinder::at("y@1", 1.0, AtomEvent::all_infected(2, &[1])?),
        Cylinder::at("any@0.5", 0.5, AtomEvent::any_infected(2, &[0, 1])?),
        Cylinder::at("both@1", 1.0, AtomEvent::all_infected(2, &[0, 1])?),
        Cylinder::at("sure", 0.5, AtomEvent::full(2)?),
    ])
}

/// Exact law of the configuration at `t` from `initial` (bit `v` for vertex
/// `v`), from the exponential of the `2^|V|`-state rate matrix.
pub fn exact_law(g: &Graph, lambda: f64, initial: u64, t: f64) -> Result<BTreeMap<u64, f64>, EstimateError> {
    let n = g.len();
    if n > 10 {
        return invalid(format!("{n} vertices is too many for the exact rate matrix"));
    }
    let states = 1usize << n;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for s in 0..states {
        for v in 0..n {
            let target = s ^ (1 << v);
            let rate = if s >> v & 1 == 1 { 1.0 } else { lambda * g.neighbors(v).filter(|&u| s >> u & 1 == 1).count() as f64 };
            if rate > 0.0 {
                q[(s, target)] += rate;
                q[(s, s)] -= rate;
            }
        }
    }
    let p = expm(&(q * t));
    Ok((0..states).map(|s| (s as u64, p[(initial as usize, s)])).filter(|&(_, w)| w > 0.0).collect())
}

/// `evolve` against `evolve_direct` by a chi-square test over all atoms at
/// `t`; with at most three vertices both are also compared to the exact law
/// (TV within plug-in bias + 2 s.e.).
pub fn check_generator_equivalence<R: Replicate>(
    g: &Graph,
    lambda: f64,
    t: f64,
    initial: &[usize],
    reps: u64,
    seed: u64,
    exec: &R,
) -> Result<CheckReport, EstimateError> {
    if g.len() > 5 {
        return invalid("generator equivalence runs on graphs of at most 5 vertices");
    }
    if reps == 0 || !(t >= 0.0) {
        return invalid("need reps >= 1 and t >= 0");
    }
    let start = Configuration::from_set(g.len(), initial, 0.0);
    let all = record_all(g);
    let graphical = counts(exec.run(reps, |rep| {
        let sample = GraphicalSample::new(g, (0.0, t), lambda, derive_seed(derive_seed(seed, 0), rep));
        evolve(&sample, &start, &all).expect("valid").final_atom()
    }));
    let direct = counts(exec.run(reps, |rep| evolve_direct(g, lambda, &start, t, derive_seed(derive_seed(seed, 1), rep)).final_atom()));
    let chi = chi_square_homogeneity(&graphical, &direct);
    let critical = if chi.df > 0.0 { ChiSquared::new(chi.df).expect("df > 0").inverse_cdf(1.0 - SIGNIFICANCE) } else { 0.0 };
    let mut report = CheckReport::new("generator_equivalence", chi.statistic, critical, reps, seed, false)
        .with("p_value", chi.p_value)
        .with("df", chi.df);
    if g.len() <= 3 {
        let initial_atom = initial.iter().fold(0u64, |a, &v| a | 1 << v);
        let law = exact_law(g, lambda, initial_atom, t)?;
        let atoms = 1usize << g.len();
        let mut exact_ok = true;
        for (name, c) in [("graphical", &graphical), ("direct", &direct)] {
            let tv = tv_to_law(c, &law, atoms);
            exact_ok &= tv.value <= tv.bias + 2.0 * tv.std_error;
            report = report.with(&format!("tv_exact_{name}"), tv);
        }
        if !exact_ok {
            report.verdict = Verdict::Fail;
        }
        report = report.with("exact_law", law.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::{build_graph, GraphSpec, Serial};

    fn segment() -> Graph {
        build_graph(&GraphSpec::half_line(19)).unwrap()
    }

    #[test]
    fn walk_applies_ties_together() {
        use contact_core::graphical::Event;
        let a = Trajectory {
            delta: vec![0],
            initial: vec![false],
            events: vec![Event { time: 1.0, site: 0, infected: true }],
            window: (0.0, 2.0),
            final_config: None,
        };
        let mut b = a.clone();
        assert_eq!(walk(&[a.clone(), b.clone()], |s, t| t.iter().filter(|&&v| s[0][v] && !s[1][v]).count() as u64), 0);
        b.events[0].time = 1.5;
        assert_eq!(walk(&[a, b], |s, t| t.iter().filter(|&&v| s[0][v] && !s[1][v]).count() as u64), 1);
    }

    #[test]
    fn deterministic_checks_pass_and_catch_faults() {
        let g = segment();
        assert_eq!(g.len(), 20);
        for f in [check_monotone_coupling, check_additivity, check_duality_identity] {
            let ok = f(&g, 2.0, 3.0, 200, 4, Fault::None, &Serial);
            assert!(ok.passed() && ok.statistic == 0.0, "{ok:?}");
            let bad = f(&g, 2.0, 3.0, 200, 4, Fault::Desync, &Serial);
            assert_eq!(bad.verdict, Verdict::Fail, "{bad:?}");
        }
    }

    #[test]
    fn nested_pairs_are_nested() {
        let mut rng = CounterRng::new(1);
        for _ in 0..100 {
            let (a, b) = nested_pair(20, &mut rng);
            assert!(a.iter().all(|v| b.contains(v)));
        }
    }

    #[test]
    fn self_duality_symmetric_sets() {
        let g = build_graph(&GraphSpec::lattice(1, 20)).unwrap();
        let r = check_self_duality(&g, 2.0, &[0], &[0], 1.0, 2000, 2, &Serial).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn exact_law_of_pure_death() {
        let g = build_graph(&GraphSpec::explicit(vec![vec![1], vec![0]])).unwrap();
        let law = exact_law(&g, 0.0, 0b11, 0.7).unwrap();
        let (alive, dead) = ((-0.7f64).exp(), 1.0 - (-0.7f64).exp());
        assert!((law[&0b11] - alive * alive).abs() < 1e-9);
        assert!((law[&0b01] - alive * dead).abs() < 1e-9);
        assert!((law[&0] - dead * dead).abs() < 1e-9);
        assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn generator_equivalence_at_time_zero_and_on_the_path() {
        let g = build_graph(&GraphSpec::explicit(vec![vec![1], vec![0]])).unwrap();
        let r = check_generator_equivalence(&g, 1.0, 0.0, &[0, 1], 100, 1, &Serial).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = check_generator_equivalence(&g, 1.0, 0.5, &[0, 1], 5000, 1, &Serial).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn association_trivial_cases() {
        let cfg = StationaryConfig::new(GraphSpec::lattice(1, 15), vec![0, 1], 2.0, 10.0, 1.0, 3);
        let sure = Cylinder::at("sure", 0.0, AtomEvent::full(2).unwrap());
        let x = Cylinder::at("x", 0.0, AtomEvent::all_infected(2, &[0]).unwrap());
        let r = check_positive_association(&cfg, &[(x.clone(), sure), (x.clone(), x)], 500, &Serial).unwrap();
        assert!(r.passed(), "{r:?}");
        let healthy = Cylinder::at("h", 0.0, AtomEvent::all_healthy(2, &[0]).unwrap());
        let y = Cylinder::at("y", 0.0, AtomEvent::all_infected(2, &[1]).unwrap());
        assert!(matches!(
            check_positive_association(&cfg, &[(healthy, y)], 10, &Serial),
            Err(EstimateError::Event(EventError::NotIncreasing { .. }))
        ));
    }

    #[test]
    fn dfkg_small_batch() {
        let p = DfkgParams {
            stationary: StationaryConfig::new(GraphSpec::lattice(1, 15), vec![0, 1], 2.0, 10.0, 1.0, 3),
            zero_window: (-1.0, 0.0),
            pasts: vec![PastEvent::Always, PastEvent::AllInfected { sites: vec![0, 1], from: -1.0, to: 0.0 }],
            futures: default_futures().unwrap(),
            reps: 3000,
            floor: 1e-3,
        };
        let r = check_dfkg(&p, &Serial).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
