use contact_core::graph::truncation_radius;
use contact_core::graphical::{GraphicalSample, Sweep};
use contact_core::process::{hitting_time, RejectionPolicy, StationarySampler};
use contact_core::rng::derive_seed;
use contact_core::{build_graph, Family, Graph, GraphSpec, Replicate};
use serde::{Deserialize, Serialize};

use super::{check_grid, config_hash, invalid, CurvePoint, Estimate, EstimateError};
use crate::stats::{self, counts, fit_line, mean_se, proportion, LineFit, Tv};

/// Extinction time of the run from `start`, `None` if alive at `horizon`.
fn extinction(sample: &GraphicalSample<'_>, start: &[usize], horizon: f64) -> Option<f64> {
    if start.is_empty() {
        return Some(0.0);
    }
    Sweep::from_set(sample, start, 0.0).run_to_extinction(horizon)
}

fn check_vertex(g: &Graph, x: usize) -> Result<(), EstimateError> {
    if x >= g.len() {
        return invalid(format!("vertex {x} outside the graph ({} vertices)", g.len()));
    }
    Ok(())
}

/// Fraction of runs from `{x}` alive at `horizon`, with the fraction alive
/// at `horizon / 2` as a horizon-sensitivity diagnostic.
pub fn estimate_survival_prob<R: Replicate>(
    g: &Graph,
    lambda: f64,
    x: usize,
    horizon: f64,
    reps: u64,
    seed: u64,
    exec: &R,
) -> Result<Estimate, EstimateError> {
    check_vertex(g, x)?;
    if reps == 0 || !(horizon > 0.0) {
        return invalid("need reps >= 1 and horizon > 0");
    }
    let times = exec.run(reps, |rep| {
        let sample = GraphicalSample::new(g, (0.0, horizon), lambda, derive_seed(seed, rep));
        extinction(&sample, &[x], horizon)
    });
    Ok(survival_estimate(&times, horizon, reps, seed, (g.len(), lambda, x, horizon, reps)))
}

/// Survival fractions at several rates on one set of thinned samples, so
/// each run's survival is monotone in the rate.
pub fn estimate_survival_coupled<R: Replicate>(
    g: &Graph,
    lambdas: &[f64],
    x: usize,
    horizon: f64,
    reps: u64,
    seed: u64,
    exec: &R,
) -> Result<Vec<Estimate>, EstimateError> {
    check_vertex(g, x)?;
    let cap = lambdas.iter().copied().fold(0.0, f64::max);
    lambdas
        .iter()
        .map(|&lambda| {
            let times = exec.run(reps, |rep| {
                let sample = GraphicalSample::thinned(g, (0.0, horizon), lambda, cap, derive_seed(seed, rep));
                extinction(&sample, &[x], horizon)
            });
            Ok(survival_estimate(&times, horizon, reps, seed, (g.len(), lambda, x, horizon, reps)).with("cap", cap))
        })
        .collect()
}

fn survival_estimate(times: &[Option<f64>], horizon: f64, reps: u64, seed: u64, cfg: impl Serialize) -> Estimate {
    let alive = times.iter().filter(|t| t.is_none()).count() as u64;
    let alive_half = times.iter().filter(|t| t.map_or(true, |t| t > horizon / 2.0)).count() as u64;
    let (p, se) = proportion(alive, reps);
    let (ph, seh) = proportion(alive_half, reps);
    Estimate {
        value: p,
        std_error: se,
        replicates: reps,
        censored_fraction: p,
        seed,
        meta: config_hash(&cfg),
        diagnostics: Default::default(),
    }
    .with("half_horizon_value", ph)
    .with("half_horizon_std_error", seh)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCParams {
    /// Graph family; lattices and half-lines without a truncation get the
    /// branching-bound radius for the upper end of the bracket.
    pub graph: GraphSpec,
    pub horizon: f64,
    pub reps: u64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub threshold: f64,
    pub safety: f64,
    pub seed: u64,
}

impl LambdaCParams {
    pub fn new(graph: GraphSpec, horizon: f64, reps: u64, bracket: (f64, f64), seed: u64) -> Self {
        Self { graph, horizon, reps, bracket, tolerance: 0.01, threshold: 0.05, safety: 1.5, seed }
    }
}

/// Bisection for the rate at which survival from the origin to the horizon
/// crosses the threshold. Every rate is evaluated on the same thinned
/// samples (cap = upper end of the bracket), so the estimated survival is
/// monotone in the rate and the bisection is well posed.
pub fn estimate_lambda_c<R: Replicate>(p: &LambdaCParams, exec: &R) -> Result<Estimate, EstimateError> {
    let (lo, hi) = p.bracket;
    if !(0.0 <= lo && lo < hi) || p.reps == 0 || !(p.horizon > 0.0) || !(p.tolerance > 0.0) {
        return invalid("need 0 <= lo < hi, reps >= 1, horizon > 0, tolerance > 0");
    }
    let mut spec = p.graph.clone();
    if spec.truncation.is_none() {
        let d = match spec.family {
            Family::Lattice { dim } => 2 * dim as usize,
            Family::HalfLine => 2,
            _ => return invalid("trees and explicit graphs need an explicit truncation"),
        };
        spec = spec.with_truncation(truncation_radius(0, p.horizon, hi, d, p.safety) as u32);
    }
    let g = build_graph(&spec)?;
    let origin = g.origin();
    let survival = |lambda: f64, horizon: f64| -> (f64, f64) {
        let alive = exec
            .run(p.reps, |rep| {
                let sample = GraphicalSample::thinned(&g, (0.0, horizon), lambda, hi, derive_seed(p.seed, rep));
                extinction(&sample, &[origin], horizon).is_none()
            })
            .into_iter()
            .filter(|&a| a)
            .count() as u64;
        proportion(alive, p.reps)
    };
    let (p_lo, _) = survival(lo, p.horizon);
    let (p_hi, _) = survival(hi, p.horizon);
    if !(p_lo < p.threshold && p_hi >= p.threshold) {
        return Err(EstimateError::Bracket { lo, hi, p_lo, p_hi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut steps = Vec::new();
    while b - a > p.tolerance {
        let mid = 0.5 * (a + b);
        let (pm, se) = survival(mid, p.horizon);
        steps.push((mid, pm, se));
        if pm >= p.threshold {
            b = mid;
        } else {
            a = mid;
        }
    }
    let value = 0.5 * (a + b);
    let (half, _) = survival(value, p.horizon / 2.0);
    Ok(Estimate {
        value,
        std_error: 0.5 * (b - a),
        replicates: p.reps,
        censored_fraction: 0.0,
        seed: p.seed,
        meta: config_hash(p),
        diagnostics: Default::default(),
    }
    .with("survival_low", p_lo)
    .with("survival_high", p_hi)
    .with("bisection", steps)
    .with("radius", g.radius())
    .with("half_horizon_survival_at_estimate", half))
}

/// Survival-tail curve `P(t < τ < horizon)` and its log-linear fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTail {
    pub curve: Vec<CurvePoint>,
    pub counts: Vec<u64>,
    pub fit: Option<LineFit>,
    /// Grid range actually fitted, after dropping zero counts.
    pub fit_range: Option<(f64, f64)>,
    pub replicates: u64,
    pub seed: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_tau_tail<R: Replicate>(
    g: &Graph,
    lambda: f64,
    x: usize,
    t_grid: &[f64],
    horizon: f64,
    fit_range: (f64, f64),
    reps: u64,
    seed: u64,
    exec: &R,
) -> Result<TauTail, EstimateError> {
    check_vertex(g, x)?;
    check_grid(t_grid)?;
    if t_grid.last().is_some_and(|&t| t >= horizon) || reps == 0 {
        return invalid("time grid must end before the horizon and reps >= 1");
    }
    let deaths: Vec<f64> = exec
        .run(reps, |rep| {
            let sample = GraphicalSample::new(g, (0.0, horizon), lambda, derive_seed(seed, rep));
            extinction(&sample, &[x], horizon)
        })
        .into_iter()
        .flatten()
        .collect();
    let tail_counts: Vec<u64> = t_grid.iter().map(|&t| deaths.iter().filter(|&&d| d > t).count() as u64).collect();
    let curve: Vec<CurvePoint> = t_grid
        .iter()
        .zip(&tail_counts)
        .map(|(&t, &k)| {
            let (p, se) = proportion(k, reps);
            CurvePoint { t, value: p, std_error: se }
        })
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (pt, &k) in curve.iter().zip(&tail_counts) {
        if pt.t < fit_range.0 || pt.t > fit_range.1 {
            continue;
        }
        if k == 0 {
            break;
        }
        xs.push(pt.t);
        ys.push(pt.value.ln());
        // Var(log p̂) ≈ (1 - p) / k
        ws.push(k as f64 / (1.0 - pt.value).max(1e-12));
    }
    let fit = fit_line(&xs, &ys, Some(&ws));
    let fit_range = (xs.len() >= 2).then(|| (xs[0], xs[xs.len() - 1]));
    Ok(TauTail { curve, counts: tail_counts, fit, fit_range, replicates: reps, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub dim: u32,
    pub lambda: f64,
    pub n_list: Vec<u32>,
    pub reps: u64,
    /// Horizon for target `n e₁` is `horizon_per_site * n + horizon_offset`;
    /// it is both the hitting censor and the survival filter.
    pub horizon_per_site: f64,
    pub horizon_offset: f64,
    pub floor: f64,
    pub seed: u64,
}

impl BetaParams {
    pub fn new(lambda: f64, n_list: Vec<u32>, reps: u64, seed: u64) -> Self {
        Self { dim: 1, lambda, n_list, reps, horizon_per_site: 4.0, horizon_offset: 20.0, floor: 1e-3, seed }
    }
}

/// Time per site of the spread: slope of the mean conditioned hitting time
/// of `n e₁` against `n`, weighted by the inverse squared standard errors.
pub fn estimate_beta<R: Replicate>(p: &BetaParams, exec: &R) -> Result<Estimate, EstimateError> {
    if p.n_list.len() < 2 || p.reps < 2 || p.dim == 0 {
        return invalid("need at least two n values, reps >= 2 and dim >= 1");
    }
    let policy = RejectionPolicy { floor: p.floor };
    let mut means = Vec::new();
    let mut censored = 0u64;
    let mut attempts = 0u64;
    for (i, &n) in p.n_list.iter().enumerate() {
        let horizon = p.horizon_per_site * f64::from(n) + p.horizon_offset;
        let radius = truncation_radius(n as usize, horizon, p.lambda, 2 * p.dim as usize, 1.0) as u32;
        let g = build_graph(&GraphSpec::lattice(p.dim, radius))?;
        let mut point = vec![0i64; p.dim as usize];
        point[0] = i64::from(n);
        let target = g.vertex_at(&point).expect("inside the box");
        let lineage = derive_seed(p.seed, i as u64);
        let runs = exec.run(p.reps, |rep| hitting_time(&g, p.lambda, target, horizon, derive_seed(lineage, rep), policy));
        let mut times = Vec::with_capacity(runs.len());
        for r in runs {
            let c = r?;
            attempts += c.attempts;
            censored += u64::from(c.value.is_censored());
            times.push(c.value.value());
        }
        means.push((f64::from(n), mean_se(&times)));
    }
    let xs: Vec<f64> = means.iter().map(|m| m.0).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.1.mean).collect();
    let ws: Vec<f64> = means.iter().map(|m| 1.0 / m.1.std_error.max(1e-12).powi(2)).collect();
    let fit = fit_line(&xs, &ys, Some(&ws)).ok_or_else(|| EstimateError::Invalid("degenerate n list".into()))?;
    let total = p.reps * p.n_list.len() as u64;
    let max_n = xs.iter().copied().fold(0.0, f64::max);
    let per_n: Vec<(f64, f64, f64)> = means.iter().map(|(n, m)| (*n, m.mean, m.std_error)).collect();
    Ok(Estimate {
        value: fit.slope,
        std_error: fit.slope_se,
        replicates: total,
        censored_fraction: censored as f64 / total as f64,
        seed: p.seed,
        meta: config_hash(p),
        diagnostics: Default::default(),
    }
    .with("per_n_mean", per_n)
    .with("intercept", fit.intercept)
    .with("fit_residual_rms", fit.residual_rms)
    .with("relative_residual", fit.residual_rms / max_n)
    .with("acceptance_rate", total as f64 / attempts.max(1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub t: f64,
    pub tv: Tv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// `(P̂(τ > horizon), s.e.)` from the same runs.
    pub survival: (f64, f64),
    pub replicates: u64,
    pub seed: u64,
}

/// TV on `window` between the run from `initial` at each grid time and the
/// mixture `P̂(τ <= horizon) δ_0 + P̂(τ > horizon) ν̄`, with `ν̄` estimated
/// from `stationary` (whose observed set must be `window`).
#[allow(clippy::too_many_arguments)]
pub fn complete_convergence_check<R: Replicate>(
    g: &Graph,
    lambda: f64,
    initial: &[usize],
    t_grid: &[f64],
    horizon: f64,
    reps: u64,
    stationary: &StationarySampler,
    stationary_reps: u64,
    seed: u64,
    exec: &R,
) -> Result<ConvergenceReport, EstimateError> {
    check_grid(t_grid)?;
    let window = stationary.config().delta.clone();
    if window.len() > crate::events::MAX_SITES {
        return invalid("observation window above the atom cap");
    }
    for &v in initial.iter().chain(&window) {
        check_vertex(g, v)?;
    }
    if t_grid.last().is_some_and(|&t| t > horizon) || reps == 0 || stationary_reps == 0 {
        return invalid("time grid must lie inside the horizon and reps >= 1");
    }
    let runs = exec.run(reps, |rep| {
        let sample = GraphicalSample::new(g, (0.0, horizon), lambda, derive_seed(seed, rep));
        let mut sweep = Sweep::from_set(&sample, initial, 0.0);
        let mut atoms = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            while sweep.next_flip(t).is_some() {}
            atoms.push(window.iter().enumerate().fold(0u64, |a, (i, &v)| a | (u64::from(sweep.is_infected(v)) << i)));
        }
        while sweep.infected_count() > 0 && sweep.next_flip(horizon).is_some() {}
        (atoms, sweep.infected_count() > 0)
    });
    let alive = runs.iter().filter(|r| r.1).count() as u64;
    let (p_alive, se_alive) = proportion(alive, reps);
    let stat = counts(exec.run(stationary_reps, |rep| stationary.atom_at_zero(rep)));
    let k = 1usize << window.len();
    let points = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let c = counts(runs.iter().map(|r| r.0[i]));
            ConvergencePoint { t, tv: stats::tv_to_mixture(&c, 1.0 - p_alive, reps, &stat, k) }
        })
        .collect();
    Ok(ConvergenceReport { points, survival: (p_alive, se_alive), replicates: reps, seed })
}
