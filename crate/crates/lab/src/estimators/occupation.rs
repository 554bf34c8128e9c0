use contact_core::process::{StationaryConfig, StationarySampler};
use contact_core::rng::derive_seed;
use contact_core::{Replicate, SimError, Trajectory};
use serde::{Deserialize, Serialize};

use super::{config_hash, invalid, EstimateError};
use crate::events::MAX_SITES;
use crate::stats::{batch_means_sigma2, fit_line, ks_normal, mean_se, TestResult};

/// A bounded function of the configuration on the observed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Constant(f64),
    /// Indicator that the observed site in this slot is infected.
    Infected(usize),
    AnyInfected,
    AllInfected,
    AllHealthy,
    InfectedCount,
    /// Value per atom, indexed by the atom.
    Table(Vec<f64>),
}

impl Observable {
    pub fn eval(&self, atom: u64, sites: usize) -> f64 {
        let full = if sites == 64 { u64::MAX } else { (1u64 << sites) - 1 };
        match self {
            Observable::Constant(c) => *c,
            Observable::Infected(slot) => f64::from(u8::from(atom >> slot & 1 == 1)),
            Observable::AnyInfected => f64::from(u8::from(atom != 0)),
            Observable::AllInfected => f64::from(u8::from(atom & full == full)),
            Observable::AllHealthy => f64::from(u8::from(atom == 0)),
            Observable::InfectedCount => f64::from(atom.count_ones()),
            Observable::Table(v) => v[atom as usize],
        }
    }

    pub fn validate(&self, sites: usize) -> Result<(), EstimateError> {
        match self {
            Observable::Infected(slot) if *slot >= sites => invalid(format!("slot {slot} outside {sites} sites")),
            Observable::Table(v) if sites > MAX_SITES || v.len() != 1 << sites => {
                invalid(format!("table needs 2^{sites} entries, got {}", v.len()))
            }
            Observable::Constant(c) if !c.is_finite() => invalid("observable must be bounded"),
            Observable::Table(v) if v.iter().any(|x| !x.is_finite()) => invalid("observable must be bounded"),
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self, sites: usize) -> bool {
        match self {
            Observable::Constant(_) => true,
            Observable::Table(v) => v.iter().all(|&x| x == v[0]),
            _ => sites == 0,
        }
    }

    /// Whether the observable is non-decreasing in the configuration.
    pub fn is_increasing(&self, sites: usize) -> bool {
        match self {
            Observable::AllHealthy => sites == 0,
            Observable::Table(v) => {
                (0..v.len() as u64).all(|a| (0..sites).all(|i| v[(a | 1 << i) as usize] >= v[a as usize]))
            }
            _ => true,
        }
    }
}

/// `∫ f(ξ_s) ds` over `[start, start + t]` of the trajectory window, exact
/// over its constant pieces.
pub fn occupation_time(traj: &Trajectory, f: &Observable, t: f64) -> Result<f64, EstimateError> {
    let (start, end) = traj.window;
    if !(t >= 0.0) || start + t > end + 1e-9 * end.abs().max(1.0) {
        return invalid(format!("window [{start}, {end}] does not cover {t} time units"));
    }
    let until = (start + t).min(end);
    let sites = traj.delta.len();
    Ok(traj
        .pieces()
        .into_iter()
        .take_while(|&(from, _, _)| from < until)
        .map(|(from, to, atom)| (to.min(until) - from) * f.eval(atom, sites))
        .sum())
}

/// Integrals of `f` over consecutive unit-length cells of the window.
fn unit_integrals(traj: &Trajectory, f: &Observable) -> Vec<f64> {
    let (start, end) = traj.window;
    let cells = (end - start).floor() as usize;
    let sites = traj.delta.len();
    let mut out = vec![0.0; cells];
    for (from, to, atom) in traj.pieces() {
        let v = f.eval(atom, sites);
        if v == 0.0 {
            continue;
        }
        let (mut a, b) = (from - start, (to - start).min(cells as f64));
        while a < b {
            let cell = a.floor() as usize;
            let edge = ((cell + 1) as f64).min(b);
            out[cell] += (edge - a) * v;
            a = edge;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    /// Stationary law; its horizon is replaced by `t` for the replicates.
    pub stationary: StationaryConfig,
    pub observable: Observable,
    pub t: f64,
    pub reps: u64,
    /// Length of the independent long run for the mean and variance.
    pub long_run: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub t: f64,
    pub replicates: u64,
    pub seed: u64,
    pub meta: String,
    /// Mean of `f` from the long run.
    pub mean_hat: f64,
    /// Batch-means asymptotic variance from the long run.
    pub sigma2_hat: f64,
    /// `Var(Z_t / t)` across the replicates.
    pub var_of_mean: f64,
    pub replicate_mean: f64,
    /// Kolmogorov-Smirnov test of `sqrt(t) (Z_t/t - m̂)` against `N(0, σ̂²)`;
    /// absent for a constant observable.
    pub ks: Option<TestResult>,
}

pub fn estimate_clt<R: Replicate>(p: &CltParams, exec: &R) -> Result<CltReport, EstimateError> {
    let sites = p.stationary.delta.len();
    p.observable.validate(sites)?;
    if p.reps < 100 {
        return invalid("the CLT check needs at least 100 replicates");
    }
    if !(p.t > 0.0) || !(p.long_run >= 2.0 * p.batches as f64) || p.batches < 2 {
        return invalid("need t > 0, at least two batches and a long run of two units per batch");
    }
    let mut cfg = p.stationary.clone();
    cfg.horizon = p.t;
    let sampler = StationarySampler::new(cfg)?;
    let runs: Vec<(f64, bool)> = exec
        .run(p.reps, |rep| {
            let t = sampler.sample(rep);
            let alive = t.final_config.as_ref().is_some_and(|c| !c.is_all_healthy());
            occupation_time(&t, &p.observable, p.t).map(|z| (z / p.t, alive))
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    let means: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let any_alive = runs.iter().any(|r| r.1);

    let mut long = p.stationary.clone();
    long.horizon = p.long_run;
    long.seed = derive_seed(p.stationary.seed, u64::MAX);
    let run = StationarySampler::new(long)?.sample(0);
    if any_alive && run.final_config.as_ref().is_some_and(|c| c.is_all_healthy()) {
        // the finite volume died out while the stationary law is not empty
        return Err(SimError::TruncationTooSmall(format!(
            "truncated system extinct before the end of the {}-unit variance run",
            p.long_run
        ))
        .into());
    }
    let units = unit_integrals(&run, &p.observable);
    let mean_hat = units.iter().sum::<f64>() / units.len() as f64;
    let sigma2_hat = batch_means_sigma2(&units, p.batches).unwrap_or(0.0);

    let ms = mean_se(&means);
    let var_of_mean = ms.std_error.powi(2) * means.len() as f64;
    let ks = if sigma2_hat > 1e-12 {
        let z: Vec<f64> = means.iter().map(|m| p.t.sqrt() * (m - mean_hat)).collect();
        Some(ks_normal(&z, 0.0, sigma2_hat))
    } else if p.observable.is_constant(sites) {
        None
    } else {
        return Err(EstimateError::Degenerate { sigma2: sigma2_hat });
    };
    Ok(CltReport {
        t: p.t,
        replicates: p.reps,
        seed: p.stationary.seed,
        meta: config_hash(p),
        mean_hat,
        sigma2_hat,
        var_of_mean,
        replicate_mean: ms.mean,
        ks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub stationary: StationaryConfig,
    pub observable: Observable,
    pub grid: Vec<f64>,
    pub horizons: Vec<f64>,
    pub reps: u64,
    /// Interval half-width; half the grid spacing when absent.
    pub half_width: Option<f64>,
    pub min_hits: u64,
}

impl RateParams {
    pub fn new(stationary: StationaryConfig, observable: Observable, grid: Vec<f64>, horizons: Vec<f64>, reps: u64) -> Self {
        Self { stationary, observable, grid, horizons, reps, half_width: None, min_hits: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiPoint {
    pub x: f64,
    pub psi: f64,
    pub std_error: f64,
    /// True when no horizon had enough hits and `psi` is the upper bound
    /// `-ln(reps) / T` at the largest horizon.
    pub bound: bool,
    /// Horizons with enough hits that entered the extrapolation.
    pub horizons_used: Vec<f64>,
    /// `(T, hits)` per horizon.
    pub hits: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionEstimate {
    pub grid: Vec<f64>,
    pub half_width: f64,
    pub horizons: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
    pub meta: String,
    pub points: Vec<PsiPoint>,
    /// Smallest concave function above every grid value.
    pub concave_envelope: Vec<f64>,
    /// Mean of `Z_T / T` at the largest horizon, and ψ̂ there.
    pub empirical_mean: f64,
    pub at_mean: PsiPoint,
}

impl RateFunctionEstimate {
    pub fn sparse(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(|p| p.bound).map(|p| p.x)
    }
}

/// Rate function of `Z_T / T` on interval events `[x - h, x + h]`.
///
/// At each horizon `ψ_T(x) = T⁻¹ ln(P̂(x) / P̂(m̂_T))`, with `m̂_T` the
/// empirical mean: dividing by the probability of the interval around the
/// mean cancels the sub-exponential prefactor the two share. Then
/// `ψ_T = a + b / T` is fitted across the horizons with at least `min_hits`
/// hits and `min(a, 0)` reported.
pub fn estimate_rate_function<R: Replicate>(p: &RateParams, exec: &R) -> Result<RateFunctionEstimate, EstimateError> {
    let sites = p.stationary.delta.len();
    p.observable.validate(sites)?;
    if !p.observable.is_increasing(sites) {
        return invalid("the rate function estimator needs an increasing observable");
    }
    if p.grid.len() < 2 || p.grid.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("grid needs two or more increasing points");
    }
    if p.horizons.is_empty() || p.horizons.windows(2).any(|w| !(w[0] < w[1])) || !(p.horizons[0] > 0.0) {
        return invalid("horizons must be positive and increasing");
    }
    if p.reps < 2 || p.min_hits == 0 {
        return invalid("need reps >= 2 and min_hits >= 1");
    }
    let h = p.half_width.unwrap_or_else(|| (p.grid[1] - p.grid[0]) / 2.0);
    if !(h > 0.0) {
        return invalid("half-width must be positive");
    }
    let mut samples = Vec::with_capacity(p.horizons.len());
    for (i, &t) in p.horizons.iter().enumerate() {
        let mut cfg = p.stationary.clone();
        cfg.horizon = t;
        cfg.seed = derive_seed(p.stationary.seed, i as u64);
        let sampler = StationarySampler::new(cfg)?;
        let z: Vec<f64> = exec
            .run(p.reps, |rep| occupation_time(&sampler.sample(rep), &p.observable, t).map(|z| z / t))
            .into_iter()
            .collect::<Result<_, _>>()?;
        samples.push(z);
    }
    let last = samples.last().expect("non-empty");
    let empirical_mean = last.iter().sum::<f64>() / last.len() as f64;
    let point = |x: f64| psi_at(x, h, &p.horizons, &samples, p.reps, p.min_hits);
    let points: Vec<PsiPoint> = p.grid.iter().map(|&x| point(x)).collect();
    if points.iter().all(|q| q.bound) {
        return Err(EstimateError::AllSparse);
    }
    let values: Vec<f64> = points.iter().map(|q| q.psi).collect();
    Ok(RateFunctionEstimate {
        grid: p.grid.clone(),
        half_width: h,
        horizons: p.horizons.clone(),
        replicates: p.reps,
        seed: p.stationary.seed,
        meta: config_hash(p),
        concave_envelope: concave_majorant(&p.grid, &values),
        points,
        empirical_mean,
        at_mean: point(empirical_mean),
    })
}

fn psi_at(x: f64, h: f64, horizons: &[f64], samples: &[Vec<f64>], reps: u64, min_hits: u64) -> PsiPoint {
    let n = reps as f64;
    let mut hits = Vec::with_capacity(horizons.len());
    let (mut ts, mut psi, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (&t, z) in horizons.iter().zip(samples) {
        let centre = z.iter().sum::<f64>() / z.len() as f64;
        let inside = |v: f64, c: f64| (v - c).abs() <= h + 1e-12;
        let k = z.iter().filter(|&&v| inside(v, x)).count() as u64;
        let k_ref = z.iter().filter(|&&v| inside(v, centre)).count() as u64;
        let k_both = z.iter().filter(|&&v| inside(v, x) && inside(v, centre)).count() as u64;
        hits.push((t, k));
        if k >= min_hits && k_ref >= min_hits {
            let (k, k_ref, k_both) = (k as f64, k_ref as f64, k_both as f64);
            // delta method for ln p̂ - ln p̂_ref under the multinomial law
            let var = (1.0 / k + 1.0 / k_ref - 2.0 * k_both / (k * k_ref)).max(0.0);
            ts.push(t);
            psi.push((k / k_ref).ln() / t);
            w.push(var.sqrt() / t);
        }
    }
    let t_max = *horizons.last().expect("non-empty");
    let (value, std_error, bound) = match ts.len() {
        0 => (-(n.ln()) / t_max, 0.0, true),
        1 => (psi[0], w[0], false),
        2 => {
            // exact line through two points
            let (a1, a2) = (1.0 / ts[0], 1.0 / ts[1]);
            let c1 = a2 / (a2 - a1);
            let c2 = -a1 / (a2 - a1);
            (c1 * psi[0] + c2 * psi[1], (c1 * w[0]).hypot(c2 * w[1]), false)
        }
        _ if w.iter().all(|&s| s == 0.0) => (psi.iter().sum::<f64>() / psi.len() as f64, 0.0, false),
        _ => {
            let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
            let weights: Vec<f64> = w.iter().map(|s| 1.0 / s.max(1e-9).powi(2)).collect();
            let fit = fit_line(&inv, &psi, Some(&weights)).expect("three distinct horizons");
            (fit.intercept, fit.intercept_se, false)
        }
    };
    // ψ <= 0 always; a positive value only reflects a mode off the mean at
    // finite T, where the constrained estimate is 0
    PsiPoint { x, psi: value.min(0.0), std_error, bound, horizons_used: ts, hits }
}

/// Least concave majorant of the points `(x_i, y_i)`, evaluated at each `x_i`.
pub(crate) fn concave_majorant(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or below the chord from a to i
            if (y[b] - y[a]) * (x[i] - x[a]) <= (y[i] - y[a]) * (x[b] - x[a]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = Vec::with_capacity(x.len());
    let mut seg = 0;
    for i in 0..x.len() {
        while seg + 1 < hull.len() && hull[seg + 1] < i {
            seg += 1;
        }
        if seg + 1 >= hull.len() {
            out.push(y[hull[seg]]);
        } else {
            let (a, b) = (hull[seg], hull[seg + 1]);
            out.push(y[a] + (y[b] - y[a]) * (x[i] - x[a]) / (x[b] - x[a]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::graphical::Event;
    use contact_core::{GraphSpec, Serial};

    fn two_events() -> Trajectory {
        Trajectory {
            delta: vec![0, 1],
            initial: vec![true, false],
            events: vec![Event { time: 1.5, site: 1, infected: true }, Event { time: 4.0, site: 0, infected: false }],
            window: (0.0, 6.0),
            final_config: None,
        }
    }

    #[test]
    fn hand_integrals() {
        let t = two_events();
        assert_eq!(occupation_time(&t, &Observable::Constant(1.0), 6.0).unwrap(), 6.0);
        // count: 1 on [0,1.5), 2 on [1.5,4), 1 on [4,6]
        assert_eq!(occupation_time(&t, &Observable::InfectedCount, 6.0).unwrap(), 1.5 + 5.0 + 2.0);
        assert_eq!(occupation_time(&t, &Observable::InfectedCount, 2.0).unwrap(), 1.5 + 1.0);
        assert_eq!(occupation_time(&t, &Observable::AllInfected, 6.0).unwrap(), 2.5);
        let healthy = Trajectory::constant(vec![3], vec![false], (0.0, 7.0));
        assert_eq!(occupation_time(&healthy, &Observable::AllHealthy, 7.0).unwrap(), 7.0);
        assert!(occupation_time(&t, &Observable::AnyInfected, 6.5).is_err());
    }

    #[test]
    fn unit_cells_sum_to_the_integral() {
        let t = two_events();
        let cells = unit_integrals(&t, &Observable::InfectedCount);
        assert_eq!(cells, vec![1.0, 1.5, 2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn observable_properties() {
        assert!(Observable::AnyInfected.is_increasing(3));
        assert!(!Observable::AllHealthy.is_increasing(1));
        assert!(Observable::Table(vec![0.0, 1.0, 1.0, 3.0]).is_increasing(2));
        assert!(!Observable::Table(vec![0.0, 1.0, 0.5, 0.0]).is_increasing(2));
        assert!(Observable::Table(vec![0.0; 3]).validate(2).is_err());
        assert!(Observable::Infected(2).validate(2).is_err());
    }

    #[test]
    fn majorant() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [-4.0, -1.0, -2.0, -0.5, -3.0];
        let m = concave_majorant(&x, &y);
        assert_eq!(m, vec![-4.0, -1.0, -0.75, -0.5, -3.0]);
        for w in m.windows(3) {
            assert!(w[1] >= (w[0] + w[2]) / 2.0 - 1e-12);
        }
    }

    fn cfg(lambda: f64) -> StationaryConfig {
        StationaryConfig::new(GraphSpec::lattice(1, 15), vec![0], lambda, 15.0, 1.0, 11)
    }

    #[test]
    fn constant_observable_has_no_fluctuation() {
        let p = CltParams { stationary: cfg(2.0), observable: Observable::Constant(0.7), t: 5.0, reps: 100, long_run: 40.0, batches: 4 };
        let r = estimate_clt(&p, &Serial).unwrap();
        assert_eq!(r.sigma2_hat, 0.0);
        assert!((r.replicate_mean - 0.7).abs() < 1e-12 && r.ks.is_none());
    }

    #[test]
    fn degenerate_variance_is_flagged() {
        // λ = 0: the observed site is healthy throughout
        let p = CltParams { stationary: cfg(0.0), observable: Observable::Infected(0), t: 5.0, reps: 100, long_run: 40.0, batches: 4 };
        assert!(matches!(estimate_clt(&p, &Serial), Err(EstimateError::Degenerate { .. })));
    }

    #[test]
    fn sparse_points_are_bounds() {
        let p = RateParams::new(cfg(2.0), Observable::Infected(0), vec![0.0, 0.3, 0.6, 0.9], vec![10.0, 20.0], 200);
        let r = estimate_rate_function(&p, &Serial).unwrap();
        let first = &r.points[0];
        assert!(first.bound, "{first:?}");
        assert!((first.psi + 200f64.ln() / 20.0).abs() < 1e-12);
        assert!(r.at_mean.psi.abs() <= 2.0 * r.at_mean.std_error + 1e-9, "{:?}", r.at_mean);
    }
}
