use contact_core::graph::truncation_radius;
use contact_core::process::{
    condition_on_survival, sample_conditioned_past, PastEvent, RejectionPolicy, StationaryConfig, StationarySampler,
};
use contact_core::rng::derive_seed;
use contact_core::{build_graph, Family, Replicate, Trajectory};
use serde::{Deserialize, Serialize};

use super::{check_grid, config_hash, invalid, CurvePoint, Estimate, EstimateError, MixingCurve, MixingKind};
use crate::events::{AtomEvent, MAX_SITES};
use crate::stats::{counts, fit_line, mean_se, plug_in_bias, proportion, tv_two_sample};

/// Largest observed set for which the α estimator uses every atom as an event.
const ATOM_FAMILY_SITES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    /// The long run is replica 0 of this configuration over `[0, horizon]`.
    pub stationary: StationaryConfig,
    pub t_grid: Vec<f64>,
    /// Spacing of the observation grid along the run.
    pub dt: f64,
    pub batches: usize,
}

/// The observed atom at `0, dt, 2dt, ..` along `traj`.
fn atom_series(traj: &Trajectory, dt: f64) -> Vec<u16> {
    let (start, end) = traj.window;
    let n = ((end - start) / dt + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut atom = traj.initial_atom();
    let mut events = traj.events.iter().peekable();
    for k in 0..n {
        let t = start + k as f64 * dt;
        while let Some(e) = events.next_if(|e| e.time <= t) {
            atom = if e.infected { atom | 1 << e.site } else { atom & !(1 << e.site) };
        }
        out.push(atom as u16);
    }
    out
}

/// `max |P(A ∩ B_t) - P(A) P(B_t)|` over a family of single-time events at
/// times 0 and `t`, estimated along one long stationary run. Standard errors
/// come from batch estimates of the maximizing pair.
pub fn estimate_alpha_mixing(p: &AlphaParams) -> Result<MixingCurve, EstimateError> {
    check_grid(&p.t_grid)?;
    let sites = p.stationary.delta.len();
    if sites > MAX_SITES {
        return invalid(format!("{sites} observed sites exceed the cap of {MAX_SITES}"));
    }
    if !(p.dt > 0.0) || p.batches < 2 {
        return invalid("need dt > 0 and at least two batches");
    }
    let (events, family) = if sites <= ATOM_FAMILY_SITES {
        let ev: Vec<AtomEvent> = (0..1u64 << sites).map(|a| AtomEvent::new(sites, [a]).expect("in range")).collect();
        (ev, "all atoms at both times".to_owned())
    } else {
        let mut ev: Vec<AtomEvent> = (0..sites).map(|i| AtomEvent::all_infected(sites, &[i]).expect("slot")).collect();
        ev.push(AtomEvent::all_healthy(sites, &(0..sites).collect::<Vec<_>>())?);
        ev.push(AtomEvent::all_infected(sites, &(0..sites).collect::<Vec<_>>())?);
        (ev, "single-site infections, all healthy, all infected".to_owned())
    };
    let m = events.len();
    // bitmask of the events containing each atom
    let member: Vec<u64> = (0..1u64 << sites)
        .map(|a| events.iter().enumerate().fold(0u64, |acc, (i, e)| acc | (u64::from(e.contains(a)) << i)))
        .collect();
    let lags: Vec<usize> = p.t_grid.iter().map(|t| (t / p.dt).round() as usize).collect();
    let max_lag = *lags.iter().max().expect("non-empty");

    let sampler = StationarySampler::new(p.stationary.clone())?;
    let series = atom_series(&sampler.sample(0), p.dt);
    if series.len() <= max_lag + p.batches * 10 {
        return invalid("run too short for the largest lag");
    }
    let usable = series.len() - max_lag;
    let per_batch = usable / p.batches;

    let mut points = Vec::with_capacity(lags.len());
    for (&lag, &t) in lags.iter().zip(&p.t_grid) {
        // joint[b][i * m + l], first[b][i], second[b][l]
        let mut joint = vec![vec![0u64; m * m]; p.batches];
        let mut first = vec![vec![0u64; m]; p.batches];
        let mut second = vec![vec![0u64; m]; p.batches];
        for b in 0..p.batches {
            for k in b * per_batch..(b + 1) * per_batch {
                let (ma, mb) = (member[series[k] as usize], member[series[k + lag] as usize]);
                for i in bits(ma) {
                    first[b][i] += 1;
                    for l in bits(mb) {
                        joint[b][i * m + l] += 1;
                    }
                }
                for l in bits(mb) {
                    second[b][l] += 1;
                }
            }
        }
        let cov = |b: Option<usize>, i: usize, l: usize| -> f64 {
            let range: Vec<usize> = b.map_or_else(|| (0..p.batches).collect(), |b| vec![b]);
            let n = (range.len() * per_batch) as f64;
            let j: u64 = range.iter().map(|&b| joint[b][i * m + l]).sum();
            let a: u64 = range.iter().map(|&b| first[b][i]).sum();
            let c: u64 = range.iter().map(|&b| second[b][l]).sum();
            j as f64 / n - (a as f64 / n) * (c as f64 / n)
        };
        let mut best = (0usize, 0usize, 0.0f64);
        for i in 0..m {
            for l in 0..m {
                let c = cov(None, i, l).abs();
                if c > best.2 {
                    best = (i, l, c);
                }
            }
        }
        let per: Vec<f64> = (0..p.batches).map(|b| cov(Some(b), best.0, best.1)).collect();
        points.push(CurvePoint { t, value: best.2, std_error: mean_se(&per).std_error });
    }
    let bias = vec![0.0; points.len()];
    Ok(MixingCurve {
        kind: MixingKind::AlphaCovariance,
        event_family: family,
        points,
        bias,
        replicates: p.batches as u64,
        seed: p.stationary.seed,
    })
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

/// Lower bound on the φ-mixing distance: for each time, the largest plug-in
/// TV over `pasts` between the conditional and unconditional marginals on
/// the observed set.
pub fn estimate_d<R: Replicate>(
    sampler: &StationarySampler,
    pasts: &[PastEvent],
    t_grid: &[f64],
    reps: u64,
    policy: RejectionPolicy,
    exec: &R,
) -> Result<MixingCurve, EstimateError> {
    check_grid(t_grid)?;
    let cfg = sampler.config();
    let sites = cfg.delta.len();
    if sites > MAX_SITES {
        return invalid(format!("{sites} observed sites exceed the cap of {MAX_SITES}"));
    }
    if pasts.is_empty() || reps == 0 {
        return invalid("need at least one past event and reps >= 1");
    }
    if t_grid.last().is_some_and(|&t| t > cfg.horizon) {
        return invalid("time grid beyond the sampler horizon");
    }
    for past in pasts {
        past.validate(&cfg.delta)?;
    }
    let free: Vec<Vec<u64>> = exec.run(reps, |rep| sampler.sample(rep).atoms_at(t_grid));
    let mut conditioned = Vec::with_capacity(pasts.len());
    for past in pasts {
        let runs = exec.run(reps, |rep| sample_conditioned_past(sampler, past, rep, policy));
        let atoms: Result<Vec<Vec<u64>>, _> = runs.into_iter().map(|r| r.map(|c| c.value.atoms_at(t_grid))).collect();
        conditioned.push(atoms?);
    }
    let k = 1usize << sites;
    let mut points = Vec::with_capacity(t_grid.len());
    let mut bias = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let base = counts(free.iter().map(|a| a[i]));
        let best = conditioned
            .iter()
            .map(|c| tv_two_sample(&counts(c.iter().map(|a| a[i])), &base, k))
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("non-empty");
        points.push(CurvePoint { t, value: best.value, std_error: best.std_error });
        bias.push(best.bias);
    }
    Ok(MixingCurve {
        kind: MixingKind::TvLowerBound,
        event_family: format!("{pasts:?} against single-time marginals"),
        points,
        bias,
        replicates: reps,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub estimate: Estimate,
    /// `P̂(site healthy throughout [0, t))` on the grid.
    pub curve: Vec<CurvePoint>,
    pub fit_range: Option<(f64, f64)>,
}

/// Exponential rate of `P(ξ_s(x) = 0 for all s in [0, t))` under the
/// stationary law: the slope of its logarithm against `t`. `slot` indexes
/// the sampler's observed set.
pub fn estimate_rho<R: Replicate>(
    sampler: &StationarySampler,
    slot: usize,
    t_grid: &[f64],
    reps: u64,
    exec: &R,
) -> Result<RhoEstimate, EstimateError> {
    check_grid(t_grid)?;
    let cfg = sampler.config();
    if slot >= cfg.delta.len() || reps == 0 {
        return invalid("slot outside the observed set or reps = 0");
    }
    if t_grid.last().is_some_and(|&t| t > cfg.horizon) {
        return invalid("time grid beyond the sampler horizon");
    }
    // first infection time of the slot (0 if infected at time 0)
    let first: Vec<f64> = exec.run(reps, |rep| {
        let t = sampler.sample(rep);
        if t.initial[slot] {
            0.0
        } else {
            t.events.iter().find(|e| e.site == slot && e.infected).map_or(f64::INFINITY, |e| e.time)
        }
    });
    let hits: Vec<u64> = t_grid.iter().map(|&t| first.iter().filter(|&&f| f >= t).count() as u64).collect();
    let curve: Vec<CurvePoint> = t_grid
        .iter()
        .zip(&hits)
        .map(|(&t, &k)| {
            let (p, se) = proportion(k, reps);
            CurvePoint { t, value: p, std_error: se }
        })
        .collect();
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for (pt, &k) in curve.iter().zip(&hits) {
        if k == 0 {
            break;
        }
        xs.push(pt.t);
        ys.push(pt.value.ln());
        ws.push(k as f64 / (1.0 - pt.value).max(1.0 / reps as f64));
    }
    let (slope, se) = if hits.iter().all(|&k| k == reps) {
        (0.0, 0.0)
    } else {
        match fit_line(&xs, &ys, Some(&ws)) {
            Some(f) => (f.slope, f.slope_se),
            None => (f64::NAN, f64::NAN),
        }
    };
    let fit_range = (xs.len() >= 2).then(|| (xs[0], xs[xs.len() - 1]));
    let estimate = Estimate {
        value: slope,
        std_error: se,
        replicates: reps,
        censored_fraction: 0.0,
        seed: cfg.seed,
        meta: config_hash(&(cfg, slot, t_grid)),
        diagnostics: Default::default(),
    };
    Ok(RhoEstimate { estimate, curve, fit_range })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    /// Template for the stationary law; its observed set is replaced by the
    /// cone slice.
    pub stationary: StationaryConfig,
    pub y: usize,
    pub theta: f64,
    pub t_grid: Vec<f64>,
    pub reps: u64,
    /// Survival filter horizon of the conditioned runs.
    pub horizon: f64,
    pub floor: f64,
    pub safety: f64,
}

/// TV between the conditioned-on-survival process from `{y}` and the
/// stationary law, on the cone slice `{x : dist(y, x) <= θ t}` at time `t`
/// (the `MAX_SITES` nearest sites when larger).
pub fn shape_mixing_check<R: Replicate>(p: &ShapeParams, exec: &R) -> Result<MixingCurve, EstimateError> {
    check_grid(&p.t_grid)?;
    if !(p.theta >= 0.0) || p.reps == 0 || p.t_grid.last().is_some_and(|&t| t > p.horizon) {
        return invalid("need theta >= 0, reps >= 1 and a grid inside the horizon");
    }
    let g = build_graph(&p.stationary.graph)?;
    if p.y >= g.len() {
        return invalid(format!("vertex {} outside the graph", p.y));
    }
    let t_max = *p.t_grid.last().expect("non-empty");
    let radius_at = |t: f64| (p.theta * t + 1e-9).floor() as usize;
    let mut ball = g.ball(p.y, radius_at(t_max))?;
    let dist: Vec<usize> = ball.iter().map(|&v| g.distance(p.y, v).expect("connected")).collect();
    let mut order: Vec<usize> = (0..ball.len()).collect();
    order.sort_by_key(|&i| (dist[i], ball[i]));
    ball = order.iter().map(|&i| ball[i]).collect();
    let dists: Vec<usize> = order.iter().map(|&i| dist[i]).collect();
    ball.truncate(MAX_SITES);
    let record = ball;
    let slice_len: Vec<usize> = p.t_grid.iter().map(|&t| dists.iter().take(MAX_SITES).filter(|&&d| d <= radius_at(t)).count()).collect();

    let forward_spec = match p.stationary.graph.family {
        Family::Lattice { dim } => {
            let r = truncation_radius(2 * radius_at(t_max), p.horizon, p.stationary.lambda, 2 * dim as usize, p.safety);
            p.stationary.graph.with_truncation(r.max(p.stationary.graph.truncation.unwrap_or(0) as usize) as u32)
        }
        _ => p.stationary.graph.clone(),
    };
    let forward = build_graph(&forward_spec)?;
    let mut cfg = p.stationary.clone();
    cfg.delta = record.clone();
    let sampler = StationarySampler::new(cfg)?;
    let policy = RejectionPolicy { floor: p.floor };
    let lineage = derive_seed(p.stationary.seed, 0x5a5a);
    let runs = exec.run(p.reps, |rep| {
        condition_on_survival(&forward, p.stationary.lambda, p.y, p.horizon, &record, derive_seed(lineage, rep), policy)
            .map(|c| c.value.atoms_at(&p.t_grid))
    });
    let cond: Vec<Vec<u64>> = runs.into_iter().collect::<Result<_, _>>()?;
    let stat: Vec<u64> = exec.run(p.reps, |rep| sampler.atom_at_zero(rep));
    let mut points = Vec::new();
    let mut bias = Vec::new();
    for (i, &t) in p.t_grid.iter().enumerate() {
        let mask = (1u64 << slice_len[i]) - 1;
        let tv = tv_two_sample(
            &counts(cond.iter().map(|a| a[i] & mask)),
            &counts(stat.iter().map(|a| a & mask)),
            1 << slice_len[i],
        );
        points.push(CurvePoint { t, value: tv.value, std_error: tv.std_error });
        bias.push(plug_in_bias(1 << slice_len[i], p.reps));
    }
    Ok(MixingCurve {
        kind: MixingKind::TvLowerBound,
        event_family: format!("cone slices of inclination {} around vertex {}", p.theta, p.y),
        points,
        bias,
        replicates: p.reps,
        seed: p.stationary.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::graphical::Event;
    use contact_core::{GraphSpec, Serial};

    #[test]
    fn series_sampling() {
        let t = Trajectory {
            delta: vec![0, 1],
            initial: vec![true, false],
            events: vec![Event { time: 0.25, site: 1, infected: true }, Event { time: 0.5, site: 0, infected: false }],
            window: (0.0, 1.0),
            final_config: None,
        };
        assert_eq!(atom_series(&t, 0.25), vec![1, 3, 2, 2, 2]);
    }

    #[test]
    fn bit_iteration() {
        assert_eq!(bits(0b1010_0001).collect::<Vec<_>>(), vec![0, 5, 7]);
        assert_eq!(bits(0).count(), 0);
    }

    fn cfg(lambda: f64, delta: Vec<usize>, horizon: f64) -> StationaryConfig {
        StationaryConfig::new(GraphSpec::lattice(1, 20), delta, lambda, 15.0, horizon, 3)
    }

    #[test]
    fn alpha_at_lag_zero_is_the_largest_variance() {
        let p = AlphaParams { stationary: cfg(2.0, vec![0], 2000.0), t_grid: vec![0.0, 1.0], dt: 0.1, batches: 10 };
        let c = estimate_alpha_mixing(&p).unwrap();
        // one site: the largest |cov| at lag 0 is p(1 - p) <= 1/4
        let v = c.points[0].value;
        assert!(v > 0.2 && v <= 0.25, "{v}");
        assert!(c.points[1].value < v);
    }

    #[test]
    fn d_with_vacuous_past_is_near_zero() {
        let s = StationarySampler::new(cfg(2.0, vec![0], 2.0)).unwrap();
        let c = estimate_d(&s, &[PastEvent::Always], &[0.0, 2.0], 2000, RejectionPolicy::default(), &Serial).unwrap();
        for (pt, b) in c.points.iter().zip(&c.bias) {
            assert!(pt.value <= b + 2.0 * pt.std_error + 1e-12, "{pt:?} bias {b}");
        }
    }

    #[test]
    fn rho_without_infection_is_zero() {
        let s = StationarySampler::new(cfg(0.0, vec![0], 5.0)).unwrap();
        let r = estimate_rho(&s, 0, &[1.0, 2.0, 4.0], 200, &Serial).unwrap();
        assert_eq!(r.estimate.value, 0.0);
        assert!(r.curve.iter().all(|p| p.value == 1.0));
    }

    #[test]
    fn shape_at_time_zero_is_one_minus_density() {
        let p = ShapeParams {
            stationary: cfg(2.0, vec![0], 1.0),
            y: 0,
            theta: 0.2,
            t_grid: vec![0.0],
            reps: 2000,
            horizon: 10.0,
            floor: 1e-3,
            safety: 1.0,
        };
        let c = shape_mixing_check(&p, &Serial).unwrap();
        // conditioned run has y infected at 0; stationary density near 0.6
        assert!((c.points[0].value - 0.4).abs() < 0.05, "{:?}", c.points);
    }
}
