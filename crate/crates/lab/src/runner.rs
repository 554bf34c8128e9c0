//! Executes scenarios and suites and writes their output directories.
//!
//! A run directory holds `records.jsonl`, one CSV (and SVG) per curve, any
//! operation-specific files, and `manifest.json`, which is written last and
//! lists every other file with its SHA-256. Everything but the manifest
//! timestamps is a function of the scenario alone.

use std::path::{Path, PathBuf};

use contact_core::process::{
    rightmost_front, validate_truncation, PastEvent, RejectionPolicy, StationaryConfig, StationarySampler,
};
use contact_core::rng::derive_seed;
use contact_core::graphical::evolve;
use contact_core::{build_graph, Configuration, Family, GraphicalSample, GraphSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checks::{self, CheckReport, DfkgParams, Verdict};
use crate::estimators::{self as est, config_hash, CurvePoint, EstimateError, MixingCurve};
use crate::exec::Pool;
use crate::io::{self, IoError};
use crate::plot::{self, Series, Style};
use crate::scenario::{Operation, Scenario, StationaryOpts, Suite};
use crate::stats::{fit_line, mean_se};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok = 0,
    CheckFailed = 1,
    ConfigError = 2,
    Aborted = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Default output root when a scenario names no directory.
pub fn default_root() -> PathBuf {
    std::env::var_os("CPLAB_OUT").map_or_else(|| PathBuf::from("cplab-out"), PathBuf::from)
}

/// A plot and the curve files behind it.
#[derive(Debug, Clone)]
pub struct Panel {
    pub stem: String,
    pub style: Style,
    /// `(file name, series)`
    pub curves: Vec<(String, Series)>,
}

impl Panel {
    fn single(stem: &str, title: &str, x: &str, y: &str, log_y: bool, points: Vec<CurvePoint>) -> Self {
        Self {
            stem: stem.into(),
            style: Style { title: title.into(), x_label: x.into(), y_label: y.into(), log_y },
            curves: vec![(format!("{stem}.csv"), Series { label: stem.into(), points })],
        }
    }

    fn series(&self) -> Vec<Series> {
        self.curves.iter().map(|c| c.1.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedStream {
    pub stream: String,
    pub rule: String,
}

fn stream(name: &str, rule: &str) -> SeedStream {
    SeedStream { stream: name.into(), rule: rule.into() }
}

/// What an operation produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub panels: Vec<Panel>,
    pub files: Vec<(String, Vec<u8>)>,
    pub lineage: Vec<SeedStream>,
}

impl Outcome {
    fn estimate(result: impl Serialize, lineage: Vec<SeedStream>) -> Self {
        Self { status: Status::Ok, result: to_value(result), panels: Vec::new(), files: Vec::new(), lineage }
    }

    fn check(report: CheckReport) -> Self {
        let status = if report.verdict == Verdict::Pass { Status::Ok } else { Status::CheckFailed };
        let lineage = vec![stream("replicas", "derive_seed(seed, rep)")];
        Self { status, result: to_value(report), panels: Vec::new(), files: Vec::new(), lineage }
    }

    fn panel(mut self, p: Panel) -> Self {
        self.panels.push(p);
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn stationary(s: &Scenario, o: &StationaryOpts, horizon: f64, pool: &Pool) -> Result<StationaryConfig, EstimateError> {
    let cfg = StationaryConfig::new(s.graph.clone(), o.delta.clone(), s.lambda, o.burn_in, horizon, s.seed);
    if o.truncation_pilot > 0 {
        let report = validate_truncation(&cfg, o.truncation_pilot, pool)?;
        if report.flagged {
            return Err(EstimateError::Truncation(report));
        }
    }
    Ok(cfg)
}

fn last(grid: &[f64]) -> f64 {
    grid.last().copied().unwrap_or(0.0)
}

fn lattice_dim(spec: &GraphSpec) -> Result<u32, EstimateError> {
    match spec.family {
        Family::Lattice { dim } => Ok(dim),
        _ => Err(EstimateError::Invalid("this operation runs on a lattice".into())),
    }
}

fn mixing_panel(stem: &str, title: &str, c: &MixingCurve) -> Panel {
    Panel::single(stem, title, "t", "distance", false, c.points.clone())
}

/// Runs the operation of a validated scenario.
pub fn execute(s: &Scenario, pool: &Pool) -> Result<Outcome, EstimateError> {
    let op = s.op().map_err(|e| EstimateError::Invalid(e.to_string()))?;
    let (lambda, reps, seed) = (s.lambda, s.reps, s.seed);
    let replicas = || vec![stream("replicas", "derive_seed(seed, rep)")];
    Ok(match op {
        Operation::SurvivalProb { x, horizon } => {
            let g = build_graph(&s.graph)?;
            Outcome::estimate(est::estimate_survival_prob(&g, lambda, x, horizon, reps, seed, pool)?, replicas())
        }
        Operation::LambdaC { horizon, bracket, tolerance, threshold } => {
            let mut p = est::LambdaCParams::new(s.graph.clone(), horizon, reps, bracket, seed);
            p.tolerance = tolerance.unwrap_or(p.tolerance);
            p.threshold = threshold.unwrap_or(p.threshold);
            let mut lin = replicas();
            lin[0].rule.push_str(", shared by every bisection rate");
            Outcome::estimate(est::estimate_lambda_c(&p, pool)?, lin)
        }
        Operation::Beta { n_list, horizon_per_site, horizon_offset, floor } => {
            let mut p = est::BetaParams::new(lambda, n_list, reps, seed);
            p.dim = lattice_dim(&s.graph)?;
            p.horizon_per_site = horizon_per_site.unwrap_or(p.horizon_per_site);
            p.horizon_offset = horizon_offset.unwrap_or(p.horizon_offset);
            p.floor = floor;
            let e = est::estimate_beta(&p, pool)?;
            let per_n: Vec<(f64, f64, f64)> =
                e.diagnostics.get("per_n_mean").and_then(|v| serde_json::from_value(v.clone()).ok()).unwrap_or_default();
            let points = per_n.iter().map(|&(n, m, se)| CurvePoint { t: n, value: m, std_error: se }).collect();
            Outcome::estimate(&e, vec![stream("hitting n_list[i], replica rep", "derive_seed(derive_seed(seed, i), rep), attempt k: derive_seed(., k)")])
                .panel(Panel::single("hitting", "conditioned hitting time", "n", "mean hitting time", false, points))
        }
        Operation::TauTail { x, t_grid, horizon, fit_range } => {
            let g = build_graph(&s.graph)?;
            let tail = est::estimate_tau_tail(&g, lambda, x, &t_grid, horizon, fit_range, reps, seed, pool)?;
            let curve = tail.curve.clone();
            Outcome::estimate(tail, replicas()).panel(Panel::single("tail", "P(t < τ < horizon)", "t", "probability", true, curve))
        }
        Operation::AlphaMixing { stationary: o, run_length, t_grid, dt, batches } => {
            let cfg = stationary(s, &o, run_length, pool)?;
            let c = est::estimate_alpha_mixing(&est::AlphaParams { stationary: cfg, t_grid, dt, batches })?;
            Outcome::estimate(&c, vec![stream("long run", "replica 0 of the stationary sampler")])
                .panel(mixing_panel("mixing", "α-mixing covariance", &c))
        }
        Operation::PhiMixing { stationary: o, t_grid, past_window, pasts, floor } => {
            let cfg = stationary(s, &o, last(&t_grid), pool)?;
            let pasts = pasts.unwrap_or_else(|| {
                vec![
                    PastEvent::AllHealthy { sites: o.delta.clone(), from: -past_window, to: 0.0 },
                    PastEvent::AllInfected { sites: o.delta.clone(), from: -past_window, to: 0.0 },
                ]
            });
            let sampler = StationarySampler::new(cfg)?;
            let c = est::estimate_d(&sampler, &pasts, &t_grid, reps, RejectionPolicy { floor }, pool)?;
            Outcome::estimate(&c, vec![stream("replicas and conditioned attempts", "stationary replica seeds; attempt k: derive_seed(., k)")])
                .panel(mixing_panel("mixing", "φ-mixing lower bound", &c))
        }
        Operation::Rho { stationary: o, slot, t_grid } => {
            let sampler = StationarySampler::new(stationary(s, &o, last(&t_grid), pool)?)?;
            let r = est::estimate_rho(&sampler, slot, &t_grid, reps, pool)?;
            let curve = r.curve.clone();
            Outcome::estimate(r, replicas()).panel(Panel::single("healthy", "P(site healthy on [0, t))", "t", "probability", true, curve))
        }
        Operation::ShapeMixing { y, theta, t_grid, horizon, burn_in, floor, safety } => {
            let cfg = StationaryConfig::new(s.graph.clone(), vec![y], lambda, burn_in, last(&t_grid), seed);
            let p = est::ShapeParams { stationary: cfg, y, theta, t_grid, reps, horizon, floor, safety };
            let c = est::shape_mixing_check(&p, pool)?;
            Outcome::estimate(&c, vec![stream("conditioned runs", "derive_seed(derive_seed(seed, 0x5a5a), rep)")])
                .panel(mixing_panel("mixing", "cone mixing", &c))
        }
        Operation::Cutoff { n_list, epsilon, r, beta_hat, beta_reps, burn_in, safety } => {
            let dim = lattice_dim(&s.graph)?;
            let mut lineage = vec![stream("(n_list[i], branch j), replica rep", "derive_seed(derive_seed(seed, 2i + j), rep)")];
            let beta_hat = match beta_hat {
                Some(b) => b,
                None => {
                    let mut bp = est::BetaParams::new(lambda, n_list.clone(), beta_reps.unwrap_or(400), derive_seed(seed, 0xBE7A));
                    bp.dim = dim;
                    lineage.push(stream("β̂ pilot", "derive_seed(seed, 0xBE7A)"));
                    est::estimate_beta(&bp, pool)?.value
                }
            };
            let cfg = StationaryConfig::new(s.graph.clone(), vec![0], lambda, burn_in, 1.0, seed);
            let p = est::CutoffParams { lambda, n_list, epsilon, r, beta_hat, reps, stationary: cfg, safety: safety.unwrap_or(1.5), seed };
            let table = est::cutoff_curve(&p, pool)?;
            let branch = |b: est::Branch| -> Vec<CurvePoint> {
                table.branch(b).map(|r| CurvePoint { t: f64::from(r.n), value: r.tv, std_error: r.std_error }).collect()
            };
            let panel = Panel {
                stem: "cutoff".into(),
                style: Style { title: "TV to the stationary marginal".into(), x_label: "n".into(), y_label: "TV".into(), log_y: false },
                curves: vec![
                    ("cutoff_early.csv".into(), Series { label: "t = β̂n(1-ε)".into(), points: branch(est::Branch::Early) }),
                    ("cutoff_late.csv".into(), Series { label: "t = β̂n(1+ε)".into(), points: branch(est::Branch::Late) }),
                ],
            };
            let mut out = Outcome::estimate(json!({"beta_hat": beta_hat, "table": table}), lineage);
            out.panels.push(panel);
            out
        }
        Operation::Clt { stationary: o, observable, t, long_run, batches } => {
            let cfg = stationary(s, &o, t, pool)?;
            let r = est::estimate_clt(&est::CltParams { stationary: cfg, observable, t, reps, long_run, batches }, pool)?;
            let mut lin = replicas();
            lin.push(stream("long run", "derive_seed(seed, u64::MAX)"));
            Outcome::estimate(r, lin)
        }
        Operation::RateFunction { stationary: o, observable, grid, horizons, half_width, min_hits } => {
            let cfg = stationary(s, &o, last(&horizons), pool)?;
            let mut p = est::RateParams::new(cfg, observable, grid, horizons, reps);
            p.half_width = half_width;
            p.min_hits = min_hits.unwrap_or(p.min_hits);
            let r = est::estimate_rate_function(&p, pool)?;
            let psi = r.points.iter().map(|q| CurvePoint { t: q.x, value: q.psi, std_error: q.std_error }).collect();
            let env = r.grid.iter().zip(&r.concave_envelope).map(|(&x, &v)| CurvePoint { t: x, value: v, std_error: 0.0 }).collect();
            let panel = Panel {
                stem: "rate_function".into(),
                style: Style { title: "rate function".into(), x_label: "x".into(), y_label: "ψ".into(), log_y: false },
                curves: vec![
                    ("psi.csv".into(), Series { label: "ψ̂".into(), points: psi }),
                    ("envelope.csv".into(), Series { label: "concave envelope".into(), points: env }),
                ],
            };
            let mut out = Outcome::estimate(r, vec![stream("horizon i, replica rep", "stationary replica seeds under derive_seed(seed, i)")]);
            out.panels.push(panel);
            out
        }
        Operation::CompleteConvergence { initial, window, t_grid, horizon, burn_in, stationary_reps } => {
            let g = build_graph(&s.graph)?;
            let cfg = StationaryConfig::new(s.graph.clone(), window, lambda, burn_in, 1.0, derive_seed(seed, 0x57A7));
            let sampler = StationarySampler::new(cfg)?;
            let r = est::complete_convergence_check(
                &g,
                lambda,
                &initial,
                &t_grid,
                horizon,
                reps,
                &sampler,
                stationary_reps.unwrap_or(reps),
                seed,
                pool,
            )?;
            let points = r.points.iter().map(|p| CurvePoint { t: p.t, value: p.tv.value, std_error: p.tv.std_error }).collect();
            let mut lin = replicas();
            lin.push(stream("stationary reference", "sampler seeded derive_seed(seed, 0x57A7)"));
            Outcome::estimate(r, lin).panel(Panel::single("tv", "TV to the mixture limit", "t", "TV", true, points))
        }
        Operation::Front { radius, horizon, step } => {
            let half_line = match s.graph.family {
                Family::HalfLine => true,
                Family::Lattice { dim: 1 } => false,
                _ => return Err(EstimateError::Invalid("the front runs on Z or the half-line".into())),
            };
            let runs = pool_run(pool, reps, |rep| rightmost_front(half_line, lambda, radius, horizon, step, derive_seed(seed, rep)));
            let runs: Vec<_> = runs.into_iter().collect::<Result<_, _>>()?;
            let mut points = Vec::new();
            let mut alive = Vec::new();
            for k in 0..runs[0].len() {
                let pos: Vec<f64> = runs.iter().filter_map(|r| r[k].position).map(|x| x as f64).collect();
                alive.push(pos.len());
                if !pos.is_empty() {
                    let m = mean_se(&pos);
                    points.push(CurvePoint { t: runs[0][k].time, value: m.mean, std_error: m.std_error });
                }
            }
            let half = points.len() / 2;
            let (xs, ys): (Vec<f64>, Vec<f64>) = points[half..].iter().map(|p| (p.t, p.value)).unzip();
            let speed = fit_line(&xs, &ys, None).map(|f| f.slope);
            let result = json!({"points": points, "alive": alive, "speed": speed, "replicates": reps, "seed": seed});
            Outcome::estimate(result, replicas()).panel(Panel::single("front", "rightmost infected site", "t", "mean position", false, points))
        }
        Operation::Trajectory { initial, record, horizon } => {
            let g = build_graph(&s.graph)?;
            let record = record.unwrap_or_else(|| (0..g.len()).collect());
            if let Some(&v) = initial.iter().find(|&&v| v >= g.len()) {
                return Err(EstimateError::Invalid(format!("initial vertex {v} outside the graph")));
            }
            let hash = config_hash(s);
            let mut files = Vec::new();
            let mut summary = Vec::new();
            for rep in 0..reps {
                let rseed = derive_seed(seed, rep);
                let sample = GraphicalSample::new(&g, (0.0, horizon), lambda, rseed);
                let traj = evolve(&sample, &Configuration::from_set(g.len(), &initial, 0.0), &record)?;
                let censored = traj.final_config.as_ref().is_some_and(|c| c.infected().next().is_some());
                let side = io::TrajectorySidecar {
                    seed: rseed,
                    config_hash: hash.clone(),
                    window: traj.window,
                    vertices: record.clone(),
                    events: traj.events.len(),
                    censored,
                };
                files.push((format!("trajectory_{rep}.csv"), io::trajectory_csv(&traj).into_bytes()));
                files.push((format!("trajectory_{rep}.json"), pretty(&side)));
                summary.push(side);
            }
            let mut out = Outcome::estimate(summary, replicas());
            out.files = files;
            out
        }
        Operation::CheckMonotone { horizon, fault } => {
            let g = build_graph(&s.graph)?;
            Outcome::check(checks::check_monotone_coupling(&g, lambda, horizon, reps, seed, fault, pool).with("fault", fault))
        }
        Operation::CheckAdditivity { horizon, fault } => {
            let g = build_graph(&s.graph)?;
            Outcome::check(checks::check_additivity(&g, lambda, horizon, reps, seed, fault, pool).with("fault", fault))
        }
        Operation::CheckDualityIdentity { t, fault } => {
            let g = build_graph(&s.graph)?;
            Outcome::check(checks::check_duality_identity(&g, lambda, t, reps, seed, fault, pool).with("fault", fault))
        }
        Operation::CheckSelfDuality { delta, target, t } => {
            let g = build_graph(&s.graph)?;
            Outcome::check(checks::check_self_duality(&g, lambda, &delta, &target, t, reps, seed, pool)?)
        }
        Operation::CheckPositiveAssociation { stationary: o, pairs } => {
            let pairs = match pairs {
                Some(p) => p,
                None => checks::default_pairs()?,
            };
            let hi = pairs.iter().flat_map(|(a, b)| a.parts.iter().chain(&b.parts)).map(|p| p.time).fold(0.0, f64::max);
            let cfg = stationary(s, &o, if hi > 0.0 { hi } else { 1.0 }, pool)?;
            Outcome::check(checks::check_positive_association(&cfg, &pairs, reps, pool)?)
        }
        Operation::CheckDfkg { stationary: o, zero_window, pasts, futures, floor } => {
            let futures = match futures {
                Some(f) => f,
                None => checks::default_futures()?,
            };
            let pasts = pasts.unwrap_or_else(|| {
                vec![PastEvent::Always, PastEvent::AllInfected { sites: o.delta.clone(), from: -1.0, to: 0.0 }]
            });
            let hi = futures.iter().flat_map(|c| &c.parts).map(|p| p.time).fold(0.0, f64::max);
            let cfg = stationary(s, &o, if hi > 0.0 { hi } else { 1.0 }, pool)?;
            let p = DfkgParams { stationary: cfg, zero_window: zero_window.unwrap_or((-1.0, 0.0)), pasts, futures, reps, floor };
            Outcome::check(checks::check_dfkg(&p, pool)?)
        }
        Operation::CheckGenerator { t, initial } => {
            let g = build_graph(&s.graph)?;
            let initial = initial.unwrap_or_else(|| (0..g.len()).collect());
            Outcome::check(checks::check_generator_equivalence(&g, lambda, t, &initial, reps, seed, pool)?)
        }
    })
}

fn pool_run<T: Send>(pool: &Pool, reps: u64, job: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    contact_core::Replicate::run(pool, reps, job)
}

fn pretty(v: &impl Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub operation: String,
    pub scenario_hash: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub threads: usize,
    pub seed: u64,
    pub seed_lineage: Vec<SeedStream>,
    pub status: Status,
    pub exit_code: i32,
    pub files: Vec<FileDigest>,
}

/// Result of one scenario run, as listed in a suite summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub operation: String,
    pub status: Status,
    pub exit_code: i32,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub panels: Vec<(Vec<Series>, Style)>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Sha-256 of the scenario's canonical JSON.
pub fn scenario_hash(s: &Scenario) -> String {
    io::sha256_hex(&serde_json::to_vec(s).expect("serializable"))
}

/// Runs a validated scenario into `dir` (or its own output, or the default
/// root). Errors are IO failures only; estimator failures become records.
pub fn run_scenario(s: &Scenario, dir: Option<&Path>) -> Result<RunSummary, IoError> {
    let dir = match (dir, &s.output) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => default_root().join(&s.name),
    };
    let started = now();
    let pool = Pool::new(s.threads);
    let hash = scenario_hash(s);
    let head = json!({"scenario": s.name, "operation": s.operation, "scenario_hash": hash, "seed": s.seed, "reps": s.reps});
    let (outcome, message) = match execute(s, &pool) {
        Ok(o) => (o, None),
        Err(e) => {
            let status = if e.is_abort() { Status::Aborted } else { Status::ConfigError };
            let diag = match &e {
                EstimateError::Truncation(r) => to_value(r),
                other => Value::String(format!("{other:?}")),
            };
            let o = Outcome {
                status,
                result: json!({"error": e.to_string(), "diagnostics": diag}),
                panels: Vec::new(),
                files: Vec::new(),
                lineage: Vec::new(),
            };
            (o, Some(e.to_string()))
        }
    };
    let mut record = head;
    record["status"] = to_value(outcome.status);
    record["result"] = outcome.result.clone();

    let mut written: Vec<(String, PathBuf)> = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<(), IoError> {
        let p = dir.join(&name);
        io::write_atomic(&p, bytes)?;
        written.push((name, p));
        Ok(())
    };
    put("records.jsonl".into(), io::jsonl(&[record]).as_bytes())?;
    for panel in &outcome.panels {
        for (file, series) in &panel.curves {
            put(file.clone(), io::curve_csv(&series.points).as_bytes())?;
        }
        put(format!("{}.svg", panel.stem), plot::render(&panel.series(), &panel.style).as_bytes())?;
    }
    for (name, bytes) in &outcome.files {
        put(name.clone(), bytes)?;
    }
    let mut files = Vec::with_capacity(written.len());
    for (name, p) in &written {
        let bytes = std::fs::metadata(p).map_err(|e| IoError::Io { path: p.display().to_string(), source: e })?.len();
        files.push(FileDigest { path: name.clone(), sha256: io::sha256_file(p)?, bytes });
    }
    let mut lineage = vec![stream("root", &format!("scenario seed {}", s.seed))];
    lineage.extend(outcome.lineage.iter().cloned());
    let manifest = Manifest {
        scenario: s.name.clone(),
        operation: s.operation.clone(),
        scenario_hash: scenario_hash(s),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at: started,
        finished_at: now(),
        threads: pool.threads(),
        seed: s.seed,
        seed_lineage: lineage,
        status: outcome.status,
        exit_code: outcome.status.code(),
        files,
    };
    io::write_atomic(&dir.join("manifest.json"), &pretty(&manifest))?;
    Ok(RunSummary {
        name: s.name.clone(),
        operation: s.operation.clone(),
        status: outcome.status,
        exit_code: outcome.status.code(),
        output: dir,
        message,
        panels: outcome.panels.iter().map(|p| (p.series(), p.style.clone())).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub status: Status,
    pub exit_code: i32,
    pub scenarios: Vec<RunSummary>,
}

/// Runs every scenario of a suite in order, each into `<root>/<name>` unless
/// it names its own output, then writes `summary.json` and
/// `dashboard.svg`. The suite status is the worst scenario status.
pub fn run_suite(suite: &Suite, scenarios: &[Scenario], root: Option<&Path>) -> Result<SuiteSummary, IoError> {
    let root = match (root, &suite.output) {
        (Some(r), _) => r.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => default_root().join(&suite.name),
    };
    let mut runs = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        let dir = if s.output.is_some() { None } else { Some(root.join(&s.name)) };
        runs.push(run_scenario(s, dir.as_deref())?);
    }
    let status = runs.iter().map(|r| r.status).max().unwrap_or(Status::Ok);
    let panels: Vec<(Vec<Series>, Style)> = runs
        .iter()
        .flat_map(|r| {
            r.panels.iter().map(move |(series, style)| {
                let mut style = style.clone();
                style.title = format!("{}: {}", r.name, style.title);
                (series.clone(), style)
            })
        })
        .collect();
    let summary = SuiteSummary { suite: suite.name.clone(), status, exit_code: status.code(), scenarios: runs };
    io::write_atomic(&root.join("dashboard.svg"), plot::dashboard(&suite.name, &panels).as_bytes())?;
    io::write_atomic(&root.join("summary.json"), &pretty(&summary))?;
    Ok(summary)
}
