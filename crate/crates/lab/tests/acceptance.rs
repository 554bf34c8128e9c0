//! Acceptance run: criteria 1-14, one PASS/FAIL line each.
//!
//! Long (tens of minutes on one core), so it is not part of the default
//! test run:
//!
//!     cargo test --release -p contact-lab --test acceptance
//!
//! `ACCEPT_ONLY=5,9` restricts the run to the listed criteria. The process
//! exits non-zero when any criterion fails.

use std::path::Path;
use std::time::Instant;

use contact_core::process::{PastEvent, RejectionPolicy, StationaryConfig, StationarySampler};
use contact_core::{build_graph, Family, Graph, GraphSpec};
use contact_lab::checks::{self, DfkgParams, Fault};
use contact_lab::estimators::{
    self as est, box_sites, AlphaParams, BetaParams, Branch, CltParams, CutoffParams, LambdaCParams, MixingCurve,
    Observable, RateParams, ShapeParams,
};
use contact_lab::exec::Pool;
use contact_lab::runner;
use contact_lab::scenario::Scenario;
use contact_lab::stats::fit_line;
use serde_json::json;

const LAMBDA: f64 = 2.0;
/// Frozen naive-simulation value, see `lambda_c_oracle.rs`.
const ORACLE_LAMBDA_C: f64 = 1.5068;

type Outcome = Result<(bool, String), String>;

fn z(radius: u32) -> GraphSpec {
    GraphSpec::lattice(1, radius)
}

fn graph(radius: u32) -> Graph {
    build_graph(&z(radius)).expect("lattice")
}

fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn point(c: &MixingCurve, t: f64) -> Result<(f64, f64, f64), String> {
    let i = c.points.iter().position(|p| (p.t - t).abs() < 1e-9).ok_or(format!("no point at t={t}"))?;
    Ok((c.points[i].value, c.points[i].std_error, c.bias[i]))
}

fn c1(pool: &Pool) -> Outcome {
    let g = build_graph(&GraphSpec::half_line(19)).map_err(err)?;
    let mono = checks::check_monotone_coupling(&g, LAMBDA, 5.0, 10_000, 101, Fault::None, pool);
    let add = checks::check_additivity(&g, LAMBDA, 5.0, 10_000, 102, Fault::None, pool);
    Ok((
        mono.passed() && add.passed(),
        format!("{} vertices, monotonicity violations {}, additivity violations {}", g.len(), mono.statistic, add.statistic),
    ))
}

fn c2(pool: &Pool) -> Outcome {
    let g = build_graph(&GraphSpec::explicit(vec![vec![1], vec![0]])).map_err(err)?;
    let r = checks::check_generator_equivalence(&g, 1.0, 0.5, &[0], 100_000, 201, pool).map_err(err)?;
    let tv = |k: &str| {
        let t = &r.details[k];
        format!("{:.4} (bias {:.4}, s.e. {:.4})", t["value"].as_f64().unwrap_or(f64::NAN), t["bias"].as_f64().unwrap_or(f64::NAN), t["std_error"].as_f64().unwrap_or(f64::NAN))
    };
    Ok((
        r.passed(),
        format!("chi2 {:.2} (critical {:.2}); TV to exact: graphical {}, direct {}", r.statistic, r.threshold, tv("tv_exact_graphical"), tv("tv_exact_direct")),
    ))
}

fn c3(pool: &Pool) -> Outcome {
    let g = graph(40);
    let three = g.vertex_at(&[3]).ok_or("no vertex 3")?;
    let r = checks::check_self_duality(&g, LAMBDA, &[0], &[three], 2.0, 100_000, 301, pool).map_err(err)?;
    Ok((r.passed(), format!("|z| {:.3} vs {:.3}, p {}", r.statistic, r.threshold, r.details["p_value"])))
}

fn c4(pool: &Pool) -> Outcome {
    let reps = 100_000;
    let delta = vec![0, 1];
    let assoc_cfg = StationaryConfig::new(z(25), delta.clone(), LAMBDA, 20.0, 1.0, 401);
    let assoc = checks::check_positive_association(&assoc_cfg, &checks::default_pairs().map_err(err)?, reps, pool).map_err(err)?;
    let p = DfkgParams {
        stationary: StationaryConfig::new(z(25), delta.clone(), LAMBDA, 20.0, 1.0, 402),
        zero_window: (-1.0, 0.0),
        pasts: vec![PastEvent::Always, PastEvent::AllInfected { sites: delta, from: -1.0, to: 0.0 }],
        futures: checks::default_futures().map_err(err)?,
        reps,
        floor: 1e-3,
    };
    let dfkg = checks::check_dfkg(&p, pool).map_err(err)?;
    Ok((
        assoc.passed() && dfkg.passed(),
        format!("worst shortfall: association {:.2} s.e., dFKG {:.2} s.e. (limit 3)", assoc.statistic, dfkg.statistic),
    ))
}

fn c5(pool: &Pool) -> Outcome {
    let spec = GraphSpec { family: Family::Lattice { dim: 1 }, truncation: None };
    let e = est::estimate_lambda_c(&LambdaCParams::new(spec, 200.0, 2000, (1.0, 2.5), 7), pool).map_err(err)?;
    Ok((
        (1.5..=1.8).contains(&e.value),
        format!("λ̂_c {:.4} ± {:.4}; naive-simulation oracle {ORACLE_LAMBDA_C}", e.value, e.std_error),
    ))
}

fn c6(pool: &Pool) -> Outcome {
    let g = graph(100);
    let grid: Vec<f64> = (2..=20).map(f64::from).collect();
    let r = est::estimate_tau_tail(&g, LAMBDA, 0, &grid, 60.0, (2.0, 20.0), 20_000, 601, pool).map_err(err)?;
    let fit = r.fit.ok_or("no fit")?;
    Ok((fit.slope < 0.0 && fit.r2 > 0.9, format!("slope {:.4}, R² {:.4} over {:?}", fit.slope, fit.r2, r.fit_range)))
}

fn c7(_: &Pool) -> Outcome {
    let grid: Vec<f64> = (0..=10).map(f64::from).collect();
    let cfg = StationaryConfig::new(z(40), vec![0], LAMBDA, 30.0, 200_000.0, 701);
    let c = est::estimate_alpha_mixing(&AlphaParams { stationary: cfg, t_grid: grid, dt: 0.05, batches: 50 }).map_err(err)?;
    let monotone = c.points.windows(2).all(|w| w[1].value <= w[0].value + 2.0 * pooled(w[0].std_error, w[1].std_error));
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        c.points.iter().filter(|p| p.t >= 1.0 && p.t <= 10.0 && p.value > 0.0).map(|p| (p.t, p.value.ln())).unzip();
    let fit = fit_line(&xs, &ys, None).ok_or("no fit")?;
    Ok((
        monotone && fit.r2 > 0.9 && xs.len() == 10,
        format!(
            "non-increasing within 2 s.e.: {monotone}; log-linear R² {:.4} on {} points; α(0) {:.4}, α(10) {:.4}",
            fit.r2,
            xs.len(),
            c.points[0].value,
            c.points[10].value
        ),
    ))
}

fn c8(pool: &Pool) -> Outcome {
    let s = StationarySampler::new(StationaryConfig::new(z(40), vec![0], LAMBDA, 30.0, 10.0, 801)).map_err(err)?;
    let past = PastEvent::AllHealthy { sites: vec![0], from: -1.0, to: 0.0 };
    let c = est::estimate_d(&s, &[past], &[0.0, 1.0, 2.0, 5.0, 10.0], 10_000, RejectionPolicy::default(), pool).map_err(err)?;
    let (v0, se0, _) = point(&c, 0.0)?;
    let (v10, se10, b10) = point(&c, 10.0)?;
    Ok((
        v0 - v10 >= 3.0 * pooled(se0, se10) && v10 < 0.05 + b10,
        format!("d(0) {v0:.4} ± {se0:.4}, d(10) {v10:.4} ± {se10:.4}, bias {b10:.4}"),
    ))
}

fn c9(pool: &Pool) -> Outcome {
    let beta = est::estimate_beta(&BetaParams::new(LAMBDA, vec![10, 20, 40], 400, 901), pool).map_err(err)?;
    let p = CutoffParams {
        lambda: LAMBDA,
        n_list: vec![10, 20, 40],
        epsilon: 0.5,
        r: 1,
        beta_hat: beta.value,
        reps: 2000,
        stationary: StationaryConfig::new(z(40), vec![0], LAMBDA, 30.0, 1.0, 902),
        safety: 1.5,
        seed: 903,
    };
    let table = est::cutoff_curve(&p, pool).map_err(err)?;
    let early = table.row(40, Branch::Early).ok_or("missing row")?;
    let late = table.row(40, Branch::Late).ok_or("missing row")?;
    let rows: Vec<String> = table.rows.iter().map(|r| format!("n={} {:?} t={:.1} TV {:.3}±{:.3}", r.n, r.branch, r.t, r.tv, r.std_error)).collect();
    Ok((
        early.tv > 0.8 && late.tv < 0.2,
        format!("β̂ {:.3}; at n=40 early {:.3}, late {:.3} [{}]", beta.value, early.tv, late.tv, rows.join("; ")),
    ))
}

fn c10(pool: &Pool) -> Outcome {
    let p = CltParams {
        stationary: StationaryConfig::new(z(100), vec![0], LAMBDA, 30.0, 200.0, 1001),
        observable: Observable::Infected(0),
        t: 200.0,
        reps: 400,
        long_run: 400_000.0,
        batches: 100,
    };
    let r = est::estimate_clt(&p, pool).map_err(err)?;
    let ks = r.ks.ok_or("constant observable")?;
    Ok((
        !ks.rejected(checks::SIGNIFICANCE),
        format!("m̂ {:.4}, σ̂² {:.4}, KS {:.4} (p {:.3})", r.mean_hat, r.sigma2_hat, ks.statistic, ks.p_value),
    ))
}

fn c11(pool: &Pool) -> Outcome {
    let grid: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.05).collect();
    let cfg = StationaryConfig::new(z(40), vec![0, 1], LAMBDA, 30.0, 200.0, 1101);
    let p = RateParams::new(cfg, Observable::AnyInfected, grid, vec![25.0, 50.0, 100.0, 200.0], 4000);
    let r = est::estimate_rate_function(&p, pool).map_err(err)?;
    let m = &r.at_mean;
    let at_mean_ok = m.psi.abs() <= 2.0 * m.std_error || m.psi == 0.0;
    let far: Vec<_> = r.points.iter().filter(|q| !q.bound && (q.x - r.empirical_mean).abs() > 0.15).collect();
    let bad: Vec<f64> = far.iter().filter(|q| !(q.psi < 0.0 && -q.psi >= 3.0 * q.std_error)).map(|q| q.x).collect();
    Ok((
        at_mean_ok && bad.is_empty() && !far.is_empty(),
        format!(
            "mean {:.3}: ψ̂ {:.4} ± {:.4}; {} points beyond ±0.15 with counts, {} not ≥ 3 s.e. below 0 {:?}",
            r.empirical_mean,
            m.psi,
            m.std_error,
            far.len(),
            bad.len(),
            bad
        ),
    ))
}

fn c12(pool: &Pool) -> Outcome {
    let g = graph(100);
    let s = StationarySampler::new(StationaryConfig::new(z(40), box_sites(1, 1), LAMBDA, 30.0, 1.0, 1201)).map_err(err)?;
    let r = est::complete_convergence_check(&g, LAMBDA, &[0], &[2.0, 20.0], 60.0, 20_000, &s, 20_000, 1202, pool).map_err(err)?;
    let (a, b) = (r.points[0].tv, r.points[1].tv);
    Ok((
        b.value < a.value - 3.0 * pooled(a.std_error, b.std_error) && b.value < 0.05 + b.bias,
        format!("TV(2) {:.4} ± {:.4}, TV(20) {:.4} ± {:.4}, bias {:.4}", a.value, a.std_error, b.value, b.std_error, b.bias),
    ))
}

fn c13(pool: &Pool) -> Outcome {
    let p = ShapeParams {
        stationary: StationaryConfig::new(z(40), vec![0], LAMBDA, 30.0, 10.0, 1301),
        y: 0,
        theta: 0.2,
        t_grid: vec![1.0, 2.0, 5.0, 10.0],
        reps: 10_000,
        horizon: 60.0,
        floor: 1e-3,
        safety: 1.0,
    };
    let c = est::shape_mixing_check(&p, pool).map_err(err)?;
    let (v1, se1, _) = point(&c, 1.0)?;
    let (v10, se10, _) = point(&c, 10.0)?;
    Ok((v10 < v1 - 3.0 * pooled(se1, se10), format!("curve(1) {v1:.4} ± {se1:.4}, curve(10) {v10:.4} ± {se10:.4}")))
}

fn c14(_: &Pool) -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let base = json!({
        "schema": 1,
        "graph": {"family": {"lattice": {"dim": 1}}, "truncation": 30},
        "lambda": LAMBDA,
        "reps": 2000,
        "seed": 1401
    });
    let cases = [
        ("tail", "tau_tail", json!({"t_grid": [1.0, 2.0, 5.0, 10.0], "horizon": 30.0, "fit_range": [1.0, 10.0]})),
        ("phi", "phi_mixing", json!({"burn_in": 20.0, "t_grid": [0.0, 1.0, 5.0]})),
        ("cutoff", "cutoff", json!({"n_list": [4, 8], "epsilon": 0.5, "r": 1, "beta_hat": 1.4, "burn_in": 20.0})),
        ("assoc", "check_positive_association", json!({"delta": [0, 1], "burn_in": 20.0})),
    ];
    let mut compared = 0;
    for (name, op, params) in cases {
        let mut v = base.clone();
        v["name"] = json!(name);
        v["operation"] = json!(op);
        v["params"] = params;
        let s = Scenario::parse(&v.to_string()).map_err(err)?;
        let (a, b) = (dir.path().join(name).join("a"), dir.path().join(name).join("b"));
        let ra = runner::run_scenario(&s, Some(&a)).map_err(err)?;
        runner::run_scenario(&s, Some(&b)).map_err(err)?;
        if ra.exit_code != 0 {
            return Ok((false, format!("{name} exited {}", ra.exit_code)));
        }
        for f in files(&a) {
            if f == "manifest.json" {
                continue;
            }
            if std::fs::read(a.join(&f)).map_err(err)? != std::fs::read(b.join(&f)).map_err(err)? {
                return Ok((false, format!("{name}/{f} differs between reruns")));
            }
            compared += 1;
        }
    }
    Ok((true, format!("{compared} payload files byte-identical across reruns")))
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).into_iter().flatten().flatten().map(|e| e.file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

fn main() {
    let criteria: [(u32, &str, fn(&Pool) -> Outcome); 14] = [
        (1, "deterministic coupling", c1),
        (2, "generator equivalence", c2),
        (3, "self-duality", c3),
        (4, "correlation inequalities", c4),
        (5, "critical-point bracket", c5),
        (6, "survival-tail decay", c6),
        (7, "alpha-mixing decay", c7),
        (8, "phi-mixing lower bound", c8),
        (9, "cutoff", c9),
        (10, "occupation-time CLT", c10),
        (11, "rate-function shape", c11),
        (12, "complete convergence", c12),
        (13, "cone mixing", c13),
        (14, "reproducibility", c14),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPT_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let pool = Pool::default();
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run(&pool) {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {n:>2} {} [{name}] {detail} ({secs:.0} s)", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
