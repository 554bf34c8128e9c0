use contact_core::process::{InteriorHealthySampler, StationaryConfig, StationarySampler};
use contact_core::rng::derive_seed;
use contact_core::{Family, Replicate};
use serde::{Deserialize, Serialize};

use super::{box_sites, config_hash, invalid, EstimateError};
use crate::stats::{counts, tv_two_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `t = β̂ n (1 - ε)`
    Early,
    /// `t = β̂ n (1 + ε)`
    Late,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub lambda: f64,
    pub n_list: Vec<u32>,
    pub epsilon: f64,
    pub r: u32,
    pub beta_hat: f64,
    pub reps: u64,
    /// Stationary law on the lattice; its observed set becomes `Δ_r`.
    pub stationary: StationaryConfig,
    pub safety: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub n: u32,
    pub branch: Branch,
    pub t: f64,
    pub tv: f64,
    pub std_error: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffTable {
    pub rows: Vec<CutoffRow>,
    pub replicates: u64,
    pub seed: u64,
    pub meta: String,
}

impl CutoffTable {
    pub fn row(&self, n: u32, branch: Branch) -> Option<&CutoffRow> {
        self.rows.iter().find(|r| r.n == n && r.branch == branch)
    }

    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &CutoffRow> {
        self.rows.iter().filter(move |r| r.branch == branch)
    }
}

/// TV on `Δ_r` between the process started healthy inside `Δ_n` (infected
/// outside) and the stationary marginal, at `β̂ n (1 ∓ ε)` for each `n`.
pub fn cutoff_curve<R: Replicate>(p: &CutoffParams, exec: &R) -> Result<CutoffTable, EstimateError> {
    let dim = match p.stationary.graph.family {
        Family::Lattice { dim } => dim,
        _ => return invalid("the cutoff experiment runs on a lattice"),
    };
    if p.n_list.is_empty() || p.n_list.iter().any(|&n| n < p.r) {
        return invalid("need a non-empty n list with r <= min n");
    }
    if !(p.beta_hat > 0.0) || !(0.0..=1.0).contains(&p.epsilon) || p.reps == 0 {
        return invalid("need beta_hat > 0, epsilon in [0, 1] and reps >= 1");
    }
    let sites = box_sites(p.r as usize, dim as usize);
    if sites.len() > crate::events::MAX_SITES {
        return invalid(format!("Δ_r has {} sites, above the atom cap", sites.len()));
    }
    let atoms = 1usize << sites.len();
    let mut cfg = p.stationary.clone();
    cfg.delta = sites;
    let stationary = StationarySampler::new(cfg)?;
    let reference = counts(exec.run(p.reps, |rep| stationary.atom_at_zero(rep)));

    let mut rows = Vec::new();
    for (i, &n) in p.n_list.iter().enumerate() {
        for (j, (branch, factor)) in [(Branch::Early, 1.0 - p.epsilon), (Branch::Late, 1.0 + p.epsilon)].into_iter().enumerate() {
            let t = p.beta_hat * n as f64 * factor;
            let sampler = InteriorHealthySampler::new(dim, n, p.r, p.lambda, t, p.safety, None)?;
            let lineage = derive_seed(p.seed, (2 * i + j) as u64);
            let draws = counts(exec.run(p.reps, |rep| sampler.sample(derive_seed(lineage, rep))));
            let tv = tv_two_sample(&draws, &reference, atoms);
            rows.push(CutoffRow { n, branch, t, tv: tv.value, std_error: tv.std_error, bias: tv.bias });
        }
    }
    Ok(CutoffTable { rows, replicates: p.reps, seed: p.seed, meta: config_hash(p) })
}
