//! Statistics used by the estimators and checks.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Occurrence counts of configuration atoms.
pub type Counts = BTreeMap<u64, u64>;

pub fn counts(atoms: impl IntoIterator<Item = u64>) -> Counts {
    let mut c = Counts::new();
    for a in atoms {
        *c.entry(a).or_default() += 1;
    }
    c
}

fn total(c: &Counts) -> u64 {
    c.values().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample mean with the standard error of the mean.
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, std_error: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, std_error, n }
}

/// Binomial proportion `k/n` with its standard error.
pub fn proportion(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// `sqrt(a^2 + b^2)`, the standard error of a difference of independent
/// estimates.
pub fn pooled(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

impl TestResult {
    pub fn rejected(&self, significance: f64) -> bool {
        self.p_value < significance
    }
}

/// Two-sided test of equal proportions with the pooled variance.
pub fn two_proportion_test(k1: u64, n1: u64, k2: u64, n2: u64) -> TestResult {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let p = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (p * (1.0 - p) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        let same = p1 == p2;
        return TestResult { statistic: if same { 0.0 } else { f64::INFINITY }, p_value: if same { 1.0 } else { 0.0 }, df: 1.0 };
    }
    let z = (p1 - p2) / se;
    let normal = Normal::standard();
    TestResult { statistic: z, p_value: 2.0 * normal.sf(z.abs()), df: 1.0 }
}

fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("df > 0").sf(x)
}

/// Chi-square test that two samples of atoms come from one law, over the
/// atoms seen in either sample.
pub fn chi_square_homogeneity(a: &Counts, b: &Counts) -> TestResult {
    let (na, nb) = (total(a) as f64, total(b) as f64);
    let keys: std::collections::BTreeSet<u64> = a.keys().chain(b.keys()).copied().collect();
    let mut stat = 0.0;
    for k in &keys {
        let (x, y) = (*a.get(k).unwrap_or(&0) as f64, *b.get(k).unwrap_or(&0) as f64);
        let row = x + y;
        let (ex, ey) = (row * na / (na + nb), row * nb / (na + nb));
        stat += (x - ex).powi(2) / ex + (y - ey).powi(2) / ey;
    }
    let df = keys.len().saturating_sub(1);
    TestResult { statistic: stat, p_value: chi_square_sf(stat, df), df: df as f64 }
}

/// Chi-square goodness of fit of `c` to the law `probs`. Atoms of zero
/// probability that were observed make the statistic infinite.
pub fn chi_square_gof(c: &Counts, probs: &BTreeMap<u64, f64>) -> TestResult {
    let n = total(c) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (k, &p) in probs {
        let x = *c.get(k).unwrap_or(&0) as f64;
        if p > 0.0 {
            stat += (x - n * p).powi(2) / (n * p);
            cells += 1;
        } else if x > 0.0 {
            stat = f64::INFINITY;
        }
    }
    if c.keys().any(|k| !probs.contains_key(k)) {
        stat = f64::INFINITY;
    }
    let df = cells.saturating_sub(1);
    TestResult { statistic: stat, p_value: chi_square_sf(stat, df), df: df as f64 }
}

/// Plug-in total variation distance with a delta-method standard error and
/// the `0.5 sqrt(k/m)` small-sample bias scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tv {
    pub value: f64,
    pub std_error: f64,
    pub bias: f64,
}

pub fn plug_in_bias(atoms: usize, per_arm: u64) -> f64 {
    if per_arm == 0 {
        return 1.0;
    }
    0.5 * (atoms as f64 / per_arm as f64).sqrt()
}

/// Variance of `mean(s(X))` for `X` drawn from the empirical law.
fn sign_variance(law: &BTreeMap<u64, f64>, sign: &BTreeMap<u64, f64>, n: f64) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, p) in law {
        let s = sign.get(k).copied().unwrap_or(0.0);
        m1 += p * s;
        m2 += p * s * s;
    }
    (m2 - m1 * m1).max(0.0) / n
}

fn freqs(c: &Counts) -> BTreeMap<u64, f64> {
    let n = total(c) as f64;
    c.iter().map(|(&k, &v)| (k, v as f64 / n)).collect()
}

fn tv_parts(p: &BTreeMap<u64, f64>, q: &BTreeMap<u64, f64>) -> (f64, BTreeMap<u64, f64>) {
    let keys: std::collections::BTreeSet<u64> = p.keys().chain(q.keys()).copied().collect();
    let mut tv = 0.0;
    let mut sign = BTreeMap::new();
    for k in keys {
        let d = p.get(&k).copied().unwrap_or(0.0) - q.get(&k).copied().unwrap_or(0.0);
        tv += d.abs();
        sign.insert(k, if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 });
    }
    (0.5 * tv, sign)
}

/// TV between two empirical laws over a space of `atoms` atoms.
pub fn tv_two_sample(a: &Counts, b: &Counts, atoms: usize) -> Tv {
    let (na, nb) = (total(a), total(b));
    let (p, q) = (freqs(a), freqs(b));
    let (value, sign) = tv_parts(&p, &q);
    let var = sign_variance(&p, &sign, na as f64) + sign_variance(&q, &sign, nb as f64);
    Tv { value, std_error: 0.5 * var.sqrt(), bias: plug_in_bias(atoms, na.min(nb)) }
}

/// TV between an empirical law and a known one.
pub fn tv_to_law(a: &Counts, law: &BTreeMap<u64, f64>, atoms: usize) -> Tv {
    let na = total(a);
    let p = freqs(a);
    let (value, sign) = tv_parts(&p, law);
    Tv { value, std_error: 0.5 * sign_variance(&p, &sign, na as f64).sqrt(), bias: plug_in_bias(atoms, na) }
}

/// TV between an empirical law `a` and the mixture `w δ_0 + (1 - w) law(b)`,
/// where the weight `w` is itself a proportion estimated from `nw` trials.
pub fn tv_to_mixture(a: &Counts, w: f64, nw: u64, b: &Counts, atoms: usize) -> Tv {
    let (na, nb) = (total(a), total(b));
    let p = freqs(a);
    let mut q: BTreeMap<u64, f64> = freqs(b).into_iter().map(|(k, v)| (k, (1.0 - w) * v)).collect();
    *q.entry(0).or_default() += w;
    let (value, sign) = tv_parts(&p, &q);
    let qb = freqs(b);
    // the mixture moves with b (scaled by 1 - w) and with w
    let var_b = (1.0 - w).powi(2) * sign_variance(&qb, &sign, nb as f64);
    let s0 = sign.get(&0).copied().unwrap_or(0.0);
    let sb: f64 = qb.iter().map(|(k, v)| v * sign.get(k).copied().unwrap_or(0.0)).sum();
    let var_w = (s0 - sb).powi(2) * w * (1.0 - w) / nw.max(1) as f64;
    let var = sign_variance(&p, &sign, na as f64) + var_b + var_w;
    Tv { value, std_error: 0.5 * var.sqrt(), bias: plug_in_bias(atoms, na.min(nb)) }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against `N(mean, var)`, with the
/// usual finite-sample correction of the scaled statistic.
pub fn ks_normal(xs: &[f64], mean: f64, var: f64) -> TestResult {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let normal = Normal::new(mean, var.sqrt()).expect("positive variance");
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let scaled = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    TestResult { statistic: d, p_value: kolmogorov_sf(scaled), df: n }
}

/// Asymptotic variance `σ²` of a time average, `Var(mean over [0, L]) ≈
/// σ² / L`, from batch means: `batches` equal consecutive batches of the
/// per-unit series `unit_means` (one value per unit of time).
pub fn batch_means_sigma2(unit_means: &[f64], batches: usize) -> Option<f64> {
    if batches < 2 {
        return None;
    }
    let len = unit_means.len() / batches;
    if len == 0 {
        return None;
    }
    let means: Vec<f64> = unit_means.chunks_exact(len).take(batches).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let m = mean_se(&means);
    // Var(batch mean) = σ²/len and std_error² = Var/batches
    Some(m.std_error.powi(2) * batches as f64 * len as f64)
}

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard errors from inverse-variance weights, inflated by the
    /// reduced chi-square when the scatter exceeds the weights.
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r2: f64,
    /// Root mean square of the unweighted residuals.
    pub residual_rms: f64,
    pub points: usize,
}

/// Fits a line; `weights` are inverse variances (all 1 when `None`, in which
/// case the errors come from the residual scatter alone).
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return None;
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if !(det.abs() > 0.0) {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let resid: Vec<f64> = x.iter().zip(y).map(|(x, y)| y - intercept - slope * x).collect();
    let chi2: f64 = w.iter().zip(&resid).map(|(w, r)| w * r * r).sum();
    let ybar = sy / sw;
    let tss: f64 = w.iter().zip(y).map(|(w, y)| w * (y - ybar).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - chi2 / tss } else { 1.0 };
    let dof = n.saturating_sub(2);
    let scale = match (weights.is_some(), dof) {
        (_, 0) => 1.0,
        (true, d) => (chi2 / d as f64).max(1.0),
        (false, d) => chi2 / d as f64,
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se: (scale * sw / det).sqrt(),
        intercept_se: (scale * sxx / det).sqrt(),
        r2,
        residual_rms: (resid.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt(),
        points: n,
    })
}

/// `exp(a)` to an entrywise tolerance of `1e-10`: the exponential of `a / 2^k`
/// raised back by squaring, with `k` increased until two consecutive `k`
/// agree.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let power = |k: u32| {
        let mut e = (a / f64::from(1u32 << k)).exp();
        for _ in 0..k {
            e = &e * &e;
        }
        e
    };
    let mut prev = power(0);
    for k in 1..20 {
        let next = power(k);
        let diff = (&next - &prev).amax();
        if diff < 1e-10 {
            return next;
        }
        prev = next;
    }
    prev
}
