//! Nonparametric tests used to compare conditions: Kruskal–Wallis,
//! Brown–Forsythe Levene, Mann–Whitney U with Bonferroni post-hoc pairs, and a
//! seeded subsampling bootstrap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatMethod {
    KruskalWallis,
    Levene,
    MannWhitney,
    BonferroniPosthoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub groups: Vec<String>,
    pub method: StatMethod,
}

/// One labeled sample.
#[derive(Debug, Clone, Copy)]
pub struct Group<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

impl<'a> Group<'a> {
    pub fn new(label: &'a str, values: &'a [f64]) -> Self {
        Self { label, values }
    }
}

fn labels(groups: &[Group<'_>]) -> Vec<String> {
    groups.iter().map(|g| g.label.to_string()).collect()
}

fn check_finite(groups: &[Group<'_>]) -> Result<()> {
    if groups.iter().flat_map(|g| g.values).any(|v| !v.is_finite()) {
        return Err(Error::InputDomain("samples must be finite".into()));
    }
    Ok(())
}

/// Average ranks (1-based) of `values` and the tie term Σ(t³ − t).
fn rank(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Rank-based H statistic with tie correction; p from χ² with k − 1 degrees of freedom.
pub fn kruskal_wallis(groups: &[Group<'_>]) -> Result<StatResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.values.is_empty()) {
        return Err(Error::InputDomain(
            "Kruskal–Wallis needs at least two nonempty groups".into(),
        ));
    }
    check_finite(groups)?;
    let all: Vec<f64> = groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let n = all.len() as f64;
    let (ranks, ties) = rank(&all);
    let correction = 1.0 - ties / (n * n * n - n);
    if !(correction > 0.0) {
        return Err(Error::DegenerateData("all values are tied".into()));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.values.len()].iter().sum();
        sum += r * r / g.values.len() as f64;
        offset += g.values.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    let dist = ChiSquared::new((groups.len() - 1) as f64).map_err(|e| Error::InputDomain(e.to_string()))?;
    Ok(StatResult {
        statistic: h,
        p_value: clamp_p(dist.sf(h)),
        groups: labels(groups),
        method: StatMethod::KruskalWallis,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

/// Brown–Forsythe variant of Levene's test: one-way ANOVA on absolute
/// deviations from the group medians; p from F(k − 1, N − k).
pub fn levene(groups: &[Group<'_>]) -> Result<StatResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.values.len() < 2) {
        return Err(Error::InputDomain(
            "Levene needs at least two groups of two or more".into(),
        ));
    }
    check_finite(groups)?;
    let z: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = median(g.values);
            g.values.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let k = groups.len() as f64;
    let n: f64 = z.iter().map(|g| g.len() as f64).sum();
    let means: Vec<f64> = z.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let grand = z.iter().flatten().sum::<f64>() / n;
    let between: f64 = z
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let within: f64 = z
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    if !(within > 0.0) {
        if between == 0.0 {
            return Ok(StatResult {
                statistic: 0.0,
                p_value: 1.0,
                groups: labels(groups),
                method: StatMethod::Levene,
            });
        }
        return Err(Error::DegenerateData("no within-group spread of deviations".into()));
    }
    let w = (n - k) / (k - 1.0) * between / within;
    let dist = FisherSnedecor::new(k - 1.0, n - k).map_err(|e| Error::InputDomain(e.to_string()))?;
    Ok(StatResult {
        statistic: w,
        p_value: clamp_p(dist.sf(w)),
        groups: labels(groups),
        method: StatMethod::Levene,
    })
}

/// Mann–Whitney U (reported as min(U₁, U₂)) with the tie-corrected,
/// continuity-corrected normal approximation; two-sided p.
pub fn mann_whitney(a: Group<'_>, b: Group<'_>) -> Result<StatResult> {
    if a.values.is_empty() || b.values.is_empty() {
        return Err(Error::InputDomain("Mann–Whitney needs two nonempty samples".into()));
    }
    check_finite(&[a, b])?;
    let (n1, n2) = (a.values.len() as f64, b.values.len() as f64);
    let all: Vec<f64> = a.values.iter().chain(b.values).copied().collect();
    let (ranks, ties) = rank(&all);
    let r1: f64 = ranks[..a.values.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let sigma = (n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))).sqrt();
    let p = if sigma > 0.0 && sigma.is_finite() {
        let z = (u1.max(u2) - mu - 0.5) / sigma;
        let normal = Normal::standard();
        2.0 * normal.sf(z)
    } else {
        1.0
    };
    Ok(StatResult {
        statistic: u1.min(u2),
        p_value: clamp_p(p),
        groups: vec![a.label.to_string(), b.label.to_string()],
        method: StatMethod::MannWhitney,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub result: StatResult,
    pub significant: bool,
}

/// Mann–Whitney on every pair of groups, p multiplied by the number of pairs
/// (clamped to 1) and compared with `alpha`.
pub fn bonferroni_posthoc(groups: &[Group<'_>], alpha: f64) -> Result<Vec<PairwiseResult>> {
    if groups.len() < 2 {
        return Err(Error::InputDomain(
            "post-hoc comparison needs at least two groups".into(),
        ));
    }
    let m = (groups.len() * (groups.len() - 1) / 2) as f64;
    let mut out = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let mut r = mann_whitney(groups[i], groups[j])?;
            r.p_value = (r.p_value * m).min(1.0);
            r.method = StatMethod::BonferroniPosthoc;
            let significant = r.p_value < alpha;
            out.push(PairwiseResult { result: r, significant });
        }
    }
    Ok(out)
}

/// Repeated subsampling without replacement. Iteration `i` draws
/// `subset_size` distinct elements (kept in their original order) with a
/// generator seeded by `seed + i`, and evaluates `statistic` on them.
pub fn bootstrap<F>(samples: &[f64], subset_size: usize, iterations: usize, seed: u64, statistic: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if subset_size > samples.len() {
        return Err(Error::InputDomain(format!(
            "subset of {subset_size} requested from {} samples",
            samples.len()
        )));
    }
    if iterations == 0 || subset_size == 0 {
        return Err(Error::InputDomain(
            "bootstrap needs at least one iteration and a nonempty subset".into(),
        ));
    }
    Ok((0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut idx = rand::seq::index::sample(&mut rng, samples.len(), subset_size).into_vec();
            idx.sort_unstable();
            let sub: Vec<f64> = idx.into_iter().map(|k| samples[k]).collect();
            statistic(&sub)
        })
        .collect())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-group spread used by the Brown–Forsythe test: mean absolute deviation
/// from the group median.
pub fn median_spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let m = median(v);
    v.iter().map(|x| (x - m).abs()).sum::<f64>() / v.len() as f64
}
