//! Deterministic Monte Carlo over Dirichlet priors.
//!
//! Sample `i` of a run is drawn from its own ChaCha8 stream keyed by
//! `(seed, i)`, so estimates are bit-identical for any worker count. Values
//! are reduced by pairwise summation in index order.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    divergence_from_partition_model, partition_divergence_uniform_from_masses, ModelSpec,
    ProjectionResult,
};
use crate::simplex::{entropy_of, DirichletPrior, Partition, Pmf, ReferenceMeasure, StateSpace};
use crate::special::{harmonic, ln_gamma_pos, EULER_GAMMA};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

/// Counter-based source of random generators: index `i` maps to an
/// independent ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    pub seed: u64,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// `log G` for `G ~ Gamma(shape, 1)`.
///
/// Marsaglia–Tsang squeeze for shape ≥ 1; below that `G(s) = G(s+1) U^{1/s}`.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_log_gamma(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// One draw of `Dir(α)` as log weights `log p_i`.
pub fn sample_dirichlet_log<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut l: Vec<f64> = alpha.iter().map(|&a| sample_log_gamma(a, rng)).collect();
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max + l.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    l.iter_mut().for_each(|x| *x -= log_sum);
    l
}

/// One draw of `Dir(α)` as raw weights, normalized in log space.
pub fn sample_dirichlet_weights<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = alpha.iter().map(|&a| sample_log_gamma(a, rng)).collect();
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in w.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// Draw `index` of `stream` from `Dir(α)`.
pub fn sample_dirichlet(prior: &DirichletPrior, stream: SampleStream, index: u64) -> Pmf {
    let mut rng = stream.rng(index);
    let w = sample_dirichlet_weights(prior.alpha(), &mut rng);
    Pmf::from_unnormalized(prior.space().clone(), w).expect("Dirichlet draw is a valid pmf")
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator) over `√n`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Run configuration shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// `None` uses rayon's global pool.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

/// Sum in a fixed binary tree so the result does not depend on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn summarize(values: &[f64], seed: u64) -> McEstimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    McEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
        seed,
    }
}

/// Evaluate `f` on one generator per sample index and collect in index order.
pub fn sample_values<F>(config: McConfig, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let stream = SampleStream::new(config.seed);
    let run = || {
        (0..config.n_samples as u64)
            .into_par_iter()
            .map(|i| f(&mut stream.rng(i)))
            .collect::<Result<Vec<f64>>>()
    };
    match config.workers {
        None => run(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
    }
}

/// Mean and standard error of `f` over `n_samples` counter-based draws.
pub fn estimate_with<F>(config: McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if config.n_samples < 2 {
        return Err(Error::InvalidConfig("need at least two samples".into()));
    }
    let values = sample_values(config, f)?;
    Ok(summarize(&values, config.seed))
}

/// Estimate of `E[f(p)]` for `p ~ Dir(α)`.
pub fn estimate_expectation<F>(prior: &DirichletPrior, config: McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(&Pmf) -> Result<f64> + Sync,
{
    estimate_with(config, |rng| {
        let w = sample_dirichlet_weights(prior.alpha(), rng);
        f(&Pmf::from_unnormalized(prior.space().clone(), w)?)
    })
}

/// Estimate of `⟨D(p‖ℳ)⟩` for `p ~ Dir(α)`.
pub fn estimate_expected_divergence(
    prior: &DirichletPrior,
    model: &ModelSpec,
    config: McConfig,
) -> Result<McEstimate> {
    if prior.space() != model.space() {
        return Err(Error::SpaceMismatch);
    }
    estimate_expectation(prior, config, |p| model.divergence(p))
}

/// `n choose k` in 128-bit arithmetic.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// The family `Υ_k` of bipartitions of `N` states into blocks of sizes
/// `k` and `N − k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BipartitionFamily {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub count: u128,
}

impl BipartitionFamily {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || 2 * k > n {
            return Err(Error::InvalidConfig(format!(
                "bipartition block size must satisfy 1 <= k <= N/2, got N = {n}, k = {k}"
            )));
        }
        let c = binomial(n as u64, k as u64);
        let count = if 2 * k == n { c / 2 } else { c };
        Ok(Self { n, k, count })
    }
}

/// First blocks of the bipartitions in `Υ_k`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct BipartitionBlocks {
    n: usize,
    current: Option<Vec<usize>>,
    half: bool,
}

impl Iterator for BipartitionBlocks {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let k = next.len();
        let mut i = k;
        while i > 0 && next[i - 1] == self.n - k + i - 1 {
            i -= 1;
        }
        if i > 0 {
            next[i - 1] += 1;
            for j in i..k {
                next[j] = next[j - 1] + 1;
            }
            // for k = N/2 keep only blocks containing state 0
            if !(self.half && next[0] != 0) {
                self.current = Some(next);
            }
        }
        Some(out)
    }
}

pub fn bipartition_blocks(n: usize, k: usize) -> Result<BipartitionBlocks> {
    BipartitionFamily::new(n, k)?;
    Ok(BipartitionBlocks {
        n,
        current: Some((0..k).collect()),
        half: 2 * k == n,
    })
}

/// Each bipartition in `Υ_k` exactly once, for `k = N/2` as the
/// representative whose first block contains state 0.
pub fn enumerate_bipartitions(n: usize, k: usize) -> Result<impl Iterator<Item = Partition>> {
    let space = StateSpace::flat(n)?;
    Ok(bipartition_blocks(n, k)?.map(move |block| {
        let mut in_block = vec![false; n];
        block.iter().for_each(|&i| in_block[i] = true);
        let rest = (0..n).filter(|&i| !in_block[i]).collect();
        Partition::new(space.clone(), vec![block, rest]).expect("valid bipartition")
    }))
}

fn bipartition_value(neg_entropy: f64, s: f64, n: usize, k: usize) -> f64 {
    partition_divergence_uniform_from_masses(neg_entropy, &[s, 1.0 - s], &[k, n - k])
}

fn check_k(p: &Pmf, k: usize) -> Result<()> {
    if p.space().n_factors() != 1 {
        return Err(Error::InvalidConfig(
            "bipartition families live on plain state spaces".into(),
        ));
    }
    BipartitionFamily::new(p.len(), k).map(|_| ())
}

/// `min_{ϱ∈Υ_k} D(p‖ℳ_ϱ)` by enumeration.
pub fn brute_min_bipartition_value(w: &[f64], k: usize) -> f64 {
    let n = w.len();
    let neg_h = -entropy_of(w);
    bipartition_blocks(n, k)
        .expect("caller validated k")
        .map(|b| bipartition_value(neg_h, b.iter().map(|&i| w[i]).sum(), n, k))
        .fold(f64::INFINITY, f64::min)
}

/// Block masses of the `k` smallest and `k` largest weights.
fn extreme_masses(w: &[f64], k: usize) -> (f64, f64) {
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let low = sorted[..k].iter().sum();
    let high = sorted[sorted.len() - k..].iter().sum();
    (low, high)
}

/// `min_{ϱ∈Υ_k} D(p‖ℳ_ϱ)` from the two extreme blocks only.
///
/// With uniform ν the divergence is `−H(p) − f(p(A))` for a convex `f`, so
/// the minimum over achievable block masses sits at the smallest or
/// largest one.
pub fn fast_min_bipartition_value(w: &[f64], k: usize) -> f64 {
    let n = w.len();
    let neg_h = -entropy_of(w);
    let (low, high) = extreme_masses(w, k);
    bipartition_value(neg_h, low, n, k).min(bipartition_value(neg_h, high, n, k))
}

fn bipartition_of(n: usize, mut block: Vec<usize>) -> Partition {
    block.sort_unstable();
    if 2 * block.len() == n && block[0] != 0 {
        block = (0..n).filter(|i| block.binary_search(i).is_err()).collect();
    }
    let rest = (0..n).filter(|i| block.binary_search(i).is_err()).collect();
    Partition::new(StateSpace::flat(n).expect("n > 0"), vec![block, rest]).expect("bipartition")
}

/// Exhaustive minimizer over `Υ_k`; `argmin_member` is the enumeration index.
pub fn brute_min_bipartition(p: &Pmf, k: usize) -> Result<ProjectionResult> {
    check_k(p, k)?;
    let w = p.weights();
    let n = w.len();
    let neg_h = -entropy_of(w);
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for (i, b) in bipartition_blocks(n, k)?.enumerate() {
        let d = bipartition_value(neg_h, b.iter().map(|&j| w[j]).sum(), n, k);
        if best.as_ref().is_none_or(|(_, _, v)| d < *v) {
            best = Some((i, b, d));
        }
    }
    let (i, block, _) = best.expect("families are nonempty");
    let part = bipartition_of(n, block);
    let mut res = divergence_from_partition_model(p, &part, &ReferenceMeasure::uniform(p.space().clone()))?;
    res.argmin_member = Some(i);
    Ok(res)
}

/// Sort-based minimizer over `Υ_k`.
pub fn fast_min_bipartition(p: &Pmf, k: usize) -> Result<ProjectionResult> {
    check_k(p, k)?;
    let w = p.weights();
    let n = w.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    let neg_h = -entropy_of(w);
    let low: Vec<usize> = order[..k].to_vec();
    let high: Vec<usize> = order[n - k..].to_vec();
    let d_low = bipartition_value(neg_h, low.iter().map(|&i| w[i]).sum(), n, k);
    let d_high = bipartition_value(neg_h, high.iter().map(|&i| w[i]).sum(), n, k);
    let block = if d_low <= d_high { low } else { high };
    let part = bipartition_of(n, block);
    divergence_from_partition_model(p, &part, &ReferenceMeasure::uniform(p.space().clone()))
}

/// Bipartition family of a union-of-partitions experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Blocks of sizes 1 and N − 1.
    Upsilon1,
    /// Blocks of sizes 2 and N − 2.
    Upsilon2,
    /// Two blocks of size N/2.
    UpsilonHalf,
}

impl Family {
    pub fn block_size(&self, n: usize) -> Result<usize> {
        let k = match self {
            Family::Upsilon1 => 1,
            Family::Upsilon2 => {
                if n < 4 {
                    return Err(Error::InvalidConfig("Υ_2 needs N >= 4".into()));
                }
                2
            }
            Family::UpsilonHalf => {
                if !n.is_multiple_of(2) || n < 2 {
                    return Err(Error::InvalidConfig(format!("Υ_N/2 needs even N, got {n}")));
                }
                n / 2
            }
        };
        if 2 * k > n {
            return Err(Error::InvalidConfig(format!("N = {n} too small for this family")));
        }
        Ok(k)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Upsilon1 => "upsilon1",
            Family::Upsilon2 => "upsilon2",
            Family::UpsilonHalf => "upsilon_half",
        }
    }

    /// Sample counts used when none are given.
    pub fn default_samples(&self, n: usize) -> usize {
        match self {
            Family::Upsilon1 => 10_000,
            Family::Upsilon2 => 20_000,
            Family::UpsilonHalf if n == 22 => 500,
            Family::UpsilonHalf => 10_000,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upsilon1" | "1" => Ok(Family::Upsilon1),
            "upsilon2" | "2" => Ok(Family::Upsilon2),
            "upsilon_half" | "half" | "N/2" => Ok(Family::UpsilonHalf),
            _ => Err(Error::InvalidConfig(format!("unknown family `{s}`"))),
        }
    }
}

/// How to minimize over a bipartition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Minimizer {
    Brute,
    Fast,
    /// Fast for `Υ_{N/2}` above `N = 14`, brute force otherwise.
    Auto,
}

impl Minimizer {
    fn resolve(self, family: Family, n: usize) -> Minimizer {
        match self {
            Minimizer::Auto if family == Family::UpsilonHalf && n > 14 => Minimizer::Fast,
            Minimizer::Auto => Minimizer::Brute,
            m => m,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Minimizer::Brute => "brute",
            Minimizer::Fast => "fast",
            Minimizer::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Minimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Minimizer::Brute),
            "fast" => Ok(Minimizer::Fast),
            "auto" => Ok(Minimizer::Auto),
            _ => Err(Error::InvalidConfig(format!("unknown minimizer `{s}`"))),
        }
    }
}

/// Grid and sampling settings of a union-of-bipartitions experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n_list: Vec<usize>,
    pub a_list: Vec<f64>,
    /// `None` uses [`Family::default_samples`].
    pub n_samples: Option<usize>,
    pub seed: u64,
    pub minimizer: Minimizer,
    pub workers: Option<usize>,
}

/// One `(N, a)` cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub family: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub minimizer: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub family_size: u128,
    pub wall_time_ms: u64,
}

/// `⟨D(p‖ℳ_{Υ_k})⟩` under `Dir(a, …, a)` for one `(N, a)`.
pub fn estimate_union_bipartitions(
    n: usize,
    k: usize,
    a: f64,
    minimizer: Minimizer,
    config: McConfig,
) -> Result<McEstimate> {
    BipartitionFamily::new(n, k)?;
    let prior = DirichletPrior::symmetric(StateSpace::flat(n)?, a)?;
    let fast = match minimizer {
        Minimizer::Fast => true,
        Minimizer::Brute => false,
        Minimizer::Auto => 2 * k == n && n > 14,
    };
    estimate_with(config, |rng| {
        let w = sample_dirichlet_weights(prior.alpha(), rng);
        Ok(if fast {
            fast_min_bipartition_value(&w, k)
        } else {
            brute_min_bipartition_value(&w, k)
        })
    })
}

/// Runs the experiment grid; rows come out in `(N, a)` order.
pub fn experiment_union_partitions(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if cfg.n_list.is_empty() || cfg.a_list.is_empty() {
        return Err(Error::InvalidConfig("empty N or a grid".into()));
    }
    let mut rows = Vec::with_capacity(cfg.n_list.len() * cfg.a_list.len());
    for &n in &cfg.n_list {
        let k = cfg.family.block_size(n)?;
        let family = BipartitionFamily::new(n, k)?;
        let minimizer = cfg.minimizer.resolve(cfg.family, n);
        let n_samples = cfg.n_samples.unwrap_or_else(|| cfg.family.default_samples(n));
        for &a in &cfg.a_list {
            let start = Instant::now();
            let mc = McConfig {
                n_samples,
                seed: cfg.seed,
                workers: cfg.workers,
            };
            let est = estimate_union_bipartitions(n, k, a, minimizer, mc)?;
            rows.push(ExperimentRow {
                family: cfg.family.as_str(),
                n,
                k,
                a,
                n_samples,
                seed: cfg.seed,
                minimizer: minimizer.as_str(),
                estimate: est.mean,
                std_error: est.std_error,
                family_size: family.count,
                wall_time_ms: start.elapsed().as_millis() as u64,
            });
        }
    }
    Ok(rows)
}

/// Large-`N` limit `h(a) − log a − γ` of the expected divergences.
pub fn asymptote(a: f64) -> f64 {
    harmonic(a) - a.ln() - EULER_GAMMA
}

/// A scalar field on the triangle `Δ_2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    DivPartition(Partition),
    DivUnion(Vec<Partition>),
}

/// One grid node of [`simplex_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldPoint {
    /// Barycentric coordinates.
    pub p: [f64; 3],
    /// `NaN` when masked.
    pub value: f64,
    /// Share of the triangle's area attributed to this node.
    pub area_weight: f64,
    /// The Dirichlet density is singular here.
    pub masked: bool,
}

/// `Dir_α(p) = (1/√N) Γ(α)/Π Γ(α_i) Π p_i^{α_i − 1}` with respect to the
/// surface measure of the simplex.
pub fn dirichlet_density(prior: &DirichletPrior, p: &[f64]) -> f64 {
    let n = prior.len() as f64;
    let mut log = ln_gamma_pos(prior.total()) - 0.5 * n.ln();
    for (&a, &x) in prior.alpha().iter().zip(p) {
        log -= ln_gamma_pos(a);
        if a != 1.0 {
            if x == 0.0 {
                return if a > 1.0 { 0.0 } else { f64::INFINITY };
            }
            log += (a - 1.0) * x.ln();
        }
    }
    log.exp()
}

/// Evaluates a field on the barycentric grid `{(i, j, r − i − j)/r}`,
/// optionally multiplied by a Dirichlet density.
pub fn simplex_field(
    field: &Field,
    weight: Option<&DirichletPrior>,
    resolution: usize,
) -> Result<Vec<FieldPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
    }
    let parts: Vec<&Partition> = match field {
        Field::DivPartition(p) => vec![p],
        Field::DivUnion(ps) if ps.is_empty() => return Err(Error::EmptyUnion),
        Field::DivUnion(ps) => ps.iter().collect(),
    };
    let space = parts[0].space().clone();
    if space.size() != 3 || parts.iter().any(|p| p.space() != &space) {
        return Err(Error::InvalidConfig("simplex fields need N = 3".into()));
    }
    if let Some(w) = weight {
        if w.space().size() != 3 {
            return Err(Error::InvalidConfig("density weight needs N = 3".into()));
        }
    }
    let nu = ReferenceMeasure::uniform(space.clone());
    let r = resolution;
    let tri = (3f64.sqrt() / 2.0) / (r * r) as f64;
    let mut out = Vec::with_capacity((r + 1) * (r + 2) / 2);
    for i in 0..=r {
        for j in 0..=r - i {
            let l = r - i - j;
            let zeros = [i, j, l].iter().filter(|&&c| c == 0).count();
            let area_weight = tri
                * match zeros {
                    0 => 2.0,
                    1 => 1.0,
                    _ => 1.0 / 3.0,
                };
            let p = [i as f64 / r as f64, j as f64 / r as f64, l as f64 / r as f64];
            let pmf = Pmf::new(space.clone(), p.to_vec())?;
            let div = parts
                .iter()
                .map(|part| divergence_from_partition_model(&pmf, part, &nu).map(|r| r.divergence))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let (value, masked) = match weight {
                None => (div, false),
                Some(w) => {
                    let d = dirichlet_density(w, &p);
                    if d.is_finite() {
                        (div * d, false)
                    } else {
                        (f64::NAN, true)
                    }
                }
            };
            out.push(FieldPoint {
                p,
                value,
                area_weight,
                masked,
            });
        }
    }
    Ok(out)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample critical value at significance `level`.
pub fn ks_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let c = (-0.5 * (level / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
