//! Acceptance checks, shared by the test suite and the `selftest` command.
//!
//! Each check compares the library against an oracle that does not reuse
//! the code under test: Monte Carlo for closed forms, direct minimization
//! for projections, exhaustive enumeration for the fast minimizer, and a
//! separately written digamma for the special functions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::expectation as ex;
use crate::junction::JunctionTree;
use crate::models::{divergence_from_union, CylinderBlock, CylinderPartition, ModelSpec};
use crate::montecarlo::{
    self as mc, enumerate_bipartitions, estimate_union_bipartitions, BipartitionFamily, Family,
    McConfig, McEstimate, Minimizer,
};
use crate::simplex::{
    aggregate_prior, entropy, kl_divergence, marginal_pmf, DirichletPrior, Partition, Pmf,
    ReferenceMeasure, StateSpace,
};
use crate::special::{digamma, harmonic_int, KahanSum, EULER_GAMMA};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionReport {
    /// `PASS id: detail` or `FAIL id: detail`.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {} ({}): {}", self.id, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Cuts sample counts and repetitions by 10x; the criteria's sizes are
    /// not met in this mode.
    pub quick: bool,
    pub workers: Option<usize>,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            seed: mc::DEFAULT_SEED,
            quick: false,
            workers: None,
        }
    }
}

impl SelftestOptions {
    fn scaled(&self, n: usize) -> usize {
        if self.quick {
            (n / 10).max(2)
        } else {
            n
        }
    }

    fn mc(&self, n: usize, seed: u64) -> McConfig {
        McConfig {
            n_samples: self.scaled(n),
            seed,
            workers: self.workers,
        }
    }

    fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(tag);
        rng
    }
}

type Check = fn(&SelftestOptions) -> Result<CriterionReport>;

/// Criterion ids with their checks, in reporting order.
pub const CRITERIA: &[(&str, Check)] = &[
    ("limit_constant", limit_constant),
    ("pair_closed_case", pair_closed_case),
    ("closed_form_vs_mc", closed_form_vs_mc),
    ("cross_formula_identities", cross_formula_identities),
    ("projection_correctness", projection_correctness),
    ("fast_bipartition_minimizer", fast_bipartition_minimizer),
    ("union_experiments", union_experiments),
    ("special_function_accuracy", special_function_accuracy),
    ("aggregation_ks", aggregation_ks),
];

/// Runs the selected criteria (all when `only` is empty). Errors inside a
/// check are reported as failures.
pub fn run(opts: &SelftestOptions, only: &[String]) -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .filter(|(id, _)| only.is_empty() || only.iter().any(|o| o == id))
        .map(|(id, check)| {
            check(opts).unwrap_or_else(|e| CriterionReport {
                id,
                name: "error",
                passed: false,
                detail: e.to_string(),
            })
        })
        .collect()
}

fn report(id: &'static str, name: &'static str, passed: bool, detail: String) -> Result<CriterionReport> {
    Ok(CriterionReport {
        id,
        name,
        passed,
        detail,
    })
}

/// `|exact − mean| / SE`, zero when both the gap and the SE vanish.
fn z_score(exact: f64, est: &McEstimate) -> f64 {
    let gap = (exact - est.mean).abs();
    if est.std_error == 0.0 {
        if gap <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        gap / est.std_error
    }
}

fn flat(n: usize) -> StateSpace {
    StateSpace::flat(n).expect("n > 0")
}

fn random_alpha(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_prior(rng: &mut ChaCha8Rng, space: &StateSpace, symmetric: bool) -> DirichletPrior {
    if symmetric {
        DirichletPrior::symmetric(space.clone(), rng.random_range(0.2..5.0)).expect("a > 0")
    } else {
        DirichletPrior::new(space.clone(), random_alpha(rng, space.size(), 0.2, 5.0)).expect("α > 0")
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, space: &StateSpace, a: f64) -> Pmf {
    let alpha = vec![a; space.size()];
    Pmf::from_unnormalized(space.clone(), mc::sample_dirichlet_weights(&alpha, rng)).expect("pmf")
}

/// A pmf that sometimes has exact zeros.
fn random_sparse_pmf(rng: &mut ChaCha8Rng, space: &StateSpace) -> Pmf {
    let mut w = random_pmf(rng, space, 0.5).into_weights();
    if rng.random_bool(0.3) {
        let keep = rng.random_range(0..w.len());
        for (i, x) in w.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.4) {
                *x = 0.0;
            }
        }
    }
    Pmf::from_unnormalized(space.clone(), w).expect("pmf")
}

/// Composite space with 2 to 4 factors and at most `max_size` states.
fn random_factors(rng: &mut ChaCha8Rng, max_size: usize) -> StateSpace {
    loop {
        let n = rng.random_range(2..=4);
        let f: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
        if f.iter().product::<usize>() <= max_size {
            return StateSpace::new(f).expect("factors > 0");
        }
    }
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, min_blocks: usize, max_blocks: usize) -> Partition {
    let k = rng.random_range(min_blocks..=max_blocks.min(n));
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let mut labels = vec![0; n];
    for (pos, &s) in states.iter().enumerate() {
        labels[s] = if pos < k { pos } else { rng.random_range(0..k) };
    }
    Partition::from_labels(flat(n), &labels).expect("labels cover 0..k")
}

/// Random cylinder blocks from repeated two-way splits of one factor.
fn random_cylinders(rng: &mut ChaCha8Rng, space: &StateSpace, splits: usize) -> CylinderPartition {
    let mut blocks: Vec<Vec<Vec<usize>>> =
        vec![space.factors().iter().map(|&n| (0..n).collect()).collect()];
    for _ in 0..splits {
        let b = rng.random_range(0..blocks.len());
        let free: Vec<usize> = (0..space.n_factors())
            .filter(|&j| blocks[b][j].len() > 1)
            .collect();
        if free.is_empty() {
            continue;
        }
        let j = free[rng.random_range(0..free.len())];
        let mut vals = blocks[b][j].clone();
        vals.shuffle(rng);
        let cut = rng.random_range(1..vals.len());
        let mut other = blocks[b].clone();
        other[j] = vals[cut..].to_vec();
        blocks[b][j] = vals[..cut].to_vec();
        blocks.push(other);
    }
    CylinderPartition::new(space.clone(), blocks.into_iter().map(CylinderBlock::new).collect())
        .expect("splits keep a disjoint cover")
}

/// Random cylinder blocks that fix whole factors, as the symmetric mixture
/// formula requires.
fn random_homogeneous_cylinders(rng: &mut ChaCha8Rng, space: &StateSpace, splits: usize) -> CylinderPartition {
    let mut blocks: Vec<Vec<Vec<usize>>> =
        vec![space.factors().iter().map(|&n| (0..n).collect()).collect()];
    for _ in 0..splits {
        let b = rng.random_range(0..blocks.len());
        let free: Vec<usize> = (0..space.n_factors())
            .filter(|&j| blocks[b][j].len() > 1)
            .collect();
        if free.is_empty() {
            continue;
        }
        let j = free[rng.random_range(0..free.len())];
        let base = blocks.swap_remove(b);
        for v in base[j].clone() {
            let mut nb = base.clone();
            nb[j] = vec![v];
            blocks.push(nb);
        }
    }
    CylinderPartition::new(space.clone(), blocks.into_iter().map(CylinderBlock::new).collect())
        .expect("splits keep a disjoint cover")
}

/// Random decomposable complex grown by adding simplicial vertices.
fn random_junction_tree(rng: &mut ChaCha8Rng, space: &StateSpace) -> JunctionTree {
    let mut facets: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..space.n_factors() {
        let f = rng.random_range(0..facets.len());
        let mut s: Vec<usize> = facets[f].iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if s.len() == facets[f].len() {
            facets[f].push(i);
        } else {
            s.push(i);
            facets.push(s);
        }
    }
    JunctionTree::from_facets(space.clone(), facets).expect("chordal by construction")
}

/// `⟨D(p‖u)⟩` at `a = 1` tends to `1 − γ` from below, monotonically in `N`.
pub fn limit_constant(_: &SelftestOptions) -> Result<CriterionReport> {
    let limit = 1.0 - EULER_GAMMA;
    let v_big = ex::expected_div_uniform_symmetric(1_000_000, 1.0)?.value;
    let general = ex::expected_div_uniform(&DirichletPrior::symmetric(flat(1_000_000), 1.0)?).value;
    let mut prev = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut below = true;
    for n in (2..=1usize << 20).step_by(2) {
        let v = ex::expected_div_uniform_symmetric(n, 1.0)?.value;
        monotone &= v > prev;
        below &= v <= limit;
        prev = v;
    }
    let gap = (v_big - limit).abs();
    let passed = gap <= 1e-5 && monotone && below && (general - v_big).abs() <= 1e-12;
    report(
        "limit_constant",
        "expected divergence from uniform tends to 1 - gamma",
        passed,
        format!(
            "N=1e6: {v_big:.10} (|gap| {gap:.2e}, general-vs-symmetric {:.1e}); even N in [2, 2^20]: increasing={monotone}, below limit={below}",
            (general - v_big).abs()
        ),
    )
}

/// Independent `p, q ~ Dir(a, …, a)`: `⟨D(p‖q)⟩ = (N − 1)/(Na)`.
pub fn pair_closed_case(opts: &SelftestOptions) -> Result<CriterionReport> {
    let mut rng = opts.rng(2);
    let configs = if opts.quick { 5 } else { 50 };
    let mut max_exact_err: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut failures = Vec::new();
    for c in 0..configs {
        let n = rng.random_range(2..=128usize);
        let a = rng.random_range(0.2..5.0);
        let prior = DirichletPrior::symmetric(flat(n), a)?;
        let exact = ex::expected_div_pair(&prior, &prior)?.divergence.value;
        let target = (n as f64 - 1.0) / (n as f64 * a);
        max_exact_err = max_exact_err.max((exact - target).abs());
        let alpha = prior.alpha();
        let est = mc::estimate_with(opts.mc(200_000, rng.random()), |r| {
            let lp = mc::sample_dirichlet_log(alpha, r);
            let lq = mc::sample_dirichlet_log(alpha, r);
            Ok(lp.iter().zip(&lq).map(|(x, y)| x.exp() * (x - y)).sum())
        })?;
        let z = z_score(exact, &est);
        max_z = max_z.max(z);
        if z > 3.0 {
            failures.push(format!("#{c} N={n} a={a:.3} z={z:.2}"));
        }
    }
    let passed = max_exact_err <= 1e-12 && failures.is_empty();
    report(
        "pair_closed_case",
        "equal priors give (N-1)/(Na)",
        passed,
        format!(
            "{configs} configs, max |exact - (N-1)/(Na)| = {max_exact_err:.1e}, max z = {max_z:.2}, n = {}{}",
            opts.scaled(200_000),
            fmt_failures(&failures)
        ),
    )
}

fn fmt_failures(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; outside 3 SE: {}", f.join(", "))
    }
}

/// One closed form checked on one random configuration.
struct McCase {
    exact: f64,
    estimate: McEstimate,
    label: String,
}

fn closed_form_case(op: &str, c: usize, rng: &mut ChaCha8Rng, opts: &SelftestOptions) -> Result<McCase> {
    let symmetric = c.is_multiple_of(2);
    let cfg = opts.mc(200_000, rng.random());
    let model_case = |prior: &DirichletPrior, model: ModelSpec, label: String| -> Result<McCase> {
        Ok(McCase {
            exact: ex::expected_divergence(prior, &model)?.value,
            estimate: mc::estimate_expected_divergence(prior, &model, cfg)?,
            label,
        })
    };
    match op {
        "entropy" => {
            let n = rng.random_range(2..=64);
            let prior = random_prior(rng, &flat(n), symmetric);
            let exact = match prior.symmetric_value() {
                Some(a) => ex::expected_entropy_symmetric(n, a)?,
                None => ex::expected_entropy(&prior),
            };
            Ok(McCase {
                exact: exact.value,
                estimate: mc::estimate_expectation(&prior, cfg, |p| Ok(entropy(p)))?,
                label: format!("N={n}"),
            })
        }
        "div_uniform" => {
            let n = rng.random_range(2..=64);
            let space = flat(n);
            let prior = random_prior(rng, &space, symmetric);
            model_case(&prior, ModelSpec::Uniform(space), format!("N={n}"))
        }
        "div_to_point" => {
            let n = rng.random_range(2..=64);
            let space = flat(n);
            let prior = random_prior(rng, &space, symmetric);
            let q = random_pmf(rng, &space, 2.0);
            model_case(&prior, ModelSpec::FixedPoint(q), format!("N={n}"))
        }
        "div_from_prior" => {
            let n = rng.random_range(2..=64);
            let space = flat(n);
            let prior = random_prior(rng, &space, symmetric);
            let p = random_sparse_pmf(rng, &space);
            let exact = ex::expected_div_from_prior(&p, &prior)?.value;
            let alpha = prior.alpha();
            let w = p.weights();
            let estimate = mc::estimate_with(cfg, |r| {
                let lq = mc::sample_dirichlet_log(alpha, r);
                Ok(w.iter()
                    .zip(&lq)
                    .filter(|(&pi, _)| pi > 0.0)
                    .map(|(&pi, &l)| pi * (pi.ln() - l))
                    .sum())
            })?;
            Ok(McCase { exact, estimate, label: format!("N={n}") })
        }
        "div_pair" | "cross_term_pair" => {
            let n = rng.random_range(2..=64);
            let space = flat(n);
            let pp = random_prior(rng, &space, symmetric);
            let pq = random_prior(rng, &space, symmetric);
            let both = ex::expected_div_pair(&pp, &pq)?;
            let cross = op == "cross_term_pair";
            let exact = if cross { both.cross_term.value } else { both.divergence.value };
            let (ap, aq) = (pp.alpha(), pq.alpha());
            let estimate = mc::estimate_with(cfg, |r| {
                let lp = mc::sample_dirichlet_log(ap, r);
                let lq = mc::sample_dirichlet_log(aq, r);
                Ok(lp
                    .iter()
                    .zip(&lq)
                    .map(|(x, y)| if cross { x.exp() * y } else { x.exp() * (x - y) })
                    .sum())
            })?;
            Ok(McCase { exact, estimate, label: format!("N={n}") })
        }
        "marginal_entropy" => {
            let space = random_factors(rng, 64);
            let k = rng.random_range(0..space.n_factors());
            let prior = random_prior(rng, &space, symmetric);
            let exact = match prior.symmetric_value() {
                Some(a) => ex::expected_marginal_entropy_symmetric(&space, a, k)?,
                None => ex::expected_marginal_entropy(&prior, k)?,
            };
            Ok(McCase {
                exact: exact.value,
                estimate: mc::estimate_expectation(&prior, cfg, |p| Ok(entropy(&marginal_pmf(p, &[k])?)))?,
                label: format!("factors={:?} k={k}", space.factors()),
            })
        }
        "multi_information" => {
            let space = random_factors(rng, 64);
            let prior = random_prior(rng, &space, symmetric);
            let label = format!("factors={:?}", space.factors());
            model_case(&prior, ModelSpec::Independence(space), label)
        }
        "div_partition" => {
            let n = rng.random_range(2..=64);
            let space = flat(n);
            let prior = random_prior(rng, &space, symmetric);
            let part = random_partition(rng, n, 1, n);
            let nu = if c % 4 < 2 {
                ReferenceMeasure::uniform(space)
            } else {
                ReferenceMeasure::new(space, random_alpha(rng, n, 0.2, 3.0))?
            };
            let label = format!("N={n} K={} uniform_nu={}", part.n_blocks(), nu.is_uniform());
            model_case(&prior, ModelSpec::Partition(part, nu), label)
        }
        "div_disjoint_mixture" => {
            let (space, cyl) = if symmetric {
                let n1 = rng.random_range(2..=4usize);
                let n = match n1 {
                    2 => rng.random_range(2..=6),
                    3 => rng.random_range(2..=3),
                    _ => 3,
                };
                let space = StateSpace::new(vec![n1; n])?;
                let splits = rng.random_range(0..=3);
                let cyl = random_homogeneous_cylinders(rng, &space, splits);
                (space, cyl)
            } else {
                let space = random_factors(rng, 64);
                let splits = rng.random_range(0..=4);
                let cyl = random_cylinders(rng, &space, splits);
                (space, cyl)
            };
            let prior = random_prior(rng, &space, symmetric);
            let label = format!("factors={:?} blocks={}", space.factors(), cyl.blocks().len());
            model_case(&prior, ModelSpec::DisjointMixture(cyl), label)
        }
        "div_decomposable" => {
            let space = random_factors(rng, 64);
            let jt = random_junction_tree(rng, &space);
            let prior = random_prior(rng, &space, symmetric);
            let label = format!("factors={:?} facets={:?}", space.factors(), jt.vertices());
            model_case(&prior, ModelSpec::Decomposable(jt), label)
        }
        "subsimplex_volume" => {
            let n = rng.random_range(2..=64usize);
            let t: f64 = rng.random_range(0.05..0.95);
            let c = -(-t.powf(1.0 / (n as f64 - 1.0))).ln_1p();
            let prior = DirichletPrior::symmetric(flat(n), 1.0)?;
            let floor = (-c).exp() / n as f64;
            Ok(McCase {
                exact: ex::subsimplex_volume_bound(c, n)?,
                estimate: mc::estimate_expectation(&prior, cfg, |p| {
                    Ok(if p.weights().iter().all(|&x| x >= floor) { 1.0 } else { 0.0 })
                })?,
                label: format!("N={n} c={c:.3}"),
            })
        }
        _ => unreachable!("unknown operation {op}"),
    }
}

const CLOSED_FORMS: &[&str] = &[
    "entropy",
    "div_uniform",
    "div_to_point",
    "div_from_prior",
    "div_pair",
    "cross_term_pair",
    "marginal_entropy",
    "multi_information",
    "div_partition",
    "div_disjoint_mixture",
    "div_decomposable",
    "subsimplex_volume",
];

/// Every closed form against Monte Carlo on 20 random configurations.
pub fn closed_form_vs_mc(opts: &SelftestOptions) -> Result<CriterionReport> {
    let configs = if opts.quick { 2 } else { 20 };
    let mut failures = Vec::new();
    let mut max_z: f64 = 0.0;
    let mut checks = 0;
    for (t, op) in CLOSED_FORMS.iter().enumerate() {
        let mut rng = opts.rng(300 + t as u64);
        for c in 0..configs {
            let case = closed_form_case(op, c, &mut rng, opts)?;
            let z = z_score(case.exact, &case.estimate);
            max_z = max_z.max(z);
            checks += 1;
            if z > 3.0 {
                failures.push(format!(
                    "{op} #{c} [{}] exact={:.6} mc={:.6}±{:.1e} z={z:.2}",
                    case.label, case.exact, case.estimate.mean, case.estimate.std_error
                ));
            }
        }
    }
    report(
        "closed_form_vs_mc",
        "closed forms agree with Monte Carlo within 3 SE",
        failures.is_empty(),
        format!(
            "{} operations x {configs} configs = {checks} checks at n = {}, max z = {max_z:.2}{}",
            CLOSED_FORMS.len(),
            opts.scaled(200_000),
            fmt_failures(&failures)
        ),
    )
}

/// Identities between formulas, exact to 1e-12.
pub fn cross_formula_identities(opts: &SelftestOptions) -> Result<CriterionReport> {
    let mut rng = opts.rng(4);
    let (mut e1, mut e2, mut e3): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..100 {
        let n = rng.random_range(1..=128usize);
        let prior = DirichletPrior::new(flat(n), random_alpha(&mut rng, n, 0.05, 50.0))?;
        let s = ex::expected_entropy(&prior).value + ex::expected_div_uniform(&prior).value;
        e1 = e1.max((s - (n as f64).ln()).abs());

        let space = random_factors(&mut rng, 64);
        let prior = random_prior(&mut rng, &space, i % 2 == 0);
        let jt = JunctionTree::independence(space);
        let d = ex::expected_div_decomposable(&prior, &jt)?.value;
        let m = ex::expected_multi_information(&prior)?.value;
        e2 = e2.max((d - m).abs());

        // two blocks of two states: block-weighted two-state values
        let mut states = [0usize, 1, 2, 3];
        states.shuffle(&mut rng);
        let blocks = vec![states[..2].to_vec(), states[2..].to_vec()];
        let part = Partition::new(flat(4), blocks.clone())?;
        let u = ReferenceMeasure::uniform(flat(4));
        let prior = random_prior(&mut rng, &flat(4), i % 2 == 0);
        let lhs = ex::expected_div_partition(&prior, &part, &u)?.value;
        let total = prior.total();
        let mut rhs = 0.0;
        for b in &blocks {
            let sub: Vec<f64> = b.iter().map(|&j| prior.alpha()[j]).collect();
            let w = sub.iter().sum::<f64>() / total;
            rhs += w * ex::expected_div_uniform(&DirichletPrior::new(flat(2), sub)?).value;
        }
        e3 = e3.max((lhs - rhs).abs());
        if let Some(a) = prior.symmetric_value() {
            let two = ex::expected_div_uniform_symmetric(2, a)?.value;
            let sym = ex::expected_div_partition_symmetric(a, &part, &u)?.value;
            e3 = e3.max((lhs - two).abs()).max((sym - two).abs());
        }
    }
    let passed = e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12;
    report(
        "cross_formula_identities",
        "entropy/divergence, decomposable/multi-information, partition/aggregation identities",
        passed,
        format!("100 priors each; max errors: H + D = log N {e1:.1e}, decomposable = MI {e2:.1e}, two-block N=4 = N=2 value {e3:.1e}"),
    )
}

/// In-model sampler for the projection check.
fn sample_in_model(rng: &mut ChaCha8Rng, model: &ModelSpec) -> Pmf {
    let space = model.space().clone();
    let n = space.size();
    match model {
        ModelSpec::Uniform(_) => Pmf::uniform(space),
        ModelSpec::FixedPoint(q) => q.clone(),
        ModelSpec::Partition(part, nu) => {
            let w = random_pmf(rng, &flat(part.n_blocks()), 1.0);
            let nu_mass = part.aggregate(nu.values());
            let q = (0..n)
                .map(|i| {
                    let k = part.block_of()[i];
                    w.weights()[k] * nu.values()[i] / nu_mass[k]
                })
                .collect();
            Pmf::from_unnormalized(space, q).expect("pmf")
        }
        ModelSpec::UnionOfPartitions(parts, nu) => {
            let m = ModelSpec::Partition(parts[rng.random_range(0..parts.len())].clone(), nu.clone());
            sample_in_model(rng, &m)
        }
        ModelSpec::Independence(_) => {
            let margs: Vec<Pmf> = space.factors().iter().map(|&f| random_pmf(rng, &flat(f), 1.0)).collect();
            let q = (0..n)
                .map(|x| margs.iter().enumerate().map(|(k, m)| m.weights()[space.coordinate(x, k)]).product())
                .collect();
            Pmf::from_unnormalized(space, q).expect("pmf")
        }
        ModelSpec::Decomposable(jt) => {
            // product of random positive potentials on the facets
            let pots: Vec<(Vec<usize>, Vec<f64>)> = jt
                .vertices()
                .iter()
                .map(|s| {
                    let size = space.subset_size(s);
                    (space.projection_map(s), (0..size).map(|_| rng.random_range(0.05..1.0)).collect())
                })
                .collect();
            let q = (0..n).map(|x| pots.iter().map(|(map, phi)| phi[map[x]]).product()).collect();
            Pmf::from_unnormalized(space, q).expect("pmf")
        }
        ModelSpec::DisjointMixture(cyl) => {
            let w = random_pmf(rng, &flat(cyl.blocks().len()), 1.0);
            let mut q = vec![0.0; n];
            for (k, block) in cyl.blocks().iter().enumerate() {
                let factors: Vec<Vec<f64>> = block
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(j, ys)| {
                        let r = random_pmf(rng, &flat(ys.len()), 1.0);
                        let mut full = vec![0.0; space.factors()[j]];
                        for (y, &v) in ys.iter().zip(r.weights()) {
                            full[*y] = v;
                        }
                        full
                    })
                    .collect();
                for &x in &cyl.partition().blocks()[k] {
                    q[x] = w.weights()[k]
                        * factors.iter().enumerate().map(|(j, f)| f[space.coordinate(x, j)]).product::<f64>();
                }
            }
            Pmf::from_unnormalized(space, q).expect("pmf")
        }
    }
}

/// Closed-form divergences equal `D(p‖q*)` and undercut in-model points.
pub fn projection_correctness(opts: &SelftestOptions) -> Result<CriterionReport> {
    let mut rng = opts.rng(5);
    let n_p = opts.scaled(1000);
    let n_q = opts.scaled(100);
    let s7 = flat(7);
    let part = random_partition(&mut rng, 7, 2, 4);
    let nu = ReferenceMeasure::new(s7.clone(), random_alpha(&mut rng, 7, 0.2, 3.0))?;
    let s232 = StateSpace::new(vec![2, 3, 2])?;
    let s2232 = StateSpace::new(vec![2, 2, 3, 2])?;
    let jt = JunctionTree::from_facets(s2232.clone(), vec![vec![0, 1], vec![1, 2], vec![2, 3]])?;
    let upsilon2: Vec<Partition> = enumerate_bipartitions(6, 2)?.collect();
    let models = vec![
        ModelSpec::Uniform(flat(6)),
        ModelSpec::FixedPoint(random_pmf(&mut rng, &flat(5), 2.0)),
        ModelSpec::Partition(part, nu),
        ModelSpec::Independence(s232.clone()),
        ModelSpec::Decomposable(jt),
        ModelSpec::DisjointMixture(random_cylinders(&mut rng, &s232, 3)),
        ModelSpec::UnionOfPartitions(upsilon2, ReferenceMeasure::uniform(flat(6))),
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for model in &models {
        let mut max_gap: f64 = 0.0;
        let mut violations = 0;
        for _ in 0..n_p {
            let p = random_sparse_pmf(&mut rng, model.space());
            let proj = model.project(&p)?;
            let direct = kl_divergence(&p, &proj.q_star)?.to_f64();
            max_gap = max_gap.max((proj.divergence - direct).abs());
            for _ in 0..n_q {
                let q = sample_in_model(&mut rng, model);
                if proj.divergence > kl_divergence(&p, &q)?.to_f64() + 1e-9 {
                    violations += 1;
                }
            }
        }
        passed &= max_gap <= 1e-10 && violations == 0;
        lines.push(format!("{} gap {max_gap:.1e} undercut-violations {violations}", model.kind_name()));
    }
    report(
        "projection_correctness",
        "closed-form projections are exact and optimal",
        passed,
        format!("{n_p} p x {n_q} in-model q per family; {}", lines.join("; ")),
    )
}

/// Sort-based minimizer equals exhaustive minimization over the family.
pub fn fast_bipartition_minimizer(opts: &SelftestOptions) -> Result<CriterionReport> {
    let mut rng = opts.rng(6);
    let reps = opts.scaled(500);
    let mut max_err: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=10usize {
        let space = flat(n);
        let u = ReferenceMeasure::uniform(space.clone());
        for k in 1..=n / 2 {
            let family: Vec<Partition> = enumerate_bipartitions(n, k)?.collect();
            for r in 0..reps {
                let p = if r % 10 == 9 {
                    // ties
                    let w = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
                    Pmf::from_unnormalized(space.clone(), w)?
                } else {
                    random_pmf(&mut rng, &space, [0.2, 1.0, 5.0][r % 3])
                };
                let oracle = divergence_from_union(&p, &family, &u)?.divergence;
                let fast = mc::fast_min_bipartition(&p, k)?.divergence;
                let fast_value = mc::fast_min_bipartition_value(p.weights(), k);
                let brute = mc::brute_min_bipartition_value(p.weights(), k);
                max_err = max_err
                    .max((fast - oracle).abs())
                    .max((fast_value - oracle).abs())
                    .max((brute - oracle).abs());
                cases += 1;
            }
        }
    }
    report(
        "fast_bipartition_minimizer",
        "fast minimizer matches brute force",
        max_err <= 1e-12,
        format!("{cases} cases (N <= 10, all k, {reps} p each), max |fast - exhaustive| = {max_err:.1e}"),
    )
}

/// Orderings and limits of the union-of-bipartitions experiments.
pub fn union_experiments(opts: &SelftestOptions) -> Result<CriterionReport> {
    let seed = opts.seed;
    let est = |family: Family, n: usize, seed: u64| -> Result<McEstimate> {
        let k = family.block_size(n)?;
        let cfg = opts.mc(family.default_samples(n), seed);
        estimate_union_bipartitions(n, k, 1.0, Minimizer::Auto, cfg)
    };
    let limit = 1.0 - EULER_GAMMA;
    let mut parts = Vec::new();
    let mut passed = true;

    let u40 = est(Family::Upsilon1, 40, seed)?;
    let u10 = est(Family::Upsilon1, 10, seed)?;
    let ok_i = (u40.mean - limit).abs() <= 0.02 && (u40.mean - limit).abs() < (u10.mean - limit).abs();
    passed &= ok_i;
    parts.push(format!(
        "(i) Y1 a=1: N=10 {:.4}, N=40 {:.4}±{:.4} vs 1-gamma {limit:.4} [{}]",
        u10.mean,
        u40.mean,
        u40.std_error,
        ok(ok_i)
    ));

    let beyond = |x: &McEstimate, y: &McEstimate| {
        x.mean - y.mean > 2.0 * (x.std_error.powi(2) + y.std_error.powi(2)).sqrt()
    };
    let y1_4 = est(Family::Upsilon1, 4, seed)?;
    let y2_4 = est(Family::Upsilon2, 4, seed ^ 1)?;
    let mut ok_ii = beyond(&y2_4, &y1_4);
    let mut s = format!("(ii) N=4: Y2 {:.4} > Y1 {:.4}", y2_4.mean, y1_4.mean);
    for n in [6usize, 8, 10] {
        let y1 = est(Family::Upsilon1, n, seed)?;
        let y2 = est(Family::Upsilon2, n, seed ^ 1)?;
        ok_ii &= beyond(&y1, &y2);
        s.push_str(&format!("; N={n}: Y1 {:.4} > Y2 {:.4}", y1.mean, y2.mean));
    }
    passed &= ok_ii;
    parts.push(format!("{s} [{}]", ok(ok_ii)));

    let yh_8 = est(Family::UpsilonHalf, 8, seed ^ 2)?;
    let y2_8 = est(Family::Upsilon2, 8, seed ^ 1)?;
    let ok_iii = beyond(&yh_8, &y2_8);
    passed &= ok_iii;
    parts.push(format!(
        "(iii) N=8: Y_N/2 {:.4} > Y2 {:.4} [{}]",
        yh_8.mean,
        y2_8.mean,
        ok(ok_iii)
    ));

    let c4 = enumerate_bipartitions(4, 2)?.count();
    let c22 = mc::bipartition_blocks(22, 11)?.count();
    let ok_iv = c4 == 3 && c22 == 352_716 && BipartitionFamily::new(22, 11)?.count == 352_716;
    // N = 22 at the default 500 samples, fast minimizer
    let y22 = estimate_union_bipartitions(22, 11, 1.0, Minimizer::Fast, opts.mc(500, seed ^ 3))?;
    // fast vs exhaustive on a few N = 22 draws
    let prior = DirichletPrior::symmetric(flat(22), 1.0)?;
    let mut max_err: f64 = 0.0;
    for i in 0..opts.scaled(20) as u64 {
        let p = mc::sample_dirichlet(&prior, mc::SampleStream::new(seed ^ 4), i);
        let f = mc::fast_min_bipartition_value(p.weights(), 11);
        let b = mc::brute_min_bipartition_value(p.weights(), 11);
        max_err = max_err.max((f - b).abs());
    }
    let ok_iv = ok_iv && max_err <= 1e-12;
    passed &= ok_iv;
    parts.push(format!(
        "(iv) |Y_2| at N=4: {c4}, |Y_11| at N=22: {c22}; N=22 a=1 estimate {:.4}±{:.4} (n={}), fast vs exhaustive at N=22 max err {max_err:.1e} [{}]",
        y22.mean,
        y22.std_error,
        y22.n_samples,
        ok(ok_iv)
    ));
    report(
        "union_experiments",
        "union-of-bipartitions experiments at desk scale",
        passed,
        parts.join("; "),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

/// Reference digamma: recurrence up to x ≥ 50, then the asymptotic series
/// through the x^-20 Bernoulli term.
fn digamma_oracle(x: f64) -> f64 {
    const B: [f64; 10] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
    ];
    let mut shift = KahanSum::default();
    let mut y = x;
    while y < 50.0 {
        shift.add(1.0 / y);
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let mut pow = inv2;
    let mut series = KahanSum::default();
    series.add(y.ln());
    series.add(-0.5 / y);
    for (k, b) in B.iter().enumerate() {
        series.add(-b / (2.0 * (k + 1) as f64) * pow);
        pow *= inv2;
    }
    series.value() - shift.value()
}

/// Digamma accuracy and the harmonic-number gap.
pub fn special_function_accuracy(_: &SelftestOptions) -> Result<CriterionReport> {
    let mut max_rel: f64 = 0.0;
    let mut worst = 0.0;
    for i in 0..1000 {
        let x = 1e-6 * 1e14f64.powf(i as f64 / 999.0);
        let (got, want) = (digamma(x)?, digamma_oracle(x));
        let rel = ((got - want) / want).abs();
        if rel > max_rel {
            max_rel = rel;
            worst = x;
        }
    }
    let mut gap_ok = true;
    let mut prev = f64::INFINITY;
    for k in 1..=10_000u64 {
        let g = harmonic_int(k) - (k as f64).ln();
        gap_ok &= g > 0.0 && g < prev;
        prev = g;
    }
    report(
        "special_function_accuracy",
        "digamma accuracy and harmonic gap monotonicity",
        max_rel <= 1e-12 && gap_ok,
        format!(
            "1000 log-spaced x in [1e-6, 1e8]: max relative error {max_rel:.2e} at x = {worst:.4e}; h(k) - log k positive and decreasing for k <= 1e4: {gap_ok}"
        ),
    )
}

/// Aggregated Dirichlet draws match direct draws of the aggregated prior.
pub fn aggregation_ks(opts: &SelftestOptions) -> Result<CriterionReport> {
    let mut rng = opts.rng(9);
    let n_samples = opts.scaled(100_000);
    let crit = mc::ks_critical_value(n_samples, n_samples, 0.01);
    let mut max_d: f64 = 0.0;
    let mut failures = Vec::new();
    for c in 0..10 {
        let n = rng.random_range(3..=10usize);
        let prior = DirichletPrior::new(flat(n), random_alpha(&mut rng, n, 0.2, 5.0))?;
        let part = random_partition(&mut rng, n, 2, n - 1);
        let agg = aggregate_prior(&prior, &part)?;
        let first = part.blocks()[0].clone();
        let alpha = prior.alpha();
        let a = mc::sample_values(opts.mc(100_000, rng.random()), |r| {
            let w = mc::sample_dirichlet_weights(alpha, r);
            Ok(first.iter().map(|&i| w[i]).sum())
        })?;
        let agg_alpha = agg.alpha();
        let b = mc::sample_values(opts.mc(100_000, rng.random()), |r| {
            Ok(mc::sample_dirichlet_weights(agg_alpha, r)[0])
        })?;
        let d = mc::ks_statistic(&a, &b);
        max_d = max_d.max(d);
        if d >= crit {
            failures.push(format!("#{c} N={n} K={} D={d:.4}", part.n_blocks()));
        }
    }
    report(
        "aggregation_ks",
        "aggregation property, two-sample KS",
        failures.is_empty(),
        format!(
            "10 (alpha, partition) pairs at n = {n_samples}: max KS {max_d:.4} vs 1% critical {crit:.4}{}",
            if failures.is_empty() { String::new() } else { format!("; above: {}", failures.join(", ")) }
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_known_values() {
        assert!((digamma_oracle(1.0) + EULER_GAMMA).abs() < 1e-15);
        assert!((digamma_oracle(0.5) + EULER_GAMMA + 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn random_structures_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let space = random_factors(&mut rng, 64);
            random_junction_tree(&mut rng, &space);
            random_cylinders(&mut rng, &space, 5);
            let h = StateSpace::new(vec![2, 2, 2]).unwrap();
            let cyl = random_homogeneous_cylinders(&mut rng, &h, 3);
            let prior = DirichletPrior::symmetric(h, 1.0).unwrap();
            // homogeneous blocks take the symmetric branch
            assert_eq!(
                ex::expected_divergence(&prior, &ModelSpec::DisjointMixture(cyl)).unwrap().formula,
                crate::FormulaId::DivDisjointMixtureSymmetric
            );
        }
    }

    #[test]
    fn quick_run_reports_every_criterion() {
        let opts = SelftestOptions { quick: true, ..Default::default() };
        let only = vec!["special_function_accuracy".to_string(), "cross_formula_identities".to_string()];
        let reports = run(&opts, &only);
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.passed), "{reports:?}");
    }
}
