//! `divexp`: expected divergences from discrete models under Dirichlet priors.

mod input;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use divexp::expectation::{self as ex, AsymptoticParams, ExpectationResult, Quantity, Regime};
use divexp::montecarlo::{self as mc, ExperimentConfig, Family, Field, Minimizer};
use divexp::selftest::{self, SelftestOptions};
use divexp::simplex::marginal_pmf;
use divexp::{entropy, DirichletPrior, McConfig, ModelDoc, ModelSpec, StateSpace};
use serde_json::json;

use input::SymPrior;
use output::{alpha_digest, factors_label, Format, Row, Table};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(std::io::Error),
}

impl From<divexp::Error> for CliError {
    fn from(e: divexp::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser)]
#[command(name = "divexp", version, about = "Expected KL divergences from discrete models under Dirichlet priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form expectations.
    Exact(ExactArgs),
    /// D(p‖ℳ) and the projection for one distribution.
    Pointwise(PointwiseArgs),
    /// Monte Carlo estimate of an expectation.
    Mc(McArgs),
    /// Union-of-bipartitions experiments over an (N, a) grid.
    Sweep(SweepArgs),
    /// Divergence field on the triangle Δ_2.
    Field(FieldArgs),
    /// Runs the acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Omits the timestamp comment line and reports wall times as 0.
    #[arg(long)]
    no_header_timestamp: bool,
}

#[derive(Args)]
struct ModelArgs {
    /// Model kind (`uniform`, `independence`, ...) or inline JSON.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Factor sizes, e.g. `2,3,2`.
    #[arg(long)]
    factors: Option<String>,
}

#[derive(Args)]
struct PriorArgs {
    /// Symmetric prior `a=<x>[,N=<n>]`.
    #[arg(long)]
    sym_prior: Option<String>,
    /// JSON array of α, or `{"alpha": [...], "factors": [...]}`.
    #[arg(long)]
    prior_file: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    prior: PriorArgs,
    /// divergence, entropy, marginal_entropy, div_from_prior, div_pair,
    /// cross_term, max_divergence, subsimplex_volume or asymptotic.
    #[arg(long, default_value = "divergence")]
    quantity: String,
    /// Factor index for marginal_entropy.
    #[arg(long)]
    k: Option<usize>,
    /// Fixed pmf for div_from_prior.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    p_file: Option<PathBuf>,
    /// Second prior for div_pair and cross_term.
    #[arg(long)]
    q_sym_prior: Option<String>,
    #[arg(long)]
    q_prior_file: Option<PathBuf>,
    /// Asymptotic target: entropy or div_uniform.
    #[arg(long)]
    of: Option<String>,
    #[arg(long)]
    regime: Option<String>,
    /// Threshold for subsimplex_volume, or Na for the fixed-Na regime.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PointwiseArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    p_file: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    prior: PriorArgs,
    /// divergence, entropy or marginal_entropy.
    #[arg(long, default_value = "divergence")]
    quantity: String,
    /// Factor index for marginal_entropy.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = divexp::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// upsilon1, upsilon2 or upsilon_half.
    #[arg(long)]
    family: String,
    /// Grid `start:step:end` or a comma list.
    #[arg(long = "N")]
    n_grid: String,
    /// Comma list of concentrations.
    #[arg(long)]
    a: String,
    /// Samples per cell; family defaults when absent.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = divexp::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "auto")]
    minimizer: String,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FieldArgs {
    /// A partition or union_of_partitions model on 3 states.
    #[command(flatten)]
    model: ModelArgs,
    /// Optional density weight `a=<x>`.
    #[arg(long)]
    sym_prior: Option<String>,
    #[arg(long, default_value_t = 50)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SelftestArgs {
    /// Comma list of criterion ids.
    #[arg(long)]
    only: Option<String>,
    /// Reduced sample sizes.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = divexp::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Writes the reports as JSON instead of text lines.
    #[arg(long)]
    json: bool,
}

fn parse_factors(s: &Option<String>) -> Result<Option<Vec<usize>>, CliError> {
    s.as_deref().map(|f| input::parse_list(f, "--factors")).transpose()
}

fn sym(s: &Option<String>) -> Result<Option<SymPrior>, CliError> {
    s.as_deref().map(input::parse_sym_prior).transpose()
}

struct Setup {
    space: StateSpace,
    doc: Option<ModelDoc>,
    prior: Option<DirichletPrior>,
}

/// Resolves the state space, model document and prior from the flags.
fn setup(model: &ModelArgs, prior: Option<&PriorArgs>) -> Result<Setup, CliError> {
    let doc = input::model_doc(model.model.as_deref(), model.model_file.as_deref())?;
    let sym_prior = prior.map(|p| sym(&p.sym_prior)).transpose()?.flatten();
    let explicit = prior
        .and_then(|p| p.prior_file.as_deref())
        .map(input::read_prior_file)
        .transpose()?;
    let mut factors = parse_factors(&model.factors)?;
    if factors.is_none() {
        factors = explicit.as_ref().and_then(|(_, f)| f.clone());
    }
    let n_hint = sym_prior
        .and_then(|s| s.n)
        .or_else(|| explicit.as_ref().map(|(a, _)| a.len()));
    let space = input::resolve_space(factors.as_deref(), doc.as_ref(), n_hint)?;
    let prior = match prior {
        Some(_) if sym_prior.is_some() || explicit.is_some() => {
            Some(input::build_prior(&space, sym_prior, explicit.map(|(a, _)| a))?)
        }
        _ => None,
    };
    Ok(Setup { space, doc, prior })
}

fn need_model(s: &Setup) -> Result<ModelSpec, CliError> {
    let doc = s
        .doc
        .as_ref()
        .ok_or_else(|| CliError::Validation("a model is required: --model or --model-file".into()))?;
    input::build_model(doc, &s.space)
}

fn need_prior(s: &Setup) -> Result<&DirichletPrior, CliError> {
    s.prior
        .as_ref()
        .ok_or_else(|| CliError::Validation("a prior is required: --sym-prior or --prior-file".into()))
}

fn base_row(command: &'static str, space: &StateSpace, prior: Option<&DirichletPrior>) -> Row {
    Row {
        command,
        n: Some(space.size()),
        factors: factors_label(space.factors()),
        a_or_alpha_digest: prior
            .map(|p| alpha_digest(p.alpha(), p.symmetric_value()))
            .unwrap_or_default(),
        ..Row::default()
    }
}

fn exact_row(mut row: Row, r: ExpectationResult) -> Row {
    row.quantity = r.formula.to_string();
    row.value = r.value;
    row.error_order = r.error_order.unwrap_or("exact").to_string();
    row
}

fn run_exact(args: &ExactArgs) -> Result<Table, CliError> {
    let start = Instant::now();
    let q = args.quantity.as_str();
    if q == "asymptotic" || q == "subsimplex_volume" {
        return run_exact_symmetric_only(args);
    }
    let s = setup(&args.model, Some(&args.prior))?;
    let mut row = base_row("exact", &s.space, s.prior.as_ref());
    if let Some(doc) = &s.doc {
        row.model_kind = input::build_model(doc, &s.space)?.kind_name().to_string();
    }
    let result = match q {
        "divergence" => {
            let model = need_model(&s)?;
            ex::expected_divergence(need_prior(&s)?, &model)?
        }
        "entropy" => {
            let prior = need_prior(&s)?;
            match prior.symmetric_value() {
                Some(a) => ex::expected_entropy_symmetric(s.space.size(), a)?,
                None => ex::expected_entropy(prior),
            }
        }
        "marginal_entropy" => {
            let prior = need_prior(&s)?;
            let k = args
                .k
                .ok_or_else(|| CliError::Validation("marginal_entropy needs --k".into()))?;
            row.k = Some(k);
            match prior.symmetric_value() {
                Some(a) => ex::expected_marginal_entropy_symmetric(&s.space, a, k)?,
                None => ex::expected_marginal_entropy(prior, k)?,
            }
        }
        "div_from_prior" => {
            let p = input::read_pmf(&s.space, args.p.as_deref(), args.p_file.as_deref())?;
            ex::expected_div_from_prior(&p, need_prior(&s)?)?
        }
        "div_pair" | "cross_term" => {
            let other = setup(
                &args.model,
                Some(&PriorArgs {
                    sym_prior: args.q_sym_prior.clone(),
                    prior_file: args.q_prior_file.clone(),
                }),
            )?;
            let pq = need_prior(&other)?;
            let pair = ex::expected_div_pair(need_prior(&s)?, pq)?;
            if q == "div_pair" {
                pair.divergence
            } else {
                pair.cross_term
            }
        }
        "max_divergence" => {
            let model = need_model(&s)?;
            let ModelSpec::Partition(part, _) = &model else {
                return Err(CliError::Validation("max_divergence needs a partition model".into()));
            };
            row.quantity = "max_divergence_partition".into();
            row.value = divexp::models::max_divergence_partition_model(part);
            row.error_order = "exact".into();
            row.wall_time_ms = start.elapsed().as_millis() as u64;
            return Ok(Table::new(vec![row]));
        }
        other => return Err(CliError::Validation(format!("unknown --quantity `{other}`"))),
    };
    let mut row = exact_row(row, result);
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(Table::new(vec![row]))
}

/// Quantities that only need `a`, `N` and `c`.
fn run_exact_symmetric_only(args: &ExactArgs) -> Result<Table, CliError> {
    let start = Instant::now();
    let sp = sym(&args.prior.sym_prior)?;
    let mut row = Row {
        command: "exact",
        n: sp.and_then(|s| s.n),
        a_or_alpha_digest: sp.map(|s| format!("a={}", s.a)).unwrap_or_default(),
        ..Row::default()
    };
    row.factors = row.n.map(|n| n.to_string()).unwrap_or_default();
    let result = if args.quantity == "subsimplex_volume" {
        let n = row
            .n
            .ok_or_else(|| CliError::Validation("subsimplex_volume needs N in --sym-prior".into()))?;
        let c = args
            .c
            .ok_or_else(|| CliError::Validation("subsimplex_volume needs --c".into()))?;
        ExpectationResult {
            value: ex::subsimplex_volume_bound(c, n)?,
            formula: divexp::FormulaId::SubsimplexVolume,
            error_order: None,
        }
    } else {
        let of: Quantity = args
            .of
            .as_deref()
            .ok_or_else(|| CliError::Validation("asymptotic needs --of entropy|div_uniform".into()))?
            .parse()?;
        let regime: Regime = args
            .regime
            .as_deref()
            .ok_or_else(|| CliError::Validation("asymptotic needs --regime".into()))?
            .parse()?;
        let params = AsymptoticParams {
            n: row.n,
            a: sp.map(|s| s.a),
            c: args.c,
        };
        ex::asymptotic_eval(of, regime, params)?
    };
    let mut row = exact_row(row, result);
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(Table::new(vec![row]))
}

fn run_pointwise(args: &PointwiseArgs) -> Result<Table, CliError> {
    let start = Instant::now();
    let s = setup(&args.model, None)?;
    let model = need_model(&s)?;
    let p = input::read_pmf(&s.space, args.p.as_deref(), args.p_file.as_deref())?;
    let proj = model.project(&p)?;
    let mut row = base_row("pointwise", &s.space, None);
    row.quantity = "divergence".into();
    row.model_kind = model.kind_name().into();
    row.value = proj.divergence;
    row.error_order = "exact".into();
    row.extra = Some(json!({
        "q_star": proj.q_star.weights(),
        "argmin_member": proj.argmin_member,
    }));
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(Table::new(vec![row]))
}

fn run_mc(args: &McArgs) -> Result<Table, CliError> {
    let start = Instant::now();
    let s = setup(&args.model, Some(&args.prior))?;
    let prior = need_prior(&s)?;
    let cfg = McConfig {
        n_samples: args.n,
        seed: args.seed,
        workers: args.workers,
    };
    let mut row = base_row("mc", &s.space, Some(prior));
    let est = match args.quantity.as_str() {
        "divergence" => {
            let model = need_model(&s)?;
            row.quantity = "divergence".into();
            row.model_kind = model.kind_name().into();
            mc::estimate_expected_divergence(prior, &model, cfg)?
        }
        "entropy" => {
            row.quantity = "entropy".into();
            mc::estimate_expectation(prior, cfg, |p| Ok(entropy(p)))?
        }
        "marginal_entropy" => {
            let k = args
                .k
                .ok_or_else(|| CliError::Validation("marginal_entropy needs --k".into()))?;
            if k >= s.space.n_factors() {
                return Err(divexp::Error::IndexOutOfRange {
                    what: "factor",
                    index: k,
                    bound: s.space.n_factors(),
                }
                .into());
            }
            row.quantity = "marginal_entropy".into();
            row.k = Some(k);
            mc::estimate_expectation(prior, cfg, |p| Ok(entropy(&marginal_pmf(p, &[k])?)))?
        }
        other => return Err(CliError::Validation(format!("unknown --quantity `{other}`"))),
    };
    row.n_samples = Some(est.n_samples);
    row.seed = Some(est.seed);
    row.value = est.mean;
    row.std_error = Some(est.std_error);
    row.error_order = "monte_carlo".into();
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(Table::new(vec![row]))
}

fn run_sweep(args: &SweepArgs) -> Result<Table, CliError> {
    let family: Family = args.family.parse()?;
    let a_list: Vec<f64> = input::parse_list(&args.a, "--a")?;
    if a_list.is_empty() {
        return Err(CliError::Validation("--a: empty grid".into()));
    }
    let cfg = ExperimentConfig {
        family,
        n_list: input::parse_grid(&args.n_grid)?,
        a_list: a_list.clone(),
        n_samples: args.n,
        seed: args.seed,
        minimizer: args.minimizer.parse::<Minimizer>()?,
        workers: args.workers,
    };
    let mut rows = Vec::new();
    for r in mc::experiment_union_partitions(&cfg)? {
        rows.push(Row {
            command: "sweep",
            quantity: format!("div_union_{}", r.family),
            model_kind: "union_of_partitions".into(),
            n: Some(r.n),
            factors: r.n.to_string(),
            a_or_alpha_digest: format!("a={}", r.a),
            k: Some(r.k),
            n_samples: Some(r.n_samples),
            seed: Some(r.seed),
            value: r.estimate,
            std_error: Some(r.std_error),
            error_order: "monte_carlo".into(),
            wall_time_ms: r.wall_time_ms,
            tail: Vec::new(),
            extra: Some(json!({
                "family": r.family,
                "minimizer": r.minimizer,
                "family_size": r.family_size.to_string(),
            })),
        });
    }
    for &a in &a_list {
        rows.push(Row {
            command: "sweep",
            quantity: "asymptote".into(),
            model_kind: "union_of_partitions".into(),
            a_or_alpha_digest: format!("a={a}"),
            value: mc::asymptote(a),
            error_order: "limit".into(),
            ..Row::default()
        });
    }
    Ok(Table::new(rows))
}

fn run_field(args: &FieldArgs) -> Result<Table, CliError> {
    let start = Instant::now();
    let s = setup(&args.model, None)?;
    let model = need_model(&s)?;
    let field = match &model {
        ModelSpec::Partition(part, nu) if nu.is_uniform() => Field::DivPartition(part.clone()),
        ModelSpec::UnionOfPartitions(parts, nu) if nu.is_uniform() => Field::DivUnion(parts.clone()),
        _ => {
            return Err(CliError::Validation(
                "field needs a partition or union_of_partitions model with uniform nu".into(),
            ))
        }
    };
    let weight = sym(&args.sym_prior)?
        .map(|sp| DirichletPrior::symmetric(s.space.clone(), sp.a))
        .transpose()?;
    let points = mc::simplex_field(&field, weight.as_ref(), args.resolution)?;
    let elapsed = start.elapsed().as_millis() as u64;
    let base = base_row("field", &s.space, weight.as_ref());
    let quantity = if weight.is_some() { "weighted_divergence" } else { "divergence" };
    let rows = points
        .into_iter()
        .map(|pt| {
            let mut row = base.clone();
            row.quantity = quantity.into();
            row.model_kind = model.kind_name().into();
            row.value = pt.value;
            row.error_order = "exact".into();
            row.wall_time_ms = elapsed;
            row.tail = vec![
                pt.p[0].to_string(),
                pt.p[1].to_string(),
                pt.p[2].to_string(),
                pt.area_weight.to_string(),
                pt.masked.to_string(),
            ];
            row.extra = Some(json!({
                "p": pt.p,
                "area_weight": pt.area_weight,
                "masked": pt.masked,
            }));
            row
        })
        .collect();
    Ok(Table {
        tail_columns: vec!["p0", "p1", "p2", "area_weight", "masked"],
        rows,
    })
}

fn run_selftest(args: &SelftestArgs) -> Result<bool, CliError> {
    let opts = SelftestOptions {
        seed: args.seed,
        quick: args.quick,
        workers: args.workers,
    };
    let only: Vec<String> = args
        .only
        .as_deref()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect())
        .unwrap_or_default();
    for id in &only {
        if !selftest::CRITERIA.iter().any(|(c, _)| c == id) {
            return Err(CliError::Validation(format!("unknown criterion `{id}`")));
        }
    }
    let reports = selftest::run(&opts, &only);
    let mut out = std::io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &reports).map_err(std::io::Error::from)?;
        writeln!(out)?;
    } else {
        for r in &reports {
            writeln!(out, "{}", r.line())?;
        }
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn emit(table: Table, output: &OutputArgs) -> Result<(), CliError> {
    let mut table = table;
    if output.no_header_timestamp {
        for r in &mut table.rows {
            r.wall_time_ms = 0;
        }
    }
    let stamp = !output.no_header_timestamp;
    match &output.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            table.write(&mut f, output.format, stamp)?;
            f.flush()?;
        }
        None => table.write(&mut std::io::stdout().lock(), output.format, stamp)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (table, output) = match &cli.command {
        Command::Exact(a) => (run_exact(a)?, &a.output),
        Command::Pointwise(a) => (run_pointwise(a)?, &a.output),
        Command::Mc(a) => (run_mc(a)?, &a.output),
        Command::Sweep(a) => (run_sweep(a)?, &a.output),
        Command::Field(a) => (run_field(a)?, &a.output),
        Command::Selftest(a) => return run_selftest(a),
    };
    emit(table, output)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
    }
}
