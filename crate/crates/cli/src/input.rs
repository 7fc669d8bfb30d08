//! Parsing of models, priors, pmfs and grids from flags and files.

use std::path::Path;

use divexp::{DirichletPrior, ModelDoc, ModelSpec, Pmf, StateSpace};
use serde::Deserialize;

use crate::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse()
                .map_err(|_| CliError::Validation(format!("{what}: entry {i} `{t}` is not a number")))
        })
        .collect()
}

/// `start:step:end` (inclusive), `start:end`, or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Validation(format!("--N: cannot parse grid `{s}`"));
    let grid = if s.contains(':') {
        let parts: Vec<usize> = s
            .split(':')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (start, step, end) = match parts[..] {
            [a, b] => (a, 1, b),
            [a, s, b] => (a, s, b),
            _ => return Err(bad()),
        };
        if step == 0 || start > end {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        parse_list(s, "--N")?
    };
    if grid.is_empty() {
        return Err(CliError::Validation("--N: empty grid".into()));
    }
    Ok(grid)
}

/// `a=<x>` with optional `,N=<n>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymPrior {
    pub a: f64,
    pub n: Option<usize>,
}

pub fn parse_sym_prior(s: &str) -> Result<SymPrior, CliError> {
    let mut a = None;
    let mut n = None;
    for item in s.split(',') {
        let (key, val) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--sym-prior: expected key=value, got `{item}`")))?;
        let bad = || CliError::Validation(format!("--sym-prior: bad value for `{key}`: `{val}`"));
        match key.trim() {
            "a" => a = Some(val.trim().parse::<f64>().map_err(|_| bad())?),
            "N" => n = Some(val.trim().parse::<usize>().map_err(|_| bad())?),
            other => return Err(CliError::Validation(format!("--sym-prior: unknown key `{other}`"))),
        }
    }
    let a = a.ok_or_else(|| CliError::Validation("--sym-prior: missing `a`".into()))?;
    Ok(SymPrior { a, n })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PriorFile {
    Alpha(Vec<f64>),
    Doc {
        alpha: Vec<f64>,
        #[serde(default)]
        factors: Option<Vec<usize>>,
    },
}

/// An explicit concentration vector from a JSON file: either a bare array or
/// `{"alpha": [...], "factors": [...]}`.
pub fn read_prior_file(path: &Path) -> Result<(Vec<f64>, Option<Vec<usize>>), CliError> {
    let doc: PriorFile = json(&read_file(path)?, &format!("prior file {}", path.display()))?;
    Ok(match doc {
        PriorFile::Alpha(a) => (a, None),
        PriorFile::Doc { alpha, factors } => (alpha, factors),
    })
}

/// Model documents from `--model` (a kind name or inline JSON) or `--model-file`.
pub fn model_doc(model: Option<&str>, file: Option<&Path>) -> Result<Option<ModelDoc>, CliError> {
    match (model, file) {
        (Some(_), Some(_)) => Err(CliError::Validation(
            "give either --model or --model-file, not both".into(),
        )),
        (None, Some(path)) => Ok(Some(json(&read_file(path)?, &format!("model file {}", path.display()))?)),
        (Some(m), None) if m.trim_start().starts_with('{') => Ok(Some(json(m, "--model")?)),
        (Some(kind), None) => Ok(Some(json(&format!("{{\"kind\":\"{kind}\"}}"), "--model")?)),
        (None, None) => Ok(None),
    }
}

/// The state space implied by the flags, in order of precedence.
pub fn resolve_space(
    factors: Option<&[usize]>,
    doc: Option<&ModelDoc>,
    n_hint: Option<usize>,
) -> Result<StateSpace, CliError> {
    let space = if let Some(f) = factors {
        StateSpace::new(f.to_vec())?
    } else if let Some(f) = doc.and_then(|d| d.factors.clone()) {
        StateSpace::new(f)?
    } else if let Some(n) = n_hint {
        StateSpace::flat(n)?
    } else {
        return Err(CliError::Validation(
            "state space unknown: pass --factors, a model with `factors`, or N in the prior".into(),
        ));
    };
    if let Some(n) = n_hint {
        if n != space.size() {
            return Err(CliError::Validation(format!(
                "prior has N = {n} but the state space has {} states",
                space.size()
            )));
        }
    }
    Ok(space)
}

pub fn build_model(doc: &ModelDoc, space: &StateSpace) -> Result<ModelSpec, CliError> {
    let model = doc.build(Some(space))?;
    if model.space() != space {
        return Err(CliError::Validation(format!(
            "model factors {:?} disagree with the state space {:?}",
            model.space().factors(),
            space.factors()
        )));
    }
    Ok(model)
}

pub fn build_prior(
    space: &StateSpace,
    sym: Option<SymPrior>,
    explicit: Option<Vec<f64>>,
) -> Result<DirichletPrior, CliError> {
    match (sym, explicit) {
        (Some(s), None) => Ok(DirichletPrior::symmetric(space.clone(), s.a)?),
        (None, Some(alpha)) => Ok(DirichletPrior::new(space.clone(), alpha)?),
        (Some(_), Some(_)) => Err(CliError::Validation(
            "give either --sym-prior or --prior-file, not both".into(),
        )),
        (None, None) => Err(CliError::Validation("a prior is required: --sym-prior or --prior-file".into())),
    }
}

/// A pmf from `--p` (comma list) or a JSON array file; must sum to 1.
pub fn read_pmf(space: &StateSpace, list: Option<&str>, file: Option<&Path>) -> Result<Pmf, CliError> {
    let w: Vec<f64> = match (list, file) {
        (Some(s), None) => parse_list(s, "--p")?,
        (None, Some(path)) => json(&read_file(path)?, &format!("pmf file {}", path.display()))?,
        _ => return Err(CliError::Validation("give exactly one of --p or --p-file".into())),
    };
    Ok(Pmf::new(space.clone(), w)?)
}
