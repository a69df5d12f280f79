//! TOML run configuration.
//!
//! ```toml
//! [model]
//! kind = "independent"            # independent | multinomial | explicit | mvg
//! marginals = [{ dist = "poisson", lambda = 1.0, repeat = 10 }]
//!
//! [structure]                     # system, signature, sweep
//! preset = "bridge"               # or path_sets / cut_sets
//!
//! [request]
//! moments = [1, 2]
//! d = 0.0005
//! ```
//!
//! See `configs/` for one file per subcommand.

use std::path::Path;

use num_rational::Rational64;
use ordstat::coherent::Expansion;
use ordstat::{
    ExplicitPmf, JointModel, MarginalDist, MvgParams, NegBinRule, Subset, SystemStructure,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub structure: Option<StructureSpec>,
    #[serde(default)]
    pub request: RequestSpec,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub validate: ValidateSpec,
}

/// `kind` selects which of the remaining fields apply.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// independent
    pub marginals: Option<Vec<MarginalSpec>>,
    pub exchangeable: Option<bool>,
    /// multinomial
    pub trials: Option<u32>,
    pub cells: Option<Vec<f64>>,
    /// explicit and mvg
    pub n: Option<usize>,
    pub points: Option<Vec<PointSpec>>,
    pub shocks: Option<Vec<ShockSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Independent,
    Multinomial,
    Explicit,
    Mvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Poisson,
    Negbin,
    Geometric,
    Finite,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub dist: DistKind,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub pi: Option<f64>,
    pub probs: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<u32>,
    pub p: f64,
}

/// `theta` for one listed set, or for every set of the given size.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    pub set: Option<Vec<usize>>,
    pub size: Option<usize>,
    pub theta: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub path_sets: Option<Vec<Vec<usize>>>,
    pub cut_sets: Option<Vec<Vec<usize>>>,
    pub samaniego: Option<Vec<Fraction>>,
}

/// A number written either as a TOML float/integer or as a string `"a/b"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Fraction {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Fraction {
    pub fn to_rational(&self) -> CliResult<Rational64> {
        match self {
            Fraction::Int(v) => Ok(Rational64::from_integer(*v)),
            Fraction::Float(v) => Rational64::approximate_float(*v)
                .ok_or_else(|| CliError::config(format!("cannot represent {v} as a fraction"))),
            Fraction::Text(s) => {
                let s = s.trim();
                let parsed = match s.split_once('/') {
                    Some((a, b)) => a
                        .trim()
                        .parse::<i64>()
                        .ok()
                        .zip(b.trim().parse::<i64>().ok())
                        .filter(|&(_, b)| b != 0)
                        .map(|(a, b)| Rational64::new(a, b)),
                    None => s.parse::<i64>().ok().map(Rational64::from_integer),
                };
                parsed.ok_or_else(|| {
                    CliError::config(format!("structure.samaniego: bad fraction `{s}`"))
                })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RequestSpec {
    pub moments: Option<Vec<u32>>,
    pub ranks: Option<Vec<usize>>,
    pub d: Option<f64>,
    pub negbin_rule: Option<RuleSpec>,
    pub expansion: Option<ExpansionSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSpec {
    Certified,
    Published,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionSpec {
    Auto,
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    Geometric,
    Poisson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    pub samples: Option<u64>,
    pub sigmas: Option<f64>,
}

pub const DEFAULT_D: f64 = 5e-4;
pub const DEFAULT_SAMPLES: u64 = 200_000;
pub const DEFAULT_SIGMAS: f64 = 3.0;

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn model(&self) -> CliResult<JointModel> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::config("missing [model] section"))?
            .build()
    }

    /// MVG parameters when the model is MVG.
    pub fn mvg(&self) -> CliResult<Option<MvgParams>> {
        match &self.model {
            Some(m) => m.mvg(),
            None => Ok(None),
        }
    }

    pub fn structure(&self) -> CliResult<SystemStructure> {
        self.structure
            .as_ref()
            .ok_or_else(|| CliError::config("missing [structure] section"))?
            .build()
    }

    pub fn moments(&self) -> CliResult<Vec<u32>> {
        let m = self.request.moments.clone().unwrap_or_else(|| vec![1, 2]);
        if m.is_empty() || m.contains(&0) {
            return Err(CliError::config(
                "request.moments: orders must be positive and non-empty",
            ));
        }
        Ok(m)
    }

    pub fn bound(&self, cli: Option<f64>) -> CliResult<f64> {
        let d = cli.or(self.request.d).unwrap_or(DEFAULT_D);
        if !(d > 0.0 && d.is_finite()) {
            return Err(CliError::config(format!("d must be positive, got {d}")));
        }
        Ok(d)
    }

    pub fn negbin_rule(&self) -> NegBinRule {
        match self.request.negbin_rule {
            Some(RuleSpec::Published) => NegBinRule::Published,
            _ => NegBinRule::Certified,
        }
    }

    pub fn expansion(&self) -> Expansion {
        match self.request.expansion {
            Some(ExpansionSpec::Alpha) => Expansion::Alpha,
            Some(ExpansionSpec::Beta) => Expansion::Beta,
            _ => Expansion::Auto,
        }
    }

    pub fn ranks(&self, n: usize) -> CliResult<Vec<usize>> {
        match &self.request.ranks {
            None => Ok((1..=n).collect()),
            Some(r) => {
                if let Some(bad) = r.iter().find(|&&r| r == 0 || r > n) {
                    return Err(CliError::config(format!(
                        "request.ranks: {bad} outside 1..={n}"
                    )));
                }
                Ok(r.clone())
            }
        }
    }

    pub fn grid(&self) -> CliResult<(SweepFamily, Vec<f64>)> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::config("missing [sweep] section"))?;
        let grid = match (&s.values, s.from, s.to, s.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(k)) if a < b => {
                // open interval: endpoints excluded
                (1..=k)
                    .map(|i| a + (b - a) * i as f64 / (k + 1) as f64)
                    .collect()
            }
            _ => {
                return Err(CliError::config(
                    "sweep: give either `values` or `from` < `to` with `points`",
                ))
            }
        };
        Ok((s.family, grid))
    }
}

fn need<T: Clone>(v: &Option<T>, field: &str) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| CliError::config(format!("missing field `{field}`")))
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<JointModel> {
        match self.kind {
            ModelKind::Independent => {
                let mut list = Vec::new();
                for (k, m) in need(&self.marginals, "model.marginals")?.iter().enumerate() {
                    let dist = m
                        .build()
                        .map_err(|e| CliError::config(format!("model.marginals[{k}]: {e}")))?;
                    list.extend(std::iter::repeat_n(dist, m.repeat));
                }
                if list.is_empty() {
                    return Err(CliError::config("model.marginals: no components"));
                }
                let model = JointModel::independent(list)?;
                Ok(match self.exchangeable {
                    Some(flag) => model.with_exchangeable(flag),
                    None => model,
                })
            }
            ModelKind::Multinomial => Ok(ExplicitPmf::multinomial(
                need(&self.trials, "model.trials")?,
                &need(&self.cells, "model.cells")?,
            )?
            .into()),
            ModelKind::Explicit => {
                let points = need(&self.points, "model.points")?;
                Ok(ExplicitPmf::new(
                    need(&self.n, "model.n")?,
                    points.into_iter().map(|p| (p.x, p.p)),
                )?
                .into())
            }
            ModelKind::Mvg => Ok(mvg_params(
                need(&self.n, "model.n")?,
                &need(&self.shocks, "model.shocks")?,
            )?
            .into()),
        }
    }

    fn mvg(&self) -> CliResult<Option<MvgParams>> {
        match self.kind {
            ModelKind::Mvg => mvg_params(
                need(&self.n, "model.n")?,
                &need(&self.shocks, "model.shocks")?,
            )
            .map(Some),
            _ => Ok(None),
        }
    }
}

impl MarginalSpec {
    fn build(&self) -> CliResult<MarginalDist> {
        Ok(match self.dist {
            DistKind::Poisson => MarginalDist::poisson(need(&self.lambda, "lambda")?)?,
            DistKind::Negbin => MarginalDist::negbin(need(&self.r, "r")?, need(&self.p, "p")?)?,
            DistKind::Geometric => MarginalDist::geometric(need(&self.pi, "pi")?)?,
            DistKind::Finite => MarginalDist::finite(need(&self.probs, "probs")?)?,
        })
    }
}

fn mvg_params(n: usize, shocks: &[ShockSpec]) -> CliResult<MvgParams> {
    if shocks.iter().all(|s| s.set.is_none() && s.size.is_some()) {
        let mut levels = vec![1.0; n];
        for (k, s) in shocks.iter().enumerate() {
            let size = s.size.unwrap_or(0);
            if size == 0 || size > n {
                return Err(CliError::config(format!(
                    "model.shocks[{k}]: size {size} outside 1..={n}"
                )));
            }
            levels[size - 1] = s.theta;
        }
        return Ok(MvgParams::exchangeable(levels)?);
    }
    let mut list = Vec::new();
    for (k, s) in shocks.iter().enumerate() {
        match (&s.set, s.size) {
            (Some(set), None) => list.push((
                Subset::from_indices(n, set.iter().copied())
                    .map_err(|e| CliError::config(format!("model.shocks[{k}].set: {e}")))?,
                s.theta,
            )),
            (None, Some(size)) if (1..=n).contains(&size) => {
                list.extend(ordstat::subset::k_subsets(n, size).map(|set| (set, s.theta)));
            }
            _ => {
                return Err(CliError::config(format!(
                    "model.shocks[{k}]: give exactly one of `set` or `size` (1..={n})"
                )))
            }
        }
    }
    Ok(MvgParams::new(n, list)?)
}

impl StructureSpec {
    pub fn build(&self) -> CliResult<SystemStructure> {
        let sets = |field: &str, v: &[Vec<usize>], n: usize| -> CliResult<Vec<Subset>> {
            v.iter()
                .enumerate()
                .map(|(k, s)| {
                    Subset::from_indices(n, s.iter().copied())
                        .map_err(|e| CliError::config(format!("structure.{field}[{k}]: {e}")))
                })
                .collect()
        };
        if let Some(preset) = &self.preset {
            if self.path_sets.is_some() || self.cut_sets.is_some() {
                return Err(CliError::config(
                    "structure: `preset` excludes explicit sets",
                ));
            }
            let n = || {
                self.n.ok_or_else(|| {
                    CliError::config(format!("structure: preset `{preset}` needs `n`"))
                })
            };
            let k = || {
                self.k.ok_or_else(|| {
                    CliError::config(format!("structure: preset `{preset}` needs `k`"))
                })
            };
            let s = match preset.as_str() {
                "bridge" => SystemStructure::bridge(),
                "series" => SystemStructure::series(n()?)?,
                "parallel" => SystemStructure::parallel(n()?)?,
                "k-out-of-n-g" => SystemStructure::k_out_of_n_g(k()?, n()?)?,
                "k-out-of-n-f" => SystemStructure::k_out_of_n_f(k()?, n()?)?,
                other => {
                    return Err(CliError::config(format!(
                        "structure.preset: unknown `{other}` (bridge, series, parallel, k-out-of-n-g, k-out-of-n-f)"
                    )))
                }
            };
            return Ok(s);
        }
        let n = self
            .n
            .ok_or_else(|| CliError::config("structure: `n` is required with explicit sets"))?;
        match (&self.path_sets, &self.cut_sets) {
            (Some(p), c) => {
                let cuts = c.as_ref().map(|c| sets("cut_sets", c, n)).transpose()?;
                Ok(SystemStructure::new(n, sets("path_sets", p, n)?, cuts)?)
            }
            (None, Some(c)) => Ok(SystemStructure::from_cut_sets(n, sets("cut_sets", c, n)?)?),
            (None, None) => Err(CliError::config(
                "structure: give `preset`, `path_sets` or `cut_sets`",
            )),
        }
    }

    pub fn samaniego(&self) -> CliResult<Option<Vec<Rational64>>> {
        self.samaniego
            .as_ref()
            .map(|v| v.iter().map(Fraction::to_rational).collect())
            .transpose()
    }
}
