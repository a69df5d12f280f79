//! The five subcommands. Each returns the tables it prints.

use std::collections::BTreeSet;

use ordstat::coherent::{
    alpha_coefficients, beta_coefficients, maximal_signature, minimal_signature,
    samaniego_signature, signature_from_samaniego, system_moment_approx_with,
    system_moment_exact_with, system_mvg_mean_var, system_raw_moments_mvg,
};
use ordstat::mvg::{factorial_to_raw, mvg_orderstat_factorial_moment};
use ordstat::oracle::{enumerate_moment, mc_moment, Statistic, RNG_NAME};
use ordstat::orderstat::plan_for_model;
use ordstat::{
    approx_moment, exact_moment_finite, JointModel, MarginalDist, MomentRequest, MvgParams, Subset,
    SystemStructure,
};

use crate::config::{RunConfig, SweepFamily, DEFAULT_SAMPLES, DEFAULT_SIGMAS};
use crate::error::CliResult;
use crate::table::{Precision, Table};

pub const DEFAULT_SEED: u64 = 1;

/// Settings taken from the command line rather than the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub precision: Precision,
    pub seed: Option<u64>,
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Value {
    value: f64,
    m0: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Exact,
    ClosedForm,
    Truncated,
}

impl Method {
    fn of(model: &JointModel, mvg: &Option<MvgParams>) -> Self {
        if mvg.is_some() {
            Method::ClosedForm
        } else if model.max_support().is_some() {
            Method::Exact
        } else {
            Method::Truncated
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::ClosedForm => "closed-form",
            Method::Truncated => "truncated",
        }
    }
}

struct Engine<'a> {
    cfg: &'a RunConfig,
    model: JointModel,
    mvg: Option<MvgParams>,
    method: Method,
    d: f64,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a RunConfig, opts: &Options) -> CliResult<Self> {
        let model = cfg.model()?;
        let mvg = cfg.mvg()?;
        let method = Method::of(&model, &mvg);
        Ok(Self {
            cfg,
            model,
            mvg,
            method,
            d: cfg.bound(opts.d)?,
        })
    }

    fn rank_moment(&self, r: usize, p: u32) -> CliResult<Value> {
        let n = self.model.n();
        let req = MomentRequest::new(r, n, p)?;
        Ok(match self.method {
            Method::ClosedForm => {
                let params = self.mvg.as_ref().expect("closed form needs MVG parameters");
                let fac = (1..=p)
                    .map(|q| mvg_orderstat_factorial_moment(params, r, q))
                    .collect::<ordstat::Result<Vec<_>>>()?;
                Value {
                    value: factorial_to_raw(&fac)[p as usize - 1],
                    m0: None,
                }
            }
            Method::Exact => Value {
                value: exact_moment_finite(&self.model, &req)?.value,
                m0: None,
            },
            Method::Truncated => {
                let req = req.with_bound(self.d)?;
                let plan = plan_for_model(&self.model, &req, self.cfg.negbin_rule())?;
                let res = approx_moment(&self.model, &req, &plan)?;
                Value {
                    value: res.value,
                    m0: res.m0_used,
                }
            }
        })
    }

    fn system_moments(&self, st: &SystemStructure, moments: &[u32]) -> CliResult<Vec<Value>> {
        let how = self.cfg.expansion();
        match self.method {
            Method::ClosedForm => {
                let params = self.mvg.as_ref().expect("closed form needs MVG parameters");
                let top = moments.iter().copied().max().unwrap_or(1);
                let raw = system_raw_moments_mvg(params, st, top)?;
                Ok(moments
                    .iter()
                    .map(|&p| Value {
                        value: raw[p as usize - 1],
                        m0: None,
                    })
                    .collect())
            }
            Method::Exact => moments
                .iter()
                .map(|&p| {
                    Ok(Value {
                        value: system_moment_exact_with(&self.model, st, p, how)?.value,
                        m0: None,
                    })
                })
                .collect(),
            Method::Truncated => moments
                .iter()
                .map(|&p| {
                    let res = system_moment_approx_with(&self.model, st, p, self.d, how)?;
                    Ok(Value {
                        value: res.value,
                        m0: res.m0_used,
                    })
                })
                .collect(),
        }
    }

    fn with_meta(&self, table: Table) -> Table {
        let t = table
            .meta("components", self.model.n())
            .meta("method", self.method.name());
        if self.method == Method::Truncated {
            t.meta("d", self.d)
        } else {
            t
        }
    }
}

fn variance(moments: &[u32], values: &[Value]) -> Option<f64> {
    let first = moments.iter().position(|&p| p == 1)?;
    let second = moments.iter().position(|&p| p == 2)?;
    let m = values[first].value;
    Some(values[second].value - m * m)
}

fn m0_cell(v: &Value) -> String {
    v.m0.map_or_else(|| "-".to_string(), |m| m.to_string())
}

/// One row per rank: `E X_{r:n}^p` per requested `p`, M0 for truncated
/// runs, and the variance when orders 1 and 2 are both requested.
pub fn orderstat(cfg: &RunConfig, opts: &Options) -> CliResult<Vec<Table>> {
    let engine = Engine::new(cfg, opts)?;
    let n = engine.model.n();
    let moments = cfg.moments()?;
    let ranks = cfg.ranks(n)?;
    let truncated = engine.method == Method::Truncated;

    let mut headers = vec!["r".to_string()];
    for p in &moments {
        headers.push(format!("EX^{p}"));
        if truncated {
            headers.push(format!("M0_{p}"));
        }
    }
    let with_var = moments.contains(&1) && moments.contains(&2);
    if with_var {
        headers.push("Var".into());
    }
    let mut table = engine.with_meta(Table::new(headers));
    for r in ranks {
        let values = moments
            .iter()
            .map(|&p| engine.rank_moment(r, p))
            .collect::<CliResult<Vec<_>>>()?;
        let mut row = vec![r.to_string()];
        for v in &values {
            row.push(opts.precision.fmt(v.value));
            if truncated {
                row.push(m0_cell(v));
            }
        }
        if let Some(var) = variance(&moments, &values) {
            row.push(opts.precision.fmt(var));
        }
        table.push(row);
    }
    Ok(vec![table])
}

/// System lifetime moments and variance.
pub fn system(cfg: &RunConfig, opts: &Options) -> CliResult<Vec<Table>> {
    let engine = Engine::new(cfg, opts)?;
    let st = cfg.structure()?;
    let moments = cfg.moments()?;
    let values = engine.system_moments(&st, &moments)?;
    let mut table = engine.with_meta(Table::new(["quantity", "value", "M0"]));
    for (p, v) in moments.iter().zip(&values) {
        table.push(vec![
            format!("ET^{p}"),
            opts.precision.fmt(v.value),
            m0_cell(v),
        ]);
    }
    if let Some(var) = variance(&moments, &values) {
        table.push(vec!["VarT".into(), opts.precision.fmt(var), "-".into()]);
    }
    Ok(vec![table])
}

fn set_label(s: Subset) -> String {
    s.indices()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

/// Subset coefficients and aggregated signatures of a structure.
pub fn signature(cfg: &RunConfig) -> CliResult<Vec<Table>> {
    let given = cfg.structure()?;
    let n = given.n();
    // cut sets (and with them the beta side) are derived when not supplied
    let st = given.clone().with_derived_sets().unwrap_or(given);
    let alpha = if st.path_sets().is_empty() {
        None
    } else {
        Some(alpha_coefficients(&st)?)
    };
    let beta = if st.cut_sets().is_some() {
        Some(beta_coefficients(&st)?)
    } else {
        None
    };

    let mut coeffs = Table::new(["set", "alpha", "beta"]).meta("components", n);
    let keys: BTreeSet<Subset> = alpha
        .iter()
        .chain(beta.iter())
        .flat_map(|m| m.keys().copied())
        .collect();
    let lookup = |m: &Option<ordstat::coherent::Coefficients>, k: &Subset| {
        m.as_ref()
            .map_or("-".into(), |m| m.get(k).copied().unwrap_or(0).to_string())
    };
    for k in &keys {
        coeffs.push(vec![set_label(*k), lookup(&alpha, k), lookup(&beta, k)]);
    }

    let mut headers = vec!["kind".to_string()];
    headers.extend((1..=n).map(|i| i.to_string()));
    let mut sigs = Table::new(headers);
    let row = |name: &str, v: Vec<String>| {
        let mut r = vec![name.to_string()];
        r.extend(v);
        r
    };
    let ints = |v: Vec<i64>| v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>();
    if alpha.is_some() {
        sigs.push(row("minimal", ints(minimal_signature(&st)?)));
    }
    if beta.is_some() {
        sigs.push(row("maximal", ints(maximal_signature(&st)?)));
    }
    if alpha.is_some() {
        let sam = samaniego_signature(&st)?;
        sigs.push(row(
            "samaniego",
            sam.iter().map(|q| q.to_string()).collect(),
        ));
    }
    if let Some(sam) = cfg
        .structure
        .as_ref()
        .map(|s| s.samaniego())
        .transpose()?
        .flatten()
    {
        if sam.len() != n {
            return Err(crate::error::CliError::config(format!(
                "structure.samaniego: {} entries for {n} components",
                sam.len()
            )));
        }
        let conv = signature_from_samaniego(&sam)?;
        sigs.push(row(
            "from_samaniego",
            conv.iter().map(|q| q.to_string()).collect(),
        ));
    }
    Ok(vec![coeffs, sigs])
}

/// Moments of the system lifetime over a parameter grid, IID components.
pub fn sweep(cfg: &RunConfig, opts: &Options) -> CliResult<Vec<Table>> {
    let st = cfg.structure()?;
    let (family, grid) = cfg.grid()?;
    let n = st.n();
    let how = cfg.expansion();
    let d = cfg.bound(opts.d)?;
    let fmt = |v: f64| opts.precision.fmt(v);
    let mut table = match family {
        SweepFamily::Geometric => Table::new(["pi", "ET", "VarT"]).meta("family", "geometric"),
        SweepFamily::Poisson => Table::new(["lambda", "ET", "M0_1", "ET^2", "M0_2"])
            .meta("family", "poisson")
            .meta("d", d),
    };
    table = table.meta("components", n);
    for &x in &grid {
        let row = match family {
            SweepFamily::Geometric => MvgParams::iid_geometric(x, n)
                .and_then(|p| system_mvg_mean_var(&p, &st))
                .map(|(et, var)| vec![fmt(et), fmt(var)]),
            SweepFamily::Poisson => MarginalDist::poisson(x)
                .and_then(|m| JointModel::iid(m, n))
                .and_then(|model| {
                    let a = system_moment_approx_with(&model, &st, 1, d, how)?;
                    let b = system_moment_approx_with(&model, &st, 2, d, how)?;
                    Ok(vec![
                        fmt(a.value),
                        a.m0_used.map_or("-".into(), |m| m.to_string()),
                        fmt(b.value),
                        b.m0_used.map_or("-".into(), |m| m.to_string()),
                    ])
                }),
        };
        let width = table.headers.len() - 1;
        let cells = row.unwrap_or_else(|e| {
            eprintln!("sweep: {x}: {e}");
            vec!["NA".to_string(); width]
        });
        let mut full = vec![x.to_string()];
        full.extend(cells);
        table.push(full);
    }
    Ok(vec![table])
}

struct Check {
    kind: &'static str,
    statistic: String,
    p: u32,
    analytic: f64,
    oracle: Option<f64>,
    stderr: Option<f64>,
    status: &'static str,
}

/// Cross-checks the analytic pipeline against Monte Carlo and, when the
/// support is small enough, exhaustive enumeration.
pub fn validate(cfg: &RunConfig, opts: &Options) -> CliResult<Vec<Table>> {
    let engine = Engine::new(cfg, opts)?;
    let n = engine.model.n();
    let moments = cfg.moments()?;
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let samples = cfg.validate.samples.unwrap_or(DEFAULT_SAMPLES);
    let sigmas = cfg.validate.sigmas.unwrap_or(DEFAULT_SIGMAS);
    let slack = if engine.method == Method::Truncated {
        engine.d
    } else {
        0.0
    };

    let mut targets: Vec<(Statistic, String, u32, f64)> = Vec::new();
    for r in cfg.ranks(n)? {
        for &p in &moments {
            let v = engine.rank_moment(r, p)?;
            targets.push((Statistic::Rank(r), format!("rank={r}"), p, v.value));
        }
    }
    if cfg.structure.is_some() {
        let st = cfg.structure()?;
        for (&p, v) in moments.iter().zip(engine.system_moments(&st, &moments)?) {
            targets.push((Statistic::System(st.clone()), "system".into(), p, v.value));
        }
    }

    let mut checks = Vec::new();
    for (k, (stat, label, p, analytic)) in targets.iter().enumerate() {
        let est = mc_moment(
            &engine.model,
            stat,
            *p,
            samples,
            seed.wrapping_add(k as u64),
        )?;
        let ok = (analytic - est.mean).abs() <= sigmas * est.stderr + slack;
        checks.push(Check {
            kind: "mc",
            statistic: label.clone(),
            p: *p,
            analytic: *analytic,
            oracle: Some(est.mean),
            stderr: Some(est.stderr),
            status: if ok { "pass" } else { "fail" },
        });
        if engine.method == Method::Exact {
            let (oracle, status) = match enumerate_moment(&engine.model, stat, *p) {
                Ok(v) => {
                    let ok = (analytic - v).abs() <= 1e-10 * analytic.abs().max(1.0);
                    (Some(v), if ok { "pass" } else { "fail" })
                }
                Err(ordstat::Error::Capacity(_)) => (None, "skipped"),
                Err(e) => return Err(e.into()),
            };
            checks.push(Check {
                kind: "exhaustive",
                statistic: label.clone(),
                p: *p,
                analytic: *analytic,
                oracle,
                stderr: None,
                status,
            });
        }
    }

    let failed = checks.iter().filter(|c| c.status == "fail").count();
    let mut table = engine
        .with_meta(Table::new([
            "check",
            "statistic",
            "p",
            "analytic",
            "oracle",
            "stderr",
            "status",
        ]))
        .meta("rng", RNG_NAME)
        .meta("seed", seed)
        .meta("samples", samples)
        .meta("band", format!("{sigmas} sigma"))
        .meta("failed", failed);
    let opt = |v: Option<f64>| v.map_or("-".into(), |v| opts.precision.fmt(v));
    for c in checks {
        table.push(vec![
            c.kind.into(),
            c.statistic,
            c.p.to_string(),
            opts.precision.fmt(c.analytic),
            opt(c.oracle),
            opt(c.stderr),
            c.status.into(),
        ]);
    }
    Ok(vec![table])
}
