//! Moments of order statistics `X_{r:n}` of a dependent discrete vector.
//!
//! Everything runs through `E X_{r:n}^p = sum_m ((m+1)^p - m^p) P(X_{r:n} > m)`
//! with `P(X_{r:n} > m) = sum_{s<r} P(A_s)`, where `A_s` is the event that
//! exactly `s` coordinates are `<= m`. Finite supports give the exact value;
//! otherwise the sum is cut at a planned `M0` whose neglected tail is
//! certified to be at most `d`.

use crate::dist::MarginalDist;
use crate::error::{Error, Result};
use crate::joint::JointModel;
use crate::numeric::{binomial_f64, lower_binomial_sum, moment_weight, CompensatedSum};
use crate::subset::{k_subsets, Subset, MAX_N};

/// Largest truncation index the generic planner will consider.
pub const GENERIC_M0_CAP: i64 = 1_000_000;

/// Thresholds evaluated per batch of count tables.
const BATCH: i64 = 4096;

/// Rank, sample size, moment order and (for truncated evaluation) error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRequest {
    pub r: usize,
    pub n: usize,
    pub p: u32,
    pub d: Option<f64>,
}

impl MomentRequest {
    pub fn new(r: usize, n: usize, p: u32) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::arg(format!("rank {r} outside 1..={n}")));
        }
        if p == 0 {
            return Err(Error::arg("moment order must be at least 1"));
        }
        Ok(Self { r, n, p, d: None })
    }

    pub fn with_bound(mut self, d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::arg(format!("error bound must be positive, got {d}")));
        }
        self.d = Some(d);
        Ok(self)
    }

    fn bound(&self) -> Result<f64> {
        self.d
            .ok_or_else(|| Error::arg("truncated evaluation needs an error bound d"))
    }

    fn check_model(&self, model: &JointModel) -> Result<()> {
        if model.n() != self.n {
            return Err(Error::arg(format!(
                "request is for n = {} but the model has {} components",
                self.n,
                model.n()
            )));
        }
        Ok(())
    }

    /// `sum_{s<r} C(n, s)`.
    pub fn class_count(&self) -> f64 {
        lower_binomial_sum(self.n, self.r)
    }
}

/// Where the moment series is cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPlan {
    pub m0: i64,
    /// 1-based index of the stochastically largest marginal.
    pub j0: usize,
    /// Right-hand constant of the condition that fixed `m0`.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    pub value: f64,
    pub exact: bool,
    pub m0_used: Option<i64>,
    pub error_bound: Option<f64>,
}

impl MomentResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            exact: true,
            m0_used: None,
            error_bound: None,
        }
    }
}

/// Which side of the rank the survival sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumForm {
    /// Lower form when `r <= (n+1)/2`, complement form otherwise.
    #[default]
    Auto,
    /// `sum_{s=0}^{r-1} P(A_s)`.
    Lower,
    /// `1 - sum_{s=r}^{n} P(A_s)`.
    Upper,
}

impl SumForm {
    fn resolve(self, r: usize, n: usize) -> SumForm {
        match self {
            SumForm::Auto if 2 * r <= n + 1 => SumForm::Lower,
            SumForm::Auto => SumForm::Upper,
            f => f,
        }
    }
}

/// Which reading of the negative binomial truncation rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegBinRule {
    /// Quantile of `NBin(R + p, p_j0)` shifted by `p - 1`; satisfies the
    /// general tail condition.
    #[default]
    Certified,
    /// Quantile of `NBin(R, p_j0)` with no shift; reproduces the published
    /// tables of truncation indices.
    Published,
}

/// `P(X_{r:n} > m)`.
pub fn survival_orderstat(model: &JointModel, r: usize, n: usize, m: i64) -> Result<f64> {
    survival_orderstat_with(model, r, n, m, SumForm::Auto)
}

/// [`survival_orderstat`] with an explicit choice of summation side.
pub fn survival_orderstat_with(
    model: &JointModel,
    r: usize,
    n: usize,
    m: i64,
    form: SumForm,
) -> Result<f64> {
    let req = MomentRequest::new(r, n, 1)?;
    req.check_model(model)?;
    if m < -1 {
        return Err(Error::arg(format!("threshold m must be >= -1, got {m}")));
    }
    let classes: Vec<usize> = match form.resolve(r, n) {
        SumForm::Upper => (r..=n).collect(),
        _ => (0..r).collect(),
    };
    let mut acc = CompensatedSum::new();
    if n > MAX_N {
        let row = model.count_tables(m, m)?.pop().unwrap_or_default();
        classes.iter().for_each(|&s| acc.add(row[s]));
    } else if model.is_exchangeable() {
        for &s in &classes {
            let low = Subset::first(s);
            let rect = model.rect_prob(low, low.complement(n), m)?;
            acc.add(binomial_f64(n as u64, s as u64) * rect);
        }
    } else {
        for &s in &classes {
            for low in k_subsets(n, s) {
                acc.add(model.rect_prob(low, low.complement(n), m)?);
            }
        }
    }
    Ok(finish(acc.value(), form.resolve(r, n)))
}

fn finish(partial: f64, form: SumForm) -> f64 {
    let v = match form {
        SumForm::Upper => 1.0 - partial,
        _ => partial,
    };
    v.clamp(0.0, 1.0)
}

/// `sum_{m=0}^{last} ((m+1)^p - m^p) P(X_{r:n} > m)`, summed in increasing `m`.
fn partial_moment(
    model: &JointModel,
    req: &MomentRequest,
    last: i64,
    form: SumForm,
) -> Result<f64> {
    let form = form.resolve(req.r, req.n);
    let mut total = CompensatedSum::new();
    let mut start = 0i64;
    while start <= last {
        let end = (start + BATCH - 1).min(last);
        let rows = model.count_tables(start, end)?;
        for (w, row) in rows.iter().enumerate() {
            let m = start + w as i64;
            let mut acc = CompensatedSum::new();
            match form {
                SumForm::Upper => row[req.r..].iter().for_each(|&v| acc.add(v)),
                _ => row[..req.r].iter().for_each(|&v| acc.add(v)),
            }
            let surv = finish(acc.value(), form);
            total.add(moment_weight(m as u64, req.p) * surv);
        }
        start = end + 1;
    }
    Ok(total.value())
}

/// Exact `E X_{r:n}^p` for a finite-support model.
pub fn exact_moment_finite(model: &JointModel, req: &MomentRequest) -> Result<MomentResult> {
    exact_moment_finite_with(model, req, SumForm::Auto)
}

/// [`exact_moment_finite`] with an explicit choice of summation side.
pub fn exact_moment_finite_with(
    model: &JointModel,
    req: &MomentRequest,
    form: SumForm,
) -> Result<MomentResult> {
    req.check_model(model)?;
    let k = model.max_support().ok_or_else(|| {
        Error::UnsupportedModel(
            "model has infinite support; use approx_moment with a truncation plan".into(),
        )
    })?;
    // P(X_{r:n} > m) vanishes from m = K on
    let value = partial_moment(model, req, k as i64 - 1, form)?;
    Ok(MomentResult::exact(value))
}

/// Truncated `E X_{r:n}^p`: the series cut at `plan.m0`.
pub fn approx_moment(
    model: &JointModel,
    req: &MomentRequest,
    plan: &TruncationPlan,
) -> Result<MomentResult> {
    req.check_model(model)?;
    if plan.m0 < -1 {
        return Err(Error::arg(format!("M0 must be >= -1, got {}", plan.m0)));
    }
    let value = partial_moment(model, req, plan.m0, SumForm::Auto)?;
    Ok(MomentResult {
        value,
        exact: false,
        m0_used: Some(plan.m0),
        error_bound: req.d,
    })
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    best
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// Truncation index for Poisson marginals `Pois(lambda_j)`.
pub fn plan_poisson(lambdas: &[f64], req: &MomentRequest) -> Result<TruncationPlan> {
    if lambdas.len() != req.n {
        return Err(Error::arg(format!(
            "expected {} rates, got {}",
            req.n,
            lambdas.len()
        )));
    }
    poisson_plan(lambdas, req.p, req.bound()?, req.class_count())
}

/// Poisson rule with `weight` in place of the class count.
pub(crate) fn poisson_plan(lambdas: &[f64], p: u32, d: f64, weight: f64) -> Result<TruncationPlan> {
    if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::arg(format!(
            "Poisson rate must be positive, got {bad}"
        )));
    }
    let j = argmax_first(lambdas);
    let lambda = lambdas[j];
    let pi = p as i32;
    let threshold = 1.0 - d * 2f64.powi(-(pi * (pi - 1) / 2)) * lambda.powi(-pi) / weight;
    let m0 = if threshold <= 0.0 {
        i64::from(p) - 2
    } else {
        let q = MarginalDist::poisson(lambda)?.quantile(threshold)?;
        q as i64 + i64::from(p) - 1
    };
    Ok(TruncationPlan {
        m0,
        j0: j + 1,
        threshold,
    })
}

/// Truncation index for negative binomial marginals `NBin(R, p_j)`.
pub fn plan_negbin(
    shape: f64,
    ps: &[f64],
    req: &MomentRequest,
    rule: NegBinRule,
) -> Result<TruncationPlan> {
    if ps.len() != req.n {
        return Err(Error::arg(format!(
            "expected {} probabilities, got {}",
            req.n,
            ps.len()
        )));
    }
    negbin_plan(shape, ps, req.p, req.bound()?, req.class_count(), rule)
}

fn negbin_plan(
    shape: f64,
    ps: &[f64],
    p: u32,
    d: f64,
    weight: f64,
    rule: NegBinRule,
) -> Result<TruncationPlan> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::arg(format!(
            "negative binomial R must be positive, got {shape}"
        )));
    }
    if let Some(bad) = ps.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::arg(format!(
            "success probability must lie in (0,1), got {bad}"
        )));
    }
    let j = argmin_first(ps);
    let pj = ps[j];
    let pi = p as i32;
    let rising: f64 = (0..p).map(|i| shape + f64::from(i)).product();
    let threshold =
        1.0 - d / (2f64.powi(pi * (pi - 1) / 2) * rising * weight) * (pj / (1.0 - pj)).powi(pi);
    let m0 = if threshold <= 0.0 {
        i64::from(p) - 2
    } else {
        match rule {
            NegBinRule::Certified => {
                let aux = MarginalDist::negbin(shape + f64::from(p), pj)?;
                aux.quantile(threshold)? as i64 + i64::from(p) - 1
            }
            NegBinRule::Published => MarginalDist::negbin(shape, pj)?.quantile(threshold)? as i64,
        }
    };
    Ok(TruncationPlan {
        m0,
        j0: j + 1,
        threshold,
    })
}

/// Smallest `M0 >= -1` with `tail(M0) <= d / sum_{s<r} C(n,s)`, where
/// `tail(m) = sum_{x > m+1} x^p P(X_j0 = x)` must be non-increasing.
pub fn plan_generic<F>(tail: F, req: &MomentRequest, j0: usize) -> Result<TruncationPlan>
where
    F: Fn(i64) -> f64,
{
    if j0 == 0 || j0 > req.n {
        return Err(Error::arg(format!("j0 = {j0} outside 1..={}", req.n)));
    }
    generic_plan(tail, req.bound()? / req.class_count(), j0)
}

/// Doubling then bisection for the smallest `M0` with `tail(M0) <= threshold`.
pub(crate) fn generic_plan<F>(tail: F, threshold: f64, j0: usize) -> Result<TruncationPlan>
where
    F: Fn(i64) -> f64,
{
    let ok = |m: i64| {
        let t = tail(m);
        !t.is_nan() && t <= threshold
    };
    let plan = |m0| TruncationPlan { m0, j0, threshold };
    if ok(-1) {
        return Ok(plan(-1));
    }
    // invariant: !ok(lo), ok(hi)
    let mut lo = -1i64;
    let mut step = 1i64;
    let mut hi = loop {
        let cand = (lo + step).min(GENERIC_M0_CAP);
        if ok(cand) {
            break cand;
        }
        if cand == GENERIC_M0_CAP {
            return Err(Error::NonConvergence(format!(
                "tail bound still above {threshold:e} at M0 = {GENERIC_M0_CAP}"
            )));
        }
        lo = cand;
        step *= 2;
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(plan(hi))
}

/// Tail oracle `m -> sum_{x >= m+2} x^p P(X = x)` for a univariate law.
pub fn marginal_tail(dist: &MarginalDist, p: u32) -> impl Fn(i64) -> f64 + '_ {
    move |m| dist.tail_moment(p, (m + 2).max(0) as u64)
}

/// Chooses a truncation plan from the marginal laws of `model`.
///
/// Poisson and negative binomial families (common `R`) use their closed
/// rules; geometric marginals, and identically distributed marginals of any
/// other kind, use [`plan_generic`] on the stochastically largest coordinate.
pub fn plan_for_model(
    model: &JointModel,
    req: &MomentRequest,
    rule: NegBinRule,
) -> Result<TruncationPlan> {
    req.check_model(model)?;
    plan_weighted(model, req.p, req.bound()?, req.class_count(), Some(rule))
}

/// Plan for a series whose survival terms carry total positive weight
/// `weight`. Without a negative binomial rule those marginals go through
/// the generic tail search.
pub(crate) fn plan_weighted(
    model: &JointModel,
    p: u32,
    d: f64,
    weight: f64,
    negbin: Option<NegBinRule>,
) -> Result<TruncationPlan> {
    let marginals = (1..=model.n())
        .map(|j| model.marginal(j))
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Option<Vec<f64>> = marginals
        .iter()
        .map(|m| match *m {
            MarginalDist::Poisson { lambda } => Some(lambda),
            _ => None,
        })
        .collect();
    if let Some(l) = lambdas {
        return poisson_plan(&l, p, d, weight);
    }
    let negbin_params: Option<Vec<(f64, f64)>> = marginals
        .iter()
        .map(|m| match *m {
            MarginalDist::NegBin { r, p } => Some((r, p)),
            _ => None,
        })
        .collect();
    if let Some(nb) = &negbin_params {
        let shape = nb[0].0;
        let common = nb.iter().all(|&(r, _)| r == shape);
        match negbin {
            Some(rule) if common => {
                let ps: Vec<f64> = nb.iter().map(|&(_, q)| q).collect();
                return negbin_plan(shape, &ps, p, d, weight, rule);
            }
            _ if common => {
                let ps: Vec<f64> = nb.iter().map(|&(_, q)| q).collect();
                let j = argmin_first(&ps);
                return generic_plan(marginal_tail(&marginals[j], p), d / weight, j + 1);
            }
            _ => {}
        }
    }
    let pis: Option<Vec<f64>> = marginals
        .iter()
        .map(|m| match *m {
            MarginalDist::Geometric { pi } => Some(pi),
            _ => None,
        })
        .collect();
    let j = if let Some(pis) = pis {
        argmin_first(&pis)
    } else if marginals.iter().all(|m| *m == marginals[0]) {
        0
    } else {
        return Err(Error::UnsupportedModel(
            "marginals are not stochastically ordered in a known family; supply a plan".into(),
        ));
    };
    generic_plan(marginal_tail(&marginals[j], p), d / weight, j + 1)
}

/// Exact value for finite supports, planned truncation otherwise.
pub fn moment(model: &JointModel, req: &MomentRequest, rule: NegBinRule) -> Result<MomentResult> {
    if model.max_support().is_some() {
        return exact_moment_finite(model, req);
    }
    let plan = plan_for_model(model, req, rule)?;
    approx_moment(model, req, &plan)
}
