//! Coherent systems: structures given by minimal path and cut sets, their
//! subset coefficients and signatures, and lifetime moments.
//!
//! With `T = max_j min_{i in P_j} X_i`, inclusion-exclusion over collections
//! of path sets gives `P(T > m) = sum_K alpha_K P(X_i > m for all i in K)`.
//! The integer coefficients `alpha_K` depend on the structure only.

use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::joint::JointModel;
use crate::mvg::{factorial_to_raw, MvgParams};
use crate::numeric::{binomial, binomial_f64, factorial, moment_weight, CompensatedSum};
use crate::orderstat::{plan_weighted, MomentResult, TruncationPlan};
use crate::subset::{check_cap, k_subsets, nonempty_subsets, Subset};

/// Largest number of path (or cut) sets accepted by the coefficient expansion.
pub const MAX_SETS: usize = 25;

/// Subset-indexed integer coefficients, zeros pruned.
pub type Coefficients = BTreeMap<Subset, i64>;

/// A coherent system on components `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemStructure {
    n: usize,
    path_sets: Vec<Subset>,
    cut_sets: Option<Vec<Subset>>,
}

fn validate_family(n: usize, sets: &[Subset], what: &str) -> Result<()> {
    let full = Subset::full(n);
    for (k, s) in sets.iter().enumerate() {
        if s.is_empty() || !s.is_subset_of(full) {
            return Err(Error::arg(format!(
                "{what} set {s} is not a non-empty subset of 1..={n}"
            )));
        }
        for t in &sets[k + 1..] {
            if s.is_subset_of(*t) || t.is_subset_of(*s) {
                return Err(Error::arg(format!(
                    "{what} sets {s} and {t} are nested; minimal sets form an antichain"
                )));
            }
        }
    }
    let covered = sets.iter().fold(Subset::EMPTY, |acc, s| acc.union(*s));
    if let Some(i) = (1..=n).find(|&i| !covered.contains(i)) {
        return Err(Error::arg(format!(
            "component {i} is in no {what} set and is irrelevant"
        )));
    }
    Ok(())
}

impl SystemStructure {
    /// Structure from minimal path sets, with optional minimal cut sets.
    pub fn new(n: usize, path_sets: Vec<Subset>, cut_sets: Option<Vec<Subset>>) -> Result<Self> {
        if n == 0 || n > 32 {
            return Err(Error::arg(format!(
                "systems support 1..=32 components, got {n}"
            )));
        }
        if path_sets.is_empty() {
            return Err(Error::arg("at least one path set is required"));
        }
        validate_family(n, &path_sets, "path")?;
        if let Some(c) = &cut_sets {
            if c.is_empty() {
                return Err(Error::arg("cut set list is empty"));
            }
            validate_family(n, c, "cut")?;
        }
        Ok(Self {
            n,
            path_sets,
            cut_sets,
        })
    }

    /// Structure known only through its minimal cut sets.
    pub fn from_cut_sets(n: usize, cut_sets: Vec<Subset>) -> Result<Self> {
        if n == 0 || n > 32 {
            return Err(Error::arg(format!(
                "systems support 1..=32 components, got {n}"
            )));
        }
        if cut_sets.is_empty() {
            return Err(Error::arg("at least one cut set is required"));
        }
        validate_family(n, &cut_sets, "cut")?;
        Ok(Self {
            n,
            path_sets: Vec::new(),
            cut_sets: Some(cut_sets),
        })
    }

    pub fn series(n: usize) -> Result<Self> {
        let cuts = (1..=n).map(|i| Subset::from_mask(1 << (i - 1))).collect();
        Self::new(n, vec![Subset::full(n)], Some(cuts))
    }

    pub fn parallel(n: usize) -> Result<Self> {
        let paths = (1..=n).map(|i| Subset::from_mask(1 << (i - 1))).collect();
        Self::new(n, paths, Some(vec![Subset::full(n)]))
    }

    /// Works while at least `k` of `n` components work.
    pub fn k_out_of_n_g(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::arg(format!("k = {k} outside 1..={n}")));
        }
        check_cap(n, "k-out-of-n structure")?;
        Self::new(
            n,
            k_subsets(n, k).collect(),
            Some(k_subsets(n, n - k + 1).collect()),
        )
    }

    /// Fails once `k` of `n` components have failed.
    pub fn k_out_of_n_f(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::arg(format!("k = {k} outside 1..={n}")));
        }
        Self::k_out_of_n_g(n - k + 1, n)
    }

    /// The five-component bridge.
    pub fn bridge() -> Self {
        let s = |idx: &[usize]| Subset::from_indices(5, idx.iter().copied()).expect("bridge set");
        Self::new(
            5,
            vec![s(&[1, 2]), s(&[3, 4]), s(&[1, 3, 5]), s(&[2, 4, 5])],
            Some(vec![s(&[1, 4]), s(&[2, 3]), s(&[1, 3, 5]), s(&[2, 4, 5])]),
        )
        .expect("bridge is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn path_sets(&self) -> &[Subset] {
        &self.path_sets
    }

    pub fn cut_sets(&self) -> Option<&[Subset]> {
        self.cut_sets.as_deref()
    }

    fn require_paths(&self) -> Result<&[Subset]> {
        if self.path_sets.is_empty() {
            Err(Error::arg(
                "structure has no path sets; use the cut-set (beta) form",
            ))
        } else {
            Ok(&self.path_sets)
        }
    }

    fn require_cuts(&self) -> Result<&[Subset]> {
        self.cut_sets
            .as_deref()
            .ok_or_else(|| Error::arg("structure has no cut sets; supply them or derive them"))
    }

    /// Whether the components in `working` keep the system working.
    pub fn works(&self, working: Subset) -> bool {
        if self.path_sets.is_empty() {
            let cuts = self.cut_sets.as_deref().unwrap_or_default();
            cuts.iter().all(|c| c.intersects(working))
        } else {
            self.path_sets.iter().any(|p| p.is_subset_of(working))
        }
    }

    /// Adds the minimal cut sets implied by the path sets (or vice versa),
    /// by brute force over all subsets; `n <= 20`.
    pub fn with_derived_sets(mut self) -> Result<Self> {
        check_cap(self.n, "deriving minimal sets")?;
        if self.path_sets.is_empty() {
            let cuts = self.require_cuts()?.to_vec();
            self.path_sets = minimal_transversals(self.n, &cuts);
        } else if self.cut_sets.is_none() {
            self.cut_sets = Some(minimal_transversals(self.n, &self.path_sets));
        }
        Ok(self)
    }
}

/// Minimal subsets meeting every set of the family (cut sets of path sets
/// and path sets of cut sets).
pub fn minimal_transversals(n: usize, family: &[Subset]) -> Vec<Subset> {
    let mut found: Vec<Subset> = Vec::new();
    for k in 1..=n {
        for c in k_subsets(n, k) {
            if family.iter().all(|s| s.intersects(c)) && !found.iter().any(|f| f.is_subset_of(c)) {
                found.push(c);
            }
        }
    }
    found
}

/// `sum over non-empty collections J of (-1)^{|J|+1} [union(J) = K]`.
fn inclusion_exclusion(sets: &[Subset]) -> Result<Coefficients> {
    if sets.len() > MAX_SETS {
        return Err(Error::Capacity(format!(
            "{} minimal sets exceed the cap of {MAX_SETS}",
            sets.len()
        )));
    }
    // g[U] = sum over collections (empty included) with union U of (-1)^{|J|}
    let mut g: HashMap<u32, i64> = HashMap::from([(0, 1)]);
    for s in sets {
        let updates: Vec<(u32, i64)> = g.iter().map(|(&u, &c)| (u | s.mask(), -c)).collect();
        for (u, c) in updates {
            *g.entry(u).or_insert(0) += c;
        }
    }
    Ok(g.into_iter()
        .filter(|&(u, c)| u != 0 && c != 0)
        .map(|(u, c)| (Subset::from_mask(u), -c))
        .collect())
}

/// `alpha_K` over collections of minimal path sets.
pub fn alpha_coefficients(structure: &SystemStructure) -> Result<Coefficients> {
    inclusion_exclusion(structure.require_paths()?)
}

/// `beta_K` over collections of minimal cut sets.
pub fn beta_coefficients(structure: &SystemStructure) -> Result<Coefficients> {
    inclusion_exclusion(structure.require_cuts()?)
}

fn aggregate(n: usize, coeffs: &Coefficients) -> Vec<i64> {
    let mut out = vec![0i64; n];
    for (k, &c) in coeffs {
        out[k.len() - 1] += c;
    }
    out
}

/// `(alpha_1, .., alpha_n)`, `alpha_i = sum_{|K| = i} alpha_K`.
pub fn minimal_signature(structure: &SystemStructure) -> Result<Vec<i64>> {
    Ok(aggregate(structure.n, &alpha_coefficients(structure)?))
}

/// `(beta_1, .., beta_n)`.
pub fn maximal_signature(structure: &SystemStructure) -> Result<Vec<i64>> {
    Ok(aggregate(structure.n, &beta_coefficients(structure)?))
}

/// Samaniego signature `s_i = P(T = X_{i:n})` under exchangeable continuous
/// lifetimes, from counts of working sets by size; `n <= 20`.
pub fn samaniego_signature(structure: &SystemStructure) -> Result<Vec<Rational64>> {
    let n = structure.n;
    check_cap(n, "Samaniego signature")?;
    // a[k] = number of size-k component sets that keep the system working
    let mut a = vec![0i64; n + 1];
    for mask in 0..(1u32 << n) {
        let w = Subset::from_mask(mask);
        if structure.works(w) {
            a[w.len()] += 1;
        }
    }
    let frac = |k: usize| Rational64::new(a[k], binomial(n as u64, k as u64) as i64);
    Ok((1..=n).map(|i| frac(n - i + 1) - frac(n - i)).collect())
}

fn check_samaniego<T: Copy>(s: &[T], negative: impl Fn(T) -> bool, sum_is_one: bool) -> Result<()> {
    if s.is_empty() {
        return Err(Error::arg("signature vector is empty"));
    }
    if let Some(i) = s.iter().position(|&v| negative(v)) {
        return Err(Error::arg(format!("signature entry {} is negative", i + 1)));
    }
    if !sum_is_one {
        return Err(Error::arg("signature entries must sum to 1"));
    }
    Ok(())
}

/// Minimal signature from a Samaniego signature, in exact arithmetic.
pub fn signature_from_samaniego(s: &[Rational64]) -> Result<Vec<Rational64>> {
    let zero = Rational64::from_integer(0);
    let total: Rational64 = s.iter().copied().sum();
    check_samaniego(s, |v| v < zero, total == Rational64::from_integer(1))?;
    let n = s.len();
    Ok((1..=n)
        .map(|i| {
            let mut acc = zero;
            for r in (n - i + 1)..=n {
                let sign = if (r + i - 1 - n).is_multiple_of(2) {
                    1
                } else {
                    -1
                };
                let c = binomial((i - 1) as u64, (n - r) as u64) as i64;
                acc += s[r - 1] * Rational64::from_integer(sign * c);
            }
            acc * Rational64::from_integer(binomial(n as u64, i as u64) as i64)
        })
        .collect())
}

/// Floating-point [`signature_from_samaniego`]; entries must sum to 1 within 1e-12.
pub fn signature_from_samaniego_f64(s: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = s.iter().sum();
    check_samaniego(s, |v| v < 0.0, (total - 1.0).abs() <= 1e-12)?;
    let n = s.len();
    Ok((1..=n)
        .map(|i| {
            let inner: CompensatedSum = ((n - i + 1)..=n)
                .map(|r| {
                    let sign = if (r + i - 1 - n).is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * binomial_f64((i - 1) as u64, (n - r) as u64) * s[r - 1]
                })
                .collect();
            binomial_f64(n as u64, i as u64) * inner.value()
        })
        .collect())
}

/// All coefficient views of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    pub alpha_subsets: Coefficients,
    pub beta_subsets: Option<Coefficients>,
    pub alpha: Vec<i64>,
    pub beta: Option<Vec<i64>>,
    pub samaniego: Option<Vec<Rational64>>,
}

impl SignatureSet {
    /// Computes every view available for `structure`; the Samaniego vector
    /// is included for `n <= 20`.
    pub fn of(structure: &SystemStructure) -> Result<Self> {
        let structure = if structure.n <= crate::subset::MAX_N {
            structure.clone().with_derived_sets()?
        } else {
            structure.clone()
        };
        let alpha_subsets = alpha_coefficients(&structure)?;
        let beta_subsets = match structure.cut_sets {
            Some(_) => Some(beta_coefficients(&structure)?),
            None => None,
        };
        let n = structure.n;
        Ok(Self {
            alpha: aggregate(n, &alpha_subsets),
            beta: beta_subsets.as_ref().map(|b| aggregate(n, b)),
            samaniego: samaniego_signature(&structure).ok(),
            alpha_subsets,
            beta_subsets,
        })
    }
}

/// Which expansion of the system survival function to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Expansion {
    /// Path sets when present, cut sets otherwise.
    #[default]
    Auto,
    /// `sum_K alpha_K P(min_K X > m)`.
    Alpha,
    /// `sum_K beta_K P(max_K X > m)`.
    Beta,
}

struct Expanded {
    coeffs: Vec<(Subset, i64)>,
    beta: bool,
}

impl Expanded {
    fn new(structure: &SystemStructure, how: Expansion) -> Result<Self> {
        let beta = match how {
            Expansion::Auto => structure.path_sets.is_empty(),
            Expansion::Alpha => false,
            Expansion::Beta => true,
        };
        let coeffs = if beta {
            beta_coefficients(structure)?
        } else {
            alpha_coefficients(structure)?
        };
        Ok(Self {
            coeffs: coeffs.into_iter().collect(),
            beta,
        })
    }

    fn positive_weight(&self) -> f64 {
        self.coeffs.iter().map(|&(_, c)| c.max(0) as f64).sum()
    }

    /// `P(T > m)` for every `m` in `lo..=hi`.
    fn survival(&self, model: &JointModel, lo: i64, hi: i64) -> Result<Vec<f64>> {
        let n = model.n();
        if let JointModel::ExplicitFinitePmf(_) = model {
            // one pass over the support per batch of thresholds
            let tables = model.partition_tables(lo, hi)?;
            return Ok(tables
                .into_iter()
                .map(|t| {
                    let (sums, full) = if self.beta {
                        (superset_sums(t, n), 0)
                    } else {
                        (subset_sums(t, n), (1u32 << n) - 1)
                    };
                    let acc: CompensatedSum = self
                        .coeffs
                        .iter()
                        .map(|&(k, c)| {
                            let v = if self.beta {
                                1.0 - sums[k.mask() as usize]
                            } else {
                                sums[(k.mask() ^ full) as usize]
                            };
                            c as f64 * v
                        })
                        .collect();
                    acc.value().clamp(0.0, 1.0)
                })
                .collect());
        }
        (lo..=hi).map(|m| self.survival_at(model, m)).collect()
    }

    fn survival_at(&self, model: &JointModel, m: i64) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for &(k, c) in &self.coeffs {
            let v = if self.beta {
                1.0 - model.rect_prob(k, Subset::EMPTY, m)?
            } else {
                model.rect_prob(Subset::EMPTY, k, m)?
            };
            acc.add(c as f64 * v);
        }
        Ok(acc.value().clamp(0.0, 1.0))
    }
}

/// `out[U] = sum_{L subset of U} t[L]`.
fn subset_sums(mut t: Vec<f64>, n: usize) -> Vec<f64> {
    for i in 0..n {
        let bit = 1 << i;
        for u in 0..t.len() {
            if u & bit != 0 {
                t[u] += t[u ^ bit];
            }
        }
    }
    t
}

/// `out[K] = sum_{L superset of K} t[L]`.
fn superset_sums(mut t: Vec<f64>, n: usize) -> Vec<f64> {
    for i in 0..n {
        let bit = 1 << i;
        for u in 0..t.len() {
            if u & bit == 0 {
                t[u] += t[u | bit];
            }
        }
    }
    t
}

fn check_system_model(model: &JointModel, structure: &SystemStructure) -> Result<()> {
    if model.n() != structure.n {
        return Err(Error::arg(format!(
            "structure has {} components but the model has {}",
            structure.n,
            model.n()
        )));
    }
    Ok(())
}

/// `P(T > m)`.
pub fn system_survival(model: &JointModel, structure: &SystemStructure, m: i64) -> Result<f64> {
    system_survival_with(model, structure, m, Expansion::Auto)
}

/// [`system_survival`] with a chosen expansion.
pub fn system_survival_with(
    model: &JointModel,
    structure: &SystemStructure,
    m: i64,
    how: Expansion,
) -> Result<f64> {
    check_system_model(model, structure)?;
    if m < -1 {
        return Err(Error::arg(format!("threshold m must be >= -1, got {m}")));
    }
    Expanded::new(structure, how)?.survival_at(model, m)
}

fn system_partial(model: &JointModel, exp: &Expanded, p: u32, last: i64) -> Result<f64> {
    const BATCH: i64 = 1 << 14;
    let mut total = CompensatedSum::new();
    let mut start = 0;
    while start <= last {
        let end = (start + BATCH - 1).min(last);
        for (w, s) in exp.survival(model, start, end)?.into_iter().enumerate() {
            total.add(moment_weight((start + w as i64) as u64, p) * s);
        }
        start = end + 1;
    }
    Ok(total.value())
}

fn check_order(p: u32) -> Result<()> {
    if p == 0 {
        Err(Error::arg("moment order must be at least 1"))
    } else {
        Ok(())
    }
}

/// Exact `E T^p` for a finite-support model.
pub fn system_moment_exact(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
) -> Result<MomentResult> {
    system_moment_exact_with(model, structure, p, Expansion::Auto)
}

pub fn system_moment_exact_with(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
    how: Expansion,
) -> Result<MomentResult> {
    check_system_model(model, structure)?;
    check_order(p)?;
    let k = model.max_support().ok_or_else(|| {
        Error::UnsupportedModel(
            "model has infinite support; use system_moment_approx with an error bound".into(),
        )
    })?;
    let exp = Expanded::new(structure, how)?;
    Ok(MomentResult {
        value: system_partial(model, &exp, p, k as i64 - 1)?,
        exact: true,
        m0_used: None,
        error_bound: None,
    })
}

/// Truncation plan for the system series.
///
/// The alpha form requires the tail condition at `d / sum alpha_K^+`; the
/// beta form at `d / ((2^n - 1) sum beta_K^+)`. Poisson marginals use the
/// closed quantile rule with the same weight.
pub fn system_plan(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
    d: f64,
    how: Expansion,
) -> Result<TruncationPlan> {
    check_system_model(model, structure)?;
    check_order(p)?;
    check_bound(d)?;
    let exp = Expanded::new(structure, how)?;
    plan_weighted(model, p, d, series_weight(&exp, structure.n), None)
}

fn series_weight(exp: &Expanded, n: usize) -> f64 {
    if exp.beta {
        (2f64.powi(n as i32) - 1.0) * exp.positive_weight()
    } else {
        exp.positive_weight()
    }
}

fn check_bound(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("error bound must be positive, got {d}")))
    }
}

/// Truncated `E T^p` with error in `[0, d]`.
pub fn system_moment_approx(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
    d: f64,
) -> Result<MomentResult> {
    system_moment_approx_with(model, structure, p, d, Expansion::Auto)
}

pub fn system_moment_approx_with(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
    d: f64,
    how: Expansion,
) -> Result<MomentResult> {
    let plan = system_plan(model, structure, p, d, how)?;
    system_moment_truncated(model, structure, p, d, &plan, how)
}

/// The system series cut at `plan.m0`.
pub fn system_moment_truncated(
    model: &JointModel,
    structure: &SystemStructure,
    p: u32,
    d: f64,
    plan: &TruncationPlan,
    how: Expansion,
) -> Result<MomentResult> {
    check_system_model(model, structure)?;
    check_order(p)?;
    if plan.m0 < -1 {
        return Err(Error::arg(format!("M0 must be >= -1, got {}", plan.m0)));
    }
    let exp = Expanded::new(structure, how)?;
    Ok(MomentResult {
        value: system_partial(model, &exp, p, plan.m0)?,
        exact: false,
        m0_used: Some(plan.m0),
        error_bound: Some(d),
    })
}

fn odds(theta: f64) -> Result<f64> {
    if theta >= 1.0 {
        return Err(Error::Defective(
            "a subset minimum with nonzero coefficient never fails (theta = 1)".into(),
        ));
    }
    Ok(theta / (1.0 - theta))
}

/// Factorial moment `E (T)_p` for MVG component lifetimes, in closed form.
pub fn system_moment_mvg(params: &MvgParams, structure: &SystemStructure, p: u32) -> Result<f64> {
    check_order(p)?;
    if params.n() != structure.n {
        return Err(Error::arg(format!(
            "structure has {} components but the parameters have {}",
            structure.n,
            params.n()
        )));
    }
    let pw = p as i32;
    let mut acc = CompensatedSum::new();
    if params.levels().is_some() {
        for (i, &a) in minimal_signature(structure)?.iter().enumerate() {
            if a != 0 {
                acc.add(a as f64 * odds(params.min_param_by_size(i + 1))?.powi(pw));
            }
        }
    } else {
        for (k, a) in alpha_coefficients(structure)? {
            acc.add(a as f64 * odds(params.min_param(k))?.powi(pw));
        }
    }
    Ok(factorial(p) * acc.value())
}

/// `(E T, Var T)` for MVG component lifetimes.
pub fn system_mvg_mean_var(params: &MvgParams, structure: &SystemStructure) -> Result<(f64, f64)> {
    let mean = system_moment_mvg(params, structure, 1)?;
    let second = system_moment_mvg(params, structure, 2)?;
    Ok((mean, second + mean * (1.0 - mean)))
}

/// Raw moments `E T^1..E T^p` for MVG component lifetimes.
pub fn system_raw_moments_mvg(
    params: &MvgParams,
    structure: &SystemStructure,
    p: u32,
) -> Result<Vec<f64>> {
    check_order(p)?;
    let fac = (1..=p)
        .map(|q| system_moment_mvg(params, structure, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(factorial_to_raw(&fac))
}

fn combine<F>(coeffs: Coefficients, provider: F) -> Result<f64>
where
    F: Fn(Subset) -> Result<f64>,
{
    let mut acc = CompensatedSum::new();
    for (k, c) in coeffs {
        let v = provider(k)?;
        if !v.is_finite() {
            return Err(Error::InfiniteMoment(format!(
                "moment for subset {k} is not finite"
            )));
        }
        acc.add(c as f64 * v);
    }
    Ok(acc.value())
}

/// `sum_K alpha_K m(K)` where `m(K)` is a (raw or factorial) moment of
/// `min_{i in K} X_i`; the result is the same kind of moment of `T`.
pub fn system_moment_from_min_moments<F>(structure: &SystemStructure, provider: F) -> Result<f64>
where
    F: Fn(Subset) -> Result<f64>,
{
    combine(alpha_coefficients(structure)?, provider)
}

/// `sum_K beta_K m(K)` with `m(K)` a moment of `max_{i in K} X_i`.
pub fn system_moment_from_max_moments<F>(structure: &SystemStructure, provider: F) -> Result<f64>
where
    F: Fn(Subset) -> Result<f64>,
{
    combine(beta_coefficients(structure)?, provider)
}

/// Minimal or maximal signature of a system with exchangeable components.
#[derive(Debug, Clone, PartialEq)]
pub enum Signature {
    Minimal(Vec<f64>),
    Maximal(Vec<f64>),
}

impl Signature {
    fn weights(&self) -> &[f64] {
        match self {
            Signature::Minimal(v) | Signature::Maximal(v) => v,
        }
    }
}

/// `E T^p` for exchangeable components from a signature vector; exact on
/// finite supports, otherwise truncated with error at most `d`.
pub fn exchangeable_system_moment(
    model: &JointModel,
    signature: &Signature,
    p: u32,
    d: Option<f64>,
) -> Result<MomentResult> {
    check_order(p)?;
    if !model.is_exchangeable() {
        return Err(Error::UnsupportedModel(
            "signature formulas need a model declared exchangeable".into(),
        ));
    }
    let n = model.n();
    let w = signature.weights();
    if w.len() != n {
        return Err(Error::arg(format!(
            "signature has length {}, expected {n}",
            w.len()
        )));
    }
    let maximal = matches!(signature, Signature::Maximal(_));
    let surv = |m: i64| -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for (i, &a) in w.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let first = Subset::first(i + 1);
            let v = if maximal {
                1.0 - model.rect_prob(first, Subset::EMPTY, m)?
            } else {
                model.rect_prob(Subset::EMPTY, first, m)?
            };
            acc.add(a * v);
        }
        Ok(acc.value().clamp(0.0, 1.0))
    };
    let (last, exact, plan_m0) = match model.max_support() {
        Some(k) => (k as i64 - 1, true, None),
        None => {
            let d = d.ok_or_else(|| Error::arg("infinite support needs an error bound d"))?;
            check_bound(d)?;
            let pos: f64 = w.iter().map(|&a| a.max(0.0)).sum();
            let weight = if maximal {
                (2f64.powi(n as i32) - 1.0) * pos
            } else {
                pos
            };
            let plan = plan_weighted(model, p, d, weight, None)?;
            (plan.m0, false, Some(plan.m0))
        }
    };
    let mut total = CompensatedSum::new();
    for m in 0..=last {
        total.add(moment_weight(m as u64, p) * surv(m)?);
    }
    Ok(MomentResult {
        value: total.value(),
        exact,
        m0_used: plan_m0,
        error_bound: if exact { None } else { d },
    })
}

/// Every non-empty subset with its coefficient, zeros included; handy for display.
pub fn dense_coefficients(n: usize, coeffs: &Coefficients) -> Result<Vec<(Subset, i64)>> {
    check_cap(n, "dense coefficient listing")?;
    Ok(nonempty_subsets(n)
        .map(|k| (k, coeffs.get(&k).copied().unwrap_or(0)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::MarginalDist;
    use crate::mvg::geometric_factorial_moment;
    use approx::assert_abs_diff_eq;

    fn s(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx.iter().copied()).unwrap()
    }

    fn r(a: i64, b: i64) -> Rational64 {
        Rational64::new(a, b)
    }

    #[test]
    fn validation() {
        assert!(SystemStructure::new(3, vec![s(3, &[1, 2]), s(3, &[1])], None).is_err());
        assert!(SystemStructure::new(3, vec![s(3, &[1, 2])], None).is_err());
        assert!(SystemStructure::new(2, vec![], None).is_err());
        assert!(SystemStructure::new(2, vec![Subset::EMPTY], None).is_err());
        assert!(SystemStructure::from_cut_sets(2, vec![s(2, &[1, 2])]).is_ok());
    }

    #[test]
    fn coefficient_examples() {
        let series = SystemStructure::series(4).unwrap();
        let a = alpha_coefficients(&series).unwrap();
        assert_eq!(
            a.into_iter().collect::<Vec<_>>(),
            vec![(Subset::full(4), 1)]
        );

        let par = SystemStructure::parallel(2).unwrap();
        let a = alpha_coefficients(&par).unwrap();
        assert_eq!(a[&s(2, &[1])], 1);
        assert_eq!(a[&s(2, &[2])], 1);
        assert_eq!(a[&s(2, &[1, 2])], -1);
        let b = beta_coefficients(&par).unwrap();
        assert_eq!(b.into_iter().collect::<Vec<_>>(), vec![(s(2, &[1, 2]), 1)]);

        let ser2 = SystemStructure::series(2).unwrap();
        let b = beta_coefficients(&ser2).unwrap();
        assert_eq!(
            (b[&s(2, &[1])], b[&s(2, &[2])], b[&s(2, &[1, 2])]),
            (1, 1, -1)
        );

        let only_paths = SystemStructure::new(2, vec![s(2, &[1, 2])], None).unwrap();
        assert!(beta_coefficients(&only_paths).is_err());
    }

    #[test]
    fn bridge_coefficients() {
        let b = SystemStructure::bridge();
        let a = alpha_coefficients(&b).unwrap();
        for p in b.path_sets() {
            assert_eq!(a[p], 1);
        }
        for i in 1..=5 {
            assert_eq!(
                a[&Subset::full(5).intersection(s(5, &[i]).complement(5))],
                -1
            );
        }
        assert_eq!(a[&Subset::full(5)], 2);
        assert_eq!(a.len(), 10);
        assert_eq!(minimal_signature(&b).unwrap(), vec![0, 2, 2, -5, 2]);
        let beta = beta_coefficients(&b).unwrap();
        assert_eq!(beta.values().sum::<i64>(), 1);
        assert_eq!(maximal_signature(&b).unwrap().iter().sum::<i64>(), 1);
    }

    #[test]
    fn signature_routes() {
        let b = SystemStructure::bridge();
        let sam = samaniego_signature(&b).unwrap();
        assert_eq!(sam, vec![r(0, 1), r(1, 5), r(3, 5), r(1, 5), r(0, 1)]);
        let alpha = signature_from_samaniego(&sam).unwrap();
        let want: Vec<Rational64> = [0, 2, 2, -5, 2].iter().map(|&v| r(v, 1)).collect();
        assert_eq!(alpha, want);
        let f = signature_from_samaniego_f64(&[0.0, 0.2, 0.6, 0.2, 0.0]).unwrap();
        for (x, y) in f.iter().zip([0.0, 2.0, 2.0, -5.0, 2.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        let series = signature_from_samaniego(&[r(1, 1), r(0, 1), r(0, 1)]).unwrap();
        assert_eq!(series, vec![r(0, 1), r(0, 1), r(1, 1)]);
        assert!(signature_from_samaniego(&[r(1, 2), r(1, 3)]).is_err());
        assert!(signature_from_samaniego(&[r(3, 2), r(-1, 2)]).is_err());
        assert!(signature_from_samaniego_f64(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn k_out_of_n_signatures_agree() {
        for n in 1..=6 {
            for k in 1..=n {
                let st = SystemStructure::k_out_of_n_g(k, n).unwrap();
                // a k-out-of-n:G system fails at the (n-k+1)-th failure
                let mut unit = vec![r(0, 1); n];
                unit[n - k] = r(1, 1);
                assert_eq!(samaniego_signature(&st).unwrap(), unit);
                let from_sam = signature_from_samaniego(&unit).unwrap();
                let direct: Vec<Rational64> = minimal_signature(&st)
                    .unwrap()
                    .into_iter()
                    .map(|v| r(v, 1))
                    .collect();
                assert_eq!(from_sam, direct);
            }
        }
    }

    #[test]
    fn derived_cut_sets() {
        let b = SystemStructure::new(5, SystemStructure::bridge().path_sets().to_vec(), None)
            .unwrap()
            .with_derived_sets()
            .unwrap();
        let mut got = b.cut_sets().unwrap().to_vec();
        let mut want = SystemStructure::bridge().cut_sets().unwrap().to_vec();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn survival_examples() {
        let bits = JointModel::independent_finite(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let par = SystemStructure::parallel(2).unwrap();
        assert_abs_diff_eq!(
            system_survival(&bits, &par, 0).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        let ser = SystemStructure::series(2).unwrap();
        let want = bits.rect_prob(Subset::EMPTY, Subset::full(2), 0).unwrap();
        assert_abs_diff_eq!(
            system_survival(&bits, &ser, 0).unwrap(),
            want,
            epsilon = 1e-15
        );
        let res = system_moment_exact(&bits, &ser, 1).unwrap();
        assert_abs_diff_eq!(res.value, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bridge_exact_against_enumeration() {
        let pmf = vec![0.1, 0.4, 0.3, 0.2];
        let model = JointModel::independent_finite(vec![pmf.clone(); 5]).unwrap();
        let b = SystemStructure::bridge();
        let mut want = [0.0f64; 3];
        for code in 0..4usize.pow(5) {
            let x: Vec<usize> = (0..5).map(|i| (code / 4usize.pow(i)) % 4).collect();
            let prob: f64 = x.iter().map(|&v| pmf[v]).product();
            let t = b
                .path_sets()
                .iter()
                .map(|ps| ps.indices().map(|i| x[i - 1]).min().unwrap())
                .max()
                .unwrap() as f64;
            for (p, w) in want.iter_mut().enumerate() {
                *w += prob * t.powi(p as i32 + 1);
            }
        }
        for p in 1..=3u32 {
            for how in [Expansion::Alpha, Expansion::Beta] {
                let got = system_moment_exact_with(&model, &b, p, how).unwrap().value;
                assert_abs_diff_eq!(got, want[p as usize - 1], epsilon = 1e-12);
            }
        }
        let explicit: JointModel = crate::joint::ExplicitPmf::new(
            5,
            (0..4usize.pow(5)).map(|code| {
                let x: Vec<u32> = (0..5)
                    .map(|i| ((code / 4usize.pow(i)) % 4) as u32)
                    .collect();
                let prob: f64 = x.iter().map(|&v| pmf[v as usize]).product();
                (x, prob)
            }),
        )
        .unwrap()
        .into();
        for how in [Expansion::Alpha, Expansion::Beta] {
            let got = system_moment_exact_with(&explicit, &b, 2, how)
                .unwrap()
                .value;
            assert_abs_diff_eq!(got, want[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn mvg_closed_forms() {
        let b = SystemStructure::bridge();
        let ind = MvgParams::new(
            5,
            [
                (s(5, &[1]), 0.9),
                (s(5, &[2]), 0.9),
                (s(5, &[3]), 0.8),
                (s(5, &[4]), 0.8),
                (s(5, &[5]), 0.8),
            ],
        )
        .unwrap();
        let (m, v) = system_mvg_mean_var(&ind, &b).unwrap();
        assert_abs_diff_eq!(m, 5.237, epsilon = 5e-4);
        assert_abs_diff_eq!(v, 20.001, epsilon = 5e-4);

        let pi: f64 = 0.5;
        let iid = MvgParams::iid_geometric(pi, 5).unwrap();
        let a = |k: i32| 1.0 / (1.0 - (1.0 - pi).powi(k)) - 1.0;
        let want = 2.0 * a(2) + 2.0 * a(3) - 5.0 * a(4) + 2.0 * a(5);
        assert_abs_diff_eq!(
            system_moment_mvg(&iid, &b, 1).unwrap(),
            want,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            want,
            2.0 / 3.0 + 2.0 / 7.0 - 1.0 / 3.0 + 2.0 / 31.0,
            epsilon = 1e-14
        );

        // composition of the minimum law with the geometric factorial moment
        let composed = system_moment_from_min_moments(&b, |k| {
            geometric_factorial_moment(crate::mvg::mvg_min_param(&ind, k)?, 2)
        })
        .unwrap();
        assert_abs_diff_eq!(
            composed,
            system_moment_mvg(&ind, &b, 2).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn from_min_moments_series_and_errors() {
        let series = SystemStructure::series(3).unwrap();
        let v = system_moment_from_min_moments(&series, |k| Ok(k.len() as f64)).unwrap();
        assert_eq!(v, 3.0);
        let err = system_moment_from_min_moments(&series, |_| Ok(f64::INFINITY));
        assert!(matches!(err, Err(Error::InfiniteMoment(_))));
    }

    #[test]
    fn exchangeable_signature_route() {
        let bits = JointModel::iid(MarginalDist::finite(vec![0.5, 0.5]).unwrap(), 2).unwrap();
        let res = exchangeable_system_moment(&bits, &Signature::Minimal(vec![2.0, -1.0]), 1, None)
            .unwrap();
        assert_abs_diff_eq!(res.value, 0.75, epsilon = 1e-15);
        assert!(res.exact);
        let not_exch = bits.clone().with_exchangeable(false);
        assert!(exchangeable_system_moment(
            &not_exch,
            &Signature::Minimal(vec![2.0, -1.0]),
            1,
            None
        )
        .is_err());
    }

    #[test]
    fn poisson_bridge_plan_weight() {
        let model = JointModel::iid(MarginalDist::poisson(1.0).unwrap(), 5).unwrap();
        let b = SystemStructure::bridge();
        let plan = system_plan(&model, &b, 1, 5e-4, Expansion::Alpha).unwrap();
        assert_eq!(plan.m0, 6);
        let res = system_moment_approx(&model, &b, 1, 5e-4).unwrap();
        assert_abs_diff_eq!(res.value, 0.877, epsilon = 5e-4);
        assert_eq!(res.m0_used, Some(6));
        let huge = system_plan(&model, &b, 2, 1e9, Expansion::Alpha).unwrap();
        assert_eq!(huge.m0, 0);
    }
}
