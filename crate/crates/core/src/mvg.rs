//! Multivariate geometric (common-shock) lifetimes.
//!
//! Component `i` fails at `X_i = min{M_I : I contains i}` where the shock
//! times `M_I ~ ge(1 - theta_I)` are independent. Shocks are stored sparsely:
//! a subset that is not listed has `theta_I = 1` and never fires.
//!
//! Order-statistic factorial moments come out in closed form from the
//! geometric law of subset minima combined with the alternating
//! rank-to-minimum recurrence; raw moments follow from the Stirling
//! basis change in [`factorial_to_raw`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::{binomial_f64, factorial, stirling2_table, CompensatedSum};
use crate::subset::{check_cap, k_subsets, Subset};

/// Shock parameters of an MVG vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MvgParams {
    n: usize,
    /// Stored shocks with `theta < 1`, ordered by mask.
    shocks: Vec<(Subset, f64)>,
    /// `theta_s` for every subset of size `s`, when given by level.
    levels: Option<Vec<f64>>,
    exchangeable: bool,
}

impl MvgParams {
    /// Sparse parametrization: any subset not listed has `theta = 1`.
    pub fn new<I>(n: usize, shocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Subset, f64)>,
    {
        if n == 0 || n > 32 {
            return Err(Error::arg(format!(
                "subset-parametrized MVG supports 1..=32 components, got {n}"
            )));
        }
        let full = Subset::full(n);
        let mut map = BTreeMap::new();
        for (set, theta) in shocks {
            if set.is_empty() || !set.is_subset_of(full) {
                return Err(Error::arg(format!(
                    "shock set {set} is not a non-empty subset of 1..={n}"
                )));
            }
            check_theta(theta, &set.to_string())?;
            if map.insert(set, theta).is_some() {
                return Err(Error::arg(format!("shock set {set} listed twice")));
            }
        }
        let shocks: Vec<(Subset, f64)> = map.into_iter().filter(|&(_, t)| t < 1.0).collect();
        for i in 1..=n {
            if !shocks.iter().any(|(s, _)| s.contains(i)) {
                return Err(Error::Defective(format!(
                    "component {i} is hit by no shock with theta < 1 and never fails"
                )));
            }
        }
        Ok(Self {
            n,
            shocks,
            levels: None,
            exchangeable: false,
        })
    }

    /// Exchangeable parametrization `theta_I = levels[|I| - 1]`.
    pub fn exchangeable(levels: Vec<f64>) -> Result<Self> {
        let n = levels.len();
        if n == 0 {
            return Err(Error::arg("exchangeable MVG needs at least one level"));
        }
        for (s, &t) in levels.iter().enumerate() {
            check_theta(t, &format!("level {}", s + 1))?;
        }
        if levels.iter().all(|&t| t == 1.0) {
            return Err(Error::Defective(
                "every level theta equals 1; components never fail".into(),
            ));
        }
        Ok(Self {
            n,
            shocks: Vec::new(),
            levels: Some(levels),
            exchangeable: true,
        })
    }

    /// IID `ge(pi)` components: singleton shocks only.
    pub fn iid_geometric(pi: f64, n: usize) -> Result<Self> {
        let mut levels = vec![1.0; n];
        if n > 0 {
            levels[0] = 1.0 - pi;
        }
        Self::exchangeable(levels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_exchangeable(&self) -> bool {
        self.exchangeable
    }

    pub(crate) fn set_exchangeable_flag(&mut self, flag: bool) {
        // a level parametrization is exchangeable by construction
        self.exchangeable = flag || self.levels.is_some();
    }

    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    /// `theta_I` for a non-empty subset.
    pub fn theta(&self, set: Subset) -> f64 {
        match &self.levels {
            Some(lv) => lv.get(set.len().wrapping_sub(1)).copied().unwrap_or(1.0),
            None => self
                .shocks
                .binary_search_by(|(s, _)| s.cmp(&set))
                .map_or(1.0, |k| self.shocks[k].1),
        }
    }

    /// Every shock with `theta < 1`; level parametrizations are expanded
    /// (requires `n <= 20`).
    pub fn shocks(&self) -> Result<Vec<(Subset, f64)>> {
        match &self.levels {
            None => Ok(self.shocks.clone()),
            Some(lv) => {
                check_cap(self.n, "expanding exchangeable shocks")?;
                let mut out = Vec::new();
                for (s, &t) in lv.iter().enumerate() {
                    if t < 1.0 {
                        out.extend(k_subsets(self.n, s + 1).map(|set| (set, t)));
                    }
                }
                out.sort_by_key(|(s, _)| *s);
                Ok(out)
            }
        }
    }

    /// `prod_{I : I meets S} theta_I`; the minimum over `S` is `ge(1 - .)`.
    /// The empty set gives 1.
    pub(crate) fn min_param(&self, set: Subset) -> f64 {
        if set.is_empty() {
            return 1.0;
        }
        match &self.levels {
            Some(_) => self.min_param_by_size(set.len()),
            None => {
                let hits = self.shocks.iter().filter(|(s, _)| s.intersects(set));
                product_of(hits.map(|&(_, t)| (t, 1.0)))
            }
        }
    }

    /// Exchangeable case: `prod_s theta_s^{C(n,s) - C(n-k,s)}` for a set of size `k`.
    pub(crate) fn min_param_by_size(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let lv = self.levels.as_ref().expect("level parametrization");
        let n = self.n as u64;
        product_of(lv.iter().enumerate().map(|(s, &t)| {
            let s = s as u64 + 1;
            (t, binomial_f64(n, s) - binomial_f64(n - k as u64, s))
        }))
    }

    /// `theta` of the marginal `X_j ~ ge(1 - theta)`.
    pub fn marginal_theta(&self, j: usize) -> f64 {
        match &self.levels {
            Some(_) => self.min_param_by_size(1),
            None => self.min_param(Subset::from_mask(1 << (j - 1))),
        }
    }

    /// `prod` over all stored shocks.
    pub fn theta_all(&self) -> f64 {
        match &self.levels {
            Some(_) => self.min_param_by_size(self.n),
            None => product_of(self.shocks.iter().map(|&(_, t)| (t, 1.0))),
        }
    }

    /// `min_param` for every mask `0..2^n`.
    pub fn min_params_all(&self) -> Result<Vec<f64>> {
        check_cap(self.n, "MVG subset table")?;
        let size = 1usize << self.n;
        if self.levels.is_some() {
            let by_size: Vec<f64> = (0..=self.n)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        self.min_param_by_size(k)
                    }
                })
                .collect();
            return Ok((0..size)
                .map(|b| by_size[b.count_ones() as usize])
                .collect());
        }
        let use_log = self.shocks.iter().any(|&(_, t)| t < 1e-3);
        let mut acc = vec![if use_log { 0.0 } else { 1.0 }; size];
        for &(set, t) in &self.shocks {
            let f = if use_log { t.ln() } else { t };
            for (b, a) in acc.iter_mut().enumerate() {
                if set.mask() as usize & b != 0 {
                    if use_log {
                        *a += f;
                    } else {
                        *a *= f;
                    }
                }
            }
        }
        if use_log {
            acc.iter_mut().for_each(|a| *a = a.exp());
        }
        Ok(acc)
    }
}

fn check_theta(theta: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::arg(format!(
            "theta for {what} must lie in [0,1], got {theta}"
        )));
    }
    Ok(())
}

/// Product of `base^exp` pairs; logs are used once any base drops below 1e-3.
fn product_of<I: IntoIterator<Item = (f64, f64)>>(items: I) -> f64 {
    crate::numeric::product_unit(items)
}

/// `P(X_1 > k_1, ..., X_n > k_n)` for `k_i >= -1`.
pub fn mvg_joint_survival(params: &MvgParams, k: &[i64]) -> Result<f64> {
    if k.len() != params.n {
        return Err(Error::arg(format!(
            "threshold vector has length {}, expected {}",
            k.len(),
            params.n
        )));
    }
    if let Some(bad) = k.iter().find(|&&x| x < -1) {
        return Err(Error::arg(format!("thresholds must be >= -1, got {bad}")));
    }
    if let Some(lv) = &params.levels {
        // a size-s subset whose largest threshold sits at sorted rank j
        // (descending) can be chosen in C(n-j, s-1) ways
        let mut sorted = k.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let n = params.n as u64;
        let mut factors = Vec::new();
        for (s, &t) in lv.iter().enumerate() {
            if t == 1.0 {
                continue;
            }
            let s = s as u64 + 1;
            let expo: f64 = sorted
                .iter()
                .enumerate()
                .map(|(j, &kj)| binomial_f64(n - 1 - j as u64, s - 1) * (kj + 1) as f64)
                .sum();
            factors.push((t, expo));
        }
        return Ok(product_of(factors));
    }
    let factors = params.shocks.iter().map(|&(set, t)| {
        let mx = set.indices().map(|i| k[i - 1]).max().unwrap_or(-1);
        (t, (mx + 1) as f64)
    });
    Ok(product_of(factors))
}

/// MVG parameters of the sub-vector indexed by `subset`, re-indexed `1..=|subset|`
/// in increasing order of the original indices.
pub fn mvg_marginal(params: &MvgParams, subset: Subset) -> Result<MvgParams> {
    if subset.is_empty() {
        return Err(Error::arg("marginal of an empty subset"));
    }
    if !subset.is_subset_of(Subset::full(params.n.min(32))) {
        return Err(Error::arg(format!(
            "subset {subset} exceeds {} components",
            params.n
        )));
    }
    let s = subset.len();
    if let Some(lv) = &params.levels {
        let rest = (params.n - s) as u64;
        let new_levels = (1..=s)
            .map(|k| {
                product_of((0..=rest).map(|t| {
                    let level = k + t as usize;
                    (lv[level - 1], binomial_f64(rest, t))
                }))
            })
            .collect();
        let mut out = MvgParams::exchangeable(new_levels)?;
        out.exchangeable = true;
        return Ok(out);
    }
    let positions: Vec<usize> = subset.indices().collect();
    let reindex = |set: Subset| -> Subset {
        let mut mask = 0u32;
        for (new, &old) in positions.iter().enumerate() {
            if set.contains(old) {
                mask |= 1 << new;
            }
        }
        Subset::from_mask(mask)
    };
    let mut acc: BTreeMap<Subset, Vec<f64>> = BTreeMap::new();
    for &(set, t) in &params.shocks {
        let inter = set.intersection(subset);
        if !inter.is_empty() {
            acc.entry(reindex(inter)).or_default().push(t);
        }
    }
    let shocks = acc
        .into_iter()
        .map(|(k, ts)| (k, product_of(ts.into_iter().map(|t| (t, 1.0)))));
    let mut out = MvgParams::new(s, shocks)?;
    out.exchangeable = params.exchangeable;
    Ok(out)
}

/// `theta` such that `min_{i in subset} X_i ~ ge(1 - theta)`.
pub fn mvg_min_param(params: &MvgParams, subset: Subset) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::arg("minimum over an empty subset"));
    }
    if !subset.is_subset_of(Subset::full(params.n.min(32))) {
        return Err(Error::arg(format!(
            "subset {subset} exceeds {} components",
            params.n
        )));
    }
    Ok(params.min_param(subset))
}

/// `E (Y)_p = p! (theta / (1 - theta))^p` for `Y ~ ge(1 - theta)`.
pub fn geometric_factorial_moment(theta: f64, p: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Defective(format!(
            "geometric with theta = {theta} has no finite moments"
        )));
    }
    check_order(p)?;
    Ok(factorial(p) * odds(theta).powi(p as i32))
}

fn odds(theta: f64) -> f64 {
    // 1/(1 - theta) - 1
    theta / (1.0 - theta)
}

fn check_order(p: u32) -> Result<()> {
    if p == 0 {
        Err(Error::arg("moment order must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_rank(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        Err(Error::arg(format!("rank {r} outside 1..={n}")))
    } else {
        Ok(())
    }
}

/// Per-`j` subset sums entering the order-statistic factorial moment.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialMomentTerms {
    /// `s[j] = sum over (n-j)-subsets S of (theta(S)/(1-theta(S)))^p`, `j = 0..r`.
    pub s: Vec<f64>,
}

/// Factorial moment together with a cancellation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorialMoment {
    pub value: f64,
    /// Largest absolute term of the alternating sum divided by `|value|`.
    pub cancellation_ratio: f64,
}

/// Builds the subset sums for ranks up to `r`.
pub fn subset_sums(params: &MvgParams, r: usize, p: u32) -> Result<FactorialMomentTerms> {
    let n = params.n;
    check_rank(r, n)?;
    check_order(p)?;
    let pw = p as i32;
    let term = |theta: f64| -> Result<f64> {
        if theta >= 1.0 {
            return Err(Error::Defective("a subset minimum has theta = 1".into()));
        }
        Ok(odds(theta).powi(pw))
    };
    let mut s = Vec::with_capacity(r);
    if params.levels.is_some() {
        for j in 0..r {
            let theta = params.min_param_by_size(n - j);
            s.push(binomial_f64(n as u64, j as u64) * term(theta)?);
        }
        return Ok(FactorialMomentTerms { s });
    }
    check_cap(n, "MVG factorial moment")?;
    for j in 0..r {
        let mut acc = CompensatedSum::new();
        for set in k_subsets(n, n - j) {
            acc.add(term(params.min_param(set))?);
        }
        s.push(acc.value());
    }
    Ok(FactorialMomentTerms { s })
}

/// `E (X_{r:n})_p` in closed form, with the cancellation diagnostic.
pub fn mvg_orderstat_factorial_moment_diag(
    params: &MvgParams,
    r: usize,
    p: u32,
) -> Result<FactorialMoment> {
    let n = params.n;
    let terms = subset_sums(params, r, p)?;
    let mut acc = CompensatedSum::new();
    let mut largest = 0.0f64;
    for (j, sj) in terms.s.iter().enumerate() {
        let sign = if (r - 1 - j).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let t = sign * binomial_f64((n - j - 1) as u64, (n - r) as u64) * sj;
        largest = largest.max(t.abs());
        acc.add(t);
    }
    let value = factorial(p) * acc.value();
    let scaled = factorial(p) * largest;
    let cancellation_ratio = if value == 0.0 {
        if scaled == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        scaled / value.abs()
    };
    Ok(FactorialMoment {
        value,
        cancellation_ratio,
    })
}

/// `E (X_{r:n})_p` for an MVG vector with `n` components.
pub fn mvg_orderstat_factorial_moment(params: &MvgParams, r: usize, p: u32) -> Result<f64> {
    mvg_orderstat_factorial_moment_diag(params, r, p).map(|f| f.value)
}

/// Mean and variance of `X_{r:n}`.
pub fn mvg_orderstat_mean_var(params: &MvgParams, r: usize) -> Result<(f64, f64)> {
    let mean = mvg_orderstat_factorial_moment(params, r, 1)?;
    let second = mvg_orderstat_factorial_moment(params, r, 2)?;
    Ok((mean, second + mean * (1.0 - mean)))
}

/// Raw moments `E X^1..E X^p` from factorial moments `E(X)_1..E(X)_p`.
pub fn factorial_to_raw(factorials: &[f64]) -> Vec<f64> {
    let p = factorials.len();
    let s2 = stirling2_table(p);
    (1..=p)
        .map(|q| {
            (1..=q)
                .map(|k| s2[q][k] as f64 * factorials[k - 1])
                .collect::<CompensatedSum>()
                .value()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            MvgParams::new(2, [(set(2, &[1]), 0.5)]),
            Err(Error::Defective(_))
        ));
        assert!(MvgParams::new(2, [(set(2, &[1, 2]), 1.5)]).is_err());
        assert!(MvgParams::new(2, [(Subset::EMPTY, 0.5)]).is_err());
        assert!(MvgParams::new(2, [(set(2, &[1, 2]), 0.5), (set(2, &[1, 2]), 0.4)]).is_err());
        assert!(matches!(
            MvgParams::exchangeable(vec![1.0, 1.0]),
            Err(Error::Defective(_))
        ));
        assert!(MvgParams::new(2, [(set(2, &[1, 2]), 0.5)]).is_ok());
    }

    #[test]
    fn joint_survival_examples() {
        let p = MvgParams::new(2, [(set(2, &[1]), 0.5), (set(2, &[2]), 0.5)]).unwrap();
        assert_eq!(mvg_joint_survival(&p, &[-1, -1]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            mvg_joint_survival(&p, &[1, 0]).unwrap(),
            0.125,
            epsilon = 1e-15
        );
        let q = MvgParams::new(
            3,
            [
                (set(3, &[1]), 0.8),
                (set(3, &[2]), 0.8),
                (set(3, &[3]), 0.8),
                (set(3, &[1, 2, 3]), 0.9),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(
            mvg_joint_survival(&q, &[0, 0, 0]).unwrap(),
            0.4608,
            epsilon = 1e-14
        );
        assert!(mvg_joint_survival(&q, &[0, 0]).is_err());
    }

    #[test]
    fn level_survival_matches_expanded_shocks() {
        let lv = MvgParams::exchangeable(vec![0.9, 0.95, 0.97, 0.99]).unwrap();
        let sparse = MvgParams::new(4, lv.shocks().unwrap()).unwrap();
        for k in [[-1, -1, -1, -1], [0, 3, 1, 2], [5, 5, 0, -1], [2, 2, 2, 2]] {
            let a = mvg_joint_survival(&lv, &k).unwrap();
            let b = mvg_joint_survival(&sparse, &k).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn marginal_examples() {
        let p = MvgParams::new(
            2,
            [
                (set(2, &[1]), 0.7),
                (set(2, &[1, 2]), 0.9),
                (set(2, &[2]), 0.6),
            ],
        )
        .unwrap();
        let m = mvg_marginal(&p, set(2, &[1])).unwrap();
        assert_abs_diff_eq!(m.theta(set(1, &[1])), 0.7 * 0.9, epsilon = 1e-15);
        let same = mvg_marginal(&p, Subset::full(2)).unwrap();
        assert_eq!(same, p);
        assert!(mvg_marginal(&p, Subset::EMPTY).is_err());
    }

    #[test]
    fn min_param_examples() {
        let lv = MvgParams::exchangeable(vec![0.9, 0.99, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
            .unwrap();
        let full = mvg_min_param(&lv, Subset::full(10)).unwrap();
        let want = 0.9f64.powi(10) * 0.99f64.powi(45);
        assert_abs_diff_eq!(full, want, epsilon = 1e-14);
        assert_abs_diff_eq!(full, 0.22182, epsilon = 1e-5);
        assert_abs_diff_eq!(full / (1.0 - full), 0.285, epsilon = 5e-4);
        assert_abs_diff_eq!(full, lv.theta_all(), epsilon = 1e-15);

        let ind = MvgParams::new(
            3,
            [
                (set(3, &[1]), 0.3),
                (set(3, &[2]), 0.4),
                (set(3, &[3]), 0.5),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(mvg_min_param(&ind, set(3, &[2])).unwrap(), 0.4);
        assert!(mvg_min_param(&ind, Subset::EMPTY).is_err());
    }

    #[test]
    fn geometric_factorial_examples() {
        assert_abs_diff_eq!(geometric_factorial_moment(0.5, 1).unwrap(), 1.0);
        assert_abs_diff_eq!(geometric_factorial_moment(0.5, 2).unwrap(), 2.0);
        assert_eq!(geometric_factorial_moment(0.0, 3).unwrap(), 0.0);
        assert!(matches!(
            geometric_factorial_moment(1.0, 1),
            Err(Error::Defective(_))
        ));
    }

    #[test]
    fn single_variable_mean_var() {
        let p = MvgParams::new(1, [(set(1, &[1]), 0.5)]).unwrap();
        let (m, v) = mvg_orderstat_mean_var(&p, 1).unwrap();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn independent_minimum_reduces_to_geometric() {
        let thetas = [0.9, 0.85, 0.7, 0.95];
        let p = MvgParams::new(
            4,
            thetas
                .iter()
                .enumerate()
                .map(|(i, &t)| (set(4, &[i + 1]), t)),
        )
        .unwrap();
        let prod: f64 = thetas.iter().product();
        for q in 1..=3 {
            let a = mvg_orderstat_factorial_moment(&p, 1, q).unwrap();
            let b = geometric_factorial_moment(prod, q).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn factorial_to_raw_examples() {
        assert_eq!(factorial_to_raw(&[1.0, 2.0]), vec![1.0, 3.0]);
        assert_eq!(factorial_to_raw(&[2.5]), vec![2.5]);
        // random pmf on {0..5}: enumerate both kinds of moments
        let pmf = [0.1, 0.25, 0.05, 0.3, 0.2, 0.1];
        let fall = |x: f64, k: usize| (0..k).map(|i| x - i as f64).product::<f64>();
        let fac: Vec<f64> = (1..=4)
            .map(|k| {
                pmf.iter()
                    .enumerate()
                    .map(|(x, p)| p * fall(x as f64, k))
                    .sum()
            })
            .collect();
        let raw = factorial_to_raw(&fac);
        for (q, r) in raw.iter().enumerate() {
            let want: f64 = pmf
                .iter()
                .enumerate()
                .map(|(x, p)| p * (x as f64).powi(q as i32 + 1))
                .sum();
            assert_abs_diff_eq!(*r, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn errors() {
        let p = MvgParams::iid_geometric(0.5, 3).unwrap();
        assert!(mvg_orderstat_factorial_moment(&p, 0, 1).is_err());
        assert!(mvg_orderstat_factorial_moment(&p, 4, 1).is_err());
        assert!(mvg_orderstat_factorial_moment(&p, 1, 0).is_err());
    }
}
