//! Univariate marginal laws on the non-negative integers.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::{binomial_f64, CompensatedSum};

const SUM_TOL: f64 = 1e-12;

/// Explicit probabilities over `{0, ..., K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FinitePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::arg("finite pmf needs at least one atom"));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::arg(format!(
                "finite pmf has invalid probability {bad}"
            )));
        }
        let mut acc = CompensatedSum::new();
        let cumulative = probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect::<Vec<_>>();
        let total = acc.value();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::arg(format!(
                "finite pmf sums to {total}, expected 1"
            )));
        }
        Ok(Self { probs, cumulative })
    }

    /// Point mass at `k`.
    pub fn degenerate(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self::new(probs).expect("point mass is a valid pmf")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest atom with positive mass.
    pub fn max_support(&self) -> u64 {
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
    }
}

/// Marginal distribution of a single coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalDist {
    Poisson {
        lambda: f64,
    },
    /// Failures before the `r`-th success, success probability `p`.
    NegBin {
        r: f64,
        p: f64,
    },
    /// `P(X = k) = pi (1 - pi)^k`.
    Geometric {
        pi: f64,
    },
    Finite(FinitePmf),
}

impl MarginalDist {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::arg(format!(
                "Poisson rate must be positive, got {lambda}"
            )));
        }
        Ok(MarginalDist::Poisson { lambda })
    }

    pub fn negbin(r: f64, p: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::arg(format!(
                "negative binomial R must be positive, got {r}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::arg(format!(
                "negative binomial p must lie in (0,1), got {p}"
            )));
        }
        Ok(MarginalDist::NegBin { r, p })
    }

    pub fn geometric(pi: f64) -> Result<Self> {
        if pi == 0.0 {
            return Err(Error::Defective(
                "geometric with pi = 0 puts all mass at infinity".into(),
            ));
        }
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::arg(format!(
                "geometric pi must lie in (0,1], got {pi}"
            )));
        }
        Ok(MarginalDist::Geometric { pi })
    }

    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        FinitePmf::new(probs).map(MarginalDist::Finite)
    }

    /// `None` for infinite support.
    pub fn max_support(&self) -> Option<u64> {
        match self {
            MarginalDist::Finite(f) => Some(f.max_support()),
            MarginalDist::Geometric { pi } if *pi == 1.0 => Some(0),
            _ => None,
        }
    }

    pub fn ln_pmf(&self, x: u64) -> f64 {
        let xf = x as f64;
        match *self {
            MarginalDist::Poisson { lambda } => xf * lambda.ln() - lambda - ln_gamma(xf + 1.0),
            MarginalDist::NegBin { r, p } => {
                ln_gamma(xf + r) - ln_gamma(r) - ln_gamma(xf + 1.0)
                    + xf * (1.0 - p).ln()
                    + r * p.ln()
            }
            MarginalDist::Geometric { pi } => {
                if pi == 1.0 {
                    if x == 0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    pi.ln() + xf * (1.0 - pi).ln()
                }
            }
            MarginalDist::Finite(ref f) => f
                .probs
                .get(x as usize)
                .map_or(f64::NEG_INFINITY, |p| p.ln()),
        }
    }

    pub fn pmf(&self, x: u64) -> f64 {
        match self {
            MarginalDist::Finite(f) => f.probs.get(x as usize).copied().unwrap_or(0.0),
            _ => self.ln_pmf(x).exp(),
        }
    }

    /// `P(X <= m)`; zero for `m < 0`.
    pub fn cdf(&self, m: i64) -> f64 {
        if m < 0 {
            return 0.0;
        }
        let mf = m as f64;
        match *self {
            MarginalDist::Poisson { lambda } => gamma_ur(mf + 1.0, lambda),
            MarginalDist::NegBin { r, p } => beta_reg(r, mf + 1.0, p),
            MarginalDist::Geometric { pi } => 1.0 - (1.0 - pi).powf(mf + 1.0),
            MarginalDist::Finite(ref f) => {
                let idx = (m as usize).min(f.cumulative.len() - 1);
                f.cumulative[idx].min(1.0)
            }
        }
    }

    /// `P(X > m)`; one for `m < 0`.
    pub fn sf(&self, m: i64) -> f64 {
        if m < 0 {
            return 1.0;
        }
        let mf = m as f64;
        match *self {
            MarginalDist::Poisson { lambda } => gamma_lr(mf + 1.0, lambda),
            MarginalDist::NegBin { r, p } => beta_reg(mf + 1.0, r, 1.0 - p),
            MarginalDist::Geometric { pi } => (1.0 - pi).powf(mf + 1.0),
            MarginalDist::Finite(ref f) => {
                let m = m as usize;
                if m + 1 >= f.probs.len() {
                    0.0
                } else {
                    f.probs[m + 1..]
                        .iter()
                        .copied()
                        .collect::<CompensatedSum>()
                        .value()
                }
            }
        }
    }

    /// Location past which the pmf is non-increasing.
    fn mode_bound(&self) -> u64 {
        match *self {
            MarginalDist::Poisson { lambda } => lambda.ceil() as u64,
            MarginalDist::NegBin { r, p } => {
                if r <= 1.0 {
                    0
                } else {
                    ((r - 1.0) * (1.0 - p) / p).ceil() as u64 + 1
                }
            }
            MarginalDist::Geometric { .. } => 0,
            MarginalDist::Finite(ref f) => f.probs.len() as u64,
        }
    }

    /// `F^{<-}(q) = min{x : P(X <= x) >= q}`, by cumulative pmf summation.
    pub fn quantile(&self, q: f64) -> Result<u64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::arg(format!(
                "quantile level must lie in (0,1), got {q}"
            )));
        }
        if let MarginalDist::Finite(f) = self {
            let idx = f.cumulative.iter().position(|&c| c >= q);
            return Ok(idx.unwrap_or(f.probs.len() - 1) as u64);
        }
        let mode = self.mode_bound();
        let mut acc = CompensatedSum::new();
        let mut x = 0u64;
        loop {
            let term = self.pmf(x);
            acc.add(term);
            if acc.value() >= q {
                return Ok(x);
            }
            // Rounding can leave the running sum a hair below q once the
            // remaining mass is below double resolution.
            if x > mode && term < f64::EPSILON * 1e-3 {
                return Ok(x);
            }
            x += 1;
            if x > 1 << 40 {
                return Err(Error::NonConvergence(format!(
                    "quantile search for q={q} did not terminate"
                )));
            }
        }
    }

    /// `sum_{x >= from} x^p P(X = x)`.
    pub fn tail_moment(&self, p: u32, from: u64) -> f64 {
        if let Some(k) = self.max_support() {
            if from > k {
                return 0.0;
            }
            return (from..=k)
                .map(|x| (x as f64).powi(p as i32) * self.pmf(x))
                .collect::<CompensatedSum>()
                .value();
        }
        if let MarginalDist::Geometric { pi } = *self {
            return geometric_tail_moment(pi, p, from);
        }
        let mode = self.mode_bound();
        let mut acc = CompensatedSum::new();
        let mut x = from;
        loop {
            let term = (x as f64).powi(p as i32) * self.pmf(x);
            acc.add(term);
            if x > mode + u64::from(p) * 4 && term <= acc.value().abs() * 1e-18 {
                break;
            }
            if x > mode && acc.value() == 0.0 && term == 0.0 {
                break;
            }
            x += 1;
        }
        acc.value()
    }

    /// `E X^p`, possibly infinite only for defective inputs (rejected at construction).
    pub fn raw_moment(&self, p: u32) -> f64 {
        self.tail_moment(p, 0)
    }
}

/// Geometric tail moments in closed form.
///
/// With `q = 1 - pi` and `g_j = sum_{y >= 0} y^j q^y`, shifting `x = from + y`
/// gives `pi q^from sum_j C(p, j) from^(p-j) g_j`, where `g_0 = 1/pi` and
/// `g_j = (q/pi) sum_{i<j} C(j, i) g_i`. Every term is non-negative.
fn geometric_tail_moment(pi: f64, p: u32, from: u64) -> f64 {
    let q = 1.0 - pi;
    let p = p as usize;
    let mut g = Vec::with_capacity(p + 1);
    g.push(1.0 / pi);
    for j in 1..=p {
        let s: f64 = (0..j)
            .map(|i| binomial_f64(j as u64, i as u64) * g[i])
            .sum();
        g.push(q / pi * s);
    }
    let k = from as f64;
    let poly: CompensatedSum = (0..=p)
        .map(|j| binomial_f64(p as u64, j as u64) * k.powi((p - j) as i32) * g[j])
        .collect();
    pi * q.powf(k) * poly.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn construction_rejects_invalid_parameters() {
        assert!(MarginalDist::poisson(0.0).is_err());
        assert!(MarginalDist::negbin(0.0, 0.5).is_err());
        assert!(MarginalDist::negbin(2.0, 1.0).is_err());
        assert!(matches!(
            MarginalDist::geometric(0.0),
            Err(Error::Defective(_))
        ));
        assert!(MarginalDist::geometric(1.5).is_err());
        assert!(MarginalDist::finite(vec![0.5, 0.4]).is_err());
        assert!(MarginalDist::finite(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn quantile_examples() {
        let point = MarginalDist::Finite(FinitePmf::degenerate(0));
        assert_eq!(point.quantile(0.5).unwrap(), 0);
        assert_eq!(
            MarginalDist::poisson(1.0).unwrap().quantile(0.5).unwrap(),
            1
        );
        assert_eq!(
            MarginalDist::geometric(0.5).unwrap().quantile(0.9).unwrap(),
            3
        );
        assert!(point.quantile(1.0).is_err());
        assert!(point.quantile(0.0).is_err());
    }

    #[test]
    fn survival_examples() {
        let g = MarginalDist::geometric(0.5).unwrap();
        assert_abs_diff_eq!(g.sf(1), 0.25, epsilon = 1e-15);
        let pois = MarginalDist::poisson(1.0).unwrap();
        assert_abs_diff_eq!(pois.sf(0), 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        assert_eq!(pois.sf(-1), 1.0);
    }

    #[test]
    fn cdf_matches_pmf_summation() {
        let dists = [
            MarginalDist::poisson(3.7).unwrap(),
            MarginalDist::poisson(50.0).unwrap(),
            MarginalDist::negbin(2.5, 0.3).unwrap(),
            MarginalDist::negbin(5.0, 0.05).unwrap(),
            MarginalDist::geometric(0.2).unwrap(),
        ];
        for d in &dists {
            let mut acc = 0.0;
            for m in 0..200u64 {
                acc += d.pmf(m);
                assert_abs_diff_eq!(d.cdf(m as i64), acc, epsilon = 1e-12);
                assert_abs_diff_eq!(d.sf(m as i64), 1.0 - acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tail_moments() {
        // E X = lambda, E X^2 = lambda + lambda^2
        let pois = MarginalDist::poisson(4.0).unwrap();
        assert_abs_diff_eq!(pois.raw_moment(1), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pois.raw_moment(2), 20.0, epsilon = 1e-11);
        // ge(1/2): sum_{x >= k} x 2^{-(x+1)} = (k+1) 2^{-k}
        let g = MarginalDist::geometric(0.5).unwrap();
        for k in 0..30u64 {
            let exact = (k + 1) as f64 * 0.5f64.powi(k as i32);
            assert_abs_diff_eq!(g.tail_moment(1, k), exact, epsilon = 1e-15);
        }
        // NBin(R, p): mean R(1-p)/p
        let nb = MarginalDist::negbin(2.0, 0.25).unwrap();
        assert_abs_diff_eq!(nb.raw_moment(1), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn geometric_tail_against_summation() {
        for pi in [1.0, 0.9, 0.3, 0.01] {
            let g = MarginalDist::geometric(pi).unwrap();
            for p in 0..=4u32 {
                for from in [0u64, 1, 7, 40] {
                    let direct: CompensatedSum = (from..from + 20_000)
                        .map(|x| (x as f64).powi(p as i32) * pi * (1.0 - pi).powi(x as i32))
                        .collect();
                    let got = g.tail_moment(p, from);
                    assert!(
                        (got - direct.value()).abs() <= 1e-10 * direct.value().max(1.0),
                        "{pi} {p} {from}"
                    );
                }
            }
        }
        let g = MarginalDist::geometric(0.5).unwrap();
        assert_abs_diff_eq!(g.raw_moment(1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.raw_moment(2), 3.0, epsilon = 1e-14);
    }
}
