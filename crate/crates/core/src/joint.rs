//! Dependent discrete random vectors queried through rectangle probabilities.
//!
//! Every moment formula in this crate reduces to
//! `P(X_i <= m for i in low, X_j > m for j in up)`. [`JointModel::rect_prob`]
//! answers one such query; [`JointModel::partition_tables`] answers all
//! `2^n` full partitions `(L, L^c)` for a batch of thresholds at once, and
//! [`JointModel::count_tables`] aggregates those by `|L|`, which is what the
//! order-statistic engine consumes.

use rayon::prelude::*;

use crate::dist::{FinitePmf, MarginalDist};
use crate::error::{Error, Result};
use crate::mvg::MvgParams;
use crate::numeric::{binomial, binomial_f64, CompensatedSum};
use crate::subset::{check_cap, Subset};

const SUM_TOL: f64 = 1e-12;
/// Upper bound on `f64` cells held by one batch of partition tables.
const TABLE_BATCH_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
enum Coords {
    Narrow(Vec<u8>),
    Wide(Vec<u32>),
}

impl Coords {
    fn len(&self) -> usize {
        match self {
            Coords::Narrow(v) => v.len(),
            Coords::Wide(v) => v.len(),
        }
    }
}

/// Explicit joint pmf on a finite set of integer vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPmf {
    n: usize,
    coords: Coords,
    probs: Vec<f64>,
    max: u64,
    exchangeable: bool,
}

/// Incremental construction of an [`ExplicitPmf`]; coordinates are stored in
/// one byte each until a value above 255 shows up.
#[derive(Debug)]
pub struct ExplicitPmfBuilder {
    n: usize,
    coords: Coords,
    probs: Vec<f64>,
}

impl ExplicitPmfBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            coords: Coords::Narrow(Vec::new()),
            probs: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, points: usize) -> Self {
        Self {
            n,
            coords: Coords::Narrow(Vec::with_capacity(points * n)),
            probs: Vec::with_capacity(points),
        }
    }

    pub fn push(&mut self, point: &[u32], prob: f64) -> Result<()> {
        if point.len() != self.n {
            return Err(Error::arg(format!(
                "support point has {} coordinates, expected {}",
                point.len(),
                self.n
            )));
        }
        if point.iter().any(|&x| x > u8::MAX as u32) {
            if let Coords::Narrow(v) = &self.coords {
                self.coords = Coords::Wide(v.iter().map(|&x| x as u32).collect());
            }
        }
        match &mut self.coords {
            Coords::Narrow(v) => v.extend(point.iter().map(|&x| x as u8)),
            Coords::Wide(v) => v.extend_from_slice(point),
        }
        self.probs.push(prob);
        Ok(())
    }

    pub fn build(self) -> Result<ExplicitPmf> {
        ExplicitPmf::from_parts(self.n, self.coords, self.probs)
    }
}

impl ExplicitPmf {
    /// Builds from `(point, probability)` pairs.
    pub fn new<I, P>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: AsRef<[u32]>,
    {
        let mut b = ExplicitPmfBuilder::new(n);
        for (pt, p) in entries {
            b.push(pt.as_ref(), p)?;
        }
        b.build()
    }

    /// Multinomial `Mult(trials, cell_probs)`, enumerated in lexicographic order.
    pub fn multinomial(trials: u32, cell_probs: &[f64]) -> Result<Self> {
        let n = cell_probs.len();
        if n == 0 {
            return Err(Error::arg("multinomial needs at least one cell"));
        }
        if cell_probs.iter().any(|&p| p.is_nan() || p <= 0.0) {
            return Err(Error::arg(
                "multinomial cell probabilities must be positive",
            ));
        }
        let total: f64 = cell_probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::arg(format!(
                "multinomial cell probabilities sum to {total}"
            )));
        }
        let count = binomial(u64::from(trials) + n as u64 - 1, n as u64 - 1);
        let count = usize::try_from(count)
            .map_err(|_| Error::Capacity("multinomial support too large".into()))?;
        let ln_fact: Vec<f64> = (0..=trials as usize)
            .scan(0.0, |acc, k| {
                if k > 0 {
                    *acc += (k as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        let ln_p: Vec<f64> = cell_probs.iter().map(|p| p.ln()).collect();
        let mut b = ExplicitPmfBuilder::with_capacity(n, count);
        let mut point = vec![0u32; n];
        // compositions of `trials` into n parts, lexicographic
        fn rec(
            i: usize,
            left: u32,
            acc: f64,
            point: &mut [u32],
            ln_fact: &[f64],
            ln_p: &[f64],
            b: &mut ExplicitPmfBuilder,
        ) -> Result<()> {
            let n = point.len();
            if i == n - 1 {
                point[i] = left;
                let lp = acc - ln_fact[left as usize] + f64::from(left) * ln_p[i];
                return b.push(point, lp.exp());
            }
            for x in 0..=left {
                point[i] = x;
                let a = acc - ln_fact[x as usize] + f64::from(x) * ln_p[i];
                rec(i + 1, left - x, a, point, ln_fact, ln_p, b)?;
            }
            Ok(())
        }
        rec(
            0,
            trials,
            ln_fact[trials as usize],
            &mut point,
            &ln_fact,
            &ln_p,
            &mut b,
        )?;
        b.build()
    }

    fn from_parts(n: usize, coords: Coords, probs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("explicit pmf needs at least one coordinate"));
        }
        if probs.is_empty() {
            return Err(Error::arg("explicit pmf has no support points"));
        }
        debug_assert_eq!(coords.len(), probs.len() * n);
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::arg(format!(
                "explicit pmf has invalid probability {bad}"
            )));
        }
        let total = probs.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::arg(format!(
                "explicit pmf sums to {total}, expected 1"
            )));
        }
        let max = match &coords {
            Coords::Narrow(v) => v.iter().copied().max().unwrap_or(0) as u64,
            Coords::Wide(v) => v.iter().copied().max().unwrap_or(0) as u64,
        };
        let pmf = Self {
            n,
            coords,
            probs,
            max,
            exchangeable: false,
        };
        pmf.check_unique()?;
        Ok(pmf)
    }

    fn check_unique(&self) -> Result<()> {
        let cmp = |a: usize, b: usize| match &self.coords {
            Coords::Narrow(v) => {
                v[a * self.n..(a + 1) * self.n].cmp(&v[b * self.n..(b + 1) * self.n])
            }
            Coords::Wide(v) => {
                v[a * self.n..(a + 1) * self.n].cmp(&v[b * self.n..(b + 1) * self.n])
            }
        };
        let len = self.probs.len();
        // sorted input (the common case) is verified in one pass
        if (1..len).all(|i| cmp(i - 1, i).is_lt()) {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_unstable_by(|&a, &b| cmp(a, b));
        if let Some(w) = order.windows(2).find(|w| cmp(w[0], w[1]).is_eq()) {
            return Err(Error::arg(format!(
                "duplicate support point {:?}",
                self.point(w[0])
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_coordinate(&self) -> u64 {
        self.max
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn point(&self, k: usize) -> Vec<u32> {
        match &self.coords {
            Coords::Narrow(v) => v[k * self.n..(k + 1) * self.n]
                .iter()
                .map(|&x| x as u32)
                .collect(),
            Coords::Wide(v) => v[k * self.n..(k + 1) * self.n].to_vec(),
        }
    }

    /// Visits every support point as `(coordinates, probability)`.
    pub fn for_each_point(&self, mut f: impl FnMut(&[u32], f64)) {
        let mut buf = vec![0u32; self.n];
        for (k, &p) in self.probs.iter().enumerate() {
            match &self.coords {
                Coords::Narrow(v) => {
                    for (b, &x) in buf.iter_mut().zip(&v[k * self.n..(k + 1) * self.n]) {
                        *b = x as u32;
                    }
                }
                Coords::Wide(v) => buf.copy_from_slice(&v[k * self.n..(k + 1) * self.n]),
            }
            f(&buf, p);
        }
    }

    fn rect_prob(&self, low: Subset, up: Subset, m: i64) -> f64 {
        let n = self.n;
        let test = |row: &mut dyn Iterator<Item = u64>| {
            for (i, x) in row.enumerate() {
                let bit = 1u32 << i;
                let le = (x as i64) <= m;
                if (low.mask() & bit != 0 && !le) || (up.mask() & bit != 0 && le) {
                    return false;
                }
            }
            true
        };
        let mut acc = CompensatedSum::new();
        for (k, &p) in self.probs.iter().enumerate() {
            let ok = match &self.coords {
                Coords::Narrow(v) => test(&mut v[k * n..(k + 1) * n].iter().map(|&x| x as u64)),
                Coords::Wide(v) => test(&mut v[k * n..(k + 1) * n].iter().map(|&x| x as u64)),
            };
            if ok {
                acc.add(p);
            }
        }
        acc.value()
    }

    /// Single pass over the support filling `tables[m - lo][L]` for every
    /// threshold in `lo..=hi` simultaneously.
    fn partition_tables(&self, lo: i64, hi: i64) -> Vec<Vec<f64>> {
        let n = self.n;
        let size = 1usize << n;
        let width = (hi - lo + 1) as usize;
        let chunk = chunk_len(self.probs.len());
        let accumulate = |range: std::ops::Range<usize>| -> Vec<f64> {
            let mut flat = vec![0.0f64; width * size];
            let mut eq = vec![0u32; width];
            for k in range {
                let p = self.probs[k];
                if p == 0.0 {
                    continue;
                }
                eq.iter_mut().for_each(|e| *e = 0);
                let mut below = 0u32;
                let mut visit = |i: usize, x: i64| {
                    if x < lo {
                        below |= 1 << i;
                    } else if x <= hi {
                        eq[(x - lo) as usize] |= 1 << i;
                    }
                };
                match &self.coords {
                    Coords::Narrow(v) => {
                        for (i, &x) in v[k * n..(k + 1) * n].iter().enumerate() {
                            visit(i, x as i64);
                        }
                    }
                    Coords::Wide(v) => {
                        for (i, &x) in v[k * n..(k + 1) * n].iter().enumerate() {
                            visit(i, x as i64);
                        }
                    }
                }
                let mut cum = below;
                for (w, e) in eq.iter().enumerate() {
                    cum |= e;
                    flat[w * size + cum as usize] += p;
                }
            }
            flat
        };
        let chunks: Vec<std::ops::Range<usize>> = (0..self.probs.len())
            .step_by(chunk)
            .map(|s| s..(s + chunk).min(self.probs.len()))
            .collect();
        let partials: Vec<Vec<f64>> = chunks.into_par_iter().map(accumulate).collect();
        // fixed-order pairwise reduction keeps results independent of thread count
        let flat = pairwise_reduce(partials).unwrap_or_else(|| vec![0.0; width * size]);
        flat.chunks(size).map(<[f64]>::to_vec).collect()
    }
}

impl ExplicitPmf {
    /// `counts[m - lo][s] = P(exactly s coordinates are <= m)` in one pass.
    fn count_tables(&self, lo: i64, hi: i64) -> Vec<Vec<f64>> {
        let n = self.n;
        let width = (hi - lo + 1) as usize;
        let accumulate = |range: std::ops::Range<usize>| -> Vec<f64> {
            let mut flat = vec![0.0f64; width * (n + 1)];
            let mut eq = vec![0usize; width];
            for k in range {
                let p = self.probs[k];
                if p == 0.0 {
                    continue;
                }
                eq.iter_mut().for_each(|e| *e = 0);
                let mut below = 0usize;
                let mut visit = |x: i64| {
                    if x < lo {
                        below += 1;
                    } else if x <= hi {
                        eq[(x - lo) as usize] += 1;
                    }
                };
                match &self.coords {
                    Coords::Narrow(v) => {
                        v[k * n..(k + 1) * n].iter().for_each(|&x| visit(x as i64))
                    }
                    Coords::Wide(v) => v[k * n..(k + 1) * n].iter().for_each(|&x| visit(x as i64)),
                }
                let mut cum = below;
                for (w, e) in eq.iter().enumerate() {
                    cum += e;
                    flat[w * (n + 1) + cum] += p;
                }
            }
            flat
        };
        let chunk = 1 << 16;
        let chunks: Vec<std::ops::Range<usize>> = (0..self.probs.len())
            .step_by(chunk)
            .map(|s| s..(s + chunk).min(self.probs.len()))
            .collect();
        let partials: Vec<Vec<f64>> = chunks.into_par_iter().map(accumulate).collect();
        let flat = pairwise_reduce(partials).unwrap_or_else(|| vec![0.0; width * (n + 1)]);
        flat.chunks(n + 1).map(<[f64]>::to_vec).collect()
    }
}

/// Chunk length giving roughly one chunk per worker thread.
fn chunk_len(points: usize) -> usize {
    let threads = rayon::current_num_threads().max(1);
    points.div_ceil(threads).max(1 << 12)
}

fn pairwise_reduce(mut parts: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop()
}

/// Mutually independent coordinates with the given marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentMarginals {
    marginals: Vec<MarginalDist>,
    exchangeable: bool,
}

impl IndependentMarginals {
    pub fn new(marginals: Vec<MarginalDist>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::arg("need at least one marginal"));
        }
        Ok(Self {
            marginals,
            exchangeable: false,
        })
    }

    /// `n` IID copies of `dist`; declared exchangeable.
    pub fn iid(dist: MarginalDist, n: usize) -> Result<Self> {
        let mut m = Self::new(vec![dist; n])?;
        m.exchangeable = true;
        Ok(m)
    }

    pub fn marginals(&self) -> &[MarginalDist] {
        &self.marginals
    }

    fn table(&self, m: i64) -> Vec<f64> {
        let mut t = vec![1.0f64];
        for d in &self.marginals {
            let (le, gt) = (d.cdf(m), d.sf(m));
            let mut next = Vec::with_capacity(t.len() * 2);
            next.extend(t.iter().map(|v| v * gt));
            next.extend(t.iter().map(|v| v * le));
            // bit i of the mask <-> coordinate i is <= m; new bit is the high one
            t = next;
        }
        t
    }

    /// Poisson-binomial distribution of the number of coordinates `<= m`.
    fn counts(&self, m: i64) -> Vec<f64> {
        let mut c = vec![1.0f64];
        for d in &self.marginals {
            let (le, gt) = (d.cdf(m), d.sf(m));
            let mut next = vec![0.0; c.len() + 1];
            for (s, v) in c.iter().enumerate() {
                next[s] += v * gt;
                next[s + 1] += v * le;
            }
            c = next;
        }
        c
    }
}

/// A dependent discrete random vector on the non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub enum JointModel {
    ExplicitFinitePmf(ExplicitPmf),
    IndependentMarginals(IndependentMarginals),
    Mvg(MvgParams),
}

impl From<ExplicitPmf> for JointModel {
    fn from(v: ExplicitPmf) -> Self {
        JointModel::ExplicitFinitePmf(v)
    }
}

impl From<IndependentMarginals> for JointModel {
    fn from(v: IndependentMarginals) -> Self {
        JointModel::IndependentMarginals(v)
    }
}

impl From<MvgParams> for JointModel {
    fn from(v: MvgParams) -> Self {
        JointModel::Mvg(v)
    }
}

impl JointModel {
    pub fn independent(marginals: Vec<MarginalDist>) -> Result<Self> {
        IndependentMarginals::new(marginals).map(Into::into)
    }

    pub fn iid(dist: MarginalDist, n: usize) -> Result<Self> {
        IndependentMarginals::iid(dist, n).map(Into::into)
    }

    /// Independent coordinates with finite pmfs.
    pub fn independent_finite(pmfs: Vec<Vec<f64>>) -> Result<Self> {
        let marginals = pmfs
            .into_iter()
            .map(MarginalDist::finite)
            .collect::<Result<Vec<_>>>()?;
        Self::independent(marginals)
    }

    pub fn n(&self) -> usize {
        match self {
            JointModel::ExplicitFinitePmf(e) => e.n,
            JointModel::IndependentMarginals(m) => m.marginals.len(),
            JointModel::Mvg(p) => p.n(),
        }
    }

    /// Whether the caller declared the vector exchangeable.
    pub fn is_exchangeable(&self) -> bool {
        match self {
            JointModel::ExplicitFinitePmf(e) => e.exchangeable,
            JointModel::IndependentMarginals(m) => m.exchangeable,
            JointModel::Mvg(p) => p.is_exchangeable(),
        }
    }

    /// Declares (or retracts) exchangeability. The flag is trusted, not checked.
    pub fn with_exchangeable(mut self, flag: bool) -> Self {
        match &mut self {
            JointModel::ExplicitFinitePmf(e) => e.exchangeable = flag,
            JointModel::IndependentMarginals(m) => m.exchangeable = flag,
            JointModel::Mvg(p) => p.set_exchangeable_flag(flag),
        }
        self
    }

    /// Largest value any coordinate can take; `None` for infinite support.
    pub fn max_support(&self) -> Option<u64> {
        match self {
            JointModel::ExplicitFinitePmf(e) => Some(e.max),
            JointModel::IndependentMarginals(m) => m
                .marginals
                .iter()
                .map(MarginalDist::max_support)
                .try_fold(0u64, |acc, s| s.map(|s| acc.max(s))),
            JointModel::Mvg(p) => {
                // only when every coordinate is a.s. zero
                (0..p.n())
                    .all(|j| p.marginal_theta(j + 1) == 0.0)
                    .then_some(0)
            }
        }
    }

    /// Univariate law of coordinate `j` (1-based).
    pub fn marginal(&self, j: usize) -> Result<MarginalDist> {
        self.check_index(j)?;
        match self {
            JointModel::IndependentMarginals(m) => Ok(m.marginals[j - 1].clone()),
            JointModel::Mvg(p) => {
                let theta = p.marginal_theta(j);
                MarginalDist::geometric(1.0 - theta)
            }
            JointModel::ExplicitFinitePmf(e) => {
                let mut probs = vec![0.0; e.max as usize + 1];
                e.for_each_point(|x, p| probs[x[j - 1] as usize] += p);
                Ok(MarginalDist::Finite(FinitePmf::new(probs)?))
            }
        }
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n() {
            Err(Error::arg(format!(
                "component index {j} outside 1..={}",
                self.n()
            )))
        } else {
            Ok(())
        }
    }

    fn check_sets(&self, low: Subset, up: Subset) -> Result<()> {
        if low.intersects(up) {
            return Err(Error::arg(format!("low {low} and up {up} overlap")));
        }
        let n = self.n();
        if !low.union(up).is_subset_of(Subset::full(n.min(32))) {
            return Err(Error::arg(format!(
                "index set {} exceeds {n} components",
                low.union(up)
            )));
        }
        Ok(())
    }

    /// `P(X_i <= m for all i in low, X_j > m for all j in up)`.
    pub fn rect_prob(&self, low: Subset, up: Subset, m: i64) -> Result<f64> {
        self.check_sets(low, up)?;
        if m < -1 {
            return Err(Error::arg(format!("threshold m must be >= -1, got {m}")));
        }
        if low.is_empty() && up.is_empty() {
            return Ok(1.0);
        }
        Ok(match self {
            JointModel::ExplicitFinitePmf(e) => e.rect_prob(low, up, m),
            JointModel::IndependentMarginals(ind) => {
                let lo: f64 = low.indices().map(|i| ind.marginals[i - 1].cdf(m)).product();
                let hi: f64 = up.indices().map(|i| ind.marginals[i - 1].sf(m)).product();
                lo * hi
            }
            JointModel::Mvg(p) => {
                // inclusion-exclusion over the "<= m" block
                let mut acc = CompensatedSum::new();
                let lm = low.mask();
                let mut a = lm;
                loop {
                    let sign = if a.count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    let b = up.union(Subset::from_mask(a));
                    acc.add(sign * p.min_param(b).powf((m + 1) as f64));
                    if a == 0 {
                        break;
                    }
                    a = (a - 1) & lm;
                }
                acc.value().clamp(0.0, 1.0)
            }
        })
    }

    /// `P(X_j > m)`.
    pub fn marginal_survival(&self, j: usize, m: i64) -> Result<f64> {
        self.check_index(j)?;
        if m < -1 {
            return Err(Error::arg(format!("threshold m must be >= -1, got {m}")));
        }
        Ok(match self {
            JointModel::IndependentMarginals(ind) => ind.marginals[j - 1].sf(m),
            JointModel::Mvg(p) => p.marginal_theta(j).powf((m + 1) as f64),
            JointModel::ExplicitFinitePmf(_) => {
                self.rect_prob(Subset::EMPTY, Subset::from_mask(1 << (j - 1)), m)?
            }
        })
    }

    /// For each `m` in `lo..=hi`, the vector over masks `L` of
    /// `P(X_i <= m exactly for i in L)`.
    pub fn partition_tables(&self, lo: i64, hi: i64) -> Result<Vec<Vec<f64>>> {
        let n = self.n();
        check_cap(n, "partition table")?;
        if lo < -1 || hi < lo {
            return Err(Error::arg(format!("bad threshold range {lo}..={hi}")));
        }
        let size = 1usize << n;
        let batch = (TABLE_BATCH_CELLS / size).max(1) as i64;
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        let mut start = lo;
        while start <= hi {
            let end = (start + batch - 1).min(hi);
            match self {
                JointModel::ExplicitFinitePmf(e) => out.extend(e.partition_tables(start, end)),
                JointModel::IndependentMarginals(ind) => {
                    out.extend((start..=end).map(|m| ind.table(m)));
                }
                JointModel::Mvg(p) => {
                    let thetas = p.min_params_all()?;
                    out.extend((start..=end).map(|m| mvg_table(n, &thetas, m)));
                }
            }
            start = end + 1;
        }
        Ok(out)
    }
}

impl JointModel {
    /// For each `m` in `lo..=hi`, the vector over `s = 0..=n` of
    /// `P(exactly s coordinates are <= m)`, i.e. the class sums of
    /// [`JointModel::partition_tables`] by subset size.
    pub fn count_tables(&self, lo: i64, hi: i64) -> Result<Vec<Vec<f64>>> {
        if lo < -1 || hi < lo {
            return Err(Error::arg(format!("bad threshold range {lo}..={hi}")));
        }
        let n = self.n();
        match self {
            JointModel::ExplicitFinitePmf(e) => Ok(e.count_tables(lo, hi)),
            JointModel::IndependentMarginals(ind) => Ok((lo..=hi).map(|m| ind.counts(m)).collect()),
            JointModel::Mvg(p) if p.levels().is_some() => {
                // exchangeable: C(n,s) times one representative rectangle,
                // expanded by inclusion-exclusion over the size of the low block
                let sizes: Vec<f64> = (0..=n).map(|k| p.min_param_by_size(k)).collect();
                let out = (lo..=hi)
                    .map(|m| {
                        let e = (m + 1) as f64;
                        (0..=n)
                            .map(|s| {
                                let rect = (0..=s)
                                    .map(|k| {
                                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                                        sign * binomial_f64(s as u64, k as u64)
                                            * sizes[n - s + k].powf(e)
                                    })
                                    .collect::<CompensatedSum>()
                                    .value();
                                (binomial_f64(n as u64, s as u64) * rect).clamp(0.0, 1.0)
                            })
                            .collect()
                    })
                    .collect();
                Ok(out)
            }
            JointModel::Mvg(_) => Ok(self
                .partition_tables(lo, hi)?
                .into_iter()
                .map(|t| {
                    let mut row = vec![CompensatedSum::new(); n + 1];
                    for (l, v) in t.into_iter().enumerate() {
                        row[(l as u32).count_ones() as usize].add(v);
                    }
                    row.into_iter().map(|c| c.value()).collect()
                })
                .collect()),
        }
    }
}

/// Partition table of an MVG vector from the joint survival of every subset.
fn mvg_table(n: usize, thetas: &[f64], m: i64) -> Vec<f64> {
    let size = 1usize << n;
    let exp = (m + 1) as f64;
    // h[K] = P(X_K > m) to start; superset Mobius transform turns it into
    // P(X_K > m, X_{K^c} <= m)
    let mut h: Vec<f64> = thetas.iter().map(|t| t.powf(exp)).collect();
    for i in 0..n {
        let bit = 1usize << i;
        for k in 0..size {
            if k & bit == 0 {
                h[k] -= h[k | bit];
            }
        }
    }
    let full = size - 1;
    (0..size).map(|l| h[full ^ l].clamp(0.0, 1.0)).collect()
}
