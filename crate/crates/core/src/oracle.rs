//! Ground truth by brute force: exhaustive enumeration of finite supports
//! and seeded Monte Carlo.
//!
//! Monte Carlo draws come in chunks of [`CHUNK`] samples. Chunk `k` uses a
//! ChaCha8 generator seeded with the user seed and switched to stream `k`,
//! and chunk sums are reduced in chunk order, so estimates do not depend on
//! the number of worker threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Geometric, Poisson};
use rayon::prelude::*;

use crate::coherent::SystemStructure;
use crate::dist::MarginalDist;
use crate::error::{Error, Result};
use crate::joint::{ExplicitPmf, JointModel};
use crate::mvg::MvgParams;
use crate::numeric::CompensatedSum;
use crate::subset::Subset;

/// Largest support enumerated exhaustively.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Smallest Monte Carlo sample accepted.
pub const MIN_SAMPLES: u64 = 1_000;

/// Samples per RNG stream.
pub const CHUNK: u64 = 1 << 16;

/// Generator description recorded alongside estimates.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64(seed), stream = chunk index";

/// What is measured on each outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// `r`-th smallest coordinate, 1-based.
    Rank(usize),
    /// System lifetime `max over path sets of min over members`.
    System(SystemStructure),
}

impl Statistic {
    fn check(&self, n: usize) -> Result<()> {
        match self {
            Statistic::Rank(r) if *r == 0 || *r > n => {
                Err(Error::arg(format!("rank {r} outside 1..={n}")))
            }
            Statistic::System(s) if s.n() != n => Err(Error::arg(format!(
                "structure has {} components but the model has {n}",
                s.n()
            ))),
            Statistic::System(s) if s.path_sets().is_empty() => {
                Err(Error::arg("system statistic needs path sets"))
            }
            _ => Ok(()),
        }
    }

    /// Value of the statistic at outcome `x`; `scratch` avoids reallocation.
    pub fn eval(&self, x: &[u64], scratch: &mut Vec<u64>) -> u64 {
        match self {
            Statistic::Rank(r) => {
                scratch.clear();
                scratch.extend_from_slice(x);
                let (_, v, _) = scratch.select_nth_unstable(r - 1);
                *v
            }
            Statistic::System(s) => s
                .path_sets()
                .iter()
                .map(|p| p.indices().map(|i| x[i - 1]).min().unwrap_or(0))
                .max()
                .unwrap_or(0),
        }
    }
}

fn pow(v: u64, p: u32) -> f64 {
    (v as f64).powi(p as i32)
}

/// `E stat(X)^p` by summing over every support point.
pub fn enumerate_moment(model: &JointModel, stat: &Statistic, p: u32) -> Result<f64> {
    stat.check(model.n())?;
    let mut scratch = Vec::new();
    let mut acc = CompensatedSum::new();
    match model {
        JointModel::ExplicitFinitePmf(e) => {
            check_size(e.len() as u64)?;
            let mut x = vec![0u64; e.n()];
            e.for_each_point(|pt, q| {
                x.iter_mut().zip(pt).for_each(|(a, &b)| *a = u64::from(b));
                acc.add(q * pow(stat.eval(&x, &mut scratch), p));
            });
        }
        JointModel::IndependentMarginals(ind) => {
            let pmfs = ind
                .marginals()
                .iter()
                .map(|m| match m {
                    MarginalDist::Finite(f) => Ok(f.probs().to_vec()),
                    _ => Err(Error::UnsupportedModel(
                        "enumeration needs finite-support marginals".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            let size = pmfs
                .iter()
                .try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64))
                .unwrap_or(u64::MAX);
            check_size(size)?;
            let n = pmfs.len();
            let mut x = vec![0u64; n];
            for _ in 0..size {
                let q: f64 = x.iter().zip(&pmfs).map(|(&v, pm)| pm[v as usize]).product();
                if q > 0.0 {
                    acc.add(q * pow(stat.eval(&x, &mut scratch), p));
                }
                // odometer increment
                for (i, v) in x.iter_mut().enumerate() {
                    *v += 1;
                    if (*v as usize) < pmfs[i].len() {
                        break;
                    }
                    *v = 0;
                }
            }
        }
        JointModel::Mvg(_) => {
            return Err(Error::UnsupportedModel(
                "MVG vectors have infinite support; use mc_moment".into(),
            ))
        }
    }
    Ok(acc.value())
}

fn check_size(size: u64) -> Result<()> {
    if size > MAX_ENUMERATION {
        Err(Error::Capacity(format!(
            "support of {size} points exceeds the enumeration cap {MAX_ENUMERATION}"
        )))
    } else {
        Ok(())
    }
}

/// How MVG vectors are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MvgSampler {
    /// `X_i = min{M_I : i in I}` with independent `M_I ~ ge(1 - theta_I)`.
    #[default]
    MinOfGeometrics,
    /// Cycle by cycle: each shock set with a surviving member strikes with
    /// probability `1 - theta_I` and kills its surviving members.
    Cycles,
}

/// One MVG draw using the min-of-geometrics construction.
pub fn sample_mvg<R: Rng + ?Sized>(params: &MvgParams, rng: &mut R) -> Result<Vec<u64>> {
    sample_mvg_with(params, MvgSampler::MinOfGeometrics, rng)
}

pub fn sample_mvg_with<R: Rng + ?Sized>(
    params: &MvgParams,
    how: MvgSampler,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let shocks = params.shocks()?;
    Ok(draw_mvg(params.n(), &shocks, how, rng))
}

fn draw_mvg<R: Rng + ?Sized>(
    n: usize,
    shocks: &[(Subset, f64)],
    how: MvgSampler,
    rng: &mut R,
) -> Vec<u64> {
    match how {
        MvgSampler::MinOfGeometrics => {
            let mut x = vec![u64::MAX; n];
            for &(set, theta) in shocks {
                let m = Geometric::new(1.0 - theta)
                    .expect("theta in [0,1)")
                    .sample(rng);
                for i in set.indices() {
                    x[i - 1] = x[i - 1].min(m);
                }
            }
            x
        }
        MvgSampler::Cycles => {
            let mut x = vec![u64::MAX; n];
            let mut alive = Subset::full(n);
            let mut cycle = 0u64;
            while !alive.is_empty() {
                let mut killed = Subset::EMPTY;
                for &(set, theta) in shocks {
                    if set.intersects(alive) && rng.random::<f64>() >= theta {
                        killed = killed.union(set.intersection(alive));
                    }
                }
                for i in killed.indices() {
                    x[i - 1] = cycle;
                }
                alive = Subset::from_mask(alive.mask() & !killed.mask());
                cycle += 1;
            }
            x
        }
    }
}

/// Prepared per-model sampler.
enum Sampler {
    Explicit(WeightedIndex<f64>),
    Independent(Vec<Marginal>),
    Mvg(usize, Vec<(Subset, f64)>, MvgSampler),
}

enum Marginal {
    Poisson(Poisson<f64>),
    NegBin(Gamma<f64>),
    Geometric(Geometric),
    Finite(WeightedIndex<f64>),
}

impl Marginal {
    fn new(d: &MarginalDist) -> Result<Self> {
        let bad = |e: String| Error::arg(format!("cannot sample marginal: {e}"));
        Ok(match *d {
            MarginalDist::Poisson { lambda } => {
                Marginal::Poisson(Poisson::new(lambda).map_err(|e| bad(e.to_string()))?)
            }
            MarginalDist::NegBin { r, p } => {
                // gamma-mixed Poisson
                Marginal::NegBin(Gamma::new(r, (1.0 - p) / p).map_err(|e| bad(e.to_string()))?)
            }
            MarginalDist::Geometric { pi } => {
                Marginal::Geometric(Geometric::new(pi).map_err(|e| bad(e.to_string()))?)
            }
            MarginalDist::Finite(ref f) => Marginal::Finite(
                WeightedIndex::new(f.probs().iter().copied()).map_err(|e| bad(e.to_string()))?,
            ),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Marginal::Poisson(d) => d.sample(rng) as u64,
            Marginal::NegBin(g) => {
                let lambda = g.sample(rng);
                if lambda > 0.0 {
                    Poisson::new(lambda).map_or(0, |d| d.sample(rng) as u64)
                } else {
                    0
                }
            }
            Marginal::Geometric(d) => d.sample(rng),
            Marginal::Finite(w) => w.sample(rng) as u64,
        }
    }
}

impl Sampler {
    fn new(model: &JointModel, mvg: MvgSampler) -> Result<Self> {
        Ok(match model {
            JointModel::ExplicitFinitePmf(e) => Sampler::Explicit(
                WeightedIndex::new(e.probs().iter().copied())
                    .map_err(|err| Error::arg(format!("cannot sample pmf: {err}")))?,
            ),
            JointModel::IndependentMarginals(ind) => Sampler::Independent(
                ind.marginals()
                    .iter()
                    .map(Marginal::new)
                    .collect::<Result<_>>()?,
            ),
            JointModel::Mvg(p) => Sampler::Mvg(p.n(), p.shocks()?, mvg),
        })
    }

    fn fill<R: Rng + ?Sized>(&self, model: &JointModel, rng: &mut R, x: &mut Vec<u64>) {
        match (self, model) {
            (Sampler::Explicit(w), JointModel::ExplicitFinitePmf(e)) => {
                let k = w.sample(rng);
                x.clear();
                x.extend(e.point(k).into_iter().map(u64::from));
            }
            (Sampler::Independent(ms), _) => {
                x.clear();
                x.extend(ms.iter().map(|m| m.sample(rng)));
            }
            (Sampler::Mvg(n, shocks, how), _) => *x = draw_mvg(*n, shocks, *how, rng),
            _ => unreachable!("sampler built from this model"),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.stderr
    }
}

/// Monte Carlo estimate of `E stat(X)^p`.
pub fn mc_moment(
    model: &JointModel,
    stat: &Statistic,
    p: u32,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    mc_moment_with(model, stat, p, samples, seed, MvgSampler::default())
}

pub fn mc_moment_with(
    model: &JointModel,
    stat: &Statistic,
    p: u32,
    samples: u64,
    seed: u64,
    mvg: MvgSampler,
) -> Result<McEstimate> {
    mc_values(
        model,
        samples,
        seed,
        mvg,
        stat.check(model.n()),
        |x, scratch| pow(stat.eval(x, scratch), p),
    )
}

/// Monte Carlo estimate of `P(X_i > k_i for all i)`.
pub fn mc_joint_survival(
    model: &JointModel,
    k: &[i64],
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let check = if k.len() == model.n() {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "threshold vector has length {}, expected {}",
            k.len(),
            model.n()
        )))
    };
    mc_values(
        model,
        samples,
        seed,
        MvgSampler::default(),
        check,
        |x, _| {
            let hit = x.iter().zip(k).all(|(&v, &t)| v as i64 > t);
            if hit {
                1.0
            } else {
                0.0
            }
        },
    )
}

fn mc_values<F>(
    model: &JointModel,
    samples: u64,
    seed: u64,
    mvg: MvgSampler,
    check: Result<()>,
    f: F,
) -> Result<McEstimate>
where
    F: Fn(&[u64], &mut Vec<u64>) -> f64 + Sync,
{
    check?;
    if samples < MIN_SAMPLES {
        return Err(Error::arg(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let sampler = Sampler::new(model, mvg)?;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(CompensatedSum, CompensatedSum)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = CHUNK.min(samples - k * CHUNK);
            let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
            let (mut x, mut scratch) = (Vec::new(), Vec::new());
            for _ in 0..count {
                sampler.fill(model, &mut rng, &mut x);
                let v = f(&x, &mut scratch);
                s1.add(v);
                s2.add(v * v);
            }
            (s1, s2)
        })
        .collect();
    let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    for (a, b) in &partial {
        s1.add(a.value());
        s2.add(b.value());
    }
    let nf = samples as f64;
    let mean = s1.value() / nf;
    let var = ((s2.value() - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        samples,
    })
}

/// Convenience: explicit pmf of independent finite marginals, for tests
/// that want to exercise the explicit-pmf paths on a product law.
pub fn product_pmf(pmfs: &[Vec<f64>]) -> Result<ExplicitPmf> {
    let size = pmfs
        .iter()
        .try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64))
        .unwrap_or(u64::MAX);
    check_size(size)?;
    let n = pmfs.len();
    let mut builder = crate::joint::ExplicitPmfBuilder::with_capacity(n, size as usize);
    let mut x = vec![0u32; n];
    for _ in 0..size {
        let q: f64 = x.iter().zip(pmfs).map(|(&v, pm)| pm[v as usize]).product();
        builder.push(&x, q)?;
        for (i, v) in x.iter_mut().enumerate() {
            *v += 1;
            if (*v as usize) < pmfs[i].len() {
                break;
            }
            *v = 0;
        }
    }
    builder.build()
}
