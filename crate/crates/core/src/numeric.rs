//! Small numeric helpers shared by the moment engines.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Binomial coefficient as an exact integer; `C(n, k) = 0` for `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Binomial coefficient in floating point, usable for large `n`.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 120 {
        return binomial(n, k) as f64;
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `sum_{s=0}^{r-1} C(n, s)`, the subset-class count in the truncation bounds.
pub fn lower_binomial_sum(n: usize, r: usize) -> f64 {
    (0..r as u64).map(|s| binomial_f64(n as u64, s)).sum()
}

/// `(m+1)^p - m^p`, the weight of `P(Y > m)` in `E Y^p`.
pub fn moment_weight(m: u64, p: u32) -> f64 {
    let a = (m + 1) as f64;
    let b = m as f64;
    if p <= 6 && m < 1 << 20 {
        // exact in f64 for these ranges
        ((m as u128 + 1).pow(p) - (m as u128).pow(p)) as f64
    } else {
        a.powi(p as i32) - b.powi(p as i32)
    }
}

pub fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// Stirling numbers of the second kind `S2(q, k)` for `0 <= k <= q <= p`.
pub fn stirling2_table(p: usize) -> Vec<Vec<u128>> {
    let mut t = vec![vec![0u128; p + 1]; p + 1];
    t[0][0] = 1;
    for q in 1..=p {
        for k in 1..=q {
            t[q][k] = k as u128 * t[q - 1][k] + t[q - 1][k - 1];
        }
    }
    t
}

/// Product of factors in `[0, 1]`, switching to log space when any factor is
/// small enough that repeated multiplication risks underflow.
pub fn product_unit<I: IntoIterator<Item = (f64, f64)>>(factors: I) -> f64 {
    // (base, exponent)
    let items: Vec<(f64, f64)> = factors.into_iter().collect();
    if items.iter().any(|&(b, e)| b == 0.0 && e > 0.0) {
        return 0.0;
    }
    if items.iter().any(|&(b, _)| b < 1e-3) {
        let log: f64 = items
            .iter()
            .filter(|&&(_, e)| e != 0.0)
            .map(|&(b, e)| e * b.ln())
            .sum();
        log.exp()
    } else {
        items.iter().map(|&(b, e)| b.powf(e)).product()
    }
}
