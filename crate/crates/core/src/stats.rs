//! Goodness-of-fit tests, confidence intervals and streaming moments.
//!
//! The level used across the repository is [`DEFAULT_LEVEL`]. Chi-square tests
//! pool neighbouring cells until every expected count is at least
//! [`MIN_EXPECTED_COUNT`].

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

const MODULE: &str = "stats-verify";

pub const DEFAULT_LEVEL: f64 = 0.01;
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Outcome of one hypothesis test. `passed` means the null was not rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_sizes: (usize, usize),
    pub level: f64,
    pub passed: bool,
}

impl TestReport {
    fn new(name: &str, statistic: f64, p_value: f64, sample_sizes: (usize, usize), level: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.to_string(),
            statistic,
            p_value,
            sample_sizes,
            level,
            passed: p_value > level,
        }
    }

    /// Deterministic check: `statistic` is the absolute discrepancy and the
    /// report passes (p = 1) iff it is within `tolerance`, else p = 0.
    pub fn exact_check(name: impl Into<String>, discrepancy: f64, tolerance: f64) -> Self {
        let passed = discrepancy.abs() <= tolerance;
        Self {
            name: name.into(),
            statistic: discrepancy.abs(),
            p_value: if passed { 1.0 } else { 0.0 },
            sample_sizes: (0, 0),
            level: DEFAULT_LEVEL,
            passed,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Two-sided two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestReport> {
    if a.len() < 10 || b.len() < 10 {
        return Err(Error::domain(
            MODULE,
            format!("KS test needs at least 10 samples per side, got {} and {}", a.len(), b.len()),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::domain(MODULE, "KS test samples contain NaN"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let p = if d == 0.0 {
        1.0
    } else {
        let en = ((n * m) as f64 / (n + m) as f64).sqrt();
        kolmogorov_survival((en + 0.12 + 0.11 / en) * d)
    };
    Ok(TestReport::new("ks_two_sample", d, p, (n, m), level))
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F, level: f64) -> Result<TestReport> {
    if a.len() < 10 {
        return Err(Error::domain(MODULE, format!("KS test needs at least 10 samples, got {}", a.len())));
    }
    let mut xs = a.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    let p = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    Ok(TestReport::new("ks_one_sample", d, p, (xs.len(), 0), level))
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_survival(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    if x < 1.18 {
        // small-argument form converges faster here
        let t = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let w = (2.0 * std::f64::consts::PI).sqrt() / x;
        let mut s = 0.0;
        for k in 0..50 {
            let j = (2 * k + 1) as f64;
            s += (-j * j * t).exp();
        }
        return (1.0 - w * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        s += sign * term;
        if term < 1e-300 {
            break;
        }
        sign = -sign;
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit.
///
/// `expected` holds cell probabilities; if they sum to less than one the
/// missing mass is treated as an extra tail cell with zero observed count
/// unless `counts` already carries it.
pub fn chi_square_gof(counts: &[u64], expected: &[f64], level: f64) -> Result<TestReport> {
    if counts.len() != expected.len() {
        return Err(Error::domain(
            MODULE,
            format!("chi-square: {} count cells but {} expected cells", counts.len(), expected.len()),
        ));
    }
    if expected.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::domain(MODULE, "chi-square: expected probabilities must be finite and >= 0"));
    }
    let total: u64 = counts.iter().sum();
    let psum: f64 = expected.iter().sum();
    if total == 0 || psum <= 0.0 {
        return Err(Error::domain(MODULE, "chi-square: empty sample or zero expected mass"));
    }
    let nf = total as f64;
    let cells: Vec<(f64, f64)> = counts
        .iter()
        .zip(expected)
        .map(|(&c, &p)| (c as f64, p / psum * nf))
        .collect();
    let pooled = pool_cells(&cells);
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = pooled.len().saturating_sub(1);
    let p = chi_square_sf(stat, df);
    Ok(TestReport::new("chi_square_gof", stat, p, (total as usize, pooled.len()), level))
}

/// Merge adjacent cells left to right until each expected count reaches the
/// minimum; a short remainder is folded into the last emitted cell.
fn pool_cells(cells: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for &(oc, ec) in cells {
        o += oc;
        e += ec;
        if e >= MIN_EXPECTED_COUNT {
            out.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match out.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => out.push((o, e)),
        }
    }
    out.retain(|&(_, e)| e > 0.0);
    out
}

fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(stat)
}

/// Chi-square test of homogeneity across the rows of a contingency table.
///
/// Columns are pooled left to right until every expected cell count is at
/// least [`MIN_EXPECTED_COUNT`].
pub fn chi_square_homogeneity(table: &[Vec<u64>], level: f64) -> Result<TestReport> {
    if table.len() < 2 {
        return Err(Error::domain(MODULE, "homogeneity test needs at least two rows"));
    }
    let width = table[0].len();
    if table.iter().any(|r| r.len() != width) {
        return Err(Error::domain(MODULE, "homogeneity test needs a rectangular table"));
    }
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let grand: f64 = row_tot.iter().sum();
    if row_tot.iter().any(|&t| t == 0.0) {
        return Err(Error::domain(MODULE, "homogeneity test rows must be non-empty"));
    }
    let min_row = row_tot.iter().cloned().fold(f64::INFINITY, f64::min);
    // pool columns on the smallest row's expected count
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut acc = 0.0;
    for c in 0..width {
        let col: f64 = table.iter().map(|r| r[c] as f64).sum();
        cur.push(c);
        acc += col;
        if acc / grand * min_row >= MIN_EXPECTED_COUNT {
            groups.push(std::mem::take(&mut cur));
            acc = 0.0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(g) => g.extend(cur),
            None => groups.push(cur),
        }
    }
    let mut stat = 0.0;
    for g in &groups {
        let col: f64 = g.iter().map(|&c| table.iter().map(|r| r[c] as f64).sum::<f64>()).sum();
        if col == 0.0 {
            continue;
        }
        for (r, row) in table.iter().enumerate() {
            let obs: f64 = g.iter().map(|&c| row[c] as f64).sum();
            let exp = row_tot[r] * col / grand;
            stat += (obs - exp) * (obs - exp) / exp;
        }
    }
    let df = (table.len() - 1) * groups.len().saturating_sub(1);
    let p = chi_square_sf(stat, df);
    Ok(TestReport::new(
        "chi_square_homogeneity",
        stat,
        p,
        (grand as usize, groups.len()),
        level,
    ))
}

/// Two-sided z-test of `estimate` against `target` given its standard error.
pub fn z_test(estimate: f64, std_error: f64, target: f64, n: usize, level: f64) -> Result<TestReport> {
    if !(std_error.is_finite() && std_error >= 0.0) {
        return Err(Error::domain(MODULE, format!("z-test: standard error must be >= 0, got {std_error}")));
    }
    let diff = estimate - target;
    let (z, p) = if std_error == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let z = diff / std_error;
        (z, 2.0 * Normal::standard().sf(z.abs()))
    };
    Ok(TestReport::new("z_test", z, p, (n, 1), level))
}

/// Normal-approximation confidence interval for a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Two-sided normal quantile `z` for the given confidence.
pub fn z_for_confidence(confidence: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + confidence / 2.0)
}

pub fn mean_ci(samples: &[f64], confidence: f64) -> Result<MeanCi> {
    if samples.len() < 2 {
        return Err(Error::domain(MODULE, format!("mean CI needs >= 2 samples, got {}", samples.len())));
    }
    let mut acc = RunningStats::default();
    samples.iter().for_each(|&x| acc.push(x));
    acc.ci(confidence)
}

/// Streaming mean and variance (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.mean = mean;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn ci(&self, confidence: f64) -> Result<MeanCi> {
        if self.n < 2 {
            return Err(Error::domain(MODULE, format!("mean CI needs >= 2 samples, got {}", self.n)));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::domain(MODULE, format!("confidence must lie in (0, 1), got {confidence}")));
        }
        let se = self.std_error();
        Ok(MeanCi {
            mean: self.mean,
            half_width: z_for_confidence(confidence) * se,
            std_error: se,
            n: self.n as usize,
        })
    }
}
