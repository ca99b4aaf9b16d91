//! Parking functions, Dyck paths and the Borel law.
//!
//! In a cluster of size `n + 1`, the sorted image of a parking function of
//! length `n` is an `n`-step Dyck path `d` whose histogram `κ_i(d)` counts the
//! direct replies to point `i - 1`. Marked clusters replace the uniform law on
//! parking functions with the weighted law
//!
//! ```text
//! P(π = d) ∝ Π_{i=1..n} m_{i-1}^{κ_i(d)} / κ_i(d)!
//! ```

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const MODULE: &str = "combinatorics";

/// Largest path length accepted by [`enumerate_dyck_paths`] and
/// [`sample_weighted_dyck_path`]. `C_14 = 2_674_440`.
pub const DYCK_ENUMERATION_BOUND: usize = 14;

/// `true` iff the sorted entries satisfy `π_(i) <= i`.
///
/// The empty vector is a parking function of length zero.
pub fn is_parking_function(candidate: &[i64]) -> Result<bool> {
    if let Some(bad) = candidate.iter().find(|&&x| x < 1) {
        return Err(Error::domain(
            MODULE,
            format!("parking function entries must be positive integers, found {bad}"),
        ));
    }
    let mut sorted = candidate.to_vec();
    sorted.sort_unstable();
    Ok(sorted.iter().enumerate().all(|(i, &x)| x as usize <= i + 1))
}

/// A parking function, stored with 1-based entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParkingFunction(Vec<u32>);

impl ParkingFunction {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        let as_i64: Vec<i64> = entries.iter().map(|&x| x as i64).collect();
        if !is_parking_function(&as_i64)? {
            return Err(Error::domain(MODULE, format!("{entries:?} is not a parking function")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The sorted image.
    pub fn to_dyck_path(&self) -> DyckPath {
        let mut d = self.0.clone();
        d.sort_unstable();
        DyckPath(d)
    }

    pub fn kappa(&self) -> Vec<u32> {
        kappa_histogram(&self.0)
    }
}

/// A non-decreasing vector `d` with `1 <= d_i <= i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyckPath(Vec<u32>);

impl DyckPath {
    pub fn new(steps: Vec<u32>) -> Result<Self> {
        let ok = steps
            .iter()
            .enumerate()
            .all(|(i, &d)| d >= 1 && d as usize <= i + 1)
            && steps.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(Error::domain(MODULE, format!("{steps:?} is not a Dyck path")));
        }
        Ok(Self(steps))
    }

    /// Build from a histogram `κ` with `Σκ = n` and partial sums `>= i`.
    pub fn from_kappa(kappa: &[u32]) -> Result<Self> {
        let mut steps = Vec::with_capacity(kappa.len());
        for (i, &k) in kappa.iter().enumerate() {
            steps.extend(std::iter::repeat_n(i as u32 + 1, k as usize));
        }
        if steps.len() != kappa.len() {
            return Err(Error::domain(
                MODULE,
                format!("histogram {kappa:?} does not sum to its length"),
            ));
        }
        Self::new(steps)
    }

    pub fn steps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kappa(&self) -> Vec<u32> {
        kappa_histogram(&self.0)
    }
}

/// `κ_i = |{j : entries_j = i}|` for `i = 1..=n`.
pub fn kappa_histogram(entries: &[u32]) -> Vec<u32> {
    let n = entries.len();
    let mut k = vec![0u32; n];
    for &e in entries {
        let i = e as usize;
        if (1..=n).contains(&i) {
            k[i - 1] += 1;
        }
    }
    k
}

/// Uniform parking function of length `k` by Pollak's circle argument.
///
/// Cars with i.i.d. uniform preferences on `1..=k+1` park on a circle of
/// `k + 1` spaces; the preferences are then rotated so that the one empty
/// space is `k + 1`.
pub fn sample_uniform_parking_function<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ParkingFunction> {
    if k == 0 {
        return Err(Error::domain(MODULE, "parking function length must be >= 1"));
    }
    Ok(ParkingFunction(pollak_unchecked(k, rng)))
}

pub(crate) fn pollak_unchecked<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<u32> {
    let slots = k + 1;
    let prefs: Vec<usize> = (0..k).map(|_| rng.random_range(0..slots)).collect();
    // next[s]: candidate free slot at or after s (path-halving union-find)
    let mut next: Vec<usize> = (0..slots).collect();
    fn find(next: &mut [usize], mut s: usize) -> usize {
        while next[s] != s {
            next[s] = next[next[s]];
            s = next[s];
        }
        s
    }
    for &p in &prefs {
        let s = find(&mut next, p);
        next[s] = find(&mut next, (s + 1) % slots);
    }
    let empty = find(&mut next, 0);
    // shifting every preference by `shift` rotates the parked configuration,
    // moving the empty space from `empty` to the last slot
    let shift = slots - 1 - empty;
    prefs
        .into_iter()
        .map(|p| ((p + shift) % slots) as u32 + 1)
        .collect()
}

/// `C_n = (2n)! / ((n+1)! n!)`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// All `n`-step Dyck paths in lexicographic order.
pub fn enumerate_dyck_paths(n: usize) -> Result<Vec<DyckPath>> {
    if n == 0 {
        return Err(Error::domain(MODULE, "Dyck path length must be >= 1"));
    }
    if n > DYCK_ENUMERATION_BOUND {
        return Err(Error::capacity(
            MODULE,
            format!("cannot enumerate {n}-step Dyck paths"),
            DYCK_ENUMERATION_BOUND,
        ));
    }
    let mut out = Vec::with_capacity(catalan(n) as usize);
    let mut cur = Vec::with_capacity(n);
    fn rec(n: usize, cur: &mut Vec<u32>, out: &mut Vec<DyckPath>) {
        let i = cur.len();
        if i == n {
            out.push(DyckPath(cur.clone()));
            return;
        }
        let lo = cur.last().copied().unwrap_or(1);
        for v in lo..=(i as u32 + 1) {
            cur.push(v);
            rec(n, cur, out);
            cur.pop();
        }
    }
    rec(n, &mut cur, &mut out);
    Ok(out)
}

/// Unnormalized weight `Π m_{i-1}^{κ_i} / κ_i!` of a path under `marks`.
pub fn dyck_path_weight(path: &DyckPath, marks: &[f64]) -> f64 {
    path.kappa()
        .iter()
        .enumerate()
        .map(|(i, &k)| marks[i].powi(k as i32) / factorial(k as usize))
        .product()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn check_marks(n: usize, marks: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::domain(MODULE, "Dyck path length must be >= 1"));
    }
    if n > DYCK_ENUMERATION_BOUND {
        return Err(Error::capacity(
            MODULE,
            format!("weighted Dyck sampling requested for n = {n}"),
            DYCK_ENUMERATION_BOUND,
        ));
    }
    if marks.len() < n {
        return Err(Error::domain(
            MODULE,
            format!("need {n} marks for an {n}-step path, got {}", marks.len()),
        ));
    }
    if let Some(bad) = marks.iter().find(|&&m| !(m.is_finite() && m > 0.0)) {
        return Err(Error::domain(MODULE, format!("marks must be positive and finite, found {bad}")));
    }
    Ok(())
}

/// Draw an `n`-step Dyck path with probability proportional to
/// [`dyck_path_weight`]. Only `marks[..n]` enter the weights.
///
/// The weight factorizes over levels, so the path is drawn level by level
/// from a backward table of completion weights indexed by how many steps have
/// been placed so far; this is exact and costs `O(n^3)`.
pub fn sample_weighted_dyck_path<R: Rng + ?Sized>(n: usize, marks: &[f64], rng: &mut R) -> Result<DyckPath> {
    check_marks(n, marks)?;
    Ok(DyckPath(weighted_dyck_unchecked(n, marks, rng)))
}

pub(crate) fn weighted_dyck_unchecked<R: Rng + ?Sized>(n: usize, marks: &[f64], rng: &mut R) -> Vec<u32> {
    if n == 1 {
        return vec![1];
    }
    // level weights w[i][k] = m_i^k / k!, i = 0..n-1, k = 0..n
    let w: Vec<Vec<f64>> = marks[..n]
        .iter()
        .map(|&m| {
            let mut row = Vec::with_capacity(n + 1);
            let mut v = 1.0;
            row.push(v);
            for k in 1..=n {
                v *= m / k as f64;
                row.push(v);
            }
            row
        })
        .collect();
    // tail[l][c]: total weight of levels l+1..n given c steps placed after
    // level l, with the walk constraint c_j >= j for j < n and c_n = n
    let mut tail = vec![vec![0.0f64; n + 1]; n + 1];
    tail[n][n] = 1.0;
    for l in (0..n).rev() {
        for c in l..=n {
            let mut s = 0.0;
            for k in 0..=(n - c) {
                let c2 = c + k;
                if c2 > l || l + 1 == n {
                    s += w[l][k] * tail[l + 1][c2];
                }
            }
            tail[l][c] = s;
        }
    }
    let mut steps = Vec::with_capacity(n);
    let mut c = 0usize;
    for l in 0..n {
        let total = tail[l][c];
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        let mut last_ok = None;
        for k in 0..=(n - c) {
            let c2 = c + k;
            let wt = w[l][k] * tail[l + 1][c2];
            if wt <= 0.0 {
                continue;
            }
            last_ok = Some(k);
            if u < wt {
                chosen = Some(k);
                break;
            }
            u -= wt;
        }
        let k = chosen.or(last_ok).expect("a feasible level count always exists");
        steps.extend(std::iter::repeat_n(l as u32 + 1, k));
        c += k;
    }
    debug_assert_eq!(steps.len(), n);
    steps
}

/// Total progeny law of a Poisson(ρ) Galton–Watson tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorelLaw {
    rho: f64,
}

impl BorelLaw {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_nan() || rho < 0.0 {
            return Err(Error::domain(MODULE, format!("Borel parameter must be >= 0, got {rho}")));
        }
        if rho >= 1.0 {
            return Err(Error::stability(
                MODULE,
                format!("Borel parameter must be < 1, got {rho}"),
            ));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mean(&self) -> f64 {
        1.0 / (1.0 - self.rho)
    }

    /// Total progeny of the branching walk, counting the root.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.rho == 0.0 {
            return 1;
        }
        let offspring = Poisson::new(self.rho).expect("rho in (0, 1)");
        let mut active: u64 = 1;
        let mut total: u64 = 0;
        while active > 0 {
            total += 1;
            active = active - 1 + offspring.sample(rng) as u64;
        }
        total
    }

    /// `P(N = n) = e^{-ρn} (ρn)^{n-1} / n!`.
    pub fn pmf(&self, n: u64) -> Result<f64> {
        if n < 1 {
            return Err(Error::domain(MODULE, "Borel support starts at n = 1"));
        }
        if self.rho == 0.0 {
            return Ok(if n == 1 { 1.0 } else { 0.0 });
        }
        let nf = n as f64;
        let ln = -self.rho * nf + (nf - 1.0) * (self.rho * nf).ln() - ln_gamma(nf + 1.0);
        Ok(ln.exp())
    }
}
