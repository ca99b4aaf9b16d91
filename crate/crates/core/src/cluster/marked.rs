//! One-sided marked clusters.
//!
//! Point `i` carries a mark `M_i` and excites the intensity by `M_i ḡ(t - τ_i)`.
//! Three samplers share this law: forward thinning, the Dyck-path
//! construction, and (for exponential `ḡ`) a closed-form chronology given the
//! size and the marks.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::record::{ClusterRecord, Side};
use super::thinning::require_monotone;
use super::{MAX_CLUSTER_POINTS, TAIL_CUTOFF};
use crate::combinatorics::{kappa_histogram, weighted_dyck_unchecked, BorelLaw, DyckPath, DYCK_ENUMERATION_BOUND};
use crate::error::{Error, Result};
use crate::kernels::ResponseKernel;

const MODULE: &str = "cluster-sim";

/// I.i.d. mark distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarkLaw {
    Constant { value: f64 },
    Borel { rho: f64 },
}

impl MarkLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            MarkLaw::Constant { value } => value,
            MarkLaw::Borel { rho } => 1.0 / (1.0 - rho),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MarkLaw::Constant { value } if !(value.is_finite() && value > 0.0) => Err(Error::domain(
                MODULE,
                format!("constant mark must be positive, got {value}"),
            )),
            MarkLaw::Borel { rho } => BorelLaw::new(rho).map(|_| ()),
            _ => Ok(()),
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::Constant { value } => value,
            MarkLaw::Borel { rho } => BorelLaw::new(rho).expect("validated").sample(rng) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedParams {
    pub kernel: ResponseKernel,
    pub mark_law: MarkLaw,
}

impl MarkedParams {
    pub fn new(kernel: ResponseKernel, mark_law: MarkLaw) -> Result<Self> {
        let p = Self { kernel, mark_law };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.mark_law.validate()?;
        let load = self.kernel.mass() * self.mark_law.mean();
        if !(load < 1.0) {
            return Err(Error::stability(
                MODULE,
                format!("kernel mass times mean mark must be < 1, got {load}"),
            ));
        }
        Ok(())
    }
}

fn too_big() -> Error {
    Error::divergence(MODULE, format!("cluster exceeded {MAX_CLUSTER_POINTS} points"))
}

/// Marked cluster by intensity thinning; every point, the initial one
/// included, draws its mark from the mark law.
pub fn simulate_marked_thinning<R: Rng + ?Sized>(params: &MarkedParams, rng: &mut R) -> Result<ClusterRecord> {
    params.validate()?;
    require_monotone(&[&params.kernel])?;
    let g = params.kernel;
    let state = |epochs: &[f64], marks: &[f64], t: f64| {
        let mut lam = 0.0;
        let mut tail = 0.0;
        for (&e, &m) in epochs.iter().zip(marks) {
            lam += m * g.eval_unchecked(t - e);
            tail += m * g.tail_mass_unchecked(t - e);
        }
        (lam, tail)
    };

    let mut rec = ClusterRecord::singleton(params.mark_law.sample(rng));
    let mut t = 0.0;
    let (mut bound, mut tail) = state(&rec.epochs, &rec.marks, t);
    loop {
        if tail < TAIL_CUTOFF || !(bound > 0.0) {
            break;
        }
        t += -(1.0 - rng.random::<f64>()).ln() / bound;
        let (lam, c_tail) = state(&rec.epochs, &rec.marks, t);
        if rng.random::<f64>() * bound < lam {
            let target = rng.random::<f64>() * lam;
            let mut acc = 0.0;
            let mut parent = rec.epochs.len() - 1;
            for (i, (&e, &m)) in rec.epochs.iter().zip(&rec.marks).enumerate() {
                acc += m * g.eval_unchecked(t - e);
                if target < acc {
                    parent = i;
                    break;
                }
            }
            let mark = params.mark_law.sample(rng);
            rec.epochs.push(t);
            rec.sides.push(Side::One);
            rec.parents.push(Some(parent));
            rec.marks.push(mark);
            if rec.epochs.len() > MAX_CLUSTER_POINTS {
                return Err(too_big());
            }
            bound = lam + mark * g.eval_unchecked(0.0);
            tail = c_tail + mark * g.mass();
        } else {
            bound = lam;
            tail = c_tail;
        }
    }
    debug_assert!(rec.check_invariants().is_ok());
    Ok(rec)
}

/// What [`simulate_dyck_cluster`] does when the realized size exceeds the
/// weighted Dyck sampling bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DyckOverflow {
    /// Redraw the size and marks, i.e. condition on `N̄ - 1 <= bound`.
    #[default]
    Reject,
    /// Report a capacity error.
    Error,
}

/// Marked cluster through the Dyck-path construction.
///
/// Size and marks come from the Poisson-mixture branching process (walked
/// breadth-first), the reply tree from the weighted Dyck law given the
/// marks, and offsets i.i.d. from `ḡ / ρ̄`.
pub fn simulate_dyck_cluster<R: Rng + ?Sized>(
    params: &MarkedParams,
    overflow: DyckOverflow,
    rng: &mut R,
) -> Result<ClusterRecord> {
    params.validate()?;
    let rho = params.kernel.mass();
    let marks = loop {
        let mut marks = Vec::new();
        let mut active: u64 = 1;
        while active > 0 {
            let m = params.mark_law.sample(rng);
            marks.push(m);
            let lam = rho * m;
            let kids = if lam > 0.0 {
                Poisson::new(lam).expect("positive rate").sample(rng) as u64
            } else {
                0
            };
            active = active - 1 + kids;
            if marks.len() > MAX_CLUSTER_POINTS {
                return Err(too_big());
            }
        }
        if marks.len() - 1 <= DYCK_ENUMERATION_BOUND {
            break marks;
        }
        if overflow == DyckOverflow::Error {
            return Err(Error::capacity(
                MODULE,
                format!("Dyck cluster realized {} replies", marks.len() - 1),
                DYCK_ENUMERATION_BOUND,
            ));
        }
    };
    let n = marks.len() - 1;
    if n == 0 {
        return Ok(ClusterRecord::singleton(marks[0]));
    }
    let steps = weighted_dyck_unchecked(n, &marks[..n], rng);
    let mut times = vec![0.0; n + 1];
    let mut parents = vec![None; n + 1];
    let mut sides = vec![Side::One; n + 1];
    sides[0] = Side::Initial;
    for i in 1..=n {
        let parent = steps[i - 1] as usize - 1;
        times[i] = times[parent] + params.kernel.sample_offset(rng);
        parents[i] = Some(parent);
    }
    Ok(ClusterRecord::from_unsorted(times, sides, parents, marks))
}

/// Rates of the gaps `Z_ℓ`, `ℓ = 0..n-1`, for an `n`-step path:
/// `Σ_{j<=ℓ+1} κ_j - ℓ`.
pub fn exp_marked_rates(path: &DyckPath) -> Vec<f64> {
    let kappa = path.kappa();
    let mut cum = 0i64;
    (0..kappa.len())
        .map(|l| {
            cum += kappa[l] as i64;
            (cum - l as i64) as f64
        })
        .collect()
}

/// The same rates indexed the other way, `i = 1..=n`:
/// `i + 1 - Σ_{j=N̄-i}^{N̄-1} κ_j` with `N̄ = n + 1`.
pub fn exp_marked_rates_alternate(path: &DyckPath) -> Vec<f64> {
    let kappa = path.kappa();
    let n = kappa.len();
    let size = n + 1;
    (1..=n)
        .map(|i| {
            let s: i64 = ((size - i)..=(size - 1)).map(|j| kappa[j - 1] as i64).sum();
            (i as i64 + 1 - s) as f64
        })
        .collect()
}

/// Exponential-kernel marked cluster given its size and chronological marks.
///
/// The reply tree is drawn from the weighted Dyck law; gaps between
/// successive epochs are independent `Exp(β · rate_ℓ)` where `rate_ℓ` counts
/// the replies still pending. Each new point is attributed to a pending
/// parent chosen uniformly among pending replies.
pub fn simulate_exp_marked_conditional<R: Rng + ?Sized>(beta: f64, marks: &[f64], rng: &mut R) -> Result<ClusterRecord> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(MODULE, format!("decay must be > 0, got beta = {beta}")));
    }
    if marks.is_empty() {
        return Err(Error::domain(MODULE, "need at least one mark"));
    }
    if let Some(bad) = marks.iter().find(|&&m| !(m.is_finite() && m > 0.0)) {
        return Err(Error::domain(MODULE, format!("marks must be positive, found {bad}")));
    }
    let n = marks.len() - 1;
    if n > DYCK_ENUMERATION_BOUND {
        return Err(Error::capacity(
            MODULE,
            format!("conditional chronology requested for {n} replies"),
            DYCK_ENUMERATION_BOUND,
        ));
    }
    if n == 0 {
        return Ok(ClusterRecord::singleton(marks[0]));
    }
    let steps = weighted_dyck_unchecked(n, &marks[..n], rng);
    let kappa = kappa_histogram(&steps);
    let rates = exp_marked_rates(&DyckPath::new(steps)?);

    let mut pending: Vec<u32> = kappa.clone();
    pending.push(0);
    let mut rec = ClusterRecord::singleton(marks[0]);
    let mut t = 0.0;
    for (l, &rate) in rates.iter().enumerate() {
        if !(rate > 0.0) {
            return Err(Error::invariant(
                MODULE,
                format!("non-positive pending-reply rate {rate} at step {l}"),
            ));
        }
        t += -(1.0 - rng.random::<f64>()).ln() / (beta * rate);
        let live: u32 = pending[..=l].iter().sum();
        debug_assert_eq!(live as f64, rate);
        let mut u = rng.random_range(0..live);
        let mut parent = l;
        for (k, &c) in pending[..=l].iter().enumerate() {
            if u < c {
                parent = k;
                break;
            }
            u -= c;
        }
        pending[parent] -= 1;
        rec.epochs.push(t);
        rec.sides.push(Side::One);
        rec.parents.push(Some(parent));
        rec.marks.push(marks[l + 1]);
    }
    debug_assert!(rec.check_invariants().is_ok());
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::enumerate_dyck_paths;
    use crate::rng::RngStream;

    fn unit(beta: f64, mass: f64) -> ResponseKernel {
        ResponseKernel::exponential_with_mass(mass, beta).unwrap()
    }

    #[test]
    fn zero_mass_kernel_singleton() {
        let p = MarkedParams::new(unit(1.0, 0.0), MarkLaw::Constant { value: 2.0 }).unwrap();
        let mut rng = RngStream::new(1).rng();
        for _ in 0..100 {
            assert_eq!(simulate_marked_thinning(&p, &mut rng).unwrap().size(), 1);
            assert_eq!(simulate_dyck_cluster(&p, DyckOverflow::Error, &mut rng).unwrap().size(), 1);
        }
    }

    #[test]
    fn stability_checked() {
        assert!(matches!(
            MarkedParams::new(unit(1.0, 0.6), MarkLaw::Constant { value: 2.0 }),
            Err(Error::Stability { .. })
        ));
        assert!(MarkedParams::new(unit(1.0, 0.4), MarkLaw::Borel { rho: 0.5 }).is_ok());
        assert!(MarkedParams::new(unit(1.0, 0.6), MarkLaw::Borel { rho: 0.5 }).is_err());
        assert!(MarkedParams::new(unit(1.0, 0.1), MarkLaw::Constant { value: 0.0 }).is_err());
    }

    #[test]
    fn unit_marks_mean_size() {
        let p = MarkedParams::new(unit(2.0, 0.4), MarkLaw::Constant { value: 1.0 }).unwrap();
        let mut rng = RngStream::new(2).rng();
        let xs: Vec<f64> = (0..200_000)
            .map(|_| simulate_marked_thinning(&p, &mut rng).unwrap().size() as f64)
            .collect();
        let ci = crate::stats::mean_ci(&xs, 0.99).unwrap();
        assert!((ci.mean - 1.0 / 0.6).abs() < 3.0 * ci.std_error, "{ci:?}");
    }

    #[test]
    fn records_valid() {
        let p = MarkedParams::new(unit(1.5, 0.3), MarkLaw::Borel { rho: 0.4 }).unwrap();
        let mut rng = RngStream::new(3).rng();
        for _ in 0..2000 {
            simulate_marked_thinning(&p, &mut rng).unwrap().check_invariants().unwrap();
            simulate_dyck_cluster(&p, DyckOverflow::Reject, &mut rng)
                .unwrap()
                .check_invariants()
                .unwrap();
        }
        let r = simulate_exp_marked_conditional(2.0, &[1.0, 3.0, 1.0, 2.0], &mut rng).unwrap();
        r.check_invariants().unwrap();
        assert_eq!(r.marks, vec![1.0, 3.0, 1.0, 2.0]);
    }

    #[test]
    fn dyck_overflow_error_mode() {
        // heavy marks make sizes above the bound common
        let p = MarkedParams::new(unit(1.0, 0.09), MarkLaw::Constant { value: 10.0 }).unwrap();
        let mut rng = RngStream::new(4).rng();
        let mut saw_capacity = false;
        for _ in 0..2000 {
            match simulate_dyck_cluster(&p, DyckOverflow::Error, &mut rng) {
                Err(Error::Capacity { bound, .. }) => {
                    assert_eq!(bound, DYCK_ENUMERATION_BOUND);
                    saw_capacity = true;
                }
                Ok(r) => assert!(r.size() <= DYCK_ENUMERATION_BOUND + 1),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(saw_capacity);
        for _ in 0..500 {
            let r = simulate_dyck_cluster(&p, DyckOverflow::Reject, &mut rng).unwrap();
            assert!(r.size() <= DYCK_ENUMERATION_BOUND + 1);
        }
    }

    #[test]
    fn conditional_single_reply_is_exponential() {
        let mut rng = RngStream::new(5).rng();
        let beta = 2.0;
        let xs: Vec<f64> = (0..50_000)
            .map(|_| simulate_exp_marked_conditional(beta, &[3.0, 1.0], &mut rng).unwrap().duration())
            .collect();
        let r = crate::stats::ks_one_sample(&xs, |x| 1.0 - (-beta * x).exp(), 0.01).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn conditional_two_replies_mean() {
        // P([1,1]) = 1/3 with gaps Exp(2), Exp(1); P([1,2]) = 2/3 with Exp(1), Exp(1)
        let beta = 1.5;
        let exact = (1.0 / beta) * (1.0 / 3.0 * 1.5 + 2.0 / 3.0 * 2.0);
        let mut rng = RngStream::new(6).rng();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| simulate_exp_marked_conditional(beta, &[1.0, 1.0, 1.0], &mut rng).unwrap().duration())
            .collect();
        let ci = crate::stats::mean_ci(&xs, 0.99).unwrap();
        assert!((ci.mean - exact).abs() < 3.0 * ci.std_error, "{} vs {exact}", ci.mean);
    }

    #[test]
    fn conditional_errors() {
        let mut rng = RngStream::new(7).rng();
        assert!(simulate_exp_marked_conditional(0.0, &[1.0], &mut rng).is_err());
        assert!(simulate_exp_marked_conditional(1.0, &[], &mut rng).is_err());
        assert!(simulate_exp_marked_conditional(1.0, &[1.0, -1.0], &mut rng).is_err());
        assert!(matches!(
            simulate_exp_marked_conditional(1.0, &[1.0; 16], &mut rng),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn rates_positive_and_forms_agree() {
        for n in 1..=8 {
            for path in enumerate_dyck_paths(n).unwrap() {
                let a = exp_marked_rates(&path);
                let b = exp_marked_rates_alternate(&path);
                assert!(a.iter().all(|&r| r >= 1.0));
                // reversed except the last entry, which is 1 in both
                for k in 0..n - 1 {
                    assert_eq!(b[k], a[n - 2 - k]);
                }
                assert_eq!(a[n - 1], 1.0);
                assert_eq!(b[n - 1], 1.0);
                let mut sa = a.clone();
                let mut sb = b.clone();
                sa.sort_by(f64::total_cmp);
                sb.sort_by(f64::total_cmp);
                assert_eq!(sa, sb, "{path:?}");
            }
        }
    }
}
