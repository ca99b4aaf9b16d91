//! Named statistical suites run by the `verify` command.
//!
//! Each check either is a hypothesis test at [`DEFAULT_LEVEL`] against an
//! independent oracle (exact law, alternate sampler or closed form) or a
//! deterministic identity reported through [`TestReport::exact_check`].

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    exp_marked_rates, exp_marked_rates_alternate, simulate_asynchrony_limit, simulate_cluster_parking,
    simulate_cluster_thinning, simulate_exp_marked_conditional, simulate_marked_thinning, InteractionParams, MarkLaw,
    MarkedParams, Side,
};
use crate::combinatorics::{
    dyck_path_weight, enumerate_dyck_paths, is_parking_function, sample_uniform_parking_function,
    sample_weighted_dyck_path, BorelLaw,
};
use crate::error::{Error, Result};
use crate::kernels::{ResponseKernel, SlowdownSpec};
use crate::performance::{guaranteed_rate, idealized_rate, poly_kstar, solve_kstar, AsyncMeans};
use crate::queue::{expected_size_quad, simulate_quad_cluster, Preset};
use crate::rng::{replicate, RngStream};
use crate::stats::{
    chi_square_gof, chi_square_homogeneity, ks_one_sample, ks_two_sample, z_test, RunningStats, TestReport,
    DEFAULT_LEVEL,
};

const MODULE: &str = "stats-verify";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernels,
    Combinatorics,
    Cluster,
    Marked,
    Performance,
    Queue,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Kernels,
        Suite::Combinatorics,
        Suite::Cluster,
        Suite::Marked,
        Suite::Performance,
        Suite::Queue,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Combinatorics => "combinatorics",
            Suite::Cluster => "cluster",
            Suite::Marked => "marked",
            Suite::Performance => "performance",
            Suite::Queue => "queue",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            Error::domain(
                MODULE,
                format!("unknown suite '{name}', expected one of kernels, combinatorics, cluster, marked, performance, queue"),
            )
        })
    }

    /// Run every check of the suite from `seed`; check `i` draws from stream
    /// `derive(i)`.
    pub fn run(&self, seed: u64) -> Result<Vec<TestReport>> {
        let base = RngStream::new(seed);
        match self {
            Suite::Kernels => kernels(base),
            Suite::Combinatorics => combinatorics(base),
            Suite::Cluster => cluster(base),
            Suite::Marked => marked(base),
            Suite::Performance => performance(),
            Suite::Queue => queue(base),
        }
    }
}

fn kernels(base: RngStream) -> Result<Vec<TestReport>> {
    let g = ResponseKernel::exponential(0.843, 3.64)?;
    let mut rng = base.derive(0).rng();
    let draws: Vec<f64> = (0..20_000).map(|_| g.sample_offset(&mut rng)).collect();
    let cdf = |x: f64| 1.0 - (-3.64 * x).exp();
    let mut out = vec![ks_one_sample(&draws, cdf, DEFAULT_LEVEL)?.named("offset law is Exp(beta)")];
    out.push(TestReport::exact_check("mass equals alpha/beta", g.mass() - 0.843 / 3.64, 1e-15));
    let worst = (1..10)
        .map(|i| {
            let u = i as f64 / 10.0;
            Ok((g.cdf(g.inverse_cdf(u)?)? - u).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(TestReport::exact_check("inverse CDF is a right inverse", worst, 1e-9));
    let h = SlowdownSpec::polynomial(2.0)?;
    out.push(TestReport::exact_check(
        "slowdown fixes 0 and 1",
        h.eval(0.0)?.abs() + (h.eval(1.0)? - 1.0).abs(),
        0.0,
    ));
    Ok(out)
}

fn combinatorics(base: RngStream) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();

    // all 16 parking functions of length 3, indexed base 4
    let code = |v: &[u32]| v.iter().fold(0usize, |a, &x| a * 4 + x as usize);
    let mut cells: HashMap<usize, usize> = HashMap::new();
    for a in 1..=3i64 {
        for b in 1..=3i64 {
            for c in 1..=3i64 {
                if is_parking_function(&[a, b, c])? {
                    let next = cells.len();
                    cells.insert(code(&[a as u32, b as u32, c as u32]), next);
                }
            }
        }
    }
    let mut rng = base.derive(0).rng();
    let mut counts = vec![0u64; cells.len()];
    for _ in 0..100_000 {
        let pf = sample_uniform_parking_function(3, &mut rng)?;
        counts[cells[&code(pf.entries())]] += 1;
    }
    out.push(
        chi_square_gof(&counts, &vec![1.0; cells.len()], DEFAULT_LEVEL)?.named("parking functions of length 3 are uniform"),
    );

    for (i, marks) in [vec![1.0; 5], vec![2.0, 0.5, 1.5, 1.0, 3.0]].into_iter().enumerate() {
        let paths = enumerate_dyck_paths(5)?;
        let index: HashMap<Vec<u32>, usize> = paths.iter().enumerate().map(|(j, p)| (p.steps().to_vec(), j)).collect();
        let probs: Vec<f64> = paths.iter().map(|p| dyck_path_weight(p, &marks)).collect();
        let mut rng = base.derive(1 + i as u64).rng();
        let mut counts = vec![0u64; paths.len()];
        for _ in 0..100_000 {
            let d = sample_weighted_dyck_path(5, &marks, &mut rng)?;
            counts[index[d.steps()]] += 1;
        }
        out.push(chi_square_gof(&counts, &probs, DEFAULT_LEVEL)?.named(format!("weighted Dyck paths, marks {marks:?}")));
    }

    for (i, rho) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let law = BorelLaw::new(rho)?;
        let mut rng = base.derive(10 + i as u64).rng();
        let mut counts = vec![0u64; 31];
        for _ in 0..200_000 {
            let n = law.sample(&mut rng) as usize;
            counts[n.min(31) - 1] += 1;
        }
        let mut probs: Vec<f64> = (1..=30).map(|n| law.pmf(n)).collect::<Result<_>>()?;
        probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
        out.push(chi_square_gof(&counts, &probs, DEFAULT_LEVEL)?.named(format!("Borel({rho}) sizes match the pmf")));
    }
    Ok(out)
}

fn size_row(sizes: &[usize], cells: usize) -> Vec<u64> {
    let mut row = vec![0u64; cells];
    for &n in sizes {
        row[(n - 1).min(cells - 1)] += 1;
    }
    row
}

fn cluster(base: RngStream) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let reps = 20_000;
    let settings = [
        InteractionParams::exponential(0.15, 0.15, 1.0, 2.0, 1.0)?,
        InteractionParams::exponential(0.2, 0.3, 1.5, 0.7, 0.2)?,
        InteractionParams::exponential(0.5, 0.3, 1.0, 1.0, 5.0)?,
    ];
    for (i, p) in settings.iter().enumerate() {
        let a = replicate(reps, base.derive(2 * i as u64), |r| simulate_cluster_thinning(p, r))?;
        let b = replicate(reps, base.derive(2 * i as u64 + 1), |r| simulate_cluster_parking(p, r))?;
        let (da, db): (Vec<f64>, Vec<f64>) = (a.iter().map(|c| c.duration()).collect(), b.iter().map(|c| c.duration()).collect());
        let label = format!("rho = {:.1}, eta = {}", p.rho(), p.eta);
        out.push(ks_two_sample(&da, &db, DEFAULT_LEVEL)?.named(format!("thinning vs parking durations, {label}")));
        let (sa, sb): (Vec<usize>, Vec<usize>) = (a.iter().map(|c| c.size()).collect(), b.iter().map(|c| c.size()).collect());
        out.push(
            chi_square_homogeneity(&[size_row(&sa, 40), size_row(&sb, 40)], DEFAULT_LEVEL)?
                .named(format!("thinning vs parking sizes, {label}")),
        );
    }

    let p = InteractionParams::exponential(0.2, 0.3, 1.0, 1.0, 1.0)?;
    let q = p.rho1() / p.rho();
    let recs = replicate(100_000, base.derive(10), |r| simulate_cluster_parking(&p, r))?;
    let n = 3;
    let mut counts = vec![0u64; n + 1];
    for c in recs.iter().filter(|c| c.size() == n + 1) {
        counts[c.side_counts().0] += 1;
    }
    let binom: Vec<f64> = (0..=n)
        .map(|k| binomial(n as u64, k as u64) * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32))
        .collect();
    out.push(chi_square_gof(&counts, &binom, DEFAULT_LEVEL)?.named("side split given N = 4 is binomial"));

    let limit = InteractionParams::exponential(0.3, 0.2, 1.0, 0.5, 1.0)?;
    let a = replicate(20_000, base.derive(11), |r| simulate_asynchrony_limit(Side::One, &limit, r))?;
    let marked = MarkedParams::new(limit.g1, MarkLaw::Borel { rho: limit.rho2() })?;
    let b = replicate(20_000, base.derive(12), |r| simulate_marked_thinning(&marked, r).map(|c| c.duration()))?;
    out.push(ks_two_sample(&a, &b, DEFAULT_LEVEL)?.named("customer-paced limit equals Borel-marked cluster"));
    Ok(out)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn marked(base: RngStream) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for path in enumerate_dyck_paths(n)? {
            let (a, b) = (exp_marked_rates(&path), exp_marked_rates_alternate(&path));
            // the alternate form runs backwards over all but the final gap
            for k in 0..n - 1 {
                worst = worst.max((b[k] - a[n - 2 - k]).abs());
            }
            worst = worst.max((a[n - 1] - b[n - 1]).abs());
        }
    }
    out.push(TestReport::exact_check("reply-rate forms agree on all Dyck paths", worst, 0.0));

    let beta = 1.7;
    for (i, (mark, size)) in [(1.0, 3usize), (2.0, 4)].into_iter().enumerate() {
        let params = MarkedParams::new(ResponseKernel::exponential_with_mass(0.3, beta)?, MarkLaw::Constant { value: mark })?;
        let mut rng = base.derive(i as u64).rng();
        let mut conditioned = Vec::new();
        while conditioned.len() < 5_000 {
            let c = simulate_marked_thinning(&params, &mut rng)?;
            if c.size() == size {
                conditioned.push(c.duration());
            }
        }
        let marks = vec![mark; size];
        let mut rng = base.derive(10 + i as u64).rng();
        let direct: Vec<f64> = (0..5_000)
            .map(|_| simulate_exp_marked_conditional(beta, &marks, &mut rng).map(|c| c.duration()))
            .collect::<Result<_>>()?;
        out.push(
            ks_two_sample(&conditioned, &direct, DEFAULT_LEVEL)?
                .named(format!("closed-form chronology, {size} points, mark {mark}")),
        );
    }
    Ok(out)
}

fn performance() -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for (m1, m2, sigma) in [(1.0, 1.0, 2.0), (3.0, 1.0, 2.0), (0.4, 2.5, 1.3), (2.0, 0.7, 3.0)] {
        let means = AsyncMeans::exact(m1, m2)?;
        let h = SlowdownSpec::polynomial(sigma)?;
        let (a, b) = (solve_kstar(&means, &h)?, poly_kstar(&means, sigma)?);
        let rel = ((a.k_star - b.k_star) / b.k_star)
            .abs()
            .max(((a.k_lower - b.k_lower) / b.k_lower).abs())
            .max(((a.k_upper - b.k_upper) / b.k_upper).abs());
        out.push(TestReport::exact_check(
            format!("bisection optimum equals closed form, means ({m1}, {m2}), sigma {sigma}"),
            rel,
            1e-8,
        ));
        let mut gap: f64 = 0.0;
        for k in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
            let (g, i) = (guaranteed_rate(&means, &h, k)?, idealized_rate(&means, &h, k)?);
            gap = gap.max((g - i).max(0.0)).max((i - 2.0 * g).max(0.0));
        }
        out.push(TestReport::exact_check(
            format!("guaranteed <= idealized <= 2 guaranteed, sigma {sigma}"),
            gap,
            1e-12,
        ));
    }
    Ok(out)
}

fn queue(base: RngStream) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for p in Preset::ALL {
        let got = p.params().ratios().map(|r| (r * 1000.0).round() / 1000.0);
        let diff = got.iter().zip(p.printed_ratios()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.push(TestReport::exact_check(format!("{} ratios match the printed values", p.name()), diff, 0.0));
    }
    for (i, p) in [Preset::ModerateCo, Preset::HighSelf].into_iter().enumerate() {
        let quad = p.params();
        let target = expected_size_quad(&quad)?;
        let sizes = replicate(50_000, base.derive(i as u64), |r| {
            let eta = 0.5 + r.random::<f64>();
            simulate_quad_cluster(&quad, eta, r).map(|c| c.size() as f64)
        })?;
        let mut acc = RunningStats::default();
        sizes.iter().for_each(|&x| acc.push(x));
        out.push(
            z_test(acc.mean, acc.std_error(), target, sizes.len(), DEFAULT_LEVEL)?
                .named(format!("{} natural cluster size matches E[N]", p.name())),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()).unwrap(), s);
        }
        assert!(Suite::from_name("everything").is_err());
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Kernels, Suite::Performance] {
            let reports = s.run(7).unwrap();
            assert!(reports.iter().all(|r| r.passed), "{reports:?}");
        }
    }
}
