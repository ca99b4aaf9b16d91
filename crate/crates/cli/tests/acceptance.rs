//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows without `--nocapture`.
//!
//! Oracles are independent of the code under test: the Borel pmf, binomial
//! and enumerated laws, alternate samplers, closed forms and printed values.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cohawkes::cluster::{
    exp_marked_rates, exp_marked_rates_alternate, simulate_cluster_parking, simulate_cluster_thinning,
    simulate_exp_marked_conditional, simulate_marked_thinning, DurationSampler, MarkLaw, MarkedParams,
};
use cohawkes::combinatorics::{enumerate_dyck_paths, BorelLaw};
use cohawkes::performance::{
    check_duration_bounds, classify_shape, poly_kstar, solve_kstar, sweep_concurrency, sweep_interdependence,
    symmetric_rate, AsyncMeans, CurveKind, CurvePoint, Shape, ThroughputCurve,
};
use cohawkes::queue::{check_stability_quad, expected_size_quad, sweep_kappa, Preset, QueueConfig};
use cohawkes::rng::replicate;
use cohawkes::stats::{chi_square_gof, chi_square_homogeneity, ks_two_sample, mean_ci, RunningStats, DEFAULT_LEVEL};
use cohawkes::{ClusterRecord, InteractionParams, ResponseKernel, RngStream, SlowdownSpec};

const LEVEL: f64 = DEFAULT_LEVEL;
const SE_MULTIPLE: f64 = 3.0;
const SEED: u64 = 20_240_601;

type Check = Result<String, String>;
type Sampler = fn(&InteractionParams, &mut cohawkes::SimRng) -> cohawkes::Result<ClusterRecord>;

fn report(id: usize, title: &str, budget: Option<Duration>, run: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = run();
    let took = start.elapsed();
    let over = budget.is_some_and(|b| took > b);
    let (ok, detail) = match outcome {
        Ok(d) if !over => (true, d),
        Ok(d) => (false, format!("{d}; over the {:?} budget", budget.unwrap())),
        Err(d) => (false, d),
    };
    let line = format!(
        "criterion {id:>2} {}: {title} [{:.1}s] {detail}\n",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    ok
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn mins(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

fn borel_cells(rho: f64, cells: usize) -> Vec<f64> {
    let law = BorelLaw::new(rho).unwrap();
    let mut p: Vec<f64> = (1..cells as u64).map(|n| law.pmf(n).unwrap()).collect();
    p.push((1.0 - p.iter().sum::<f64>()).max(0.0));
    p
}

fn size_hist(sizes: impl Iterator<Item = usize>, cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells];
    for n in sizes {
        h[(n - 1).min(cells - 1)] += 1;
    }
    h
}

fn sample_clusters(
    reps: usize,
    stream: RngStream,
    f: Sampler,
    p: &InteractionParams,
) -> Result<Vec<ClusterRecord>, String> {
    replicate(reps, stream, |r| f(p, r)).map_err(err)
}

fn criterion_1() -> Check {
    let p = InteractionParams::exponential(0.2, 0.3, 1.0, 2.0, 1.0).map_err(err)?;
    let base = RngStream::new(SEED).derive(1);
    let mut notes = Vec::new();
    let samplers: [(&str, Sampler); 2] = [("thinning", simulate_cluster_thinning), ("parking", simulate_cluster_parking)];
    for (i, (name, f)) in samplers.into_iter().enumerate() {
        let sizes: Vec<usize> = replicate(1_000_000, base.derive(i as u64), |r| f(&p, r).map(|c| c.size())).map_err(err)?;
        let mut acc = RunningStats::default();
        sizes.iter().for_each(|&n| acc.push(n as f64));
        let z = (acc.mean - 2.0) / acc.std_error();
        require(z.abs() <= SE_MULTIPLE, format!("{name}: mean size {} is {z:.2} s.e. from 2", acc.mean))?;
        let chi = chi_square_gof(&size_hist(sizes.into_iter(), 30), &borel_cells(0.5, 30), LEVEL).map_err(err)?;
        require(chi.passed, format!("{name}: size law rejected, p = {:.4}", chi.p_value))?;
        notes.push(format!("{name} mean {:.4} ({z:+.2} s.e.), chi-square p {:.3}", acc.mean, chi.p_value));
    }
    Ok(notes.join("; "))
}

fn criterion_2() -> Check {
    let settings = [
        InteractionParams::exponential(0.1, 0.2, 1.0, 3.0, 0.2).map_err(err)?,
        InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).map_err(err)?,
        InteractionParams::exponential(0.5, 0.3, 2.0, 0.5, 5.0).map_err(err)?,
    ];
    let base = RngStream::new(SEED).derive(2);
    let mut notes = Vec::new();
    for (i, p) in settings.iter().enumerate() {
        let a = sample_clusters(100_000, base.derive(2 * i as u64), simulate_cluster_thinning, p)?;
        let b = sample_clusters(100_000, base.derive(2 * i as u64 + 1), simulate_cluster_parking, p)?;
        let da: Vec<f64> = a.iter().map(|c| c.duration()).collect();
        let db: Vec<f64> = b.iter().map(|c| c.duration()).collect();
        let ks = ks_two_sample(&da, &db, LEVEL).map_err(err)?;
        let table = [
            size_hist(a.iter().map(|c| c.size()), 60),
            size_hist(b.iter().map(|c| c.size()), 60),
        ];
        let chi = chi_square_homogeneity(&table, LEVEL).map_err(err)?;
        let label = format!("rho {:.1} eta {}", p.rho(), p.eta);
        require(ks.passed && chi.passed, format!("{label}: KS p {:.4}, size p {:.4}", ks.p_value, chi.p_value))?;
        notes.push(format!("{label}: KS p {:.3}, size p {:.3}", ks.p_value, chi.p_value));
    }
    Ok(notes.join("; "))
}

fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    let mut c = 1.0;
    (0..=n)
        .map(|k| {
            if k > 0 {
                c *= (n + 1 - k) as f64 / k as f64;
            }
            c * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)
        })
        .collect()
}

fn criterion_3() -> Check {
    let base = RngStream::new(SEED).derive(3);
    let p = InteractionParams::exponential(0.2, 0.3, 1.0, 3.0, 1.0).map_err(err)?;
    let q = p.rho1() / p.rho();
    let recs = sample_clusters(1_000_000, base.derive(0), simulate_cluster_thinning, &p)?;
    let mut notes = Vec::new();
    for n in [3usize, 5, 8] {
        let mut counts = vec![0u64; n + 1];
        for c in recs.iter().filter(|c| c.size() == n + 1) {
            counts[c.side_counts().0] += 1;
        }
        let chi = chi_square_gof(&counts, &binomial_pmf(n, q), LEVEL).map_err(err)?;
        require(chi.passed, format!("n = {n}: split rejected, p = {:.4}", chi.p_value))?;
        notes.push(format!("Bin({n}) p {:.3} ({} clusters)", chi.p_value, counts.iter().sum::<u64>()));
    }
    // joint (N, N¹) with N capped at 12
    let cell = |c: &ClusterRecord| {
        let n = c.size().min(12);
        let n1 = if c.size() > 12 { 0 } else { c.side_counts().0 };
        (n - 1) * 12 + n1
    };
    let mut table = Vec::new();
    for (i, eta) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let recs = sample_clusters(100_000, base.derive(1 + i as u64), simulate_cluster_thinning, &p.with_eta(eta).map_err(err)?)?;
        let mut row = vec![0u64; 12 * 12];
        recs.iter().for_each(|c| row[cell(c)] += 1);
        table.push(row);
    }
    let chi = chi_square_homogeneity(&table, LEVEL).map_err(err)?;
    require(chi.passed, format!("(N, N1) law depends on eta, p = {:.4}", chi.p_value))?;
    notes.push(format!("eta homogeneity p {:.3}", chi.p_value));
    Ok(notes.join("; "))
}

fn criterion_4() -> Check {
    let base = RngStream::new(SEED).derive(4);
    let reps = 100_000;
    let p = InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).map_err(err)?;
    let means = AsyncMeans::estimate(&p, reps, base.derive(0)).map_err(err)?;
    let mut notes = vec![format!("E[tau1] {:.4}, E[tau2] {:.4}", means.mean_tau1, means.mean_tau2)];
    let mut estimates = Vec::new();
    for (i, eta) in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0].into_iter().enumerate() {
        let d = DurationSampler::Parking { params: p.with_eta(eta).map_err(err)? }
            .durations(reps, base.derive(1 + i as u64))
            .map_err(err)?;
        let ci = mean_ci(&d, 0.99).map_err(err)?;
        let b = check_duration_bounds(&means, eta, &ci).map_err(err)?;
        require(b.passed, format!("eta {eta}: {:.4} outside [{:.4}, {:.4}] +- {:.4}", b.estimate, b.lower, b.upper, b.slack))?;
        if eta == 0.01 || eta == 100.0 {
            require(b.relative_gap < 0.05, format!("eta {eta}: relative gap {:.4}", b.relative_gap))?;
        }
        estimates.push((eta, ci));
    }
    let find = |eta: f64| estimates.iter().find(|(e, _)| *e == eta).unwrap().1;
    let fast = find(100.0);
    let se = (fast.std_error.powi(2) + means.std_errors.0.powi(2)).sqrt();
    let z1 = (fast.mean - means.mean_tau1) / se;
    require(z1.abs() <= SE_MULTIPLE, format!("E[tau(100)] is {z1:.2} s.e. from E[tau1]"))?;
    let slow = find(0.01);
    let se = ((0.01 * slow.std_error).powi(2) + means.std_errors.1.powi(2)).sqrt();
    let z2 = (0.01 * slow.mean - means.mean_tau2) / se;
    require(z2.abs() <= SE_MULTIPLE, format!("0.01 E[tau(0.01)] is {z2:.2} s.e. from E[tau2]"))?;
    notes.push(format!("all etas inside bounds; limits at {z1:+.2} and {z2:+.2} s.e."));
    Ok(notes.join("; "))
}

fn criterion_5() -> Check {
    let base = RngStream::new(SEED).derive(5);
    let mut notes = Vec::new();
    let mut checked = 0usize;
    for n in 1..=10 {
        for path in enumerate_dyck_paths(n).map_err(err)? {
            let (a, b) = (exp_marked_rates(&path), exp_marked_rates_alternate(&path));
            let matches = (0..n - 1).all(|k| b[k] == a[n - 2 - k]) && a[n - 1] == b[n - 1];
            require(matches, format!("rate forms differ on {:?}", path.steps()))?;
            checked += 1;
        }
    }
    notes.push(format!("rate forms agree on {checked} paths"));
    let beta = 1.3;
    let mark = 1.5;
    let params = MarkedParams::new(ResponseKernel::exponential_with_mass(0.4, beta).map_err(err)?, MarkLaw::Constant { value: mark })
        .map_err(err)?;
    let mut ps = Vec::new();
    for n in 1..=6usize {
        let mut rng = base.derive(2 * n as u64).rng();
        let mut conditioned = Vec::new();
        while conditioned.len() < 5_000 {
            let c = simulate_marked_thinning(&params, &mut rng).map_err(err)?;
            if c.size() == n + 1 {
                conditioned.push(c.duration());
            }
        }
        let marks = vec![mark; n + 1];
        let mut rng = base.derive(2 * n as u64 + 1).rng();
        let direct: Vec<f64> = (0..5_000)
            .map(|_| simulate_exp_marked_conditional(beta, &marks, &mut rng).map(|c| c.duration()))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let ks = ks_two_sample(&conditioned, &direct, LEVEL).map_err(err)?;
        require(ks.passed, format!("n = {n}: KS p = {:.4}", ks.p_value))?;
        ps.push(format!("{:.2}", ks.p_value));
    }
    notes.push(format!("KS p for n = 1..6: {}", ps.join(", ")));
    Ok(notes.join("; "))
}

fn criterion_6() -> Check {
    let base = RngStream::new(SEED).derive(6);
    let reps = 100_000;
    let p = InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).map_err(err)?;
    let means = AsyncMeans::estimate(&p, reps, base.derive(0)).map_err(err)?;
    let h2 = SlowdownSpec::polynomial(2.0).map_err(err)?;
    let (solved, closed) = (solve_kstar(&means, &h2).map_err(err)?, poly_kstar(&means, 2.0).map_err(err)?);
    let diff = (solved.k_star - closed.k_star).abs();
    require(diff < 1e-8, format!("bisection vs closed form differ by {diff:e}"))?;
    let k_star = closed.k_star;
    let grid: Vec<f64> = (0..12).map(|i| 0.2 * (25.0f64).powf(i as f64 / 11.0)).collect();
    let mut notes = vec![format!("kStar {k_star:.4} (|diff| {diff:.1e})")];
    for (i, sigma) in [2.0, 1.0, 1.0 / 1.3].into_iter().enumerate() {
        let h = SlowdownSpec::polynomial(sigma).map_err(err)?;
        let sweep = sweep_concurrency(&p, &h, &grid, reps, &means, base.derive(1 + i as u64)).map_err(err)?;
        let curve = sweep.monte_carlo_curve().map_err(err)?;
        require(curve.points.len() == grid.len(), "a grid point failed")?;
        let shape = classify_shape(&curve);
        if sigma == 2.0 {
            let arg = curve.points[curve.argmax().unwrap()].x;
            require(
                (0.5 * k_star..=2.0 * k_star).contains(&arg),
                format!("argmax {arg:.3} outside [{:.3}, {:.3}]", 0.5 * k_star, 2.0 * k_star),
            )?;
            notes.push(format!("sigma 2 argmax {arg:.3}"));
        } else {
            require(shape == Shape::MonotoneLike, format!("sigma {sigma:.3} classified {}", shape.label()))?;
            notes.push(format!("sigma {sigma:.3} {}", shape.label()));
        }
    }
    Ok(notes.join("; "))
}

fn criterion_7() -> Check {
    let grid: Vec<f64> = (0..13).map(|i| 2f64.powi(i - 6)).collect();
    let rates = |sigma: f64| -> Result<Vec<f64>, String> {
        let h = SlowdownSpec::polynomial(sigma).map_err(err)?;
        grid.iter().map(|&k| symmetric_rate(0.7, &h, k).map_err(err)).collect()
    };
    let up = rates(0.5)?;
    require(up.windows(2).all(|w| w[1] > w[0]), "sigma 0.5 not increasing")?;
    let flat = rates(1.0)?;
    let worst = flat.iter().map(|r| (r / flat[0] - 1.0).abs()).fold(0.0, f64::max);
    require(worst <= 1e-12, format!("sigma 1 ratio off by {worst:e}"))?;
    let down = rates(2.0)?;
    require(down.windows(2).all(|w| w[1] < w[0]), "sigma 2 not decreasing")?;
    Ok(format!("increasing / constant (max deviation {worst:.1e}) / decreasing on {} points", grid.len()))
}

fn criterion_8() -> Check {
    let rho = 0.5;
    let grid: Vec<f64> = [0.05, 0.125, 0.25, 0.375, 0.45].iter().map(|x| x * rho / 0.5).collect();
    let template = InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).map_err(err)?;
    let h = SlowdownSpec::polynomial(2.0).map_err(err)?;
    let sweep = sweep_interdependence(&template, rho, &grid, &h, 100_000, RngStream::new(SEED).derive(8)).map_err(err)?;
    let pts: Vec<CurvePoint> = sweep
        .rows
        .iter()
        .map(|r| r.throughput.ok_or_else(|| r.error.clone().unwrap_or_default()))
        .collect::<Result<_, _>>()?;
    let mid = pts[2];
    for end in [pts[0], pts[4]] {
        require(
            end.estimate - mid.estimate > end.ci_half_width + mid.ci_half_width,
            format!("rho1 {}: {:.4} vs midpoint {:.4}", end.x, end.estimate, mid.estimate),
        )?;
    }
    let vals: Vec<String> = pts.iter().map(|p| format!("{:.3}", p.estimate)).collect();
    Ok(format!("optimized throughput over rho1: {}", vals.join(", ")))
}

fn criterion_9() -> Check {
    for p in Preset::ALL {
        let got = p.params().ratios().map(|r| (r * 1000.0).round() / 1000.0);
        require(got == p.printed_ratios(), format!("{}: {got:?}", p.name()))?;
    }
    let base = expected_size_quad(&Preset::ModerateCo.params()).map_err(err)?;
    require((base - 11.3).abs() < 0.05, format!("E[N] = {base}"))?;
    let mut worst: f64 = 0.0;
    for p in Preset::ALL {
        worst = worst.max((expected_size_quad(&p.params()).map_err(err)? / base - 1.0).abs());
    }
    require(worst < 0.02, format!("preset E[N] spread {worst:.4}"))?;
    let radius = check_stability_quad(&Preset::ModerateCo.params());
    require((radius - 0.899).abs() < 5e-4 && radius < 1.0, format!("spectral radius {radius}"))?;
    Ok(format!("12 ratios exact; E[N] {base:.3}, spread {:.2}%; radius {radius:.4}", 100.0 * worst))
}

fn criterion_10() -> Check {
    let template = QueueConfig {
        arrival_rate: 16.0,
        patience_rate: 0.5,
        max_concurrency: 1,
        closure_target: 0.9,
        slowdown: SlowdownSpec::polynomial(1.3).map_err(err)?,
        quad: Preset::ModerateCo.params(),
        horizon: 200.0,
        replications: 1 << 10,
        seed: SEED,
    };
    let kappas: Vec<usize> = (1..=12).collect();
    let (strong, weak) = (1.3, 1.0 / 1.3);
    let sweep = sweep_kappa(&template, &kappas, &[strong, weak]).map_err(err)?;
    let curve = |sigma: f64| {
        let pts = sweep
            .for_sigma(sigma)
            .iter()
            .filter_map(|c| c.metrics.map(|m| CurvePoint { x: c.kappa as f64, estimate: m.throughput, ci_half_width: m.throughput_ci }))
            .collect();
        ThroughputCurve::new(CurveKind::MonteCarlo, pts).map_err(err)
    };
    let (cs, cw) = (curve(strong)?, curve(weak)?);
    require(cs.points.len() == 12 && cw.points.len() == 12, "a queue cell failed")?;
    let interior = |k: Option<usize>| k.is_some_and(|k| k > 1 && k < 12);
    let (arg_tp, arg_ab) = (sweep.argmax_throughput(strong), sweep.argmin_abandonment(strong));
    require(classify_shape(&cs) == Shape::CapShaped, format!("sigma 1.3 classified {}", classify_shape(&cs).label()))?;
    require(interior(arg_tp), format!("sigma 1.3 throughput argmax {arg_tp:?}"))?;
    require(interior(arg_ab), format!("sigma 1.3 abandonment argmin {arg_ab:?}"))?;
    require(classify_shape(&cw) == Shape::MonotoneLike, format!("sigma 1/1.3 classified {}", classify_shape(&cw).label()))?;
    Ok(format!(
        "sigma 1.3 capShaped, argmax kappa {}, argmin abandonment kappa {}; sigma 1/1.3 monotoneLike",
        arg_tp.unwrap(),
        arg_ab.unwrap()
    ))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_cohawkes"))
        .args(args)
        .args(["--seed", "17", "--workers", "1", "--out"])
        .arg(out)
        .output()
        .map_err(err)?;
    require(o.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn criterion_11() -> Check {
    let runs = (0..2)
        .map(|_| -> Result<Vec<(String, Vec<u8>)>, String> {
            let dir = tempfile::tempdir().map_err(err)?;
            run_cli(&["cluster", "--method", "thinning", "--count", "200"], dir.path())?;
            run_cli(&["sweep-k", "--sigma", "2", "--set", "sweepK.reps=20000", "--set", "sweepK.meansReps=20000"], dir.path())?;
            run_cli(&["sweep-rho", "--set", "sweepRho.reps=5000", "--set", "sweepRho.rho1Grid=[0.05,0.25,0.45]"], dir.path())?;
            run_cli(&["queue", "--events", "--set", "queue.replications=8", "--set", "queue.horizon=50"], dir.path())?;
            run_cli(&["verify", "--suite", "combinatorics"], dir.path())?;
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .map_err(err)?
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            Ok(files)
        })
        .collect::<Result<Vec<_>, _>>()?;
    require(runs[0].len() == 6, format!("expected 6 output files, got {}", runs[0].len()))?;
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        require(a == b, format!("{} differs between runs", a.0))?;
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("byte-identical: {}", names.join(", ")))
}

#[test]
fn acceptance() {
    let results = [
        report(1, "Borel size law from both samplers", mins(2), criterion_1),
        report(2, "thinning and parking samplers agree", mins(5), criterion_2),
        report(3, "binomial side split and eta-free (N, N1) law", None, criterion_3),
        report(4, "duration bounds and asynchrony limits", mins(10), criterion_4),
        report(5, "closed-form marked chronology", None, criterion_5),
        report(6, "optimal concurrency under convex slowdown", mins(15), criterion_6),
        report(7, "symmetric slowdown has no interior optimum", Some(Duration::from_secs(1)), criterion_7),
        report(8, "optimized throughput is cup-shaped in rho1", mins(20), criterion_8),
        report(9, "interdependence presets", None, criterion_9),
        report(10, "queue throughput versus kappa", mins(30), criterion_10),
        report(11, "same seed, one worker, identical files", None, criterion_11),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
