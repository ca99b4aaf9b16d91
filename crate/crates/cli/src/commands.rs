use std::path::{Path, PathBuf};

use cohawkes::cluster::DurationSampler;
use cohawkes::performance::{
    classify_shape, solve_kstar, sweep_concurrency, sweep_interdependence, AsyncMeans, CurveKind, CurvePoint,
    ThroughputCurve,
};
use cohawkes::queue::{
    check_stability_quad, expected_size_quad, simulate_queue_logged, sweep_kappa, KappaCell, KappaSweep, Preset,
    QueueConfig, MODERATE_CO_ALPHAS,
};
use cohawkes::stats::TestReport;
use cohawkes::verify::Suite;
use cohawkes::{RngStream, SlowdownSpec};
use serde::Serialize;

use crate::config::{ClusterMethod, RunConfig};
use crate::error::CliError;
use crate::export::{emit_csv, num, opt_num, Table};

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn csv(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        emit_csv(table, &path)?;
        Ok(path)
    }
}

pub fn cluster(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let c = &cfg.cluster;
    let sampler = match c.method {
        ClusterMethod::Thinning => DurationSampler::Thinning { params: cfg.interaction },
        ClusterMethod::Parking => DurationSampler::Parking { params: cfg.interaction },
        ClusterMethod::MarkedThinning => DurationSampler::MarkedThinning { params: cfg.marked },
        ClusterMethod::DyckCluster => DurationSampler::DyckCluster {
            params: cfg.marked,
            overflow: c.overflow,
        },
    };
    let base = RngStream::new(cfg.seed);
    let mut table = Table::new(&["cluster", "epoch", "side", "parent", "mark"]);
    for i in 0..c.count {
        let rec = sampler.record(&mut base.at(i as u64).rng())?.expect("record-producing sampler");
        for j in 0..rec.size() {
            table.push(vec![
                i.to_string(),
                num(rec.epochs[j]),
                rec.sides[j].label().to_string(),
                rec.parents[j].map(|p| p.to_string()).unwrap_or_default(),
                num(rec.marks[j]),
            ]);
        }
    }
    let path = out.csv("cluster.csv", &table)?;
    println!("wrote {} points from {} clusters to {}", table.rows.len(), c.count, path.display());
    Ok(())
}

fn shape_note(curve: &ThroughputCurve) -> String {
    format!("shape={}", classify_shape(curve).label())
}

pub fn sweep_k(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let s = &cfg.sweep_k;
    let h = cfg.slowdown;
    let base = RngStream::new(cfg.seed);
    let means = AsyncMeans::estimate(&cfg.interaction, s.means_reps, base.derive(0))?;
    let sweep = sweep_concurrency(&cfg.interaction, &h, &s.grid, s.reps, &means, base.derive(1))?;
    let mut table = Table::new(&["K", "estimate", "ciLow", "ciHigh", "guaranteed", "idealized", "error"]);
    for r in &sweep.rows {
        let mc = r.monte_carlo;
        table.push(vec![
            num(r.k),
            opt_num(mc.map(|p| p.estimate)),
            opt_num(mc.map(|p| p.ci_low())),
            opt_num(mc.map(|p| p.ci_high())),
            num(r.guaranteed),
            num(r.idealized),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let curve = sweep.monte_carlo_curve()?;
    table.note(shape_note(&curve));
    if let Some(i) = curve.argmax() {
        table.note(format!("argmaxK={}", num(curve.points[i].x)));
    }
    table.note(format!("meanTau1={} meanTau2={}", num(means.mean_tau1), num(means.mean_tau2)));
    match solve_kstar(&means, &h) {
        Ok(o) => table.note(format!("kStar={} kLower={} kUpper={}", num(o.k_star), num(o.k_lower), num(o.k_upper))),
        Err(e) => table.note(format!("kStar=none ({e})")),
    }
    let path = out.csv("sweep_k.csv", &table)?;
    println!("{} over {} grid points; wrote {}", shape_note(&curve), s.grid.len(), path.display());
    Ok(())
}

pub fn sweep_rho(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let s = &cfg.sweep_rho;
    let sweep = sweep_interdependence(
        &cfg.interaction,
        s.rho_total,
        &s.rho1_grid,
        &cfg.slowdown,
        s.reps,
        RngStream::new(cfg.seed),
    )?;
    let mut table = Table::new(&[
        "rho1", "estimate", "ciLow", "ciHigh", "kStar", "kLower", "kUpper", "meanTau1", "meanTau2", "error",
    ]);
    for r in &sweep.rows {
        let (tp, opt, m) = (r.throughput, r.optimum, r.means);
        table.push(vec![
            num(r.rho1),
            opt_num(tp.map(|p| p.estimate)),
            opt_num(tp.map(|p| p.ci_low())),
            opt_num(tp.map(|p| p.ci_high())),
            opt_num(opt.map(|o| o.k_star)),
            opt_num(opt.map(|o| o.k_lower)),
            opt_num(opt.map(|o| o.k_upper)),
            opt_num(m.map(|m| m.mean_tau1)),
            opt_num(m.map(|m| m.mean_tau2)),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let curve = sweep.curve()?;
    table.note(shape_note(&curve));
    let path = out.csv("sweep_rho.csv", &table)?;
    println!("{} over {} grid points; wrote {}", shape_note(&curve), s.rho1_grid.len(), path.display());
    Ok(())
}

fn queue_curve(cells: &[&KappaCell]) -> Result<ThroughputCurve, CliError> {
    let pts = cells
        .iter()
        .filter_map(|c| {
            c.metrics.map(|m| CurvePoint {
                x: c.kappa as f64,
                estimate: m.throughput,
                ci_half_width: m.throughput_ci,
            })
        })
        .collect();
    Ok(ThroughputCurve::new(CurveKind::MonteCarlo, pts)?)
}

pub fn queue(cfg: &RunConfig, out: &Output, events: bool) -> Result<(), CliError> {
    let q = &cfg.queue;
    if q.kappas.is_empty() || q.sigmas.is_empty() {
        return Err(CliError::Config("queue.kappas and queue.sigmas must be non-empty".into()));
    }
    let template = cfg.queue_template();
    let sweep = if events {
        let mut log = Table::new(&["sigma", "kappa", "replication", "time", "event", "conversation"]);
        let mut cells = Vec::new();
        for &sigma in &q.sigmas {
            for &kappa in &q.kappas {
                let run = || -> cohawkes::Result<_> {
                    let c = QueueConfig {
                        max_concurrency: kappa,
                        slowdown: SlowdownSpec::polynomial(sigma)?,
                        ..template
                    };
                    simulate_queue_logged(&c, true)
                };
                let (metrics, error) = match run() {
                    Ok((m, evs)) => {
                        for e in evs {
                            log.push(vec![
                                num(sigma),
                                kappa.to_string(),
                                e.replication.to_string(),
                                num(e.time),
                                e.event.label().to_string(),
                                e.conversation.to_string(),
                            ]);
                        }
                        (Some(m), None)
                    }
                    Err(e) => (None, Some(e.to_string())),
                };
                cells.push(KappaCell { sigma, kappa, metrics, error });
            }
        }
        out.csv("events.csv", &log)?;
        KappaSweep { cells }
    } else {
        sweep_kappa(&template, &q.kappas, &q.sigmas)?
    };
    let mut table = Table::new(&[
        "sigma",
        "kappa",
        "throughput",
        "throughputCI",
        "abandonRate",
        "abandonCI",
        "occupancy",
        "error",
    ]);
    for c in &sweep.cells {
        let m = c.metrics;
        table.push(vec![
            num(c.sigma),
            c.kappa.to_string(),
            opt_num(m.map(|m| m.throughput)),
            opt_num(m.map(|m| m.throughput_ci)),
            opt_num(m.map(|m| m.abandon_rate)),
            opt_num(m.map(|m| m.abandon_ci)),
            opt_num(m.map(|m| m.occupancy)),
            c.error.clone().unwrap_or_default(),
        ]);
    }
    for &sigma in &q.sigmas {
        let curve = queue_curve(&sweep.for_sigma(sigma))?;
        let line = format!(
            "sigma={} argmaxThroughput={} argminAbandonment={} {}",
            num(sigma),
            sweep.argmax_throughput(sigma).map(|k| k.to_string()).unwrap_or_default(),
            sweep.argmin_abandonment(sigma).map(|k| k.to_string()).unwrap_or_default(),
            shape_note(&curve),
        );
        println!("{line}");
        table.note(line);
    }
    if q.quad.is_none() && q.preset == Preset::ModerateCo {
        table.note(format!(
            "preset=moderateCo alpha21={} (an alternative printed value is 17.012)",
            num(MODERATE_CO_ALPHAS[2])
        ));
    } else if q.quad.is_none() {
        table.note(format!("preset={}", q.preset.name()));
    }
    let path = out.csv("queue.csv", &table)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SuiteReport {
    suite: &'static str,
    reports: Vec<TestReport>,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    passed: bool,
    suites: Vec<SuiteReport>,
}

pub fn verify(seed: u64, suite: Option<&str>, out: &Output) -> Result<(), CliError> {
    let suites: Vec<Suite> = match suite {
        None | Some("all") => Suite::ALL.to_vec(),
        Some(name) => vec![Suite::from_name(name)?],
    };
    let mut report = VerifyReport {
        seed,
        passed: true,
        suites: Vec::new(),
    };
    let (mut total, mut failed) = (0, 0);
    for s in suites {
        let reports = s.run(seed)?;
        for r in &reports {
            println!(
                "{} [{}] {}: statistic {} p {}",
                if r.passed { "PASS" } else { "FAIL" },
                s.name(),
                r.name,
                num(r.statistic),
                num(r.p_value)
            );
            total += 1;
            failed += usize::from(!r.passed);
        }
        report.suites.push(SuiteReport { suite: s.name(), reports });
    }
    report.passed = failed == 0;
    let path = out.dir.join("verify_report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    println!("wrote {}", path.display());
    if failed > 0 {
        return Err(CliError::Verification { failed, total });
    }
    Ok(())
}

pub fn presets(name: Option<&str>) -> Result<(), CliError> {
    let list = match name {
        Some(n) => vec![Preset::from_name(n)?],
        None => Preset::ALL.to_vec(),
    };
    for p in list {
        let quad = p.params();
        println!("{}", p.name());
        for (dir, ((alpha, beta), ratio)) in ["11", "12", "21", "22"]
            .iter()
            .zip(quad.alpha_beta().into_iter().zip(quad.ratios()))
        {
            println!("  g{dir}: alpha = {}, beta = {}, ratio = {}", num(alpha), num(beta), num(ratio));
        }
        println!("  E[N] = {}", num(expected_size_quad(&quad)?));
        println!("  spectral radius = {}", num(check_stability_quad(&quad)));
    }
    Ok(())
}
