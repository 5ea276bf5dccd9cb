//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs sequentially on the calling thread so wall-clock budgets and the
//! complexity measurement are not disturbed by other tests.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use fracac::oracle::{dense_a, dense_expm};
use fracac::{discrete_energy, max_norm, Field, FracOrders, GridSpec, Solver, SolverConfig, SpectralCache};
use fracac_cli::drivers::{run_spatial_convergence, run_temporal_convergence};
use fracac_cli::ic::sample;
use fracac_cli::output::write_text;
use fracac_cli::selftest::{oracle_checks, weight_checks};
use fracac_cli::{Experiment, ExperimentConfig, IcSpec};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, budget: Duration, detail: String, ok: bool) -> Outcome {
    let spent = start.elapsed();
    let detail = format!("{detail}; {:.1} s of {} s budget", spent.as_secs_f64(), budget.as_secs());
    verdict(ok && spent <= budget, detail)
}

fn fail_on<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn weights() -> Outcome {
    let start = Instant::now();
    let checks = weight_checks(2048).map_err(fail_on)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = checks
        .iter()
        .filter(|c| c.name.contains("closed form"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    within_budget(
        start,
        Duration::from_secs(1),
        format!(
            "{} checks over alpha = 1.1..1.9, n = 2048, {} failed, worst closed-form gap {worst:.2e}",
            checks.len(),
            failed.len()
        ),
        failed.is_empty(),
    )
}

fn oracle() -> Outcome {
    let start = Instant::now();
    let checks = oracle_checks().map_err(fail_on)?;
    let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    within_budget(
        start,
        Duration::from_secs(10),
        format!(
            "{} comparisons on 8x8 and 7x7x7, worst {worst:.2e} (tol 1e-11), failed {failed:?}",
            checks.len()
        ),
        failed.is_empty(),
    )
}

fn consistency() -> Outcome {
    // example1 domain and eps on a 17 x 17 interior grid
    let grid = GridSpec::new(0.0, 2.0, vec![18, 18]).map_err(fail_on)?;
    let orders = FracOrders::new(vec![1.2, 1.8]).map_err(fail_on)?;
    let eps = 0.1;
    let v = Field::from_fn(&grid, |x| {
        let r = |c: f64| x.iter().map(|p| (p - c) * (p - c)).sum::<f64>();
        0.5 * (-4.0 * r(2.0 / 3.0)).exp() + 0.5 * (-4.0 * r(4.0 / 3.0)).exp()
    });
    let a = dense_a(&grid, &orders, eps).map_err(fail_on)?;
    let gap = |tau: f64| -> Result<f64, String> {
        let cache = SpectralCache::build(&grid, &orders, eps, tau).map_err(fail_on)?;
        let fast = cache.linear_step(&v).map_err(fail_on)?;
        let exact = dense_expm(&a, tau).map_err(fail_on)?.apply(v.data());
        Ok(fast.data().iter().zip(&exact).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    };
    let (g1, g2) = (gap(0.1)?, gap(0.05)?);
    let ratio = g1 / g2;
    verdict(
        (6.5..=9.5).contains(&ratio),
        format!("gap(0.1) = {g1:.3e}, gap(0.05) = {g2:.3e}, ratio {ratio:.3} (want [6.5, 9.5])"),
    )
}

fn temporal_2d() -> Result<(String, String), String> {
    let start = Instant::now();
    let cfg = ExperimentConfig::preset(Experiment::Example1, 2).map_err(fail_on)?;
    let table = run_temporal_convergence(&cfg).map_err(fail_on)?;
    let errs = table.errors();
    let orders = table.orders();
    let e0 = errs[0];
    let ok = rel(e0, 3.8688e-7) <= 0.02 && orders.len() == 4 && orders.iter().all(|o| (o - 2.0).abs() <= 0.02);
    let detail = format!(
        "E_t(1/100) = {e0:.4e} (want 3.8688e-7 +- 2%, rel {:.2e}), orders [{}]",
        rel(e0, 3.8688e-7),
        fmt_list(&orders)
    );
    let csv = table.to_csv();
    within_budget(start, Duration::from_secs(60), detail, ok).map(|d| (d, csv))
}

fn temporal_3d() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::preset(Experiment::Example2, 3).map_err(fail_on)?;
    cfg.tau_list = vec![1.0 / 20.0, 1.0 / 40.0];
    let table = run_temporal_convergence(&cfg).map_err(fail_on)?;
    let errs = table.errors();
    let order = table.orders()[0];
    let ok = rel(errs[0], 1.2394e-6) <= 0.02 && (order - 2.0).abs() <= 0.02;
    within_budget(
        start,
        Duration::from_secs(120),
        format!(
            "E_t(1/20) = {:.4e} (want 1.2394e-6 +- 2%, rel {:.2e}), E_t(1/40) = {:.4e}, order {order:.4}",
            errs[0],
            rel(errs[0], 1.2394e-6),
            errs[1]
        ),
        ok,
    )
}

fn spatial() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in [[1.1, 1.2], [1.5, 1.5], [1.2, 1.8], [1.6, 1.9]] {
        let mut cfg = ExperimentConfig::preset(Experiment::Example1, 2).map_err(fail_on)?;
        cfg.orders = pair.to_vec();
        cfg.h_list = (4..=7).map(|k| 1.0 / f64::from(1u32 << k)).collect();
        cfg.h_ref = Some(1.0 / 512.0);
        let table = run_spatial_convergence(&cfg).map_err(fail_on)?;
        let orders = table.orders();
        ok &= orders.len() == 3 && orders.iter().all(|o| (o - 2.0).abs() <= 0.15);
        parts.push(format!("{pair:?}: [{}]", fmt_list(&orders)));
    }
    within_budget(
        start,
        Duration::from_secs(300),
        format!("orders at h = 2^-5..2^-7 (want 2 +- 0.15) {}", parts.join("; ")),
        ok,
    )
}

fn example_pairs(dim: usize) -> Vec<Vec<f64>> {
    if dim == 2 {
        vec![vec![1.1, 1.3], vec![1.5, 1.5], vec![1.6, 1.9]]
    } else {
        vec![vec![1.1, 1.2, 1.3], vec![1.5, 1.5, 1.5], vec![1.7, 1.8, 1.9]]
    }
}

fn max_principle() -> Outcome {
    let start = Instant::now();
    let steps = 50;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for dim in [2, 3] {
        for pair in example_pairs(dim) {
            for tau in [0.01, 0.1, 1.0, 10.0] {
                let mut cfg = ExperimentConfig::preset(Experiment::Example4, dim).map_err(fail_on)?;
                cfg.orders = pair.clone();
                cfg.seed = 4;
                let grid = cfg.grid().map_err(fail_on)?;
                let config = cfg.solver_config(grid.clone(), tau, steps as f64 * tau).map_err(fail_on)?;
                let solver = Solver::new(config).map_err(fail_on)?;
                let u0 = sample(&cfg.ic, cfg.seed, &grid);
                let mut seen = 0;
                let mut obs = |_: usize, _: f64, f: &Field| {
                    worst = worst.max(max_norm(f));
                    seen += 1;
                };
                solver.integrate(&u0, &mut [&mut obs]).map_err(fail_on)?;
                if seen != steps {
                    return Err(format!("expected {steps} steps, observed {seen}"));
                }
                runs += 1;
            }
        }
    }
    within_budget(
        start,
        Duration::from_secs(300),
        format!("{runs} runs of {steps} steps on 255^2 and 127^3, largest ||u^n|| = {worst:.17} (limit 1 + 1e-13)"),
        worst <= 1.0 + 1e-13,
    )
}

fn energy() -> Outcome {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut runs = Vec::new();
    for dim in [2, 3] {
        for pair in example_pairs(dim) {
            let mut cfg = ExperimentConfig::preset(Experiment::Example5, dim).map_err(fail_on)?;
            cfg.orders = pair.clone();
            cfg.seed = 5;
            let grid = cfg.grid().map_err(fail_on)?;
            let solver = Solver::new(cfg.solver_config(grid.clone(), cfg.tau, 200.0 * cfg.tau).map_err(fail_on)?)
                .map_err(fail_on)?;
            let u0 = sample(&cfg.ic, cfg.seed, &grid);
            let mut energies = vec![discrete_energy(&u0, solver.cache(), &grid).map_err(fail_on)?];
            let mut failure = None;
            let mut obs = |_: usize, _: f64, f: &Field| match discrete_energy(f, solver.cache(), &grid) {
                Ok(e) => energies.push(e),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            };
            solver.integrate(&u0, &mut [&mut obs]).map_err(fail_on)?;
            if let Some(e) = failure {
                return Err(fail_on(e));
            }
            let rise = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            worst_rise = worst_rise.max(rise);
            runs.push(format!(
                "{dim}D {pair:?}: {:.5e} -> {:.5e}",
                energies[0],
                energies[energies.len() - 1]
            ));
        }
    }
    verdict(
        worst_rise <= 1e-10,
        format!(
            "200 steps each, largest step-to-step change {worst_rise:.3e} (limit 1e-10); {}",
            runs.join("; ")
        ),
    )
}

fn median_step_time(dim: usize, n: usize, steps: usize) -> Result<f64, String> {
    let grid = GridSpec::new(0.0, 1.0, vec![n + 1; dim]).map_err(fail_on)?;
    let orders = FracOrders::new(vec![1.5; dim]).map_err(fail_on)?;
    let config = SolverConfig::new(grid.clone(), orders, 0.1, 0.01, 1.0).map_err(fail_on)?;
    let solver = Solver::new(config).map_err(fail_on)?;
    let mut u = sample(&IcSpec::UniformRandom { lo: -0.9, hi: 0.9 }, 9, &grid);
    let mut spare = Vec::new();
    for _ in 0..2 {
        solver.step_in_place(&mut u, &mut spare).map_err(fail_on)?;
    }
    let mut times = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t = Instant::now();
        solver.step_in_place(&mut u, &mut spare).map_err(fail_on)?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.total_cmp(b));
    Ok(times[steps / 2])
}

fn complexity() -> Outcome {
    let t256 = median_step_time(2, 256, 41)?;
    let t512 = median_step_time(2, 512, 21)?;
    let t64 = median_step_time(3, 64, 21)?;
    let t128 = median_step_time(3, 128, 9)?;
    let (r2, r3) = (t512 / t256, t128 / t64);
    verdict(
        r2 <= 4.6 && r3 <= 9.2,
        format!(
            "2D 256^2 {:.2} ms -> 512^2 {:.2} ms: x{r2:.2} (limit 4.6); 3D 64^3 {:.1} ms -> 128^3 {:.1} ms: x{r3:.2} (limit 9.2)",
            t256 * 1e3,
            t512 * 1e3,
            t64 * 1e3,
            t128 * 1e3
        ),
    )
}

fn determinism(reference: Option<&str>) -> Outcome {
    let cfg = ExperimentConfig::preset(Experiment::Example1, 2).map_err(fail_on)?;
    let dir = std::env::temp_dir().join(format!("fracac-acceptance-{}", std::process::id()));
    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for threads in [1, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(fail_on)?;
        let table = pool.install(|| run_temporal_convergence(&cfg)).map_err(fail_on)?;
        let path = dir.join(format!("conv_time_{threads}.csv"));
        write_text(&path, &table.to_csv()).map_err(fail_on)?;
        files.push((threads, path));
    }
    let bytes: Vec<Vec<u8>> = files
        .iter()
        .map(|(_, p)| std::fs::read(p))
        .collect::<Result<_, _>>()
        .map_err(fail_on)?;
    let _ = std::fs::remove_dir_all(&dir);
    let same = bytes.windows(2).all(|w| w[0] == w[1]);
    let matches_first = reference.is_none_or(|r| r.as_bytes() == bytes[0].as_slice());
    verdict(
        same && matches_first,
        format!(
            "conv-time CSV ({} bytes) at 1, 2, 8 workers: identical = {same}, equal to the earlier run = {matches_first}",
            bytes[0].len()
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {id} ({name}): {d} [{secs:.1} s]"),
            Err(d) => {
                failures += 1;
                println!("FAIL criterion {id} ({name}): {d} [{secs:.1} s]");
            }
        }
    };
    let t = Instant::now();
    report(1, "weight properties", t, weights());
    let t = Instant::now();
    report(2, "oracle equivalence", t, oracle());
    let t = Instant::now();
    report(3, "two-level consistency", t, consistency());
    let t = Instant::now();
    let c4 = temporal_2d();
    let csv = c4.as_ref().ok().map(|(_, csv)| csv.clone());
    report(4, "temporal convergence 2D", t, c4.map(|(d, _)| d));
    let t = Instant::now();
    report(5, "temporal convergence 3D", t, temporal_3d());
    let t = Instant::now();
    report(6, "spatial order", t, spatial());
    let t = Instant::now();
    report(7, "maximum principle", t, max_principle());
    let t = Instant::now();
    report(8, "energy decay", t, energy());
    let t = Instant::now();
    report(9, "per-step complexity", t, complexity());
    let t = Instant::now();
    report(10, "determinism", t, determinism(csv.as_deref()));
    if failures == 0 {
        println!("all 10 criteria passed");
        return;
    }
    println!("{failures} of 10 criteria failed");
    // the verdicts above are the result; a failing exit status is opt-in
    if std::env::var_os("FRACAC_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
