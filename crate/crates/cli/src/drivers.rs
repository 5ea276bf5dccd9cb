//! Experiment drivers: plain runs, convergence studies, traces and snapshots.

use std::path::{Path, PathBuf};

use fracac::diagnostics::{discrete_energy, error_inf, max_norm, restrict_to_coarse, OrderTable};
use fracac::{Field, GridSpec, Solver};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::ic::{build_initial_condition, sample};
use crate::output::{write_snapshot, SnapshotHeader, TimeSeries};

const CHAIN_TOL: f64 = 1e-12;

/// Final state of a plain run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub max_norm: f64,
    pub energy: f64,
    pub field: Field,
}

fn solver_on(cfg: &ExperimentConfig, grid: GridSpec, tau: f64, t_end: f64) -> CliResult<Solver> {
    Ok(Solver::new(cfg.solver_config(grid, tau, t_end)?)?)
}

fn evolve(solver: &Solver, u0: &Field) -> CliResult<Field> {
    let u0 = solver.clamp_initial(u0)?;
    Ok(solver.integrate(&u0, &mut [])?)
}

fn check_halving(values: &[f64], name: &str) -> CliResult<()> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    for w in values.windows(2) {
        if (w[1] - 0.5 * w[0]).abs() > CHAIN_TOL * w[0] {
            return Err(CliError::Config(format!(
                "{name} must halve at every entry, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let grid = cfg.grid()?;
    let solver = solver_on(cfg, grid.clone(), cfg.tau, cfg.t_end)?;
    let field = evolve(&solver, &build_initial_condition(cfg)?)?;
    let steps = solver.config().steps()?;
    Ok(RunSummary {
        steps,
        time: steps as f64 * cfg.tau,
        max_norm: max_norm(&field),
        energy: discrete_energy(&field, solver.cache(), &grid)?,
        field,
    })
}

/// Temporal self-convergence: the row for `tau` holds `||u(tau) - u(tau / 2)||_inf`
/// at `t_end`, so a list of `k` steps needs `k + 1` runs.
pub fn run_temporal_convergence(cfg: &ExperimentConfig) -> CliResult<OrderTable> {
    check_halving(&cfg.tau_list, "tau_list")?;
    let grid = cfg.grid()?;
    let u0 = build_initial_condition(cfg)?;
    let mut taus = cfg.tau_list.clone();
    taus.push(0.5 * taus[taus.len() - 1]);
    let mut solutions = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let solver = solver_on(cfg, grid.clone(), tau, cfg.t_end)?;
        solutions.push(evolve(&solver, &u0)?);
    }
    let errors = solutions
        .windows(2)
        .map(|w| error_inf(&w[0], &w[1]))
        .collect::<fracac::Result<Vec<f64>>>()?;
    Ok(OrderTable::new("tau", &cfg.tau_list, &errors)?)
}

fn initial_on(cfg: &ExperimentConfig, grid: &GridSpec, reference: (&GridSpec, &Field)) -> CliResult<Field> {
    // random data only nests when taken from the reference grid
    if cfg.ic.is_random() {
        Ok(restrict_to_coarse(reference.1, reference.0, grid)?)
    } else {
        Ok(sample(&cfg.ic, cfg.seed, grid))
    }
}

/// Spatial convergence against a reference run with mesh width `h_ref`;
/// errors are taken at the coarse nodes.
pub fn run_spatial_convergence(cfg: &ExperimentConfig) -> CliResult<OrderTable> {
    check_halving(&cfg.h_list, "h_list")?;
    let h_ref = cfg
        .h_ref
        .ok_or_else(|| CliError::Config("spatial study needs h_ref".into()))?;
    let m_ref = cfg.cells_for(h_ref)?;
    let mut cells = Vec::with_capacity(cfg.h_list.len());
    for &h in &cfg.h_list {
        let m = cfg.cells_for(h)?;
        if m >= m_ref || m_ref % m != 0 {
            return Err(CliError::Config(format!(
                "mesh width {h} is not a strict coarsening of h_ref = {h_ref}"
            )));
        }
        cells.push(m);
    }
    let tau = cfg.space_tau.unwrap_or(cfg.t_end);
    let ref_grid = GridSpec::new(cfg.a, cfg.b, vec![m_ref; cfg.dim])?;
    let ref_u0 = sample(&cfg.ic, cfg.seed, &ref_grid);
    let reference = evolve(&solver_on(cfg, ref_grid.clone(), tau, cfg.t_end)?, &ref_u0)?;
    let mut errors = Vec::with_capacity(cells.len());
    for m in cells {
        let grid = GridSpec::new(cfg.a, cfg.b, vec![m; cfg.dim])?;
        let u0 = initial_on(cfg, &grid, (&ref_grid, &ref_u0))?;
        let u = evolve(&solver_on(cfg, grid.clone(), tau, cfg.t_end)?, &u0)?;
        errors.push(error_inf(&restrict_to_coarse(&reference, &ref_grid, &grid)?, &u)?);
    }
    Ok(OrderTable::new("h", &cfg.h_list, &errors)?)
}

fn trace(cfg: &ExperimentConfig, measure: &dyn Fn(&Solver, &GridSpec, &Field) -> fracac::Result<f64>) -> CliResult<TimeSeries> {
    let grid = cfg.grid()?;
    let solver = solver_on(cfg, grid.clone(), cfg.tau, cfg.t_end)?;
    let u0 = solver.clamp_initial(&build_initial_condition(cfg)?)?;
    let mut rows = vec![(0, 0.0, measure(&solver, &grid, &u0)?)];
    let mut failure = None;
    let mut obs = |step: usize, time: f64, f: &Field| match measure(&solver, &grid, f) {
        Ok(v) => rows.push((step, time, v)),
        Err(e) => {
            failure.get_or_insert(e);
        }
    };
    solver.integrate(&u0, &mut [&mut obs])?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(TimeSeries { rows }),
    }
}

/// `||u^n||_inf` after every step.
pub fn run_maxnorm_trace(cfg: &ExperimentConfig) -> CliResult<TimeSeries> {
    trace(cfg, &|_, _, f| Ok(max_norm(f)))
}

/// Discrete Ginzburg-Landau energy after every step.
pub fn run_energy_trace(cfg: &ExperimentConfig) -> CliResult<TimeSeries> {
    trace(cfg, &|solver, grid, f| discrete_energy(f, solver.cache(), grid))
}

/// Dumps the state at each of `snapshot_times` into `dir`; returns the
/// payload paths in time order.
pub fn run_snapshots(cfg: &ExperimentConfig, dir: &Path) -> CliResult<Vec<PathBuf>> {
    if cfg.snapshot_times.is_empty() {
        return Ok(Vec::new());
    }
    let mut wanted = Vec::with_capacity(cfg.snapshot_times.len());
    for &t in &cfg.snapshot_times {
        let k = (t / cfg.tau).round();
        if !(t >= 0.0) || (k * cfg.tau - t).abs() > 1e-9 * t.max(cfg.tau) {
            return Err(CliError::Config(format!(
                "snapshot time {t} is not a multiple of tau = {}",
                cfg.tau
            )));
        }
        wanted.push((k as usize, t));
    }
    wanted.sort_by_key(|w| w.0);
    wanted.dedup_by_key(|w| w.0);
    let last = wanted[wanted.len() - 1].0;
    let grid = cfg.grid()?;
    let solver = solver_on(cfg, grid.clone(), cfg.tau, last as f64 * cfg.tau)?;
    let u0 = solver.clamp_initial(&build_initial_condition(cfg)?)?;
    let mut paths = Vec::new();
    let mut failure = None;
    let mut dump = |step: usize, f: &Field| {
        if let Some(&(_, t)) = wanted.iter().find(|w| w.0 == step) {
            let stem = format!("snapshot_{step:07}");
            match write_snapshot(dir, &stem, f, &SnapshotHeader::new(&grid, t)) {
                Ok(p) => paths.push(p),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
    };
    dump(0, &u0);
    if last > 0 {
        let mut obs = |step: usize, _: f64, f: &Field| dump(step, f);
        solver.integrate(&u0, &mut [&mut obs])?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(paths),
    }
}
