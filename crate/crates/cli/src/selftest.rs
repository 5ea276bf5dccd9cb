//! Built-in verification: weight identities and fast-path versus dense
//! oracle comparisons on small grids.

use fracac::frac_coeffs::{check_omega_properties, CoeffTable};
use fracac::oracle::{
    dense_a, dense_c, dense_expm, dense_s, dense_two_level, grunwald_closed_form, kron_sum, reference_step_with,
    DenseMatrix,
};
use fracac::time_stepper::strang_step;
use fracac::{Field, FracOrders, GridSpec, OperatorColumns, SolverConfig, SpectralCache};

use crate::error::CliResult;
use crate::ic::sample;
use crate::config::IcSpec;

pub const ORACLE_TOL: f64 = 1e-11;
pub const CLOSED_FORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Observed deviation (or violated margin).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn within(name: String, value: f64, tolerance: f64) -> Self {
        Self {
            passed: value <= tolerance,
            name,
            value,
            tolerance,
        }
    }
}

/// Weight identities and recurrence-versus-closed-form agreement for
/// `alpha = 1.1, 1.2, .., 1.9` at table length `n`.
pub fn weight_checks(n: usize) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    for k in 1..=9 {
        let alpha = 1.0 + 0.1 * k as f64;
        let table = CoeffTable::new(alpha, n)?;
        let report = check_omega_properties(&table);
        let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
        checks.push(Check {
            name: format!("weights alpha={alpha:.1} n={n}: {} identities", report.checks.len()),
            value: failed.len() as f64,
            tolerance: 0.0,
            passed: failed.is_empty(),
        });
        let worst = table
            .g()
            .iter()
            .enumerate()
            .map(|(j, &g)| {
                let want = grunwald_closed_form(alpha, j);
                (g - want).abs() / want.abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check::within(
            format!("g alpha={alpha:.1} n={n}: relative gap to closed form"),
            worst,
            CLOSED_FORM_TOL,
        ));
    }
    Ok(checks)
}

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn embed_axis(x: &DenseMatrix, shape: &[usize], axis: usize) -> CliResult<DenseMatrix> {
    let factors = shape
        .iter()
        .enumerate()
        .map(|(l, &n)| if l == axis { Ok(x.clone()) } else { DenseMatrix::zeros(n) })
        .collect::<fracac::Result<Vec<_>>>()?;
    Ok(kron_sum(&factors)?)
}

/// Fast exponential actions, `A`, the split linear step and the full step
/// against dense references on one grid.
pub fn oracle_checks_on(grid: &GridSpec, alpha: &[f64], eps: f64, tau: f64) -> CliResult<Vec<Check>> {
    let orders = FracOrders::new(alpha.to_vec())?;
    let cache = SpectralCache::build(grid, &orders, eps, tau)?;
    let shape = grid.interior();
    let label = shape.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x");
    let u = sample(&IcSpec::UniformRandom { lo: -1.0, hi: 1.0 }, 2024, grid);
    let mut checks = Vec::new();
    for axis in 0..grid.dim() {
        let cols = OperatorColumns::assemble(alpha[axis], grid.h()[axis], eps, shape[axis])?;
        let ec = dense_expm(&dense_c(&cols)?, 0.5 * tau)?;
        let es = dense_expm(&dense_s(&cols)?, tau)?;
        let want_c = embed_axis(&ec, &shape, axis)?.apply(u.data());
        let want_s = embed_axis(&es, &shape, axis)?.apply(u.data());
        let got_c = cache.apply_exp_circulant(&u, axis)?;
        let got_s = cache.apply_exp_skew(&u, axis)?;
        checks.push(Check::within(
            format!("{label} axis {axis}: exp(tau/2 C) action"),
            inf_diff(got_c.data(), &want_c),
            ORACLE_TOL,
        ));
        checks.push(Check::within(
            format!("{label} axis {axis}: exp(tau S) action"),
            inf_diff(got_s.data(), &want_s),
            ORACLE_TOL,
        ));
    }
    let a = dense_a(grid, &orders, eps)?;
    checks.push(Check::within(
        format!("{label}: A u"),
        inf_diff(cache.apply_a(&u)?.data(), &a.apply(u.data())),
        ORACLE_TOL,
    ));
    let prop = dense_two_level(grid, &orders, eps, tau)?;
    checks.push(Check::within(
        format!("{label}: split linear step"),
        inf_diff(cache.linear_step(&u)?.data(), &prop.apply(u.data())),
        ORACLE_TOL,
    ));
    let config = SolverConfig::new(grid.clone(), orders, eps, tau, tau)?;
    let want: Field = reference_step_with(&u, &prop, &config)?;
    checks.push(Check::within(
        format!("{label}: Strang step"),
        inf_diff(strang_step(&u, &cache, &config)?.data(), want.data()),
        ORACLE_TOL,
    ));
    Ok(checks)
}

/// Oracle comparisons on a 2D 8x8 and a 3D 7x7x7 interior grid with mixed orders.
pub fn oracle_checks() -> CliResult<Vec<Check>> {
    let (eps, tau) = (1.0, 0.1);
    let mut checks = oracle_checks_on(&GridSpec::new(0.0, 1.0, vec![9, 9])?, &[1.3, 1.8], eps, tau)?;
    checks.extend(oracle_checks_on(
        &GridSpec::new(0.0, 1.0, vec![8, 8, 8])?,
        &[1.2, 1.5, 1.9],
        eps,
        tau,
    )?);
    Ok(checks)
}

/// Everything `fracac selftest` runs.
pub fn run_all() -> CliResult<Vec<Check>> {
    let mut checks = weight_checks(2048)?;
    checks.extend(oracle_checks()?);
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let checks = oracle_checks_on(&GridSpec::new(0.0, 1.0, vec![6, 5]).unwrap(), &[1.4, 1.7], 1.0, 0.1).unwrap();
        assert_eq!(checks.len(), 7);
        for c in checks {
            assert!(c.passed, "{c:?}");
        }
        for c in weight_checks(64).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }
}
