//! Fractional-difference weights.
//!
//! `g` holds the Grünwald weights `g_k = (-1)^k binom(alpha, k)` and `omega`
//! the second-order weighted-and-shifted combination
//! `omega_0 = alpha/2 g_0`, `omega_{k+1} = alpha/2 g_{k+1} + (2-alpha)/2 g_k`.
//! Both are produced by their O(n) recurrences.

use crate::error::{Error, Result};

pub(crate) fn check_order(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(alpha))
    }
}

fn table_len(n: usize) -> Result<usize> {
    n.checked_add(1)
        .ok_or_else(|| Error::Size(format!("weight count {n} + 1 overflows")))
}

/// Grünwald weights `g[0..=n]`.
pub fn gen_g(alpha: f64, n: usize) -> Result<Vec<f64>> {
    check_order(alpha)?;
    let len = table_len(n)?;
    let mut g = Vec::with_capacity(len);
    g.push(1.0);
    for k in 0..n {
        let next = (1.0 - (alpha + 1.0) / (k as f64 + 1.0)) * g[k];
        g.push(next);
    }
    Ok(g)
}

/// Second-order shifted weights `omega[0..=n]`, `n >= 1`.
pub fn gen_omega(alpha: f64, n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        check_order(alpha)?;
        return Err(Error::Size("omega table needs n >= 1".into()));
    }
    let g = gen_g(alpha, n)?;
    Ok(omega_from_g(alpha, &g))
}

fn omega_from_g(alpha: f64, g: &[f64]) -> Vec<f64> {
    let half = alpha / 2.0;
    let rest = (2.0 - alpha) / 2.0;
    let mut omega = Vec::with_capacity(g.len());
    omega.push(half * g[0]);
    for k in 0..g.len() - 1 {
        omega.push(half * g[k + 1] + rest * g[k]);
    }
    omega
}

/// Both weight families for one fractional order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    alpha: f64,
    g: Vec<f64>,
    omega: Vec<f64>,
}

impl CoeffTable {
    /// Builds `g` and `omega` with indices `0..=n`.
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if n < 1 {
            check_order(alpha)?;
            return Err(Error::Size("coefficient table needs n >= 1".into()));
        }
        let g = gen_g(alpha, n)?;
        let omega = omega_from_g(alpha, &g);
        Ok(Self { alpha, g, omega })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Largest index stored.
    pub fn n(&self) -> usize {
        self.omega.len() - 1
    }
}

/// One named property of the weights with the measured slack.
///
/// `margin` is signed so that `margin >= 0` means the property holds
/// (for equalities it is minus the absolute deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub alpha: f64,
    pub n: usize,
    pub checks: Vec<PropertyCheck>,
    /// `sum_{k=0}^{n} omega_k`; negative and shrinking towards zero with `n`.
    pub truncated_sum: f64,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

// Closed-form identities are compared to a few ulps of the operands.
const IDENTITY_TOL: f64 = 8.0 * f64::EPSILON;

fn equality(name: &'static str, got: f64, want: f64) -> PropertyCheck {
    let dev = (got - want).abs();
    PropertyCheck {
        name,
        passed: dev <= IDENTITY_TOL * want.abs().max(1.0),
        margin: -dev,
    }
}

fn at_least(name: &'static str, lhs: f64, rhs: f64) -> PropertyCheck {
    PropertyCheck {
        name,
        passed: lhs >= rhs,
        margin: lhs - rhs,
    }
}

fn strictly_greater(name: &'static str, lhs: f64, rhs: f64) -> PropertyCheck {
    PropertyCheck {
        name,
        passed: lhs > rhs,
        margin: lhs - rhs,
    }
}

/// Evaluates every weight property that is checkable on a finite table.
///
/// Requires at least four entries (`n >= 3`); shorter tables report the
/// length requirement as a failed check.
pub fn check_omega_properties(table: &CoeffTable) -> PropertyReport {
    let alpha = table.alpha;
    let w = &table.omega;
    let mut checks = Vec::new();
    let truncated_sum: f64 = w.iter().sum();

    if w.len() < 4 {
        checks.push(PropertyCheck {
            name: "table length >= 4",
            passed: false,
            margin: w.len() as f64 - 4.0,
        });
        return PropertyReport {
            alpha,
            n: table.n(),
            checks,
            truncated_sum,
        };
    }

    checks.push(equality("omega_0 = alpha/2", w[0], alpha / 2.0));
    checks.push(equality(
        "omega_1 = (2 - alpha - alpha^2)/2",
        w[1],
        (2.0 - alpha - alpha * alpha) / 2.0,
    ));
    checks.push(at_least("omega_1 <= 0", -w[1], 0.0));
    checks.push(equality(
        "omega_2 = alpha(alpha^2 + alpha - 4)/4",
        w[2],
        alpha * (alpha * alpha + alpha - 4.0) / 4.0,
    ));
    checks.push(strictly_greater("omega_0 + omega_2 > 0", w[0] + w[2], 0.0));
    checks.push(at_least("1 >= omega_0", 1.0, w[0]));
    checks.push(at_least("omega_0 >= omega_3", w[0], w[3]));

    let mut worst_step = f64::INFINITY;
    for k in 3..w.len() - 1 {
        worst_step = worst_step.min(w[k] - w[k + 1]);
    }
    if worst_step.is_finite() {
        checks.push(at_least("omega_k >= omega_{k+1} for k >= 3", worst_step, 0.0));
    }
    let min_tail = w[3..].iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(at_least("omega_k >= 0 for k >= 3", min_tail, 0.0));

    // Partial sums from m = 2 on must stay strictly negative.
    let mut partial = w[0] + w[1];
    let mut worst_partial = f64::NEG_INFINITY;
    for &wk in &w[2..] {
        partial += wk;
        worst_partial = worst_partial.max(partial);
    }
    checks.push(strictly_greater(
        "sum_{k<=m} omega_k < 0 for m >= 2",
        0.0,
        worst_partial,
    ));
    checks.push(strictly_greater("truncated total sum < 0", 0.0, truncated_sum));

    PropertyReport {
        alpha,
        n: table.n(),
        checks,
        truncated_sum,
    }
}
