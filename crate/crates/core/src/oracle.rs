//! Dense reference implementations for verification at small sizes.
//!
//! Only the weight recurrences are shared with the fast path. Matrices are
//! assembled entry by entry from their definitions, exponentials come from
//! a symmetric eigendecomposition (or Padé-13 scaling and squaring for
//! non-symmetric input), and the reaction flow is re-coded here.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::frac_coeffs::CoeffTable;
use crate::grid::{Field, FracOrders, GridSpec};
use crate::operators::OperatorColumns;
use crate::time_stepper::{Reaction, SolverConfig};

/// Largest dense dimension the oracle accepts.
pub const MAX_DENSE: usize = 4096;

/// Square row-major real matrix with a size guard.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

fn guard(n: usize) -> Result<()> {
    if n > MAX_DENSE {
        Err(Error::Size(format!("dense oracle limited to {MAX_DENSE} rows, asked for {n}")))
    } else {
        Ok(())
    }
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        guard(n)?;
        Ok(Self(DMatrix::zeros(n, n)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        guard(n)?;
        Ok(Self(DMatrix::identity(n, n)))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        guard(n)?;
        Ok(Self(DMatrix::from_fn(n, n, f)))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Size(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        guard(m.nrows())?;
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.0 * v).iter().copied().collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| self.0[(i, j)] == self.0[(j, i)]))
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).abs().max()
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    fn ensure_finite(&self) -> Result<()> {
        if self.0.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("dense matrix entry".into()))
        }
    }
}

/// `(-1)^k binom(alpha, k) = Gamma(k - alpha) / (Gamma(-alpha) Gamma(k + 1))`
/// from log-Gamma differences.
///
/// Small `k` uses the Gamma function directly; larger `k` writes the
/// log-Gamma difference through Stirling's series so the large logarithms
/// cancel analytically instead of numerically.
pub fn grunwald_closed_form(alpha: f64, k: usize) -> f64 {
    use statrs::function::gamma::gamma;
    let g_neg = gamma(-alpha);
    if k < 16 {
        return gamma(k as f64 - alpha) / (g_neg * gamma(k as f64 + 1.0));
    }
    let z1 = k as f64 - alpha;
    let z2 = k as f64 + 1.0;
    let c = alpha + 1.0;
    let stirling_tail = |z: f64| {
        let z2i = 1.0 / (z * z);
        (1.0 / 12.0
            - z2i * (1.0 / 360.0 - z2i * (1.0 / 1260.0 - z2i * (1.0 / 1680.0 - z2i / 1188.0))))
            / z
    };
    // ln Gamma(z1) - ln Gamma(z2) with z2 - z1 = c
    let diff = (z1 - 0.5) * (-c / z2).ln_1p() - c * z2.ln() + c + stirling_tail(z1) - stirling_tail(z2);
    // Gamma(k - alpha) > 0 for k >= 2 and Gamma(-alpha) > 0 on (-2, -1)
    (diff - g_neg.ln()).exp()
}

/// `D_alpha` entry by entry: `D[i][j] = omega_{i-j+1}` for `j <= i + 1`, else 0.
pub fn dense_d_alpha(alpha: f64, n: usize, weights: &CoeffTable) -> Result<DenseMatrix> {
    guard(n)?;
    if weights.alpha() != alpha || weights.omega().len() < n + 1 {
        return Err(Error::Config("weight table does not match D_alpha request".into()));
    }
    let w = weights.omega();
    DenseMatrix::from_fn(n, |i, j| if j <= i + 1 { w[i + 1 - j] } else { 0.0 })
}

/// `B = -eps^2 / (2 h^alpha cos(alpha pi / 2)) (D + D^T)`.
pub fn dense_b(alpha: f64, h: f64, eps: f64, n: usize) -> Result<DenseMatrix> {
    let weights = CoeffTable::new(alpha, n)?;
    let d = dense_d_alpha(alpha, n, &weights)?;
    let factor = -(eps * eps) / (2.0 * h.powf(alpha) * (alpha * PI / 2.0).cos());
    Ok(d.add(&d.transpose()).scaled(factor))
}

/// Circulant with first column `cols.c`.
pub fn dense_c(cols: &OperatorColumns) -> Result<DenseMatrix> {
    let n = cols.c.len();
    DenseMatrix::from_fn(n, |i, j| cols.c[(i + n - j) % n])
}

/// Skew-circulant with first column `cols.s`: wrapped entries change sign.
pub fn dense_s(cols: &OperatorColumns) -> Result<DenseMatrix> {
    let n = cols.s.len();
    DenseMatrix::from_fn(n, |i, j| if i >= j { cols.s[i - j] } else { -cols.s[n + i - j] })
}

/// `sum_l I ⊗ .. ⊗ X_l ⊗ .. ⊗ I` with `factors[0]` acting on the fastest index.
pub fn kron_sum(factors: &[DenseMatrix]) -> Result<DenseMatrix> {
    let sizes: Vec<usize> = factors.iter().map(|f| f.n()).collect();
    let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    let total = total.ok_or_else(|| Error::Size("Kronecker size overflow".into()))?;
    guard(total)?;
    let mut sum = DMatrix::zeros(total, total);
    for (l, f) in factors.iter().enumerate() {
        let faster: usize = sizes[..l].iter().product();
        let slower: usize = sizes[l + 1..].iter().product();
        let term = DMatrix::<f64>::identity(slower, slower)
            .kronecker(&f.0)
            .kronecker(&DMatrix::<f64>::identity(faster, faster));
        sum += term;
    }
    DenseMatrix::from_matrix(sum)
}

fn per_axis<F>(grid: &GridSpec, orders: &FracOrders, mut f: F) -> Result<Vec<DenseMatrix>>
where
    F: FnMut(f64, f64, usize) -> Result<DenseMatrix>,
{
    if orders.len() != grid.dim() {
        return Err(Error::Config("orders and grid dimension differ".into()));
    }
    orders
        .as_slice()
        .iter()
        .zip(grid.h())
        .zip(grid.interior())
        .map(|((&alpha, &h), n)| f(alpha, h, n))
        .collect()
}

/// Full operator `A` from literally assembled per-axis `B`.
pub fn dense_a(grid: &GridSpec, orders: &FracOrders, eps: f64) -> Result<DenseMatrix> {
    guard(grid.len())?;
    kron_sum(&per_axis(grid, orders, |alpha, h, n| dense_b(alpha, h, eps, n))?)
}

/// Kronecker sums of the circulant and skew-circulant parts.
pub fn dense_c_s(grid: &GridSpec, orders: &FracOrders, eps: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    guard(grid.len())?;
    let cols = per_axis(grid, orders, |alpha, h, n| {
        let cols = OperatorColumns::assemble(alpha, h, eps, n)?;
        dense_c(&cols)
    })?;
    let skews = per_axis(grid, orders, |alpha, h, n| {
        let cols = OperatorColumns::assemble(alpha, h, eps, n)?;
        dense_s(&cols)
    })?;
    Ok((kron_sum(&cols)?, kron_sum(&skews)?))
}

/// `exp(t M)`: eigendecomposition for symmetric `M`, Padé-13 otherwise.
pub fn dense_expm(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    m.ensure_finite()?;
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("exponential time {t}")));
    }
    if m.is_symmetric() {
        let eig = SymmetricEigen::new(m.0.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (t * l).exp()));
        let v = &eig.eigenvectors;
        DenseMatrix::from_matrix(v * d * v.transpose())
    } else {
        expm_pade(m, t)
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// `exp(t M)` by scaling and squaring with the diagonal Padé(13) approximant.
pub fn expm_pade(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    m.ensure_finite()?;
    let n = m.n();
    let a = &m.0 * t;
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let lu = (&v - &u).lu();
    let mut r = lu
        .solve(&(&v + &u))
        .ok_or_else(|| Error::NonFinite("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    DenseMatrix::from_matrix(r)
}

fn reaction(v: f64, half_tau: f64) -> f64 {
    let e = (-2.0 * half_tau).exp();
    v / (v * v + (1.0 - v * v) * e).sqrt()
}

/// One-level Strang step with the exact linear propagator `exp(tau A)`.
pub fn reference_strang_step(field: &Field, config: &SolverConfig) -> Result<Field> {
    field.ensure_shape(&config.grid.interior())?;
    let a = dense_a(&config.grid, &config.orders, config.eps)?;
    let propagator = dense_expm(&a, config.tau)?;
    reference_step_with(field, &propagator, config)
}

/// One Strang step with a caller-supplied dense linear propagator.
pub fn reference_step_with(field: &Field, propagator: &DenseMatrix, config: &SolverConfig) -> Result<Field> {
    let half = 0.5 * config.tau;
    let react = |x: &[f64]| -> Vec<f64> {
        match config.reaction {
            Reaction::AllenCahn => x.iter().map(|&v| reaction(v, half)).collect(),
            Reaction::Off => x.to_vec(),
        }
    };
    let v = react(field.data());
    let w = propagator.apply(&v);
    Field::from_vec(field.shape(), react(&w))
}

/// Dense two-level propagator `exp(tau/2 C) exp(tau S) exp(tau/2 C)`.
pub fn dense_two_level(grid: &GridSpec, orders: &FracOrders, eps: f64, tau: f64) -> Result<DenseMatrix> {
    let (c, s) = dense_c_s(grid, orders, eps)?;
    let ec = dense_expm(&c, 0.5 * tau)?;
    let es = dense_expm(&s, tau)?;
    Ok(ec.mul(&es).mul(&ec))
}
