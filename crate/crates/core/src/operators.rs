//! Per-axis fractional operator: the symmetric Toeplitz first column, its
//! circulant + skew-circulant split, and the FFT spectra of both parts.
//!
//! Transform convention: the forward DFT uses `exp(-2 pi i jk / n)` without
//! normalization and the inverse divides by `n`. With it a circulant with
//! first column `c` acts as `x -> ifft(fft(c) * fft(x))`, and a
//! skew-circulant with first column `s` as
//! `x -> conj(t) * ifft(fft(t * s) * fft(t * x))` where
//! `t[j] = exp(-i pi j / n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::frac_coeffs::{check_order, CoeffTable};

/// First column of the symmetric Toeplitz matrix `B` for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzColumn {
    pub b: Vec<f64>,
    /// `-eps^2 / (2 h^alpha cos(alpha pi / 2))`, positive for `alpha` in (1, 2).
    pub scale: f64,
}

/// `B = C + S` as first columns, with the scale that produced `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorColumns {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub scale: f64,
}

impl OperatorColumns {
    /// Weights, Toeplitz column and split for one axis with `n` unknowns.
    pub fn assemble(alpha: f64, h: f64, eps: f64, n: usize) -> Result<Self> {
        if n < 3 {
            check_order(alpha)?;
            return Err(Error::Size(format!("axis needs at least 3 unknowns, got {n}")));
        }
        let weights = CoeffTable::new(alpha, n)?;
        let col = toeplitz_first_column(alpha, h, eps, n, &weights)?;
        split_circ_skew(&col)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// `B = scale * (D + D^T)` where `D` has `omega_1` on the diagonal,
/// `omega_0` above it and `omega_{k+1}` on the k-th subdiagonal. Hence
/// `b[0] = 2 omega_1`, `b[1] = omega_0 + omega_2`, `b[k] = omega_{k+1}`
/// (all times `scale`).
pub fn toeplitz_first_column(
    alpha: f64,
    h: f64,
    eps: f64,
    n: usize,
    weights: &CoeffTable,
) -> Result<ToeplitzColumn> {
    check_order(alpha)?;
    if n < 3 {
        return Err(Error::Size(format!("axis needs at least 3 unknowns, got {n}")));
    }
    if weights.alpha() != alpha {
        return Err(Error::Config(format!(
            "weight table built for alpha = {}, operator asked for {alpha}",
            weights.alpha()
        )));
    }
    if weights.omega().len() < n + 1 {
        return Err(Error::Size(format!(
            "need {} weights, table has {}",
            n + 1,
            weights.omega().len()
        )));
    }
    if !(h > 0.0 && h.is_finite()) || !eps.is_finite() {
        return Err(Error::Grid(format!("bad mesh width {h} or eps {eps}")));
    }
    let w = weights.omega();
    let scale = -eps * eps / (2.0 * h.powf(alpha) * (alpha * PI / 2.0).cos());
    let mut b = Vec::with_capacity(n);
    b.push(scale * 2.0 * w[1]);
    b.push(scale * (w[0] + w[2]));
    for k in 2..n {
        b.push(scale * w[k + 1]);
    }
    Ok(ToeplitzColumn { b, scale })
}

/// Splits the symmetric Toeplitz column into circulant and skew-circulant
/// first columns:
/// `c[0] = s[0] = b[0]/2`, `c[k] = (b[k] + b[n-k])/2`, `s[k] = (b[k] - b[n-k])/2`.
pub fn split_circ_skew(col: &ToeplitzColumn) -> Result<OperatorColumns> {
    let b = &col.b;
    let n = b.len();
    if n == 0 {
        return Err(Error::Size("empty Toeplitz column".into()));
    }
    let mut c = vec![0.0; n];
    let mut s = vec![0.0; n];
    c[0] = 0.5 * b[0];
    s[0] = 0.5 * b[0];
    for k in 1..n {
        c[k] = 0.5 * (b[k] + b[n - k]);
        s[k] = 0.5 * (b[k] - b[n - k]);
    }
    Ok(OperatorColumns {
        b: b.clone(),
        c,
        s,
        scale: col.scale,
    })
}

/// `t[j] = exp(-i pi j / n)`.
pub fn twist(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, -PI * j as f64 / n as f64))
        .collect()
}

fn forward(planner: &mut FftPlanner<f64>, mut buf: Vec<Complex64>) -> Vec<Complex64> {
    if !buf.is_empty() {
        planner.plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Eigenvalues of the circulant with first column `c`, in DFT bin order.
pub fn spectrum_circulant(c: &[f64]) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    spectrum_circulant_with(&mut planner, c)
}

pub(crate) fn spectrum_circulant_with(planner: &mut FftPlanner<f64>, c: &[f64]) -> Vec<Complex64> {
    forward(planner, c.iter().map(|&v| Complex64::new(v, 0.0)).collect())
}

/// Eigenvalues of the skew-circulant with first column `s` together with the
/// twist that maps it onto a circulant.
pub fn spectrum_skew(s: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut planner = FftPlanner::new();
    spectrum_skew_with(&mut planner, s)
}

pub(crate) fn spectrum_skew_with(
    planner: &mut FftPlanner<f64>,
    s: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let t = twist(s.len());
    let modulated = s.iter().zip(&t).map(|(&v, &tj)| tj * v).collect();
    (forward(planner, modulated), t)
}

/// Spectra of both split factors of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpectrum {
    pub lam_c: Vec<Complex64>,
    pub lam_s: Vec<Complex64>,
    pub twist: Vec<Complex64>,
}

/// Largest tolerated imaginary part, relative to the largest eigenvalue.
pub const SPECTRUM_IMAG_TOL: f64 = 1e-10;

impl AxisSpectrum {
    pub fn new(cols: &OperatorColumns) -> Self {
        let mut planner = FftPlanner::new();
        Self::with_planner(&mut planner, cols)
    }

    pub(crate) fn with_planner(planner: &mut FftPlanner<f64>, cols: &OperatorColumns) -> Self {
        let lam_c = spectrum_circulant_with(planner, &cols.c);
        let (lam_s, twist) = spectrum_skew_with(planner, &cols.s);
        Self { lam_c, lam_s, twist }
    }

    /// Real eigenvalues of `C` and `S`.
    ///
    /// Both factors are real symmetric, so the imaginary parts are pure
    /// roundoff; they are checked against [`SPECTRUM_IMAG_TOL`] and dropped.
    /// Positive real parts from roundoff are clamped to zero.
    pub fn real_clamped(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((real_nonpositive(&self.lam_c)?, real_nonpositive(&self.lam_s)?))
    }
}

fn real_nonpositive(lam: &[Complex64]) -> Result<Vec<f64>> {
    let size = lam.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tolerance = SPECTRUM_IMAG_TOL * size;
    let residue = lam.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > tolerance {
        return Err(Error::ImaginaryResidue { residue, tolerance });
    }
    Ok(lam.iter().map(|z| z.re.min(0.0)).collect())
}
