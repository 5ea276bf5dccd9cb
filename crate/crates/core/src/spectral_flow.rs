//! FFT application of the split linear flow on d-dimensional fields.
//!
//! Every d-dimensional operator here is a Kronecker sum of per-axis
//! operators. The per-axis terms commute, so an exponential of the sum is
//! the composition of per-axis exponentials, and the two-level propagator
//! `exp(tau/2 C) exp(tau S) exp(tau/2 C)` equals the product over axes of
//! `exp(tau/2 C_l) exp(tau S_l) exp(tau/2 C_l)`.
//!
//! Lines along one axis are processed two at a time: all per-axis operators
//! are real, so two real lines travel through one complex transform as the
//! real and imaginary parts. Non-leading axes are reached by cyclically
//! rotating the tensor layout with a blocked transpose; `d` rotations bring
//! the layout back to the original order.
//!
//! Lengths with a large prime factor have slow transforms. On those axes the
//! exponential factors are applied as cyclic (or negacyclic) convolutions
//! with their first columns, computed by a zero-padded power-of-two
//! transform and folded back onto the line.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, FracOrders, GridSpec};
use crate::operators::{AxisSpectrum, OperatorColumns};

/// Tolerated imaginary leakage of an unpaired real line, relative to its
/// sup norm.
pub const LINE_IMAG_TOL: f64 = 1e-10;

/// Lines whose length has a prime factor above this use padded convolutions.
pub const PAD_PRIME_ABOVE: usize = 31;

fn largest_prime_factor(mut n: usize) -> usize {
    let mut largest = 1;
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            largest = p;
            n /= p;
        }
        p += 1;
    }
    largest.max(n)
}

/// Power-of-two transforms and kernel spectra for padded convolutions.
#[derive(Clone)]
struct Padded {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Spectra of the first columns of `exp(tau/2 C)` and `exp(tau S)`,
    /// pre-divided by `len`.
    kernel_c: Vec<Complex64>,
    kernel_s: Vec<Complex64>,
}

/// Operators, spectra, transforms and exponential multipliers for one axis.
#[derive(Clone)]
pub struct AxisFlow {
    n: usize,
    columns: OperatorColumns,
    spectrum: AxisSpectrum,
    lam_c: Vec<f64>,
    lam_s: Vec<f64>,
    exp_c_half: Vec<f64>,
    exp_s_full: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    padded: Option<Padded>,
}

impl std::fmt::Debug for AxisFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxisFlow")
            .field("n", &self.n)
            .field("scale", &self.columns.scale)
            .field("padded", &self.padded.as_ref().map(|p| p.len))
            .finish_non_exhaustive()
    }
}

impl AxisFlow {
    fn new(planner: &mut FftPlanner<f64>, alpha: f64, h: f64, eps: f64, n: usize) -> Result<Self> {
        let columns = OperatorColumns::assemble(alpha, h, eps, n)?;
        let spectrum = AxisSpectrum::with_planner(planner, &columns);
        let (lam_c, lam_s) = spectrum.real_clamped()?;
        let padded = (largest_prime_factor(n) > PAD_PRIME_ABOVE).then(|| {
            let len = (2 * n - 1).next_power_of_two();
            Padded {
                len,
                fwd: planner.plan_fft_forward(len),
                inv: planner.plan_fft_inverse(len),
                kernel_c: Vec::new(),
                kernel_s: Vec::new(),
            }
        });
        Ok(Self {
            n,
            columns,
            spectrum,
            lam_c,
            lam_s,
            exp_c_half: Vec::new(),
            exp_s_full: Vec::new(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            padded,
        })
    }

    fn set_tau(&mut self, tau: f64) {
        self.exp_c_half = self.lam_c.iter().map(|&l| (0.5 * tau * l).exp()).collect();
        self.exp_s_full = self.lam_s.iter().map(|&l| (tau * l).exp()).collect();
        if let Some(p) = &self.padded {
            let inv_n = 1.0 / self.n as f64;
            let c: Vec<f64> = self.exp_c_half.iter().map(|m| m * inv_n).collect();
            let s: Vec<f64> = self.exp_s_full.iter().map(|m| m * inv_n).collect();
            let kernel_c = self.kernel_spectrum(p, Stage::Circulant(&c));
            let kernel_s = self.kernel_spectrum(p, Stage::Skew(&s));
            let p = self.padded.as_mut().expect("checked above");
            p.kernel_c = kernel_c;
            p.kernel_s = kernel_s;
        }
    }

    /// Padded spectrum of the first column of the matrix applied by `stage`.
    fn kernel_spectrum(&self, p: &Padded, stage: Stage<'_>) -> Vec<Complex64> {
        let mut col = vec![Complex64::default(); self.n];
        col[0] = Complex64::new(1.0, 0.0);
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.apply_stage(stage, &mut col, &mut [], &mut scratch);
        let inv_len = 1.0 / p.len as f64;
        let mut k = vec![Complex64::default(); p.len];
        for (z, c) in k.iter_mut().zip(&col) {
            *z = Complex64::new(c.re * inv_len, 0.0);
        }
        p.fwd.process_with_scratch(&mut k, &mut scratch);
        k
    }

    /// Length of the padded convolution buffer, if this axis uses one.
    pub fn padded_len(&self) -> Option<usize> {
        self.padded.as_ref().map(|p| p.len)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn columns(&self) -> &OperatorColumns {
        &self.columns
    }

    pub fn spectrum(&self) -> &AxisSpectrum {
        &self.spectrum
    }

    /// Clamped real eigenvalues of the circulant factor.
    pub fn lam_c(&self) -> &[f64] {
        &self.lam_c
    }

    /// Clamped real eigenvalues of the skew-circulant factor.
    pub fn lam_s(&self) -> &[f64] {
        &self.lam_s
    }

    /// `exp(tau/2 lam_c)`.
    pub fn exp_c_half(&self) -> &[f64] {
        &self.exp_c_half
    }

    /// `exp(tau lam_s)`.
    pub fn exp_s_full(&self) -> &[f64] {
        &self.exp_s_full
    }

    fn scratch_len(&self) -> usize {
        let direct = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        self.padded.as_ref().map_or(direct, |p| {
            direct
                .max(p.fwd.get_inplace_scratch_len())
                .max(p.inv.get_inplace_scratch_len())
        })
    }

    /// The two-level stages for one axis, fastest variant for its length.
    fn exp_stages<'a>(&'a self, c: &'a [f64], s: &'a [f64]) -> [Stage<'a>; 3] {
        match &self.padded {
            Some(p) => [
                Stage::Folded(&p.kernel_c, 1.0),
                Stage::Folded(&p.kernel_s, -1.0),
                Stage::Folded(&p.kernel_c, 1.0),
            ],
            None => [Stage::Circulant(c), Stage::Skew(s), Stage::Circulant(c)],
        }
    }
}

/// One diagonal multiply in the circulant or twisted (skew) basis.
/// Multipliers are pre-divided by the line length.
/// `Folded` convolves with a padded kernel spectrum and folds the tail
/// back with the given sign: `+1` cyclic, `-1` negacyclic.
#[derive(Clone, Copy)]
enum Stage<'a> {
    Circulant(&'a [f64]),
    Skew(&'a [f64]),
    Folded(&'a [Complex64], f64),
}

struct Workspace {
    buf: Vec<Complex64>,
    aux: Vec<Complex64>,
    pad: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Workspace {
    fn new(axis: &AxisFlow) -> Self {
        Self {
            buf: vec![Complex64::default(); axis.n],
            aux: vec![Complex64::default(); axis.n],
            pad: vec![Complex64::default(); axis.padded_len().unwrap_or(0)],
            scratch: vec![Complex64::default(); axis.scratch_len()],
        }
    }
}

fn load(chunk: &[f64], n: usize, buf: &mut [Complex64]) {
    if chunk.len() == 2 * n {
        let (re, im) = chunk.split_at(n);
        for ((z, &x), &y) in buf.iter_mut().zip(re).zip(im) {
            *z = Complex64::new(x, y);
        }
    } else {
        for (z, &x) in buf.iter_mut().zip(chunk) {
            *z = Complex64::new(x, 0.0);
        }
    }
}

fn check_unpaired(input_norm: f64, buf: &[Complex64]) -> Result<()> {
    let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let tolerance = LINE_IMAG_TOL * input_norm;
    if residue > tolerance {
        Err(Error::ImaginaryResidue { residue, tolerance })
    } else {
        Ok(())
    }
}

fn sup(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl AxisFlow {
    fn apply_stage(
        &self,
        stage: Stage<'_>,
        buf: &mut [Complex64],
        pad: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        match stage {
            Stage::Circulant(mult) => {
                self.fwd.process_with_scratch(buf, scratch);
                for (z, &m) in buf.iter_mut().zip(mult) {
                    *z *= m;
                }
                self.inv.process_with_scratch(buf, scratch);
            }
            Stage::Skew(mult) => {
                for (z, t) in buf.iter_mut().zip(&self.spectrum.twist) {
                    *z *= t;
                }
                self.fwd.process_with_scratch(buf, scratch);
                for (z, &m) in buf.iter_mut().zip(mult) {
                    *z *= m;
                }
                self.inv.process_with_scratch(buf, scratch);
                for (z, t) in buf.iter_mut().zip(&self.spectrum.twist) {
                    *z *= t.conj();
                }
            }
            Stage::Folded(kernel, sign) => {
                let Some(p) = &self.padded else {
                    unreachable!("folded stage on an unpadded axis")
                };
                let n = self.n;
                pad[..n].copy_from_slice(buf);
                pad[n..].fill(Complex64::default());
                p.fwd.process_with_scratch(pad, scratch);
                for (z, k) in pad.iter_mut().zip(kernel) {
                    *z *= k;
                }
                p.inv.process_with_scratch(pad, scratch);
                for (i, z) in buf.iter_mut().enumerate() {
                    *z = pad[i] + pad[i + n] * sign;
                }
            }
        }
    }

    /// Runs `stages` in order on every line of `data`, whose lines along
    /// this axis are contiguous.
    fn run_lines(&self, data: &mut [f64], stages: &[Stage<'_>]) -> Result<()> {
        let n = self.n;
        data.par_chunks_mut(2 * n).try_for_each_init(
            || Workspace::new(self),
            |ws, chunk| {
                let paired = chunk.len() == 2 * n;
                let norm = if paired { 0.0 } else { sup(chunk) };
                load(chunk, n, &mut ws.buf);
                for &stage in stages {
                    self.apply_stage(stage, &mut ws.buf, &mut ws.pad, &mut ws.scratch);
                }
                if paired {
                    let (re, im) = chunk.split_at_mut(n);
                    for ((z, x), y) in ws.buf.iter().zip(re).zip(im) {
                        *x = z.re;
                        *y = z.im;
                    }
                } else {
                    check_unpaired(norm, &ws.buf)?;
                    for (z, x) in ws.buf.iter().zip(chunk.iter_mut()) {
                        *x = z.re;
                    }
                }
                Ok(())
            },
        )
    }

    /// `out += (C + S) x` for every contiguous line.
    fn accumulate_operator(
        &self,
        input: &[f64],
        out: &mut [f64],
        lam_c: &[f64],
        lam_s: &[f64],
    ) -> Result<()> {
        let n = self.n;
        out.par_chunks_mut(2 * n)
            .zip(input.par_chunks(2 * n))
            .try_for_each_init(
                || Workspace::new(self),
                |ws, (acc, chunk)| {
                    let paired = chunk.len() == 2 * n;
                    let norm = if paired { 0.0 } else { sup(chunk) };
                    load(chunk, n, &mut ws.buf);
                    ws.aux.copy_from_slice(&ws.buf);
                    self.apply_stage(Stage::Circulant(lam_c), &mut ws.buf, &mut [], &mut ws.scratch);
                    self.apply_stage(Stage::Skew(lam_s), &mut ws.aux, &mut [], &mut ws.scratch);
                    for (z, w) in ws.buf.iter_mut().zip(&ws.aux) {
                        *z += w;
                    }
                    if paired {
                        let (re, im) = acc.split_at_mut(n);
                        for ((z, x), y) in ws.buf.iter().zip(re).zip(im) {
                            *x += z.re;
                            *y += z.im;
                        }
                    } else {
                        // multipliers carry the 1/n factor; undo it for the operator norm
                        let lam_max = lam_c.iter().chain(lam_s).fold(0.0f64, |m, v| m.max(v.abs()));
                        check_unpaired(norm * (n as f64 * lam_max).max(1.0), &ws.buf)?;
                        for (z, x) in ws.buf.iter().zip(acc.iter_mut()) {
                            *x += z.re;
                        }
                    }
                    Ok(())
                },
            )
    }
}

/// `dst (cols x rows) = src (rows x cols)^T`, both row-major.
fn transpose(src: &[f64], rows: usize, cols: usize, dst: &mut [f64]) {
    const BLOCK: usize = 32;
    dst.par_chunks_mut(rows * BLOCK)
        .enumerate()
        .for_each(|(cb, block)| {
            let c0 = cb * BLOCK;
            let c1 = (c0 + BLOCK).min(cols);
            for r0 in (0..rows).step_by(BLOCK) {
                let r1 = (r0 + BLOCK).min(rows);
                for c in c0..c1 {
                    let row = &mut block[(c - c0) * rows..(c - c0 + 1) * rows];
                    for r in r0..r1 {
                        row[r] = src[r * cols + c];
                    }
                }
            }
        });
}

/// Tensor with a cyclically rotated axis order; the current leading axis
/// is contiguous.
struct Rotating {
    data: Vec<f64>,
    spare: Vec<f64>,
    shape: Vec<usize>,
}

impl Rotating {
    fn new(data: Vec<f64>, shape: &[usize]) -> Self {
        let spare = vec![0.0; data.len()];
        Self {
            data,
            spare,
            shape: shape.to_vec(),
        }
    }

    /// Makes the current second axis the leading one.
    fn rotate(&mut self) {
        if self.shape.len() < 2 {
            return;
        }
        let lead = self.shape[0];
        transpose(&self.data, self.data.len() / lead, lead, &mut self.spare);
        std::mem::swap(&mut self.data, &mut self.spare);
        self.shape.rotate_left(1);
    }
}

/// Everything needed to advance the linear flow with a fixed step.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    shape: Vec<usize>,
    eps: f64,
    tau: f64,
    axes: Vec<AxisFlow>,
    identity: bool,
}

impl SpectralCache {
    pub fn build(grid: &GridSpec, orders: &FracOrders, eps: f64, tau: f64) -> Result<Self> {
        if orders.len() != grid.dim() {
            return Err(Error::Config(format!(
                "{} fractional orders for a {}-dimensional grid",
                orders.len(),
                grid.dim()
            )));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Config(format!("eps must be finite and >= 0, got {eps}")));
        }
        let mut planner = FftPlanner::new();
        let shape = grid.interior();
        let axes = orders
            .as_slice()
            .iter()
            .zip(grid.h())
            .zip(&shape)
            .map(|((&alpha, &h), &n)| AxisFlow::new(&mut planner, alpha, h, eps, n))
            .collect::<Result<Vec<_>>>()?;
        let mut cache = Self {
            shape,
            eps,
            tau: 0.0,
            axes,
            identity: true,
        };
        cache.set_tau(tau)?;
        Ok(cache)
    }

    /// Recomputes only the exponential multipliers for a new step size.
    pub fn set_tau(&mut self, tau: f64) -> Result<()> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::Config(format!("tau must be finite and >= 0, got {tau}")));
        }
        self.tau = tau;
        for axis in &mut self.axes {
            axis.set_tau(tau);
        }
        self.identity = self.axes.iter().all(|a| {
            a.exp_c_half.iter().chain(&a.exp_s_full).all(|&m| m == 1.0)
        });
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut other = self.clone();
        other.set_tau(tau)?;
        Ok(other)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn axis(&self, axis: usize) -> &AxisFlow {
        &self.axes[axis]
    }

    pub fn axes(&self) -> &[AxisFlow] {
        &self.axes
    }

    /// True when every multiplier is exactly one (`tau = 0` or `eps = 0`).
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim() {
            Ok(())
        } else {
            Err(Error::Axis {
                axis,
                dim: self.dim(),
            })
        }
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        field.ensure_shape(&self.shape)
    }

    /// Applies a diagonal multiplier in the circulant basis of `axis`;
    /// with `exp_c_half` this is `exp(tau/2 C_axis)`.
    pub fn apply_circulant_multiplier(&self, field: &Field, axis: usize, mult: &[f64]) -> Result<Field> {
        self.single_axis(field, axis, mult, false)
    }

    /// Applies a diagonal multiplier in the twisted basis of `axis`;
    /// with `exp_s_full` this is `exp(tau S_axis)`.
    pub fn apply_skew_multiplier(&self, field: &Field, axis: usize, mult: &[f64]) -> Result<Field> {
        self.single_axis(field, axis, mult, true)
    }

    /// `exp(tau/2 C_axis) field`.
    pub fn apply_exp_circulant(&self, field: &Field, axis: usize) -> Result<Field> {
        self.check_axis(axis)?;
        self.apply_circulant_multiplier(field, axis, &self.axes[axis].exp_c_half)
    }

    /// `exp(tau S_axis) field`.
    pub fn apply_exp_skew(&self, field: &Field, axis: usize) -> Result<Field> {
        self.check_axis(axis)?;
        self.apply_skew_multiplier(field, axis, &self.axes[axis].exp_s_full)
    }

    fn single_axis(&self, field: &Field, axis: usize, mult: &[f64], skew: bool) -> Result<Field> {
        self.check_axis(axis)?;
        self.check_field(field)?;
        let flow = &self.axes[axis];
        if mult.len() != flow.n {
            return Err(Error::ShapeMismatch {
                expected: vec![flow.n],
                got: vec![mult.len()],
            });
        }
        let inv_n = 1.0 / flow.n as f64;
        let scaled: Vec<f64> = mult.iter().map(|m| m * inv_n).collect();
        let stage = if skew {
            Stage::Skew(&scaled)
        } else {
            Stage::Circulant(&scaled)
        };
        let d = self.dim();
        let mut t = Rotating::new(field.data().to_vec(), &self.shape);
        for _ in 0..axis {
            t.rotate();
        }
        flow.run_lines(&mut t.data, &[stage])?;
        for _ in axis..d {
            t.rotate();
        }
        Field::from_vec(&self.shape, t.data)
    }

    /// Two-level linear propagator `exp(tau/2 C) exp(tau S) exp(tau/2 C)`.
    pub fn linear_step(&self, field: &Field) -> Result<Field> {
        let mut out = field.clone();
        self.linear_step_in_place(&mut out, &mut Vec::new())?;
        Ok(out)
    }

    /// [`Self::linear_step`] in place; `spare` is resized as needed and can
    /// be kept across calls to avoid reallocating. On error the contents of
    /// `field` are unspecified.
    pub fn linear_step_in_place(&self, field: &mut Field, spare: &mut Vec<f64>) -> Result<()> {
        self.check_field(field)?;
        if self.identity {
            return Ok(());
        }
        let storage = field.storage_mut();
        spare.resize(storage.len(), 0.0);
        let mut t = Rotating {
            data: std::mem::take(storage),
            spare: std::mem::take(spare),
            shape: self.shape.clone(),
        };
        let mut outcome = Ok(());
        for flow in &self.axes {
            let inv_n = 1.0 / flow.n as f64;
            let c: Vec<f64> = flow.exp_c_half.iter().map(|m| m * inv_n).collect();
            let s: Vec<f64> = flow.exp_s_full.iter().map(|m| m * inv_n).collect();
            outcome = flow.run_lines(&mut t.data, &flow.exp_stages(&c, &s));
            if outcome.is_err() {
                break;
            }
            t.rotate();
        }
        *storage = t.data;
        *spare = t.spare;
        outcome
    }

    /// `A field` with `A` the Kronecker sum of the per-axis `B = C + S`.
    pub fn apply_a(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        let mut cur = Rotating::new(field.data().to_vec(), &self.shape);
        let mut acc = Rotating::new(vec![0.0; field.len()], &self.shape);
        for flow in &self.axes {
            let inv_n = 1.0 / flow.n as f64;
            let c: Vec<f64> = flow.lam_c.iter().map(|m| m * inv_n).collect();
            let s: Vec<f64> = flow.lam_s.iter().map(|m| m * inv_n).collect();
            flow.accumulate_operator(&cur.data, &mut acc.data, &c, &s)?;
            cur.rotate();
            acc.rotate();
        }
        Field::from_vec(&self.shape, acc.data)
    }
}
