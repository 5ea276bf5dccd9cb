//! Uniform grids on `[a, b]^d`, per-axis fractional orders and the flat
//! field layout (first axis fastest).

use crate::error::{Error, Result};
use crate::frac_coeffs::check_order;

/// Uniform mesh on the cube `[a, b]^d` with homogeneous Dirichlet boundary.
///
/// Axis `l` is split into `m[l]` cells of width `h[l] = (b - a) / m[l]`;
/// the unknowns are the `m[l] - 1` interior nodes `x_i = a + i h`, `1 <= i < m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    a: f64,
    b: f64,
    m: Vec<usize>,
    h: Vec<f64>,
}

impl GridSpec {
    pub fn new(a: f64, b: f64, m: Vec<usize>) -> Result<Self> {
        if !(2..=3).contains(&m.len()) {
            return Err(Error::Grid(format!(
                "dimension must be 2 or 3, got {}",
                m.len()
            )));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Grid(format!("domain [{a}, {b}] is empty or non-finite")));
        }
        if let Some(&bad) = m.iter().find(|&&ml| ml < 4) {
            return Err(Error::Grid(format!(
                "each axis needs at least 4 subdivisions, got {bad}"
            )));
        }
        let h = m.iter().map(|&ml| (b - a) / ml as f64).collect();
        Ok(Self { a, b, m, h })
    }

    /// Same subdivision count on every axis.
    pub fn cube(dim: usize, a: f64, b: f64, m: usize) -> Result<Self> {
        Self::new(a, b, vec![m; dim])
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Interior unknown counts `m[l] - 1`, in field axis order.
    pub fn interior(&self) -> Vec<usize> {
        self.m.iter().map(|&ml| ml - 1).collect()
    }

    pub fn len(&self) -> usize {
        self.m.iter().map(|&ml| ml - 1).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `prod h[l]`.
    pub fn cell_measure(&self) -> f64 {
        self.h.iter().product()
    }

    /// Coordinate of interior node `i` (0-based) along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h[axis]
    }
}

/// Per-axis fractional orders, each strictly inside `(1, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracOrders(Vec<f64>);

impl FracOrders {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        for &a in &alpha {
            check_order(a)?;
        }
        Ok(Self(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Real tensor stored flat with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Size(format!(
                "field of shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Samples `f` at every interior node of `grid`.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let shape = grid.interior();
        let len = grid.len();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        let mut x = vec![0.0; shape.len()];
        for _ in 0..len {
            for (axis, &i) in idx.iter().enumerate() {
                x[axis] = grid.coord(axis, i);
            }
            data.push(f(&x));
            for (axis, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < shape[axis] {
                    break;
                }
                *i = 0;
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn storage_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        let mut off = 0;
        for axis in (0..self.shape.len()).rev() {
            off = off * self.shape[axis] + index[axis];
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn ensure_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape == shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                got: self.shape.clone(),
            })
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite(format!("field entry {i} = {}", self.data[i]))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = GridSpec::new(0.0, 2.0, vec![256, 128]).unwrap();
        assert_eq!(g.interior(), vec![255, 127]);
        assert_eq!(g.len(), 255 * 127);
        assert_eq!(g.h(), &[2.0 / 256.0, 2.0 / 128.0]);
        assert_eq!(g.coord(0, 0), 2.0 / 256.0);
        assert_eq!(g.coord(1, 126), 2.0 - 2.0 / 128.0);
    }

    #[test]
    fn grid_rejects() {
        assert!(GridSpec::new(0.0, 1.0, vec![8]).is_err());
        assert!(GridSpec::new(0.0, 1.0, vec![8; 4]).is_err());
        assert!(GridSpec::new(1.0, 1.0, vec![8, 8]).is_err());
        assert!(GridSpec::new(0.0, 1.0, vec![3, 8]).is_err());
        assert!(FracOrders::new(vec![1.5, 2.0]).is_err());
    }

    #[test]
    fn field_layout_first_axis_fastest() {
        let g = GridSpec::new(0.0, 1.0, vec![4, 5]).unwrap();
        let f = Field::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        assert_eq!(f.shape(), &[3, 4]);
        assert_eq!(f.offset(&[1, 0]), 1);
        assert_eq!(f.offset(&[0, 1]), 3);
        assert_eq!(f.get(&[2, 3]), g.coord(0, 2) + 10.0 * g.coord(1, 3));
    }
}
