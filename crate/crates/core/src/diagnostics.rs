//! Norms, the discrete Ginzburg-Landau energy and convergence tables.
//!
//! Sums run sequentially in storage order, so every reduction is
//! independent of the worker count.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::spectral_flow::SpectralCache;

pub fn max_norm(field: &Field) -> f64 {
    field.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `||a - b||_inf`.
pub fn error_inf(a: &Field, b: &Field) -> Result<f64> {
    b.ensure_shape(a.shape())?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// `|cell| * (1/4 sum (u^2 - 1)^2 - 1/2 u^T A u)` with the rectangle rule on
/// interior nodes (boundary nodes are zero).
pub fn discrete_energy(field: &Field, cache: &SpectralCache, grid: &GridSpec) -> Result<f64> {
    field.ensure_shape(&grid.interior())?;
    let au = cache.apply_a(field)?;
    let mut potential = 0.0;
    let mut quadratic = 0.0;
    for (&u, &a) in field.data().iter().zip(au.data()) {
        let w = u * u - 1.0;
        potential += w * w;
        quadratic += u * a;
    }
    Ok(grid.cell_measure() * (0.25 * potential - 0.5 * quadratic))
}

/// Samples a fine-grid field at the nodes of a nested coarse grid.
///
/// Each coarse axis must divide the fine axis: coarse node `i h` coincides
/// with fine node `i r h_fine` for `r = m_fine / m_coarse`.
pub fn restrict_to_coarse(fine: &Field, fine_grid: &GridSpec, coarse_grid: &GridSpec) -> Result<Field> {
    fine.ensure_shape(&fine_grid.interior())?;
    if fine_grid.dim() != coarse_grid.dim()
        || fine_grid.a() != coarse_grid.a()
        || fine_grid.b() != coarse_grid.b()
    {
        return Err(Error::Grid("restriction needs grids on the same domain".into()));
    }
    let mut ratio = Vec::with_capacity(fine_grid.dim());
    for (&mf, &mc) in fine_grid.m().iter().zip(coarse_grid.m()) {
        if mf % mc != 0 {
            return Err(Error::Grid(format!(
                "coarse axis with {mc} cells is not nested in fine axis with {mf} cells"
            )));
        }
        ratio.push(mf / mc);
    }
    let shape = coarse_grid.interior();
    let mut data = Vec::with_capacity(coarse_grid.len());
    let mut idx = vec![0usize; shape.len()];
    let mut fine_idx = vec![0usize; shape.len()];
    for _ in 0..coarse_grid.len() {
        for axis in 0..shape.len() {
            // interior index i is node i + 1
            fine_idx[axis] = (idx[axis] + 1) * ratio[axis] - 1;
        }
        data.push(fine.get(&fine_idx));
        for (axis, i) in idx.iter_mut().enumerate() {
            *i += 1;
            if *i < shape[axis] {
                break;
            }
            *i = 0;
        }
    }
    Field::from_vec(&shape, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    /// Step size or mesh width the error belongs to.
    pub resolution: f64,
    pub error: f64,
    /// `log2(previous error / this error)`; absent on the first row.
    pub order: Option<f64>,
}

/// Errors under successive halving with observed orders.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTable {
    /// Column name for the resolution, e.g. `tau` or `h`.
    pub quantity: String,
    pub rows: Vec<OrderRow>,
}

/// Observed orders `log2(e[i-1] / e[i])` for a halving sequence.
pub fn order_from_errors(errors: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.is_empty() {
        return Err(Error::Config("no errors to compute orders from".into()));
    }
    if let Some(bad) = errors.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("errors must be positive and finite, got {bad}")));
    }
    let mut orders = vec![None];
    orders.extend(errors.windows(2).map(|w| Some((w[0] / w[1]).log2())));
    Ok(orders)
}

impl OrderTable {
    pub fn new(quantity: &str, resolutions: &[f64], errors: &[f64]) -> Result<Self> {
        if resolutions.len() != errors.len() {
            return Err(Error::Size(format!(
                "{} resolutions for {} errors",
                resolutions.len(),
                errors.len()
            )));
        }
        let orders = order_from_errors(errors)?;
        let rows = resolutions
            .iter()
            .zip(errors)
            .zip(orders)
            .map(|((&resolution, &error), order)| OrderRow {
                resolution,
                error,
                order,
            })
            .collect();
        Ok(Self {
            quantity: quantity.to_string(),
            rows,
        })
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Header plus one row per entry; floats with 17 significant digits and
    /// an empty order cell on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},error,order\n", self.quantity);
        for row in &self.rows {
            let order = row.order.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", fmt_f64(row.resolution), fmt_f64(row.error), order);
        }
        out
    }
}

/// Round-trippable float formatting used by every CSV writer.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FracOrders;

    #[test]
    fn norms() {
        let z = Field::zeros(&[3, 3]);
        assert_eq!(max_norm(&z), 0.0);
        let mut f = z.clone();
        f.data_mut()[4] = -1.5;
        assert_eq!(max_norm(&f), 1.5);
        assert_eq!(error_inf(&f, &f).unwrap(), 0.0);
        let mut g = f.clone();
        g.data_mut()[2] += 1e-7;
        assert!((error_inf(&f, &g).unwrap() - 1e-7).abs() < 1e-20);
        assert!(error_inf(&f, &Field::zeros(&[3, 4])).is_err());
    }

    #[test]
    fn orders() {
        let o = order_from_errors(&[4e-4, 1e-4]).unwrap();
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(order_from_errors(&[1e-3, 1e-3]).unwrap()[1], Some(0.0));
        assert!(order_from_errors(&[1e-3, 0.0]).is_err());
        assert!(order_from_errors(&[1e-3, -1.0]).is_err());
        assert!(order_from_errors(&[]).is_err());
        assert_eq!(order_from_errors(&[1e-3]).unwrap(), vec![None]);
    }

    #[test]
    fn second_order_error_sequence() {
        let errs = [3.8688e-7, 9.6720e-8, 2.4180e-8, 6.0450e-9, 1.5109e-9];
        for o in order_from_errors(&errs).unwrap().into_iter().flatten() {
            assert!((o - 2.0).abs() <= 0.01, "{o}");
        }
    }

    #[test]
    fn csv_layout() {
        let t = OrderTable::new("tau", &[0.01, 0.005], &[4e-4, 1e-4]).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tau,error,order");
        assert!(lines[1].ends_with(','));
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[1].parse::<f64>().unwrap(), 1e-4);
        assert_eq!(cells[2].parse::<f64>().unwrap(), 2.0);
    }

    #[test]
    fn energy_of_zero_field() {
        let grid = GridSpec::new(0.0, 1.0, vec![9, 7]).unwrap();
        let orders = FracOrders::new(vec![1.4, 1.6]).unwrap();
        let cache = SpectralCache::build(&grid, &orders, 0.1, 0.01).unwrap();
        let e = discrete_energy(&Field::zeros(&grid.interior()), &cache, &grid).unwrap();
        let want = grid.cell_measure() * (8 * 6) as f64 / 4.0;
        assert!((e - want).abs() < 1e-15);
    }

    #[test]
    fn restriction_picks_coincident_nodes() {
        let fine = GridSpec::new(0.0, 2.0, vec![32, 32]).unwrap();
        let coarse = GridSpec::new(0.0, 2.0, vec![8, 8]).unwrap();
        let f = Field::from_fn(&fine, |x| x[0] + 100.0 * x[1]);
        let r = restrict_to_coarse(&f, &fine, &coarse).unwrap();
        let want = Field::from_fn(&coarse, |x| x[0] + 100.0 * x[1]);
        assert_eq!(r.shape(), want.shape());
        for (a, b) in r.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let bad = GridSpec::new(0.0, 2.0, vec![12, 8]).unwrap();
        assert!(restrict_to_coarse(&f, &fine, &bad).is_err());
    }
}
