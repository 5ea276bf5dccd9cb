#![allow(dead_code)]

use fracac::oracle::{kron_sum, DenseMatrix};
use fracac::{Field, FracOrders, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_field(shape: &[usize], seed: u64, lo: f64, hi: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(lo..=hi)).collect();
    Field::from_vec(shape, data).unwrap()
}

/// Grid whose interior has exactly `n` points per axis on `(0, 1)`.
pub fn interior_grid(n: &[usize]) -> GridSpec {
    GridSpec::new(0.0, 1.0, n.iter().map(|k| k + 1).collect()).unwrap()
}

pub fn orders(alpha: &[f64]) -> FracOrders {
    FracOrders::new(alpha.to_vec()).unwrap()
}

/// `I ⊗ .. ⊗ x ⊗ .. ⊗ I` acting on `axis` of a tensor with `shape`.
pub fn embed_axis(x: &DenseMatrix, shape: &[usize], axis: usize) -> DenseMatrix {
    let factors: Vec<DenseMatrix> = shape
        .iter()
        .enumerate()
        .map(|(l, &n)| if l == axis { x.clone() } else { DenseMatrix::zeros(n).unwrap() })
        .collect();
    // zero blocks drop out of the Kronecker sum, leaving I ⊗ x ⊗ I
    kron_sum(&factors).unwrap()
}

pub fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
