use crate::numerics::{Matrix, Rng};

/// Xavier/Glorot bound `sqrt(6 / (fan_in + fan_out))` for a `rows × cols` weight.
pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Weight matrix with entries uniform in `±xavier_bound(rows, cols)`.
pub fn xavier_init(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let bound = xavier_bound(rows, cols);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound))
}
