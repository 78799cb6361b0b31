//! Dense float64 linear algebra and optimisation primitives for the fixed
//! encoder/discriminator compute graph.

mod adam;
mod matrix;

pub use adam::{AdamConfig, AdamState};
pub use matrix::DenseMatrix;
pub(crate) use matrix::dot;

use rand::Rng;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn sigmoid_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Uniform Glorot initialisation: entries drawn from `U(-b, b)` with
/// `b = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid_grad(0.0), 0.25);
    }

    #[test]
    fn sigmoid_is_stable_in_both_tails() {
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_matches_naive_form_in_safe_range() {
        for x in [-5.0, -0.3, 0.0, 0.7, 4.0] {
            let naive = (1.0 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-14);
        }
        assert_eq!(softplus(1000.0), 1000.0);
    }

    #[test]
    fn glorot_respects_bound() {
        let mut rng = crate::rng::stream(7, 0);
        let m = glorot_uniform(30, 10, &mut rng);
        let bound = (6.0f64 / 40.0).sqrt();
        assert!(m.data().iter().all(|v| v.abs() < bound));
    }
}
