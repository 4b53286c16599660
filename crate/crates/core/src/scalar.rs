//! Scalar abstraction for the neural math.
//!
//! Everything under [`crate::neural`] is generic over a floating-point
//! scalar so the same code runs in f32 or f64. The concrete aliases used
//! by the rest of the library live at the crate root ([`crate::Real`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::float::Float;
use num_traits::NumAssignOps;

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    Float + NumAssignOps + Sum<Self> + Default + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + NumAssignOps + Sum<T> + Default + Debug + Display + Send + Sync + 'static
{
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_definition() {
        for &x in &[-30.0f64, -2.0, -0.5, 0.0, 0.5, 2.0, 30.0] {
            let direct = 1.0 / (1.0 + (-x).exp());
            assert!((sigmoid(x) - direct).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0f64), 0.5);
    }

    #[test]
    fn sigmoid_extreme_inputs_stay_finite() {
        assert!(sigmoid(-800.0f64).is_finite());
        assert!(sigmoid(800.0f64).is_finite());
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert!(sigmoid(800.0f64) <= 1.0);
    }
}
