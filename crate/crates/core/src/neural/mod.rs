//! The neural side of the learned crossover operator: dense math, LSTM
//! encoder/decoder, pointer attention, REINFORCE backprop, Adam, and
//! weight serialization.

pub mod adam;
pub mod attention;
pub mod gradients;
pub mod io;
pub mod lstm;
pub mod policy;
pub mod tensor;

use rand::{Rng, RngCore};

use crate::scalar::Scalar;

/// One uniform draw in [-scale, scale]. The draw itself is made in f64 so
/// the consumed RNG stream does not depend on the scalar type.
pub(crate) fn uniform_symmetric<F: Scalar>(scale: f64, rng: &mut dyn RngCore) -> F {
    let u: f64 = rng.gen();
    F::from(scale * (2.0 * u - 1.0)).expect("scalar from f64")
}
