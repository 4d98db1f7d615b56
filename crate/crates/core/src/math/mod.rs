//! Small dense complex linear algebra over registers of qudits.
//!
//! Subsystem order is big-endian everywhere: the first subsystem is the most
//! significant digit of a basis index, so in a three-qudit register the index
//! of `|a b c>` is `(a * d + b) * d + c`.

mod dim;
mod operator;
mod rng;
mod state;

pub use dim::{Dim, ZMod};
pub use operator::Operator;
pub use rng::{rng_stream, Sampler};
pub use state::{states_equal_up_to_phase, PureState};

/// Default equality tolerance for states and matrices.
pub const EQ_TOL: f64 = 1e-9;
/// Default tolerance for eigenvector residuals.
pub const EIGEN_TOL: f64 = 1e-7;
/// Largest total dimension a tensor product may produce.
pub const MAX_TOTAL_DIM: usize = 1_000_000;
/// Largest dimension of a dense operator.
pub const MAX_OPERATOR_DIM: usize = 4096;

/// Kronecker product in big-endian subsystem order.
pub trait Tensor: Sized {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> crate::Result<Self>;

    fn tensor(&self, other: &Self) -> crate::Result<Self> {
        self.tensor_with_limit(other, MAX_TOTAL_DIM)
    }
}

/// Free-function form of [`Tensor::tensor`].
pub fn tensor<T: Tensor>(a: &T, b: &T) -> crate::Result<T> {
    a.tensor(b)
}

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, im)
}

/// Splits `index` into `(high, digit, low)` around subsystem `slot`.
pub(crate) fn strides(dims: &[usize], slot: usize) -> (usize, usize, usize) {
    let high: usize = dims[..slot].iter().product();
    let low: usize = dims[slot + 1..].iter().product();
    (high, dims[slot], low)
}
