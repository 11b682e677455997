//! Floating-point abstraction shared by every numerical kernel.
//!
//! All operators, Krylov routines, and pressure evaluators are written against
//! [`Real`], so the same code runs in `f64` (the default, used by the harness)
//! and in `f32` (half the memory for large state vectors).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Generic real scalar: f32 or f64.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self;

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn to_f64_lossy(self) -> f64;

    /// Eigenvalues (ascending) of the dense symmetric `n × n` matrix stored
    /// row-major in `matrix`. Only the lower triangle is read.
    fn symmetric_eigenvalues(matrix: &[Self], n: usize) -> Result<Vec<Self>>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            fn symmetric_eigenvalues(matrix: &[Self], n: usize) -> Result<Vec<Self>> {
                if matrix.len() != n * n {
                    return Err(Error::invalid(format!(
                        "dense matrix has {} entries, expected {}",
                        matrix.len(),
                        n * n
                    )));
                }
                if n == 0 {
                    return Ok(Vec::new());
                }
                let mat = faer::Mat::<$t>::from_fn(n, n, |i, j| matrix[i * n + j]);
                let mut values = mat
                    .self_adjoint_eigenvalues(faer::Side::Lower)
                    .map_err(|e| Error::NonConvergence {
                        message: format!("dense symmetric eigensolver failed: {e:?}"),
                        best: f64::NAN,
                    })?;
                values.sort_by(|a, b| a.total_cmp(b));
                Ok(values)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// `ln Σ exp(x_i)`, shifted by the maximum. Returns `-inf` for an empty slice.
pub fn log_sum_exp<S: Real>(values: impl IntoIterator<Item = S> + Clone) -> S {
    let max = values
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, v| m.max(v));
    if max == S::neg_infinity() {
        return max;
    }
    let sum: S = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
