//! Hypercube characters: the exact eigenvalues of the covariance `N ξ^p` in
//! the Walsh basis and an in-place fast Walsh–Hadamard transform.
//!
//! Expanding `ξ(σ,σ')^p = N^{-p} Σ_{j ∈ [N]^p} Π_i σ_{j_i} σ'_{j_i}` and
//! cancelling repeated indices in pairs leaves `χ_A(σ) χ_A(σ')`, where `A` is
//! the set of indices occurring an odd number of times. The covariance is
//! therefore diagonal in characters, with an eigenvalue that depends only on
//! `|A|`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::check_dimension;
use crate::scalar::Real;

/// Orders above this are rejected; use the REM sampler for `p → ∞`.
pub const MAX_ORDER: u32 = 64;

/// Covariance eigenvalue per character weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WalshSpectrum {
    pub n: usize,
    pub p: u32,
    /// `λ_k` as exact rationals.
    pub exact: Vec<BigRational>,
    /// `λ_k` rounded to `f64`.
    pub lambda_by_weight: Vec<f64>,
}

impl WalshSpectrum {
    /// `Σ_k C(N,k) λ_k`, evaluated exactly. Equals `N`.
    pub fn total_variance_exact(&self) -> BigRational {
        let mut binom = BigInt::one();
        let mut total = BigRational::zero();
        for (k, lambda) in self.exact.iter().enumerate() {
            total += BigRational::from_integer(binom.clone()) * lambda;
            binom = binom * BigInt::from(self.n - k) / BigInt::from(k + 1);
        }
        total
    }

    pub fn total_variance(&self) -> f64 {
        let mut binom = 1.0f64;
        let mut total = 0.0;
        for (k, lambda) in self.lambda_by_weight.iter().enumerate() {
            total += binom * lambda;
            binom = binom * (self.n - k) as f64 / (k + 1) as f64;
        }
        total
    }
}

/// Exact covariance spectrum of the p-spin field.
///
/// `t(p, k)` counts tuples in `[N]^p` whose odd-multiplicity support is one
/// fixed set of size `k`. Appending an index either removes it from a support
/// of size `k + 1` (`N − k` ways to have been outside a fixed `k`-set) or adds
/// it to a support of size `k − 1` (`k` ways):
///
/// `t(p+1, k) = (N − k) t(p, k+1) + k t(p, k−1)`, `t(0, 0) = 1`.
///
/// Then `λ_k = t(p, k) / N^{p−1}`.
pub fn walsh_spectrum(n: usize, p: u32) -> Result<WalshSpectrum> {
    check_dimension(n)?;
    if p == 0 || p > MAX_ORDER {
        return Err(Error::invalid(format!(
            "order p = {p} outside 1..={MAX_ORDER}; use the REM sampler for p = ∞"
        )));
    }
    let mut counts = vec![BigUint::zero(); n + 1];
    counts[0] = BigUint::one();
    for _ in 0..p {
        let mut next = vec![BigUint::zero(); n + 1];
        for k in 0..=n {
            let mut acc = BigUint::zero();
            if k < n {
                acc += &counts[k + 1] * BigUint::from(n - k);
            }
            if k > 0 {
                acc += &counts[k - 1] * BigUint::from(k);
            }
            next[k] = acc;
        }
        counts = next;
    }
    let denom = BigInt::from(n).pow(p - 1);
    let exact: Vec<BigRational> = counts
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), denom.clone()))
        .collect();
    let lambda_by_weight = exact
        .iter()
        .map(|r| {
            r.to_f64()
                .ok_or_else(|| Error::invalid("eigenvalue not representable as f64"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WalshSpectrum {
        n,
        p,
        exact,
        lambda_by_weight,
    })
}

/// Unnormalized in-place Walsh–Hadamard transform:
/// `y[x] = Σ_A a[A] (−1)^{|A ∧ x|}`. Length must be a power of two.
pub fn fwht<S: Real>(data: &mut [S]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
}
