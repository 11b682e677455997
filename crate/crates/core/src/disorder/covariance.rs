//! Closed-form covariances of the three disorder models.

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParameters, Order, SpinConfiguration};

/// `E[U(a) U(b)]` for the model described by `params`.
///
/// * SK-type: `N ξ^p`.
/// * REM: `N · [a = b]`.
/// * Spherical: `(p! / N^{p−1}) e_p(σ_1σ'_1, …, σ_Nσ'_N)` with `e_p` the
///   elementary symmetric polynomial, obtained from the power sums
///   (`N` for even powers, `N − 2d` for odd ones) via Newton's identities.
pub fn exact_covariance(
    a: SpinConfiguration,
    b: SpinConfiguration,
    params: &ModelParameters,
) -> Result<f64> {
    let d = a.hamming_distance(b)? as usize;
    if a.n() != params.n {
        return Err(Error::invalid(format!(
            "configuration dimension {} differs from model N = {}",
            a.n(),
            params.n
        )));
    }
    let n = params.n;
    Ok(match (params.kind, params.p) {
        (ModelKind::Rem, _) => {
            if d == 0 {
                n as f64
            } else {
                0.0
            }
        }
        (ModelKind::Sk, Order::Finite(p)) => sk_covariance(n, d, p),
        (ModelKind::Spherical, Order::Finite(p)) => spherical_covariance(n, d, p as usize)?,
        (kind, p) => {
            return Err(Error::invalid(format!(
                "kind {kind} is incompatible with order {p}"
            )))
        }
    })
}

/// `N ξ^p` with `ξ = 1 − 2d/N`.
pub fn sk_covariance(n: usize, distance: usize, p: u32) -> f64 {
    let xi = (n as f64 - 2.0 * distance as f64) / n as f64;
    n as f64 * xi.powi(p as i32)
}

pub(crate) fn spherical_covariance(n: usize, distance: usize, p: usize) -> Result<f64> {
    if p > n {
        return Err(Error::invalid(format!(
            "spherical model needs p ≤ N (p = {p}, N = {n})"
        )));
    }
    let e_p = elementary_symmetric_pm1(n, distance, p);
    // p!/N^{p-1} = N Π_{i ≤ p} (i/N)
    let prefactor = (1..=p).fold(n as f64, |acc, i| acc * i as f64 / n as f64);
    Ok(prefactor * e_p as f64)
}

/// `e_p` of `N − d` entries `+1` and `d` entries `−1`, exactly.
fn elementary_symmetric_pm1(n: usize, d: usize, p: usize) -> i64 {
    let odd = n as i64 - 2 * d as i64;
    let even = n as i64;
    let power = |i: usize| if i % 2 == 0 { even } else { odd };
    let mut e = vec![0i64; p + 1];
    e[0] = 1;
    for k in 1..=p {
        let mut acc = 0i64;
        for i in 1..=k {
            let term = e[k - i] * power(i);
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        debug_assert_eq!(acc % k as i64, 0);
        e[k] = acc / k as i64;
    }
    e[p]
}

/// `min{1, p(p−1)/(2N)}`, the uniform bound on the spherical correction
/// `δ = ξ^p − E[ÛÛ']/N`.
pub fn spherical_delta_bound(n: usize, p: u32) -> Result<f64> {
    if p as usize > n {
        return Err(Error::invalid(format!(
            "spherical model needs p ≤ N (p = {p}, N = {n})"
        )));
    }
    let p = p as f64;
    Ok((p * (p - 1.0) / (2.0 * n as f64)).min(1.0))
}
