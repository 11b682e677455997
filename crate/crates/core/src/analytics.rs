//! Closed-form limiting pressures, the phase boundary, and explicit bounds.
//!
//! Probability bounds are returned as natural logarithms: `2^N N^{2L}`
//! overflows `f64` at modest sizes.

use serde::{Deserialize, Serialize};

use crate::disorder::{exact_covariance, DisorderField};
use crate::error::{Error, Result};
use crate::free_energy::pressure_classical;
use crate::geometry::is_edge_connected_ray;
use crate::model::{ModelKind, ModelParameters, Order, SpinConfiguration};
use crate::scalar::Real;

/// `β_c = √(2 ln 2)`, the freezing inverse temperature of the REM.
pub fn beta_c<S: Real>() -> S {
    (S::of(2.0) * S::LN_2()).sqrt()
}

/// Differences below this are treated as ties between the two branches.
pub const PHASE_TIE: f64 = 1e-14;

fn check_nonneg<S: Real>(name: &str, x: S) -> Result<()> {
    if !(x >= S::zero()) || !x.is_finite() {
        return Err(Error::invalid(format!("{name} = {x} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Limiting REM pressure: `β²/2` below `β_c`, linear with slope `β_c` above.
pub fn rem_pressure<S: Real>(beta: S) -> Result<S> {
    check_nonneg("beta", beta)?;
    let bc = beta_c::<S>();
    let half = S::of(0.5);
    Ok(if beta <= bc {
        half * beta * beta
    } else {
        half * bc * bc + (beta - bc) * bc
    })
}

/// `ln cosh x`, written as `x + ln((1 + e^{−2x})/2)` to avoid overflow.
pub fn par_pressure<S: Real>(x: S) -> Result<S> {
    check_nonneg("beta*gamma", x)?;
    Ok(x + (-S::of(2.0) * x).exp().ln_1p() - S::LN_2())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    RemFrozen,
    RemParamagnet,
    QuantumParamagnet,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::RemFrozen => "REM_FROZEN",
            Phase::RemParamagnet => "REM_PARAMAGNET",
            Phase::QuantumParamagnet => "QUANTUM_PARAMAGNET",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint<S: Real = f64> {
    pub beta: S,
    pub gamma: S,
    pub rem: S,
    pub par: S,
    pub qrem: S,
    pub phase: Phase,
}

/// The limiting quantum REM pressure `max{Φ^REM(β), Φ^PAR(βΓ)}` and its phase.
///
/// Near-ties go to the quantum paramagnet, except at `Γ = 0` where there is
/// no transverse field and the classical labels apply. Freezing starts at
/// `β ≥ β_c`.
pub fn qrem_pressure<S: Real>(beta: S, gamma: S) -> Result<PhasePoint<S>> {
    check_nonneg("gamma", gamma)?;
    let rem = rem_pressure(beta)?;
    let par = par_pressure(beta * gamma)?;
    let classical = if beta >= beta_c::<S>() {
        Phase::RemFrozen
    } else {
        Phase::RemParamagnet
    };
    let phase = if gamma == S::zero() {
        classical
    } else if par > rem || (par - rem).abs() < S::of(PHASE_TIE) {
        Phase::QuantumParamagnet
    } else {
        classical
    };
    Ok(PhasePoint {
        beta,
        gamma,
        rem,
        par,
        qrem: rem.max(par),
        phase,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalField<S: Real = f64> {
    pub gamma: S,
    /// Set at `β = 0`, where the value is the limit `β → 0⁺`.
    pub is_limit: bool,
}

/// `Γ_c(β) = β⁻¹ arcosh(e^{Φ^REM(β)})`; `Γ_c(0) = 1` as a limit.
pub fn critical_field<S: Real>(beta: S) -> Result<CriticalField<S>> {
    check_nonneg("beta", beta)?;
    if beta == S::zero() {
        return Ok(CriticalField {
            gamma: S::one(),
            is_limit: true,
        });
    }
    let x = rem_pressure(beta)?;
    // arcosh(e^x) = x + ln(1 + √(1 − e^{−2x}))
    let root = (-(-S::of(2.0) * x).exp_m1()).sqrt();
    let arcosh = x + root.ln_1p();
    Ok(CriticalField {
        gamma: arcosh / beta,
        is_limit: false,
    })
}

/// Variational lower bound
/// `max{Φ(β, 0), ln cosh(βΓ) − β/(N 2^N) Σ_σ U(σ)}`.
pub fn gibbs_lower_bound<S: Real>(field: &DisorderField<S>, beta: S, gamma: S) -> Result<S> {
    check_nonneg("gamma", gamma)?;
    let classical = pressure_classical(field, beta)?.value;
    let mean = field.values().iter().copied().sum::<S>() / S::of_usize(field.dim());
    let par = par_pressure(beta * gamma)? - beta * mean / S::of_usize(field.n());
    Ok(classical.max(par))
}

/// Golden–Thompson upper bound
/// `max{Φ(β,0), ln cosh(βΓ) + βε} + (βΓ‖A‖ + ln 2)/N`.
pub fn golden_thompson_upper_bound<S: Real>(
    phi_classical: S,
    eps: S,
    norm_a: S,
    beta: S,
    gamma: S,
    n: usize,
) -> Result<S> {
    if !(eps > S::zero()) {
        return Err(Error::invalid(format!("eps = {eps} must be > 0")));
    }
    check_nonneg("normA", norm_a)?;
    check_nonneg("gamma", gamma)?;
    if n == 0 {
        return Err(Error::invalid("N must be ≥ 1"));
    }
    let branch = phi_classical.max(par_pressure(beta * gamma)? + beta * eps);
    Ok(branch + (beta * gamma * norm_a + S::LN_2()) / S::of_usize(n))
}

/// `h(x) = x / (1 − e^{−x})`.
pub fn h_function<S: Real>(x: S) -> Result<S> {
    if !(x > S::zero()) {
        return Err(Error::invalid(format!("h(x) needs x > 0, got {x}")));
    }
    if x < S::of(1e-4) {
        return Ok(S::one() + x / S::of(2.0) + x * x / S::of(12.0));
    }
    Ok(x / -(-x).exp_m1())
}

/// `exp(−Lδ²/(2C_L))`, bounding `P(max_j g_j < −δ)` for a centered Gaussian
/// vector of length `L` whose covariance row sums are at most `C_L`.
pub fn gaussian_min_bound(l: usize, delta: f64, c_l: f64) -> Result<f64> {
    if l < 1 || !(delta > 0.0) || !(c_l > 0.0) {
        return Err(Error::invalid(format!(
            "gaussian_min_bound needs L ≥ 1, δ > 0, C_L > 0 (got {l}, {delta}, {c_l})"
        )));
    }
    Ok((-(l as f64) * delta * delta / (2.0 * c_l)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayCovariance {
    /// `max_i Σ_j E[U(σ_i) U(σ_j)]`.
    pub exact: f64,
    /// `h(1) N²/p`, present only when `2p ≤ N`.
    pub bound: Option<f64>,
    /// `2N/(1 − e^{−2p/N})`, the bound that holds for every order
    /// (`2N` for the REM).
    pub weak_bound: f64,
}

/// Largest covariance row sum along an edge-connected ray.
pub fn ray_covariance_sum(ray: &[SpinConfiguration], params: &ModelParameters) -> Result<RayCovariance> {
    if !is_edge_connected_ray(ray) {
        return Err(Error::invalid("not an edge-connected ray"));
    }
    if ray[0].n() != params.n {
        return Err(Error::invalid(format!(
            "ray lives in Q_{}, parameters have N = {}",
            ray[0].n(),
            params.n
        )));
    }
    let mut exact = f64::NEG_INFINITY;
    for &a in ray {
        let mut row = 0.0;
        for &b in ray {
            row += exact_covariance(a, b, params)?;
        }
        exact = exact.max(row);
    }
    let n = params.n as f64;
    let (bound, weak_bound) = match (params.kind, params.p) {
        (ModelKind::Rem, _) | (_, Order::Infinite) => (None, 2.0 * n),
        (_, Order::Finite(p)) => {
            let p = p as f64;
            let weak = 2.0 * n / -(-2.0 * p / n).exp_m1();
            let strong = (2.0 * p <= n).then(|| h_function(1.0f64).map(|h| h * n * n / p));
            (strong.transpose()?, weak)
        }
    };
    Ok(RayCovariance {
        exact,
        bound,
        weak_bound,
    })
}

/// `ln(2^N N^{2L})`, bounding the number of edge-connected rays of length `L`.
pub fn ray_count_bound(l: usize, n: usize) -> Result<f64> {
    if l < 1 || n < 1 {
        return Err(Error::invalid(format!("ray_count_bound needs L, N ≥ 1 (got {l}, {n})")));
    }
    Ok(n as f64 * std::f64::consts::LN_2 + 2.0 * l as f64 * (n as f64).ln())
}

/// `ln(2^N N^{2L} e^{−Lpε²/(2h(1))})`, bounding the probability that some
/// ray of length `L` lies entirely in the deviation set. Requires `2p ≤ N`.
pub fn ray_event_bound(l: usize, n: usize, p: u32, eps: f64) -> Result<f64> {
    if 2 * p as usize > n || p == 0 {
        return Err(Error::invalid(format!(
            "ray event bound requires 1 ≤ p and 2p ≤ N (got p = {p}, N = {n})"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps = {eps} must be > 0")));
    }
    let h1 = h_function(1.0f64)?;
    Ok(ray_count_bound(l, n)? - l as f64 * p as f64 * eps * eps / (2.0 * h1))
}

/// `N(2 + K ln N/p − Kε²/(4h(1))) + (K+1) ln N`, the log of the bound on the
/// probability that some component escapes every ball of radius `K⌈N/p⌉`.
/// `p = ∞` drops the `ln N/p` term.
pub fn cluster_failure_bound(k: usize, n: usize, p: Order, eps: f64) -> Result<f64> {
    if k < 1 || n < 1 {
        return Err(Error::invalid(format!("cluster_failure_bound needs K, N ≥ 1 (got {k}, {n})")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps = {eps} must be > 0")));
    }
    let ln_n = (n as f64).ln();
    let per_p = match p {
        Order::Finite(0) => return Err(Error::invalid("p must be ≥ 1")),
        Order::Finite(p) => ln_n / p as f64,
        Order::Infinite => 0.0,
    };
    let k = k as f64;
    let h1 = h_function(1.0f64)?;
    Ok(n as f64 * (2.0 + k * per_p - k * eps * eps / (4.0 * h1)) + (k + 1.0) * ln_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, Sampler};
    use crate::free_energy::pressure_exact;
    use crate::model::flip;

    const BC: f64 = 1.177_410_022_515_474_6;

    #[test]
    fn rem_branches() {
        assert!((beta_c::<f64>() - BC).abs() < 1e-15);
        assert!((rem_pressure(1.0f64).unwrap() - 0.5).abs() < 1e-15);
        assert!((rem_pressure(BC).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((rem_pressure(2.0f64).unwrap() - 1.661_672_864_471).abs() < 1e-12);
        assert!(rem_pressure(-0.1f64).is_err());
    }

    #[test]
    fn rem_is_c1_with_a_curvature_jump() {
        let h = 1e-4;
        let slope = |b: f64| (rem_pressure(b + h).unwrap() - rem_pressure(b - h).unwrap()) / (2.0 * h);
        assert!((slope(BC - 2.0 * h) - slope(BC + 2.0 * h)).abs() < 1e-3);
        let curv = |b: f64| {
            (rem_pressure(b + h).unwrap() - 2.0 * rem_pressure(b).unwrap() + rem_pressure(b - h).unwrap())
                / (h * h)
        };
        assert!((curv(BC - 0.01) - 1.0).abs() < 1e-4);
        assert!(curv(BC + 0.01).abs() < 1e-4);
        let grid: Vec<f64> = (0..300).map(|i| 0.01 * i as f64).collect();
        for w in grid.windows(3) {
            let v: Vec<f64> = w.iter().map(|&b| rem_pressure(b).unwrap()).collect();
            assert!(v[0] - 2.0 * v[1] + v[2] >= -1e-15);
        }
    }

    #[test]
    fn paramagnet() {
        assert_eq!(par_pressure(0.0f64).unwrap(), 0.0);
        assert!((par_pressure(1.6f64).unwrap() - 1.6f64.cosh().ln()).abs() < 1e-15);
        assert!((par_pressure(1.6f64).unwrap() - 0.946_806_152_602).abs() < 1e-12);
        assert!((par_pressure(50.0f64).unwrap() - (50.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert!(par_pressure(1000.0f64).unwrap().is_finite());
    }

    #[test]
    fn phase_points() {
        let a = qrem_pressure(0.8f64, 0.5).unwrap();
        assert!((a.qrem - 0.32).abs() < 1e-15);
        assert_eq!(a.phase, Phase::RemParamagnet);
        let b = qrem_pressure(0.8f64, 2.0).unwrap();
        assert!((b.qrem - 1.6f64.cosh().ln()).abs() < 1e-15);
        assert_eq!(b.phase, Phase::QuantumParamagnet);
        for beta in [0.0, 0.5, 1.0, BC, 2.0, 5.0] {
            let p = qrem_pressure(beta, 0.0).unwrap();
            assert_eq!(p.qrem, p.rem);
            let frozen = beta >= BC;
            assert_eq!(p.phase == Phase::RemFrozen, frozen);
        }
        assert_eq!(qrem_pressure(3.0f64, 0.3).unwrap().phase, Phase::RemFrozen);
        // ties go to the paramagnet
        let g = critical_field(1.0f64).unwrap().gamma;
        assert_eq!(qrem_pressure(1.0f64, g).unwrap().phase, Phase::QuantumParamagnet);
    }

    #[test]
    fn critical_field_values() {
        let g1 = critical_field(1.0f64).unwrap();
        assert!(!g1.is_limit);
        assert!((g1.gamma - 0.5f64.exp().acosh()).abs() < 1e-14);
        assert!((g1.gamma - 1.085_038_501_948).abs() < 1e-12);
        let far = critical_field(50.0f64).unwrap().gamma;
        assert!((far - BC).abs() < 1e-2);
        let zero = critical_field(0.0f64).unwrap();
        assert!(zero.is_limit && zero.gamma == 1.0);
        assert!((critical_field(1e-6f64).unwrap().gamma - 1.0).abs() < 1e-6);
        for beta in [0.5f64, 1.0, 2.0, 10.0, 50.0] {
            let g = critical_field(beta).unwrap().gamma;
            let diff = par_pressure(beta * g).unwrap() - rem_pressure(beta).unwrap();
            assert!(diff.abs() <= 1e-12, "beta={beta} diff={diff}");
            // sign flip across the crossing on a Γ-grid
            for i in 0..100 {
                let gamma = 0.03 * i as f64;
                let p = qrem_pressure(beta, gamma).unwrap();
                if gamma < g - 1e-9 {
                    assert!(p.par < p.rem);
                } else if gamma > g + 1e-9 {
                    assert!(p.par > p.rem);
                }
            }
        }
    }

    #[test]
    fn h_values() {
        assert!((h_function(1.0f64).unwrap() - 1.581_977).abs() < 1e-6);
        assert!((h_function(1e-9f64).unwrap() - 1.0).abs() < 1e-8);
        let (a, b, c) = (h_function(0.3f64).unwrap(), h_function(0.7f64).unwrap(), h_function(1.0f64).unwrap());
        assert!(a < b && b < c);
        // the series and closed form agree at the switch point
        let x = 1e-4f64;
        assert!((1.0 + x / 2.0 + x * x / 12.0 - x / -(-x).exp_m1()).abs() < 1e-15);
        assert!(h_function(0.0f64).is_err());
        assert!(h_function(-1.0f64).is_err());
    }

    #[test]
    fn lower_and_upper_bounds() {
        let params = ModelParameters::sk(10, 2).unwrap();
        let f: DisorderField = sample_field(&params, 17, Sampler::WalshSpectral).unwrap();
        let phi = pressure_exact(&f, 1.0, 1.0).unwrap().value;
        let lower = gibbs_lower_bound(&f, 1.0, 1.0).unwrap();
        assert!(lower <= phi + 1e-10);
        let cl = pressure_classical(&f, 1.0).unwrap().value;
        assert_eq!(gibbs_lower_bound(&f, 1.0, 0.0).unwrap(), cl.max(-f.values().iter().sum::<f64>() / 10240.0));
        // with no deviation set ‖A‖ = 0 is valid when ε exceeds max|U|/N
        let eps = f.max_abs() / 10.0 + 0.1;
        let upper = golden_thompson_upper_bound(cl, eps, 0.0, 1.0, 1.0, 10).unwrap();
        assert!(upper >= phi);
        let zero = DisorderField::zero(params).unwrap();
        assert!((gibbs_lower_bound(&zero, 1.3, 0.7).unwrap() - (0.91f64).cosh().ln()).abs() < 1e-15);
        let gt0 = golden_thompson_upper_bound(cl, 1e-12, 0.0, 1.0, 0.0, 10).unwrap();
        assert!((gt0 - (cl + std::f64::consts::LN_2 / 10.0)).abs() < 1e-15);
        assert!(golden_thompson_upper_bound(cl, 0.0, 0.0, 1.0, 0.0, 10).is_err());
    }

    #[test]
    fn gaussian_bound_examples() {
        assert!((gaussian_min_bound(1, 2.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((gaussian_min_bound(4, 1.0, 2.5).unwrap() - (-0.8f64).exp()).abs() < 1e-15);
        assert!((gaussian_min_bound(3, 1.5, 1.0).unwrap() - (-3.0 * 2.25 / 2.0f64).exp()).abs() < 1e-15);
        assert!(gaussian_min_bound(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ray_covariances() {
        let params = ModelParameters::sk(10, 2).unwrap();
        let s = SpinConfiguration::new(0, 10).unwrap();
        let single = ray_covariance_sum(&[s], &params).unwrap();
        assert_eq!(single.exact, 10.0);
        let a = s;
        let b = flip(flip(a, 0).unwrap(), 1).unwrap();
        let c = flip(flip(b, 2).unwrap(), 3).unwrap();
        let r = ray_covariance_sum(&[a, b, c], &params).unwrap();
        let cov = |d: f64| 10.0 * (1.0 - 2.0 * d / 10.0f64).powi(2);
        let expect = (cov(0.0) + cov(2.0) + cov(4.0)).max(cov(2.0) + cov(0.0) + cov(2.0));
        assert!((r.exact - expect).abs() < 1e-12);
        let bound = r.bound.unwrap();
        assert!((bound - 1.581_976_7 * 50.0).abs() < 1e-4);
        assert!(r.exact <= bound && r.exact <= r.weak_bound);
        assert!(ray_covariance_sum(&[a, flip(a, 0).unwrap(), a], &params).is_err());
        let p6 = ModelParameters::sk(10, 6).unwrap();
        assert!(ray_covariance_sum(&[a, b, c], &p6).unwrap().bound.is_none());
    }

    #[test]
    fn log_scale_bounds() {
        assert!((ray_count_bound(1, 3).unwrap() - 72f64.ln()).abs() < 1e-14);
        assert!((ray_count_bound(2, 3).unwrap() - 648f64.ln()).abs() < 1e-13);
        assert!(ray_count_bound(3, 5).unwrap() > ray_count_bound(2, 5).unwrap());
        let e = ray_event_bound(4, 16, 8, 1.0).unwrap();
        assert!((e - 23.16).abs() < 0.01, "{e}");
        assert!(ray_event_bound(4, 16, 9, 1.0).is_err());
        assert!(ray_event_bound(2, 16, 8, 1e3).unwrap() < -1e5);
        // pε²/(2h(1)) > 2 ln N makes the bound decreasing in L
        let (n, p, eps) = (16, 8, 3.0);
        assert!(ray_event_bound(5, n, p, eps).unwrap() < ray_event_bound(4, n, p, eps).unwrap());

        let n = 1 << 20;
        let k13 = cluster_failure_bound(13, n, Order::Finite(n as u32), 1.0).unwrap();
        assert!(k13 < 0.0);
        let k26 = cluster_failure_bound(26, n, Order::Finite(n as u32), 1.0).unwrap();
        assert!(k26 < k13);
        assert!(cluster_failure_bound(12, n, Order::Infinite, 1.0).unwrap() > 0.0);
    }
}
