//! The pressure `Φ = N⁻¹ ln(2⁻ᴺ Tr e^{−βH})` by dense diagonalization,
//! classical summation, and stochastic Lanczos quadrature.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::rng::{derive_seed, rng_from_seed, GaussianStream};
use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, LinearOperator};
use crate::krylov::{
    dot, extremal_eigenvalues, lanczos, norm, tridiagonal_eigen, ExtremalOptions, Lanczos,
    Reorthogonalization, Target,
};
use crate::scalar::{log_sum_exp, Real};

/// Largest `N` diagonalized densely by default (an 8192 × 8192 problem).
pub const DEFAULT_DENSE_CAP: usize = 13;
/// Largest `N` accepted by the quadrature estimator.
pub const MAX_SLQ_SPINS: usize = 26;
/// Memory allowed for one probe's Lanczos basis before reorthogonalization is dropped.
const REORTH_BYTES: usize = 4 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Classical,
    Slq,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Classical => "classical",
            Method::Slq => "slq",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureEstimate<S: Real = f64> {
    pub value: S,
    pub method: Method,
    /// Zero for the deterministic methods.
    pub std_error: S,
    pub probes: usize,
    /// Largest Lanczos run over the probes.
    pub lanczos_steps: usize,
    /// Probes whose Krylov space became invariant (quadrature exact).
    pub breakdowns: usize,
    /// False when doubling the step budget moved the estimate by at least
    /// half a standard error.
    pub quadrature_converged: bool,
}

impl<S: Real> PressureEstimate<S> {
    fn deterministic(value: S, method: Method) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Contract(format!("{method} pressure is not finite: {value}")));
        }
        Ok(Self {
            value,
            method,
            std_error: S::zero(),
            probes: 0,
            lanczos_steps: 0,
            breakdowns: 0,
            quadrature_converged: true,
        })
    }
}

fn check_temperature<S: Real>(beta: S) -> Result<()> {
    if !(beta >= S::zero()) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta = {beta} must be finite and ≥ 0")));
    }
    Ok(())
}

/// `N⁻¹ [ln Σ_i e^{−βE_i} − N ln 2]` for any list of energies.
pub fn pressure_from_levels<S: Real>(levels: &[S], n: usize, beta: S) -> S {
    let lse = log_sum_exp(levels.iter().map(|&e| -beta * e));
    let nn = S::of_usize(n);
    (lse - nn * S::LN_2()) / nn
}

/// Full spectrum of `H = U + ΓT`, reusable across temperatures.
#[derive(Clone, Debug)]
pub struct Spectrum<S: Real = f64> {
    n: usize,
    eigenvalues: Vec<S>,
}

impl<S: Real> Spectrum<S> {
    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    pub fn ground_energy(&self) -> S {
        self.eigenvalues[0]
    }

    pub fn pressure(&self, beta: S) -> Result<PressureEstimate<S>> {
        check_temperature(beta)?;
        PressureEstimate::deterministic(
            pressure_from_levels(&self.eigenvalues, self.n, beta),
            Method::Exact,
        )
    }
}

/// Dense diagonalization of `H`, refusing `N > cap`.
pub fn spectrum_exact<S: Real>(
    field: &DisorderField<S>,
    gamma: S,
    cap: usize,
) -> Result<Spectrum<S>> {
    let n = field.n();
    if n > cap {
        return Err(Error::resource(format!(
            "N = {n} exceeds the dense cap {cap}; use the SLQ estimator"
        )));
    }
    let h = Hamiltonian::new(field, gamma)?;
    let eigenvalues = S::symmetric_eigenvalues(&h.dense(), field.dim())?;
    Ok(Spectrum { n, eigenvalues })
}

pub fn pressure_exact<S: Real>(
    field: &DisorderField<S>,
    beta: S,
    gamma: S,
) -> Result<PressureEstimate<S>> {
    pressure_exact_with_cap(field, beta, gamma, DEFAULT_DENSE_CAP)
}

pub fn pressure_exact_with_cap<S: Real>(
    field: &DisorderField<S>,
    beta: S,
    gamma: S,
    cap: usize,
) -> Result<PressureEstimate<S>> {
    check_temperature(beta)?;
    spectrum_exact(field, gamma, cap)?.pressure(beta)
}

/// Pressure at `Γ = 0` by direct summation over `Q_N`.
pub fn pressure_classical<S: Real>(field: &DisorderField<S>, beta: S) -> Result<PressureEstimate<S>> {
    check_temperature(beta)?;
    PressureEstimate::deterministic(
        pressure_from_levels(field.values(), field.n(), beta),
        Method::Classical,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlqOptions {
    pub probes: usize,
    /// Lanczos steps per probe (an upper limit; a probe stops early once its
    /// quadrature value is stable to round-off).
    pub steps: usize,
    pub seed: u64,
    /// Re-run probes that exhausted `steps` with twice the budget and compare.
    pub doubling_check: bool,
    /// Number of low-lying Ritz vectors whose share of the trace is computed
    /// deterministically; the probes are projected onto their complement.
    /// Zero disables deflation.
    pub deflation: usize,
}

impl Default for SlqOptions {
    fn default() -> Self {
        Self {
            probes: 32,
            steps: 80,
            seed: 0,
            doubling_check: true,
            deflation: DEFAULT_DEFLATION,
        }
    }
}

impl SlqOptions {
    pub fn new(probes: usize, steps: usize, seed: u64) -> Self {
        Self {
            probes,
            steps,
            seed,
            ..Self::default()
        }
    }
}

/// Ritz vectors removed from the probes by default.
pub const DEFAULT_DEFLATION: usize = 32;
/// Memory allowed for the deflation basis (Lanczos run plus Ritz vectors).
const DEFLATION_BYTES: usize = 1 << 30;
/// Stream index separating the deflation start vector from probe seeds.
const DEFLATION_STREAM: u64 = 0x6465_666c;

struct ProbeResult<S> {
    /// `ln(v⊤e^{−βH}v)` by Gauss quadrature.
    log_quadrature: S,
    steps: usize,
    invariant: bool,
    stable: bool,
    spectral_scale: S,
}

fn rademacher<S: Real>(dim: usize, seed: u64) -> Vec<S> {
    let mut rng = rng_from_seed(seed);
    (0..dim)
        .map(|_| if rng.random::<bool>() { S::one() } else { -S::one() })
        .collect()
}

fn log_quadrature<S: Real>(alpha: &[S], off: &[S], beta: S) -> Result<(S, S)> {
    let eig = tridiagonal_eigen(alpha, off, &[0])?;
    let weights = &eig.rows[0];
    let scale = eig.values[0].abs().max(eig.values[eig.values.len() - 1].abs());
    let lq = log_sum_exp(
        eig.values
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w != S::zero())
            .map(|(&theta, &w)| (w * w).ln() - beta * theta),
    );
    Ok((lq, scale))
}

/// Quadrature of `v⊤e^{−βH}v`, where `log_norm_sq = ln ‖v‖²`.
fn run_quadrature<S: Real>(
    op: &Hamiltonian<'_, S>,
    v: &[S],
    log_norm_sq: S,
    beta: S,
    steps: usize,
    reorth: Reorthogonalization,
) -> Result<ProbeResult<S>> {
    let mut lanczos = Lanczos::new(op, v, reorth)?;
    let mut previous: Option<S> = None;
    let tol = S::of(1e-13);
    loop {
        let more = lanczos.step();
        let run = lanczos.run();
        let k = run.steps();
        let check = !more || k >= steps || (k >= 10 && k % 5 == 0);
        if !check {
            continue;
        }
        let (lq, scale) = log_quadrature(&run.alpha, run.off_diagonal(), beta)?;
        let stable = previous.is_some_and(|p| (lq - p).abs() <= tol * S::one().max(lq.abs()));
        if !more || stable || k >= steps {
            return Ok(ProbeResult {
                log_quadrature: log_norm_sq + lq,
                steps: k,
                invariant: !more,
                stable: stable || !more,
                spectral_scale: scale,
            });
        }
        previous = Some(lq);
    }
}

/// Orthonormal low-lying Ritz vectors of `H` from one Lanczos run.
fn deflation_basis<S: Real>(op: &Hamiltonian<'_, S>, k: usize, seed: u64) -> Result<Vec<Vec<S>>> {
    let dim = op.dim();
    let m = (2 * k + 20).min(dim);
    let start = rademacher::<S>(dim, seed);
    let run = lanczos(op, &start, m, Reorthogonalization::Full)?;
    let s = run.steps();
    let rows: Vec<usize> = (0..s).collect();
    let eig = tridiagonal_eigen(&run.alpha, run.off_diagonal(), &rows)?;
    let mut out: Vec<Vec<S>> = Vec::with_capacity(k.min(s));
    for i in 0..k.min(s) {
        let mut y = vec![S::zero(); dim];
        for (r, v) in run.basis.iter().enumerate() {
            let c = eig.rows[r][i];
            for (yj, &vj) in y.iter_mut().zip(v) {
                *yj = *yj + c * vj;
            }
        }
        // one more Gram–Schmidt pass keeps the set orthonormal to round-off
        for q in &out {
            let c = dot(q, &y);
            for (yj, &qj) in y.iter_mut().zip(q) {
                *yj = *yj - c * qj;
            }
        }
        let nrm = norm(&y);
        if !(nrm > S::of(0.5)) {
            break;
        }
        y.iter_mut().for_each(|x| *x = *x / nrm);
        out.push(y);
    }
    Ok(out)
}

/// `z − QQ⊤z`, applied twice.
fn project_out<S: Real>(basis: &[Vec<S>], z: &mut [S]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, z);
            for (zj, &qj) in z.iter_mut().zip(q) {
                *zj = *zj - c * qj;
            }
        }
    }
}

fn run_probes<S: Real>(
    op: &Hamiltonian<'_, S>,
    beta: S,
    steps: usize,
    seeds: &[u64],
    basis: &[Vec<S>],
    reorth: Reorthogonalization,
) -> Result<Vec<ProbeResult<S>>> {
    let n = op.n();
    let probe = |&seed: &u64| {
        let mut v = rademacher::<S>(op.dim(), seed);
        let log_norm_sq = if basis.is_empty() {
            S::of_usize(n) * S::LN_2()
        } else {
            project_out(basis, &mut v);
            dot(&v, &v).ln()
        };
        run_quadrature(op, &v, log_norm_sq, beta, steps, reorth)
    };
    if op.dim() <= 1 << 18 {
        seeds.par_iter().map(probe).collect()
    } else {
        seeds.iter().map(probe).collect()
    }
}

/// `(Φ, σ_Φ)` from the deterministic log contributions and the per-probe
/// log quadratures: `Φ = N⁻¹ [ln(Σ_i e^{d_i} + mean_j e^{ℓ_j}) − N ln 2]`,
/// with a delta-method standard error.
fn combine<S: Real>(fixed: &[S], logs: &[S], n: usize) -> (S, S) {
    let p = S::of_usize(logs.len());
    let nn = S::of_usize(n);
    let top = logs
        .iter()
        .chain(fixed)
        .copied()
        .fold(S::neg_infinity(), S::max);
    let a: Vec<S> = logs.iter().map(|&l| (l - top).exp()).collect();
    let mean = a.iter().copied().sum::<S>() / p;
    let var = a.iter().map(|&x| (x - mean) * (x - mean)).sum::<S>() / (p - S::one());
    let total = mean + fixed.iter().map(|&d| (d - top).exp()).sum::<S>();
    let value = (top + total.ln() - nn * S::LN_2()) / nn;
    (value, var.sqrt() / total / p.sqrt() / nn)
}

/// Stochastic Lanczos quadrature estimate of the pressure.
///
/// Each probe is a Rademacher vector seeded by `derive_seed(seed, i)`; the
/// quadrature is evaluated in log space, so no ground-energy shift is
/// needed. With `deflation > 0` (and `βΓ ≠ 0`), the lowest Ritz vectors of
/// one Lanczos run carry their share of the trace exactly and the probes are
/// projected onto the complement, which keeps the estimator unbiased and
/// removes most of the probe variance at low temperature. The reported
/// standard error is the probe spread propagated through the logarithm,
/// floored at the round-off level of the quadrature.
pub fn pressure_slq<S: Real>(
    field: &DisorderField<S>,
    beta: S,
    gamma: S,
    opts: &SlqOptions,
) -> Result<PressureEstimate<S>> {
    check_temperature(beta)?;
    if opts.probes < 2 || opts.steps < 10 {
        return Err(Error::invalid(format!(
            "SLQ needs probes ≥ 2 and steps ≥ 10, got {} and {}",
            opts.probes, opts.steps
        )));
    }
    let n = field.n();
    if n > MAX_SLQ_SPINS {
        return Err(Error::resource(format!("N = {n} exceeds the SLQ limit {MAX_SLQ_SPINS}")));
    }
    let op = Hamiltonian::new(field, gamma)?;
    let dim = op.dim();
    let bytes = std::mem::size_of::<S>();
    let reorth = if opts.steps.saturating_mul(dim) * bytes <= REORTH_BYTES {
        Reorthogonalization::Full
    } else {
        Reorthogonalization::None
    };

    // A diagonal H (Γ = 0) or β = 0 gives zero-variance probes already.
    let k = opts.deflation.min(dim / 4);
    let deflate = k > 0
        && beta != S::zero()
        && gamma != S::zero()
        && (3 * k + 20).saturating_mul(dim) * bytes <= DEFLATION_BYTES;
    let basis = if deflate {
        deflation_basis(&op, k, derive_seed(opts.seed, DEFLATION_STREAM))?
    } else {
        Vec::new()
    };
    let fixed_runs: Vec<ProbeResult<S>> = basis
        .par_iter()
        .map(|q| run_quadrature(&op, q, S::zero(), beta, opts.steps, reorth))
        .collect::<Result<_>>()?;
    let fixed: Vec<S> = fixed_runs.iter().map(|r| r.log_quadrature).collect();

    let seeds: Vec<u64> = (0..opts.probes as u64).map(|i| derive_seed(opts.seed, i)).collect();
    let results = run_probes(&op, beta, opts.steps, &seeds, &basis, reorth)?;
    let logs: Vec<S> = results.iter().map(|r| r.log_quadrature).collect();
    let (value, spread) = combine(&fixed, &logs, n);

    let all = || results.iter().chain(&fixed_runs);
    let max_steps = all().map(|r| r.steps).max().unwrap_or(0);
    let scale = all().map(|r| r.spectral_scale).fold(S::zero(), S::max);
    let floor = S::of_usize(max_steps) * S::epsilon() * (S::one() + beta * scale) / S::of_usize(n);
    let std_error = spread.max(floor);

    let mut quadrature_converged = true;
    if opts.doubling_check {
        let unstable: Vec<usize> = (0..results.len()).filter(|&i| !results[i].stable).collect();
        let unstable_fixed: Vec<usize> =
            (0..fixed_runs.len()).filter(|&i| !fixed_runs[i].stable).collect();
        if !unstable.is_empty() || !unstable_fixed.is_empty() {
            let redo: Vec<u64> = unstable.iter().map(|&i| seeds[i]).collect();
            let doubled = run_probes(&op, beta, 2 * opts.steps, &redo, &basis, reorth)?;
            let mut logs2 = logs.clone();
            for (&i, r) in unstable.iter().zip(&doubled) {
                logs2[i] = r.log_quadrature;
            }
            let mut fixed2 = fixed.clone();
            for &i in &unstable_fixed {
                fixed2[i] = run_quadrature(&op, &basis[i], S::zero(), beta, 2 * opts.steps, reorth)?
                    .log_quadrature;
            }
            let (value2, _) = combine(&fixed2, &logs2, n);
            quadrature_converged = (value2 - value).abs() < std_error / S::of(2.0);
        }
    }
    if !value.is_finite() {
        return Err(Error::Contract(format!("SLQ pressure is not finite: {value}")));
    }
    Ok(PressureEstimate {
        value,
        method: Method::Slq,
        std_error,
        probes: opts.probes,
        lanczos_steps: max_steps,
        breakdowns: results.iter().filter(|r| r.invariant).count(),
        quadrature_converged,
    })
}

/// Smallest eigenvalue of `H` by restarted Lanczos to relative tolerance `tol`.
pub fn ground_energy<S: Real>(field: &DisorderField<S>, gamma: S, tol: f64) -> Result<S> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol = {tol} must be > 0")));
    }
    let op = Hamiltonian::new(field, gamma)?;
    if gamma == S::zero() {
        return Ok(field.min());
    }
    let mut g = GaussianStream::new(0x67726f756e64);
    let start: Vec<S> = (0..op.dim()).map(|_| S::of(g.next_standard())).collect();
    let ext = extremal_eigenvalues(
        &op,
        &start,
        Target::Smallest,
        &ExtremalOptions::new(tol, 20_000),
    )?;
    Ok(ext.min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, Sampler};
    use crate::model::ModelParameters;

    fn field(n: usize, p: u32, seed: u64) -> DisorderField {
        sample_field(&ModelParameters::sk(n, p).unwrap(), seed, Sampler::WalshSpectral).unwrap()
    }

    #[test]
    fn infinite_temperature() {
        let f = field(6, 2, 1);
        for gamma in [0.0, 1.0, 3.0] {
            assert!(pressure_exact(&f, 0.0, gamma).unwrap().value.abs() < 1e-15f64);
            let slq = pressure_slq(&f, 0.0, gamma, &SlqOptions::new(4, 20, 3)).unwrap();
            assert!(slq.value.abs() < 1e-14, "{slq:?}");
        }
        assert_eq!(pressure_classical(&f, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn zero_disorder_is_paramagnet() {
        for n in [1usize, 3, 7] {
            let f = DisorderField::zero(ModelParameters::sk(n, 2).unwrap()).unwrap();
            for (beta, gamma) in [(0.5, 1.0), (2.0, 0.5), (1.0, 2.0)] {
                let phi = pressure_exact(&f, beta, gamma).unwrap().value;
                assert!((phi - f64::cosh(beta * gamma).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_level_system() {
        let (g, gamma, beta) = (0.7f64, 1.2f64, 1.5f64);
        let f = DisorderField::from_values(ModelParameters::sk(1, 1).unwrap(), vec![g, -g]).unwrap();
        let phi = pressure_exact(&f, beta, gamma).unwrap().value;
        let expect = (beta * (g * g + gamma * gamma).sqrt()).cosh().ln();
        assert!((phi - expect).abs() < 1e-14);
    }

    #[test]
    fn classical_examples() {
        let f = DisorderField::from_values(ModelParameters::sk(4, 2).unwrap(), vec![1.0f64; 16]).unwrap();
        assert!((pressure_classical(&f, 2.0).unwrap().value + 0.5).abs() < 1e-15);
        for n in [3usize, 8, 11] {
            let f = field(n, 3, n as u64);
            let a = pressure_classical(&f, 1.3).unwrap();
            let b = pressure_exact(&f, 1.3, 0.0).unwrap();
            assert!((a.value - b.value).abs() <= 1e-12);
            assert_eq!(a.method, Method::Classical);
            assert_eq!(a.std_error, 0.0);
        }
    }

    #[test]
    fn dense_cap_is_a_resource_error() {
        let f = field(9, 2, 1);
        let err = pressure_exact_with_cap(&f, 1.0, 1.0, 8).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(pressure_exact(&f, -1.0, 1.0).is_err());
    }

    #[test]
    fn overflow_safe() {
        let f = field(8, 2, 4).shifted(-500.0);
        let phi = pressure_exact(&f, 50.0, 1.0).unwrap();
        assert!(phi.value.is_finite() && phi.value > 0.0);
        let slq = pressure_slq(&f, 50.0, 1.0, &SlqOptions::new(4, 40, 1)).unwrap();
        assert!((slq.value - phi.value).abs() < 1e-2 * phi.value);
    }

    #[test]
    fn shift_invariance() {
        let f = field(7, 3, 6);
        let c = 2.5;
        let g = f.shifted(c);
        let (beta, gamma) = (1.2, 0.8);
        let d = -beta * c / 7.0;
        let a = pressure_exact(&f, beta, gamma).unwrap().value;
        let b = pressure_exact(&g, beta, gamma).unwrap().value;
        assert!((b - a - d).abs() < 1e-12);
        let a = pressure_classical(&f, beta).unwrap().value;
        let b = pressure_classical(&g, beta).unwrap().value;
        assert!((b - a - d).abs() < 1e-12);
        let opts = SlqOptions::new(6, 40, 9);
        let a = pressure_slq(&f, beta, gamma, &opts).unwrap().value;
        let b = pressure_slq(&g, beta, gamma, &opts).unwrap().value;
        assert!((b - a - d).abs() < 1e-12);
    }

    #[test]
    fn slq_close_to_exact_and_deterministic() {
        let f = field(10, 3, 12);
        let exact = pressure_exact(&f, 1.0, 1.0).unwrap();
        let opts = SlqOptions::new(32, 80, 5);
        let a = pressure_slq(&f, 1.0, 1.0, &opts).unwrap();
        let b = pressure_slq(&f, 1.0, 1.0, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, Method::Slq);
        assert!(a.std_error > 0.0);
        assert!((a.value - exact.value).abs() <= 5e-3, "{a:?} vs {exact:?}");
        assert!(a.quadrature_converged);
        assert!(pressure_slq(&f, 1.0, 1.0, &SlqOptions::new(1, 80, 5)).is_err());
        assert!(pressure_slq(&f, 1.0, 1.0, &SlqOptions::new(4, 9, 5)).is_err());
    }

    #[test]
    fn deflation_keeps_estimate_unbiased_and_tightens_it() {
        let f = field(9, 3, 4);
        let exact = pressure_exact(&f, 2.0, 1.0).unwrap().value;
        let mut z_sum = 0.0;
        let (mut se_plain, mut se_defl) = (0.0, 0.0);
        for seed in 0..20 {
            let plain = SlqOptions {
                deflation: 0,
                ..SlqOptions::new(16, 80, seed)
            };
            let defl = SlqOptions::new(16, 80, seed);
            let a = pressure_slq(&f, 2.0, 1.0, &plain).unwrap();
            let b = pressure_slq(&f, 2.0, 1.0, &defl).unwrap();
            se_plain += a.std_error;
            se_defl += b.std_error;
            z_sum += (b.value - exact) / b.std_error;
            assert!((b.value - exact).abs() <= 4.0 * b.std_error, "{b:?} vs {exact}");
        }
        assert!(se_defl < se_plain / 10.0, "{se_defl} vs {se_plain}");
        // mean z-score over 20 runs has standard deviation ≈ 0.22
        assert!((z_sum / 20.0).abs() < 1.0, "{z_sum}");
    }

    #[test]
    fn deflation_is_skipped_where_probes_are_exact() {
        let f = field(8, 2, 6);
        let opts = SlqOptions::new(4, 40, 1);
        let classical = pressure_classical(&f, 1.3).unwrap().value;
        let at_zero_gamma = pressure_slq(&f, 1.3, 0.0, &opts).unwrap();
        assert!((at_zero_gamma.value - classical).abs() < 1e-13);
        assert!(pressure_slq(&f, 0.0, 2.0, &opts).unwrap().value.abs() < 1e-14);
        // a deflation larger than the space is clamped
        let tiny = field(3, 2, 1);
        let big = SlqOptions {
            deflation: 1000,
            ..opts
        };
        let exact = pressure_exact(&tiny, 1.0, 1.0).unwrap().value;
        let est = pressure_slq(&tiny, 1.0, 1.0, &big).unwrap();
        assert!((est.value - exact).abs() <= 4.0 * est.std_error, "{est:?} vs {exact}");
    }

    #[test]
    fn convex_in_beta_and_monotone_in_gamma() {
        let f = field(7, 2, 2);
        let betas: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let spec = spectrum_exact(&f, 0.7, DEFAULT_DENSE_CAP).unwrap();
        let phi: Vec<f64> = betas.iter().map(|&b| spec.pressure(b).unwrap().value).collect();
        for w in phi.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=10 {
            let v = pressure_exact(&f, 1.0, 0.2 * i as f64).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn ground_energy_cases() {
        let zero: DisorderField = DisorderField::zero(ModelParameters::sk(8, 2).unwrap()).unwrap();
        assert!((ground_energy(&zero, 1.5, 1e-10).unwrap() + 12.0).abs() < 1e-8);
        let f = field(10, 2, 3);
        assert_eq!(ground_energy(&f, 0.0, 1e-10).unwrap(), f.min());
        let lanczos = ground_energy(&f, 1.0, 1e-10).unwrap();
        let dense = spectrum_exact(&f, 1.0, DEFAULT_DENSE_CAP).unwrap().ground_energy();
        assert!((lanczos - dense).abs() <= 1e-8 * dense.abs());
    }

    #[test]
    fn single_precision_path() {
        let f64_field = field(6, 2, 8);
        let f32_field: DisorderField<f32> =
            sample_field(f64_field.params(), 8, Sampler::WalshSpectral).unwrap();
        let a = pressure_exact(&f64_field, 1.0, 1.0).unwrap().value;
        let b = pressure_exact(&f32_field, 1.0f32, 1.0).unwrap().value;
        assert!((a - b as f64).abs() < 1e-4);
    }
}
