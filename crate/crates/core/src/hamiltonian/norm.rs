use super::LinearOperator;
use crate::disorder::rng::GaussianStream;
use crate::error::{Error, Result};
use crate::krylov::{extremal_eigenvalues, ExtremalOptions, Target};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            seed: 0x6e6f726d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<S> {
    /// `max(|θ_min|, |θ_max|)` over Ritz values; never exceeds the true norm.
    pub value: S,
    /// Residual of the Ritz pair attaining `value`.
    pub residual: S,
    pub iterations: usize,
}

/// Spectral norm of a symmetric operator via extremal Lanczos on both ends.
///
/// The result is a Rayleigh quotient, hence a lower bound on `‖A‖`, accurate
/// to relative `tol` once converged.
pub fn operator_norm_estimate<S: Real, O: LinearOperator<S> + ?Sized>(
    op: &O,
    opts: &NormOptions,
) -> Result<NormEstimate<S>> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tol = {} must be > 0", opts.tol)));
    }
    let dim = op.dim();
    if dim == 0 {
        return Ok(NormEstimate {
            value: S::zero(),
            residual: S::zero(),
            iterations: 0,
        });
    }
    let mut g = GaussianStream::new(opts.seed);
    let start: Vec<S> = (0..dim).map(|_| S::of(g.next_standard())).collect();
    let ext = extremal_eigenvalues(
        op,
        &start,
        Target::Both,
        &ExtremalOptions::new(opts.tol, opts.max_iter),
    )?;
    let (value, residual) = if ext.max.abs() >= ext.min.abs() {
        (ext.max.abs(), ext.max_residual)
    } else {
        (ext.min.abs(), ext.min_residual)
    };
    Ok(NormEstimate {
        value,
        residual,
        iterations: ext.iterations,
    })
}

/// `2√(r(N−r+1))`, an upper bound on `‖T_{B_r}‖` for `1 ≤ r ≤ ⌈N/2⌉`.
pub fn transverse_ball_norm_bound(r: usize, n: usize) -> Result<f64> {
    if n == 0 || r < 1 || r > n.div_ceil(2) {
        return Err(Error::invalid(format!(
            "ball norm bound needs 1 ≤ r ≤ ⌈N/2⌉, got r = {r}, N = {n}"
        )));
    }
    Ok(2.0 * ((r * (n - r + 1)) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, DisorderField, Sampler};
    use crate::hamiltonian::{ball, to_dense, Hamiltonian, Transverse, VertexSet};
    use crate::model::{ModelParameters, SpinConfiguration};

    fn exact_norm(op: &dyn LinearOperator<f64>) -> f64 {
        let ev = f64::symmetric_eigenvalues(&to_dense(op), op.dim()).unwrap();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    #[test]
    fn transverse_full_cube() {
        for n in [1usize, 4, 9, 12] {
            let t = Transverse::new(n).unwrap();
            let est = operator_norm_estimate::<f64, _>(&t, &NormOptions::default()).unwrap();
            assert!((est.value - n as f64).abs() <= 1e-8 * n as f64, "n={n} {est:?}");
            assert!(est.value <= n as f64 + 1e-12);
        }
    }

    #[test]
    fn diagonal_operator() {
        let params = ModelParameters::sk(10, 3).unwrap();
        let f: DisorderField = sample_field(&params, 5, Sampler::WalshSpectral).unwrap();
        let h = Hamiltonian::new(&f, 0.0).unwrap();
        let est = operator_norm_estimate(&h, &NormOptions::default()).unwrap();
        assert!((est.value - f.max_abs()).abs() <= 1e-8 * f.max_abs());
    }

    #[test]
    fn ball_bound_examples() {
        assert!((transverse_ball_norm_bound(3, 10).unwrap() - 2.0 * 24f64.sqrt()).abs() < 1e-14);
        assert!((transverse_ball_norm_bound(1, 7).unwrap() - 2.0 * 7f64.sqrt()).abs() < 1e-14);
        assert!(transverse_ball_norm_bound(0, 7).is_err());
        assert!(transverse_ball_norm_bound(5, 7).is_err());
        assert!(transverse_ball_norm_bound(4, 7).is_ok());

        let t = Transverse::new(10).unwrap();
        let b = ball(SpinConfiguration::new(0, 10).unwrap(), 3).unwrap();
        let est = operator_norm_estimate(&t.restrict::<f64>(&b).unwrap(), &NormOptions::default())
            .unwrap();
        assert!(est.value <= transverse_ball_norm_bound(3, 10).unwrap());

        // star graph: ‖T_{B_1}‖ = √N
        for n in [2usize, 5, 8] {
            let t = Transverse::new(n).unwrap();
            let b = ball(SpinConfiguration::new(1, n).unwrap(), 1).unwrap();
            let exact = exact_norm(&t.restrict::<f64>(&b).unwrap());
            assert!((exact - (n as f64).sqrt()).abs() < 1e-12);
        }
        let t = Transverse::new(4).unwrap();
        let b = ball(SpinConfiguration::new(0, 4).unwrap(), 2).unwrap();
        assert!(exact_norm(&t.restrict::<f64>(&b).unwrap()) <= 2.0 * 6f64.sqrt());
    }

    #[test]
    fn ball_bound_holds_by_dense_diagonalization() {
        for n in 1..=9usize {
            let t = Transverse::new(n).unwrap();
            for r in 1..=n.div_ceil(2) {
                let b = ball(SpinConfiguration::new(0, n).unwrap(), r).unwrap();
                let exact = exact_norm(&t.restrict::<f64>(&b).unwrap());
                assert!(exact <= transverse_ball_norm_bound(r, n).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn nested_regions_are_monotone() {
        let opts = NormOptions::default();
        let n = 11;
        let t = Transverse::new(n).unwrap();
        let c = SpinConfiguration::new(0b10110011001, n).unwrap();
        let mut prev = 0.0;
        for r in 0..=n {
            let b = ball(c, r).unwrap();
            let est = operator_norm_estimate(&t.restrict::<f64>(&b).unwrap(), &opts).unwrap();
            assert!(prev <= est.value + 2.0 * opts.tol, "r={r}");
            prev = est.value;
        }
        let empty = VertexSet::empty(n).unwrap();
        let est = operator_norm_estimate(&t.restrict::<f64>(&empty).unwrap(), &opts).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let t = Transverse::new(3).unwrap();
        let opts = NormOptions {
            tol: 0.0,
            ..NormOptions::default()
        };
        assert!(operator_norm_estimate::<f64, _>(&t, &opts).is_err());
    }
}
