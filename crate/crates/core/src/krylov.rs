//! Symmetric Lanczos machinery: tridiagonalization with full
//! reorthogonalization, an implicit QL eigensolver for the resulting
//! tridiagonal matrix, and a restarted extremal-eigenvalue driver.

use crate::error::{Error, Result};
use crate::hamiltonian::LinearOperator;
use crate::scalar::Real;

#[inline]
pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

#[inline]
fn axpy<S: Real>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct TridiagonalEigen<S> {
    /// Ascending eigenvalues.
    pub values: Vec<S>,
    /// For each requested row `r`, `rows[r][i]` is component `r` of eigenvector `i`.
    pub rows: Vec<Vec<S>>,
}

/// Implicit QL with Wilkinson shifts on the tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
///
/// Only the eigenvector rows listed in `rows` are accumulated; the rotations
/// act on columns, so each row evolves independently. Asking for the first
/// and last rows costs `O(n²)` overall.
pub fn tridiagonal_eigen<S: Real>(
    diag: &[S],
    off: &[S],
    rows: &[usize],
) -> Result<TridiagonalEigen<S>> {
    let n = diag.len();
    if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
        return Err(Error::invalid(format!(
            "tridiagonal matrix of order {n} needs {} off-diagonal entries, got {}",
            n.saturating_sub(1),
            off.len()
        )));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::invalid(format!("row {r} out of range for order {n}")));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(S::zero());
    let mut z: Vec<Vec<S>> = rows
        .iter()
        .map(|&r| (0..n).map(|i| if i == r { S::one() } else { S::zero() }).collect())
        .collect();
    let two = S::of(2.0);
    let eps = S::epsilon();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence {
                    message: "tridiagonal QL iteration limit".into(),
                    best: d[l].to_f64_lossy(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(S::one());
            g = d[m] - d[l] + e[l] / (g + if g >= S::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (S::one(), S::one(), S::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == S::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = S::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for zr in z.iter_mut() {
                    let f = zr[i + 1];
                    zr[i + 1] = s * zr[i] + c * f;
                    zr[i] = c * zr[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = S::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    Ok(TridiagonalEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        rows: z
            .iter()
            .map(|zr| order.iter().map(|&i| zr[i]).collect())
            .collect(),
    })
}

/// Output of a Lanczos tridiagonalization.
#[derive(Clone, Debug)]
pub struct LanczosRun<S> {
    pub alpha: Vec<S>,
    /// `beta[k]` couples basis vectors `k` and `k + 1`; one entry per step,
    /// the last being the residual norm.
    pub beta: Vec<S>,
    /// Orthonormal Krylov basis (kept only with full reorthogonalization).
    pub basis: Vec<Vec<S>>,
    /// True if the Krylov space became invariant before the step limit.
    pub invariant: bool,
}

impl<S: Real> LanczosRun<S> {
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// Off-diagonal entries of the `steps × steps` tridiagonal matrix.
    pub fn off_diagonal(&self) -> &[S] {
        &self.beta[..self.alpha.len().saturating_sub(1)]
    }

    pub fn residual_norm(&self) -> S {
        self.beta.last().copied().unwrap_or_else(S::zero)
    }
}

/// Whether to keep the whole basis and reorthogonalize against it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reorthogonalization {
    Full,
    /// Three-term recurrence only; `O(dim)` memory.
    None,
}

/// Incremental Lanczos process, so callers can inspect the tridiagonal
/// matrix between steps.
pub struct Lanczos<'a, S: Real, O: LinearOperator<S> + ?Sized> {
    op: &'a O,
    reorth: Reorthogonalization,
    run: LanczosRun<S>,
    current: Vec<S>,
    previous: Vec<S>,
    work: Vec<S>,
    scale: S,
}

impl<'a, S: Real, O: LinearOperator<S> + ?Sized> Lanczos<'a, S, O> {
    pub fn new(op: &'a O, start: &[S], reorth: Reorthogonalization) -> Result<Self> {
        let dim = op.dim();
        if start.len() != dim {
            return Err(Error::invalid(format!(
                "start vector has length {}, operator dimension is {dim}",
                start.len()
            )));
        }
        let nrm = norm(start);
        if !(nrm > S::zero()) || !nrm.is_finite() {
            return Err(Error::invalid("start vector must be nonzero and finite"));
        }
        let current: Vec<S> = start.iter().map(|&x| x / nrm).collect();
        let mut run = LanczosRun {
            alpha: Vec::new(),
            beta: Vec::new(),
            basis: Vec::new(),
            invariant: false,
        };
        if reorth == Reorthogonalization::Full {
            run.basis.push(current.clone());
        }
        Ok(Self {
            op,
            reorth,
            run,
            current,
            previous: vec![S::zero(); dim],
            work: vec![S::zero(); dim],
            scale: S::zero(),
        })
    }

    /// Performs one step; returns `false` once the Krylov space is invariant.
    pub fn step(&mut self) -> bool {
        if self.run.invariant {
            return false;
        }
        self.op.apply_into(&self.current, &mut self.work);
        let alpha = dot(&self.current, &self.work);
        let beta_prev = self.run.beta.last().copied().unwrap_or_else(S::zero);
        axpy(-alpha, &self.current, &mut self.work);
        axpy(-beta_prev, &self.previous, &mut self.work);
        if self.reorth == Reorthogonalization::Full {
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for v in &self.run.basis {
                    let c = dot(v, &self.work);
                    axpy(-c, v, &mut self.work);
                }
            }
        }
        let beta = norm(&self.work);
        self.scale = self.scale.max(alpha.abs()).max(beta);
        self.run.alpha.push(alpha);
        self.run.beta.push(beta);
        let tiny = S::of(64.0) * S::epsilon() * self.scale.max(S::min_positive_value());
        if beta <= tiny || self.run.alpha.len() >= self.op.dim() {
            self.run.invariant = true;
            if let Some(b) = self.run.beta.last_mut() {
                *b = S::zero();
            }
            return false;
        }
        std::mem::swap(&mut self.previous, &mut self.current);
        for (c, &w) in self.current.iter_mut().zip(&self.work) {
            *c = w / beta;
        }
        if self.reorth == Reorthogonalization::Full {
            self.run.basis.push(self.current.clone());
        }
        true
    }

    pub fn run(&self) -> &LanczosRun<S> {
        &self.run
    }

    pub fn into_run(mut self) -> LanczosRun<S> {
        if self.reorth == Reorthogonalization::Full {
            // the last pushed vector is the (unused) next direction
            self.run.basis.truncate(self.run.alpha.len());
        }
        self.run
    }

    pub fn scale(&self) -> S {
        self.scale
    }
}

/// Runs up to `steps` Lanczos steps from `start`.
pub fn lanczos<S: Real, O: LinearOperator<S> + ?Sized>(
    op: &O,
    start: &[S],
    steps: usize,
    reorth: Reorthogonalization,
) -> Result<LanczosRun<S>> {
    let mut l = Lanczos::new(op, start, reorth)?;
    for _ in 0..steps {
        if !l.step() {
            break;
        }
    }
    Ok(l.into_run())
}

/// Which end(s) of the spectrum an extremal solve must converge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Smallest,
    Largest,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremalOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Total operator applications allowed, across restarts.
    pub max_iter: usize,
    /// Largest Krylov basis kept before an explicit restart.
    pub max_basis: usize,
}

impl ExtremalOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            max_basis: 0,
        }
    }

    fn basis_limit(&self, dim: usize) -> usize {
        if self.max_basis > 0 {
            return self.max_basis.min(dim).max(2.min(dim));
        }
        // keep the basis under ~1 GiB of f64
        let by_memory = (1usize << 27) / dim.max(1);
        by_memory.clamp(24, 300).min(dim)
    }
}

/// Converged extremal Ritz values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremes<S> {
    pub min: S,
    pub max: S,
    pub min_residual: S,
    pub max_residual: S,
    pub iterations: usize,
}

/// Restarted Lanczos with full reorthogonalization for the extreme
/// eigenvalues of a symmetric operator.
///
/// Ritz values always lie inside the spectrum, so `min` and `max` bracket
/// from the inside even without convergence. A pair `(θ, y)` is accepted when
/// its residual `β_k |y_k|` is at most `tol · max(|θ|, spectral scale)`.
pub fn extremal_eigenvalues<S: Real, O: LinearOperator<S> + ?Sized>(
    op: &O,
    start: &[S],
    target: Target,
    opts: &ExtremalOptions,
) -> Result<Extremes<S>> {
    let dim = op.dim();
    let limit = opts.basis_limit(dim);
    let tol = S::of(opts.tol);
    let mut start = start.to_vec();
    let mut iterations = 0;
    let mut best: Option<Extremes<S>> = None;

    while iterations < opts.max_iter {
        let mut l = Lanczos::new(op, &start, Reorthogonalization::Full)?;
        let (ok_min, ok_max) = loop {
            let more = l.step();
            iterations += 1;
            let k = l.run().steps();
            let at_limit = k >= limit || iterations >= opts.max_iter;
            if more && !at_limit && k % 5 != 0 {
                continue;
            }
            let run = l.run();
            let eig = tridiagonal_eigen(&run.alpha, run.off_diagonal(), &[k - 1])?;
            let resid = run.residual_norm();
            let last = &eig.rows[0];
            let ext = Extremes {
                min: eig.values[0],
                max: eig.values[k - 1],
                min_residual: (resid * last[0]).abs(),
                max_residual: (resid * last[k - 1]).abs(),
                iterations,
            };
            let scale = l.scale().max(S::min_positive_value());
            let ok_min = ext.min_residual <= tol * ext.min.abs().max(scale * S::epsilon().sqrt());
            let ok_max = ext.max_residual <= tol * ext.max.abs().max(scale * S::epsilon().sqrt());
            let done = !more
                || match target {
                    Target::Smallest => ok_min,
                    Target::Largest => ok_max,
                    Target::Both => ok_min && ok_max,
                };
            best = Some(ext);
            if done {
                return Ok(ext);
            }
            if at_limit {
                break (ok_min, ok_max);
            }
        };
        // explicit restart from the unconverged Ritz vector(s)
        let run = l.into_run();
        let k = run.steps();
        let rows: Vec<usize> = (0..k).collect();
        let full = tridiagonal_eigen(&run.alpha, run.off_diagonal(), &rows)?;
        let mut pick = Vec::new();
        match target {
            Target::Smallest => pick.push(0),
            Target::Largest => pick.push(k - 1),
            Target::Both => {
                if !ok_min {
                    pick.push(0);
                }
                if !ok_max {
                    pick.push(k - 1);
                }
            }
        }
        start = vec![S::zero(); dim];
        for &i in &pick {
            for (j, v) in run.basis.iter().enumerate() {
                axpy(full.rows[j][i], v, &mut start);
            }
        }
    }
    let b = best.expect("at least one check");
    Err(Error::NonConvergence {
        message: format!(
            "extremal Lanczos after {} operator applications (bracket [{}, {}])",
            b.iterations, b.min, b.max
        ),
        best: b.max.abs().max(b.min.abs()).to_f64_lossy(),
    })
}
