//! Matrix-free operators on `ℓ²(Q_N)`.
//!
//! Vectors are indexed by the bit encoding of spin configurations. The
//! transverse operator `(Tx)(σ) = −Σ_j x(σ with spin j flipped)` is a loop of
//! XORs; neighbor contributions are always accumulated in ascending `j`, so
//! every matvec is bit-reproducible.

mod norm;
mod region;

pub use norm::{operator_norm_estimate, transverse_ball_norm_bound, NormEstimate, NormOptions};
pub use region::{ball, VertexSet};

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::krylov::norm as vec_norm;
use crate::model::check_dimension;
use crate::scalar::Real;

/// Largest region materialized as a compact dense matrix.
pub const COMPACT_DENSE_CAP: usize = 4096;

/// A symmetric linear map on vectors of length `dim()`.
pub trait LinearOperator<S: Real>: Sync {
    fn dim(&self) -> usize;

    /// `y ← A x`. Lengths are the caller's responsibility.
    fn apply_into(&self, x: &[S], y: &mut [S]);

    fn apply(&self, x: &[S]) -> Result<Vec<S>> {
        check_len(x.len(), self.dim())?;
        let mut y = vec![S::zero(); self.dim()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

fn check_len(len: usize, dim: usize) -> Result<()> {
    if len != dim {
        return Err(Error::invalid(format!(
            "vector has length {len}, operator dimension is {dim}"
        )));
    }
    Ok(())
}

impl<S: Real, O: LinearOperator<S> + ?Sized> LinearOperator<S> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        (**self).apply_into(x, y)
    }
}

/// Wraps a closure `(x, y) ↦ y ← A x`.
pub struct FnOperator<S, F> {
    dim: usize,
    f: F,
    _scalar: std::marker::PhantomData<fn() -> S>,
}

impl<S: Real, F: Fn(&[S], &mut [S]) + Sync> FnOperator<S, F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            _scalar: std::marker::PhantomData,
        }
    }
}

impl<S: Real, F: Fn(&[S], &mut [S]) + Sync> LinearOperator<S> for FnOperator<S, F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        (self.f)(x, y)
    }
}

/// The transverse-field operator `T` on `Q_N`.
#[derive(Clone, Copy, Debug)]
pub struct Transverse {
    n: usize,
}

impl Transverse {
    pub fn new(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `T` compressed to `region`.
    pub fn restrict<'a, S: Real>(&self, region: &'a VertexSet) -> Result<Restricted<'a, S>> {
        region.check_dim(self.n)?;
        Ok(Restricted {
            n: self.n,
            diagonal: None,
            gamma: S::one(),
            region,
        })
    }
}

#[inline]
fn neighbor_sum<S: Real>(x: &[S], s: usize, n: usize) -> S {
    let mut acc = S::zero();
    for j in 0..n {
        acc = acc + x[s ^ (1 << j)];
    }
    acc
}

impl<S: Real> LinearOperator<S> for Transverse {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        for (s, ys) in y.iter_mut().enumerate() {
            *ys = -neighbor_sum(x, s, self.n);
        }
    }
}

/// `(Tx)(σ) = −Σ_j x(flip(σ, j))`.
pub fn apply_transverse<S: Real>(n: usize, x: &[S]) -> Result<Vec<S>> {
    Transverse::new(n)?.apply(x)
}

/// `H = U + ΓT` for one disorder realization.
#[derive(Clone, Copy, Debug)]
pub struct Hamiltonian<'a, S: Real = f64> {
    field: &'a DisorderField<S>,
    gamma: S,
}

impl<'a, S: Real> Hamiltonian<'a, S> {
    pub fn new(field: &'a DisorderField<S>, gamma: S) -> Result<Self> {
        if !(gamma >= S::zero()) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma = {gamma} must be ≥ 0")));
        }
        Ok(Self { field, gamma })
    }

    pub fn field(&self) -> &'a DisorderField<S> {
        self.field
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    /// `P_R H P_R`.
    pub fn restrict<'r>(&self, region: &'r VertexSet) -> Result<Restricted<'r, S>>
    where
        'a: 'r,
    {
        region.check_dim(self.n())?;
        Ok(Restricted {
            n: self.n(),
            diagonal: Some(self.field.values()),
            gamma: self.gamma,
            region,
        })
    }

    /// Row-major dense matrix of `H`.
    pub fn dense(&self) -> Vec<S> {
        let dim = self.field.dim();
        let n = self.n();
        let mut m = vec![S::zero(); dim * dim];
        for s in 0..dim {
            m[s * dim + s] = self.field.values()[s];
            for j in 0..n {
                m[s * dim + (s ^ (1 << j))] = -self.gamma;
            }
        }
        m
    }
}

impl<S: Real> LinearOperator<S> for Hamiltonian<'_, S> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        let n = self.n();
        let u = self.field.values();
        for (s, ys) in y.iter_mut().enumerate() {
            *ys = u[s] * x[s] - self.gamma * neighbor_sum(x, s, n);
        }
    }
}

/// `y(σ) = U(σ) x(σ) + Γ (Tx)(σ)`.
pub fn apply_hamiltonian<S: Real>(op: &Hamiltonian<'_, S>, x: &[S]) -> Result<Vec<S>> {
    op.apply(x)
}

/// A diagonal-plus-transverse operator compressed to a vertex subset:
/// zero outside the region, and only couplings between members inside.
#[derive(Clone, Copy, Debug)]
pub struct Restricted<'a, S: Real> {
    n: usize,
    diagonal: Option<&'a [S]>,
    gamma: S,
    region: &'a VertexSet,
}

impl<'a, S: Real> Restricted<'a, S> {
    pub fn region(&self) -> &'a VertexSet {
        self.region
    }

    /// Dense matrix over the region's members (in index order).
    pub fn compact_dense(&self) -> Result<Vec<S>> {
        let members = self.region.indices();
        let m = members.len();
        if m > COMPACT_DENSE_CAP {
            return Err(Error::resource(format!(
                "region of {m} vertices exceeds the compact dense cap {COMPACT_DENSE_CAP}"
            )));
        }
        let mut pos = std::collections::HashMap::with_capacity(m);
        for (k, &i) in members.iter().enumerate() {
            pos.insert(i, k);
        }
        let mut dense = vec![S::zero(); m * m];
        for (k, &i) in members.iter().enumerate() {
            if let Some(d) = self.diagonal {
                dense[k * m + k] = d[i as usize];
            }
            for j in 0..self.n {
                if let Some(&l) = pos.get(&(i ^ (1 << j))) {
                    dense[k * m + l] = -self.gamma;
                }
            }
        }
        Ok(dense)
    }
}

impl<S: Real> LinearOperator<S> for Restricted<'_, S> {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        y.iter_mut().for_each(|v| *v = S::zero());
        for &i in self.region.indices() {
            let s = i as usize;
            let mut acc = S::zero();
            for j in 0..self.n {
                let t = s ^ (1 << j);
                if self.region.contains_index(t) {
                    acc = acc + x[t];
                }
            }
            let diag = self.diagonal.map_or(S::zero(), |d| d[s] * x[s]);
            y[s] = diag - self.gamma * acc;
        }
    }
}

/// `P_R H P_R x`.
pub fn apply_restricted<S: Real>(
    op: &Hamiltonian<'_, S>,
    region: &VertexSet,
    x: &[S],
) -> Result<Vec<S>> {
    op.restrict(region)?.apply(x)
}

/// Projector sandwich `P_R A P_R` around an arbitrary operator.
pub struct Projected<'a, O> {
    inner: O,
    region: &'a VertexSet,
}

impl<'a, O> Projected<'a, O> {
    pub fn new(inner: O, region: &'a VertexSet) -> Self {
        Self { inner, region }
    }
}

impl<S: Real, O: LinearOperator<S>> LinearOperator<S> for Projected<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        let masked: Vec<S> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.region.contains_index(i) { v } else { S::zero() })
            .collect();
        self.inner.apply_into(&masked, y);
        for (i, v) in y.iter_mut().enumerate() {
            if !self.region.contains_index(i) {
                *v = S::zero();
            }
        }
    }
}

/// The hypercube edges touching a set `L`:
/// `⟨σ|A|σ'⟩ = 1` iff `d(σ, σ') = 1` and `σ ∈ L` or `σ' ∈ L`.
#[derive(Clone, Copy, Debug)]
pub struct Boundary<'a> {
    set: &'a VertexSet,
}

impl<'a> Boundary<'a> {
    pub fn new(set: &'a VertexSet) -> Self {
        Self { set }
    }
}

impl<S: Real> LinearOperator<S> for Boundary<'_> {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn apply_into(&self, x: &[S], y: &mut [S]) {
        let n = self.set.n();
        for (s, ys) in y.iter_mut().enumerate() {
            let inside = self.set.contains_index(s);
            let mut acc = S::zero();
            for j in 0..n {
                let t = s ^ (1 << j);
                if inside || self.set.contains_index(t) {
                    acc = acc + x[t];
                }
            }
            *ys = acc;
        }
    }
}

/// Applies `A_L` for the set `L`.
pub fn apply_boundary<S: Real>(set: &VertexSet, x: &[S]) -> Result<Vec<S>> {
    Boundary::new(set).apply(x)
}

/// `‖Hx − (U_L ⊕ H_{L^c} − ΓA_L)x‖ / ‖x‖` with `L = {σ : U(σ) < −εN}`.
pub fn decomposition_residual<S: Real>(op: &Hamiltonian<'_, S>, eps: S, x: &[S]) -> Result<S> {
    let field = op.field();
    check_len(x.len(), field.dim())?;
    let threshold = -eps * S::of_usize(field.n());
    let deep = VertexSet::from_indices(
        field.n(),
        field
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &u)| u < threshold)
            .map(|(i, _)| i as u32),
    )?;
    let rest = deep.complement();
    let whole = op.apply(x)?;

    let diag_part = Restricted {
        n: field.n(),
        diagonal: Some(field.values()),
        gamma: S::zero(),
        region: &deep,
    }
    .apply(x)?;
    let outside = op.restrict(&rest)?.apply(x)?;
    let boundary = apply_boundary(&deep, x)?;
    let diff: Vec<S> = (0..x.len())
        .map(|i| whole[i] - (diag_part[i] + outside[i] - op.gamma() * boundary[i]))
        .collect();
    let xn = vec_norm(x);
    if xn == S::zero() {
        return Ok(S::zero());
    }
    Ok(vec_norm(&diff) / xn)
}

/// Dense row-major matrix of any operator, column by column.
pub fn to_dense<S: Real, O: LinearOperator<S> + ?Sized>(op: &O) -> Vec<S> {
    let dim = op.dim();
    let mut m = vec![S::zero(); dim * dim];
    let mut e = vec![S::zero(); dim];
    let mut col = vec![S::zero(); dim];
    for j in 0..dim {
        e[j] = S::one();
        op.apply_into(&e, &mut col);
        e[j] = S::zero();
        for i in 0..dim {
            m[i * dim + j] = col[i];
        }
    }
    m
}
