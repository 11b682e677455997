//! Gaussian disorder on the hypercube: exact samplers for the SK-type field,
//! the spherical variant, and the i.i.d. REM field, plus their covariances.

mod covariance;
pub mod rng;
pub mod walsh;

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use covariance::{exact_covariance, sk_covariance, spherical_delta_bound};
pub use walsh::{fwht, walsh_spectrum, WalshSpectrum, MAX_ORDER};

use crate::error::{Error, Result};
use crate::model::{mask, ModelKind, ModelParameters, Order};
use crate::scalar::Real;
use rng::GaussianStream;

/// Default cap on the number of couplings `N^p` drawn by the monomial sampler.
pub const DEFAULT_MONOMIAL_BUDGET: usize = 1 << 20;

/// Current version of the on-disk field format.
pub const FIELD_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Spectral sampling in the character basis followed by a fast transform.
    WalshSpectral,
    /// All `N^p` couplings, contracted against each configuration.
    NaiveMonomial,
    /// One coupling per strictly increasing index tuple.
    SphericalDirect,
    /// Independent `N(0, N)` energies.
    IidRem,
    /// Values supplied by the caller; not regenerable from a seed.
    Synthetic,
}

impl Sampler {
    /// The sampler the harness uses by default for a model kind.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Sk => Sampler::WalshSpectral,
            ModelKind::Spherical => Sampler::SphericalDirect,
            ModelKind::Rem => Sampler::IidRem,
        }
    }

    /// Whether this sampler can generate fields of `kind`.
    pub fn supports(self, kind: ModelKind) -> bool {
        matches!(
            (self, kind),
            (Sampler::WalshSpectral | Sampler::NaiveMonomial, ModelKind::Sk)
                | (Sampler::SphericalDirect, ModelKind::Spherical)
                | (Sampler::IidRem, ModelKind::Rem)
                | (Sampler::Synthetic, _)
        )
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| Error::invalid(format!("unknown sampler `{s}`")))
    }
}

/// One realization of the random energy `U` on all `2^N` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField<S: Real = f64> {
    values: Vec<S>,
    params: ModelParameters,
    seed: u64,
    sampler: Sampler,
}

impl<S: Real> DisorderField<S> {
    /// Wraps caller-provided energies (tests, planted fields).
    pub fn from_values(params: ModelParameters, values: Vec<S>) -> Result<Self> {
        params.validate()?;
        if values.len() != params.dim() {
            return Err(Error::invalid(format!(
                "field has {} values, expected 2^{} = {}",
                values.len(),
                params.n,
                params.dim()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite energy at vertex {i}")));
        }
        Ok(Self {
            values,
            params,
            seed: 0,
            sampler: Sampler::Synthetic,
        })
    }

    /// The identically-zero field.
    pub fn zero(params: ModelParameters) -> Result<Self> {
        Self::from_values(params, vec![S::zero(); params.dim()])
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.params.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> Sampler {
        self.sampler
    }

    pub fn min(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Adds a constant to every energy.
    pub fn shifted(&self, c: S) -> Self {
        Self {
            values: self.values.iter().map(|&v| v + c).collect(),
            params: self.params,
            seed: self.seed,
            sampler: Sampler::Synthetic,
        }
    }

    /// Writes `<stem>.f64` (little-endian f64 in vertex order) and the
    /// `<stem>.json` sidecar.
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let stem = stem.as_ref();
        let raw_path = stem.with_extension("f64");
        let meta_path = stem.with_extension("json");
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        fs::File::create(&raw_path)?.write_all(&bytes)?;
        let meta = FieldSidecar {
            n: self.params.n,
            p: self.params.p,
            kind: self.params.kind,
            seed: self.seed,
            sampler: self.sampler,
            format_version: FIELD_FORMAT_VERSION,
        };
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok((raw_path, meta_path))
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let meta: FieldSidecar =
            serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        if meta.format_version != FIELD_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported field format version {}",
                meta.format_version
            )));
        }
        let params = ModelParameters::new(meta.n, meta.p, 0.0, 0.0, meta.kind)?;
        let mut bytes = Vec::new();
        fs::File::open(stem.with_extension("f64"))?.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * params.dim() {
            return Err(Error::invalid(format!(
                "raw field has {} bytes, expected {}",
                bytes.len(),
                8 * params.dim()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| S::of(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect();
        let mut field = Self::from_values(params, values)?;
        field.seed = meta.seed;
        field.sampler = meta.sampler;
        Ok(field)
    }
}

/// JSON metadata stored next to a raw field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub n: usize,
    pub p: Order,
    pub kind: ModelKind,
    pub seed: u64,
    pub sampler: Sampler,
    pub format_version: u32,
}

/// Draws one realization.
pub fn sample_field<S: Real>(
    params: &ModelParameters,
    seed: u64,
    sampler: Sampler,
) -> Result<DisorderField<S>> {
    sample_field_with_budget(params, seed, sampler, DEFAULT_MONOMIAL_BUDGET)
}

/// As [`sample_field`], with an explicit cap on `N^p` for the monomial sampler.
pub fn sample_field_with_budget<S: Real>(
    params: &ModelParameters,
    seed: u64,
    sampler: Sampler,
    monomial_budget: usize,
) -> Result<DisorderField<S>> {
    params.validate()?;
    if sampler == Sampler::Synthetic || !sampler.supports(params.kind) {
        return Err(Error::invalid(format!(
            "sampler {sampler} cannot draw a {} field",
            params.kind
        )));
    }
    let n = params.n;
    let mut gauss = GaussianStream::new(seed);
    let values = match (sampler, params.p) {
        (Sampler::IidRem, _) => {
            let sd = (n as f64).sqrt();
            (0..params.dim())
                .map(|_| S::of(sd * gauss.next_standard()))
                .collect()
        }
        (Sampler::WalshSpectral, Order::Finite(p)) => walsh_sample(n, p, &mut gauss)?,
        (Sampler::NaiveMonomial, Order::Finite(p)) => {
            monomial_sample(n, p, &mut gauss, monomial_budget)?
        }
        (Sampler::SphericalDirect, Order::Finite(p)) => spherical_sample(n, p, &mut gauss),
        _ => unreachable!("sampler/kind compatibility checked above"),
    };
    Ok(DisorderField {
        values,
        params: *params,
        seed,
        sampler,
    })
}

/// Evaluates `Σ_A c_A χ_A(σ)` at every vertex. With bit `j` set meaning
/// `σ_j = +1`, `χ_A(σ) = (−1)^{|A ∧ ¬σ|}`, so the transform is read back at
/// the complemented index.
fn characters_to_values<S: Real>(n: usize, mut coeffs: Vec<S>) -> Vec<S> {
    fwht(&mut coeffs);
    let m = mask(n) as usize;
    (0..coeffs.len()).map(|s| coeffs[m ^ s]).collect()
}

fn walsh_sample<S: Real>(n: usize, p: u32, gauss: &mut GaussianStream) -> Result<Vec<S>> {
    let spectrum = walsh_spectrum(n, p)?;
    let scale: Vec<f64> = spectrum.lambda_by_weight.iter().map(|l| l.sqrt()).collect();
    let coeffs = (0..1usize << n)
        .map(|a| S::of(scale[a.count_ones() as usize] * gauss.next_standard()))
        .collect();
    Ok(characters_to_values(n, coeffs))
}

fn monomial_sample<S: Real>(
    n: usize,
    p: u32,
    gauss: &mut GaussianStream,
    budget: usize,
) -> Result<Vec<S>> {
    let count = (n as u128).checked_pow(p).unwrap_or(u128::MAX);
    if count > budget as u128 {
        return Err(Error::resource(format!(
            "monomial sampler would draw N^p = {n}^{p} couplings (budget {budget})"
        )));
    }
    let count = count as usize;
    // index = j_1 N^{p-1} + … + j_p
    let couplings: Vec<f64> = (0..count).map(|_| gauss.next_standard()).collect();
    let norm = (n as f64).powf(-(f64::from(p) - 1.0) / 2.0);
    let mut work = vec![0.0f64; count];
    let mut values = Vec::with_capacity(1 << n);
    for sigma in 0..1usize << n {
        let spin: Vec<f64> = (0..n)
            .map(|j| if sigma >> j & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        work.copy_from_slice(&couplings);
        let mut len = count;
        // contract the trailing index p times
        for _ in 0..p {
            len /= n;
            for r in 0..len {
                let row = &work[r * n..r * n + n];
                let s: f64 = row.iter().zip(&spin).map(|(g, s)| g * s).sum();
                work[r] = s;
            }
        }
        values.push(S::of(norm * work[0]));
    }
    Ok(values)
}

fn spherical_sample<S: Real>(n: usize, p: u32, gauss: &mut GaussianStream) -> Vec<S> {
    let p = p as usize;
    // sqrt(p!/N^{p-1}) = sqrt(N Π_{i ≤ p} i/N)
    let norm = (1..=p)
        .fold(n as f64, |acc, i| acc * i as f64 / n as f64)
        .sqrt();
    let mut coeffs = vec![S::zero(); 1 << n];
    // strictly increasing tuples in lexicographic order
    let mut tuple: Vec<usize> = (0..p).collect();
    loop {
        let set = tuple.iter().fold(0usize, |acc, &j| acc | 1 << j);
        coeffs[set] = S::of(norm * gauss.next_standard());
        let Some(i) = (0..p).rev().find(|&i| tuple[i] < n - p + i) else {
            break;
        };
        tuple[i] += 1;
        for k in i + 1..p {
            tuple[k] = tuple[k - 1] + 1;
        }
    }
    characters_to_values(n, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Evaluates the defining monomial sum directly for a known coupling array.
    #[test]
    fn monomial_contraction_matches_definition() {
        let (n, p) = (3usize, 3u32);
        let mut gauss = GaussianStream::new(11);
        let values: Vec<f64> = monomial_sample(n, p, &mut gauss, 1000).unwrap();
        let mut gauss = GaussianStream::new(11);
        let g: Vec<f64> = (0..27).map(|_| gauss.next_standard()).collect();
        for sigma in 0..8usize {
            let s = |j: usize| if sigma >> j & 1 == 1 { 1.0 } else { -1.0 };
            let mut direct = 0.0;
            for j1 in 0..3 {
                for j2 in 0..3 {
                    for j3 in 0..3 {
                        direct += g[j1 * 9 + j2 * 3 + j3] * s(j1) * s(j2) * s(j3);
                    }
                }
            }
            direct /= 3.0;
            assert!((values[sigma] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn spherical_direct_matches_definition() {
        let (n, p) = (5usize, 2u32);
        let mut gauss = GaussianStream::new(5);
        let values: Vec<f64> = spherical_sample(n, p, &mut gauss);
        let mut gauss = GaussianStream::new(5);
        let mut g = vec![vec![0.0; n]; n];
        for j1 in 0..n {
            for j2 in j1 + 1..n {
                g[j1][j2] = gauss.next_standard();
            }
        }
        for sigma in 0..1usize << n {
            let s = |j: usize| if sigma >> j & 1 == 1 { 1.0 } else { -1.0 };
            let mut direct = 0.0;
            for j1 in 0..n {
                for j2 in j1 + 1..n {
                    direct += g[j1][j2] * s(j1) * s(j2);
                }
            }
            direct *= (2.0 / n as f64).sqrt();
            assert!((values[sigma] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_walsh_field_is_linear() {
        // p = 1: U(σ) = Σ_j g_j σ_j, so U(σ) + U(¬σ) = 0.
        let params = ModelParameters::sk(6, 1).unwrap();
        let f: DisorderField = sample_field(&params, 9, Sampler::WalshSpectral).unwrap();
        for s in 0..64usize {
            assert!((f.values()[s] + f.values()[63 ^ s]).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_seeding() {
        for (params, sampler) in [
            (ModelParameters::sk(8, 3).unwrap(), Sampler::WalshSpectral),
            (ModelParameters::sk(5, 3).unwrap(), Sampler::NaiveMonomial),
            (ModelParameters::spherical(8, 3).unwrap(), Sampler::SphericalDirect),
            (ModelParameters::rem(8).unwrap(), Sampler::IidRem),
        ] {
            let a: DisorderField = sample_field(&params, 42, sampler).unwrap();
            let b: DisorderField = sample_field(&params, 42, sampler).unwrap();
            assert_eq!(a.values(), b.values());
            let c: DisorderField = sample_field(&params, 43, sampler).unwrap();
            assert_ne!(a.values(), c.values());
            assert!(a.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn sampler_compatibility_and_budget() {
        let sk = ModelParameters::sk(6, 2).unwrap();
        assert!(matches!(
            sample_field::<f64>(&sk, 0, Sampler::IidRem),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_field::<f64>(&sk, 0, Sampler::SphericalDirect),
            Err(Error::InvalidArgument(_))
        ));
        let rem = ModelParameters::rem(6).unwrap();
        assert!(sample_field::<f64>(&rem, 0, Sampler::WalshSpectral).is_err());
        let big = ModelParameters::sk(20, 6).unwrap();
        assert!(matches!(
            sample_field::<f64>(&big, 0, Sampler::NaiveMonomial),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn empirical_variance_sk_and_rem_covariance() {
        let m = 20_000;
        let sk = ModelParameters::sk(8, 2).unwrap();
        let rem = ModelParameters::rem(10).unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        let (mut r_ab, mut r_a, mut r_b) = (0.0, 0.0, 0.0);
        let (i, j) = (17usize, 900usize);
        for r in 0..m {
            let f: DisorderField = sample_field(&sk, rng::derive_seed(1, r), Sampler::WalshSpectral).unwrap();
            let u = f.values()[77];
            s1 += u;
            s2 += u * u;
            let g: DisorderField = sample_field(&rem, rng::derive_seed(2, r), Sampler::IidRem).unwrap();
            r_ab += g.values()[i] * g.values()[j];
            r_a += g.values()[i];
            r_b += g.values()[j];
        }
        let mf = m as f64;
        let var = (s2 - s1 * s1 / mf) / (mf - 1.0);
        assert!((var - 8.0).abs() < 5.0 * 8.0 * (2.0 / mf).sqrt(), "var = {var}");
        let cov = r_ab / mf - (r_a / mf) * (r_b / mf);
        // standard error of a product of independent N(0, 10) pair ≈ 10/√M
        assert!(cov.abs() < 5.0 * 10.0 / mf.sqrt(), "cov = {cov}");
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = ModelParameters::sk(7, 3).unwrap();
        let f: DisorderField = sample_field(&params, 1234, Sampler::WalshSpectral).unwrap();
        let (raw, meta) = f.save(dir.path().join("field")).unwrap();
        assert_eq!(std::fs::metadata(&raw).unwrap().len(), 8 * 128);
        let sidecar: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
        assert_eq!(sidecar["sampler"], "walsh_spectral");
        assert_eq!(sidecar["kind"], "sk");
        assert_eq!(sidecar["format_version"], 1);
        let g: DisorderField = DisorderField::load(dir.path().join("field")).unwrap();
        assert_eq!(f, g);
        let regen: DisorderField = sample_field(g.params(), g.seed(), g.sampler()).unwrap();
        assert_eq!(regen.values(), f.values());
    }

    #[test]
    fn f32_fields_track_f64() {
        let params = ModelParameters::sk(9, 4).unwrap();
        let a: DisorderField<f64> = sample_field(&params, 5, Sampler::WalshSpectral).unwrap();
        let b: DisorderField<f32> = sample_field(&params, 5, Sampler::WalshSpectral).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - *y as f64).abs() < 1e-4);
        }
    }
}
