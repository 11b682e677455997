//! Configuration space: spin configurations on the hypercube `Q_N`, Hamming
//! geometry, overlaps, and model parameters.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported number of spins.
pub const MAX_SPINS: usize = 30;

/// A vertex of `Q_N`. Bit `j` set means `σ_j = +1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    bits: u32,
    n: u8,
}

impl SpinConfiguration {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        check_dimension(n)?;
        if u64::from(bits) >> n != 0 {
            return Err(Error::invalid(format!(
                "bit pattern {bits:#b} has bits above dimension {n}"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    /// Builds a configuration from explicit `±1` spins, `spins[j] = σ_j`.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u32;
        for (j, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << j,
                -1 => {}
                _ => return Err(Error::invalid(format!("spin value {s} is not ±1"))),
            }
        }
        Self::new(bits, spins.len())
    }

    /// Unchecked constructor for hot loops; `bits < 2^n` must hold.
    #[inline]
    pub(crate) fn from_index(index: usize, n: usize) -> Self {
        debug_assert!(index >> n == 0);
        Self {
            bits: index as u32,
            n: n as u8,
        }
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn index(self) -> usize {
        self.bits as usize
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n as usize
    }

    /// `σ_j ∈ {−1, +1}`.
    pub fn spin(self, j: usize) -> i8 {
        if self.bits >> j & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn spins(self) -> Vec<i8> {
        (0..self.n()).map(|j| self.spin(j)).collect()
    }

    pub fn flip(self, j: usize) -> Result<Self> {
        if j >= self.n() {
            return Err(Error::invalid(format!(
                "coordinate {j} out of range for N = {}",
                self.n
            )));
        }
        Ok(Self {
            bits: self.bits ^ (1 << j),
            n: self.n,
        })
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & mask(self.n()),
            n: self.n,
        }
    }

    pub fn hamming_distance(self, other: Self) -> Result<u32> {
        same_dimension(self, other)?;
        Ok((self.bits ^ other.bits).count_ones())
    }

    /// `ξ(a, b) = N⁻¹ Σ_j σ_j σ'_j = 1 − 2 d(a, b) / N`.
    pub fn overlap(self, other: Self) -> Result<f64> {
        let d = self.hamming_distance(other)?;
        let n = self.n() as f64;
        Ok((n - 2.0 * f64::from(d)) / n)
    }
}

impl fmt::Debug for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ[")?;
        for j in 0..self.n() {
            f.write_str(if self.spin(j) > 0 { "+" } else { "-" })?;
        }
        write!(f, "]")
    }
}

/// Free-function forms mirroring the methods.
pub fn overlap(a: SpinConfiguration, b: SpinConfiguration) -> Result<f64> {
    a.overlap(b)
}

pub fn hamming_distance(a: SpinConfiguration, b: SpinConfiguration) -> Result<u32> {
    a.hamming_distance(b)
}

pub fn flip(a: SpinConfiguration, j: usize) -> Result<SpinConfiguration> {
    a.flip(j)
}

/// All `2^N` vertices in index order.
pub fn enumerate(n: usize) -> Result<impl Iterator<Item = SpinConfiguration>> {
    check_dimension(n)?;
    Ok((0..1usize << n).map(move |i| SpinConfiguration::from_index(i, n)))
}

#[inline]
pub(crate) fn mask(n: usize) -> u32 {
    ((1u64 << n) - 1) as u32
}

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::invalid(format!(
            "spin count {n} outside 1..={MAX_SPINS}"
        )));
    }
    Ok(())
}

fn same_dimension(a: SpinConfiguration, b: SpinConfiguration) -> Result<()> {
    if a.n != b.n {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.n, b.n
        )));
    }
    Ok(())
}

/// Interaction order `p`; `Infinite` is the random energy model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn finite(self) -> Option<u32> {
        match self {
            Order::Finite(p) => Some(p),
            Order::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }

    /// `⌈N/p⌉`, taken as 1 for `p = ∞`.
    pub fn ball_scale(self, n: usize) -> usize {
        match self {
            Order::Finite(p) => n.div_ceil(p as usize),
            Order::Infinite => 1,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(p) => write!(f, "{p}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Order::Infinite),
            t => t
                .parse::<u32>()
                .map(Order::Finite)
                .map_err(|_| Error::invalid(format!("cannot parse order `{s}`"))),
        }
    }
}

// Serialized as an integer, or the string "inf".
impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(p) => s.serialize_u32(*p),
            Order::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(p) => Ok(Order::Finite(p)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Full-tuple p-spin sum (SK for p = 2).
    Sk,
    /// Strictly increasing index tuples.
    Spherical,
    /// Independent energies, `p = ∞`.
    Rem,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Sk => "sk",
            ModelKind::Spherical => "spherical",
            ModelKind::Rem => "rem",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub n: usize,
    pub p: Order,
    pub gamma: f64,
    pub beta: f64,
    pub kind: ModelKind,
}

impl ModelParameters {
    pub fn new(n: usize, p: Order, gamma: f64, beta: f64, kind: ModelKind) -> Result<Self> {
        let params = Self {
            n,
            p,
            gamma,
            beta,
            kind,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn sk(n: usize, p: u32) -> Result<Self> {
        Self::new(n, Order::Finite(p), 0.0, 0.0, ModelKind::Sk)
    }

    pub fn spherical(n: usize, p: u32) -> Result<Self> {
        Self::new(n, Order::Finite(p), 0.0, 0.0, ModelKind::Spherical)
    }

    pub fn rem(n: usize) -> Result<Self> {
        Self::new(n, Order::Infinite, 0.0, 0.0, ModelKind::Rem)
    }

    pub fn with_temperature(mut self, beta: f64, gamma: f64) -> Result<Self> {
        self.beta = beta;
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.n)?;
        if (self.kind == ModelKind::Rem) != self.p.is_infinite() {
            return Err(Error::invalid(format!(
                "kind {} is incompatible with order p = {}",
                self.kind, self.p
            )));
        }
        if self.p == Order::Finite(0) {
            return Err(Error::invalid("order p must be at least 1"));
        }
        if self.kind == ModelKind::Spherical && self.p.finite().unwrap_or(0) as usize > self.n {
            return Err(Error::invalid(format!(
                "spherical model needs p ≤ N, got p = {} and N = {}",
                self.p, self.n
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma = {} must be ≥ 0", self.gamma)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta = {} must be ≥ 0", self.beta)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(spins: &[i8]) -> SpinConfiguration {
        SpinConfiguration::from_spins(spins).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = cfg(&[1, 1, -1, -1]);
        let b = cfg(&[1, -1, 1, -1]);
        assert_eq!(a.overlap(a).unwrap(), 1.0);
        assert_eq!(a.overlap(a.complement()).unwrap(), -1.0);
        assert_eq!(a.overlap(b).unwrap(), 0.0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hamming_distance(cfg(&[1, 1, 1]), cfg(&[-1, 1, 1])).unwrap(), 1);
        let zero = SpinConfiguration::new(0, 5).unwrap();
        let ones = SpinConfiguration::new(0b11111, 5).unwrap();
        assert_eq!(hamming_distance(zero, ones).unwrap(), 5);
        assert_eq!(hamming_distance(zero, zero).unwrap(), 0);
    }

    #[test]
    fn flip_examples() {
        assert_eq!(cfg(&[1]).flip(0).unwrap(), cfg(&[-1]));
        assert_eq!(cfg(&[1, 1, 1, 1]).flip(2).unwrap(), cfg(&[1, 1, -1, 1]));
        let s = cfg(&[1, -1, 1]);
        assert_eq!(s.flip(1).unwrap().flip(1).unwrap(), s);
    }

    #[test]
    fn errors_on_mismatch_and_range() {
        let a = SpinConfiguration::new(0, 3).unwrap();
        let b = SpinConfiguration::new(0, 4).unwrap();
        assert!(matches!(a.overlap(b), Err(Error::InvalidArgument(_))));
        assert!(matches!(a.hamming_distance(b), Err(Error::InvalidArgument(_))));
        assert!(matches!(a.flip(3), Err(Error::InvalidArgument(_))));
        assert!(SpinConfiguration::new(0b1000, 3).is_err());
        assert!(SpinConfiguration::new(0, 31).is_err());
        assert!(SpinConfiguration::new(0, 0).is_err());
    }

    #[test]
    fn overlap_matches_distance_exhaustively() {
        for n in 1..=6 {
            for a in enumerate(n).unwrap() {
                for b in enumerate(n).unwrap() {
                    let d = a.hamming_distance(b).unwrap() as f64;
                    let direct: i32 = (0..n).map(|j| (a.spin(j) * b.spin(j)) as i32).sum();
                    assert_eq!(a.overlap(b).unwrap(), direct as f64 / n as f64);
                    assert!((a.overlap(b).unwrap() - (1.0 - 2.0 * d / n as f64)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn neighbor_counts() {
        for n in 1..=8 {
            let all: Vec<_> = enumerate(n).unwrap().collect();
            assert_eq!(all.len(), 1 << n);
            let distinct: std::collections::HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), 1 << n);
            let a = all[(1 << n) / 3];
            let d1 = all.iter().filter(|b| a.hamming_distance(**b).unwrap() == 1).count();
            let d2 = all.iter().filter(|b| a.hamming_distance(**b).unwrap() == 2).count();
            assert_eq!(d1, n);
            assert_eq!(d2, n * (n - 1) / 2);
        }
    }

    #[test]
    fn parameter_invariants() {
        assert!(ModelParameters::new(4, Order::Infinite, 0.0, 1.0, ModelKind::Sk).is_err());
        assert!(ModelParameters::new(4, Order::Finite(2), 0.0, 1.0, ModelKind::Rem).is_err());
        assert!(ModelParameters::new(4, Order::Finite(0), 0.0, 1.0, ModelKind::Sk).is_err());
        assert!(ModelParameters::new(4, Order::Finite(2), -1.0, 1.0, ModelKind::Sk).is_err());
        assert!(ModelParameters::spherical(3, 4).is_err());
        assert!(ModelParameters::rem(10).is_ok());
    }

    #[test]
    fn order_serde() {
        let json = serde_json::to_string(&[Order::Finite(3), Order::Infinite]).unwrap();
        assert_eq!(json, r#"[3,"inf"]"#);
        let back: Vec<Order> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Order::Finite(3), Order::Infinite]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flip_is_an_involution(n in 1usize..=30, raw in any::<u32>(), j in 0usize..30) {
                let s = SpinConfiguration::new(raw & mask(n), n).unwrap();
                prop_assume!(j < n);
                let f = s.flip(j).unwrap();
                prop_assert_eq!(s.hamming_distance(f).unwrap(), 1);
                prop_assert_eq!(f.flip(j).unwrap(), s);
                prop_assert_eq!(f.bits() >> n, 0);
            }
        }
    }
}
