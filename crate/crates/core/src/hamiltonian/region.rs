use crate::error::{Error, Result};
use crate::model::{check_dimension, SpinConfiguration};

/// A subset of `Q_N`, stored both as a sorted index list and as a bitset.
#[derive(Clone, PartialEq, Eq)]
pub struct VertexSet {
    n: usize,
    members: Vec<u32>,
    bits: Vec<u64>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_indices(n, std::iter::empty())
    }

    pub fn full(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Self::from_indices(n, 0..1u32 << n)
    }

    /// Builds a set from vertex indices; duplicates are dropped.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = u32>) -> Result<Self> {
        check_dimension(n)?;
        let dim = 1usize << n;
        let mut bits = vec![0u64; dim.div_ceil(64)];
        for i in indices {
            if i as usize >= dim {
                return Err(Error::invalid(format!("vertex {i} outside Q_{n}")));
            }
            bits[i as usize / 64] |= 1 << (i % 64);
        }
        let members = bits
            .iter()
            .enumerate()
            .flat_map(|(w, &word)| {
                let mut word = word;
                std::iter::from_fn(move || {
                    (word != 0).then(|| {
                        let b = word.trailing_zeros();
                        word &= word - 1;
                        (w as u32) * 64 + b
                    })
                })
            })
            .collect();
        Ok(Self { n, members, bits })
    }

    pub fn from_configurations(n: usize, configs: &[SpinConfiguration]) -> Result<Self> {
        if let Some(c) = configs.iter().find(|c| c.n() != n) {
            return Err(Error::invalid(format!(
                "configuration of dimension {} in a set over Q_{n}",
                c.n()
            )));
        }
        Self::from_indices(n, configs.iter().map(|c| c.bits()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn contains(&self, s: SpinConfiguration) -> bool {
        s.n() == self.n && self.contains_index(s.index())
    }

    /// Sorted member indices.
    pub fn indices(&self) -> &[u32] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = SpinConfiguration> + '_ {
        self.members
            .iter()
            .map(move |&i| SpinConfiguration::from_index(i as usize, self.n))
    }

    pub fn complement(&self) -> Self {
        let dim = self.dim();
        Self::from_indices(
            self.n,
            (0..dim as u32).filter(|&i| !self.contains_index(i as usize)),
        )
        .expect("same dimension")
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.n == other.n && self.members.iter().all(|&i| other.contains_index(i as usize))
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::invalid(format!(
                "vertex set over Q_{} used with an operator on Q_{n}",
                self.n
            )));
        }
        Ok(())
    }
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VertexSet")
            .field("n", &self.n)
            .field("members", &self.members)
            .finish()
    }
}

/// Hamming ball `B_r(center)`.
pub fn ball(center: SpinConfiguration, r: usize) -> Result<VertexSet> {
    let n = center.n();
    if r > n {
        return Err(Error::invalid(format!("radius {r} exceeds N = {n}")));
    }
    let c = center.bits();
    VertexSet::from_indices(
        n,
        (0..1u32 << n).filter(|&i| ((i ^ c).count_ones() as usize) <= r),
    )
}
