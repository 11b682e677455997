//! Deviation sets, their edge-connected components, enclosing balls, and
//! edge-connected rays.
//!
//! Two members of a deviation set are edge-connected when joined by a path
//! of hypercube edges that each touch the set, with consecutive edges sharing
//! a vertex. That relation is the transitive closure of `d(σ, σ') ≤ 2`
//! (a path can pass through at most one outside vertex between members), so
//! components come from a union-find with merge radius 2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::hamiltonian::VertexSet;
use crate::model::SpinConfiguration;
use crate::scalar::Real;

/// Largest deviation set a cluster report will process.
pub const MAX_DEVIATION_SET: usize = 1_000_000;
/// Largest brute-force work allowed for ray enumeration.
pub const RAY_BUDGET: f64 = 1e7;
/// Candidate centers tried beyond the majority vertex.
const MAX_CENTER_CANDIDATES: usize = 4096;

/// `{σ : U(σ) < −εN}`.
pub fn deviation_set<S: Real>(field: &DisorderField<S>, eps: S) -> Result<VertexSet> {
    if !(eps > S::zero()) {
        return Err(Error::invalid(format!("eps = {eps} must be > 0")));
    }
    let threshold = -eps * S::of_usize(field.n());
    let members: Vec<u32> = field
        .values()
        .par_iter()
        .enumerate()
        .filter(|(_, &u)| u < threshold)
        .map(|(i, _)| i as u32)
        .collect();
    VertexSet::from_indices(field.n(), members)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
    }
}

/// Components under the distance-≤2 merge rule, ordered by smallest member.
pub fn edge_connected_components(set: &VertexSet) -> Vec<VertexSet> {
    let n = set.n();
    let members = set.indices();
    let mut uf = UnionFind::new(members.len());
    let position = |v: u32| members.binary_search(&v).ok();
    for (k, &v) in members.iter().enumerate() {
        for i in 0..n {
            let a = v ^ (1 << i);
            if set.contains_index(a as usize) {
                uf.union(k, position(a).expect("member"));
            }
            for j in i + 1..n {
                let b = a ^ (1 << j);
                if set.contains_index(b as usize) {
                    uf.union(k, position(b).expect("member"));
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
    let mut first_of_root = std::collections::HashMap::new();
    for (k, &v) in members.iter().enumerate() {
        let root = uf.find(k);
        let first = *first_of_root.entry(root).or_insert(k);
        groups.entry(first).or_default().push(v);
    }
    groups
        .into_values()
        .map(|g| VertexSet::from_indices(n, g).expect("members of a valid set"))
        .collect()
}

fn nonempty(component: &VertexSet) -> Result<()> {
    if component.is_empty() {
        return Err(Error::invalid("component must be nonempty"));
    }
    Ok(())
}

/// Coordinate-wise majority of the members; ties resolve to bit 0.
fn majority(component: &VertexSet) -> u32 {
    let m = component.len();
    let mut v = 0u32;
    for j in 0..component.n() {
        let ones = component.indices().iter().filter(|&&x| x >> j & 1 == 1).count();
        if 2 * ones > m {
            v |= 1 << j;
        }
    }
    v
}

/// `(max distance, number of members at that distance)` from `center`.
fn spread(center: u32, members: &[u32]) -> (u32, usize) {
    let mut worst = (0, 0);
    for &x in members {
        let d = (x ^ center).count_ones();
        if d > worst.0 {
            worst = (d, 1);
        } else if d == worst.0 {
            worst.1 += 1;
        }
    }
    worst
}

/// A ball containing the component. Candidate centers are the members and
/// the majority vertex; the best one is then improved by single-bit flips
/// while that lowers the radius or the number of members on the boundary.
/// The radius bounds the minimal enclosing radius from above.
pub fn enclosing_ball(component: &VertexSet) -> Result<(SpinConfiguration, usize)> {
    nonempty(component)?;
    let members = component.indices();
    let candidates = members
        .iter()
        .copied()
        .take(MAX_CENTER_CANDIDATES)
        .chain(std::iter::once(majority(component)));
    let (mut best, mut score) = (members[0], (u32::MAX, usize::MAX));
    for c in candidates {
        let s = spread(c, members);
        if s < score {
            best = c;
            score = s;
        }
    }
    loop {
        let step = (0..component.n())
            .map(|j| (spread(best ^ (1 << j), members), j))
            .min()
            .filter(|&(s, _)| s < score);
        match step {
            Some((s, j)) => {
                best ^= 1 << j;
                score = s;
            }
            None => break,
        }
    }
    Ok((SpinConfiguration::new(best, component.n())?, score.0 as usize))
}

/// Largest pairwise Hamming distance.
pub fn component_diameter(component: &VertexSet) -> Result<usize> {
    nonempty(component)?;
    let m = component.indices();
    let mut d = 0;
    for (i, &a) in m.iter().enumerate() {
        for &b in &m[i + 1..] {
            d = d.max((a ^ b).count_ones());
        }
    }
    Ok(d as usize)
}

/// True iff consecutive distances are 1 or 2 and the ray is straight:
/// `d(σ_1, σ_j) = Σ_{i<j} d(σ_i, σ_{i+1})`.
pub fn is_edge_connected_ray(candidate: &[SpinConfiguration]) -> bool {
    let Some(first) = candidate.first() else {
        return false;
    };
    let n = first.n();
    let mut travelled = 0;
    for w in candidate.windows(2) {
        if w[1].n() != n {
            return false;
        }
        let step = (w[0].bits() ^ w[1].bits()).count_ones();
        if !(1..=2).contains(&step) {
            return false;
        }
        travelled += step;
        if (first.bits() ^ w[1].bits()).count_ones() != travelled {
            return false;
        }
    }
    true
}

/// An edge-connected ray `(σ_1, …, σ_L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    vertices: Vec<SpinConfiguration>,
}

impl Ray {
    pub fn new(vertices: Vec<SpinConfiguration>) -> Result<Self> {
        if !is_edge_connected_ray(&vertices) {
            return Err(Error::invalid("vertices do not form an edge-connected ray"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[SpinConfiguration] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_ray_budget(n: usize, l: usize) -> Result<()> {
    if l < 1 {
        return Err(Error::invalid("ray length must be ≥ 1"));
    }
    crate::model::check_dimension(n)?;
    let branching = (n + n * n.saturating_sub(1) / 2) as f64;
    let work = 2f64.powi(n as i32) * branching.powi(l as i32 - 1);
    if work > RAY_BUDGET {
        return Err(Error::resource(format!(
            "enumerating rays with N = {n}, L = {l} needs ~{work:.3e} steps (budget {RAY_BUDGET:e})"
        )));
    }
    Ok(())
}

fn extend(n: usize, l: usize, path: &mut Vec<u32>, travelled: u32, visit: &mut dyn FnMut(&[u32])) {
    if path.len() == l {
        visit(path);
        return;
    }
    let first = path[0];
    let last = *path.last().expect("nonempty");
    let mut push = |next: u32, step: u32, path: &mut Vec<u32>| {
        if (first ^ next).count_ones() == travelled + step {
            path.push(next);
            extend(n, l, path, travelled + step, visit);
            path.pop();
        }
    };
    for i in 0..n {
        let a = last ^ (1 << i);
        push(a, 1, path);
        for j in i + 1..n {
            push(a ^ (1 << j), 2, path);
        }
    }
}

/// Visits every edge-connected ray of length `l` in `Q_n`, depth first.
pub fn for_each_ray(n: usize, l: usize, mut visit: impl FnMut(&[SpinConfiguration])) -> Result<()> {
    check_ray_budget(n, l)?;
    let mut buf = Vec::with_capacity(l);
    for start in 0..1u32 << n {
        let mut path = vec![start];
        extend(n, l, &mut path, 0, &mut |p: &[u32]| {
            buf.clear();
            buf.extend(p.iter().map(|&b| SpinConfiguration::new(b, n).expect("in range")));
            visit(&buf);
        });
    }
    Ok(())
}

/// `D(L, N)`, the number of edge-connected rays of length `L`, by enumeration.
pub fn count_rays(n: usize, l: usize) -> Result<u64> {
    check_ray_budget(n, l)?;
    let mut count = 0u64;
    for start in 0..1u32 << n {
        let mut path = vec![start];
        extend(n, l, &mut path, 0, &mut |_| count += 1);
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Member indices (bit encodings), ascending.
    pub members: Vec<u32>,
    pub size: usize,
    pub diameter: usize,
    pub enclosing_radius: usize,
    /// Bit encoding of the enclosing ball's center.
    pub center: u32,
    /// `enclosing_radius ≤ K⌈N/p⌉`.
    pub contained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub n: usize,
    pub p: crate::model::Order,
    pub eps: f64,
    pub k_parameter: usize,
    /// `K⌈N/p⌉`, with `⌈N/p⌉ = 1` for the REM.
    pub radius_limit: usize,
    pub set_size: usize,
    pub components: Vec<ComponentReport>,
    pub max_component_diameter: usize,
    /// Largest enclosing radius over the components.
    pub contained_in_radius: usize,
    /// Every component fits its ball (vacuously true when empty).
    pub all_contained: bool,
}

impl ClusterReport {
    /// Checks the partition, radius, and merge-rule invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Contract(format!("cluster report: {m}")));
        let total: usize = self.components.iter().map(|c| c.size).sum();
        if total != self.set_size {
            return fail(format!("component sizes sum to {total}, set has {}", self.set_size));
        }
        let mut seen = std::collections::HashSet::with_capacity(total);
        for c in &self.components {
            if c.members.len() != c.size || c.size == 0 {
                return fail(format!("component size {} with {} members", c.size, c.members.len()));
            }
            if !c.members.iter().all(|m| seen.insert(*m)) {
                return fail("a vertex appears in two components".into());
            }
            if c.diameter > 2 * c.enclosing_radius {
                return fail(format!(
                    "diameter {} exceeds twice the radius {}",
                    c.diameter, c.enclosing_radius
                ));
            }
            if c.size == 1 && (c.diameter != 0 || c.enclosing_radius != 0) {
                return fail("singleton with nonzero diameter or radius".into());
            }
            if c.contained != (c.enclosing_radius <= self.radius_limit) {
                return fail("containment flag disagrees with the radius".into());
            }
        }
        if self.set_size <= 2000 {
            for (i, a) in self.components.iter().enumerate() {
                for b in &self.components[i + 1..] {
                    for &x in &a.members {
                        if let Some(&y) = b.members.iter().find(|&&y| (x ^ y).count_ones() <= 2) {
                            return fail(format!("vertices {x} and {y} within distance 2 split apart"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Deviation set, components, diameters, and enclosing balls for one field.
pub fn cluster_report<S: Real>(field: &DisorderField<S>, eps: S, k_parameter: usize) -> Result<ClusterReport> {
    if k_parameter < 1 {
        return Err(Error::invalid("K must be ≥ 1"));
    }
    let set = deviation_set(field, eps)?;
    if set.len() > MAX_DEVIATION_SET {
        return Err(Error::resource(format!(
            "deviation set has {} vertices (limit {MAX_DEVIATION_SET}); raise eps",
            set.len()
        )));
    }
    let n = field.n();
    let p = field.params().p;
    let radius_limit = k_parameter * p.ball_scale(n);
    let components = edge_connected_components(&set)
        .iter()
        .map(|c| {
            let (center, radius) = enclosing_ball(c)?;
            Ok(ComponentReport {
                members: c.indices().to_vec(),
                size: c.len(),
                diameter: component_diameter(c)?,
                enclosing_radius: radius,
                center: center.bits(),
                contained: radius <= radius_limit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = ClusterReport {
        n,
        p,
        eps: eps.to_f64_lossy(),
        k_parameter,
        radius_limit,
        set_size: set.len(),
        max_component_diameter: components.iter().map(|c| c.diameter).max().unwrap_or(0),
        contained_in_radius: components.iter().map(|c| c.enclosing_radius).max().unwrap_or(0),
        all_contained: components.iter().all(|c| c.contained),
        components,
    };
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, Sampler};
    use crate::hamiltonian::ball;
    use crate::model::{flip, ModelParameters};
    use proptest::prelude::*;

    /// Components by breadth-first search over hypercube edges touching the set.
    fn bfs_components(set: &VertexSet) -> Vec<Vec<u32>> {
        let n = set.n();
        let dim = 1u32 << n;
        let touches = |a: u32, b: u32| set.contains_index(a as usize) || set.contains_index(b as usize);
        let mut label = vec![usize::MAX; dim as usize];
        let mut out = Vec::new();
        for &s in set.indices() {
            if label[s as usize] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut queue = std::collections::VecDeque::from([s]);
            label[s as usize] = id;
            let mut comp = Vec::new();
            // walk vertices reachable through touching edges; only set members
            // are recorded, outside vertices are waypoints
            while let Some(v) = queue.pop_front() {
                if set.contains_index(v as usize) {
                    comp.push(v);
                }
                for j in 0..n {
                    let w = v ^ (1 << j);
                    if touches(v, w) && label[w as usize] != id {
                        label[w as usize] = id;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out.sort();
        out
    }

    fn set_from_mask(n: usize, mask: u64) -> VertexSet {
        VertexSet::from_indices(n, (0..1u32 << n).filter(|i| mask >> i & 1 == 1)).unwrap()
    }

    #[test]
    fn merge_rule_examples() {
        let s = |b| SpinConfiguration::new(b, 5).unwrap();
        let pair = |a, b| VertexSet::from_configurations(5, &[s(a), s(b)]).unwrap();
        assert_eq!(edge_connected_components(&pair(0, 1)).len(), 1);
        assert_eq!(edge_connected_components(&pair(0, 3)).len(), 1);
        assert_eq!(edge_connected_components(&pair(0, 7)).len(), 2);
        assert!(edge_connected_components(&VertexSet::empty(5).unwrap()).is_empty());
    }

    #[test]
    fn union_find_matches_bfs_exhaustively_small() {
        for n in 1..=4usize {
            for mask in 0..1u64 << (1 << n) {
                let set = set_from_mask(n, mask);
                let uf: Vec<Vec<u32>> = edge_connected_components(&set)
                    .iter()
                    .map(|c| c.indices().to_vec())
                    .collect();
                assert_eq!(uf, bfs_components(&set), "n={n} mask={mask:b}");
            }
        }
    }

    proptest! {
        #[test]
        fn union_find_matches_bfs(n in 5usize..=6, mask in any::<u64>(), density in 1u32..6) {
            // thin the mask so both sparse and dense sets occur
            let mut m = mask;
            for k in 1..density {
                m &= mask.rotate_left(7 * k);
            }
            let set = set_from_mask(n, if n == 5 { m & 0xffff_ffff } else { m });
            let uf: Vec<Vec<u32>> = edge_connected_components(&set)
                .iter()
                .map(|c| c.indices().to_vec())
                .collect();
            prop_assert_eq!(uf, bfs_components(&set));
        }
    }

    #[test]
    fn balls_and_diameters() {
        let s = SpinConfiguration::new(0b0110, 4).unwrap();
        let single = VertexSet::from_configurations(4, &[s]).unwrap();
        assert_eq!(enclosing_ball(&single).unwrap(), (s, 0));
        assert_eq!(component_diameter(&single).unwrap(), 0);
        let t = flip(flip(s, 0).unwrap(), 3).unwrap();
        let two = VertexSet::from_configurations(4, &[s, t]).unwrap();
        let (center, r) = enclosing_ball(&two).unwrap();
        assert_eq!(r, 1);
        assert_eq!(center.hamming_distance(s).unwrap(), 1);
        assert_eq!(component_diameter(&two).unwrap(), 2);
        let adj = VertexSet::from_configurations(4, &[s, flip(s, 2).unwrap()]).unwrap();
        assert_eq!(enclosing_ball(&adj).unwrap().1, 1);
        let b1 = ball(s, 1).unwrap();
        assert_eq!(component_diameter(&b1).unwrap(), 2);
        assert_eq!(enclosing_ball(&b1).unwrap(), (s, 1));
        assert!(enclosing_ball(&VertexSet::empty(4).unwrap()).is_err());
    }

    #[test]
    fn ray_checks() {
        let s = SpinConfiguration::new(0, 6).unwrap();
        let a = flip(s, 0).unwrap();
        let b = flip(a, 1).unwrap();
        assert!(is_edge_connected_ray(&[s]));
        assert!(is_edge_connected_ray(&[s, a, b]));
        assert!(!is_edge_connected_ray(&[s, a, s]));
        assert!(!is_edge_connected_ray(&[]));
        let far = SpinConfiguration::new(0b111, 6).unwrap();
        assert!(!is_edge_connected_ray(&[s, far]));
        assert!(Ray::new(vec![s, a, b]).unwrap().len() == 3);
        assert!(Ray::new(vec![s, a, s]).is_err());
    }

    #[test]
    fn ray_counts() {
        for n in 1..=10 {
            assert_eq!(count_rays(n, 1).unwrap(), 1 << n);
        }
        assert_eq!(count_rays(3, 2).unwrap(), 48);
        // brute force over all L-tuples for tiny cubes
        for n in 1..=3usize {
            for l in 1..=3usize {
                let dim = 1u32 << n;
                let mut brute = 0;
                for code in 0..dim.pow(l as u32) {
                    let tuple: Vec<SpinConfiguration> = (0..l)
                        .map(|k| SpinConfiguration::new(code / dim.pow(k as u32) % dim, n).unwrap())
                        .collect();
                    brute += is_edge_connected_ray(&tuple) as u64;
                }
                assert_eq!(count_rays(n, l).unwrap(), brute, "n={n} l={l}");
            }
        }
        let mut visited = 0u64;
        for_each_ray(4, 3, |r| {
            assert!(is_edge_connected_ray(r));
            visited += 1;
        })
        .unwrap();
        assert_eq!(visited, count_rays(4, 3).unwrap());
        assert_eq!(count_rays(20, 4).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn deviation_sets() {
        let params = ModelParameters::sk(6, 2).unwrap();
        let f: DisorderField = sample_field(&params, 3, Sampler::WalshSpectral).unwrap();
        assert!(deviation_set(&f, f.max_abs() / 6.0 + 1e-9).unwrap().is_empty());
        let mut values = vec![0.0f64; 64];
        values[9] = -2.0 * 0.5 * 6.0;
        let planted = DisorderField::from_values(params, values).unwrap();
        assert_eq!(deviation_set(&planted, 0.5).unwrap().indices(), &[9]);
        assert!(deviation_set(&planted, 0.0).is_err());
    }

    #[test]
    fn reports() {
        let params = ModelParameters::sk(6, 3).unwrap();
        let empty = DisorderField::zero(params).unwrap();
        let r = cluster_report(&empty, 0.5f64, 2).unwrap();
        assert!(r.components.is_empty() && r.all_contained && r.set_size == 0);

        let mut values = vec![0.0f64; 64];
        values[0b000000] = -4.0;
        values[0b000011] = -4.0;
        let planted = DisorderField::from_values(params, values).unwrap();
        let r = cluster_report(&planted, 0.5f64, 1).unwrap();
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].diameter, 2);
        assert_eq!(r.components[0].enclosing_radius, 1);
        assert_eq!(r.radius_limit, 2);
        let json = serde_json::to_string(&r).unwrap();
        let back: ClusterReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);

        let rem = ModelParameters::rem(12).unwrap();
        let f: DisorderField = sample_field(&rem, 8, Sampler::IidRem).unwrap();
        let r = cluster_report(&f, 0.5f64, 1).unwrap();
        assert_eq!(r.radius_limit, 1);
        r.validate().unwrap();

        let mut broken = r.clone();
        broken.set_size += 1;
        assert!(broken.validate().is_err());
    }
}
