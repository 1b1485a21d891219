//! The probability vector over energy branches — the model's entire
//! dynamical state — and index partitions for coarse graining.

use crate::error::{Error, Result};

/// Drift tolerance on `ΣP = 1`; exceeding it triggers renormalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// The probability vector `P_i` over energy branches.
///
/// Entries are kept in `[0, 1]` and sum to one within
/// [`NORMALIZATION_TOL`]; construction and every dynamical step renormalize
/// when float drift exceeds the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDistribution {
    probs: Vec<f64>,
}

impl BranchDistribution {
    /// Validate and normalize a probability vector.
    ///
    /// Entries must be finite and non-negative (values above `-1e-12` are
    /// clamped to zero as rounding noise) with a positive sum.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "at least one branch required".into(),
            ));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if *p < 0.0 {
                if *p > -NORMALIZATION_TOL {
                    *p = 0.0;
                } else {
                    return Err(Error::InvalidDistribution(format!("negative entry {p}")));
                }
            }
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("entries sum to zero".into()));
        }
        let mut dist = Self { probs };
        dist.renormalize();
        Ok(dist)
    }

    /// Uniform distribution over `m` branches.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m.max(1)].into_iter().take(m).collect())
    }

    /// The vertex δ_i: all probability on branch `i`.
    pub fn delta(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::BranchOutOfRange { index: i, len: m });
        }
        let mut probs = vec![0.0; m];
        probs[i] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The branch carrying the most probability.
    pub fn max_branch(&self) -> (usize, f64) {
        let mut best = (0, self.probs[0]);
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }

    /// Clamp rounding negatives to zero, rescale if the sum drifted past
    /// [`NORMALIZATION_TOL`].
    pub(crate) fn renormalize(&mut self) {
        let mut sum = 0.0;
        for p in self.probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            for p in self.probs.iter_mut() {
                *p /= sum;
            }
        }
    }

    /// Internal constructor for step outputs: already near-normalized.
    pub(crate) fn from_step(probs: Vec<f64>) -> Self {
        let mut dist = Self { probs };
        dist.renormalize();
        dist
    }
}

/// A partition of branch indices `0..len` into disjoint covering groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, len: usize) -> Result<Self> {
        let mut group_of = vec![usize::MAX; len];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidPartition(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= len {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for {len} branches"
                    )));
                }
                if group_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in more than one group"
                    )));
                }
                group_of[i] = g;
            }
        }
        if let Some(i) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "index {i} not covered by any group"
            )));
        }
        Ok(Self { groups, group_of })
    }

    /// Singleton partition (coarse graining with it is the identity).
    pub fn singletons(len: usize) -> Self {
        Self {
            groups: (0..len).map(|i| vec![i]).collect(),
            group_of: (0..len).collect(),
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// The group containing branch `index`.
    pub fn group_of(&self, index: usize) -> usize {
        self.group_of[index]
    }

    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }
}

/// Sum branch probabilities over the groups of `partition`.
pub fn coarse_grain(dist: &BranchDistribution, partition: &Partition) -> Result<BranchDistribution> {
    if partition.len() != dist.len() {
        return Err(Error::DimensionMismatch {
            context: "coarse_grain",
            expected: dist.len(),
            found: partition.len(),
        });
    }
    let mut grouped = vec![0.0; partition.group_count()];
    for (i, &p) in dist.probs().iter().enumerate() {
        grouped[partition.group_of(i)] += p;
    }
    Ok(BranchDistribution::from_step(grouped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_normalizes_drift() {
        let d = BranchDistribution::new(vec![0.5 + 3e-13, 0.5]).unwrap();
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() <= NORMALIZATION_TOL);
    }

    #[test]
    fn construction_rescales_raw_weights() {
        let d = BranchDistribution::new(vec![2.0, 6.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(BranchDistribution::new(vec![]).is_err());
        assert!(BranchDistribution::new(vec![0.0, 0.0]).is_err());
        assert!(BranchDistribution::new(vec![0.5, -0.5]).is_err());
        assert!(BranchDistribution::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn tiny_negative_is_clamped() {
        let d = BranchDistribution::new(vec![1.0, -1e-15]).unwrap();
        assert_eq!(d.probs()[1], 0.0);
    }

    #[test]
    fn delta_and_uniform() {
        let d = BranchDistribution::delta(3, 1).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0, 0.0]);
        assert!(BranchDistribution::delta(3, 3).is_err());
        let u = BranchDistribution::uniform(4).unwrap();
        assert!(u.probs().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0, 1], vec![2]], 3).is_ok());
        // overlapping
        assert!(Partition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        // incomplete
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        // out of range
        assert!(Partition::new(vec![vec![0, 3]], 2).is_err());
        // empty group
        assert!(Partition::new(vec![vec![0, 1], vec![]], 2).is_err());
    }

    #[test]
    fn coarse_grain_sums_groups() {
        let d = BranchDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let p = Partition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let g = coarse_grain(&d, &p).unwrap();
        assert!((g.probs()[0] - 0.5).abs() < 1e-15);
        assert!((g.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coarse_grain_singletons_is_identity() {
        let d = BranchDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let g = coarse_grain(&d, &Partition::singletons(3)).unwrap();
        assert_eq!(g.probs(), d.probs());
    }

    #[test]
    fn coarse_grain_length_mismatch() {
        let d = BranchDistribution::new(vec![0.5, 0.5]).unwrap();
        let p = Partition::singletons(3);
        assert!(coarse_grain(&d, &p).is_err());
    }
}
