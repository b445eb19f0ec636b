use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Community assignment for a set of nodes.
///
/// Labels are 0-based in memory (`0..K`); label files and the CLI use `1..=K`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<u32>);

impl LabelVector {
    pub fn new(labels: Vec<u32>) -> Self {
        Self(labels)
    }

    /// All nodes in community 0.
    pub fn constant(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Fails unless every label is below `k`.
    pub fn check_range(&self, k: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l as usize >= k) {
            Some(&label) => Err(Error::LabelOutOfRange { label, k }),
            None => Ok(()),
        }
    }

    /// Number of nodes per community.
    pub fn counts(&self, k: usize) -> Vec<u64> {
        let mut counts = vec![0u64; k];
        for &l in &self.0 {
            counts[l as usize] += 1;
        }
        counts
    }

    /// One more than the largest label, or 0 for an empty vector.
    pub fn num_classes(&self) -> usize {
        self.0.iter().max().map_or(0, |&m| m as usize + 1)
    }
}

impl Deref for LabelVector {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for LabelVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl FromIterator<u32> for LabelVector {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}
