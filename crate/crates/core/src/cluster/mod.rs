//! Dynamic decoding: recurrence matrices, community detection and partition
//! similarity.

mod bootstrap;
mod consensus;
mod ecs;
mod louvain;
mod recurrence;

pub use bootstrap::{bootstrap_ecs, hconcat, mean_std, BootstrapResult, ClusterParams};
pub use consensus::{consensus_cluster, ConsensusResult, MAX_CONSENSUS_ITERATIONS};
pub use ecs::element_centric_similarity;
pub use louvain::{louvain, modularity, SparseGraph};
pub use recurrence::{binarize_percentile, recurrence_matrix, RecurrenceMatrix};

use crate::{Error, Result};

/// Hard clustering with community ids `0..n_communities`, numbered in order
/// of first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    n_communities: usize,
}

impl Partition {
    /// Relabels arbitrary ids to contiguous ones by first appearance.
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("a partition needs at least one element"));
        }
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Ok(Self {
            labels,
            n_communities: map.len(),
        })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            n_communities: n,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}
