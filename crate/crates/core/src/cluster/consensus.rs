use nalgebra::DMatrix;
use rand::SeedableRng;
use rayon::prelude::*;

use super::louvain::{louvain_graph, SparseGraph};
use super::Partition;
use crate::rng::{derive_seed, Rng};
use crate::{Error, Result};

pub const MAX_CONSENSUS_ITERATIONS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusResult {
    pub partition: Partition,
    /// False when the co-classification matrix never became binary.
    pub converged: bool,
    pub iterations: usize,
}

/// Repeated Louvain on the co-classification matrix until every pair of
/// nodes is either always or never grouped together.
///
/// Run `r` of outer iteration `k` uses seed
/// `derive_seed(seed, "consensus", k * n_runs + r)`.
pub fn consensus_cluster(adj: &DMatrix<f64>, n_runs: usize, seed: u64) -> Result<ConsensusResult> {
    if n_runs == 0 {
        return Err(Error::invalid("consensus needs at least one run"));
    }
    let n = adj.nrows();
    let mut graph = SparseGraph::from_dense(adj)?;
    let mut last = None;
    for iter in 0..MAX_CONSENSUS_ITERATIONS {
        let runs: Vec<Partition> = (0..n_runs)
            .into_par_iter()
            .map(|r| {
                let s = derive_seed(seed, "consensus", (iter * n_runs + r) as u64);
                louvain_graph(&graph, &mut Rng::seed_from_u64(s))
            })
            .collect();
        let mut counts = vec![0u32; n * n];
        for p in &runs {
            let l = p.labels();
            for i in 0..n {
                for j in (i + 1)..n {
                    if l[i] == l[j] {
                        counts[i * n + j] += 1;
                    }
                }
            }
        }
        let full = n_runs as u32;
        let binary = counts.iter().all(|&c| c == 0 || c == full);
        if binary {
            return Ok(ConsensusResult {
                partition: runs.into_iter().next().expect("n_runs >= 1"),
                converged: true,
                iterations: iter + 1,
            });
        }
        let co = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if a == b {
                0.0
            } else {
                f64::from(counts[a * n + b]) / n_runs as f64
            }
        });
        graph = SparseGraph::from_dense(&co)?;
        last = runs.into_iter().next();
    }
    log::warn!("consensus clustering did not converge in {MAX_CONSENSUS_ITERATIONS} iterations");
    Ok(ConsensusResult {
        partition: last.expect("at least one iteration ran"),
        converged: false,
        iterations: MAX_CONSENSUS_ITERATIONS,
    })
}
