//! Louvain modularity maximisation (resolution 1).
//!
//! Local moving visits nodes in a seeded random order and moves a node only
//! when modularity rises by more than [`MIN_GAIN`]. After the usual
//! aggregate-and-repeat levels the final partition is polished by local
//! moving on the original graph, and the levels are rerun if that polish
//! changed anything. The result therefore admits no improving single-node
//! move.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::Partition;
use crate::rng::Rng;
use crate::{Error, Result};

const MIN_GAIN: f64 = 1e-12;
const MAX_ROUNDS: usize = 100;

/// Symmetric weighted adjacency lists. A self-loop weight `w` on node `i`
/// represents `A_ii = w` (internal weight counted in both directions).
#[derive(Clone, Debug)]
pub struct SparseGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl SparseGraph {
    /// Reads a symmetric nonnegative matrix; the diagonal must be zero.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::invalid("adjacency matrix must be square"));
        }
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "adjacency has a nonzero diagonal at {i}"
                )));
            }
            for j in (i + 1)..n {
                let w = a[(i, j)];
                if w != a[(j, i)] {
                    return Err(Error::invalid(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!("invalid weight {w} at ({i},{j})")));
                }
                if w > 0.0 {
                    adj[i].push((j, w));
                    adj[j].push((i, w));
                }
            }
        }
        Ok(Self::from_parts(adj, vec![0.0; n]))
    }

    fn from_parts(adj: Vec<Vec<(usize, f64)>>, self_loops: Vec<f64>) -> Self {
        let degree: Vec<f64> = adj
            .iter()
            .zip(&self_loops)
            .map(|(l, s)| s + l.iter().map(|e| e.1).sum::<f64>())
            .collect();
        let total = degree.iter().sum();
        Self {
            adj,
            self_loops,
            degree,
            total,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    /// `2m`, the sum of all degrees.
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    fn aggregate(&self, membership: &[usize], n_comm: usize) -> Self {
        let mut self_loops = vec![0.0; n_comm];
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> =
            vec![Default::default(); n_comm];
        for (i, list) in self.adj.iter().enumerate() {
            let ci = membership[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in list {
                let cj = membership[j];
                if ci == cj {
                    self_loops[ci] += w;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Self::from_parts(adj, self_loops)
    }
}

/// Newman-Girvan modularity of `p` on `g`.
pub fn modularity(g: &SparseGraph, p: &Partition) -> f64 {
    let m2 = g.total;
    if m2 <= 0.0 {
        return 0.0;
    }
    let k = p.n_communities();
    let mut internal = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for (i, list) in g.adj.iter().enumerate() {
        let c = p.labels()[i];
        tot[c] += g.degree[i];
        internal[c] += g.self_loops[i];
        for &(j, w) in list {
            if p.labels()[j] == c {
                internal[c] += w;
            }
        }
    }
    internal
        .iter()
        .zip(&tot)
        .map(|(a, t)| a / m2 - (t / m2).powi(2))
        .sum()
}

/// One round of local moving. Returns whether any node moved.
fn local_move(g: &SparseGraph, comm: &mut [usize], rng: &mut Rng) -> bool {
    let n = g.n_nodes();
    let m2 = g.total;
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for i in 0..n {
        tot[comm[i]] += g.degree[i];
        size[comm[i]] += 1;
    }
    let mut empty: Vec<usize> = (0..n).filter(|&c| size[c] == 0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut weight_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let ki = g.degree[i];
            let old = comm[i];
            for &(j, w) in &g.adj[i] {
                let c = comm[j];
                if weight_to[c] == 0.0 {
                    touched.push(c);
                }
                weight_to[c] += w;
            }
            tot[old] -= ki;
            size[old] -= 1;
            let gain = |c: usize, w: f64| w - ki * tot[c] / m2;
            let stay = gain(old, weight_to[old]);
            let mut best = old;
            let mut best_gain = stay;
            for &c in &touched {
                if c == old {
                    continue;
                }
                let gc = gain(c, weight_to[c]);
                // modularity change is 2 * (gc - stay) / m2
                if 2.0 * (gc - best_gain) / m2 > MIN_GAIN {
                    best = c;
                    best_gain = gc;
                }
            }
            // isolating the node scores 0
            if size[old] > 0 && 2.0 * (0.0 - best_gain) / m2 > MIN_GAIN {
                best = empty
                    .pop()
                    .expect("an empty community exists while old is shared");
            }
            if best != old {
                if size[old] == 0 {
                    empty.push(old);
                }
                moved = true;
                any = true;
            }
            comm[i] = best;
            tot[best] += ki;
            size[best] += 1;
            for &c in &touched {
                weight_to[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    any
}

/// Renumbers to contiguous ids by first appearance; returns the count.
fn renumber(comm: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; comm.len().max(1)];
    let mut next = 0;
    for c in comm.iter_mut() {
        if map[*c] == usize::MAX {
            map[*c] = next;
            next += 1;
        }
        *c = map[*c];
    }
    next
}

pub(crate) fn louvain_graph(g: &SparseGraph, rng: &mut Rng) -> Partition {
    let n = g.n_nodes();
    if n == 0 {
        return Partition::singletons(0);
    }
    if g.total <= 0.0 {
        return Partition::singletons(n);
    }
    let mut membership: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_ROUNDS {
        let moved_fine = local_move(g, &mut membership, rng);
        let mut moved_coarse = false;
        loop {
            let k = renumber(&mut membership);
            let agg = g.aggregate(&membership, k);
            let mut coarse: Vec<usize> = (0..k).collect();
            if !local_move(&agg, &mut coarse, rng) {
                break;
            }
            moved_coarse = true;
            for c in membership.iter_mut() {
                *c = coarse[*c];
            }
        }
        if !moved_fine && !moved_coarse {
            break;
        }
    }
    Partition::from_labels(&membership).expect("non-empty")
}

/// Louvain communities of a symmetric nonnegative adjacency matrix.
pub fn louvain(adj: &DMatrix<f64>, seed: u64) -> Result<Partition> {
    let g = SparseGraph::from_dense(adj)?;
    let mut rng = Rng::seed_from_u64(seed);
    Ok(louvain_graph(&g, &mut rng))
}
