//! Thresholded graphs, order-2 clique complexes and their boundary operators.
//!
//! Orientation is fixed once here and inherited by everything downstream:
//! edges run from the lower to the higher node index, triangles are stored
//! as `(i, j, k)` with `i < j < k` and their boundary is
//! `(j,k) - (i,k) + (i,j)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Undirected weighted graph with edges stored as `(i, j, w)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Builds a graph, normalising each edge to `i < j` and sorting the list.
    pub fn new(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut out: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loops not allowed (node {a})")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) out of range for {n_nodes} nodes"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) has invalid weight {w}"
                )));
            }
            out.push((a.min(b), a.max(b), w));
        }
        out.sort_by_key(|e| (e.0, e.1));
        if let Some(w) = out
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid(format!(
                "duplicate edge ({},{})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self {
            n_nodes,
            edges: out,
        })
    }

    /// Reads the upper triangle of a symmetric adjacency matrix; zeros are
    /// not edges.
    pub fn from_adjacency(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid("adjacency matrix must be square"));
        }
        let n = a.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::invalid("self-loops not allowed"));
            }
            for j in (i + 1)..n {
                let (w, wt) = (a[(i, j)], a[(j, i)]);
                if (w - wt).abs() > 1e-12 * w.abs().max(wt.abs()).max(1.0) {
                    return Err(Error::invalid(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for &(i, j, w) in &self.edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    pub fn density(&self) -> f64 {
        let n = self.n_nodes as f64;
        if self.n_nodes < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1.0) / 2.0)
    }

    /// Number of connected components, isolated nodes included.
    pub fn n_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = self.n_nodes;
        for &(i, j, _) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                comps -= 1;
            }
        }
        comps
    }
}

/// Keeps the `ceil(fraction * m)` heaviest edges. Equal weights are resolved
/// in favour of the lexicographically smaller edge.
pub fn threshold_top_fraction(g: &WeightedGraph, fraction: f64) -> Result<WeightedGraph> {
    if g.edges.is_empty() {
        return Err(Error::invalid("no edges to threshold"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "threshold fraction {fraction} outside (0, 1]"
        )));
    }
    // guard against 0.7 * 10 = 7.000000000000001
    let k = ((fraction * g.edges.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut ranked = g.edges.clone();
    ranked.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    ranked.truncate(k);
    WeightedGraph::new(g.n_nodes, ranked)
}

/// Nodes, edges and filled triangles of a clique complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexParts")]
pub struct SimplicialComplex2 {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    triangles: Vec<(usize, usize, usize)>,
}

#[derive(Deserialize)]
struct ComplexParts {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    triangles: Vec<(usize, usize, usize)>,
}

impl TryFrom<ComplexParts> for SimplicialComplex2 {
    type Error = Error;

    fn try_from(p: ComplexParts) -> Result<Self> {
        Self::new(p.n_nodes, p.edges, p.triangles)
    }
}

impl SimplicialComplex2 {
    /// Validates orientation, ordering and closure.
    pub fn new(
        n_nodes: usize,
        mut edges: Vec<(usize, usize)>,
        mut triangles: Vec<(usize, usize, usize)>,
    ) -> Result<Self> {
        for &(i, j) in &edges {
            if i >= j || j >= n_nodes {
                return Err(Error::invalid(format!("invalid edge ({i},{j})")));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate edge in complex"));
        }
        for &(i, j, k) in &triangles {
            if !(i < j && j < k && k < n_nodes) {
                return Err(Error::invalid(format!("invalid triangle ({i},{j},{k})")));
            }
        }
        triangles.sort_unstable();
        if triangles.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate triangle in complex"));
        }
        let out = Self {
            n_nodes,
            edges,
            triangles,
        };
        for &(i, j, k) in &out.triangles {
            for (a, b) in [(i, j), (i, k), (j, k)] {
                if out.edge_index(a, b).is_none() {
                    return Err(Error::invalid(format!(
                        "triangle ({i},{j},{k}) is missing its face ({a},{b})"
                    )));
                }
            }
        }
        Ok(out)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[(usize, usize, usize)] {
        &self.triangles
    }

    /// Column of edge `{i, j}` in the boundary operators, in either order.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).ok()
    }

    pub fn triangle_index(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        let mut v = [i, j, k];
        v.sort_unstable();
        self.triangles.binary_search(&(v[0], v[1], v[2])).ok()
    }

    /// Same complex with the triangles removed.
    pub fn skeleton(&self) -> Self {
        Self {
            n_nodes: self.n_nodes,
            edges: self.edges.clone(),
            triangles: Vec::new(),
        }
    }
}

/// Edges of `g` plus every pairwise-connected node triple as a 2-simplex.
pub fn clique_complex_order2(g: &WeightedGraph) -> SimplicialComplex2 {
    let n = g.n_nodes();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, _) in g.edges() {
        nbrs[i].push(j);
    }
    // neighbour lists only hold higher-indexed nodes and are sorted
    for l in &mut nbrs {
        l.sort_unstable();
    }
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
    let mut triangles = Vec::new();
    for &(i, j) in &edges {
        let (a, b) = (&nbrs[i], &nbrs[j]);
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    if a[p] > j {
                        triangles.push((i, j, a[p]));
                    }
                    p += 1;
                    q += 1;
                }
            }
        }
    }
    triangles.sort_unstable();
    SimplicialComplex2 {
        n_nodes: n,
        edges,
        triangles,
    }
}

/// Column-compressed matrix with entries in {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedIncidence {
    n_rows: usize,
    columns: Vec<Vec<(usize, i8)>>,
}

impl SignedIncidence {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Nonzeros of column `c`, sorted by row.
    pub fn column(&self, c: usize) -> &[(usize, i8)] {
        &self.columns[c]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols());
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, s) in col {
                m[(r, c)] = f64::from(s);
            }
        }
        m
    }

    pub fn to_dense_i64(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.n_cols()]; self.n_rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, s) in col {
                m[r][c] = i64::from(s);
            }
        }
        m
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_cols());
        let mut out = vec![0.0; self.n_rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, s) in col {
                out[r] += f64::from(s) * v[c];
            }
        }
        out
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_rows);
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(r, s)| f64::from(s) * v[r]).sum())
            .collect()
    }

    /// `|self| * v` with the absolute value taken entrywise.
    pub fn abs_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_cols());
        let mut out = vec![0.0; self.n_rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, _) in col {
                out[r] += v[c];
            }
        }
        out
    }

    /// Exact integer product `self * other`.
    pub fn compose(&self, other: &SignedIncidence) -> Vec<Vec<i64>> {
        assert_eq!(self.n_cols(), other.n_rows());
        let mut out = vec![vec![0i64; other.n_cols()]; self.n_rows];
        for (c, col) in other.columns.iter().enumerate() {
            for &(mid, s) in col {
                for &(r, t) in &self.columns[mid] {
                    out[r][c] += i64::from(s) * i64::from(t);
                }
            }
        }
        out
    }
}

/// Node-edge (`b1`, n0 x n1) and edge-triangle (`b2`, n1 x n2) operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryOperators {
    pub b1: SignedIncidence,
    pub b2: SignedIncidence,
}

impl BoundaryOperators {
    pub fn n_nodes(&self) -> usize {
        self.b1.n_rows()
    }

    pub fn n_edges(&self) -> usize {
        self.b1.n_cols()
    }

    pub fn n_triangles(&self) -> usize {
        self.b2.n_cols()
    }
}

pub fn boundary_operators(k: &SimplicialComplex2) -> BoundaryOperators {
    let b1 = SignedIncidence {
        n_rows: k.n_nodes(),
        columns: k
            .edges()
            .iter()
            .map(|&(i, j)| vec![(i, -1), (j, 1)])
            .collect(),
    };
    let b2 = SignedIncidence {
        n_rows: k.n_edges(),
        columns: k
            .triangles()
            .iter()
            .map(|&(i, j, l)| {
                let face = |a, b| k.edge_index(a, b).expect("clique complex is closed");
                // rows ascend: (i,j) < (i,l) < (j,l)
                vec![(face(i, j), 1), (face(i, l), -1), (face(j, l), 1)]
            })
            .collect(),
    };
    BoundaryOperators { b1, b2 }
}
