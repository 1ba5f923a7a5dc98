use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::SymmetricOperator;
use crate::complex::{BoundaryOperators, WeightedGraph};
use crate::Error;

/// `L = D - A` on the weighted graph.
pub fn graph_laplacian(g: &WeightedGraph) -> SymmetricOperator {
    let n = g.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j, w) in g.edges() {
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    SymmetricOperator::from_symmetric(l)
}

/// Which part of the edge Laplacian to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaplacianVariant {
    /// `B1^T B1`
    Down,
    /// `B2 B2^T`
    Up,
    /// `B1^T B1 + B2 B2^T`
    Full,
}

impl fmt::Display for LaplacianVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianVariant::Down => "down",
            LaplacianVariant::Up => "up",
            LaplacianVariant::Full => "full",
        })
    }
}

impl FromStr for LaplacianVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "down" | "l1_down" => Ok(Self::Down),
            "up" | "l1_up" => Ok(Self::Up),
            "full" | "l1" | "l1_full" => Ok(Self::Full),
            _ => Err(Error::invalid(format!("unknown Laplacian variant '{s}'"))),
        }
    }
}

/// Edge Laplacian assembled from integer incidence columns, so the result is
/// exactly symmetric.
pub fn hodge_laplacian(b: &BoundaryOperators, variant: LaplacianVariant) -> SymmetricOperator {
    let n1 = b.n_edges();
    let mut l = DMatrix::zeros(n1, n1);
    if matches!(variant, LaplacianVariant::Down | LaplacianVariant::Full) {
        // (B1^T B1)_{ef} = sum over shared nodes of sign products
        let mut incident: Vec<Vec<(usize, i8)>> = vec![Vec::new(); b.n_nodes()];
        for e in 0..n1 {
            for &(node, s) in b.b1.column(e) {
                incident[node].push((e, s));
            }
        }
        for list in &incident {
            for &(e, s) in list {
                for &(f, t) in list {
                    l[(e, f)] += f64::from(s * t);
                }
            }
        }
    }
    if matches!(variant, LaplacianVariant::Up | LaplacianVariant::Full) {
        for t in 0..b.n_triangles() {
            let col = b.b2.column(t);
            for &(e, s) in col {
                for &(f, u) in col {
                    l[(e, f)] += f64::from(s * u);
                }
            }
        }
    }
    SymmetricOperator::from_symmetric(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{boundary_operators, clique_complex_order2};

    #[test]
    fn single_edge_graph_laplacian() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let l = graph_laplacian(&g);
        assert_eq!(l.matrix().as_slice(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn empty_graph_laplacian_is_zero() {
        let g = WeightedGraph::new(3, []).unwrap();
        assert_eq!(graph_laplacian(&g).matrix().amax(), 0.0);
    }

    #[test]
    fn weighted_rows_sum_to_zero() {
        let g = WeightedGraph::new(3, [(0, 1, 2.5), (1, 2, 0.5)]).unwrap();
        let l = graph_laplacian(&g);
        for r in l.matrix().row_iter() {
            assert!(r.sum().abs() < 1e-15);
        }
    }

    #[test]
    fn down_matches_dense_product() {
        let g = WeightedGraph::new(
            4,
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (1, 3, 1.0),
            ],
        )
        .unwrap();
        let b = boundary_operators(&clique_complex_order2(&g));
        let b1 = b.b1.to_dense();
        let b2 = b.b2.to_dense();
        let down = hodge_laplacian(&b, LaplacianVariant::Down);
        let up = hodge_laplacian(&b, LaplacianVariant::Up);
        let full = hodge_laplacian(&b, LaplacianVariant::Full);
        assert_eq!(down.matrix(), &(b1.transpose() * &b1));
        assert_eq!(up.matrix(), &(&b2 * b2.transpose()));
        assert_eq!(full.matrix(), &(down.matrix() + up.matrix()));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "L1_down".parse::<LaplacianVariant>().unwrap(),
            LaplacianVariant::Down
        );
        assert_eq!(
            "L1_full".parse::<LaplacianVariant>().unwrap(),
            LaplacianVariant::Full
        );
        assert!("sideways".parse::<LaplacianVariant>().is_err());
    }
}
