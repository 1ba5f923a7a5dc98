//! Laplacians, eigenbases, graph/topological Fourier transforms and the
//! Hodge decomposition of edge signals.

mod gsp;
mod hodge;
mod laplacian;

pub use gsp::{split_coupled_decoupled, structural_decoupling_index};
pub use hodge::{
    hodge_decompose, subspace_filter, HodgeDecomposition, HodgeFilter, HodgePart, HodgeProjector,
};
pub use laplacian::{graph_laplacian, hodge_laplacian, LaplacianVariant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Eigenvalues below `ZERO_REL_TOL * max(1, lambda_max)` count as zero.
pub const ZERO_REL_TOL: f64 = 1e-8;

/// Dense real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator(DMatrix<f64>);

impl SymmetricOperator {
    /// Accepts `m` if `|m - m^T|` is within `1e-12` of its largest entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(
                "operator not symmetric: matrix is not square",
            ));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "operator not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Orthonormal eigenvectors (columns) with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub zero_tol: f64,
}

impl EigenBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    /// Dimension of the numerical kernel.
    pub fn kernel_dim(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&l| l.abs() < self.zero_tol)
            .count()
    }

    /// Columns whose eigenvalue is not numerically zero, with those
    /// eigenvalues.
    pub fn nonzero_part(&self) -> (DMatrix<f64>, Vec<f64>) {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&k| self.eigenvalues[k].abs() >= self.zero_tol)
            .collect();
        let vecs = self.eigenvectors.select_columns(idx.iter());
        let vals = idx.iter().map(|&k| self.eigenvalues[k]).collect();
        (vecs, vals)
    }
}

pub fn eigendecompose(op: &SymmetricOperator) -> Result<EigenBasis> {
    // re-check in case the operator was built from unchecked parts
    let op = SymmetricOperator::new(op.0.clone())?;
    let n = op.dim();
    if n == 0 {
        return Ok(EigenBasis {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
            zero_tol: ZERO_REL_TOL,
        });
    }
    let eig = SymmetricEigen::try_new(op.0, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = eig.eigenvectors.select_columns(order.iter());
    for mut col in eigenvectors.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    let lmax = eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(EigenBasis {
        eigenvalues,
        eigenvectors,
        zero_tol: ZERO_REL_TOL * lmax.max(1.0),
    })
}

/// Spectral coefficients, one row per time frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoefficients {
    pub coeffs: DMatrix<f64>,
}

/// `x_hat = U^T x` applied to each row (frame) of `x`.
pub fn fourier_forward(basis: &EigenBasis, x: &DMatrix<f64>) -> Result<SpectralCoefficients> {
    if x.ncols() != basis.dim() {
        return Err(Error::invalid(format!(
            "signal width {} does not match basis dimension {}",
            x.ncols(),
            basis.dim()
        )));
    }
    Ok(SpectralCoefficients {
        coeffs: x * &basis.eigenvectors,
    })
}

/// `x = U x_hat` applied to each row of the coefficients.
pub fn fourier_inverse(basis: &EigenBasis, c: &SpectralCoefficients) -> Result<DMatrix<f64>> {
    if c.coeffs.ncols() != basis.dim() {
        return Err(Error::invalid(format!(
            "coefficient width {} does not match basis dimension {}",
            c.coeffs.ncols(),
            basis.dim()
        )));
    }
    Ok(&c.coeffs * basis.eigenvectors.transpose())
}
