use nalgebra::{DMatrix, DVector};

use super::{fourier_forward, fourier_inverse, EigenBasis};
use crate::signals::NodeTimeSeries;
use crate::{Error, Result};

/// Splits node signals into the part carried by the `c` smoothest graph
/// harmonics (coupled) and the remainder (decoupled).
pub fn split_coupled_decoupled(
    basis: &EigenBasis,
    x: &NodeTimeSeries,
    c: usize,
) -> Result<(NodeTimeSeries, NodeTimeSeries)> {
    let n0 = basis.dim();
    if c == 0 || c > n0 {
        return Err(Error::invalid(format!("cutoff {c} outside 1..={n0}")));
    }
    let coeffs = fourier_forward(basis, x.data())?;
    let mut low = coeffs.clone();
    low.coeffs.columns_mut(c, n0 - c).fill(0.0);
    let coupled = fourier_inverse(basis, &low)?;
    let decoupled = x.data() - &coupled;
    Ok((x.with_data(coupled)?, x.with_data(decoupled)?))
}

/// Per node, `||decoupled_i|| / ||coupled_i||` over time.
pub fn structural_decoupling_index(
    coupled: &NodeTimeSeries,
    decoupled: &NodeTimeSeries,
) -> Result<DVector<f64>> {
    let (c, d): (&DMatrix<f64>, &DMatrix<f64>) = (coupled.data(), decoupled.data());
    if c.shape() != d.shape() {
        return Err(Error::invalid(
            "coupled and decoupled series differ in shape",
        ));
    }
    let mut out = DVector::zeros(c.ncols());
    for i in 0..c.ncols() {
        let cn = c.column(i).norm();
        if cn == 0.0 {
            return Err(Error::numerical(format!(
                "coupled signal at node {i} has zero norm"
            )));
        }
        out[i] = d.column(i).norm() / cn;
    }
    Ok(out)
}
