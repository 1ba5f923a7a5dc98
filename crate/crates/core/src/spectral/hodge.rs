use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::{eigendecompose, LaplacianVariant, SymmetricOperator};
use crate::complex::BoundaryOperators;
use crate::signals::EdgeTimeSeries;
use crate::{Error, Result};

/// Gradient, curl and harmonic parts of one edge signal.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub grad: DVector<f64>,
    pub curl: DVector<f64>,
    pub harm: DVector<f64>,
    /// Minimum-norm `y` with `grad = B1^T y`.
    pub node_potential: Option<DVector<f64>>,
    /// Minimum-norm `z` with `curl = B2 z`; `None` without triangles.
    pub triangle_potential: Option<DVector<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HodgePart {
    Harm,
    Grad,
    Curl,
}

impl fmt::Display for HodgePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HodgePart::Harm => "harm",
            HodgePart::Grad => "grad",
            HodgePart::Curl => "curl",
        })
    }
}

impl FromStr for HodgePart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "harm" | "harmonic" => Ok(Self::Harm),
            "grad" | "gradient" => Ok(Self::Grad),
            "curl" => Ok(Self::Curl),
            _ => Err(Error::invalid(format!("unknown Hodge component '{s}'"))),
        }
    }
}

/// Pseudo-inverse of a Gram matrix restricted to its range: `U diag(1/λ) U^T`
/// stored as the factor pair.
#[derive(Clone, Debug)]
struct GramPinv {
    vecs: DMatrix<f64>,
    inv: DVector<f64>,
}

impl GramPinv {
    fn new(gram: DMatrix<f64>) -> Result<Self> {
        let basis = eigendecompose(&SymmetricOperator::from_symmetric(gram))?;
        let (vecs, vals) = basis.nonzero_part();
        let inv = DVector::from_iterator(vals.len(), vals.iter().map(|l| 1.0 / l));
        Ok(Self { vecs, inv })
    }

    /// Applies the pseudo-inverse to every row of `rows`.
    fn apply_rows(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let mut c = rows * &self.vecs;
        for (j, mut col) in c.column_iter_mut().enumerate() {
            col *= self.inv[j];
        }
        c * self.vecs.transpose()
    }
}

#[derive(Clone, Debug)]
enum CurlRoute {
    None,
    /// Gram `B2^T B2` (n2 x n2), used when there are no more triangles than edges.
    Triangles(GramPinv),
    /// Gram `B2 B2^T` (n1 x n1).
    Edges(GramPinv),
}

/// Least-squares machinery for the gradient and curl potentials of a fixed
/// complex, applied row-wise to whole edge time series.
#[derive(Clone, Debug)]
pub struct HodgeProjector {
    b1: DMatrix<f64>,
    b2: DMatrix<f64>,
    node: GramPinv,
    curl: CurlRoute,
}

impl HodgeProjector {
    pub fn new(b: &BoundaryOperators) -> Result<Self> {
        Self::build(b, true)
    }

    /// Projector that ignores the triangles; its curl part is always zero.
    pub fn node_only(b: &BoundaryOperators) -> Result<Self> {
        Self::build(b, false)
    }

    fn build(b: &BoundaryOperators, with_triangles: bool) -> Result<Self> {
        let b1 = b.b1.to_dense();
        let b2 = if with_triangles {
            b.b2.to_dense()
        } else {
            DMatrix::zeros(b.n_edges(), 0)
        };
        let node = GramPinv::new(&b1 * b1.transpose())?;
        let curl = match b2.ncols() {
            0 => CurlRoute::None,
            n2 if n2 <= b.n_edges() => CurlRoute::Triangles(GramPinv::new(b2.transpose() * &b2)?),
            _ => CurlRoute::Edges(GramPinv::new(&b2 * b2.transpose())?),
        };
        Ok(Self { b1, b2, node, curl })
    }

    pub fn n_edges(&self) -> usize {
        self.b1.ncols()
    }

    pub fn n_triangles(&self) -> usize {
        self.b2.ncols()
    }

    fn check_width(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.n_edges() {
            return Err(Error::invalid(format!(
                "edge signal width {} does not match {} edges",
                x.ncols(),
                self.n_edges()
            )));
        }
        Ok(())
    }

    /// Rows: minimum-norm solutions of `(B1 B1^T) y = B1 x`.
    pub fn node_potentials(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_width(x)?;
        Ok(self.node.apply_rows(&(x * self.b1.transpose())))
    }

    /// Rows: minimum-norm solutions of `(B2^T B2) z = B2^T x`, or `None`
    /// when the complex has no triangles.
    pub fn triangle_potentials(&self, x: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
        self.check_width(x)?;
        Ok(match &self.curl {
            CurlRoute::None => None,
            CurlRoute::Triangles(g) => Some(g.apply_rows(&(x * &self.b2))),
            CurlRoute::Edges(g) => Some(g.apply_rows(x) * &self.b2),
        })
    }

    pub fn gradient(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.node_potentials(x)? * &self.b1)
    }

    pub fn curl(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(match self.triangle_potentials(x)? {
            Some(z) => z * self.b2.transpose(),
            None => DMatrix::zeros(x.nrows(), x.ncols()),
        })
    }

    pub fn decompose(&self, x: &DVector<f64>) -> Result<HodgeDecomposition> {
        let row = DMatrix::from_row_slice(1, x.len(), x.as_slice());
        let y = self.node_potentials(&row)?;
        let grad = (&y * &self.b1).row(0).transpose();
        let z = self.triangle_potentials(&row)?;
        let curl = match &z {
            Some(z) => (z * self.b2.transpose()).row(0).transpose(),
            None => DVector::zeros(x.len()),
        };
        let harm = x - &grad - &curl;
        Ok(HodgeDecomposition {
            grad,
            curl,
            harm,
            node_potential: Some(y.row(0).transpose()),
            triangle_potential: z.map(|z| z.row(0).transpose()),
        })
    }
}

pub fn hodge_decompose(b: &BoundaryOperators, x: &DVector<f64>) -> Result<HodgeDecomposition> {
    if x.len() != b.n_edges() {
        return Err(Error::invalid(format!(
            "edge signal length {} does not match {} edges",
            x.len(),
            b.n_edges()
        )));
    }
    HodgeProjector::new(b)?.decompose(x)
}

/// Frame-wise Hodge filter for one Laplacian variant.
///
/// With [`LaplacianVariant::Down`] only the node side is used: `grad` is the
/// projection onto `range(B1^T)` and `harm` its orthogonal complement,
/// i.e. `ker(B1^T B1)`. With [`LaplacianVariant::Full`] the complement is
/// further split into curl and harmonic parts.
#[derive(Clone, Debug)]
pub struct HodgeFilter {
    projector: HodgeProjector,
    variant: LaplacianVariant,
}

impl HodgeFilter {
    pub fn new(b: &BoundaryOperators, variant: LaplacianVariant) -> Result<Self> {
        let projector = match variant {
            LaplacianVariant::Up => {
                return Err(Error::invalid(
                    "Hodge filtering needs the down or full Laplacian",
                ))
            }
            LaplacianVariant::Down => HodgeProjector::node_only(b)?,
            LaplacianVariant::Full => HodgeProjector::new(b)?,
        };
        Ok(Self { projector, variant })
    }

    pub fn variant(&self) -> LaplacianVariant {
        self.variant
    }

    pub fn projector(&self) -> &HodgeProjector {
        &self.projector
    }

    pub fn filter_matrix(&self, x: &DMatrix<f64>, part: HodgePart) -> Result<DMatrix<f64>> {
        match (self.variant, part) {
            (LaplacianVariant::Down, HodgePart::Curl) => {
                Err(Error::invalid("curl undefined without triangles"))
            }
            (_, HodgePart::Grad) => self.projector.gradient(x),
            (_, HodgePart::Curl) => self.projector.curl(x),
            (LaplacianVariant::Down, HodgePart::Harm) => Ok(x - self.projector.gradient(x)?),
            (_, HodgePart::Harm) => Ok(x - self.projector.gradient(x)? - self.projector.curl(x)?),
        }
    }

    pub fn filter(&self, x: &EdgeTimeSeries, part: HodgePart) -> Result<EdgeTimeSeries> {
        EdgeTimeSeries::new(self.filter_matrix(x.data(), part)?)
    }
}

/// One-shot convenience around [`HodgeFilter`].
pub fn subspace_filter(
    b: &BoundaryOperators,
    x: &EdgeTimeSeries,
    variant: LaplacianVariant,
    part: HodgePart,
) -> Result<EdgeTimeSeries> {
    if variant == LaplacianVariant::Down && part == HodgePart::Curl {
        return Err(Error::invalid("curl undefined without triangles"));
    }
    HodgeFilter::new(b, variant)?.filter(x, part)
}
