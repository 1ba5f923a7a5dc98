//! Node and edge time series, and the operations that move signals between
//! nodes and edges.
//!
//! All series are stored time-major: row `t` is frame `t`, column `i` is
//! node (or edge) `i`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::complex::{BoundaryOperators, SimplicialComplex2};
use crate::{Error, Result};

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % m.nrows(), pos / m.nrows());
        return Err(Error::invalid(format!(
            "{what} has a non-finite entry at frame {r}, column {c}"
        )));
    }
    Ok(())
}

/// `T x n0` node signals, optionally tagged with a state id per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTimeSeries {
    data: DMatrix<f64>,
    frame_labels: Option<Vec<usize>>,
}

impl NodeTimeSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::invalid("a node time series needs at least 2 frames"));
        }
        check_finite(&data, "node time series")?;
        Ok(Self {
            data,
            frame_labels: None,
        })
    }

    pub fn with_labels(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != data.nrows() {
            return Err(Error::invalid(format!(
                "{} frame labels for {} frames",
                labels.len(),
                data.nrows()
            )));
        }
        let mut s = Self::new(data)?;
        s.frame_labels = Some(labels);
        Ok(s)
    }

    /// Same labels, new values.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        match &self.frame_labels {
            Some(l) => Self::with_labels(data, l.clone()),
            None => Self::new(data),
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn frame_labels(&self) -> Option<&[usize]> {
        self.frame_labels.as_deref()
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.data.ncols()
    }
}

/// `T x n1` edge signals in the complex's edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTimeSeries {
    data: DMatrix<f64>,
}

impl EdgeTimeSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_finite(&data, "edge time series")?;
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.data.ncols()
    }
}

/// Instantaneous phases in `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSeries {
    data: DMatrix<f64>,
}

impl PhaseSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !(**v > -PI && **v <= PI)) {
            return Err(Error::invalid(format!("phase {v} outside (-pi, pi]")));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }
}

fn wrap_phase(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Phase of the FFT-based analytic signal of each demeaned column.
///
/// Negative-frequency bins are zeroed and positive ones doubled; the DC and
/// (for even lengths) Nyquist bins are kept as they are. No taper or padding
/// is applied, so the first and last few frames carry edge effects.
pub fn hilbert_phase(x: &NodeTimeSeries) -> Result<PhaseSeries> {
    let t = x.n_frames();
    if t < 4 {
        return Err(Error::invalid("Hilbert phase needs at least 4 frames"));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(t);
    let inv = planner.plan_fft_inverse(t);
    let mut out = DMatrix::zeros(t, x.n_nodes());
    let mut buf = vec![Complex::new(0.0, 0.0); t];
    for (i, col) in x.data().column_iter().enumerate() {
        let mean = col.mean();
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
            return Err(Error::invalid(format!("zero-variance channel {i}")));
        }
        for (b, v) in buf.iter_mut().zip(col.iter()) {
            *b = Complex::new(v - mean, 0.0);
        }
        fwd.process(&mut buf);
        let half = t / 2;
        let pos_end = if t.is_multiple_of(2) { half } else { half + 1 };
        for b in &mut buf[1..pos_end] {
            *b *= 2.0;
        }
        for b in &mut buf[half + 1..] {
            *b = Complex::new(0.0, 0.0);
        }
        inv.process(&mut buf);
        for (r, b) in buf.iter().enumerate() {
            out[(r, i)] = wrap_phase(b.im.atan2(b.re));
        }
    }
    PhaseSeries::new(out)
}

fn check_nodes(width: usize, k: &SimplicialComplex2) -> Result<()> {
    if width != k.n_nodes() {
        return Err(Error::invalid(format!(
            "signal has {width} channels but the complex has {} nodes",
            k.n_nodes()
        )));
    }
    Ok(())
}

/// Co-fluctuation lift `e_ij(t) = x_i(t) x_j(t)` on raw values.
pub fn lift_product(x: &NodeTimeSeries, k: &SimplicialComplex2) -> Result<EdgeTimeSeries> {
    check_nodes(x.n_nodes(), k)?;
    let d = x.data();
    let data = DMatrix::from_fn(x.n_frames(), k.n_edges(), |t, e| {
        let (i, j) = k.edges()[e];
        d[(t, i)] * d[(t, j)]
    });
    EdgeTimeSeries::new(data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseFn {
    Sin,
    Cos,
}

impl fmt::Display for PhaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseFn::Sin => "sin",
            PhaseFn::Cos => "cos",
        })
    }
}

impl FromStr for PhaseFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(Self::Sin),
            "cos" => Ok(Self::Cos),
            _ => Err(Error::invalid(format!("unknown phase function '{s}'"))),
        }
    }
}

/// Phase-synchrony lift `e_ij(t) = f(theta_i(t) - theta_j(t))` for the
/// oriented edge `(i, j)`, `i < j`.
pub fn lift_phase(
    theta: &PhaseSeries,
    k: &SimplicialComplex2,
    f: PhaseFn,
) -> Result<EdgeTimeSeries> {
    check_nodes(theta.data.ncols(), k)?;
    let d = &theta.data;
    let data = DMatrix::from_fn(d.nrows(), k.n_edges(), |t, e| {
        let (i, j) = k.edges()[e];
        let delta = d[(t, i)] - d[(t, j)];
        match f {
            PhaseFn::Sin => delta.sin(),
            PhaseFn::Cos => delta.cos(),
        }
    });
    EdgeTimeSeries::new(data)
}

/// Per-column z-score over time with the sample (n - 1) standard deviation.
pub fn zscore_columns(x: &NodeTimeSeries) -> Result<NodeTimeSeries> {
    let t = x.n_frames() as f64;
    let mut out = x.data().clone();
    for (i, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
        if sd <= 0.0 {
            return Err(Error::invalid(format!("zero-variance channel {i}")));
        }
        col.apply(|v| *v = (*v - mean) / sd);
    }
    x.with_data(out)
}

/// Ordinary-least-squares residuals of every column of `x` on
/// `[1 | regressors]`.
pub fn regress_out(x: &NodeTimeSeries, regressors: &DMatrix<f64>) -> Result<NodeTimeSeries> {
    let t = x.n_frames();
    if regressors.nrows() != t {
        return Err(Error::invalid(format!(
            "regressors have {} rows for {t} frames",
            regressors.nrows()
        )));
    }
    let p = regressors.ncols();
    if p + 1 > t {
        return Err(Error::invalid("more regressors than frames"));
    }
    let mut design = DMatrix::from_element(t, p + 1, 1.0);
    design.columns_mut(1, p).copy_from(regressors);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if smax <= 0.0 || rank < p + 1 {
        return Err(Error::invalid(format!(
            "design matrix is rank deficient (rank {rank} < {})",
            p + 1
        )));
    }
    let beta = svd
        .solve(x.data(), 1e-10 * smax)
        .map_err(|e| Error::numerical(format!("least squares failed: {e}")))?;
    x.with_data(x.data() - design * beta)
}

/// Boxcar indicator per state, dropping the first state so the design stays
/// full rank next to the intercept.
pub fn block_regressors(labels: &[usize], n_states: usize) -> DMatrix<f64> {
    let cols = n_states.saturating_sub(1);
    DMatrix::from_fn(labels.len(), cols, |t, s| {
        if labels[t] == s + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Per-edge `sqrt(sum_t x(t)^2)`.
pub fn temporal_l2_norm(e: &EdgeTimeSeries) -> DVector<f64> {
    DVector::from_iterator(e.n_edges(), e.data().column_iter().map(|c| c.norm()))
}

/// `s = |B1| v`: each node collects the values on its incident edges.
pub fn project_edges_to_nodes(b: &BoundaryOperators, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != b.n_edges() {
        return Err(Error::invalid(format!(
            "edge vector has length {} but the complex has {} edges",
            v.len(),
            b.n_edges()
        )));
    }
    if v.iter().any(|x| *x < 0.0) {
        log::warn!("projecting an edge vector with negative entries");
    }
    Ok(DVector::from_vec(b.b1.abs_mul_vec(v.as_slice())))
}
