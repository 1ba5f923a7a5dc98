use nalgebra::DMatrix;

use crate::{Error, Result};

/// Time-by-time similarity matrix, either Pearson correlations or their
/// binarized version.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceMatrix {
    pub m: DMatrix<f64>,
    pub binarized: bool,
    /// Frames whose feature vector had zero variance; their correlations are 0.
    pub degenerate_frames: Vec<usize>,
}

impl RecurrenceMatrix {
    pub fn n_frames(&self) -> usize {
        self.m.nrows()
    }
}

/// Pearson correlation between every pair of frames (rows) of `sig`.
pub fn recurrence_matrix(sig: &DMatrix<f64>) -> Result<RecurrenceMatrix> {
    let (t, f) = sig.shape();
    if f < 2 {
        return Err(Error::invalid(
            "recurrence needs at least 2 features per frame",
        ));
    }
    if t < 3 {
        return Err(Error::invalid("recurrence needs at least 3 frames"));
    }
    let mut z = sig.clone();
    let mut degenerate = Vec::new();
    for (r, mut row) in z.row_iter_mut().enumerate() {
        let mean = row.mean();
        row.apply(|v| *v -= mean);
        let norm = row.norm();
        if norm <= 1e-300 || norm <= 1e-14 * mean.abs() * (f as f64).sqrt() {
            degenerate.push(r);
            row.fill(0.0);
        } else {
            row /= norm;
        }
    }
    if !degenerate.is_empty() {
        log::warn!(
            "{} frames have zero variance across features",
            degenerate.len()
        );
    }
    let gram = &z * z.transpose();
    let mut m = DMatrix::zeros(t, t);
    for i in 0..t {
        m[(i, i)] = 1.0;
        for j in (i + 1)..t {
            let v = gram[(i, j)].clamp(-1.0, 1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(RecurrenceMatrix {
        m,
        binarized: false,
        degenerate_frames: degenerate,
    })
}

/// Sets entries strictly above the nearest-rank `pct` percentile of the
/// off-diagonal upper triangle to 1 and everything else (diagonal included)
/// to 0.
pub fn binarize_percentile(r: &RecurrenceMatrix, pct: f64) -> Result<RecurrenceMatrix> {
    if r.binarized {
        return Err(Error::invalid("recurrence matrix is already binarized"));
    }
    if !(pct > 0.0 && pct < 100.0) {
        return Err(Error::invalid(format!("percentile {pct} outside (0, 100)")));
    }
    let t = r.n_frames();
    let mut vals: Vec<f64> = Vec::with_capacity(t * (t - 1) / 2);
    for i in 0..t {
        for j in (i + 1)..t {
            vals.push(r.m[(i, j)]);
        }
    }
    if vals.is_empty() {
        return Err(Error::invalid(
            "recurrence matrix has no off-diagonal entries",
        ));
    }
    vals.sort_by(f64::total_cmp);
    if vals[0] == vals[vals.len() - 1] {
        return Err(Error::invalid(
            "degenerate threshold: all off-diagonal values are equal",
        ));
    }
    let rank = ((pct / 100.0 * vals.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let threshold = vals[rank - 1];
    let m = DMatrix::from_fn(t, t, |i, j| {
        if i != j && r.m[(i, j)] > threshold {
            1.0
        } else {
            0.0
        }
    });
    Ok(RecurrenceMatrix {
        m,
        binarized: true,
        degenerate_frames: r.degenerate_frames.clone(),
    })
}
