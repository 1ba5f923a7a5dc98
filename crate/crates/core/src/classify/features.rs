use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Identifies one column of a feature matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleMeta {
    pub subject: usize,
    pub state: usize,
    pub encoding: usize,
}

impl SampleMeta {
    fn order_key(&self) -> (usize, usize, usize) {
        (self.state, self.encoding, self.subject)
    }
}

/// `n_features x n_samples` matrix, one column per (subject, state, encoding).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    meta: Vec<SampleMeta>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>, meta: Vec<SampleMeta>) -> Result<Self> {
        if data.ncols() != meta.len() {
            return Err(Error::invalid(format!(
                "{} columns but {} column descriptors",
                data.ncols(),
                meta.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::invalid(format!("non-finite feature at ({r},{c})")));
        }
        Ok(Self { data, meta })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn meta(&self) -> &[SampleMeta] {
        &self.meta
    }

    pub fn n_features(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Brain-state id of every column.
    pub fn states(&self) -> Vec<usize> {
        self.meta.iter().map(|m| m.state).collect()
    }

    pub fn subjects(&self) -> Vec<usize> {
        self.meta
            .iter()
            .map(|m| m.subject)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Per-feature affine standardization fitted on a set of columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    /// Fits mean and sample standard deviation (ddof 1) of each row over
    /// `cols`. Rows with zero spread get scale 1, so they map to zero.
    pub fn fit(x: &DMatrix<f64>, cols: &[usize]) -> Self {
        let n = cols.len() as f64;
        let mut mean = DVector::zeros(x.nrows());
        let mut scale = DVector::from_element(x.nrows(), 1.0);
        for r in 0..x.nrows() {
            let m = cols.iter().map(|&c| x[(r, c)]).sum::<f64>() / n;
            let ss = cols.iter().map(|&c| (x[(r, c)] - m).powi(2)).sum::<f64>();
            let sd = if cols.len() > 1 {
                (ss / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            mean[r] = m;
            if sd > 1e-12 * m.abs().max(1e-300) {
                scale[r] = sd;
            }
        }
        Self { mean, scale }
    }

    /// Rows whose fitted spread was zero.
    pub fn constant_rows(&self, x: &DMatrix<f64>, cols: &[usize]) -> Vec<usize> {
        (0..x.nrows())
            .filter(|&r| cols.iter().all(|&c| x[(r, c)] == x[(r, cols[0])]))
            .collect()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
            (x[(r, c)] - self.mean[r]) / self.scale[r]
        })
    }
}

/// Orders the nodal vectors by (state, encoding, subject) without scaling.
///
/// Every combination of the subjects, states and encodings that occur in
/// `values` must be present.
pub fn assemble_raw(values: &BTreeMap<SampleMeta, DVector<f64>>) -> Result<FeatureMatrix> {
    let first = values
        .values()
        .next()
        .ok_or_else(|| Error::invalid("no nodal feature vectors"))?;
    let n = first.len();
    let subjects: BTreeSet<usize> = values.keys().map(|m| m.subject).collect();
    let states: BTreeSet<usize> = values.keys().map(|m| m.state).collect();
    let encodings: BTreeSet<usize> = values.keys().map(|m| m.encoding).collect();
    let mut missing = Vec::new();
    for &state in &states {
        for &encoding in &encodings {
            for &subject in &subjects {
                let m = SampleMeta {
                    subject,
                    state,
                    encoding,
                };
                if !values.contains_key(&m) {
                    missing.push(format!(
                        "(subject {subject}, state {state}, encoding {encoding})"
                    ));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "missing feature vectors: {}",
            missing.join(", ")
        )));
    }
    let mut meta: Vec<SampleMeta> = values.keys().copied().collect();
    meta.sort_by_key(SampleMeta::order_key);
    let mut data = DMatrix::zeros(n, meta.len());
    for (c, m) in meta.iter().enumerate() {
        let v = &values[m];
        if v.len() != n {
            return Err(Error::invalid(format!(
                "feature vector for subject {} state {} encoding {} has length {}, expected {n}",
                m.subject,
                m.state,
                m.encoding,
                v.len()
            )));
        }
        data.set_column(c, v);
    }
    FeatureMatrix::new(data, meta)
}

/// [`assemble_raw`] followed by z-scoring every feature across all columns.
pub fn assemble_features(values: &BTreeMap<SampleMeta, DVector<f64>>) -> Result<FeatureMatrix> {
    let raw = assemble_raw(values)?;
    let cols: Vec<usize> = (0..raw.n_samples()).collect();
    let s = Standardizer::fit(&raw.data, &cols);
    if let Some(&r) = s.constant_rows(&raw.data, &cols).first() {
        return Err(Error::invalid(format!("zero variance feature {r}")));
    }
    FeatureMatrix::new(s.apply(&raw.data), raw.meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(subject: usize, state: usize, encoding: usize) -> SampleMeta {
        SampleMeta {
            subject,
            state,
            encoding,
        }
    }

    #[test]
    fn column_order_is_state_encoding_subject() {
        let mut v = BTreeMap::new();
        for s in 0..2 {
            for st in 0..2 {
                v.insert(
                    meta(s, st, 0),
                    DVector::from_vec(vec![(10 * s + st) as f64, (s * st) as f64]),
                );
            }
        }
        let f = assemble_features(&v).unwrap();
        assert_eq!(
            f.meta(),
            &[meta(0, 0, 0), meta(1, 0, 0), meta(0, 1, 0), meta(1, 1, 0)]
        );
        for r in 0..2 {
            let row = f.data().row(r);
            assert!(row.mean().abs() < 1e-12);
            assert!((row.variance() * 4.0 / 3.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_feature_is_rejected() {
        let mut v = BTreeMap::new();
        v.insert(meta(0, 0, 0), DVector::from_vec(vec![1.0, 2.0]));
        v.insert(meta(0, 1, 0), DVector::from_vec(vec![1.0, 3.0]));
        let err = assemble_features(&v).unwrap_err();
        assert!(err.to_string().contains("zero variance feature 0"));
        assert!(assemble_raw(&v).is_ok());
    }

    #[test]
    fn missing_triple_is_named() {
        let mut v = BTreeMap::new();
        v.insert(meta(0, 0, 0), DVector::from_vec(vec![1.0]));
        v.insert(meta(1, 1, 0), DVector::from_vec(vec![2.0]));
        let err = assemble_raw(&v).unwrap_err().to_string();
        assert!(err.contains("(subject 1, state 0, encoding 0)"), "{err}");
        assert!(err.contains("(subject 0, state 1, encoding 0)"), "{err}");
    }

    #[test]
    fn unequal_lengths_rejected() {
        let mut v = BTreeMap::new();
        v.insert(meta(0, 0, 0), DVector::from_vec(vec![1.0]));
        v.insert(meta(0, 1, 0), DVector::from_vec(vec![2.0, 1.0]));
        assert!(assemble_raw(&v).is_err());
    }

    #[test]
    fn standardizer_uses_only_fitted_columns() {
        let x = DMatrix::from_row_slice(1, 4, &[1.0, 3.0, 100.0, 5.0]);
        let s = Standardizer::fit(&x, &[0, 1]);
        assert_eq!(s.mean[0], 2.0);
        assert!((s.scale[0] - 2f64.sqrt()).abs() < 1e-15);
        let y = s.apply(&x);
        assert!((y[(0, 3)] - 3.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
