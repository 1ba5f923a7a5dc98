use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{
    binarize_percentile, consensus_cluster, element_centric_similarity, recurrence_matrix,
    Partition, RecurrenceMatrix,
};
use crate::rng::{derive_seed, rng_for};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterParams {
    pub pct: f64,
    pub consensus_runs: usize,
    pub alpha: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            pct: 95.0,
            consensus_runs: 100,
            alpha: 0.9,
        }
    }
}

impl ClusterParams {
    /// Recurrence, binarization and consensus clustering of one
    /// time-major signal.
    pub fn cluster(&self, sig: &DMatrix<f64>, seed: u64) -> Result<(RecurrenceMatrix, Partition)> {
        let r = recurrence_matrix(sig)?;
        let b = binarize_percentile(&r, self.pct)?;
        let c = consensus_cluster(&b.m, self.consensus_runs, seed)?;
        Ok((r, c.partition))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapResult {
    pub mean: f64,
    /// Population standard deviation over resamples.
    pub std: f64,
    pub per_sample: Vec<f64>,
    pub partitions: Vec<Partition>,
}

/// Mean and spread of ECS against `truth` over `n_boot` subsamples of
/// `sample_size` recordings drawn without replacement.
///
/// Recordings share the time axis and are concatenated column-wise in
/// ascending index order. Resample `b` draws its subset from
/// `rng_for(seed, "bootstrap", b)` and clusters with
/// `derive_seed(seed, "bootstrap-consensus", b)`.
pub fn bootstrap_ecs(
    recordings: &[DMatrix<f64>],
    truth: &Partition,
    n_boot: usize,
    sample_size: usize,
    seed: u64,
    params: &ClusterParams,
) -> Result<BootstrapResult> {
    if recordings.is_empty() {
        return Err(Error::invalid("no recordings to bootstrap"));
    }
    if n_boot == 0 {
        return Err(Error::invalid("n_boot must be at least 1"));
    }
    if sample_size == 0 || sample_size > recordings.len() {
        return Err(Error::invalid(format!(
            "sample size {sample_size} not in 1..={}",
            recordings.len()
        )));
    }
    let t = recordings[0].nrows();
    if let Some(k) = recordings.iter().position(|r| r.nrows() != t) {
        return Err(Error::invalid(format!(
            "recording {k} has {} frames, expected {t}",
            recordings[k].nrows()
        )));
    }
    if truth.len() != t {
        return Err(Error::invalid(format!(
            "truth has {} labels for {t} frames",
            truth.len()
        )));
    }

    let samples: Vec<(f64, Partition)> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(seed, "bootstrap", b as u64);
            let mut idx =
                rand::seq::index::sample(&mut rng, recordings.len(), sample_size).into_vec();
            idx.sort_unstable();
            let parts: Vec<&DMatrix<f64>> = idx.iter().map(|&i| &recordings[i]).collect();
            let sig = hconcat(&parts);
            let (_, p) =
                params.cluster(&sig, derive_seed(seed, "bootstrap-consensus", b as u64))?;
            let e = element_centric_similarity(&p, truth, params.alpha)?;
            Ok((e, p))
        })
        .collect::<Result<_>>()?;

    let (per_sample, partitions): (Vec<f64>, Vec<Partition>) = samples.into_iter().unzip();
    let (mean, std) = mean_std(&per_sample);
    Ok(BootstrapResult {
        mean,
        std,
        per_sample,
        partitions,
    })
}

/// Column-wise concatenation of matrices with equal row counts.
pub fn hconcat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.columns_mut(c, p.ncols()).copy_from(p);
        c += p.ncols();
    }
    out
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
