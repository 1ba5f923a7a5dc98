use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_linear_svm_ovo, FeatureMatrix, Standardizer, SvmParams};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub subject: usize,
    pub correct: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub accuracy: f64,
    pub per_fold: Vec<FoldResult>,
}

/// Leave-one-subject-out cross-validation of the one-vs-one SVM.
///
/// `labels` gives the target of every column (normally the state ids, or a
/// shuffled copy for a control run). Standardization is fitted on the
/// training columns of each fold only. Fold `k` (subjects in ascending
/// order) trains with seed `derive_seed(seed, "loso", k)`.
pub fn loso_cv(
    f: &FeatureMatrix,
    labels: &[usize],
    params: &SvmParams,
    seed: u64,
) -> Result<CvResult> {
    if labels.len() != f.n_samples() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            f.n_samples()
        )));
    }
    let subjects = f.subjects();
    if subjects.len() < 2 {
        return Err(Error::invalid(
            "leave-one-subject-out needs at least two subjects",
        ));
    }
    let states: BTreeSet<usize> = f.meta().iter().map(|m| m.state).collect();
    let mut seen: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for m in f.meta() {
        seen.entry(m.subject).or_default().insert(m.state);
    }
    for (s, st) in &seen {
        if st != &states {
            let missing: Vec<String> = states.difference(st).map(|v| v.to_string()).collect();
            return Err(Error::invalid(format!(
                "subject {s} is missing states {}",
                missing.join(", ")
            )));
        }
    }

    let per_fold = subjects
        .par_iter()
        .enumerate()
        .map(|(k, &subject)| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..f.n_samples()).partition(|&c| f.meta()[c].subject == subject);
            let scaler = Standardizer::fit(f.data(), &train);
            let z = scaler.apply(f.data());
            let train_x = z.select_columns(&train);
            let train_y: Vec<usize> = train.iter().map(|&c| labels[c]).collect();
            let model = train_linear_svm_ovo(
                &train_x,
                &train_y,
                params,
                derive_seed(seed, "loso", k as u64),
            )?;
            let pred = model.predict_columns(&z.select_columns(&test))?;
            let correct = pred
                .iter()
                .zip(&test)
                .filter(|(p, &c)| **p == labels[c])
                .count();
            Ok(FoldResult {
                subject,
                correct,
                total: test.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correct: usize = per_fold.iter().map(|r| r.correct).sum();
    let total: usize = per_fold.iter().map(|r| r.total).sum();
    Ok(CvResult {
        accuracy: correct as f64 / total as f64,
        per_fold,
    })
}

/// Central `level` acceptance interval for the success fraction of
/// Binomial(`n`, `p`), as `(lo, hi)` fractions of `n`.
pub fn binomial_interval(n: usize, p: f64, level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    // pmf recurrence in log space
    let log_odds = (p / (1.0 - p)).ln();
    let mut log_pmf = n as f64 * (1.0 - p).ln();
    let mut cdf = 0.0;
    let mut lo = None;
    let mut hi = n;
    for k in 0..=n {
        cdf += log_pmf.exp();
        if lo.is_none() && cdf > tail {
            lo = Some(k);
        }
        if cdf >= 1.0 - tail {
            hi = k;
            break;
        }
        log_pmf += ((n - k) as f64 / (k + 1) as f64).ln() + log_odds;
    }
    (lo.unwrap_or(0) as f64 / n as f64, hi as f64 / n as f64)
}
