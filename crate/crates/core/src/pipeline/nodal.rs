use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::json;

use super::{PipelineConfig, PipelineContext, Variant};
use crate::classify::{
    assemble_raw, binomial_interval, loso_cv, CvResult, FeatureMatrix, SampleMeta,
};
use crate::error::StageExt;
use crate::rng::rng_for;
use crate::synth::Dataset;
use crate::Result;

#[derive(Clone, Debug)]
pub struct StaticVariantResult {
    pub variant: Variant,
    pub cv: CvResult,
    /// The same cross-validation with permuted labels.
    pub shuffled: Option<CvResult>,
}

#[derive(Clone, Debug)]
pub struct StaticReport {
    pub config: PipelineConfig,
    pub n_features: usize,
    pub n_samples: usize,
    pub n_classes: usize,
    pub chance_interval: (f64, f64),
    pub results: Vec<StaticVariantResult>,
}

impl StaticReport {
    pub fn chance(&self) -> f64 {
        1.0 / self.n_classes as f64
    }

    pub fn get(&self, name: &str) -> Option<&StaticVariantResult> {
        self.results.iter().find(|r| r.variant.to_string() == name)
    }

    /// Highest accuracy among the variants matching `pred`.
    pub fn best(&self, pred: impl Fn(&Variant) -> bool) -> Option<&StaticVariantResult> {
        self.results.iter().filter(|r| pred(&r.variant)).fold(
            None,
            |best: Option<&StaticVariantResult>, r| match best {
                Some(b) if b.cv.accuracy >= r.cv.accuracy => Some(b),
                _ => Some(r),
            },
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        let variants: Vec<_> = self
            .results
            .iter()
            .map(|r| {
                json!({
                    "name": r.variant.to_string(),
                    "accuracy": r.cv.accuracy,
                    "per_fold": r.cv.per_fold,
                    "shuffled_accuracy": r.shuffled.as_ref().map(|s| s.accuracy),
                })
            })
            .collect();
        json!({
            "schema": 1,
            "experiment": "static",
            "config": self.config.to_json(),
            "hyperparameters": {
                "c_reg": self.config.c_reg,
                "epochs": self.config.svm_epochs,
                "lambda": "1 / (c_reg * n_pair_samples)",
                "step": "1 / (lambda * t)",
            },
            "feature_shape": [self.n_features, self.n_samples],
            "chance": self.chance(),
            "chance_interval_99": [self.chance_interval.0, self.chance_interval.1],
            "variants": variants,
        })
    }
}

/// Unscaled nodal feature matrix of `variant`, one column per
/// (subject, state, encoding).
pub fn static_features(
    ds: &Dataset,
    cfg: &PipelineConfig,
    ctx: &PipelineContext,
    variant: Variant,
) -> Result<FeatureMatrix> {
    let n_states = ds.state_names.len();
    let blocks = ds
        .recordings
        .par_iter()
        .map(|r| {
            let x = ctx.preprocess(cfg, &r.series, n_states)?;
            let vals = ctx.nodal_values(cfg, variant, &x, n_states)?;
            Ok(vals
                .into_iter()
                .enumerate()
                .map(|(state, v)| {
                    let m = SampleMeta {
                        subject: r.subject,
                        state,
                        encoding: r.encoding,
                    };
                    (m, v)
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let map: BTreeMap<SampleMeta, DVector<f64>> = blocks.into_iter().flatten().collect();
    assemble_raw(&map).stage("features")
}

/// Leave-one-subject-out decoding of the state of every
/// (subject, state, encoding) block for each configured variant.
///
/// Features are standardized inside each fold. The shuffled control
/// permutes the labels once with `rng_for(seed, "shuffle", 0)` and reuses
/// that permutation for every variant.
pub fn run_static_decoding(ds: &Dataset, cfg: &PipelineConfig) -> Result<StaticReport> {
    cfg.validate()?;
    let variants = cfg.variant_list();
    let ctx = PipelineContext::build(&ds.graph, cfg, &variants)?;
    let svm = cfg.svm_params();

    let results = variants
        .iter()
        .map(|&variant| {
            let f = static_features(ds, cfg, &ctx, variant)?;
            let labels = f.states();
            let cv = loso_cv(&f, &labels, &svm, cfg.seed).stage("classify")?;
            let shuffled = if cfg.shuffle_control {
                let mut perm = labels.clone();
                perm.shuffle(&mut rng_for(cfg.seed, "shuffle", 0));
                Some(loso_cv(&f, &perm, &svm, cfg.seed).stage("classify")?)
            } else {
                None
            };
            log::info!("{variant}: accuracy {:.4}", cv.accuracy);
            Ok((
                StaticVariantResult {
                    variant,
                    cv,
                    shuffled,
                },
                f.n_features(),
                f.n_samples(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let (n_features, n_samples) = results.first().map_or((0, 0), |r| (r.1, r.2));
    let n_classes = ds.state_names.len();
    Ok(StaticReport {
        config: cfg.clone(),
        n_features,
        n_samples,
        n_classes,
        chance_interval: binomial_interval(n_samples, 1.0 / n_classes as f64, 0.99),
        results: results.into_iter().map(|r| r.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, SynthConfig};

    #[test]
    fn feature_columns_follow_documented_order() {
        let ds = generate_dataset(&SynthConfig {
            n_nodes: 20,
            n_subjects: 3,
            n_states: 2,
            frames_per_state: 10,
            n_modules: 2,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig::parse("threshold_fraction = 0.5\n").unwrap();
        let v = Variant::Raw;
        let ctx = PipelineContext::build(&ds.graph, &cfg, &[v]).unwrap();
        let f = static_features(&ds, &cfg, &ctx, v).unwrap();
        assert_eq!((f.n_features(), f.n_samples()), (20, 12));
        let m = f.meta();
        assert_eq!((m[0].state, m[0].encoding, m[0].subject), (0, 0, 0));
        assert_eq!((m[1].state, m[1].encoding, m[1].subject), (0, 0, 1));
        assert_eq!((m[3].state, m[3].encoding, m[3].subject), (0, 1, 0));
        assert_eq!((m[6].state, m[6].encoding, m[6].subject), (1, 0, 0));
    }

    #[test]
    fn static_report_is_deterministic() {
        let ds = generate_dataset(&SynthConfig {
            n_nodes: 24,
            n_subjects: 3,
            n_states: 3,
            frames_per_state: 12,
            n_modules: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg =
            PipelineConfig::parse("threshold_fraction = 0.5\ngsp_cutoff = 8\nsvm_epochs = 20\n")
                .unwrap();
        let a = run_static_decoding(&ds, &cfg).unwrap();
        let b = run_static_decoding(&ds, &cfg).unwrap();
        assert_eq!(a.to_json().to_string(), b.to_json().to_string());
        assert_eq!(a.n_samples, 18);
        assert_eq!(a.results.len(), 4);
        assert!(a.best(Variant::is_tsp).is_some());
    }
}
