use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::json;

use super::{PipelineConfig, PipelineContext, Variant};
use crate::cluster::{
    bootstrap_ecs, element_centric_similarity, hconcat, mean_std, recurrence_matrix,
    BootstrapResult, Partition, RecurrenceMatrix,
};
use crate::error::StageExt;
use crate::rng::rng_for;
use crate::synth::Dataset;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct DynamicVariantResult {
    pub variant: Variant,
    pub boot: BootstrapResult,
    /// ECS of every bootstrap partition against every label permutation.
    pub null_mean: f64,
    pub null_std: f64,
    /// Recurrence of all subjects concatenated.
    pub full_recurrence: RecurrenceMatrix,
}

#[derive(Clone, Debug)]
pub struct DynamicReport {
    pub config: PipelineConfig,
    pub n_subjects: usize,
    pub sample_size: usize,
    pub n_edges: usize,
    pub n_triangles: usize,
    pub results: Vec<DynamicVariantResult>,
}

impl DynamicReport {
    pub fn get(&self, name: &str) -> Option<&DynamicVariantResult> {
        self.results.iter().find(|r| r.variant.to_string() == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let variants: Vec<_> = self
            .results
            .iter()
            .map(|r| {
                json!({
                    "name": r.variant.to_string(),
                    "ecs_mean": r.boot.mean,
                    "ecs_std": r.boot.std,
                    "n_boot": r.boot.per_sample.len(),
                    "per_sample": r.boot.per_sample,
                    "n_communities": r.boot.partitions.iter().map(Partition::n_communities).collect::<Vec<_>>(),
                    "null_mean": r.null_mean,
                    "null_std": r.null_std,
                })
            })
            .collect();
        json!({
            "schema": 1,
            "experiment": "dynamic",
            "config": self.config.to_json(),
            "n_subjects": self.n_subjects,
            "sample_size": self.sample_size,
            "complex": {"n_edges": self.n_edges, "n_triangles": self.n_triangles},
            "variants": variants,
        })
    }
}

/// Per subject, the variant signals of all its encodings side by side.
pub(crate) fn subject_units(
    ds: &Dataset,
    cfg: &PipelineConfig,
    ctx: &PipelineContext,
    variant: Variant,
) -> Result<Vec<DMatrix<f64>>> {
    let n_states = ds.state_names.len();
    let signals = ds
        .recordings
        .par_iter()
        .map(|r| {
            let x = ctx.preprocess(cfg, &r.series, n_states)?;
            Ok((r.subject, ctx.variant_signal(cfg, variant, &x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_subject: BTreeMap<usize, Vec<DMatrix<f64>>> = BTreeMap::new();
    for (s, m) in signals {
        by_subject.entry(s).or_default().push(m);
    }
    Ok(by_subject
        .into_values()
        .map(|ms| hconcat(&ms.iter().collect::<Vec<_>>()))
        .collect())
}

/// Recurrence clustering of every configured variant, scored by ECS
/// against the frame labels. `gsp-sdi` has no time course and is skipped.
///
/// Bootstrap samples draw subjects, so every variant sees the same subject
/// subsets. Label permutation `k` of the null uses
/// `rng_for(seed, "null", k)`.
pub fn run_dynamic_decoding(ds: &Dataset, cfg: &PipelineConfig) -> Result<DynamicReport> {
    cfg.validate()?;
    let sdi = Variant::Gsp(super::GspPart::Sdi);
    let variants: Vec<Variant> = cfg
        .variant_list()
        .into_iter()
        .filter(|v| *v != sdi)
        .collect();
    if variants.len() < cfg.variant_list().len() {
        log::warn!("{sdi} has no time course; skipped for dynamic decoding");
    }
    if variants.is_empty() {
        return Err(Error::invalid(format!(
            "no variant usable for dynamic decoding ({sdi} has no time course)"
        )));
    }
    let ctx = PipelineContext::build(&ds.graph, cfg, &variants)?;
    let truth = Partition::from_labels(&ds.frame_labels)?;
    let permuted: Vec<Partition> = (0..cfg.null_permutations)
        .map(|k| {
            let mut l = ds.frame_labels.clone();
            l.shuffle(&mut rng_for(cfg.seed, "null", k as u64));
            Partition::from_labels(&l)
        })
        .collect::<Result<_>>()?;
    let params = cfg.cluster_params();

    let results = variants
        .iter()
        .map(|&variant| {
            run_variant(ds, cfg, &ctx, variant, &truth, &permuted, &params)
                .inspect_err(|e| log::error!("{variant}: {e}"))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_subjects = ds
        .recordings
        .iter()
        .map(|r| r.subject)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(DynamicReport {
        config: cfg.clone(),
        n_subjects,
        sample_size: cfg.sample_size(n_subjects),
        n_edges: ctx.complex.n_edges(),
        n_triangles: ctx.complex.n_triangles(),
        results,
    })
}

fn run_variant(
    ds: &Dataset,
    cfg: &PipelineConfig,
    ctx: &PipelineContext,
    variant: Variant,
    truth: &Partition,
    permuted: &[Partition],
    params: &crate::cluster::ClusterParams,
) -> Result<DynamicVariantResult> {
    let units = subject_units(ds, cfg, ctx, variant)?;
    let sample_size = cfg.sample_size(units.len());
    let boot =
        bootstrap_ecs(&units, truth, cfg.n_boot, sample_size, cfg.seed, params).stage("cluster")?;
    let null: Vec<f64> = boot
        .partitions
        .iter()
        .flat_map(|p| {
            permuted
                .iter()
                .map(move |q| element_centric_similarity(p, q, cfg.ecs_alpha))
        })
        .collect::<Result<_>>()?;
    let (null_mean, null_std) = if null.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        mean_std(&null)
    };
    let all = hconcat(&units.iter().collect::<Vec<_>>());
    let full_recurrence = recurrence_matrix(&all).stage("cluster")?;
    log::info!(
        "{variant}: ECS {:.4} +/- {:.4} (null {null_mean:.4})",
        boot.mean,
        boot.std
    );
    Ok(DynamicVariantResult {
        variant,
        boot,
        null_mean,
        null_std,
        full_recurrence,
    })
}
