use std::path::Path;

use serde_json::json;

use super::variant::{Lift, Variant};
use crate::classify::SvmParams;
use crate::cluster::ClusterParams;
use crate::signals::PhaseFn;
use crate::spectral::{HodgePart, LaplacianVariant};
use crate::{Error, Result};

/// Settings shared by the dynamic and static experiments.
///
/// The text format is one `key = value` per line; `#` starts a comment.
/// `variants` takes a comma-separated list of variant names or `grid`.
/// When it is absent the list is `raw`, `gsp-coupled`, `gsp-decoupled`
/// and the TSP variant named by `laplacian_variant`, `lift` and
/// `hodge_part`.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub threshold_fraction: f64,
    pub laplacian_variant: LaplacianVariant,
    pub lift: Lift,
    pub hodge_part: Option<HodgePart>,
    pub variants: Option<Vec<Variant>>,
    pub gsp_cutoff: usize,
    pub recurrence_pct: f64,
    pub consensus_runs: usize,
    pub ecs_alpha: f64,
    pub n_boot: usize,
    pub boot_fraction: f64,
    pub null_permutations: usize,
    pub regress_blocks: bool,
    pub zscore_product: bool,
    pub c_reg: f64,
    pub svm_epochs: usize,
    pub shuffle_control: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.2,
            laplacian_variant: LaplacianVariant::Down,
            lift: Lift::Phase(PhaseFn::Sin),
            hodge_part: Some(HodgePart::Harm),
            variants: None,
            gsp_cutoff: 30,
            recurrence_pct: 95.0,
            consensus_runs: 100,
            ecs_alpha: 0.9,
            n_boot: 10,
            boot_fraction: 0.8,
            null_permutations: 20,
            regress_blocks: true,
            zscore_product: true,
            c_reg: 1.0,
            svm_epochs: 200,
            shuffle_control: true,
            seed: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::invalid(format!(
            "{key}: expected true or false, got '{v}'"
        ))),
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key = value", k + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::invalid(format!("line {}: {e}", k + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "threshold_fraction" => self.threshold_fraction = parse_num(key, v)?,
            "laplacian_variant" => self.laplacian_variant = v.parse()?,
            "lift" => self.lift = v.parse()?,
            "hodge_part" => {
                self.hodge_part = if v.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(v.parse()?)
                }
            }
            "variants" => {
                self.variants = Some(if v.eq_ignore_ascii_case("grid") {
                    Variant::grid()
                } else {
                    v.split(',').map(str::parse).collect::<Result<_>>()?
                })
            }
            "gsp_cutoff" => self.gsp_cutoff = parse_num(key, v)?,
            "recurrence_pct" => self.recurrence_pct = parse_num(key, v)?,
            "consensus_runs" => self.consensus_runs = parse_num(key, v)?,
            "ecs_alpha" => self.ecs_alpha = parse_num(key, v)?,
            "n_boot" => self.n_boot = parse_num(key, v)?,
            "boot_fraction" => self.boot_fraction = parse_num(key, v)?,
            "null_permutations" => self.null_permutations = parse_num(key, v)?,
            "regress_blocks" => self.regress_blocks = parse_bool(key, v)?,
            "zscore_product" => self.zscore_product = parse_bool(key, v)?,
            "c_reg" => self.c_reg = parse_num(key, v)?,
            "svm_epochs" => self.svm_epochs = parse_num(key, v)?,
            "shuffle_control" => self.shuffle_control = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => return Err(Error::invalid(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err(Error::invalid("threshold_fraction must lie in (0, 1]"));
        }
        if self.laplacian_variant == LaplacianVariant::Up {
            return Err(Error::invalid(
                "laplacian_variant must be L1_down or L1_full",
            ));
        }
        Variant::tsp(self.laplacian_variant, self.lift, self.hodge_part)?;
        if self.gsp_cutoff == 0 {
            return Err(Error::invalid("gsp_cutoff must be at least 1"));
        }
        if !(self.recurrence_pct > 0.0 && self.recurrence_pct < 100.0) {
            return Err(Error::invalid("recurrence_pct must lie in (0, 100)"));
        }
        if self.consensus_runs == 0 || self.n_boot == 0 || self.svm_epochs == 0 {
            return Err(Error::invalid(
                "consensus_runs, n_boot and svm_epochs must be at least 1",
            ));
        }
        if !(self.ecs_alpha > 0.0 && self.ecs_alpha < 1.0) {
            return Err(Error::invalid("ecs_alpha must lie in (0, 1)"));
        }
        if !(self.boot_fraction > 0.0 && self.boot_fraction <= 1.0) {
            return Err(Error::invalid("boot_fraction must lie in (0, 1]"));
        }
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::invalid("c_reg must be positive"));
        }
        if matches!(&self.variants, Some(v) if v.is_empty()) {
            return Err(Error::invalid("variants list is empty"));
        }
        Ok(())
    }

    pub fn variant_list(&self) -> Vec<Variant> {
        self.variants.clone().unwrap_or_else(|| {
            vec![
                Variant::Raw,
                Variant::Gsp(super::variant::GspPart::Coupled),
                Variant::Gsp(super::variant::GspPart::Decoupled),
                Variant::Tsp {
                    laplacian: self.laplacian_variant,
                    lift: self.lift,
                    part: self.hodge_part,
                },
            ]
        })
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            pct: self.recurrence_pct,
            consensus_runs: self.consensus_runs,
            alpha: self.ecs_alpha,
        }
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams {
            c_reg: self.c_reg,
            epochs: self.svm_epochs,
        }
    }

    /// Subjects per bootstrap sample: `round(boot_fraction * n)`, at least 1.
    pub fn sample_size(&self, n_subjects: usize) -> usize {
        ((self.boot_fraction * n_subjects as f64).round() as usize).clamp(1, n_subjects)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lv = match self.laplacian_variant {
            LaplacianVariant::Down => "L1_down",
            _ => "L1_full",
        };
        json!({
            "threshold_fraction": self.threshold_fraction,
            "laplacian_variant": lv,
            "lift": self.lift.to_string(),
            "hodge_part": self.hodge_part.map_or("none".to_string(), |p| p.to_string()),
            "variants": self.variant_list().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "gsp_cutoff": self.gsp_cutoff,
            "recurrence_pct": self.recurrence_pct,
            "consensus_runs": self.consensus_runs,
            "ecs_alpha": self.ecs_alpha,
            "n_boot": self.n_boot,
            "boot_fraction": self.boot_fraction,
            "null_permutations": self.null_permutations,
            "regress_blocks": self.regress_blocks,
            "zscore_product": self.zscore_product,
            "c_reg": self.c_reg,
            "svm_epochs": self.svm_epochs,
            "shuffle_control": self.shuffle_control,
            "seed": self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = PipelineConfig::parse(
            "# experiment\nthreshold_fraction = 0.3\nlaplacian_variant = L1_full  # with triangles\n\
             lift = cos\nhodge_part = curl\nvariants = raw, tsp-full-cos-curl\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.threshold_fraction, 0.3);
        assert_eq!(cfg.laplacian_variant, LaplacianVariant::Full);
        assert_eq!(cfg.seed, 9);
        let names: Vec<String> = cfg.variant_list().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["raw", "tsp-full-cos-curl"]);
    }

    #[test]
    fn default_variant_list() {
        let names: Vec<String> = PipelineConfig::default()
            .variant_list()
            .iter()
            .map(|v| v.to_string())
            .collect();
        assert_eq!(
            names,
            ["raw", "gsp-coupled", "gsp-decoupled", "tsp-down-sin-harm"]
        );
    }

    #[test]
    fn rejects_down_curl_and_unknown_keys() {
        let err =
            PipelineConfig::parse("laplacian_variant = L1_down\nhodge_part = curl\n").unwrap_err();
        assert!(err.to_string().contains("curl"));
        let err = PipelineConfig::parse("\n\nthreshhold = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(PipelineConfig::parse("n_boot = 0\n").is_err());
        assert!(PipelineConfig::parse("ecs_alpha = 1.5\n").is_err());
    }

    #[test]
    fn sample_size_rounds() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.sample_size(100), 80);
        assert_eq!(cfg.sample_size(20), 16);
        assert_eq!(cfg.sample_size(1), 1);
    }
}
