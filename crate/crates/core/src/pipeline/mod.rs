//! End-to-end dynamic (clustering) and static (classification) decoding.
//!
//! Both experiments share the same front end: threshold the structural
//! graph, build its clique complex, regress block means out of every node
//! series and turn each recording into a per-variant signal.

mod config;
mod dynamic;
mod nodal;
mod variant;

pub use config::PipelineConfig;
pub use dynamic::{run_dynamic_decoding, DynamicReport, DynamicVariantResult};
pub use nodal::{run_static_decoding, static_features, StaticReport, StaticVariantResult};
pub use variant::{GspPart, Lift, Variant};

use nalgebra::{DMatrix, DVector};

use crate::complex::{boundary_operators, clique_complex_order2, threshold_top_fraction};
use crate::error::StageExt;
use crate::signals::{
    block_regressors, hilbert_phase, lift_phase, lift_product, regress_out, zscore_columns,
    EdgeTimeSeries,
};
use crate::spectral::{
    eigendecompose, graph_laplacian, split_coupled_decoupled, EigenBasis, HodgeFilter,
    LaplacianVariant,
};
use crate::{BoundaryOperators, Error, NodeTimeSeries, Result, SimplicialComplex2, WeightedGraph};

/// Everything derived from the structural graph that the variants need.
#[derive(Clone, Debug)]
pub struct PipelineContext {
    pub graph: WeightedGraph,
    pub complex: SimplicialComplex2,
    pub boundary: BoundaryOperators,
    gsp_basis: Option<EigenBasis>,
    down: Option<HodgeFilter>,
    full: Option<HodgeFilter>,
}

impl PipelineContext {
    /// Thresholds `structural` and prepares the operators used by `variants`.
    pub fn build(
        structural: &WeightedGraph,
        cfg: &PipelineConfig,
        variants: &[Variant],
    ) -> Result<Self> {
        let graph =
            threshold_top_fraction(structural, cfg.threshold_fraction).stage("threshold")?;
        let complex = clique_complex_order2(&graph);
        let boundary = boundary_operators(&complex);
        let gsp_basis = if variants.iter().any(Variant::is_gsp) {
            if cfg.gsp_cutoff > graph.n_nodes() {
                return Err(Error::invalid(format!(
                    "gsp_cutoff {} exceeds the {} nodes",
                    cfg.gsp_cutoff,
                    graph.n_nodes()
                )))
                .stage("gsp");
            }
            Some(eigendecompose(&graph_laplacian(&graph)).stage("gsp")?)
        } else {
            None
        };
        let wants = |lv: LaplacianVariant| {
            variants.iter().any(
                |v| matches!(v, Variant::Tsp { laplacian, part: Some(_), .. } if *laplacian == lv),
            )
        };
        let down = if wants(LaplacianVariant::Down) {
            Some(HodgeFilter::new(&boundary, LaplacianVariant::Down).stage("filter")?)
        } else {
            None
        };
        let full = if wants(LaplacianVariant::Full) {
            Some(HodgeFilter::new(&boundary, LaplacianVariant::Full).stage("filter")?)
        } else {
            None
        };
        Ok(Self {
            graph,
            complex,
            boundary,
            gsp_basis,
            down,
            full,
        })
    }

    /// Removes the per-state block means when `regress_blocks` is set.
    pub fn preprocess(
        &self,
        cfg: &PipelineConfig,
        x: &NodeTimeSeries,
        n_states: usize,
    ) -> Result<NodeTimeSeries> {
        if !cfg.regress_blocks {
            return Ok(x.clone());
        }
        let labels = x
            .frame_labels()
            .ok_or_else(|| Error::invalid("block regression needs frame labels"))
            .stage("preprocess")?;
        regress_out(x, &block_regressors(labels, n_states)).stage("preprocess")
    }

    /// Lifted edge signal before any filtering.
    pub fn lift(
        &self,
        cfg: &PipelineConfig,
        lift: Lift,
        x: &NodeTimeSeries,
    ) -> Result<EdgeTimeSeries> {
        match lift {
            Lift::Prod if cfg.zscore_product => lift_product(&zscore_columns(x)?, &self.complex),
            Lift::Prod => lift_product(x, &self.complex),
            Lift::Phase(f) => lift_phase(&hilbert_phase(x)?, &self.complex, f),
        }
        .stage("lift")
    }

    fn gsp_split(
        &self,
        cfg: &PipelineConfig,
        x: &NodeTimeSeries,
    ) -> Result<(NodeTimeSeries, NodeTimeSeries)> {
        let basis = self
            .gsp_basis
            .as_ref()
            .expect("context built with a GSP variant");
        split_coupled_decoupled(basis, x, cfg.gsp_cutoff).stage("gsp")
    }

    /// Time-major signal of `variant` for one preprocessed recording.
    pub fn variant_signal(
        &self,
        cfg: &PipelineConfig,
        variant: Variant,
        x: &NodeTimeSeries,
    ) -> Result<DMatrix<f64>> {
        match variant {
            Variant::Raw => Ok(x.data().clone()),
            Variant::Gsp(GspPart::Coupled) => Ok(self.gsp_split(cfg, x)?.0.into_data()),
            Variant::Gsp(GspPart::Decoupled) => Ok(self.gsp_split(cfg, x)?.1.into_data()),
            Variant::Gsp(GspPart::Sdi) => Err(Error::invalid(
                "gsp-sdi is a per-node summary and has no time course",
            ))
            .stage("gsp"),
            Variant::Tsp {
                laplacian,
                lift,
                part,
            } => {
                let e = self.lift(cfg, lift, x)?;
                match part {
                    None => Ok(e.into_data()),
                    Some(p) => {
                        let f = match laplacian {
                            LaplacianVariant::Down => self.down.as_ref(),
                            _ => self.full.as_ref(),
                        }
                        .expect("context built with this Laplacian");
                        f.filter_matrix(e.data(), p).stage("filter")
                    }
                }
            }
        }
    }

    /// One nodal vector per state for `variant`, computed from the frames of
    /// that state.
    pub fn nodal_values(
        &self,
        cfg: &PipelineConfig,
        variant: Variant,
        x: &NodeTimeSeries,
        n_states: usize,
    ) -> Result<Vec<DVector<f64>>> {
        let labels = x
            .frame_labels()
            .ok_or_else(|| Error::invalid("nodal features need frame labels"))
            .stage("features")?;
        let rows_of =
            |s: usize| -> Vec<usize> { (0..labels.len()).filter(|&t| labels[t] == s).collect() };
        let col_norms =
            |m: &DMatrix<f64>| DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.norm()));
        let mut out = Vec::with_capacity(n_states);
        match variant {
            Variant::Gsp(GspPart::Sdi) => {
                let (c, d) = self.gsp_split(cfg, x)?;
                for s in 0..n_states {
                    let rows = rows_of(s);
                    let (cs, ds) = (c.data().select_rows(&rows), d.data().select_rows(&rows));
                    let mut v = DVector::zeros(cs.ncols());
                    for i in 0..cs.ncols() {
                        let cn = cs.column(i).norm();
                        if cn == 0.0 {
                            return Err(Error::numerical(format!(
                                "coupled signal at node {i} has zero norm in state {s}"
                            )))
                            .stage("gsp");
                        }
                        v[i] = ds.column(i).norm() / cn;
                    }
                    out.push(v);
                }
            }
            Variant::Tsp { .. } => {
                let sig = self.variant_signal(cfg, variant, x)?;
                for s in 0..n_states {
                    let norms = col_norms(&sig.select_rows(&rows_of(s)));
                    out.push(DVector::from_vec(
                        self.boundary.b1.abs_mul_vec(norms.as_slice()),
                    ));
                }
            }
            _ => {
                let sig = self.variant_signal(cfg, variant, x)?;
                for s in 0..n_states {
                    out.push(col_norms(&sig.select_rows(&rows_of(s))));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::HodgePart;
    use crate::synth::{generate_dataset, SynthConfig};

    fn setup() -> (crate::synth::Dataset, PipelineConfig) {
        let ds = generate_dataset(&SynthConfig {
            n_nodes: 24,
            n_subjects: 2,
            n_states: 3,
            frames_per_state: 12,
            n_modules: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            threshold_fraction: 0.6,
            gsp_cutoff: 8,
            ..PipelineConfig::default()
        };
        (ds, cfg)
    }

    #[test]
    fn full_filter_parts_sum_to_unfiltered() {
        let (ds, cfg) = setup();
        let parts = [HodgePart::Harm, HodgePart::Grad, HodgePart::Curl];
        let mut variants: Vec<Variant> = parts
            .iter()
            .map(|&p| Variant::tsp(LaplacianVariant::Full, Lift::Prod, Some(p)).unwrap())
            .collect();
        let none = Variant::tsp(LaplacianVariant::Full, Lift::Prod, None).unwrap();
        variants.push(none);
        let ctx = PipelineContext::build(&ds.graph, &cfg, &variants).unwrap();
        assert!(ctx.complex.n_triangles() > 0);
        let x = ctx.preprocess(&cfg, &ds.recordings[0].series, 3).unwrap();
        let total = variants[..3]
            .iter()
            .map(|&v| ctx.variant_signal(&cfg, v, &x).unwrap())
            .fold(
                DMatrix::zeros(x.n_frames(), ctx.complex.n_edges()),
                |a, b| a + b,
            );
        let whole = ctx.variant_signal(&cfg, none, &x).unwrap();
        assert!((total - &whole).amax() <= 1e-8 * whole.amax().max(1.0));
    }

    #[test]
    fn regression_removes_block_means() {
        let (ds, cfg) = setup();
        let ctx = PipelineContext::build(&ds.graph, &cfg, &[Variant::Raw]).unwrap();
        let x = ctx.preprocess(&cfg, &ds.recordings[1].series, 3).unwrap();
        for s in 0..3 {
            let rows: Vec<usize> = (s * 12..(s + 1) * 12).collect();
            let block = x.data().select_rows(&rows);
            for c in block.column_iter() {
                assert!(c.mean().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nodal_values_shapes() {
        let (ds, cfg) = setup();
        let vs = Variant::grid();
        let ctx = PipelineContext::build(&ds.graph, &cfg, &vs).unwrap();
        let x = ctx.preprocess(&cfg, &ds.recordings[0].series, 3).unwrap();
        for v in vs {
            let vals = ctx.nodal_values(&cfg, v, &x, 3).unwrap();
            assert_eq!(vals.len(), 3);
            assert!(vals.iter().all(|n| n.len() == 24), "{v}");
        }
    }

    #[test]
    fn sdi_has_no_time_course() {
        let (ds, cfg) = setup();
        let v = Variant::Gsp(GspPart::Sdi);
        let ctx = PipelineContext::build(&ds.graph, &cfg, &[v]).unwrap();
        let err = ctx
            .variant_signal(&cfg, v, &ds.recordings[0].series)
            .unwrap_err();
        assert!(err.to_string().starts_with("[gsp]"));
    }
}
