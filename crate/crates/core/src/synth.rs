//! Synthetic recordings with planted task blocks.
//!
//! The structural graph is a modular random graph with log-normal weights.
//! Each state `s` owns a coupling matrix `C_s` and node signals follow
//!
//! ```text
//! x(t+1) = (1 - eps) x(t) + eps * gain * C_s x(t) + sigma * xi(t)
//! ```
//!
//! State 0 ("rest") uses the row-normalized adjacency. Every task state
//! draws a phase angle per node and keeps only the edges `i <- j` with
//! `phi_j - phi_i` in `(0, pi/2)` mod `2 pi`, so signal flows along a
//! consistent direction around the graph. `gain < 1` keeps the process
//! stationary.
//!
//! Random streams: graph attempt `a` uses `rng_for(seed, "structural-graph", a)`,
//! state masks `rng_for(seed, "state-mask", s)` and recording
//! `(subject, encoding)` uses `rng_for(seed, "recording", subject * n_encodings + encoding)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::WeightedGraph;
use crate::rng::rng_for;
use crate::signals::NodeTimeSeries;
use crate::{Error, Result};

const MAX_GRAPH_ATTEMPTS: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_subjects: usize,
    pub n_encodings: usize,
    pub n_states: usize,
    pub frames_per_state: usize,
    pub noise_sigma: f64,
    /// `eps` in the update rule.
    pub coupling_strength: f64,
    pub coupling_gain: f64,
    pub n_modules: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 119,
            n_subjects: 20,
            n_encodings: 2,
            n_states: 8,
            frames_per_state: 30,
            noise_sigma: 1.0,
            coupling_strength: 0.5,
            coupling_gain: 0.95,
            n_modules: 8,
            p_intra: 0.7,
            p_inter: 0.06,
            burn_in: 50,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_nodes", self.n_nodes),
            ("n_subjects", self.n_subjects),
            ("n_encodings", self.n_encodings),
            ("n_states", self.n_states),
            ("frames_per_state", self.frames_per_state),
            ("n_modules", self.n_modules),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if self.n_modules > self.n_nodes {
            return Err(Error::invalid("more modules than nodes"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be a finite value >= 0"));
        }
        for (name, v) in [
            ("coupling_strength", self.coupling_strength),
            ("coupling_gain", self.coupling_gain),
            ("p_intra", self.p_intra),
            ("p_inter", self.p_inter),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        self.n_states * self.frames_per_state
    }

    /// Frame labels: `frames_per_state` copies of each state, rest first.
    pub fn frame_labels(&self) -> Vec<usize> {
        (0..self.n_frames())
            .map(|t| t / self.frames_per_state)
            .collect()
    }

    fn module_of(&self, i: usize) -> usize {
        i * self.n_modules / self.n_nodes
    }
}

/// Connected modular random graph.
pub fn generate_structural_graph(cfg: &SynthConfig) -> Result<WeightedGraph> {
    cfg.validate()?;
    let weight = LogNormal::new(0.0, 1.0).expect("valid log-normal");
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut rng = rng_for(cfg.seed, "structural-graph", attempt);
        let mut edges = Vec::new();
        for i in 0..cfg.n_nodes {
            for j in (i + 1)..cfg.n_nodes {
                let p = if cfg.module_of(i) == cfg.module_of(j) {
                    cfg.p_intra
                } else {
                    cfg.p_inter
                };
                if rng.random::<f64>() < p {
                    edges.push((i, j, weight.sample(&mut rng)));
                }
            }
        }
        let g = WeightedGraph::new(cfg.n_nodes, edges)?;
        if g.n_components() == 1 {
            return Ok(g);
        }
    }
    Err(Error::invalid(format!(
        "connectivity not achieved in {MAX_GRAPH_ATTEMPTS} attempts"
    )))
}

/// Row-normalized `adj` restricted to `mask`; rows without any kept entry
/// stay zero.
pub fn masked_coupling(adj: &DMatrix<f64>, mask: &DMatrix<bool>) -> DMatrix<f64> {
    let mut c = adj.zip_map(mask, |a, m| if m { a } else { 0.0 });
    for mut row in c.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    c
}

/// One coupling matrix per state.
pub fn state_couplings(cfg: &SynthConfig, g: &WeightedGraph) -> Result<Vec<DMatrix<f64>>> {
    cfg.validate()?;
    if g.n_nodes() != cfg.n_nodes {
        return Err(Error::invalid(format!(
            "graph has {} nodes, config expects {}",
            g.n_nodes(),
            cfg.n_nodes
        )));
    }
    let adj = g.adjacency();
    let n = cfg.n_nodes;
    let couplings = (0..cfg.n_states)
        .map(|s| {
            let mask = if s == 0 {
                adj.map(|a| a > 0.0)
            } else {
                let mut rng = rng_for(cfg.seed, "state-mask", s as u64);
                let phi: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                DMatrix::from_fn(n, n, |i, j| {
                    let d = (phi[j] - phi[i]).rem_euclid(2.0 * PI);
                    adj[(i, j)] > 0.0 && d > 0.0 && d < PI / 2.0
                })
            };
            masked_coupling(&adj, &mask)
        })
        .collect();
    Ok(couplings)
}

/// Simulates one recording with explicit coupling matrices.
pub fn generate_recording_with(
    cfg: &SynthConfig,
    couplings: &[DMatrix<f64>],
    subject: usize,
    encoding: usize,
) -> Result<NodeTimeSeries> {
    cfg.validate()?;
    if couplings.len() != cfg.n_states {
        return Err(Error::invalid(format!(
            "{} coupling matrices for {} states",
            couplings.len(),
            cfg.n_states
        )));
    }
    let n = cfg.n_nodes;
    if couplings.iter().any(|c| c.shape() != (n, n)) {
        return Err(Error::invalid(
            "coupling matrix shape does not match n_nodes",
        ));
    }
    let index = (subject * cfg.n_encodings + encoding) as u64;
    let mut rng = rng_for(cfg.seed, "recording", index);
    let eps = cfg.coupling_strength;
    let gain = eps * cfg.coupling_gain;
    let mut x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let step = |x: &DVector<f64>, c: &DMatrix<f64>, rng: &mut crate::rng::Rng| {
        let mut next = c * x * gain;
        next.axpy(1.0 - eps, x, 1.0);
        if cfg.noise_sigma > 0.0 {
            next.iter_mut()
                .for_each(|v| *v += cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal));
        }
        next
    };
    for _ in 0..cfg.burn_in {
        x = step(&x, &couplings[0], &mut rng);
    }
    let labels = cfg.frame_labels();
    let mut data = DMatrix::zeros(cfg.n_frames(), n);
    for (t, &s) in labels.iter().enumerate() {
        x = step(&x, &couplings[s], &mut rng);
        data.set_row(t, &x.transpose());
    }
    NodeTimeSeries::with_labels(data, labels)
}

/// Simulates the recording of `(subject, encoding)` on `g`.
pub fn generate_recording(
    cfg: &SynthConfig,
    g: &WeightedGraph,
    subject: usize,
    encoding: usize,
) -> Result<NodeTimeSeries> {
    generate_recording_with(cfg, &state_couplings(cfg, g)?, subject, encoding)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub subject: usize,
    pub encoding: usize,
    pub series: NodeTimeSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub graph: WeightedGraph,
    /// Ordered by subject, then encoding.
    pub recordings: Vec<Recording>,
    pub frame_labels: Vec<usize>,
    pub state_names: Vec<String>,
}

pub fn default_state_names(n_states: usize) -> Vec<String> {
    (0..n_states)
        .map(|s| {
            if s == 0 {
                "rest".to_string()
            } else {
                format!("task{s}")
            }
        })
        .collect()
}

/// Graph plus every (subject, encoding) recording, generated in parallel.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let graph = generate_structural_graph(cfg)?;
    let couplings = state_couplings(cfg, &graph)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_subjects)
        .flat_map(|s| (0..cfg.n_encodings).map(move |e| (s, e)))
        .collect();
    let recordings = jobs
        .par_iter()
        .map(|&(subject, encoding)| {
            Ok(Recording {
                subject,
                encoding,
                series: generate_recording_with(cfg, &couplings, subject, encoding)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        graph,
        recordings,
        frame_labels: cfg.frame_labels(),
        state_names: default_state_names(cfg.n_states),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::recurrence_matrix;

    fn small() -> SynthConfig {
        SynthConfig {
            n_nodes: 40,
            n_subjects: 2,
            n_states: 4,
            frames_per_state: 20,
            n_modules: 4,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = small();
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.recordings.len(), 4);
        assert_eq!(a.recordings[0].series.n_frames(), 80);
        let other = generate_structural_graph(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(other, a.graph);
    }

    #[test]
    fn default_density_range() {
        for seed in 0..100 {
            let g = generate_structural_graph(&SynthConfig {
                seed,
                ..SynthConfig::default()
            })
            .unwrap();
            let d = g.density();
            assert!((0.1..=0.4).contains(&d), "seed {seed}: density {d}");
            assert_eq!(g.n_components(), 1);
        }
    }

    #[test]
    fn disjoint_cliques_never_connect() {
        let cfg = SynthConfig {
            n_nodes: 10,
            n_modules: 2,
            p_intra: 1.0,
            p_inter: 0.0,
            ..SynthConfig::default()
        };
        let err = generate_structural_graph(&cfg).unwrap_err();
        assert!(err.to_string().contains("connectivity not achieved"));
    }

    #[test]
    fn identity_coupling_without_noise_is_constant() {
        let cfg = SynthConfig {
            n_nodes: 5,
            n_states: 3,
            frames_per_state: 4,
            n_modules: 1,
            noise_sigma: 0.0,
            coupling_gain: 1.0,
            ..SynthConfig::default()
        };
        let eye = vec![DMatrix::identity(5, 5); 3];
        let x = generate_recording_with(&cfg, &eye, 0, 0).unwrap();
        let first = x.data().row(0).into_owned();
        for row in x.data().row_iter() {
            assert!((row - &first).amax() < 1e-14);
        }
    }

    #[test]
    fn masks_are_directed_subsets() {
        let cfg = small();
        let g = generate_structural_graph(&cfg).unwrap();
        let c = state_couplings(&cfg, &g).unwrap();
        let adj = g.adjacency();
        for (s, m) in c.iter().enumerate() {
            for i in 0..cfg.n_nodes {
                let row = m.row(i).sum();
                assert!(row == 0.0 || (row - 1.0).abs() < 1e-12);
                for j in 0..cfg.n_nodes {
                    if m[(i, j)] > 0.0 {
                        assert!(adj[(i, j)] > 0.0);
                        if s > 0 {
                            assert_eq!(m[(j, i)], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn within_state_recurrence_exceeds_between() {
        let cfg = small();
        let ds = generate_dataset(&cfg).unwrap();
        let r = recurrence_matrix(ds.recordings[0].series.data()).unwrap();
        let l = &ds.frame_labels;
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
        for i in 0..l.len() {
            for j in (i + 1)..l.len() {
                if l[i] == l[j] {
                    within += r.m[(i, j)];
                    nw += 1;
                } else {
                    between += r.m[(i, j)];
                    nb += 1;
                }
            }
        }
        assert!(within / nw as f64 > between / nb as f64);
    }
}
