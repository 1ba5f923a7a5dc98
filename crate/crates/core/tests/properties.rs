use std::collections::BTreeMap;

use hodgeflow::classify::{
    loso_cv, train_linear_svm_ovo, BinaryModel, FeatureMatrix, LinearSvmModel, SampleMeta,
    Standardizer, SvmParams,
};
use hodgeflow::cluster::{
    binarize_percentile, consensus_cluster, element_centric_similarity, louvain, modularity,
    recurrence_matrix, Partition, SparseGraph,
};
use hodgeflow::complex::{boundary_operators, clique_complex_order2, threshold_top_fraction};
use hodgeflow::rng::derive_seed;
use hodgeflow::signals::{
    hilbert_phase, lift_phase, lift_product, project_edges_to_nodes, PhaseFn, PhaseSeries,
};
use hodgeflow::spectral::{
    eigendecompose, hodge_laplacian, HodgeFilter, HodgePart, LaplacianVariant,
};
use hodgeflow::synth::{generate_recording, generate_structural_graph, SynthConfig};
use hodgeflow::{NodeTimeSeries, WeightedGraph};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (3..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(
            proptest::option::weighted(0.45, 0.1f64..5.0),
            n * (n - 1) / 2,
        )
        .prop_map(move |ws| {
            let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
            let edges: Vec<_> = pairs
                .zip(ws)
                .filter_map(|((i, j), w)| w.map(|w| (i, j, w)))
                .collect();
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..30).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..6, n),
            proptest::collection::vec(0usize..6, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_of_boundary_is_zero(g in graph_strategy(12)) {
        let k = clique_complex_order2(&g);
        let b = boundary_operators(&k);
        let prod = b.b1.compose(&b.b2);
        prop_assert!(prod.iter().flatten().all(|&v| v == 0));
        for c in 0..b.b1.n_cols() {
            prop_assert_eq!(b.b1.column(c).iter().map(|&(_, s)| i32::from(s)).sum::<i32>(), 0);
        }
        for c in 0..b.b2.n_cols() {
            prop_assert_eq!(b.b2.column(c).iter().map(|&(_, s)| i32::from(s)).sum::<i32>(), 1);
        }
        for &(i, j, l) in k.triangles() {
            prop_assert!(k.edge_index(i, j).is_some() && k.edge_index(i, l).is_some() && k.edge_index(j, l).is_some());
        }
        prop_assert_eq!(&clique_complex_order2(&g), &k);
    }

    #[test]
    fn threshold_is_idempotent(g in graph_strategy(12), frac in 0.05f64..1.0) {
        prop_assume!(g.n_edges() > 0);
        let t = threshold_top_fraction(&g, frac).unwrap();
        prop_assert_eq!(threshold_top_fraction(&t, 1.0).unwrap(), t);
    }

    #[test]
    fn down_spectrum_matches_node_spectrum(g in graph_strategy(10)) {
        let k = clique_complex_order2(&g);
        let b = boundary_operators(&k);
        let l0 = eigendecompose(&hodge_laplacian_l0(&b)).unwrap();
        let l1 = eigendecompose(&hodge_laplacian(&b, LaplacianVariant::Down)).unwrap();
        let (_, a) = l0.nonzero_part();
        let (_, c) = l1.nonzero_part();
        prop_assert_eq!(a.len(), c.len());
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn hodge_filter_is_idempotent(g in graph_strategy(14), seed in 0u64..1000) {
        let k = clique_complex_order2(&g);
        prop_assume!(k.n_edges() > 0);
        let b = boundary_operators(&k);
        let x = pseudo_random(3, k.n_edges(), seed);
        for variant in [LaplacianVariant::Down, LaplacianVariant::Full] {
            let f = HodgeFilter::new(&b, variant).unwrap();
            let parts: &[HodgePart] = if variant == LaplacianVariant::Down {
                &[HodgePart::Harm, HodgePart::Grad]
            } else {
                &[HodgePart::Harm, HodgePart::Grad, HodgePart::Curl]
            };
            for &p in parts {
                let once = f.filter_matrix(&x, p).unwrap();
                let twice = f.filter_matrix(&once, p).unwrap();
                prop_assert!((&twice - &once).amax() <= 1e-10 * x.amax().max(1.0));
            }
        }
    }

    #[test]
    fn filling_triangles_never_grows_kernel(g in graph_strategy(10)) {
        let k = clique_complex_order2(&g);
        let full = boundary_operators(&k);
        let hollow = boundary_operators(&k.skeleton());
        let kd = |b| eigendecompose(&hodge_laplacian(b, LaplacianVariant::Full)).unwrap().kernel_dim();
        prop_assert!(kd(&full) <= kd(&hollow));
    }

    #[test]
    fn phase_lifts_ignore_global_shift(seed in 0u64..1000, c in -10.0f64..10.0) {
        let theta = pseudo_random(20, 5, seed).map(|v| v * std::f64::consts::PI);
        let k = clique_complex_order2(&complete_graph(5));
        let a = PhaseSeries::new(theta.clone()).unwrap();
        let wrap = |v: f64| std::f64::consts::PI - (std::f64::consts::PI - v).rem_euclid(2.0 * std::f64::consts::PI);
        let b = PhaseSeries::new(theta.map(|v| wrap(v + c))).unwrap();
        for f in [PhaseFn::Sin, PhaseFn::Cos] {
            let (ea, eb) = (lift_phase(&a, &k, f).unwrap(), lift_phase(&b, &k, f).unwrap());
            prop_assert!((ea.data() - eb.data()).amax() < 1e-12 * (1.0 + c.abs()));
        }
        let s = lift_phase(&a, &k, PhaseFn::Sin).unwrap();
        let co = lift_phase(&a, &k, PhaseFn::Cos).unwrap();
        prop_assert!(s.data().iter().zip(co.data().iter()).all(|(s, c)| (s * s + c * c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn product_lift_of_nonnegative_is_nonnegative(seed in 0u64..1000) {
        let x = pseudo_random(15, 6, seed).map(f64::abs);
        let k = clique_complex_order2(&complete_graph(6));
        let e = lift_product(&NodeTimeSeries::new(x).unwrap(), &k).unwrap();
        prop_assert!(e.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn hilbert_increment_is_constant(bin in 2usize..30, t in 64usize..300) {
        let x = DMatrix::from_fn(t, 1, |r, _| (2.0 * std::f64::consts::PI * bin as f64 * r as f64 / t as f64).cos());
        let th = hilbert_phase(&NodeTimeSeries::new(x).unwrap()).unwrap();
        let step = 2.0 * std::f64::consts::PI * bin as f64 / t as f64;
        let edge = (t as f64 * 0.05).ceil() as usize;
        for r in edge..(t - edge - 1) {
            let d = th.data()[(r + 1, 0)] - th.data()[(r, 0)];
            let d = (d + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            prop_assert!((d - step).abs() < 1e-6);
        }
    }

    #[test]
    fn edge_projection_is_linear(g in graph_strategy(10), a in -3i32..4, b in -3i32..4, seed in 0u64..100) {
        let k = clique_complex_order2(&g);
        prop_assume!(k.n_edges() > 0);
        let bo = boundary_operators(&k);
        // integer-valued inputs keep every sum exact
        let u = pseudo_random(1, k.n_edges(), seed).map(|v| (v * 8.0).round()).row(0).transpose();
        let v = pseudo_random(1, k.n_edges(), seed + 1).map(|v| (v * 8.0).round()).row(0).transpose();
        let (a, b) = (f64::from(a), f64::from(b));
        let lhs = project_edges_to_nodes(&bo, &(&u * a + &v * b)).unwrap();
        let rhs = project_edges_to_nodes(&bo, &u).unwrap() * a + project_edges_to_nodes(&bo, &v).unwrap() * b;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn ecs_properties((a, b) in labels_strategy(), alpha in 0.05f64..0.95) {
        let p = Partition::from_labels(&a).unwrap();
        let q = Partition::from_labels(&b).unwrap();
        let pq = element_centric_similarity(&p, &q, alpha).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!((pq - element_centric_similarity(&q, &p, alpha).unwrap()).abs() < 1e-12);
        prop_assert!((element_centric_similarity(&p, &p, alpha).unwrap() - 1.0).abs() < 1e-12);
        let relabeled = Partition::from_labels(&a.iter().map(|l| 100 - l).collect::<Vec<_>>()).unwrap();
        prop_assert!((element_centric_similarity(&relabeled, &q, alpha).unwrap() - pq).abs() < 1e-12);
    }

    #[test]
    fn louvain_is_single_move_optimal(g in graph_strategy(12), seed in 0u64..1000) {
        prop_assume!(g.n_edges() > 0);
        let a = g.adjacency();
        let p = louvain(&a, seed).unwrap();
        let sg = SparseGraph::from_dense(&a).unwrap();
        let q = modularity(&sg, &p);
        let n = a.nrows();
        let k = p.n_communities();
        for i in 0..n {
            for target in 0..=k {
                let mut l = p.labels().to_vec();
                if l[i] == target {
                    continue;
                }
                l[i] = target;
                let moved = modularity(&sg, &Partition::from_labels(&l).unwrap());
                prop_assert!(moved <= q + 1e-10, "node {} to {} improves {} -> {}", i, target, q, moved);
            }
        }
    }

    #[test]
    fn binarized_recurrence_is_symmetric(seed in 0u64..1000, pct in 1.0f64..99.0) {
        let r = recurrence_matrix(&pseudo_random(25, 8, seed)).unwrap();
        let b = binarize_percentile(&r, pct).unwrap();
        prop_assert_eq!(&b.m, &b.m.transpose());
        prop_assert!(b.m.diagonal().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recurrence_is_pearson_invariant(seed in 0u64..1000, shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let x = pseudo_random(20, 7, seed);
        let r = recurrence_matrix(&x).unwrap();
        let y = x.map(|v| v * scale + shift);
        prop_assert!((recurrence_matrix(&y).unwrap().m - &r.m).amax() < 1e-10);
    }

    #[test]
    fn ovo_model_count_and_rescaling(k in 2usize..6, scale in 0.01f64..100.0, seed in 0u64..100) {
        let n_per = 4;
        let x = pseudo_random(3, k * n_per, seed);
        let labels: Vec<usize> = (0..k * n_per).map(|c| c % k).collect();
        let xm = DMatrix::from_fn(3, k * n_per, |r, c| x[(r, c)] + (labels[c] * (r + 1)) as f64);
        let m = train_linear_svm_ovo(&xm, &labels, &SvmParams { c_reg: 1.0, epochs: 5 }, seed).unwrap();
        prop_assert_eq!(m.models().len(), k * (k - 1) / 2);
        let scaled: Vec<BinaryModel> = m
            .models()
            .iter()
            .map(|b| BinaryModel { w: &b.w * scale, b: b.b * scale, ..b.clone() })
            .collect();
        let m2 = LinearSvmModel::from_parts(m.classes().to_vec(), scaled, 3).unwrap();
        prop_assert_eq!(m.predict_columns(&xm).unwrap(), m2.predict_columns(&xm).unwrap());
        let again = train_linear_svm_ovo(&xm, &labels, &SvmParams { c_reg: 1.0, epochs: 5 }, seed).unwrap();
        for (a, b) in m.models().iter().zip(again.models()) {
            prop_assert_eq!(&a.w, &b.w);
            prop_assert_eq!(a.b, b.b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn loso_folds_are_isolated(seed in 0u64..1000, victim in 0usize..4) {
        let (n_subjects, n_states, n_feat) = (4, 3, 5);
        let mut values = BTreeMap::new();
        let noise = pseudo_random(n_subjects * n_states, n_feat, seed);
        for s in 0..n_subjects {
            for t in 0..n_states {
                let v = DVector::from_fn(n_feat, |r, _| noise[(s * n_states + t, r)] + if r == t { 3.0 } else { 0.0 });
                values.insert(SampleMeta { subject: s, state: t, encoding: 0 }, v);
            }
        }
        let f = hodgeflow::classify::assemble_raw(&values).unwrap();
        let labels = f.states();
        let params = SvmParams { c_reg: 1.0, epochs: 30 };
        let base = loso_cv(&f, &labels, &params, seed).unwrap();

        // replace the victim's columns by noise
        let junk = pseudo_random(n_feat, f.n_samples(), seed + 7);
        let data = DMatrix::from_fn(n_feat, f.n_samples(), |r, c| {
            if f.meta()[c].subject == victim { junk[(r, c)] } else { f.data()[(r, c)] }
        });
        let g = FeatureMatrix::new(data, f.meta().to_vec()).unwrap();
        let other = loso_cv(&g, &labels, &params, seed).unwrap();
        prop_assert!(base.per_fold.len() == other.per_fold.len());

        // the victim's fold must match a model trained on the other subjects alone
        let (test, train): (Vec<usize>, Vec<usize>) = (0..g.n_samples()).partition(|&c| g.meta()[c].subject == victim);
        let scaler = Standardizer::fit(g.data(), &train);
        let z = scaler.apply(g.data());
        let y: Vec<usize> = train.iter().map(|&c| labels[c]).collect();
        let model = train_linear_svm_ovo(&z.select_columns(&train), &y, &params, derive_seed(seed, "loso", victim as u64)).unwrap();
        let pred = model.predict_columns(&z.select_columns(&test)).unwrap();
        let correct = pred.iter().zip(&test).filter(|(p, &c)| **p == labels[c]).count();
        let fold = other.per_fold.iter().find(|r| r.subject == victim).unwrap();
        prop_assert_eq!(fold.correct, correct);

        // and the same model, hence the same fold, when the data is untouched
        let z0 = Standardizer::fit(f.data(), &train).apply(f.data());
        prop_assert_eq!(&z0.select_columns(&train), &z.select_columns(&train));
    }

    #[test]
    fn synthetic_recordings_are_pure(subject in 0usize..5, encoding in 0usize..2) {
        let cfg = SynthConfig { n_nodes: 16, n_states: 3, frames_per_state: 7, n_modules: 2, ..SynthConfig::default() };
        let g = generate_structural_graph(&cfg).unwrap();
        let a = generate_recording(&cfg, &g, subject, encoding).unwrap();
        let b = generate_recording(&cfg, &g, subject, encoding).unwrap();
        prop_assert_eq!(a.data(), b.data());
        let labels = cfg.frame_labels();
        prop_assert_eq!(labels.len(), 21);
        prop_assert!(labels.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        prop_assert_eq!(labels.last().copied(), Some(2));
    }
}

#[test]
fn consensus_keeps_unanimous_partition() {
    let mut a = DMatrix::zeros(9, 9);
    for block in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    a[(block * 3 + i, block * 3 + j)] = 1.0;
                }
            }
        }
    }
    let single = louvain(&a, 1).unwrap();
    let c = consensus_cluster(&a, 10, 3).unwrap();
    assert!(c.converged);
    assert_eq!(
        element_centric_similarity(&single, &c.partition, 0.9).unwrap(),
        1.0
    );
}

fn hodge_laplacian_l0(b: &hodgeflow::BoundaryOperators) -> hodgeflow::SymmetricOperator {
    let d = b.b1.to_dense();
    hodgeflow::SymmetricOperator::new(&d * d.transpose()).unwrap()
}

fn complete_graph(n: usize) -> WeightedGraph {
    WeightedGraph::new(
        n,
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0))),
    )
    .unwrap()
}

/// Deterministic values in `[-1, 1)`.
fn pseudo_random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    DMatrix::from_fn(rows, cols, |_, _| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    })
}
