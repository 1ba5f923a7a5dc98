use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hodgeflow::cluster::{
    binarize_percentile, consensus_cluster, element_centric_similarity, hconcat, recurrence_matrix,
    RecurrenceMatrix,
};
use hodgeflow::complex::{boundary_operators, clique_complex_order2, threshold_top_fraction};
use hodgeflow::io;
use hodgeflow::pipeline::{
    run_dynamic_decoding, run_static_decoding, static_features, Lift, PipelineConfig,
    PipelineContext,
};
use hodgeflow::signals::{
    block_regressors, hilbert_phase, lift_phase, lift_product, regress_out, zscore_columns,
};
use hodgeflow::spectral::{HodgeFilter, HodgePart, HodgeProjector, LaplacianVariant};
use hodgeflow::synth::{generate_dataset, SynthConfig};
use hodgeflow::NodeTimeSeries;
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(
    name = "hodgeflow",
    version,
    about = "Edge-signal decoding on clique complexes"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset and its manifest.
    Synth,
    /// Threshold a connectome and build its order-2 clique complex.
    BuildComplex {
        #[arg(long)]
        connectome: PathBuf,
    },
    /// Lift a node time series to an edge time series.
    Lift {
        #[arg(long)]
        timeseries: PathBuf,
        #[arg(long)]
        complex: PathBuf,
        /// prod, sin or cos; defaults to the configured lift.
        #[arg(long)]
        lift: Option<String>,
        /// Frame labels; when given, per-state block means are regressed out first.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Number of states for the block regressors (default: largest label + 1).
        #[arg(long)]
        n_states: Option<usize>,
        #[arg(long, default_value = "edges.csv")]
        name: String,
    },
    /// Gradient, curl and harmonic parts of edge signals (one per row).
    Decompose {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        signal: PathBuf,
    },
    /// Keep one Hodge part of an edge time series.
    Filter {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        /// down or full; defaults to the configured variant.
        #[arg(long)]
        laplacian: Option<String>,
        /// harm, grad or curl; defaults to the configured part.
        #[arg(long)]
        part: Option<String>,
        #[arg(long, default_value = "filtered.csv")]
        name: String,
    },
    /// Frame-by-frame Pearson recurrence of one or more signals placed side by side.
    Recurrence {
        #[arg(long, required = true, num_args = 1..)]
        signal: Vec<PathBuf>,
        #[arg(long, default_value = "recurrence.csv")]
        name: String,
    },
    /// Binarize a recurrence matrix and run consensus clustering on it.
    Cluster {
        #[arg(long)]
        recurrence: PathBuf,
        #[arg(long, default_value = "partition.csv")]
        name: String,
    },
    /// Element-centric similarity of two partition files.
    Ecs { a: PathBuf, b: PathBuf },
    /// Recurrence clustering of every configured variant.
    Dynamic {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Leave-one-subject-out state classification of every configured variant.
    Static {
        #[arg(long)]
        manifest: PathBuf,
        /// Also write each variant's unscaled feature matrix.
        #[arg(long)]
        features: bool,
    },
}

fn pipeline_config(c: &Common) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Synthetic-data settings use the same `key = value` syntax as the
/// pipeline configuration; unknown keys are rejected.
fn synth_config(c: &Common) -> anyhow::Result<SynthConfig> {
    let mut obj = serde_json::Map::new();
    if let Some(p) = &c.config {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("{}:{}: expected key = value", p.display(), n + 1);
            };
            let v: serde_json::Value = serde_json::from_str(v.trim())
                .with_context(|| format!("{}:{}: value is not a number", p.display(), n + 1))?;
            obj.insert(k.trim().to_string(), v);
        }
    }
    let mut cfg: SynthConfig = serde_json::from_value(serde_json::Value::Object(obj))
        .with_context(|| format!("invalid synthetic configuration {:?}", c.config))?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(c: &Common, name: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&c.out)
        .with_context(|| format!("cannot create {}", c.out.display()))?;
    Ok(c.out.join(name))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "signal".into(), |s| s.to_string_lossy().into_owned())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let c = &cli.common;
    match cli.cmd {
        Cmd::Synth => {
            let ds = generate_dataset(&synth_config(c)?)?;
            std::fs::create_dir_all(&c.out)
                .with_context(|| format!("cannot create {}", c.out.display()))?;
            let m = io::write_dataset(&c.out, &ds)?;
            println!("{}", m.display());
        }
        Cmd::BuildComplex { connectome } => {
            let cfg = pipeline_config(c)?;
            let g =
                threshold_top_fraction(&io::load_connectome(&connectome)?, cfg.threshold_fraction)?;
            let k = clique_complex_order2(&g);
            let b = boundary_operators(&k);
            io::write_complex(&out_path(c, "complex.json")?, &k)?;
            io::write_matrix(&out_path(c, "b1.csv")?, &b.b1.to_dense())?;
            io::write_matrix(&out_path(c, "b2.csv")?, &b.b2.to_dense())?;
            println!(
                "{} nodes, {} edges, {} triangles",
                k.n_nodes(),
                k.n_edges(),
                k.n_triangles()
            );
        }
        Cmd::Lift {
            timeseries,
            complex,
            lift,
            labels,
            n_states,
            name,
        } => {
            let cfg = pipeline_config(c)?;
            let k = io::read_complex(&complex)?;
            let mut x = io::load_timeseries(&timeseries)?;
            if let Some(lp) = labels {
                let l = io::read_labels(&lp)?;
                let s = n_states.unwrap_or_else(|| l.iter().max().map_or(1, |m| m + 1));
                x = NodeTimeSeries::with_labels(x.into_data(), l)?;
                if cfg.regress_blocks {
                    let regs = block_regressors(x.frame_labels().expect("labels just attached"), s);
                    x = regress_out(&x, &regs)?;
                }
            }
            let lift: Lift = match lift {
                Some(s) => s.parse()?,
                None => cfg.lift,
            };
            let e = match lift {
                Lift::Prod if cfg.zscore_product => lift_product(&zscore_columns(&x)?, &k)?,
                Lift::Prod => lift_product(&x, &k)?,
                Lift::Phase(f) => lift_phase(&hilbert_phase(&x)?, &k, f)?,
            };
            io::write_matrix(&out_path(c, &name)?, e.data())?;
        }
        Cmd::Decompose { complex, signal } => {
            let b = boundary_operators(&io::read_complex(&complex)?);
            let x = io::read_matrix(&signal)?;
            let p = HodgeProjector::new(&b)?;
            let grad = p.gradient(&x)?;
            let curl = p.curl(&x)?;
            let harm = &x - &grad - &curl;
            let s = stem(&signal);
            for (part, m) in [("harm", &harm), ("grad", &grad), ("curl", &curl)] {
                io::write_matrix(&out_path(c, &format!("{s}.{part}.csv"))?, m)?;
            }
        }
        Cmd::Filter {
            complex,
            signal,
            laplacian,
            part,
            name,
        } => {
            let cfg = pipeline_config(c)?;
            let b = boundary_operators(&io::read_complex(&complex)?);
            let lv: LaplacianVariant = match laplacian {
                Some(s) => s.parse()?,
                None => cfg.laplacian_variant,
            };
            let part: HodgePart = match part {
                Some(s) => s.parse()?,
                None => cfg
                    .hodge_part
                    .context("no Hodge part configured; pass --part")?,
            };
            let f = HodgeFilter::new(&b, lv)?;
            io::write_matrix(
                &out_path(c, &name)?,
                &f.filter_matrix(&io::read_matrix(&signal)?, part)?,
            )?;
        }
        Cmd::Recurrence { signal, name } => {
            let ms = signal
                .iter()
                .map(|p| io::read_matrix(p))
                .collect::<Result<Vec<_>, _>>()?;
            if ms.windows(2).any(|w| w[0].nrows() != w[1].nrows()) {
                bail!("signals have different numbers of frames");
            }
            let r = recurrence_matrix(&hconcat(&ms.iter().collect::<Vec<_>>()))?;
            io::write_matrix(&out_path(c, &name)?, &r.m)?;
        }
        Cmd::Cluster { recurrence, name } => {
            let cfg = pipeline_config(c)?;
            let m: DMatrix<f64> = io::read_matrix(&recurrence)?;
            let r = RecurrenceMatrix {
                m,
                binarized: false,
                degenerate_frames: vec![],
            };
            let bin = binarize_percentile(&r, cfg.recurrence_pct)?;
            let res = consensus_cluster(&bin.m, cfg.consensus_runs, cfg.seed)?;
            io::write_partition(&out_path(c, &name)?, &res.partition)?;
            println!(
                "{} communities after {} iterations{}",
                res.partition.n_communities(),
                res.iterations,
                if res.converged {
                    ""
                } else {
                    " (not converged)"
                }
            );
        }
        Cmd::Ecs { a, b } => {
            let alpha = match &c.config {
                Some(_) => pipeline_config(c)?.ecs_alpha,
                None => PipelineConfig::default().ecs_alpha,
            };
            let v = element_centric_similarity(
                &io::read_partition(&a)?,
                &io::read_partition(&b)?,
                alpha,
            )?;
            println!("{v:?}");
        }
        Cmd::Dynamic { manifest } => {
            let cfg = pipeline_config(c)?;
            let ds = io::load_dataset(&manifest)?;
            let report = run_dynamic_decoding(&ds, &cfg)?;
            for r in &report.results {
                io::write_matrix(
                    &out_path(c, &format!("{}.recurrence.csv", r.variant))?,
                    &r.full_recurrence.m,
                )?;
                println!(
                    "{:<24} ECS {:.4} +/- {:.4}  null {:.4}",
                    r.variant.to_string(),
                    r.boot.mean,
                    r.boot.std,
                    r.null_mean
                );
            }
            io::write_json(&out_path(c, "dynamic.json")?, &report.to_json())?;
        }
        Cmd::Static { manifest, features } => {
            let cfg = pipeline_config(c)?;
            let ds = io::load_dataset(&manifest)?;
            let report = run_static_decoding(&ds, &cfg)?;
            if features {
                let variants = cfg.variant_list();
                let ctx = PipelineContext::build(&ds.graph, &cfg, &variants)?;
                for v in variants {
                    let f = static_features(&ds, &cfg, &ctx, v)?;
                    io::write_feature_matrix(&out_path(c, &format!("{v}.features.csv"))?, &f)?;
                }
            }
            for r in &report.results {
                println!(
                    "{:<24} accuracy {:.4}",
                    r.variant.to_string(),
                    r.cv.accuracy
                );
            }
            io::write_json(&out_path(c, "static.json")?, &report.to_json())?;
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e.chain().any(|c| {
        c.downcast_ref::<hodgeflow::Error>()
            .is_some_and(hodgeflow::Error::is_numerical)
    });
    if numerical {
        2
    } else {
        1
    }
}

/// The error chain without links whose text the previous link already
/// contains (library errors embed their source in their message).
fn describe(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = vec![];
    for link in e.chain() {
        let text = link.to_string();
        if parts.last().is_none_or(|prev| !prev.contains(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
