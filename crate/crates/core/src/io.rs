//! File formats.
//!
//! Matrices are comma-separated text, one row per line, with an optional
//! header line that is detected by a non-numeric first cell. Values are
//! written in Rust's shortest round-trip representation, so reading back
//! gives the identical `f64`. Labels and partitions are single-column CSV.
//! Complexes, metrics and dataset manifests are JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classify::{FeatureMatrix, SampleMeta};
use crate::cluster::Partition;
use crate::complex::{SimplicialComplex2, WeightedGraph};
use crate::signals::NodeTimeSeries;
use crate::spectral::{EigenBasis, ZERO_REL_TOL};
use crate::synth::{Dataset, Recording};
use crate::{Error, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Numeric rows of a CSV file with 1-based line numbers. Blank lines are
/// skipped; a first line whose first cell is not a number is a header.
fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && line_no == 1 && cells[0].parse::<f64>().is_err() {
            continue;
        }
        let mut vals = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    path,
                    line_no,
                    format!("column {}: '{cell}' is not a number", c + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("column {}: non-finite value '{cell}'", c + 1),
                ));
            }
            vals.push(v);
        }
        if let Some((_, first)) = rows.first() {
            let first: &Vec<f64> = first;
            if vals.len() != first.len() {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected {} columns, found {}", first.len(), vals.len()),
                ));
            }
        }
        rows.push((line_no, vals));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_rows(path)?;
    let ncols = rows[0].1.len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r].1[c]))
}

fn format_rows<'a>(rows: impl Iterator<Item = Vec<f64>> + 'a) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(
        path,
        &format_rows(m.row_iter().map(|r| r.iter().copied().collect())),
    )
}

/// Symmetric nonnegative weight matrix with zero diagonal.
pub fn load_connectome(path: &Path) -> Result<WeightedGraph> {
    let a = read_matrix(path)?;
    WeightedGraph::from_adjacency(&a).map_err(|e| match e {
        Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_connectome(path: &Path, g: &WeightedGraph) -> Result<()> {
    write_matrix(path, &g.adjacency())
}

pub fn load_timeseries(path: &Path) -> Result<NodeTimeSeries> {
    NodeTimeSeries::new(read_matrix(path)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => {}
            Err(_) => {
                return Err(parse_err(
                    path,
                    k + 1,
                    format!("'{line}' is not a nonnegative integer label"),
                ))
            }
        }
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no labels"));
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    Partition::from_labels(&read_labels(path)?)
}

pub fn write_partition(path: &Path, p: &Partition) -> Result<()> {
    write_labels(path, p.labels())
}

pub fn read_complex(path: &Path) -> Result<SimplicialComplex2> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

pub fn write_complex(path: &Path, k: &SimplicialComplex2) -> Result<()> {
    write_json(path, &serde_json::to_value(k).expect("complex serializes"))
}

/// First row eigenvalues, then the eigenvector matrix row by row.
pub fn write_eigenbasis(path: &Path, b: &EigenBasis) -> Result<()> {
    let head = std::iter::once(b.eigenvalues.iter().copied().collect());
    let body = b
        .eigenvectors
        .row_iter()
        .map(|r| r.iter().copied().collect());
    write_text(path, &format_rows(head.chain(body)))
}

pub fn read_eigenbasis(path: &Path) -> Result<EigenBasis> {
    let m = read_matrix(path)?;
    let n = m.ncols();
    if m.nrows() != n + 1 {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected {} rows (eigenvalues plus a square matrix), found {}",
                n + 1,
                m.nrows()
            ),
        ));
    }
    let eigenvalues = DVector::from_iterator(n, m.row(0).iter().copied());
    let lmax = eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(EigenBasis {
        eigenvalues,
        eigenvectors: m.rows(1, n).into_owned(),
        zero_tol: ZERO_REL_TOL * lmax.max(1.0),
    })
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Three header rows (subject, state, encoding ids), then one row per
/// feature.
pub fn write_feature_matrix(path: &Path, f: &FeatureMatrix) -> Result<()> {
    let header = |get: fn(&SampleMeta) -> usize| {
        f.meta()
            .iter()
            .map(get)
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut s = format!(
        "{}\n{}\n{}\n",
        header(|m| m.subject),
        header(|m| m.state),
        header(|m| m.encoding)
    );
    s.push_str(&format_rows(
        f.data().row_iter().map(|r| r.iter().copied().collect()),
    ));
    write_text(path, &s)
}

pub fn read_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let rows = read_rows(path)?;
    if rows.len() < 4 {
        return Err(parse_err(
            path,
            1,
            "feature matrix needs 3 header rows and at least one feature",
        ));
    }
    let id = |r: usize, c: usize| -> Result<usize> {
        let (line, vals) = &rows[r];
        let v = vals[c];
        if v < 0.0 || v.fract() != 0.0 {
            return Err(parse_err(
                path,
                *line,
                format!("id '{v}' is not a nonnegative integer"),
            ));
        }
        Ok(v as usize)
    };
    let n = rows[0].1.len();
    let meta = (0..n)
        .map(|c| {
            Ok(SampleMeta {
                subject: id(0, c)?,
                state: id(1, c)?,
                encoding: id(2, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let data = DMatrix::from_fn(rows.len() - 3, n, |r, c| rows[r + 3].1[c]);
    FeatureMatrix::new(data, meta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject: usize,
    pub encoding: usize,
    pub path: String,
}

/// Dataset description; paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub connectome: String,
    pub frame_labels: String,
    pub state_names: Vec<String>,
    pub recordings: Vec<ManifestEntry>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Loads and checks everything a manifest points to.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let m = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let graph = load_connectome(&resolve(base, &m.connectome))?;
    let labels_path = resolve(base, &m.frame_labels);
    let frame_labels = read_labels(&labels_path)?;
    if let Some(&bad) = frame_labels.iter().find(|&&l| l >= m.state_names.len()) {
        return Err(Error::invalid(format!(
            "{}: label {bad} but only {} state names",
            labels_path.display(),
            m.state_names.len()
        )));
    }
    if m.recordings.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no recordings listed",
            manifest_path.display()
        )));
    }
    let mut seen = BTreeMap::new();
    let mut recordings = Vec::with_capacity(m.recordings.len());
    for e in &m.recordings {
        if seen.insert((e.subject, e.encoding), ()).is_some() {
            return Err(Error::invalid(format!(
                "{}: subject {} encoding {} listed twice",
                manifest_path.display(),
                e.subject,
                e.encoding
            )));
        }
        let p = resolve(base, &e.path);
        let x = load_timeseries(&p)?;
        if x.n_frames() != frame_labels.len() {
            return Err(Error::invalid(format!(
                "{}: {} frames but {} frame labels",
                p.display(),
                x.n_frames(),
                frame_labels.len()
            )));
        }
        if x.n_nodes() != graph.n_nodes() {
            return Err(Error::invalid(format!(
                "{}: {} channels but the connectome has {} nodes",
                p.display(),
                x.n_nodes(),
                graph.n_nodes()
            )));
        }
        recordings.push(Recording {
            subject: e.subject,
            encoding: e.encoding,
            series: NodeTimeSeries::with_labels(x.into_data(), frame_labels.clone())?,
        });
    }
    recordings.sort_by_key(|r| (r.subject, r.encoding));
    Ok(Dataset {
        graph,
        recordings,
        frame_labels,
        state_names: m.state_names,
    })
}

/// Writes connectome, labels and one CSV per recording under `dir`, plus
/// `manifest.json`. Returns the manifest path.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<PathBuf> {
    write_connectome(&dir.join("connectome.csv"), &ds.graph)?;
    write_labels(&dir.join("labels.csv"), &ds.frame_labels)?;
    let mut entries = Vec::with_capacity(ds.recordings.len());
    for r in &ds.recordings {
        let name = format!("sub{:03}_enc{}.csv", r.subject, r.encoding);
        write_matrix(&dir.join(&name), r.series.data())?;
        entries.push(ManifestEntry {
            subject: r.subject,
            encoding: r.encoding,
            path: name,
        });
    }
    let manifest = DatasetManifest {
        connectome: "connectome.csv".into(),
        frame_labels: "labels.csv".into(),
        state_names: ds.state_names.clone(),
        recordings: entries,
    };
    let path = dir.join("manifest.json");
    write_json(
        &path,
        &serde_json::to_value(&manifest).expect("manifest serializes"),
    )?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::clique_complex_order2;
    use crate::synth::{generate_dataset, SynthConfig};

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = DMatrix::from_fn(10, 10, |i, j| {
            ((i * 10 + j) as f64 * 0.7311).sin() / 3.0 + (i + j) as f64 * 1e-17
        });
        let m = &m + m.transpose();
        write_matrix(&p, &m).unwrap();
        let back = read_matrix(&p).unwrap();
        assert!((back - &m).amax() < 1e-12);
        assert_eq!(read_matrix(&p).unwrap(), m);
    }

    #[test]
    fn bad_cell_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b\n1,2\n3,4\n5,6\n7,x\n").unwrap();
        let err = read_matrix(&p).unwrap_err().to_string();
        assert!(err.contains("bad.csv:5:"), "{err}");
        fs::write(&p, "1,2\nNaN,1\n").unwrap();
        assert!(read_matrix(&p).unwrap_err().to_string().contains(":2:"));
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix(&p)
            .unwrap_err()
            .to_string()
            .contains("expected 2 columns"));
    }

    #[test]
    fn header_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        fs::write(&p, "n0,n1\n0,2.5\n2.5,0\n").unwrap();
        let g = load_connectome(&p).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 2.5)]);
    }

    #[test]
    fn connectome_checks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "1,2\n2,0\n").unwrap();
        assert!(load_connectome(&p)
            .unwrap_err()
            .to_string()
            .contains("self-loops not allowed"));
        fs::write(&p, "0,2\n1,0\n").unwrap();
        assert!(load_connectome(&p)
            .unwrap_err()
            .to_string()
            .contains("not symmetric"));
        assert!(matches!(
            load_connectome(&dir.path().join("none.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn complex_json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.json");
        let g =
            WeightedGraph::new(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let k = clique_complex_order2(&g);
        write_complex(&p, &k).unwrap();
        assert_eq!(read_complex(&p).unwrap(), k);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"triangles\""));
        fs::write(&p, r#"{"n_nodes":3,"edges":[[0,1]],"triangles":[[0,1,2]]}"#).unwrap();
        assert!(read_complex(&p)
            .unwrap_err()
            .to_string()
            .contains("missing its face"));
    }

    #[test]
    fn labels_and_features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lp = dir.path().join("l.csv");
        write_labels(&lp, &[2, 0, 1]).unwrap();
        assert_eq!(read_labels(&lp).unwrap(), vec![2, 0, 1]);
        assert_eq!(read_partition(&lp).unwrap().labels(), &[0, 1, 2]);

        let meta = vec![
            SampleMeta {
                subject: 0,
                state: 0,
                encoding: 1,
            },
            SampleMeta {
                subject: 3,
                state: 2,
                encoding: 0,
            },
        ];
        let f = FeatureMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 2.0, 1e-3]), meta)
            .unwrap();
        let fp = dir.path().join("f.csv");
        write_feature_matrix(&fp, &f).unwrap();
        assert_eq!(read_feature_matrix(&fp).unwrap(), f);
    }

    #[test]
    fn dataset_round_trip() {
        let cfg = SynthConfig {
            n_nodes: 12,
            n_subjects: 2,
            n_states: 3,
            frames_per_state: 5,
            n_modules: 2,
            p_intra: 0.9,
            p_inter: 0.3,
            ..SynthConfig::default()
        };
        let ds = generate_dataset(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mp = write_dataset(dir.path(), &ds).unwrap();
        let back = load_dataset(&mp).unwrap();
        assert_eq!(back, ds);
        let text = fs::read_to_string(&mp).unwrap();
        assert!(!text.contains(dir.path().to_str().unwrap()));
    }

    #[test]
    fn eigenbasis_round_trip() {
        let b = EigenBasis {
            eigenvalues: DVector::from_vec(vec![0.0, 3.0]),
            eigenvectors: DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 0.8, -0.6]),
            zero_tol: 1e-8 * 3.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_eigenbasis(&p, &b).unwrap();
        let back = read_eigenbasis(&p).unwrap();
        assert_eq!(back.eigenvalues, b.eigenvalues);
        assert_eq!(back.eigenvectors, b.eigenvectors);
        assert_eq!(back.zero_tol, b.zero_tol);
    }
}
