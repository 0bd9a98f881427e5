//! File formats.
//!
//! * Model: JSON `{"n": 3, "edges": [[0, 1, 0.5], [1, 2, -0.2]]}`.
//! * Correlations and distances: header-free CSV, one row per vertex. Distance
//!   files may contain `inf`.
//! * Samples: header-free CSV of `1` / `-1`, one row per sample.
//! * Steiner trees: JSON `{"vertices": [{"id": 0, "label": 0}, {"id": 3}],
//!   "edges": [[0, 3, 0.5]], "root": 0}`; vertices with a label are observed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DistanceEstimate, SteinerTree};
use crate::model::{CorrelationMatrix, SampleMatrix, TreeIsingModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&TreeIsingModel> for ModelFile {
    fn from(m: &TreeIsingModel) -> Self {
        Self { n: m.n(), edges: m.weighted_edges().collect() }
    }
}

impl TryFrom<ModelFile> for TreeIsingModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        TreeIsingModel::from_edges(f.n, &f.edges)
    }
}

pub fn model_to_json(m: &TreeIsingModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from(m))?)
}

pub fn model_from_json(s: &str) -> Result<TreeIsingModel> {
    serde_json::from_str::<ModelFile>(s)?.try_into()
}

pub fn read_model(path: impl AsRef<Path>) -> Result<TreeIsingModel> {
    let f: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    f.try_into()
}

pub fn write_model(path: impl AsRef<Path>, m: &TreeIsingModel) -> Result<()> {
    std::fs::write(path, model_to_json(m)? + "\n")?;
    Ok(())
}

fn read_rows<R: Read, T>(reader: R, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(&parse).collect::<Result<Vec<T>>>()?);
    }
    Ok(rows)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn square(rows: Vec<Vec<f64>>) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a square {n}x{n} matrix, found a row of length {}", r.len())));
    }
    Ok((n, rows.into_iter().flatten().collect()))
}

pub fn parse_correlation_csv<R: Read>(reader: R) -> Result<CorrelationMatrix> {
    let (n, data) = square(read_rows(reader, parse_f64)?)?;
    CorrelationMatrix::new(n, data)
}

pub fn read_correlation_csv(path: impl AsRef<Path>) -> Result<CorrelationMatrix> {
    parse_correlation_csv(File::open(path)?)
}

pub fn parse_distance_csv<R: Read>(reader: R) -> Result<DistanceEstimate> {
    let (n, data) = square(read_rows(reader, parse_f64)?)?;
    DistanceEstimate::new(n, data)
}

pub fn read_distance_csv(path: impl AsRef<Path>) -> Result<DistanceEstimate> {
    parse_distance_csv(File::open(path)?)
}

fn write_matrix<W: Write>(w: W, n: usize, data: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(w);
    for row in data.chunks(n.max(1)).take(n) {
        let cells: Vec<String> = row
            .iter()
            .map(|x| if x.is_infinite() { "inf".to_string() } else { format!("{x:?}") })
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_correlation_csv<W: Write>(w: W, mu: &CorrelationMatrix) -> Result<()> {
    write_matrix(w, mu.n(), mu.as_slice())
}

pub fn write_distance_csv<W: Write>(w: W, d: &DistanceEstimate) -> Result<()> {
    write_matrix(w, d.n(), d.as_slice())
}

pub fn parse_samples_csv<R: Read>(reader: R) -> Result<SampleMatrix> {
    let rows = read_rows(reader, |s| match s {
        "1" | "+1" => Ok(1i8),
        "-1" => Ok(-1i8),
        other => Err(Error::Parse(format!("sample entries must be +-1, got {other:?}"))),
    })?;
    let n = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Parse(format!("ragged sample rows: {} vs {n}", r.len())));
    }
    SampleMatrix::new(rows.len(), n, rows.into_iter().flatten().collect())
}

pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    parse_samples_csv(File::open(path)?)
}

pub fn write_samples_csv<W: Write>(w: W, s: &SampleMatrix) -> Result<()> {
    let mut out = BufWriter::new(w);
    for row in s.rows() {
        let cells: Vec<&str> = row.iter().map(|&x| if x > 0 { "1" } else { "-1" }).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinerVertex {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinerFile {
    pub vertices: Vec<SteinerVertex>,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub root: usize,
}

impl From<&SteinerTree> for SteinerFile {
    fn from(t: &SteinerTree) -> Self {
        let vertices = (0..t.n_vertices())
            .map(|id| SteinerVertex { id, label: t.is_labeled(id).then_some(id) })
            .collect();
        Self { vertices, edges: t.edges().to_vec(), root: t.root() }
    }
}

impl TryFrom<SteinerFile> for SteinerTree {
    type Error = Error;
    /// Labeled vertices must carry `label == id` and occupy ids `0..k`.
    fn try_from(f: SteinerFile) -> Result<Self> {
        let nv = f.vertices.len();
        let mut seen = vec![false; nv];
        let mut n_labeled = 0;
        for v in &f.vertices {
            if v.id >= nv || std::mem::replace(&mut seen[v.id], true) {
                return Err(Error::Parse(format!("vertex ids must be a permutation of 0..{nv}")));
            }
            if let Some(l) = v.label {
                if l != v.id {
                    return Err(Error::Parse(format!("vertex {} has label {l}; labels must equal ids", v.id)));
                }
                n_labeled += 1;
            }
        }
        if f.vertices.iter().any(|v| v.label.is_some() != (v.id < n_labeled)) {
            return Err(Error::Parse("labeled vertices must use the lowest ids".into()));
        }
        SteinerTree::new(n_labeled, nv, f.edges, f.root)
    }
}

pub fn steiner_to_json(t: &SteinerTree) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SteinerFile::from(t))?)
}

pub fn steiner_from_json(s: &str) -> Result<SteinerTree> {
    serde_json::from_str::<SteinerFile>(s)?.try_into()
}
