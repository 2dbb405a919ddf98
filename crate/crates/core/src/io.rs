//! Plain-text persistence: matrices as CSV or MatrixMarket, graphs and fit
//! results as JSON.
//!
//! Matrix files carry the block layout `v,n` on their first line (CSV) or in
//! a `% v,n` comment (MatrixMarket). Node indices in JSON are 1-based.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{GroundTruth, Provenance};
use crate::error::{Error, Result};
use crate::graph::{assemble_from_bases, build_connection_laplacian, ConnectionGraph, ConnectionLaplacian, Edge, NodeBases};
use crate::solver::{FitResult, Hyperparams, Method};

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse { context: context.to_string(), message: message.into() }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes via a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:?}")
}

fn parse_layout(line: &str, context: &str) -> Result<(usize, usize)> {
    let mut parts = line.split(',').map(str::trim);
    let mut next = |name: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| parse_err(context, format!("missing {name} in layout header")))?
            .parse()
            .map_err(|_| parse_err(context, format!("bad {name} in layout header {line:?}")))
    };
    let v = next("v")?;
    let n = next("n")?;
    Ok((v, n))
}

pub fn matrix_to_csv(m: &DMatrix<f64>, v: usize, n: usize) -> String {
    let mut out = format!("{v},{n}\n");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV produced by [`matrix_to_csv`]; returns the matrix and its `(v, n)` layout.
pub fn matrix_from_csv(text: &str, context: &str) -> Result<(DMatrix<f64>, usize, usize)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse_err(context, "empty file"))?;
    let (v, n) = parse_layout(header, context)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(context, format!("row {}: {e}", lineno + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(context, format!("row {} has {} columns, expected {}", lineno + 1, row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.len() != v * n {
        return Err(parse_err(context, format!("expected {} rows for v={v}, n={n}, found {}", v * n, rows.len())));
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok((DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]), v, n))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, v: usize, n: usize) -> Result<()> {
    write_text(path, &matrix_to_csv(m, v, n))
}

pub fn read_matrix_csv(path: &Path) -> Result<(DMatrix<f64>, usize, usize)> {
    matrix_from_csv(&read_text(path)?, &path.display().to_string())
}

/// Dense MatrixMarket array, column-major.
pub fn matrix_to_mtx(m: &DMatrix<f64>, v: usize, n: usize) -> String {
    let mut out = format!("%%MatrixMarket matrix array real general\n% {v},{n}\n{} {}\n", m.nrows(), m.ncols());
    for x in m.iter() {
        out.push_str(&fmt_f64(*x));
        out.push('\n');
    }
    out
}

/// Reads MatrixMarket `array` or `coordinate` files, `general` or
/// `symmetric`. The layout comment is required.
pub fn matrix_from_mtx(text: &str, context: &str) -> Result<(DMatrix<f64>, usize, usize)> {
    let mut lines = text.lines();
    let banner = lines.next().ok_or_else(|| parse_err(context, "empty file"))?;
    let banner_lc = banner.to_lowercase();
    let fields: Vec<&str> = banner_lc.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(context, format!("bad banner {banner:?}")));
    }
    let (format, field, symmetry) = (fields[2], fields[3], fields[4]);
    if field != "real" && field != "double" && field != "integer" {
        return Err(parse_err(context, format!("unsupported field {field}")));
    }
    let symmetric = match symmetry {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(context, format!("unsupported symmetry {other}"))),
    };
    let mut layout = None;
    let mut body = Vec::new();
    for line in lines {
        let t = line.trim();
        if let Some(comment) = t.strip_prefix('%') {
            if layout.is_none() {
                layout = parse_layout(comment.trim(), context).ok();
            }
        } else if !t.is_empty() {
            body.push(t);
        }
    }
    let (v, n) = layout.ok_or_else(|| parse_err(context, "missing '% v,n' layout comment"))?;
    let mut body = body.into_iter();
    let size: Vec<usize> = body
        .next()
        .ok_or_else(|| parse_err(context, "missing size line"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| parse_err(context, format!("bad size entry {s:?}"))))
        .collect::<Result<_>>()?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(context, format!("bad value {s:?}")));
    let m = match format {
        "array" => {
            let (rows, cols) = match size[..] {
                [r, c] => (r, c),
                _ => return Err(parse_err(context, "array size line needs 2 entries")),
            };
            let vals: Vec<f64> = body.map(num).collect::<Result<_>>()?;
            if symmetric {
                let expected = rows * (rows + 1) / 2;
                if rows != cols || vals.len() != expected {
                    return Err(parse_err(context, format!("expected {expected} lower-triangle values, found {}", vals.len())));
                }
                let mut m = DMatrix::zeros(rows, cols);
                let mut it = vals.into_iter();
                for j in 0..cols {
                    for i in j..rows {
                        let x = it.next().unwrap();
                        m[(i, j)] = x;
                        m[(j, i)] = x;
                    }
                }
                m
            } else {
                if vals.len() != rows * cols {
                    return Err(parse_err(context, format!("expected {} values, found {}", rows * cols, vals.len())));
                }
                DMatrix::from_column_slice(rows, cols, &vals)
            }
        }
        "coordinate" => {
            let (rows, cols, nnz) = match size[..] {
                [r, c, z] => (r, c, z),
                _ => return Err(parse_err(context, "coordinate size line needs 3 entries")),
            };
            let mut m = DMatrix::zeros(rows, cols);
            let mut count = 0;
            for line in body {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(context, format!("bad coordinate entry {line:?}")));
                }
                let idx = |s: &str, bound: usize| -> Result<usize> {
                    let k: usize = s.parse().map_err(|_| parse_err(context, format!("bad index {s:?}")))?;
                    if k == 0 || k > bound {
                        return Err(parse_err(context, format!("index {k} out of range 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let (i, j, x) = (idx(parts[0], rows)?, idx(parts[1], cols)?, num(parts[2])?);
                m[(i, j)] = x;
                if symmetric {
                    m[(j, i)] = x;
                }
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(context, format!("expected {nnz} entries, found {count}")));
            }
            m
        }
        other => return Err(parse_err(context, format!("unsupported format {other}"))),
    };
    if m.nrows() != v * n {
        return Err(parse_err(context, format!("{} rows do not match layout v={v}, n={n}", m.nrows())));
    }
    Ok((m, v, n))
}

pub fn write_matrix_mtx(path: &Path, m: &DMatrix<f64>, v: usize, n: usize) -> Result<()> {
    write_text(path, &matrix_to_mtx(m, v, n))
}

pub fn read_matrix_mtx(path: &Path) -> Result<(DMatrix<f64>, usize, usize)> {
    matrix_from_mtx(&read_text(path)?, &path.display().to_string())
}

/// Dispatches on extension: `.mtx` is MatrixMarket, anything else CSV.
pub fn read_matrix(path: &Path) -> Result<(DMatrix<f64>, usize, usize)> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => read_matrix_mtx(path),
        _ => read_matrix_csv(path),
    }
}

pub fn write_laplacian(path: &Path, lap: &ConnectionLaplacian) -> Result<()> {
    write_matrix_mtx(path, lap.matrix(), lap.nodes(), lap.stalk_dim())
}

pub fn read_laplacian(path: &Path) -> Result<ConnectionLaplacian> {
    let (m, v, n) = read_matrix(path)?;
    ConnectionLaplacian::from_matrix(m, v, n)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn from_row_major(values: &[f64], n: usize, context: &str) -> Result<DMatrix<f64>> {
    if values.len() != n * n {
        return Err(parse_err(context, format!("expected {} matrix entries, found {}", n * n, values.len())));
    }
    Ok(DMatrix::from_row_slice(n, n, values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    #[serde(rename = "O")]
    pub o: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub v: usize,
    pub n: usize,
    pub edges: Vec<EdgeRecord>,
}

impl GraphRecord {
    pub fn from_graph(cg: &ConnectionGraph) -> Self {
        let edges = cg
            .edges()
            .iter()
            .map(|e| EdgeRecord { i: e.i + 1, j: e.j + 1, w: e.weight, o: row_major(&e.map) })
            .collect();
        Self { v: cg.nodes(), n: cg.stalk_dim(), edges }
    }

    pub fn to_graph(&self) -> Result<ConnectionGraph> {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let ctx = format!("edge {k}");
                if e.i == 0 || e.j == 0 {
                    return Err(parse_err(&ctx, "node indices are 1-based"));
                }
                Ok(Edge::new(e.i - 1, e.j - 1, e.w, from_row_major(&e.o, self.n, &ctx)?))
            })
            .collect::<Result<Vec<_>>>()?;
        ConnectionGraph::new(self.v, self.n, edges)
    }
}

pub fn graph_to_json(cg: &ConnectionGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GraphRecord::from_graph(cg))?)
}

pub fn graph_from_json(text: &str) -> Result<ConnectionGraph> {
    let record: GraphRecord = serde_json::from_str(text).map_err(|e| parse_err("graph json", e.to_string()))?;
    record.to_graph()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub seed: u64,
    pub provenance: Provenance,
    pub graph: GraphRecord,
    /// Node bases, each row-major.
    pub bases: Vec<Vec<f64>>,
}

impl GroundTruthRecord {
    pub fn from_truth(gt: &GroundTruth) -> Self {
        Self {
            seed: gt.seed,
            provenance: gt.provenance.clone(),
            graph: GraphRecord::from_graph(&gt.cg),
            bases: gt.bases.blocks().iter().map(row_major).collect(),
        }
    }

    pub fn to_truth(&self) -> Result<GroundTruth> {
        let cg = self.graph.to_graph()?;
        let blocks = self
            .bases
            .iter()
            .enumerate()
            .map(|(k, b)| from_row_major(b, cg.stalk_dim(), &format!("basis {k}")))
            .collect::<Result<Vec<_>>>()?;
        if blocks.len() != cg.nodes() {
            return Err(Error::dims(format!("{} bases", cg.nodes()), blocks.len()));
        }
        let bases = NodeBases::new(cg.stalk_dim(), blocks)?;
        let laplacian = build_connection_laplacian(&cg);
        Ok(GroundTruth { cg, laplacian, bases, provenance: self.provenance.clone(), seed: self.seed })
    }
}

pub fn save_ground_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    save_json(path, &GroundTruthRecord::from_truth(gt))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    load_json::<GroundTruthRecord>(path)?.to_truth()
}

/// Serializable summary of a fit: scalars, trace, weights and bases. The
/// learned Laplacian is rebuilt from weights and bases on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub method: Method,
    pub v: usize,
    pub n: usize,
    pub hyperparams: Hyperparams,
    pub iterations: usize,
    pub converged: bool,
    pub o_stalls: usize,
    pub kernel_dim: usize,
    pub objective_trace: Vec<f64>,
    /// Canonical-order edge weights.
    pub weights: Vec<f64>,
    pub bases: Vec<Vec<f64>>,
}

impl FitRecord {
    pub fn from_fit(fit: &FitResult) -> Self {
        let st = &fit.state;
        Self {
            method: fit.method,
            v: st.v,
            n: st.n,
            hyperparams: fit.hyperparams,
            iterations: st.iteration,
            converged: fit.converged,
            o_stalls: fit.o_stalls,
            kernel_dim: fit.kernel_dim,
            objective_trace: fit.objective_trace.clone(),
            weights: st.w.iter().copied().collect(),
            bases: st.bases.blocks().iter().map(row_major).collect(),
        }
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    pub fn node_bases(&self) -> Result<NodeBases> {
        let blocks = self
            .bases
            .iter()
            .enumerate()
            .map(|(k, b)| from_row_major(b, self.n, &format!("basis {k}")))
            .collect::<Result<Vec<_>>>()?;
        if blocks.len() != self.v {
            return Err(Error::dims(format!("{} bases", self.v), blocks.len()));
        }
        NodeBases::with_tolerance(self.n, blocks, 1e-8)
    }

    pub fn laplacian(&self) -> Result<ConnectionLaplacian> {
        assemble_from_bases(&self.weights(), &self.node_bases()?)
    }
}
