//! Collection files, result and truth JSON, and CSV output.
//!
//! A `.gss` collection file is plain text: a header line `n M`, then for each
//! item a line holding its dimension `p` followed by `n` lines of `p`
//! whitespace-separated numbers (the rows of an orthonormal basis). Blank
//! lines and lines starting with `#` are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, DatasetSpec};
use crate::error::{GmebError, Result};
use crate::grassmann::{Basis, SubspaceCollection};
use crate::solver::{ConvergedReason, DualWeights, SolverResult, TraceEntry};

pub fn write_collection<W: Write>(collection: &SubspaceCollection, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", collection.n(), collection.len())?;
    for x in collection.iter() {
        writeln!(out, "{}", x.p())?;
        for row in x.matrix().row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_collection(collection: &SubspaceCollection, path: &Path) -> Result<()> {
    write_collection(collection, BufWriter::new(File::create(path)?))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_content(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Ok(Some((self.number, trimmed.to_string())));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_content()?
            .ok_or_else(|| GmebError::Parse { line: self.number + 1, message: format!("unexpected end of file, expected {what}") })
    }
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != count {
        return Err(GmebError::Parse {
            line,
            message: format!("expected {count} {what}, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| GmebError::Parse { line, message: format!("cannot parse `{f}` as {what}") }))
        .collect()
}

pub fn read_collection<R: Read>(input: R) -> Result<SubspaceCollection> {
    let mut lines = Lines { inner: BufReader::new(input).lines(), number: 0 };
    let (hline, header) = lines.expect("header `n M`")?;
    let dims: Vec<usize> = parse_fields(hline, &header, 2, "header integers")?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(GmebError::Parse { line: hline, message: "n and M must be positive".into() });
    }
    let mut items = Vec::with_capacity(m);
    for _ in 0..m {
        let (pline, ptext) = lines.expect("item dimension")?;
        let p: usize = parse_fields(pline, &ptext, 1, "item dimension")?[0];
        if p == 0 || p > n {
            return Err(GmebError::Parse { line: pline, message: format!("item dimension {p} outside 1..={n}") });
        }
        let mut values = Vec::with_capacity(n * p);
        for _ in 0..n {
            let (rline, rtext) = lines.expect("basis row")?;
            values.extend(parse_fields::<f64>(rline, &rtext, p, "numbers")?);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GmebError::Parse { line: pline, message: "basis has non-finite entries".into() });
        }
        let basis = Basis::new(DMatrix::from_row_slice(n, p, &values))
            .map_err(|e| GmebError::Parse { line: pline, message: e.to_string() })?;
        items.push(basis);
    }
    if let Some((line, _)) = lines.next_content()? {
        return Err(GmebError::Parse { line, message: format!("trailing content after {m} items") });
    }
    SubspaceCollection::new(items)
}

pub fn load_collection(path: &Path) -> Result<SubspaceCollection> {
    read_collection(File::open(path)?)
}

/// Dense matrix as explicit rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&Basis> for MatrixJson {
    fn from(b: &Basis) -> Self {
        Self {
            n: b.n(),
            k: b.p(),
            rows: b.matrix().row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_basis(&self) -> Result<Basis> {
        if self.rows.len() != self.n || self.rows.iter().any(|r| r.len() != self.k) {
            return Err(GmebError::Schema(format!("matrix rows do not match {}x{}", self.n, self.k)));
        }
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        Basis::new(DMatrix::from_row_slice(self.n, self.k, &flat))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub k: usize,
    pub lambda: Vec<f64>,
    pub center: MatrixJson,
    pub primal_cost: f64,
    pub dual_cost: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged_reason: ConvergedReason,
    pub trace: Vec<TraceEntry>,
}

impl From<&SolverResult> for ResultJson {
    fn from(r: &SolverResult) -> Self {
        Self {
            k: r.k,
            lambda: r.lambda_best.as_slice().to_vec(),
            center: (&r.center).into(),
            primal_cost: r.primal_cost,
            dual_cost: r.dual_cost,
            duality_gap: r.duality_gap,
            iterations: r.iterations,
            converged_reason: r.converged_reason,
            trace: r.trace.clone(),
        }
    }
}

/// Initial weights from JSON: either a bare array or an object with a
/// `lambda` field (such as a saved result).
pub fn parse_weights(text: &str) -> Result<DualWeights> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let array = match &value {
        serde_json::Value::Array(_) => value,
        serde_json::Value::Object(map) => map
            .get("lambda")
            .cloned()
            .ok_or_else(|| GmebError::Schema("weights object has no `lambda` field".into()))?,
        _ => return Err(GmebError::Schema("weights must be an array or an object with `lambda`".into())),
    };
    let values: Vec<f64> =
        serde_json::from_value(array).map_err(|e| GmebError::Schema(format!("`lambda` must be numbers: {e}")))?;
    DualWeights::new(values).map_err(|e| GmebError::Schema(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthJson {
    pub truth_k: usize,
    pub truth_center: Option<MatrixJson>,
    pub spec: DatasetSpec,
}

impl From<&Dataset> for TruthJson {
    fn from(d: &Dataset) -> Self {
        Self { truth_k: d.truth_k, truth_center: d.truth_center.as_ref().map(Into::into), spec: d.spec.clone() }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    write_csv(rows, File::create(path)?)
}
