//! File formats: dataset CSV, graph and ground-truth JSON, benchmark CSV.
//!
//! Every writer emits a provenance block (crate version, seed, configuration).
//! CSV files carry it as leading `#` comment lines, which the readers skip;
//! JSON files carry it under a `"meta"` key, which graph readers ignore.
//! Floats are written in shortest round-trip form, so output is byte-stable
//! for a fixed seed.

use std::fmt::Write as _;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::BenchmarkReport;
use crate::graph::Dag;
use crate::scalar::Scalar;
use crate::scoring::Dataset;
use crate::sim::GroundTruth;

/// Provenance recorded with every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &str, seed: Option<u64>, config: Value) -> Self {
        Meta {
            tool: "cdag".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
        }
    }

    fn comment_line(&self) -> String {
        format!("# {}\n", serde_json::to_string(self).expect("meta serializes"))
    }
}

/// Writes `y1..yp[,x1..xp]` with a metadata comment.
pub fn write_dataset<T: Scalar, W: Write>(d: &Dataset<T>, meta: Option<&Meta>, mut w: W) -> Result<()> {
    let mut out = String::new();
    if let Some(m) = meta {
        out.push_str(&m.comment_line());
    }
    let p = d.p();
    let mut header: Vec<String> = (1..=p).map(|i| format!("y{i}")).collect();
    if d.has_secondary() {
        header.extend((1..=p).map(|i| format!("x{i}")));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    let cols = d.full_columns();
    for row in cols.rows() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("write to String");
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a dataset CSV. Columns are matched by name (`y<i>`, `x<i>`, 1-based,
/// any order); `x` columns are optional but must cover every `y` if present.
pub fn read_dataset<T: Scalar, R: Read>(r: R) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut y_pos = Vec::new();
    let mut x_pos = Vec::new();
    for (pos, name) in headers.iter().enumerate() {
        let lower = name.to_ascii_lowercase();
        let (kind, idx) = lower.split_at(1.min(lower.len()));
        let idx: usize = idx
            .parse()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| Error::input(format!("unrecognized column '{name}' (expected y<i> or x<i>)")))?;
        match kind {
            "y" => y_pos.push((idx, pos)),
            "x" => x_pos.push((idx, pos)),
            _ => return Err(Error::input(format!("unrecognized column '{name}'"))),
        }
    }
    y_pos.sort_unstable();
    x_pos.sort_unstable();
    let p = y_pos.len();
    if p == 0 {
        return Err(Error::input("dataset has no y columns"));
    }
    let contiguous = |v: &[(usize, usize)]| v.iter().enumerate().all(|(k, &(i, _))| i == k + 1);
    if !contiguous(&y_pos) {
        return Err(Error::input("y columns must be y1..yp without gaps or duplicates"));
    }
    if !x_pos.is_empty() && (x_pos.len() != p || !contiguous(&x_pos)) {
        return Err(Error::input("x columns must be x1..xp matching the y columns"));
    }

    let mut y_rows: Vec<T> = Vec::new();
    let mut x_rows: Vec<T> = Vec::new();
    let mut n = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |pos: usize| -> Result<T> {
            let s = rec.get(pos).unwrap_or("");
            let v: f64 = s
                .parse()
                .map_err(|_| Error::input(format!("row {}: cannot parse '{s}' as a number", line + 1)))?;
            Ok(T::of(v))
        };
        for &(_, pos) in &y_pos {
            y_rows.push(field(pos)?);
        }
        for &(_, pos) in &x_pos {
            x_rows.push(field(pos)?);
        }
        n += 1;
    }
    let y = Array2::from_shape_vec((n, p), y_rows).map_err(|e| Error::input(e.to_string()))?;
    let x = if x_pos.is_empty() {
        None
    } else {
        Some(Array2::from_shape_vec((n, p), x_rows).map_err(|e| Error::input(e.to_string()))?)
    };
    Dataset::new(y, x)
}

/// Graph JSON `{"p", "edges", ...extra, "meta"}`.
pub fn graph_json(g: &Dag, extra: &[(&str, Value)], meta: Option<&Meta>) -> Value {
    let mut v = serde_json::to_value(g).expect("graph serializes");
    let obj = v.as_object_mut().expect("object");
    for (k, val) in extra {
        obj.insert((*k).to_string(), val.clone());
    }
    if let Some(m) = meta {
        obj.insert("meta".into(), serde_json::to_value(m).expect("meta serializes"));
    }
    v
}

/// Reads graph JSON, or the true graph `g` from a truth file.
pub fn read_graph<R: Read>(r: R) -> Result<Dag> {
    let mut v: Value = serde_json::from_reader(r)?;
    if v.get("p").is_none() {
        if let Some(g) = v.get_mut("g") {
            v = g.take();
        }
    }
    Ok(serde_json::from_value(v)?)
}

/// Truth JSON `{"g", "g_prime", "misspec", "meta"}`.
pub fn truth_json(t: &GroundTruth, meta: Option<&Meta>) -> Value {
    let mut v = serde_json::to_value(t).expect("truth serializes");
    if let Some(m) = meta {
        v.as_object_mut()
            .expect("object")
            .insert("meta".into(), serde_json::to_value(m).expect("meta serializes"));
    }
    v
}

pub fn read_truth<R: Read>(r: R) -> Result<GroundTruth> {
    Ok(serde_json::from_reader(r)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write>(v: &Value, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn fmt_stderr(s: Option<f64>) -> String {
    s.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Benchmark CSV: `theta,p,n,estimator,mean_shd,stderr,reps`; `stderr` is
/// `NA` for single-replicate cells.
pub fn write_benchmark_csv<W: Write>(r: &BenchmarkReport, meta: Option<&Meta>, mut w: W) -> Result<()> {
    let mut out = String::new();
    if let Some(m) = meta {
        out.push_str(&m.comment_line());
    }
    out.push_str("theta,p,n,estimator,mean_shd,stderr,reps\n");
    for row in &r.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.theta,
            row.p,
            row.n,
            row.estimator,
            row.mean_shd,
            fmt_stderr(row.stderr),
            row.reps
        )
        .expect("write to String");
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Misspecification sweep CSV: `misspec_prob,theta,p,n,estimator,mean_shd,stderr,reps`.
pub fn write_misspec_csv<W: Write>(r: &BenchmarkReport, meta: Option<&Meta>, mut w: W) -> Result<()> {
    let mut out = String::new();
    if let Some(m) = meta {
        out.push_str(&m.comment_line());
    }
    out.push_str("misspec_prob,theta,p,n,estimator,mean_shd,stderr,reps\n");
    for row in &r.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.misspec_prob,
            row.theta,
            row.p,
            row.n,
            row.estimator,
            row.mean_shd,
            fmt_stderr(row.stderr),
            row.reps
        )
        .expect("write to String");
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}
