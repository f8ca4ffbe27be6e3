//! Result files: JSON records, sweep CSVs, ground-state text dumps and
//! sweep checkpoints.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::eigensolver::GroundState;
use crate::sweep::{derivative, find_peaks, stencil_exclusions, Curve, PeakOptions, PointResult};
use crate::{Error, Result};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON schema shipped for [`ResultRecord`].
pub const RECORD_SCHEMA: &str = include_str!("../../schema/result-record.schema.json");

/// Envelope for every JSON result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    pub wall_time_s: f64,
    pub code_version: String,
    pub timestamp_unix: u64,
}

impl ResultRecord {
    pub fn new(command: &str, inputs: Value, outputs: Value, wall_time_s: f64) -> Self {
        ResultRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            outputs,
            wall_time_s,
            code_version: CODE_VERSION.to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

/// Float text with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_opt(path: &Path, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<f64>().map(Some).map_err(|_| Error::Format {
        path: path.to_path_buf(),
        message: format!("not a number: {field:?}"),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Check a JSON value against the shipped record schema: required keys
/// present and each declared property of the declared JSON type.
pub fn validate_record(value: &Value) -> std::result::Result<(), Vec<String>> {
    let schema: Value = serde_json::from_str(RECORD_SCHEMA).expect("shipped schema is valid JSON");
    let mut problems = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec!["record is not an object".into()]);
    };
    for key in schema["required"].as_array().into_iter().flatten() {
        let key = key.as_str().unwrap_or_default();
        if !obj.contains_key(key) {
            problems.push(format!("missing required field {key:?}"));
        }
    }
    if let Some(props) = schema["properties"].as_object() {
        for (key, spec) in props {
            let (Some(v), Some(ty)) = (obj.get(key), spec["type"].as_str()) else {
                continue;
            };
            let ok = match ty {
                "string" => v.is_string(),
                "integer" => v.is_u64() || v.is_i64(),
                "number" => v.is_number(),
                "object" => v.is_object(),
                "array" => v.is_array(),
                "boolean" => v.is_boolean(),
                _ => true,
            };
            if !ok {
                problems.push(format!("field {key:?} is not of type {ty}"));
            }
            if let Some(min) = spec["minimum"].as_f64() {
                if v.as_f64().is_some_and(|x| x < min) {
                    problems.push(format!("field {key:?} is below {min}"));
                }
            }
        }
    }
    if schema["additionalProperties"] == Value::Bool(false) {
        let props = schema["properties"].as_object();
        for key in obj.keys() {
            if !props.is_some_and(|p| p.contains_key(key)) {
                problems.push(format!("unexpected field {key:?}"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

pub const SWEEP_CSV_HEADER: [&str; 11] = [
    "value", "m2", "sigma", "dm2", "one_sided", "peak", "degenerate", "energy", "gap", "length", "error",
];

/// One row of a sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub m2: Option<f64>,
    pub sigma: Option<f64>,
    pub dm2: Option<f64>,
    pub one_sided: bool,
    pub peak: bool,
    pub degenerate: bool,
    pub energy: Option<f64>,
    pub gap: Option<f64>,
    pub length: usize,
    pub error: Option<String>,
}

/// Rows for one curve with derivative and peak flags filled in.
pub fn sweep_rows(curve: &Curve, peaks: &PeakOptions) -> Vec<SweepRow> {
    let coords = curve.values();
    let m2 = curve.m2();
    let deriv = if coords.len() >= 2 { derivative(&coords, &m2).ok() } else { None };
    let peak_idx: Vec<usize> = deriv
        .as_ref()
        .map(|d| {
            find_peaks(d, &stencil_exclusions(&curve.degenerate()), peaks)
                .iter()
                .map(|p| p.index)
                .collect()
        })
        .unwrap_or_default();
    curve
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| SweepRow {
            value: p.value,
            m2: p.m2,
            sigma: p.sigma,
            dm2: deriv.as_ref().map(|d| d.values[i]).filter(|x| x.is_finite()),
            one_sided: deriv.as_ref().is_some_and(|d| d.one_sided[i]),
            peak: peak_idx.contains(&i),
            degenerate: p.degenerate,
            energy: p.energy,
            gap: p.gap,
            length: p.length,
            error: p.error.clone(),
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let w = create(path)?;
    let mut out = csv::Writer::from_writer(w);
    let wrap = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    out.write_record(SWEEP_CSV_HEADER).map_err(wrap)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.value),
            fmt_opt(r.m2),
            fmt_opt(r.sigma),
            fmt_opt(r.dm2),
            (r.one_sided as u8).to_string(),
            (r.peak as u8).to_string(),
            (r.degenerate as u8).to_string(),
            fmt_opt(r.energy),
            fmt_opt(r.gap),
            r.length.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(wrap)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let bad = |m: String| Error::Format {
        path: path.to_path_buf(),
        message: m,
    };
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(SWEEP_CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let flag = |i: usize| rec[i].trim() == "1";
        rows.push(SweepRow {
            value: parse_opt(path, &rec[0])?.ok_or_else(|| bad("missing value".into()))?,
            m2: parse_opt(path, &rec[1])?,
            sigma: parse_opt(path, &rec[2])?,
            dm2: parse_opt(path, &rec[3])?,
            one_sided: flag(4),
            peak: flag(5),
            degenerate: flag(6),
            energy: parse_opt(path, &rec[7])?,
            gap: parse_opt(path, &rec[8])?,
            length: rec[9].parse().map_err(|_| bad(format!("bad length {:?}", &rec[9])))?,
            error: Some(rec[10].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

/// Header line of the ground-state text format.
pub const GS_HEADER: &str = "# qlm-magic ground-state v1";

/// Ground state as text: a versioned header, `key value` lines, then one
/// `config amplitude` line per basis state when `amplitudes` is set.
pub fn write_gs_text(gs: &GroundState, amplitudes: bool, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let l = gs.length();
    let mut text = format!("{GS_HEADER}\n");
    text += &format!("length {l}\n");
    text += &format!("w {}\nu {}\nv {}\n", fmt_f64(gs.params.w), fmt_f64(gs.params.u), fmt_f64(gs.params.v));
    text += &format!("energy {}\n", fmt_f64(gs.energy));
    text += &format!("momentum {}\n", gs.momentum);
    text += &format!("gap {}\n", fmt_f64(gs.gap));
    text += &format!("degenerate {}\n", gs.degenerate);
    text += &format!("residual {}\n", fmt_f64(gs.residual));
    text += &format!("dim {}\n", gs.amplitudes.len());
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    if amplitudes {
        writeln!(w, "amplitudes").map_err(|e| Error::io(path, e))?;
        for (&c, &a) in gs.basis.configs().iter().zip(&gs.amplitudes) {
            writeln!(w, "{} {}", crate::basis::format_bits(c, l), fmt_f64(a)).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parsed ground-state text file.
#[derive(Clone, Debug, PartialEq)]
pub struct GsText {
    pub fields: Vec<(String, String)>,
    pub amplitudes: Vec<(String, f64)>,
}

impl GsText {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_gs_text(path: &Path) -> Result<GsText> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Format {
        path: path.to_path_buf(),
        message: m,
    };
    let mut lines = text.lines();
    if lines.next() != Some(GS_HEADER) {
        return Err(bad("missing or unsupported header".into()));
    }
    let mut out = GsText {
        fields: Vec::new(),
        amplitudes: Vec::new(),
    };
    let mut in_amps = false;
    for line in lines {
        if line == "amplitudes" {
            in_amps = true;
            continue;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| bad(format!("malformed line {line:?}")))?;
        if in_amps {
            let a = v.parse::<f64>().map_err(|_| bad(format!("bad amplitude {v:?}")))?;
            out.amplitudes.push((k.to_string(), a));
        } else {
            out.fields.push((k.to_string(), v.to_string()));
        }
    }
    Ok(out)
}

/// Append-only JSON-lines log of finished sweep points.
pub struct Checkpoint {
    file: File,
}

impl Checkpoint {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Checkpoint { file })
    }

    pub fn append(&mut self, p: &PointResult) -> std::io::Result<()> {
        let line = serde_json::to_string(p).map_err(std::io::Error::other)?;
        writeln!(self.file, "{line}")?;
        self.file.flush()
    }

    /// Points recorded so far; a torn last line from an interrupted run is
    /// ignored.
    pub fn load(path: &Path) -> Result<Vec<PointResult>> {
        let f = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Ok(p) = serde_json::from_str::<PointResult>(&line) {
                out.push(p);
            }
        }
        Ok(out)
    }
}
