//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! seed = 42
//!
//! [chain]
//! lengths = 12, 18, 24
//! u = -3.0
//! v = 3.3302
//!
//! [sampling]
//! samples = 800
//! runs = 50
//!
//! [sweep]
//! u_scan = -4.0, -2.0, 0.05
//! method = sampled
//! ```
//!
//! Every problem in a file is reported at once, each with its line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::MAX_ENUM_LENGTH;
use crate::gauge::QlmParams;
use crate::sampling::SamplingPlan;
use crate::sweep::{Axis, Estimator, ExactMethod, SweepGrid};
use crate::{ConfigIssue, Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["schema", "seed", "threads"]),
    ("chain", &["length", "lengths", "w", "u", "v", "tol"]),
    ("sampling", &["samples", "runs", "quadruple_cap"]),
    ("sweep", &["u_scan", "v_scan", "u", "v", "lengths", "method"]),
    ("rk", &["beta", "length"]),
    ("qlm", &["w", "m", "v", "j", "theta"]),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub lengths: Vec<usize>,
    pub w: f64,
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RkConfig {
    pub beta: Option<f64>,
    pub length: Option<usize>,
}

/// Validated configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    pub seed: u64,
    pub threads: Option<usize>,
    pub chain: ChainConfig,
    pub sampling: SamplingPlan,
    pub sweep: Option<SweepGrid>,
    pub rk: RkConfig,
    pub qlm: Option<QlmParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA_VERSION,
            seed: 1,
            threads: None,
            chain: ChainConfig {
                lengths: Vec::new(),
                w: -1.0,
                u: None,
                v: None,
                tol: 1e-10,
            },
            sampling: SamplingPlan::new(800, 50, 1),
            sweep: None,
            rk: RkConfig {
                beta: None,
                length: None,
            },
            qlm: None,
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader {
    entries: BTreeMap<(String, String), Entry>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn parsed<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<(T, usize)> {
        let e = self.take(section, key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some((v, e.line)),
            Err(_) => {
                self.issue(Some(e.line), format!("{} must be {what}, got {:?}", qualified(section, key), e.value));
                None
            }
        }
    }

    fn float(&mut self, section: &str, key: &str) -> Option<(f64, usize)> {
        let v = self.parsed::<f64>(section, key, "a number")?;
        if !v.0.is_finite() {
            self.issue(Some(v.1), format!("{} must be finite", qualified(section, key)));
            return None;
        }
        Some(v)
    }

    fn count(&mut self, section: &str, key: &str) -> Option<(usize, usize)> {
        self.parsed::<usize>(section, key, "a non-negative integer")
    }

    fn floats(&mut self, section: &str, key: &str) -> Option<(Vec<f64>, usize)> {
        let e = self.take(section, key)?;
        let parts: std::result::Result<Vec<f64>, _> = e.value.split(',').map(|p| p.trim().parse::<f64>()).collect();
        match parts {
            Ok(v) if v.iter().all(|x| x.is_finite()) => Some((v, e.line)),
            _ => {
                self.issue(Some(e.line), format!("{} must be a comma-separated list of numbers", qualified(section, key)));
                None
            }
        }
    }

    fn counts(&mut self, section: &str, key: &str) -> Option<(Vec<usize>, usize)> {
        let e = self.take(section, key)?;
        let parts: std::result::Result<Vec<usize>, _> = e.value.split(',').map(|p| p.trim().parse::<usize>()).collect();
        match parts {
            Ok(v) if !v.is_empty() => Some((v, e.line)),
            _ => {
                self.issue(Some(e.line), format!("{} must be a comma-separated list of integers", qualified(section, key)));
                None
            }
        }
    }
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn lex(text: &str) -> Reader {
    let mut reader = Reader {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) => {
                    let name = name.trim().to_string();
                    if !KNOWN.iter().any(|(s, _)| *s == name) {
                        reader.issue(Some(line_no), format!("unknown section [{name}]"));
                    }
                    section = name;
                }
                None => reader.issue(Some(line_no), "unterminated section header"),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            reader.issue(Some(line_no), format!("expected `key = value`, got {line:?}"));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        let known = KNOWN
            .iter()
            .find(|(s, _)| *s == section)
            .is_some_and(|(_, keys)| keys.contains(&key.as_str()));
        if !known {
            if KNOWN.iter().any(|(s, _)| *s == section) {
                reader.issue(Some(line_no), format!("unknown key {:?}", qualified(&section, &key)));
            }
            continue;
        }
        let slot = (section.clone(), key.clone());
        if let Some(prev) = reader.entries.get(&slot) {
            let prev_line = prev.line;
            reader.issue(
                Some(line_no),
                format!("duplicate key {:?} (first set on line {prev_line})", qualified(&section, &key)),
            );
            continue;
        }
        reader.entries.insert(slot, Entry { value, line: line_no });
    }
    reader
}

fn check_length(r: &mut Reader, l: usize, line: usize, key: &str) {
    if !(2..=MAX_ENUM_LENGTH).contains(&l) {
        r.issue(Some(line), format!("{key}: length {l} outside 2..={MAX_ENUM_LENGTH}"));
    }
}

/// Parse and validate a configuration; all issues are returned together.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut r = lex(text);
    let mut cfg = RunConfig::default();

    if let Some((v, line)) = r.count("", "schema") {
        if v as u32 != CONFIG_SCHEMA_VERSION {
            r.issue(Some(line), format!("unsupported schema version {v}, expected {CONFIG_SCHEMA_VERSION}"));
        }
    }
    if let Some((v, _)) = r.parsed::<u64>("", "seed", "an unsigned 64-bit integer") {
        cfg.seed = v;
    }
    if let Some((v, line)) = r.count("", "threads") {
        if v == 0 {
            r.issue(Some(line), "threads must be >= 1");
        }
        cfg.threads = Some(v);
    }

    // chain
    let single = r.count("chain", "length");
    let many = r.counts("chain", "lengths");
    match (single, many) {
        (Some((_, line)), Some(_)) => r.issue(Some(line), "set either chain.length or chain.lengths, not both"),
        (Some((l, line)), None) => {
            check_length(&mut r, l, line, "chain.length");
            cfg.chain.lengths = vec![l];
        }
        (None, Some((ls, line))) => {
            for &l in &ls {
                check_length(&mut r, l, line, "chain.lengths");
            }
            cfg.chain.lengths = ls;
        }
        (None, None) => {}
    }
    if let Some((w, _)) = r.float("chain", "w") {
        cfg.chain.w = w;
    }
    cfg.chain.u = r.float("chain", "u").map(|v| v.0);
    cfg.chain.v = r.float("chain", "v").map(|v| v.0);
    if let Some((t, line)) = r.float("chain", "tol") {
        if !(t > 0.0) {
            r.issue(Some(line), "chain.tol must be > 0");
        }
        cfg.chain.tol = t;
    }

    // sampling
    if let Some((n, line)) = r.count("sampling", "samples") {
        if n < 4 {
            r.issue(Some(line), "samples must be >= 4");
        }
        cfg.sampling.samples = n;
    }
    if let Some((n, line)) = r.count("sampling", "runs") {
        if n < 1 {
            r.issue(Some(line), "runs must be >= 1");
        }
        cfg.sampling.runs = n;
    }
    if let Some((c, line)) = r.parsed::<u64>("sampling", "quadruple_cap", "a positive integer") {
        if c == 0 {
            r.issue(Some(line), "quadruple_cap must be > 0");
        }
        cfg.sampling.quadruple_cap = Some(c);
    }
    cfg.sampling.seed = cfg.seed;

    // rk
    cfg.rk.beta = r.float("rk", "beta").map(|v| v.0);
    if let Some((l, line)) = r.count("rk", "length") {
        check_length(&mut r, l, line, "rk.length");
        cfg.rk.length = Some(l);
    }

    // qlm
    let qlm_keys = ["w", "m", "v", "j", "theta"];
    let qvals: Vec<Option<(f64, usize)>> = qlm_keys.iter().map(|k| r.float("qlm", k)).collect();
    if qvals.iter().any(|v| v.is_some()) {
        let mut q = QlmParams::new(
            qvals[0].map_or(1.0, |v| v.0),
            qvals[1].map_or(0.0, |v| v.0),
            qvals[2].map_or(0.0, |v| v.0),
            qvals[3].map_or(0.0, |v| v.0),
        );
        if let Some((theta, line)) = qvals[4] {
            q.theta = theta;
            if (theta - std::f64::consts::PI).abs() > 1e-12 {
                r.issue(Some(line), "qlm.theta must be pi");
            }
        }
        if qvals[1].is_none() {
            r.issue(None, "qlm.m is required when a [qlm] section is given");
        }
        cfg.qlm = Some(q);
    }

    // sweep
    let u_scan = r.floats("sweep", "u_scan");
    let v_scan = r.floats("sweep", "v_scan");
    let sweep_u = r.float("sweep", "u");
    let sweep_v = r.float("sweep", "v");
    let sweep_lengths = r.counts("sweep", "lengths");
    let method = r.take("sweep", "method");
    let any_sweep = u_scan.is_some() || v_scan.is_some() || sweep_lengths.is_some() || method.is_some();
    if any_sweep {
        let scan = match (u_scan, v_scan) {
            (Some((_, lu)), Some((_, lv))) => {
                r.issue(Some(lv.max(lu)), "both sweep.u_scan and sweep.v_scan are set; the scan axis is ambiguous");
                None
            }
            (Some((s, line)), None) => Some((Axis::U, s, line)),
            (None, Some((s, line))) => Some((Axis::V, s, line)),
            (None, None) => {
                r.issue(None, "a [sweep] section needs u_scan or v_scan");
                None
            }
        };
        let estimator = match method.as_ref().map(|e| (e.value.as_str(), e.line)) {
            None | Some(("sampled", _)) => Some(Estimator::Sampled(cfg.sampling)),
            Some(("pauli", _)) => Some(Estimator::Exact(ExactMethod::Pauli)),
            Some(("quadruple", _)) => Some(Estimator::Exact(ExactMethod::Quadruple)),
            Some((other, line)) => {
                r.issue(Some(line), format!("sweep.method must be sampled, pauli or quadruple, got {other:?}"));
                None
            }
        };
        let lengths = match sweep_lengths {
            Some((ls, line)) => {
                for &l in &ls {
                    check_length(&mut r, l, line, "sweep.lengths");
                }
                ls
            }
            None => cfg.chain.lengths.clone(),
        };
        if lengths.is_empty() {
            r.issue(None, "sweep needs lengths (sweep.lengths or chain.lengths)");
        }
        if let (Some((axis, s, line)), Some(estimator)) = (scan, estimator) {
            if s.len() != 3 {
                r.issue(Some(line), "scan must be `start, stop, step`");
            } else {
                let fixed = match axis {
                    Axis::U => sweep_v.map(|v| v.0).or(cfg.chain.v),
                    Axis::V => sweep_u.map(|v| v.0).or(cfg.chain.u),
                };
                let grid = SweepGrid {
                    axis,
                    fixed: fixed.unwrap_or(f64::NAN),
                    start: s[0],
                    stop: s[1],
                    step: s[2],
                    lengths,
                    estimator,
                    w: cfg.chain.w,
                };
                if fixed.is_none() {
                    let other = if axis == Axis::U { "v" } else { "u" };
                    r.issue(Some(line), format!("scan needs a fixed {other} (sweep.{other} or chain.{other})"));
                } else if let Err(e) = grid.validate() {
                    r.issue(Some(line), e.to_string());
                }
                cfg.sweep = Some(grid);
            }
        }
    }

    if cfg.sampling.validate().is_err() && r.issues.is_empty() {
        r.issue(None, "invalid sampling plan");
    }
    if r.issues.is_empty() {
        Ok(cfg)
    } else {
        r.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(Error::Config(r.issues))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_sweep_fills_defaults() {
        let cfg = parse_config("[chain]\nlength = 12\nv = 1.5\n[sweep]\nu_scan = -3, -1, 0.5\n").unwrap();
        let g = cfg.sweep.unwrap();
        assert_eq!(g.axis, Axis::U);
        assert_eq!(g.fixed, 1.5);
        assert_eq!(g.lengths, vec![12]);
        assert_eq!(g.w, -1.0);
        assert_eq!(g.estimator, Estimator::Sampled(SamplingPlan::new(800, 50, 1)));
    }

    #[test]
    fn small_sample_count_is_rejected() {
        let v = issues("[sampling]\nsamples = 3\n");
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("samples must be >= 4"));
        assert_eq!(v[0].line, Some(2));
    }

    #[test]
    fn two_scan_axes_are_ambiguous() {
        let v = issues("[chain]\nlength = 8\nu = 0\nv = 1\n[sweep]\nu_scan = 0, 1, 0.1\nv_scan = 0, 1, 0.1\n");
        assert!(v.iter().any(|i| i.message.contains("ambiguous")));
    }

    #[test]
    fn all_errors_are_collected() {
        let v = issues("bogus = 1\n[chain]\nu = abc\nlength = 99\n[sampling]\nruns = x\n[nowhere]\n");
        let lines: Vec<Option<usize>> = v.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(1), Some(3), Some(4), Some(6), Some(7)]);
        assert!(v[0].message.contains("bogus"));
    }

    #[test]
    fn comments_and_qlm_section() {
        let cfg = parse_config("# dictionary\n[chain]\nlength = 4  # ring\nu = 0.5\nv = 1\n[qlm]\nw = 1\nm = -0.75\nv = 1\n").unwrap();
        let q = cfg.qlm.unwrap();
        assert_eq!((q.w, q.m, q.v, q.j), (1.0, -0.75, 1.0, 0.0));
    }
}
