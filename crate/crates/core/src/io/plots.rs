//! Plot-ready CSVs: m2 heatmaps and derivative maps built from parallel
//! cuts, the solvable-line comparison, and paired (m2, |dm2|) files per cut.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::output::fmt_f64;
use crate::sweep::{derivative, Axis, SweepResult};
use crate::{Error, Result};

/// One point of the solvable-line comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RkLinePoint {
    pub beta: f64,
    pub u: f64,
    pub v: f64,
    pub length: usize,
    pub m2_asymptotic: f64,
    pub m2_finite: Option<f64>,
    pub m2_sampled: Option<f64>,
    pub sigma: Option<f64>,
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let wrap = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::U => "U",
        Axis::V => "V",
    }
}

fn cut_label(r: &SweepResult, length: usize) -> String {
    let other = match r.grid.axis {
        Axis::U => "V",
        Axis::V => "U",
    };
    format!("{}scan_{other}{:+.4}_L{length}", axis_name(r.grid.axis), r.grid.fixed)
}

/// Paired files per cut and length: `cut_<label>_m2.csv` with m2 and
/// sigma, `cut_<label>_dm2.csv` with `|dm2|` and the one-sided flag.
pub fn emit_cut_files(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let x = axis_name(result.grid.axis).to_string();
    for curve in &result.curves {
        let label = cut_label(result, curve.length);
        let m2_path = dir.join(format!("cut_{label}_m2.csv"));
        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|p| vec![fmt_f64(p.value), opt(p.m2), opt(p.sigma), (p.degenerate as u8).to_string()])
            .collect();
        write_rows(&m2_path, &[x.clone(), "m2".into(), "sigma".into(), "degenerate".into()], &rows)?;
        written.push(m2_path);

        let d_path = dir.join(format!("cut_{label}_dm2.csv"));
        let d = derivative(&curve.values(), &curve.m2())?;
        let rows: Vec<Vec<String>> = d
            .coords
            .iter()
            .zip(&d.values)
            .zip(&d.one_sided)
            .map(|((c, v), s)| vec![fmt_f64(*c), fmt_f64(*v), (*s as u8).to_string()])
            .collect();
        write_rows(&d_path, &[x.clone(), "abs_dm2".into(), "one_sided".into()], &rows)?;
        written.push(d_path);
    }
    Ok(written)
}

/// Stack cuts that share an axis and its values into matrices, one row per
/// fixed coupling: `heatmap_m2_L<L>.csv` holds m2 and
/// `heatmap_dm2_L<L>.csv` holds `|dm2|`. The first row lists the axis values.
pub fn emit_heatmaps(results: &[SweepResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(first) = results.first() else {
        return Ok(Vec::new());
    };
    let axis = first.grid.axis;
    let coords = first.grid.values();
    for r in results {
        let same = r.grid.axis == axis
            && r.grid.values().len() == coords.len()
            && r.grid.values().iter().zip(&coords).all(|(a, b)| (a - b).abs() < 1e-12);
        if !same {
            return Err(Error::InvalidParameter("heatmap cuts must share the scan axis and grid".into()));
        }
    }
    let lengths: BTreeSet<usize> = results.iter().flat_map(|r| r.curves.iter().map(|c| c.length)).collect();
    let fixed_name = match axis {
        Axis::U => "V\\U",
        Axis::V => "U\\V",
    };
    let mut header = vec![fixed_name.to_string()];
    header.extend(coords.iter().map(|c| fmt_f64(*c)));
    let mut order: Vec<&SweepResult> = results.iter().collect();
    order.sort_by(|a, b| a.grid.fixed.total_cmp(&b.grid.fixed));

    let mut written = Vec::new();
    for l in lengths {
        let mut m2_rows = Vec::new();
        let mut d_rows = Vec::new();
        for r in &order {
            let Some(curve) = r.curves.iter().find(|c| c.length == l) else {
                continue;
            };
            let m2 = curve.m2();
            let d = derivative(&curve.values(), &m2)?;
            let mut row = vec![fmt_f64(r.grid.fixed)];
            row.extend(m2.iter().map(|v| fmt_f64(*v)));
            m2_rows.push(row);
            let mut row = vec![fmt_f64(r.grid.fixed)];
            row.extend(d.values.iter().map(|v| fmt_f64(*v)));
            d_rows.push(row);
        }
        let p = dir.join(format!("heatmap_m2_L{l}.csv"));
        write_rows(&p, &header, &m2_rows)?;
        written.push(p);
        let p = dir.join(format!("heatmap_dm2_L{l}.csv"));
        write_rows(&p, &header, &d_rows)?;
        written.push(p);
    }
    Ok(written)
}

/// Solvable-line comparison: analytic curve plus sampled points with error
/// bars.
pub fn emit_rk_line(points: &[RkLinePoint], dir: &Path) -> Result<PathBuf> {
    let header: Vec<String> = ["beta", "U", "V", "L", "m2_asymptotic", "m2_finite", "m2_sampled", "sigma"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.beta),
                fmt_f64(p.u),
                fmt_f64(p.v),
                p.length.to_string(),
                fmt_f64(p.m2_asymptotic),
                opt(p.m2_finite),
                opt(p.m2_sampled),
                opt(p.sigma),
            ]
        })
        .collect();
    let path = dir.join("rk_line.csv");
    write_rows(&path, &header, &rows)?;
    Ok(path)
}
