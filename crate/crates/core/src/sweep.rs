//! Scans of the SRE-2 density across the phase diagram, finite-difference
//! derivatives, peak detection and power-law fits of the total SRE-2.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{ChainSolver, GroundState, SolverOptions};
use crate::sampling::{estimate_table, SamplingPlan};
use crate::sre::{sre2_pauli_sum, sre2_quadruple_sum};
use crate::{exec, CouplingParams, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactMethod {
    Pauli,
    Quadruple,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Exact(ExactMethod),
    Sampled(SamplingPlan),
}

/// One-dimensional cut: `axis` runs from `start` to `stop` in steps of
/// `step`, the other coupling stays at `fixed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis: Axis,
    pub fixed: f64,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub lengths: Vec<usize>,
    pub estimator: Estimator,
    pub w: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.fixed.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        if self.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points, at least 5 are needed",
                self.len()
            )));
        }
        if self.lengths.is_empty() {
            return Err(Error::InvalidParameter("no lengths to scan".into()));
        }
        if let Estimator::Sampled(plan) = &self.estimator {
            plan.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        if self.stop < self.start {
            return 0;
        }
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn params_at(&self, value: f64) -> CouplingParams {
        match self.axis {
            Axis::U => CouplingParams::with_w(self.w, value, self.fixed),
            Axis::V => CouplingParams::with_w(self.w, self.fixed, value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub length: usize,
    pub index: usize,
    pub value: f64,
    pub m2: Option<f64>,
    pub sigma: Option<f64>,
    pub energy: Option<f64>,
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub error: Option<String>,
}

impl PointResult {
    pub fn total(&self) -> Option<f64> {
        self.m2.map(|m| m * self.length as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub length: usize,
    pub points: Vec<PointResult>,
}

impl Curve {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// m2 per point, NaN where the point failed.
    pub fn m2(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.m2.unwrap_or(f64::NAN)).collect()
    }

    pub fn degenerate(&self) -> Vec<bool> {
        self.points.iter().map(|p| p.degenerate).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub curves: Vec<Curve>,
}

/// SRE-2 density of a ground state with the configured estimator.
pub fn evaluate(state: &GroundState, estimator: &Estimator) -> Result<(f64, Option<f64>)> {
    match estimator {
        Estimator::Exact(ExactMethod::Pauli) => Ok((sre2_pauli_sum(state)?.density, None)),
        Estimator::Exact(ExactMethod::Quadruple) => Ok((sre2_quadruple_sum(state)?.density, None)),
        Estimator::Sampled(plan) => {
            let e = estimate_table(state, plan)?;
            Ok((e.m2_mean, Some(e.sigma)))
        }
    }
}

fn solve_point(solver: &ChainSolver, grid: &SweepGrid, index: usize, value: f64) -> PointResult {
    let length = solver.basis().length();
    let mut out = PointResult {
        length,
        index,
        value,
        m2: None,
        sigma: None,
        energy: None,
        gap: None,
        degenerate: false,
        error: None,
    };
    let result = solver.ground_state(&grid.params_at(value)).and_then(|gs| {
        out.energy = Some(gs.energy);
        out.gap = Some(gs.gap);
        out.degenerate = gs.degenerate;
        evaluate(&gs, &grid.estimator)
    });
    match result {
        Ok((m2, sigma)) => {
            out.m2 = Some(m2);
            out.sigma = sigma;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Scan every length of `grid`. Points already in `done` (keyed by length
/// and index) are reused; `on_point` sees each newly computed point, in
/// completion order. A failing point is recorded and the scan goes on.
pub fn grid_scan_with<F>(
    grid: &SweepGrid,
    solver_opts: &SolverOptions,
    done: &HashMap<(usize, usize), PointResult>,
    on_point: F,
) -> Result<SweepResult>
where
    F: Fn(&PointResult) + Sync,
{
    grid.validate()?;
    let values = grid.values();
    let mut curves = Vec::with_capacity(grid.lengths.len());
    for &length in &grid.lengths {
        let solver = ChainSolver::new(length, solver_opts.clone())?;
        let points = exec::map_collect(values.len(), |i| {
            if let Some(p) = done.get(&(length, i)) {
                return p.clone();
            }
            let p = solve_point(&solver, grid, i, values[i]);
            on_point(&p);
            p
        });
        curves.push(Curve { length, points });
    }
    let all: Vec<&PointResult> = curves.iter().flat_map(|c| &c.points).collect();
    if all.iter().all(|p| p.error.is_some()) {
        let first = all.first().and_then(|p| p.error.clone()).unwrap_or_default();
        return Err(Error::AllPointsFailed(first));
    }
    Ok(SweepResult {
        grid: grid.clone(),
        curves,
    })
}

pub fn grid_scan(grid: &SweepGrid) -> Result<SweepResult> {
    grid_scan_with(grid, &SolverOptions::default(), &HashMap::new(), |_| {})
}

/// `|dm2/dx|` on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCurve {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    /// True where a one-sided difference was used.
    pub one_sided: Vec<bool>,
}

/// Central differences inside, one-sided at the ends. Missing values (NaN)
/// propagate.
pub fn derivative(coords: &[f64], m2: &[f64]) -> Result<DerivativeCurve> {
    let n = coords.len();
    if n != m2.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m2.len(),
        });
    }
    if n < 2 {
        return Err(Error::NonUniformGrid("fewer than two points".into()));
    }
    let h = coords[1] - coords[0];
    if !(h > 0.0) {
        return Err(Error::NonUniformGrid("coordinates must increase".into()));
    }
    for (i, w) in coords.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::NonUniformGrid(format!(
                "spacing {} at index {i} differs from {h}",
                w[1] - w[0]
            )));
        }
    }
    let mut values = vec![0.0; n];
    let mut one_sided = vec![false; n];
    for i in 0..n {
        values[i] = if i == 0 {
            one_sided[i] = true;
            (m2[1] - m2[0]) / h
        } else if i == n - 1 {
            one_sided[i] = true;
            (m2[n - 1] - m2[n - 2]) / h
        } else {
            (m2[i + 1] - m2[i - 1]) / (2.0 * h)
        }
        .abs();
    }
    Ok(DerivativeCurve {
        coords: coords.to_vec(),
        values,
        one_sided,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointEstimate {
    pub location: f64,
    pub uncertainty: f64,
    pub height: f64,
    pub prominence: f64,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakOptions {
    /// Minimum prominence as a fraction of the curve maximum.
    pub prominence_fraction: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            prominence_fraction: 0.2,
        }
    }
}

/// Interior local maxima whose topographic prominence clears the
/// threshold. `excluded` points (e.g. degenerate ground states) are never
/// reported.
pub fn find_peaks(curve: &DerivativeCurve, excluded: &[bool], opts: &PeakOptions) -> Vec<CriticalPointEstimate> {
    let v = &curve.values;
    let n = v.len();
    if n < 5 {
        return Vec::new();
    }
    let top = v.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
    let threshold = opts.prominence_fraction * top;
    let h = curve.coords[1] - curve.coords[0];
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if excluded.get(i).copied().unwrap_or(false) || !v[i].is_finite() {
            continue;
        }
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        // lowest point on each side before the curve climbs above v[i]
        let base = |range: &mut dyn Iterator<Item = usize>| {
            let mut low = v[i];
            for j in range {
                if v[j] > v[i] {
                    break;
                }
                if v[j].is_finite() {
                    low = low.min(v[j]);
                }
            }
            low
        };
        let left = base(&mut (0..i).rev());
        let right = base(&mut (i + 1..n));
        let prominence = v[i] - left.max(right);
        if prominence > threshold && prominence > 0.0 {
            peaks.push(CriticalPointEstimate {
                location: curve.coords[i],
                uncertainty: h / 2.0,
                height: v[i],
                prominence,
                index: i,
            });
        }
    }
    peaks
}

/// Degenerate points taint every derivative whose stencil touches them.
pub fn stencil_exclusions(degenerate: &[bool]) -> Vec<bool> {
    let n = degenerate.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            degenerate[lo..=hi].iter().any(|&d| d)
        })
        .collect()
}

/// `U_c = -V + 1/V` on the line through the Potts and tricritical points.
pub fn critical_line_reference(v: f64) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("critical line undefined at V = {v}")));
    }
    Ok(-v + 1.0 / v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    #[serde(rename = "A")]
    pub a: f64,
    pub alpha: f64,
    pub window: (f64, f64),
    pub residual_norm: f64,
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `ln M2 = ln A + alpha ln L`.
pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(l, m)) = points.iter().find(|p| !(p.1 > 0.0) || !(p.0 > 0.0)) {
        return Err(Error::InvalidParameter(format!("non-positive value at L = {l}: M2 = {m}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all lengths are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let ln_a = my - alpha * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (ln_a + alpha * x)).collect();
    let lmin = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let lmax = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerLawFit {
        a: ln_a.exp(),
        alpha,
        window: (lmin, lmax),
        residual_norm: residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        residuals,
    })
}

/// Fits over consecutive windows of `width` points, sorted by length.
pub fn sliding_fits(points: &[(f64, f64)], width: usize) -> Result<Vec<PowerLawFit>> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(width).map(powerlaw_fit).collect()
}
