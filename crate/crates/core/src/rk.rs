//! Closed forms on the frustration-free line `3V^2 + UV = 1`.
//!
//! Ground states there are classical Boltzmann weights of a hard-core
//! lattice gas: `c_s = exp(beta * N(s)) / sqrt(Z(2 beta))`, with `N(s)` the
//! particle number and `Z` the partition function below.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{blockade_ok, dim, ConstrainedBasis, MAX_WORD_LENGTH};
use crate::sampling::SampledState;
use crate::sre::RealState;
use crate::{CouplingParams, Error, Result};

/// Couplings at `beta`: `U = e^-beta - 3 e^beta`, `V = e^beta`, `w = -1`.
pub fn params_of_beta(beta: f64) -> CouplingParams {
    let v = beta.exp();
    CouplingParams::new((-beta).exp() - 3.0 * v, v)
}

/// `3V^2 + UV - 1`; zero on the solvable line.
pub fn line_residual(u: f64, v: f64) -> f64 {
    3.0 * v * v + u * v - 1.0
}

/// Inverse of [`params_of_beta`] for `V > 0`.
pub fn beta_of_v(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidParameter(format!("V = {v} is not on the solvable line")));
    }
    Ok(v.ln())
}

fn check_ring(length: usize) -> Result<()> {
    if length < 2 {
        return Err(Error::InvalidSize {
            length,
            reason: "rings need at least 2 sites".into(),
        });
    }
    Ok(())
}

/// `ln trace(M^n)` by repeated squaring with a running log scale, so long
/// rings neither overflow nor underflow. The trace must be positive.
pub fn log_trace_power(m: &DMatrix<f64>, n: usize) -> f64 {
    fn rescale(a: DMatrix<f64>, log: f64) -> (DMatrix<f64>, f64) {
        let s = a.amax();
        if s > 0.0 {
            (a / s, log + s.ln())
        } else {
            (a, log)
        }
    }
    let dim = m.nrows();
    let (mut base, mut base_log) = rescale(m.clone(), 0.0);
    let (mut acc, mut acc_log) = (DMatrix::<f64>::identity(dim, dim), 0.0);
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            (acc, acc_log) = rescale(&acc * &base, acc_log + base_log);
        }
        e >>= 1;
        if e > 0 {
            (base, base_log) = rescale(&base * &base, 2.0 * base_log);
        }
    }
    let tr = acc.trace();
    assert!(tr > 0.0, "transfer-matrix trace is not positive");
    tr.ln() + acc_log
}

fn pair_matrix(beta: f64) -> DMatrix<f64> {
    let h = (beta / 2.0).exp();
    DMatrix::from_row_slice(2, 2, &[1.0, h, h, 0.0])
}

/// `ln Z(beta, L)`, `Z = sum over valid rings of exp(beta * N)`.
pub fn log_partition_function(beta: f64, length: usize) -> Result<f64> {
    check_ring(length)?;
    Ok(log_trace_power(&pair_matrix(beta), length))
}

/// `Z(beta, L) = trace T^L` with `T(s, s') = exp(beta (s + s') / 2) [s s' = 0]`.
pub fn partition_function(beta: f64, length: usize) -> Result<f64> {
    Ok(log_partition_function(beta, length)?.exp())
}

/// Ground state on the line as an explicit vector over the constrained basis.
pub fn rk_state(beta: f64, length: usize) -> Result<RealState> {
    let basis = ConstrainedBasis::new(length)?;
    let half_log_z = 0.5 * log_partition_function(2.0 * beta, length)?;
    let amps: Vec<f64> = basis
        .configs()
        .iter()
        .map(|c| (beta * c.count_ones() as f64 - half_log_z).exp())
        .collect();
    RealState::on_basis(&basis, &amps)
}

/// Largest real root of `x^3 - (1+a) x^2 - (1+13a) x + 1` with `a = e^{-4 beta}`.
pub fn cubic_lambda(beta: f64) -> Result<f64> {
    let a = (-4.0 * beta).exp();
    let f = |x: f64| ((x - (1.0 + a)) * x - (1.0 + 13.0 * a)) * x + 1.0;
    let (mut lo, mut hi) = (1.0, 2.0 + 14.0 * a);
    if !(f(lo) < 0.0) {
        // a underflowed: the cubic is (x-1)^2 (x+1)
        return Ok(1.0);
    }
    if !(f(hi) > 0.0) {
        return Err(Error::InvalidParameter(format!("cubic root not bracketed at beta = {beta}")));
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = f(root).abs();
    let scale = root.powi(3).max(1.0);
    // the slope sets how small the residual of a correctly rounded root can be
    let slope = ((3.0 * root - 2.0 * (1.0 + a)) * root - (1.0 + 13.0 * a)).abs();
    if residual > 1e-12 * scale + 4.0 * f64::EPSILON * root * slope {
        return Err(Error::InvalidParameter(format!(
            "cubic residual {residual:e} at beta = {beta}"
        )));
    }
    Ok(root)
}

/// Large-L SRE-2 density on the line.
pub fn m2_asymptotic(beta: f64) -> Result<f64> {
    let lambda = cubic_lambda(beta)?;
    let d = (-beta).exp() + ((-2.0 * beta).exp() + 4.0).sqrt();
    Ok(-(16.0 * lambda).ln() + 4.0 * d.ln())
}

/// The eight strings entering the quadruple identity, as one byte per
/// replica column `(a, b, c, d)`.
fn replica_strings(col: usize) -> [u8; 8] {
    let bit = |i: usize| ((col >> i) & 1) as u8;
    let (a, b, c, d) = (bit(0), bit(1), bit(2), bit(3));
    [a, b, c, d, a ^ b ^ c, a ^ b ^ d, a ^ c ^ d, b ^ c ^ d]
}

/// 16-state transfer matrix for `exp(-M2)` of the line's ground state:
/// neighbouring columns are compatible when none of the eight strings has
/// two adjacent particles; each column's weight `exp(beta * occupied)` is
/// split evenly over its two bonds.
pub fn replica_transfer_matrix(beta: f64) -> DMatrix<f64> {
    let strings: Vec<[u8; 8]> = (0..16).map(replica_strings).collect();
    let occupied: Vec<f64> = strings
        .iter()
        .map(|s| s.iter().map(|&b| b as f64).sum())
        .collect();
    DMatrix::from_fn(16, 16, |i, j| {
        let blocked = strings[i].iter().zip(&strings[j]).any(|(&x, &y)| x & y == 1);
        if blocked {
            0.0
        } else {
            (0.5 * beta * (occupied[i] + occupied[j])).exp()
        }
    })
}

/// Exact SRE-2 density of the line's ground state on `length` sites.
pub fn m2_finite(beta: f64, length: usize) -> Result<f64> {
    check_ring(length)?;
    let log_num = log_trace_power(&replica_transfer_matrix(beta), length);
    let log_z = log_partition_function(2.0 * beta, length)?;
    Ok(-(log_num - 4.0 * log_z) / length as f64)
}

/// Zero-energy eigenstate `chi^{-1/2} sum_f (-1)^{|f|} |f>|f>` on
/// `2 * half` sites, `f` running over valid rings of `half` sites.
pub fn rainbow_state(half: usize) -> Result<RealState> {
    if 2 * half > MAX_WORD_LENGTH {
        return Err(Error::InvalidSize {
            length: 2 * half,
            reason: "rainbow state does not fit in one word".into(),
        });
    }
    let basis = ConstrainedBasis::new(half)?;
    let chi = dim(half)? as f64;
    let norm = chi.sqrt().recip();
    let (configs, amps) = basis
        .configs()
        .iter()
        .map(|&f| {
            let sign = if f.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            (f | (f << half), sign * norm)
        })
        .unzip();
    RealState::new(2 * half, configs, amps)
}

/// Summary of one point on the line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RkPoint {
    pub beta: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub lambda: f64,
    pub m2_asymptotic: f64,
}

impl RkPoint {
    pub fn new(beta: f64) -> Result<Self> {
        let p = params_of_beta(beta);
        Ok(RkPoint {
            beta,
            u: p.u,
            v: p.v,
            lambda: cubic_lambda(beta)?,
            m2_asymptotic: m2_asymptotic(beta)?,
        })
    }
}

/// Ground state on the line in implicit form: amplitudes on demand and
/// exact Born sampling through the ring transfer matrix, at any length a
/// word can hold.
#[derive(Clone, Debug)]
pub struct RkState {
    beta: f64,
    length: usize,
    /// `powers[k]` is `T^k` scaled to unit max entry, `T` carrying weight
    /// `exp(2 beta)` per particle.
    powers: Vec<Matrix2<f64>>,
    /// Normalized amplitude by particle number.
    weights: Vec<f64>,
}

impl RkState {
    pub fn new(beta: f64, length: usize) -> Result<Self> {
        check_ring(length)?;
        if length > MAX_WORD_LENGTH || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "RK state needs finite beta and length <= {MAX_WORD_LENGTH}"
            )));
        }
        let h = beta.exp();
        let t = Matrix2::new(1.0, h, h, 0.0);
        let mut powers = Vec::with_capacity(length + 1);
        let mut p = Matrix2::identity();
        powers.push(p);
        for _ in 0..length {
            p *= t;
            p /= p.amax();
            powers.push(p);
        }
        let half_log_z = 0.5 * log_partition_function(2.0 * beta, length)?;
        let weights = (0..=length).map(|n| (beta * n as f64 - half_log_z).exp()).collect();
        Ok(RkState {
            beta,
            length,
            powers,
            weights,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng) -> u64 {
        let l = self.length;
        let full = &self.powers[l];
        let first = pick(rng, full[(0, 0)], full[(1, 1)]);
        let mut bits = first as u64;
        let mut prev = first;
        let h = self.beta.exp();
        for j in 1..l {
            let rest = &self.powers[l - j];
            let w0 = rest[(0, first)];
            let w1 = if prev == 1 { 0.0 } else { h * rest[(1, first)] };
            let s = pick(rng, w0, w1);
            bits |= (s as u64) << j;
            prev = s;
        }
        bits
    }
}

fn pick(rng: &mut ChaCha8Rng, w0: f64, w1: f64) -> usize {
    if w1 <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    if u * (w0 + w1) < w0 {
        0
    } else {
        1
    }
}

impl SampledState for RkState {
    fn length(&self) -> usize {
        self.length
    }

    fn amplitude(&self, bits: u64) -> f64 {
        if blockade_ok(bits, self.length) {
            self.weights[bits.count_ones() as usize]
        } else {
            0.0
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.draw_one(rng)).collect()
    }
}
