//! The dual constrained chain
//!
//! `H = w sum_j X_j + U sum_j n_j + V sum_j n_j n_{j+2}`
//!
//! restricted to blockade-respecting configurations. `X_j` flips site `j`
//! and is projected: a particle may only be created when both neighbours
//! are empty. The `V` sum runs over every `j = 1..L` with periodic wrap, so
//! at `L = 4` the Neel pair `n_1 n_3` is counted twice.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{blockade_ok, representative, rotate, ConstrainedBasis, SectorBasis};
use crate::{exec, Error, Result};

/// Default dense-matrix cap for oracle construction.
pub const DEFAULT_DENSE_CAP: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Flip amplitude.
    pub w: f64,
    /// Chemical potential of a dual particle.
    pub u: f64,
    /// Next-nearest-neighbour interaction.
    pub v: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams {
            w: -1.0,
            u: 0.0,
            v: 0.0,
        }
    }
}

impl CouplingParams {
    /// Couplings with the conventional `w = -1`.
    pub fn new(u: f64, v: f64) -> Self {
        CouplingParams { w: -1.0, u, v }
    }

    pub fn with_w(w: f64, u: f64, v: f64) -> Self {
        CouplingParams { w, u, v }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w.is_finite() && self.u.is_finite() && self.v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "couplings must be finite, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn mass(&self) -> QlmMass {
        mass_of(self)
    }

    /// Diagonal energy of one configuration.
    #[inline]
    pub fn diagonal(&self, bits: u64, length: usize) -> f64 {
        let n = bits.count_ones() as f64;
        let nnn = (bits & rotate(bits, 2, length)).count_ones() as f64;
        self.u * n + self.v * nnn
    }
}

/// Staggered fermion mass of the gauge theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QlmMass {
    pub m: f64,
}

/// `m = -(U + V)/2`.
pub fn mass_of(params: &CouplingParams) -> QlmMass {
    QlmMass {
        m: -(params.u + params.v) / 2.0,
    }
}

/// Configurations reachable by one projected flip, with their flipped site.
#[inline]
pub(crate) fn for_each_flip(bits: u64, length: usize, mut f: impl FnMut(u64)) {
    for j in 0..length {
        let flipped = bits ^ (1 << j);
        if bits >> j & 1 == 1 || blockade_ok(flipped, length) {
            f(flipped);
        }
    }
}

/// Matrix-free `H v` over the full constrained basis.
pub fn apply_h(params: &CouplingParams, basis: &ConstrainedBasis, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: v.len(),
        });
    }
    let length = basis.length();
    let configs = basis.configs();
    let mut out = vec![0.0; v.len()];
    exec::fill(&mut out, |i| {
        let bits = configs[i];
        let mut acc = params.diagonal(bits, length) * v[i];
        let mut hop = 0.0;
        for_each_flip(bits, length, |t| {
            // flips of valid configs stay inside the basis
            hop += v[basis.index_of(t).expect("flip left the basis")];
        });
        acc += params.w * hop;
        acc
    });
    Ok(out)
}

/// Dense matrix over the full basis; oracle use only.
pub fn build_dense(
    params: &CouplingParams,
    basis: &ConstrainedBasis,
    cap: usize,
) -> Result<DMatrix<f64>> {
    let n = basis.len();
    if n > cap {
        return Err(Error::SizeCap {
            what: "dense Hamiltonian",
            size: n,
            cap,
        });
    }
    let length = basis.length();
    let mut h = DMatrix::zeros(n, n);
    for (i, &bits) in basis.configs().iter().enumerate() {
        h[(i, i)] = params.diagonal(bits, length);
        for_each_flip(bits, length, |t| {
            let j = basis.index_of(t).expect("flip left the basis");
            h[(j, i)] += params.w;
        });
    }
    Ok(h)
}

/// `T v`, with `(T v)[translate(s, 1)] = v[s]`.
pub fn apply_translation(basis: &ConstrainedBasis, v: &[f64]) -> Vec<f64> {
    let length = basis.length();
    let mut out = vec![0.0; v.len()];
    for (i, &bits) in basis.configs().iter().enumerate() {
        let j = basis.index_of(rotate(bits, 1, length)).expect("translation left the basis");
        out[j] = v[i];
    }
    out
}

/// `exp(2 pi i q / L)` with the quarter-turn values made exact.
fn phase(q: usize, length: usize) -> Complex64 {
    let q = q % length;
    if q == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * q == length {
        Complex64::new(-1.0, 0.0)
    } else if 4 * q == length {
        Complex64::new(0.0, 1.0)
    } else if 4 * q == 3 * length {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * q as f64 / length as f64)
    }
}

/// Coupling-independent structure of one momentum block: diagonal counts
/// and the unit-amplitude flip matrix in CSR form.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    sector: SectorBasis,
    particles: Vec<f64>,
    nnn_pairs: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    hops: Vec<Complex64>,
}

impl SectorBlock {
    pub fn new(sector: SectorBasis) -> Self {
        let length = sector.length();
        let k = sector.momentum();
        let reps = sector.representatives();
        let periods = sector.periods();

        // column r of the flip matrix, conjugated, is row r (Hermitian)
        let rows: Vec<Vec<(u32, Complex64)>> = exec::map_collect(reps.len(), |r| {
            let mut col: Vec<(u32, Complex64)> = Vec::new();
            for_each_flip(reps[r], length, |t| {
                let (rep, shift, period) = representative(t, length);
                if !(k * period).is_multiple_of(length) {
                    return;
                }
                let s = sector.index_of(rep).expect("representative outside sector");
                let amp = phase(k * shift, length)
                    * (periods[r] as f64 / period as f64).sqrt();
                col.push((s as u32, amp.conj()));
            });
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(col.len());
            for (c, a) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += a,
                    _ => merged.push((c, a)),
                }
            }
            merged
        });

        let mut row_ptr = Vec::with_capacity(reps.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut hops = Vec::new();
        for row in rows {
            for (c, a) in row {
                cols.push(c);
                hops.push(a);
            }
            row_ptr.push(cols.len());
        }
        let particles = reps.iter().map(|&b| b.count_ones() as f64).collect();
        let nnn_pairs = reps
            .iter()
            .map(|&b| (b & rotate(b, 2, length)).count_ones() as f64)
            .collect();
        SectorBlock {
            sector,
            particles,
            nnn_pairs,
            row_ptr,
            cols,
            hops,
        }
    }

    pub fn sector(&self) -> &SectorBasis {
        &self.sector
    }

    pub fn dim(&self) -> usize {
        self.sector.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.cols.len()
    }
}

/// A momentum block bound to specific couplings.
#[derive(Clone, Debug)]
pub struct SectorHamiltonian {
    block: Arc<SectorBlock>,
    params: CouplingParams,
}

/// Hermitian block of `H` in momentum sector `sector`.
pub fn momentum_block(params: &CouplingParams, sector: &SectorBasis) -> SectorHamiltonian {
    SectorHamiltonian {
        block: Arc::new(SectorBlock::new(sector.clone())),
        params: *params,
    }
}

impl SectorHamiltonian {
    pub fn from_block(block: Arc<SectorBlock>, params: CouplingParams) -> Self {
        SectorHamiltonian { block, params }
    }

    pub fn block(&self) -> &SectorBlock {
        &self.block
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.block.dim()
    }

    pub fn is_real(&self) -> bool {
        self.block.sector.is_real()
    }

    #[inline]
    fn diag(&self, i: usize) -> f64 {
        self.params.u * self.block.particles[i] + self.params.v * self.block.nnn_pairs[i]
    }

    /// `y = H x` for a real sector (k = 0 or k = L/2).
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        debug_assert!(self.is_real());
        let b = &*self.block;
        let w = self.params.w;
        exec::fill(y, |i| {
            let mut hop = 0.0;
            for e in b.row_ptr[i]..b.row_ptr[i + 1] {
                hop += b.hops[e].re * x[b.cols[e] as usize];
            }
            self.diag(i) * x[i] + w * hop
        });
    }

    /// `y = H x` in any sector.
    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        let b = &*self.block;
        let w = self.params.w;
        exec::fill(y, |i| {
            let mut hop = Complex64::new(0.0, 0.0);
            for e in b.row_ptr[i]..b.row_ptr[i + 1] {
                hop += b.hops[e] * x[b.cols[e] as usize];
            }
            x[i] * self.diag(i) + hop * w
        });
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let b = &*self.block;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diag(i), 0.0);
            for e in b.row_ptr[i]..b.row_ptr[i + 1] {
                m[(i, b.cols[e] as usize)] += b.hops[e] * self.params.w;
            }
        }
        m
    }
}
