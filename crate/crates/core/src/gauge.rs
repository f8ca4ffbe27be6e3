//! Full U(1) quantum link model with staggered fermions and spin-1/2 links,
//! for checking Gauss's law and the duality to the constrained chain at
//! small sizes.
//!
//! Qubits alternate fermion and link: site `j` (1-based) sits at qubit
//! `2(j-1)`, link `(j, j+1)` at qubit `2(j-1)+1`, the last link closing
//! the ring. A set link bit means `S^z = +1/2`. Fermion signs follow a
//! Jordan-Wigner string over fermion qubits only.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::blockade_ok;
use crate::eigensolver::full_spectrum;
use crate::{CouplingParams, Error, Result};

/// Largest ring the harness builds (`4^L` states).
pub const MAX_GAUGE_LENGTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QlmParams {
    pub w: f64,
    pub m: f64,
    /// Coupling of `S^z_{j-1,j} S^z_{j+1,j+2}`.
    pub v: f64,
    pub j: f64,
    pub theta: f64,
}

impl QlmParams {
    pub fn new(w: f64, m: f64, v: f64, j: f64) -> Self {
        QlmParams { w, m, v, j, theta: PI }
    }

    /// Default dictionary onto the chain: `w -> -w`, `m = -(U+V)/2`,
    /// four-Fermi coupling `V`, no electric term.
    pub fn from_dual(dual: &CouplingParams) -> Self {
        QlmParams::new(-dual.w, -(dual.u + dual.v) / 2.0, dual.v, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.theta - PI).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "theta must be pi, got {}",
                self.theta
            )));
        }
        if ![self.w, self.m, self.v, self.j].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("QLM couplings must be finite".into()));
        }
        Ok(())
    }
}

fn check_length(length: usize) -> Result<()> {
    if length < 2 || length % 2 == 1 || length > MAX_GAUGE_LENGTH {
        return Err(Error::InvalidSize {
            length,
            reason: format!("gauge harness needs an even length in 2..={MAX_GAUGE_LENGTH}"),
        });
    }
    Ok(())
}

#[inline]
fn fermion_qubit(site: usize) -> usize {
    2 * (site - 1)
}

/// Qubit of link `(site, site+1)`; `site` in `1..=L`.
#[inline]
fn link_qubit(site: usize) -> usize {
    2 * (site - 1) + 1
}

#[inline]
fn bit(state: usize, q: usize) -> bool {
    (state >> q) & 1 == 1
}

#[inline]
fn sz(state: usize, link_site: usize) -> f64 {
    if bit(state, link_qubit(link_site)) {
        0.5
    } else {
        -0.5
    }
}

/// Sites are 1-based and periodic.
#[inline]
fn wrap(site: isize, length: usize) -> usize {
    (site - 1).rem_euclid(length as isize) as usize + 1
}

/// Real symmetric sparse matrix in CSR form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    fn from_triplets(dim: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for e in t {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        let mut row_ptr = vec![0; dim + 1];
        for e in &merged {
            row_ptr[e.0 + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols: merged.iter().map(|e| e.1).collect(),
            vals: merged.iter().map(|e| e.2).collect(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `max |H - H^T|` over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let map: HashMap<(usize, usize), f64> = self.entries().map(|(r, c, v)| ((r, c), v)).collect();
        map.iter()
            .map(|(&(r, c), &v)| (v - map.get(&(c, r)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Dense restriction to the listed basis states.
    pub fn restrict(&self, states: &[usize]) -> DMatrix<f64> {
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut m = DMatrix::zeros(states.len(), states.len());
        for (i, &s) in states.iter().enumerate() {
            for k in self.row_ptr[s]..self.row_ptr[s + 1] {
                if let Some(&j) = pos.get(&self.cols[k]) {
                    m[(i, j)] += self.vals[k];
                }
            }
        }
        m
    }
}

/// Sign from moving a fermion operator at `site` past the occupied
/// fermion qubits of lower sites.
fn jw_sign(state: usize, site: usize) -> f64 {
    let below = (1..site).filter(|&i| bit(state, fermion_qubit(i))).count();
    if below % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Electric term alone, `sum_j (S^z_{j,j+1} - theta/pi)^2`, diagonal.
fn electric(state: usize, length: usize, theta: f64) -> f64 {
    (1..=length).map(|j| (sz(state, j) - theta / PI).powi(2)).sum()
}

/// The QLM Hamiltonian on `4^L` states.
pub fn build_qlm(params: &QlmParams, length: usize) -> Result<SparseMatrix> {
    check_length(length)?;
    params.validate()?;
    let dim = 1usize << (2 * length);
    let mut t = Vec::with_capacity(dim * (length + 1));
    for s in 0..dim {
        let mut diag = 0.0;
        for j in 1..=length {
            if bit(s, fermion_qubit(j)) {
                diag += params.m * if j % 2 == 0 { 1.0 } else { -1.0 };
            }
            let left = wrap(j as isize - 1, length);
            let right = wrap(j as isize + 1, length);
            diag += params.v * sz(s, left) * sz(s, right);
        }
        diag += params.j * electric(s, length, params.theta);
        t.push((s, s, diag));

        // Phi^dag_j S^+_{j,j+1} Phi_{j+1}; the conjugate is added alongside
        for j in 1..=length {
            let next = wrap(j as isize + 1, length);
            let (fj, fn_, lk) = (fermion_qubit(j), fermion_qubit(next), link_qubit(j));
            if bit(s, fj) || !bit(s, fn_) || bit(s, lk) {
                continue;
            }
            let mid = s ^ (1 << fn_);
            let sign = jw_sign(s, next) * jw_sign(mid, j);
            let target = mid ^ (1 << fj) ^ (1 << lk);
            let amp = -params.w * sign;
            t.push((target, s, amp));
            t.push((s, target, amp));
        }
    }
    Ok(SparseMatrix::from_triplets(dim, t))
}

/// Gauss-law generators as integer diagonals, `gauss[j-1][state]`.
pub fn gauss_ops(length: usize) -> Result<Vec<Vec<i8>>> {
    check_length(length)?;
    let dim = 1usize << (2 * length);
    Ok((1..=length)
        .map(|j| {
            let prev = wrap(j as isize - 1, length);
            let offset = if j % 2 == 1 { 1 } else { 0 };
            (0..dim)
                .map(|s| {
                    let e = |site| if bit(s, link_qubit(site)) { 1i8 } else { 0 };
                    let n = bit(s, fermion_qubit(j)) as i8;
                    // E difference in units where +1/2 -> 1 and -1/2 -> 0
                    e(j) - e(prev) - n + offset
                })
                .collect()
        })
        .collect())
}

/// Frobenius norm of `[H, G]` for a diagonal `G`.
pub fn commutator_norm(h: &SparseMatrix, g: &[i8]) -> f64 {
    h.entries()
        .map(|(r, c, v)| (v * (g[c] - g[r]) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Product states annihilated by every generator; since the generators are
/// diagonal these span the joint kernel.
pub fn physical_sector(length: usize) -> Result<Vec<usize>> {
    let gauss = gauss_ops(length)?;
    let dim = 1usize << (2 * length);
    let states: Vec<usize> = (0..dim).filter(|&s| gauss.iter().all(|g| g[s] == 0)).collect();
    if states.is_empty() {
        return Err(Error::EmptyGaugeSector);
    }
    Ok(states)
}

/// Chain configuration of a gauge-invariant state: dual site `j` is
/// occupied when link `(j, j+1)` points along the staggered background
/// (up for odd `j`, down for even `j`).
pub fn dual_config(state: usize, length: usize) -> u64 {
    (1..=length)
        .filter(|&j| bit(state, link_qubit(j)) == (j % 2 == 1))
        .fold(0u64, |acc, j| acc | 1 << (j - 1))
}

/// Frobenius norm of the matrix elements leaving the listed states.
pub fn sector_leakage(h: &SparseMatrix, states: &[usize]) -> f64 {
    let mut inside = vec![false; h.dim];
    states.iter().for_each(|&s| inside[s] = true);
    h.entries()
        .filter(|&(r, c, _)| inside[r] != inside[c])
        .map(|(_, _, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub length: usize,
    pub qlm: QlmParams,
    pub dual: CouplingParams,
    pub sector_dim: usize,
    pub dual_dim: usize,
    /// Every gauge-invariant state maps to a distinct valid chain config.
    pub dual_map_bijective: bool,
    /// `m = -(U+V)/2` holds for the supplied pair.
    pub mass_relation_holds: bool,
    pub hermiticity_error: f64,
    pub commutator_norms: Vec<f64>,
    pub sector_leakage: f64,
    /// Constant added to the chain spectrum before comparison.
    pub shift: f64,
    pub max_difference: f64,
}

/// Compare the gauge-invariant QLM spectrum with the chain spectrum.
pub fn duality_check(qlm: &QlmParams, dual: &CouplingParams, length: usize) -> Result<DualityReport> {
    dual.validate()?;
    let h = build_qlm(qlm, length)?;
    let gauss = gauss_ops(length)?;
    let sector = physical_sector(length)?;
    let mut mapped: Vec<u64> = sector.iter().map(|&s| dual_config(s, length)).collect();
    mapped.sort_unstable();
    let valid = mapped.iter().all(|&c| blockade_ok(c, length));
    mapped.dedup();
    let bijective = valid && mapped.len() == sector.len();

    let projected = h.restrict(&sector);
    let mut gauge_spec: Vec<f64> = SymmetricEigen::new(projected).eigenvalues.iter().copied().collect();
    gauge_spec.sort_by(f64::total_cmp);
    let dual_spec = full_spectrum(dual, length)?;

    let (shift, max_difference) = if gauge_spec.len() == dual_spec.len() {
        let diffs: Vec<f64> = gauge_spec.iter().zip(&dual_spec).map(|(a, b)| a - b).collect();
        let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ((lo + hi) / 2.0, (hi - lo) / 2.0)
    } else {
        (f64::NAN, f64::INFINITY)
    };

    Ok(DualityReport {
        length,
        qlm: *qlm,
        dual: *dual,
        sector_dim: sector.len(),
        dual_dim: dual_spec.len(),
        dual_map_bijective: bijective,
        mass_relation_holds: (qlm.m + (dual.u + dual.v) / 2.0).abs() <= 1e-12 * (1.0 + qlm.m.abs()),
        hermiticity_error: h.hermiticity_error(),
        commutator_norms: gauss.iter().map(|g| commutator_norm(&h, g)).collect(),
        sector_leakage: sector_leakage(&h, &sector),
        shift,
        max_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let h = build_qlm(&QlmParams::new(0.0, 0.0, 0.0, 0.0), 4).unwrap();
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn odd_or_large_lengths_are_rejected() {
        let p = QlmParams::new(1.0, 0.0, 0.0, 0.0);
        assert!(build_qlm(&p, 5).is_err());
        assert!(build_qlm(&p, 10).is_err());
        assert!(gauss_ops(3).is_err());
    }

    #[test]
    fn sector_dims_are_lucas() {
        assert_eq!(physical_sector(4).unwrap().len(), 7);
        assert_eq!(physical_sector(6).unwrap().len(), 18);
    }

    #[test]
    fn electric_term_is_linear_in_sz() {
        // (S^z - 1)^2 = 2 (1/2 - S^z) + 1/4 on spin 1/2
        let h = build_qlm(&QlmParams::new(0.0, 0.0, 0.0, 1.0), 4).unwrap();
        for (r, c, v) in h.entries() {
            assert_eq!(r, c);
            let linear: f64 = (1..=4).map(|j| 2.0 * (0.5 - sz(r, j))).sum();
            assert!((v - linear - 4.0 * 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn wrong_mass_is_detected() {
        let dual = CouplingParams::new(0.7, 1.3);
        let mut qlm = QlmParams::from_dual(&dual);
        qlm.m += 0.5;
        let r = duality_check(&qlm, &dual, 4).unwrap();
        assert!(!r.mass_relation_holds);
        assert!(r.max_difference > 1e-3);
    }
}
