//! Ground states of the dual chain via Lanczos in momentum sectors.

use std::sync::{Arc, OnceLock};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::basis::{representative, ConstrainedBasis};
use crate::hamiltonian::{build_dense, CouplingParams, SectorBlock, SectorHamiltonian, DEFAULT_DENSE_CAP};
use crate::lanczos::{self, LanczosOptions};
use crate::sre::AmplitudeTable;
use crate::{exec, Error, Result};

/// How other momentum sectors are examined after the k = 0 solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorSearch {
    /// Probe every sector; fully solve those within `10 tol` of the k = 0
    /// energy. Gives a gap over all sectors.
    Probe,
    /// k = 0 only; the gap comes from the second k = 0 Ritz value.
    ZeroOnly,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub search: SectorSearch,
    /// Krylov steps used when probing a sector.
    pub probe_steps: usize,
    /// Gap below which a ground state is flagged as degenerate.
    pub degeneracy_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_krylov: 300,
            max_restarts: 30,
            search: SectorSearch::Probe,
            probe_steps: 40,
            degeneracy_threshold: 1e-8,
        }
    }
}

impl SolverOptions {
    fn lanczos(&self) -> LanczosOptions {
        LanczosOptions {
            tol: self.tol,
            max_krylov: self.max_krylov,
            max_restarts: self.max_restarts,
            check_every: 5,
        }
    }
}

/// Normalized real ground state expanded over the full constrained basis.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub basis: Arc<ConstrainedBasis>,
    pub amplitudes: Vec<f64>,
    pub energy: f64,
    pub momentum: usize,
    pub gap: f64,
    /// Set when `gap` is below the degeneracy threshold; the entropy of such
    /// a state depends on which superposition the solver happened to return.
    pub degenerate: bool,
    pub residual: f64,
    pub params: CouplingParams,
}

impl GroundState {
    pub fn length(&self) -> usize {
        self.basis.length()
    }
}

impl AmplitudeTable for GroundState {
    fn length(&self) -> usize {
        self.basis.length()
    }
    fn configs(&self) -> &[u64] {
        self.basis.configs()
    }
    fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }
}

/// Reusable solver for one chain length; momentum blocks are built lazily
/// and shared, so grid points can be solved concurrently.
pub struct ChainSolver {
    basis: Arc<ConstrainedBasis>,
    blocks: Vec<OnceLock<Arc<SectorBlock>>>,
    opts: SolverOptions,
}

impl ChainSolver {
    pub fn new(length: usize, opts: SolverOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
        }
        let basis = Arc::new(ConstrainedBasis::new(length)?);
        let blocks = (0..length).map(|_| OnceLock::new()).collect();
        Ok(ChainSolver { basis, blocks, opts })
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn block(&self, k: usize) -> Arc<SectorBlock> {
        self.blocks[k]
            .get_or_init(|| {
                let sector = self.basis.momentum_sector(k).expect("momentum in range");
                Arc::new(SectorBlock::new(sector))
            })
            .clone()
    }

    fn solve_sector(&self, params: &CouplingParams, k: usize) -> Result<SectorSolution> {
        let h = SectorHamiltonian::from_block(self.block(k), *params);
        let dim = h.dim();
        let opts = self.opts.lanczos();
        if h.is_real() {
            let out = lanczos::lowest(dim, |x, y| h.apply_real(x, y), vec![1.0; dim], &opts)?;
            Ok(SectorSolution {
                k,
                energy: out.eigenvalue,
                next: out.next_ritz,
                residual: out.residual,
                vector: SectorVector::Real(out.vector),
            })
        } else {
            let start = vec![Complex64::new(1.0, 0.0); dim];
            let out = lanczos::lowest(dim, |x, y| h.apply_complex(x, y), start, &opts)?;
            Ok(SectorSolution {
                k,
                energy: out.eigenvalue,
                next: out.next_ritz,
                residual: out.residual,
                vector: SectorVector::Complex(out.vector),
            })
        }
    }

    fn probe_sector(&self, params: &CouplingParams, k: usize) -> f64 {
        let h = SectorHamiltonian::from_block(self.block(k), *params);
        let dim = h.dim();
        if dim == 0 {
            return f64::INFINITY;
        }
        let steps = self.opts.probe_steps;
        if h.is_real() {
            lanczos::probe(dim, |x, y| h.apply_real(x, y), vec![1.0; dim], steps)
        } else {
            let start = vec![Complex64::new(1.0, 0.0); dim];
            lanczos::probe(dim, |x, y| h.apply_complex(x, y), start, steps)
        }
    }

    pub fn ground_state(&self, params: &CouplingParams) -> Result<GroundState> {
        params.validate()?;
        let length = self.basis.length();
        let zero = self.solve_sector(params, 0)?;
        let mut best = zero;
        let mut excited = best.next.unwrap_or(f64::INFINITY);

        if self.opts.search == SectorSearch::Probe {
            let probes = exec::map_collect(length - 1, |i| (i + 1, self.probe_sector(params, i + 1)));
            for (k, theta) in probes {
                if theta <= best.energy + 10.0 * self.opts.tol {
                    let sol = self.solve_sector(params, k)?;
                    if sol.energy < best.energy - self.opts.tol {
                        excited = excited.min(best.energy);
                        best = sol;
                    } else {
                        excited = excited.min(sol.energy);
                    }
                } else {
                    excited = excited.min(theta);
                }
            }
        }

        let gap = (excited - best.energy).max(0.0);
        let amplitudes = self.expand(&best)?;
        Ok(GroundState {
            basis: self.basis.clone(),
            amplitudes,
            energy: best.energy,
            momentum: best.k,
            gap,
            degenerate: gap < self.opts.degeneracy_threshold,
            residual: best.residual,
            params: *params,
        })
    }

    /// Expand a sector eigenvector over the full basis as real amplitudes
    /// with the positive global sign convention.
    fn expand(&self, sol: &SectorSolution) -> Result<Vec<f64>> {
        let length = self.basis.length();
        let block = self.block(sol.k);
        let sector = block.sector();
        let configs = self.basis.configs();
        let mut amps = vec![0.0; configs.len()];
        match &sol.vector {
            SectorVector::Real(v) => exec::fill(&mut amps, |i| {
                let (rep, shift, period) = representative(configs[i], length);
                let r = sector.index_of(rep).expect("orbit missing from sector");
                let sign = if sol.k == 0 || shift % 2 == 0 { 1.0 } else { -1.0 };
                sign * v[r] / (period as f64).sqrt()
            }),
            SectorVector::Complex(v) => {
                // psi_k and its conjugate partner at -k are degenerate; the
                // real part (or imaginary part if that vanishes) is a real
                // eigenvector of the same energy.
                let mut complex = vec![Complex64::new(0.0, 0.0); configs.len()];
                exec::fill(&mut complex, |i| {
                    let (rep, shift, period) = representative(configs[i], length);
                    let r = sector.index_of(rep).expect("orbit missing from sector");
                    let angle = -2.0 * std::f64::consts::PI * ((sol.k * shift) % length) as f64 / length as f64;
                    v[r] * Complex64::from_polar(1.0, angle) / (period as f64).sqrt()
                });
                let re: f64 = complex.iter().map(|c| c.re * c.re).sum();
                let im: f64 = complex.iter().map(|c| c.im * c.im).sum();
                for (a, c) in amps.iter_mut().zip(&complex) {
                    *a = if re >= im { c.re } else { c.im };
                }
            }
        }
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        let total: f64 = amps.iter().sum();
        let sign = if total.abs() > 1e-8 {
            total.signum()
        } else {
            let big = amps.iter().copied().fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
            big.signum()
        };
        amps.iter_mut().for_each(|a| *a *= sign / norm);
        Ok(amps)
    }
}

enum SectorVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

struct SectorSolution {
    k: usize,
    energy: f64,
    next: Option<f64>,
    residual: f64,
    vector: SectorVector,
}

/// Lowest-energy eigenpair of the dual chain on `length` sites.
pub fn ground_state(params: &CouplingParams, length: usize, tol: f64) -> Result<GroundState> {
    let opts = SolverOptions {
        tol,
        ..Default::default()
    };
    ChainSolver::new(length, opts)?.ground_state(params)
}

/// Full ascending spectrum from the dense matrix.
pub fn full_spectrum(params: &CouplingParams, length: usize) -> Result<Vec<f64>> {
    full_spectrum_capped(params, length, DEFAULT_DENSE_CAP)
}

pub fn full_spectrum_capped(params: &CouplingParams, length: usize, cap: usize) -> Result<Vec<f64>> {
    let basis = ConstrainedBasis::new(length)?;
    let h = build_dense(params, &basis, cap)?;
    let mut values: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_spectrum() {
        let s = full_spectrum(&CouplingParams::with_w(-1.0, 0.0, 0.0), 2).unwrap();
        let r2 = 2f64.sqrt();
        let expected = [-r2, 0.0, r2];
        assert_eq!(s.len(), 3);
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_chain_ground_state_is_vacuum() {
        let gs = ground_state(&CouplingParams::with_w(0.0, 1.0, 0.0), 4, 1e-10).unwrap();
        assert!(gs.energy.abs() < 1e-12);
        let i = gs.basis.index_of(0).unwrap();
        assert!((gs.amplitudes[i] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_at_eight_sites() {
        let p = CouplingParams::with_w(-1.0, 0.0, 0.0);
        let gs = ground_state(&p, 8, 1e-10).unwrap();
        let dense = full_spectrum(&p, 8).unwrap();
        assert!((gs.energy - dense[0]).abs() < 1e-10);
        assert_eq!(gs.momentum, 0);
        let norm: f64 = gs.amplitudes.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(gs.amplitudes.iter().all(|&a| a >= -1e-12));
        assert!((gs.gap - (dense[1] - dense[0])).abs() < 1e-6);
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        assert!(ground_state(&CouplingParams::default(), 6, 0.0).is_err());
    }
}
