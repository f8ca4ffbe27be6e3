//! Sampling estimator of the SRE-2 density.
//!
//! Each run draws `N` configurations from `|c_s|^2` and averages the
//! kernel
//!
//! ```text
//! Q(s1..s4) = c(t^s1) c(t^s2) c(t^s3) c(t^s4) / (c(s1) c(s2) c(s3) c(s4)),
//! t = s1 ^ s2 ^ s3 ^ s4
//! ```
//!
//! over all `C(N, 4)` index subsets. A run reports `-ln(mean Q) / L`; runs
//! are averaged and the spread gives the error bar.
//!
//! Draws usually repeat, so the sum is taken over multisets of distinct
//! configurations weighted by products of binomials. This gives the same
//! value as the index-subset sum at a fraction of the cost.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::blockade_ok;
use crate::sre::AmplitudeTable;
use crate::{exec, Error, Result};

/// A state that can be sampled in the computational basis.
pub trait SampledState: Sync {
    fn length(&self) -> usize;
    /// Amplitude of any bit string, zero off the support. A common positive
    /// factor is allowed since only ratios enter the kernel.
    fn amplitude(&self, bits: u64) -> f64;
    fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<u64>;
}

/// Open-addressing map from configuration to amplitude; the kernel does
/// several lookups per quadruple, so a binary search is too slow.
struct Lookup {
    keys: Vec<u64>,
    vals: Vec<f64>,
    shift: u32,
}

const EMPTY: u64 = u64::MAX;

impl Lookup {
    fn new(configs: &[u64], amps: &[f64]) -> Self {
        let slots = (2 * configs.len()).next_power_of_two().max(2);
        let shift = 64 - slots.trailing_zeros();
        let mut keys = vec![EMPTY; slots];
        let mut vals = vec![0.0; slots];
        for (&k, &a) in configs.iter().zip(amps) {
            let mut i = Self::slot(k, shift);
            while keys[i] != EMPTY {
                i = (i + 1) & (slots - 1);
            }
            keys[i] = k;
            vals[i] = a;
        }
        Lookup { keys, vals, shift }
    }

    #[inline]
    fn slot(k: u64, shift: u32) -> usize {
        (k.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> shift) as usize
    }

    #[inline]
    fn get(&self, k: u64) -> f64 {
        let mask = self.keys.len() - 1;
        let mut i = Self::slot(k, self.shift);
        loop {
            let key = self.keys[i];
            if key == k {
                return self.vals[i];
            }
            if key == EMPTY {
                return 0.0;
            }
            i = (i + 1) & mask;
        }
    }
}

/// Inverse-CDF sampler over an explicit amplitude table, in table order.
pub struct TableSampler<'a, A: AmplitudeTable + ?Sized> {
    table: &'a A,
    cdf: Vec<f64>,
    lookup: Lookup,
}

impl<'a, A: AmplitudeTable + ?Sized> TableSampler<'a, A> {
    pub fn new(table: &'a A) -> Self {
        let mut acc = 0.0;
        let cdf = table
            .amplitudes()
            .iter()
            .map(|a| {
                acc += a * a;
                acc
            })
            .collect();
        // the all-ones word doubles as the empty-slot marker; it never
        // passes the blockade, so it cannot be a valid key
        let lookup = Lookup::new(table.configs(), table.amplitudes());
        TableSampler { table, cdf, lookup }
    }

    fn draw_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cdf.last().expect("empty amplitude table");
        let u = rng.random::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u);
        // u < total always, but guard against a trailing run of zeros
        i.min(self.cdf.len() - 1)
    }
}

impl<A: AmplitudeTable + ?Sized> SampledState for TableSampler<'_, A> {
    fn length(&self) -> usize {
        self.table.length()
    }

    fn amplitude(&self, bits: u64) -> f64 {
        if bits == EMPTY {
            return self.table.amplitude_of(bits);
        }
        self.lookup.get(bits)
    }

    fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
        let configs = self.table.configs();
        (0..n).map(|_| configs[self.draw_index(rng)]).collect()
    }
}

/// Random stream for run `run` under master seed `seed`.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// `N` i.i.d. draws from `|c_s|^2` by inverse CDF over the table order.
pub fn sample_configs<A: AmplitudeTable + ?Sized>(state: &A, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    TableSampler::new(state).draw(rng, n)
}

/// Run layout: samples per run, number of runs, master seed and an optional
/// cap on the number of quadruples per run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    #[serde(rename = "N")]
    pub samples: usize,
    #[serde(rename = "N_real")]
    pub runs: usize,
    pub seed: u64,
    pub quadruple_cap: Option<u64>,
}

impl SamplingPlan {
    pub fn new(samples: usize, runs: usize, seed: u64) -> Self {
        SamplingPlan {
            samples,
            runs,
            seed,
            quadruple_cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 4 {
            return Err(Error::InvalidParameter("samples must be >= 4".into()));
        }
        if self.runs < 1 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.quadruple_cap == Some(0) {
            return Err(Error::InvalidParameter("quadruple cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SreEstimate {
    pub m2_mean: f64,
    pub sigma: f64,
    pub per_run: Vec<f64>,
    #[serde(rename = "N")]
    pub samples: usize,
    #[serde(rename = "R")]
    pub runs: usize,
    pub seed: u64,
    /// A single run has no spread, so its zero sigma means nothing.
    pub unreliable: bool,
}

impl SreEstimate {
    pub fn from_runs(per_run: Vec<f64>, plan: &SamplingPlan) -> Self {
        let r = per_run.len() as f64;
        let mean = per_run.iter().sum::<f64>() / r;
        let var = per_run.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / r;
        SreEstimate {
            m2_mean: mean,
            sigma: (var / r).sqrt(),
            per_run,
            samples: plan.samples,
            runs: plan.runs,
            seed: plan.seed,
            unreliable: plan.runs < 2,
        }
    }
}

fn binomial(m: u64, r: usize) -> f64 {
    let m = m as f64;
    match r {
        1 => m,
        2 => m * (m - 1.0) / 2.0,
        3 => m * (m - 1.0) * (m - 2.0) / 6.0,
        4 => m * (m - 1.0) * (m - 2.0) * (m - 3.0) / 24.0,
        _ => unreachable!(),
    }
}

/// Kernel `Q` for one quadruple. The inputs are sorted first, so the
/// value is bit-identical under any permutation.
pub fn quadruple_kernel<S: SampledState + ?Sized>(state: &S, quad: [u64; 4]) -> f64 {
    let mut q = quad;
    q.sort_unstable();
    let length = state.length();
    let t = q[0] ^ q[1] ^ q[2] ^ q[3];
    let mut num = 1.0;
    for &s in &q {
        let u = t ^ s;
        if !blockade_ok(u, length) {
            return 0.0;
        }
        num *= state.amplitude(u);
    }
    let den: f64 = q.iter().map(|&s| state.amplitude(s)).product();
    num / den
}

/// For every pair `p <= q` of distinct configurations, the set of
/// `d >= q` with `s_p ^ s_q ^ s_d` blockade-valid, as a bit row. Rows start
/// at the word holding bit `q`.
struct PairSets {
    words: usize,
    offsets: Vec<usize>,
    bits: Vec<u64>,
}

impl PairSets {
    fn new(configs: &[u64], length: usize) -> Self {
        let d = configs.len();
        let words = d.div_ceil(64);
        let mut offsets = Vec::with_capacity(d);
        let mut total = 0;
        for q in 0..d {
            offsets.push(total);
            total += (q + 1) * (words - q / 64);
        }
        let mut bits = vec![0u64; total];
        for q in 0..d {
            let w0 = q / 64;
            let row_len = words - w0;
            for p in 0..=q {
                let x = configs[p] ^ configs[q];
                let row = &mut bits[offsets[q] + p * row_len..][..row_len];
                for (dd, &sd) in configs.iter().enumerate().skip(q) {
                    if blockade_ok(x ^ sd, length) {
                        row[dd / 64 - w0] |= 1 << (dd % 64);
                    }
                }
            }
        }
        PairSets { words, offsets, bits }
    }

    /// Row for `p <= q`; index 0 is word `q / 64`.
    #[inline]
    fn row(&self, p: usize, q: usize) -> &[u64] {
        let len = self.words - q / 64;
        &self.bits[self.offsets[q] + p * len..][..len]
    }
}

/// Mean of `Q` over all 4-subsets of the sample indices.
pub fn kernel_mean<S: SampledState + ?Sized>(state: &S, samples: &[u64]) -> Result<f64> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InvalidParameter("samples must be >= 4".into()));
    }
    let length = state.length();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let mut configs: Vec<u64> = Vec::new();
    let mut mult: Vec<u64> = Vec::new();
    for s in sorted {
        if configs.last() == Some(&s) {
            *mult.last_mut().unwrap() += 1;
        } else {
            configs.push(s);
            mult.push(1);
        }
    }
    let amps: Vec<f64> = configs.iter().map(|&s| state.amplitude(s)).collect();
    let sets = PairSets::new(&configs, length);
    let d = configs.len();
    let total = exec::chunked_sum(d, 1, |range| {
        let mut acc = 0.0;
        for ia in range {
            let sa = configs[ia];
            for ib in ia..d {
                let sb = configs[ib];
                let pair = sa ^ sb;
                let head = amps[ia] * amps[ib];
                let row_ab = sets.row(ia, ib);
                let wb = ib / 64;
                for_each_bit(row_ab, wb, ib, |ic| {
                    let sc = configs[ic];
                    let abc = state.amplitude(pair ^ sc);
                    if abc == 0.0 {
                        return;
                    }
                    let wc = ic / 64;
                    let row_ac = sets.row(ia.min(ic), ic);
                    let row_bc = sets.row(ib, ic);
                    let lead = head * amps[ic];
                    let mut inner = 0.0;
                    for w in wc..sets.words {
                        let mut m = row_ab[w - wb] & row_ac[w - wc] & row_bc[w - wc];
                        if w == wc {
                            m &= !0u64 << (ic % 64);
                        }
                        while m != 0 {
                            let id = w * 64 + m.trailing_zeros() as usize;
                            m &= m - 1;
                            let sd = configs[id];
                            let y = sc ^ sd;
                            let num = state.amplitude(pair ^ sd)
                                * state.amplitude(sa ^ y)
                                * state.amplitude(sb ^ y);
                            if num == 0.0 {
                                continue;
                            }
                            let weight = multiplicity_weight([ia, ib, ic, id], [mult[ia], mult[ib], mult[ic], mult[id]]);
                            inner += weight * num / amps[id];
                        }
                    }
                    acc += abc * inner / lead;
                });
            }
        }
        acc
    });
    Ok(total / binomial(n as u64, 4))
}

/// Calls `f` for every set bit `>= from` of a row starting at word `w0`.
#[inline]
fn for_each_bit(row: &[u64], w0: usize, from: usize, mut f: impl FnMut(usize)) {
    for (k, &word) in row.iter().enumerate() {
        let w = w0 + k;
        let mut m = word;
        if w == from / 64 {
            m &= !0u64 << (from % 64);
        }
        while m != 0 {
            let bit = w * 64 + m.trailing_zeros() as usize;
            m &= m - 1;
            f(bit);
        }
    }
}

/// Number of index 4-subsets that land on the sorted distinct indices
/// `idx`, given multiplicities `m`.
fn multiplicity_weight(idx: [usize; 4], m: [u64; 4]) -> f64 {
    let mut w = 1.0;
    let mut i = 0;
    while i < 4 {
        let mut j = i + 1;
        while j < 4 && idx[j] == idx[i] {
            j += 1;
        }
        let r = j - i;
        if m[i] < r as u64 {
            return 0.0;
        }
        w *= binomial(m[i], r);
        i = j;
    }
    w
}

/// Mean of `Q` over `cap` uniformly drawn index 4-subsets.
pub fn kernel_mean_subsampled<S: SampledState + ?Sized>(
    state: &S,
    samples: &[u64],
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let n = samples.len();
    let mut acc = 0.0;
    for _ in 0..cap {
        let pick = index::sample(rng, n, 4);
        let quad = [
            samples[pick.index(0)],
            samples[pick.index(1)],
            samples[pick.index(2)],
            samples[pick.index(3)],
        ];
        acc += quadruple_kernel(state, quad);
    }
    acc / cap as f64
}

/// One run: draw, average the kernel, take `-ln(mean) / L`.
pub fn run_estimate<S: SampledState + ?Sized>(
    state: &S,
    n: usize,
    cap: Option<u64>,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let samples = state.draw(rng, n);
    let mean = match cap {
        Some(c) if binomial(n as u64, 4) > c as f64 => kernel_mean_subsampled(state, &samples, c, rng),
        _ => kernel_mean(state, &samples)?,
    };
    if !(mean > 0.0) {
        return Err(Error::NonPositiveMean { run: 0, mean });
    }
    Ok(-mean.ln() / state.length() as f64)
}

/// All runs of `plan`, each on its own stream, then mean and error bar.
pub fn estimate<S: SampledState + ?Sized>(state: &S, plan: &SamplingPlan) -> Result<SreEstimate> {
    plan.validate()?;
    let runs = exec::map_collect(plan.runs, |r| {
        let mut rng = run_rng(plan.seed, r);
        run_estimate(state, plan.samples, plan.quadruple_cap, &mut rng).map_err(|e| match e {
            Error::NonPositiveMean { mean, .. } => Error::NonPositiveMean { run: r, mean },
            other => other,
        })
    });
    let per_run = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SreEstimate::from_runs(per_run, plan))
}

/// [`estimate`] for an explicit amplitude table such as a ground state.
pub fn estimate_table<A: AmplitudeTable + ?Sized>(state: &A, plan: &SamplingPlan) -> Result<SreEstimate> {
    estimate(&TableSampler::new(state), plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sre::RealState;

    #[test]
    fn point_mass_gives_zero() {
        let vac = RealState::basis_state(0, 4).unwrap();
        let mut rng = run_rng(7, 0);
        let s = sample_configs(&vac, 20, &mut rng);
        assert!(s.iter().all(|&c| c == 0));
        let est = estimate_table(&vac, &SamplingPlan::new(10, 3, 1)).unwrap();
        assert_eq!(est.m2_mean, 0.0);
        assert_eq!(est.sigma, 0.0);
    }

    #[test]
    fn plan_validation() {
        assert!(SamplingPlan::new(3, 1, 0).validate().is_err());
        assert!(SamplingPlan::new(4, 0, 0).validate().is_err());
        assert!(SamplingPlan::new(4, 1, 0).validate().is_ok());
    }

    #[test]
    fn single_run_is_flagged() {
        let vac = RealState::basis_state(0, 4).unwrap();
        let est = estimate_table(&vac, &SamplingPlan::new(8, 1, 3)).unwrap();
        assert!(est.unreliable);
        assert_eq!(est.sigma, 0.0);
    }

    #[test]
    fn multiset_sum_matches_index_subsets() {
        let h = 0.5;
        let st = RealState::new(4, vec![0, 1, 2, 4, 8, 5, 10], vec![h, 0.3, 0.3, 0.3, 0.3, 0.4, 0.25])
            .unwrap()
            .normalized()
            .unwrap();
        let sampler = TableSampler::new(&st);
        let mut rng = run_rng(11, 2);
        let samples = sampler.draw(&mut rng, 14);
        let mut brute = 0.0;
        let mut count = 0.0;
        let n = samples.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        brute += quadruple_kernel(&sampler, [samples[a], samples[b], samples[c], samples[d]]);
                        count += 1.0;
                    }
                }
            }
        }
        let fast = kernel_mean(&sampler, &samples).unwrap();
        assert!((fast - brute / count).abs() < 1e-13, "{fast} vs {}", brute / count);
    }

    #[test]
    fn multiplicity_weights() {
        assert_eq!(multiplicity_weight([0, 0, 0, 0], [5, 5, 5, 5]), 5.0);
        assert_eq!(multiplicity_weight([0, 0, 1, 1], [3, 3, 2, 2]), 3.0);
        assert_eq!(multiplicity_weight([0, 1, 2, 2], [2, 3, 1, 1]), 0.0);
    }
}
