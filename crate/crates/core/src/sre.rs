//! Exact stabilizer Renyi entropy of order 2.
//!
//! Two independent evaluations of `exp(-M2)`:
//!
//! * the Pauli route, `sum_P <P>^4 / 2^L` over all `4^L` strings, done one
//!   flip mask at a time with a Walsh-Hadamard transform over phase masks;
//! * the quadruple route, a sum over four configurations `s1..s4` of
//!   `c1 c2 c3 c(s1^s2^s3) c(s1^s2^s4) c(s1^s3^s4) c(s2^s3^s4) c4`, which
//!   never leaves the constrained space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{blockade_ok, ConstrainedBasis};
use crate::{exec, Error, Result};

/// Default largest chain for the `4^L` Pauli sum.
pub const EXACT_PAULI_CAP: usize = 12;

const NORM_TOLERANCE: f64 = 1e-8;

/// Real amplitudes on a sorted set of configurations.
pub trait AmplitudeTable: Sync {
    fn length(&self) -> usize;
    /// Sorted, duplicate-free configurations.
    fn configs(&self) -> &[u64];
    fn amplitudes(&self) -> &[f64];

    /// Amplitude of any bit string; zero off the support.
    #[inline]
    fn amplitude_of(&self, bits: u64) -> f64 {
        match self.configs().binary_search(&bits) {
            Ok(i) => self.amplitudes()[i],
            Err(_) => 0.0,
        }
    }

    fn norm(&self) -> f64 {
        self.amplitudes().iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

fn check_normalized<A: AmplitudeTable + ?Sized>(state: &A) -> Result<()> {
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// A real pure state stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct RealState {
    length: usize,
    configs: Vec<u64>,
    amplitudes: Vec<f64>,
}

impl RealState {
    /// Build from (config, amplitude) pairs in any order; zero amplitudes
    /// are dropped.
    pub fn new(length: usize, configs: Vec<u64>, amplitudes: Vec<f64>) -> Result<Self> {
        if configs.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: configs.len(),
                got: amplitudes.len(),
            });
        }
        if !(1..=64).contains(&length) {
            return Err(Error::InvalidSize {
                length,
                reason: "states need 1..=64 sites".into(),
            });
        }
        let mut pairs: Vec<(u64, f64)> = configs
            .into_iter()
            .zip(amplitudes)
            .filter(|&(_, a)| a != 0.0)
            .collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate configuration".into()));
        }
        if let Some(&(bad, _)) = pairs.iter().find(|p| length < 64 && p.0 >> length != 0) {
            return Err(Error::InvalidParameter(format!(
                "configuration {bad:#b} does not fit in {length} sites"
            )));
        }
        let (configs, amplitudes) = pairs.into_iter().unzip();
        Ok(RealState {
            length,
            configs,
            amplitudes,
        })
    }

    /// Amplitudes over every element of `basis`, in basis order.
    pub fn on_basis(basis: &ConstrainedBasis, amplitudes: &[f64]) -> Result<Self> {
        Self::new(basis.length(), basis.configs().to_vec(), amplitudes.to_vec())
    }

    /// From a dense `2^L` vector.
    pub fn from_full(length: usize, full: &[f64]) -> Result<Self> {
        if full.len() != 1usize << length {
            return Err(Error::DimensionMismatch {
                expected: 1 << length,
                got: full.len(),
            });
        }
        Self::new(length, (0..full.len() as u64).collect(), full.to_vec())
    }

    /// Complex input is accepted only when every amplitude is real.
    pub fn try_from_complex(length: usize, configs: Vec<u64>, amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.iter().any(|a| a.im != 0.0) {
            return Err(Error::ComplexAmplitudes);
        }
        Self::new(length, configs, amplitudes.iter().map(|a| a.re).collect())
    }

    pub fn basis_state(bits: u64, length: usize) -> Result<Self> {
        Self::new(length, vec![bits], vec![1.0])
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    /// Apply the Clifford `prod_{j in z} Z_j`: `c_s -> (-1)^{|z & s|} c_s`.
    pub fn with_z_signs(&self, z: u64) -> Self {
        let mut out = self.clone();
        for (c, a) in out.configs.iter().zip(out.amplitudes.iter_mut()) {
            if (c & z).count_ones() % 2 == 1 {
                *a = -*a;
            }
        }
        out
    }

    pub fn to_full(&self) -> Vec<f64> {
        let mut full = vec![0.0; 1usize << self.length];
        for (&c, &a) in self.configs.iter().zip(&self.amplitudes) {
            full[c as usize] = a;
        }
        full
    }

    pub fn from_table<A: AmplitudeTable + ?Sized>(table: &A) -> Result<Self> {
        Self::new(table.length(), table.configs().to_vec(), table.amplitudes().to_vec())
    }
}

impl AmplitudeTable for RealState {
    fn length(&self) -> usize {
        self.length
    }
    fn configs(&self) -> &[u64] {
        &self.configs
    }
    fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }
}

/// Pauli string as flip mask `x` and phase mask `z`; a site with both set
/// carries `Y = i X Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    pub length: usize,
}

impl PauliString {
    pub fn identity(length: usize) -> Self {
        PauliString { x: 0, z: 0, length }
    }

    /// Parse `I/X/Y/Z` letters, site 1 leftmost.
    pub fn parse(s: &str) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        for (j, ch) in s.chars().enumerate() {
            if j >= 64 {
                return Err(Error::InvalidParameter("Pauli string longer than 64".into()));
            }
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << j,
                'Z' => z |= 1 << j,
                'Y' => {
                    x |= 1 << j;
                    z |= 1 << j;
                }
                other => return Err(Error::InvalidParameter(format!("bad Pauli letter {other:?}"))),
            }
        }
        Ok(PauliString {
            x,
            z,
            length: s.chars().count(),
        })
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }
}

/// Total and per-site SRE-2, in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SreValue {
    #[serde(rename = "M2")]
    pub total: f64,
    #[serde(rename = "m2")]
    pub density: f64,
    pub length: usize,
}

impl SreValue {
    /// From `exp(-M2)`.
    pub fn from_exp_neg(value: f64, length: usize) -> Self {
        let total = -value.ln();
        SreValue {
            total,
            density: total / length as f64,
            length,
        }
    }
}

/// `<psi|P|psi>` for a real normalized state.
pub fn pauli_expectation<A: AmplitudeTable + ?Sized>(state: &A, p: &PauliString) -> Result<f64> {
    check_normalized(state)?;
    if p.length != state.length() {
        return Err(Error::DimensionMismatch {
            expected: state.length(),
            got: p.length,
        });
    }
    let y = p.y_count();
    if y % 2 == 1 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (&s, &a) in state.configs().iter().zip(state.amplitudes()) {
        let b = state.amplitude_of(s ^ p.x);
        if b != 0.0 {
            let sign = if (p.z & s).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * a * b;
        }
    }
    Ok(if (y / 2).is_multiple_of(2) { acc } else { -acc })
}

/// In-place Walsh-Hadamard transform, `f(z) <- sum_s (-1)^{z.s} f(s)`.
pub fn walsh_hadamard(f: &mut [f64]) {
    let n = f.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (f[i], f[i + h]);
                f[i] = a + b;
                f[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Pauli moments of a real state: `(sum_P <P>^2, sum_P <P>^4)`, both over
/// the even-Y strings (odd-Y expectations vanish for real states).
pub fn pauli_moments<A: AmplitudeTable + ?Sized>(state: &A, cap: usize) -> Result<(f64, f64)> {
    check_normalized(state)?;
    let length = state.length();
    if length > cap {
        return Err(Error::SizeCap {
            what: "Pauli sum",
            size: length,
            cap,
        });
    }
    let full = RealState::from_table(state)?.to_full();
    let n = full.len();
    let support = state.configs();
    let chunk = (n / 64).max(1);
    let ranges = exec::chunks(n, chunk);
    let partials = exec::map_collect(ranges.len(), |c| {
        let mut f = vec![0.0; n];
        let (mut s2, mut s4) = (0.0, 0.0);
        for x in ranges[c].clone() {
            let x = x as u64;
            f.iter_mut().for_each(|e| *e = 0.0);
            let mut any = false;
            for &s in support {
                let b = full[(s ^ x) as usize];
                if b != 0.0 {
                    f[s as usize] = full[s as usize] * b;
                    any = true;
                }
            }
            if !any {
                continue;
            }
            walsh_hadamard(&mut f);
            for (z, &e) in f.iter().enumerate() {
                if (x & z as u64).count_ones().is_multiple_of(2) {
                    let e2 = e * e;
                    s2 += e2;
                    s4 += e2 * e2;
                }
            }
        }
        (s2, s4)
    });
    Ok(partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d)))
}

/// SRE-2 from the Pauli-group definition.
pub fn sre2_pauli_sum<A: AmplitudeTable + ?Sized>(state: &A) -> Result<SreValue> {
    sre2_pauli_sum_capped(state, EXACT_PAULI_CAP)
}

pub fn sre2_pauli_sum_capped<A: AmplitudeTable + ?Sized>(state: &A, cap: usize) -> Result<SreValue> {
    let (_, s4) = pauli_moments(state, cap)?;
    let length = state.length();
    Ok(SreValue::from_exp_neg(s4 / (1u64 << length) as f64, length))
}

/// `exp(-M2)` from the quadruple identity, summed over ordered quadruples
/// of support configurations. Terms are pruned as soon as one of the XOR
/// strings breaks the blockade.
pub fn quadruple_exp_neg_m2<A: AmplitudeTable + ?Sized>(state: &A) -> Result<f64> {
    check_normalized(state)?;
    let length = state.length();
    let configs = state.configs();
    let amps = state.amplitudes();
    let d = configs.len();
    Ok(exec::chunked_sum(d, 1, |range| {
        let mut acc = 0.0;
        let mut partners: Vec<(u64, f64, f64)> = Vec::new();
        for i1 in range {
            let (s1, c1) = (configs[i1], amps[i1]);
            for i2 in 0..d {
                let (s2, c2) = (configs[i2], amps[i2]);
                let pair = s1 ^ s2;
                partners.clear();
                for i3 in 0..d {
                    let t = pair ^ configs[i3];
                    if blockade_ok(t, length) {
                        let ct = state.amplitude_of(t);
                        if ct != 0.0 {
                            partners.push((configs[i3], amps[i3], ct));
                        }
                    }
                }
                let head = c1 * c2;
                for &(s3, c3, c123) in &partners {
                    for &(s4, c4, c124) in &partners {
                        let y = s3 ^ s4;
                        let (t134, t234) = (s1 ^ y, s2 ^ y);
                        if !(blockade_ok(t134, length) && blockade_ok(t234, length)) {
                            continue;
                        }
                        let c134 = state.amplitude_of(t134);
                        if c134 == 0.0 {
                            continue;
                        }
                        let c234 = state.amplitude_of(t234);
                        acc += head * c3 * c123 * (c124 * c134 * c234 * c4);
                    }
                }
            }
        }
        acc
    }))
}

/// SRE-2 from the quadruple identity.
pub fn sre2_quadruple_sum<A: AmplitudeTable + ?Sized>(state: &A) -> Result<SreValue> {
    let value = quadruple_exp_neg_m2(state)?;
    Ok(SreValue::from_exp_neg(value, state.length()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neel_cat(length: usize) -> RealState {
        let a: u64 = (0..length).step_by(2).map(|j| 1u64 << j).sum();
        let b = a << 1;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        RealState::new(length, vec![a, b], vec![h, h]).unwrap()
    }

    #[test]
    fn vacuum_expectations() {
        let vac = RealState::basis_state(0, 4).unwrap();
        assert_eq!(pauli_expectation(&vac, &PauliString::parse("ZZZZ").unwrap()).unwrap(), 1.0);
        assert_eq!(pauli_expectation(&vac, &PauliString::parse("IXII").unwrap()).unwrap(), 0.0);
        assert_eq!(pauli_expectation(&vac, &PauliString::identity(4)).unwrap(), 1.0);
    }

    #[test]
    fn y_phase_convention() {
        // (|0> + |1>)/sqrt2 on one qubit has <X> = 1, <Y> = 0
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = RealState::new(1, vec![0, 1], vec![h, h]).unwrap();
        assert!((pauli_expectation(&plus, &PauliString::parse("X").unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pauli_expectation(&plus, &PauliString::parse("Y").unwrap()).unwrap(), 0.0);
        // YY on a Bell pair (|00> + |11>)/sqrt2 is -1
        let bell = RealState::new(2, vec![0, 3], vec![h, h]).unwrap();
        assert!((pauli_expectation(&bell, &PauliString::parse("YY").unwrap()).unwrap() + 1.0).abs() < 1e-15);
        assert!((pauli_expectation(&bell, &PauliString::parse("XX").unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stabilizer_states_have_zero_magic() {
        let vac = RealState::basis_state(0, 4).unwrap();
        assert!(sre2_pauli_sum(&vac).unwrap().total.abs() < 1e-12);
        assert!((quadruple_exp_neg_m2(&vac).unwrap() - 1.0).abs() < 1e-15);
        let cat = neel_cat(4);
        assert!(sre2_pauli_sum(&cat).unwrap().total.abs() < 1e-12);
        assert!(sre2_quadruple_sum(&cat).unwrap().total.abs() < 1e-12);
    }

    #[test]
    fn unnormalized_and_oversized_inputs_are_rejected() {
        let s = RealState::new(3, vec![0, 1], vec![1.0, 1.0]).unwrap();
        assert!(matches!(pauli_expectation(&s, &PauliString::identity(3)), Err(Error::NotNormalized { .. })));
        let big = RealState::basis_state(0, 13).unwrap();
        assert!(matches!(sre2_pauli_sum(&big), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn complex_amplitudes_are_rejected() {
        let amps = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        assert!(matches!(
            RealState::try_from_complex(2, vec![0, 1], &amps),
            Err(Error::ComplexAmplitudes)
        ));
        let real = [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        assert!(RealState::try_from_complex(2, vec![0, 1], &real).is_ok());
    }

    #[test]
    fn walsh_hadamard_of_delta_is_flat() {
        let mut f = vec![0.0; 8];
        f[0] = 1.0;
        walsh_hadamard(&mut f);
        assert!(f.iter().all(|&e| e == 1.0));
    }
}
