//! Blockade-constrained Hilbert space of the dual chain.
//!
//! A configuration is an `L`-bit word where bit `j` holds the occupation of
//! site `j + 1`. Boundaries are periodic, so site `L` neighbours site `1`.
//! Configurations are ordered by their integer value and translation orbits
//! are labelled by their numerically smallest member.

use std::fmt;

use crate::{Error, Result};

/// Largest chain that can be stored as a single machine word.
pub const MAX_WORD_LENGTH: usize = 64;

/// Largest chain [`ConstrainedBasis::new`] will enumerate.
pub const MAX_ENUM_LENGTH: usize = 42;

#[inline]
pub(crate) fn mask(length: usize) -> u64 {
    if length >= 64 {
        u64::MAX
    } else {
        (1u64 << length) - 1
    }
}

/// Cyclic left rotation by `r` sites inside an `length`-bit word.
#[inline]
pub(crate) fn rotate(bits: u64, r: usize, length: usize) -> u64 {
    let r = r % length;
    if r == 0 {
        return bits;
    }
    ((bits << r) | (bits >> (length - r))) & mask(length)
}

/// Blockade test without argument checks; hot loops call this directly.
#[inline]
pub(crate) fn blockade_ok(bits: u64, length: usize) -> bool {
    bits & rotate(bits, 1, length) == 0
}

fn check_length(length: usize, max: usize) -> Result<()> {
    if length < 2 {
        return Err(Error::InvalidSize {
            length,
            reason: "need at least 2 sites".into(),
        });
    }
    if length > max {
        return Err(Error::InvalidSize {
            length,
            reason: format!("at most {max} sites supported"),
        });
    }
    Ok(())
}

/// True iff no two cyclically adjacent bits are both set.
pub fn is_valid(bits: u64, length: usize) -> Result<bool> {
    check_length(length, MAX_WORD_LENGTH)?;
    Ok(bits & !mask(length) == 0 && blockade_ok(bits, length))
}

/// Dimension of the constrained space, `F(L-1) + F(L+1)` (a Lucas number),
/// computed by recurrence without enumeration.
pub fn dim(length: usize) -> Result<u64> {
    if length < 2 {
        return Err(Error::InvalidSize {
            length,
            reason: "need at least 2 sites".into(),
        });
    }
    // Lucas: L1 = 1, L2 = 3
    let (mut prev, mut cur) = (1u64, 3u64);
    for _ in 2..length {
        let next = prev.checked_add(cur).ok_or(Error::Overflow {
            what: "dimension",
            length,
        })?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Shift a configuration by `r` sites (site `j` moves to `j + r`).
pub fn translate(config: SpinConfig, r: usize) -> SpinConfig {
    let length = config.length();
    SpinConfig {
        bits: rotate(config.bits, r, length),
        length: config.length,
    }
}

/// Smallest member of the translation orbit of `bits`, the shift `r` with
/// `rotate(rep, r) == bits`, and the orbit period.
pub fn representative(bits: u64, length: usize) -> (u64, usize, usize) {
    let mut rep = bits;
    let mut shift = 0;
    let mut period = length;
    let mut cur = bits;
    for r in 1..=length {
        cur = rotate(cur, 1, length);
        if cur == bits {
            period = r;
            break;
        }
        if cur < rep {
            rep = cur;
            // rotate(bits, r) == rep, so rotate(rep, L - r) == bits
            shift = length - r;
        }
    }
    (rep, shift % period, period)
}

/// An occupation string on the dual chain.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    bits: u64,
    length: u8,
}

impl SpinConfig {
    /// Checked constructor; rejects strings that violate the blockade.
    pub fn new(bits: u64, length: usize) -> Result<Self> {
        if !is_valid(bits, length)? {
            return Err(Error::InvalidParameter(format!(
                "{bits:#b} violates the blockade on {length} sites"
            )));
        }
        Ok(SpinConfig {
            bits,
            length: length as u8,
        })
    }

    /// Parse a 0/1 string with site 1 leftmost.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (j, ch) in s.trim().chars().enumerate() {
            match ch {
                '0' => {}
                '1' if j < 64 => bits |= 1 << j,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "bad configuration string {s:?}"
                    )))
                }
            }
        }
        Self::new(bits, s.trim().len())
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn length(self) -> usize {
        self.length as usize
    }

    pub fn occupation(self, site: usize) -> bool {
        self.bits >> site & 1 == 1
    }

    pub fn particle_count(self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.length() {
            f.write_str(if self.occupation(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinConfig({self})")
    }
}

/// Write `bits` as a 0/1 string, site 1 leftmost.
pub fn format_bits(bits: u64, length: usize) -> String {
    (0..length)
        .map(|j| if bits >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// A translation orbit, labelled by its smallest member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Orbit {
    pub representative: u64,
    pub period: u32,
}

/// All blockade-respecting configurations of a periodic chain.
///
/// Immutable after construction, so it can be shared across threads.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    length: usize,
    configs: Vec<u64>,
    orbits: Vec<Orbit>,
}

impl ConstrainedBasis {
    pub fn new(length: usize) -> Result<Self> {
        check_length(length, MAX_ENUM_LENGTH)?;
        let expected = dim(length)? as usize;
        let mut configs = Vec::with_capacity(expected);
        // Build from the most significant site down, 0 before 1, which
        // yields increasing integer order.
        fn descend(pos: usize, prefix: u64, prev_set: bool, top_set: bool, out: &mut Vec<u64>) {
            if pos == 0 {
                out.push(prefix);
                // site 1 may be set only if neither site 2 nor site L is
                if !prev_set && !top_set {
                    out.push(prefix | 1);
                }
                return;
            }
            descend(pos - 1, prefix, false, top_set, out);
            if !prev_set {
                descend(pos - 1, prefix | (1 << pos), true, top_set, out);
            }
        }
        let top = length - 1;
        descend(top - 1, 0, false, false, &mut configs);
        descend(top - 1, 1 << top, true, true, &mut configs);
        debug_assert_eq!(configs.len(), expected);

        let orbits = configs
            .iter()
            .filter_map(|&c| {
                let (rep, _, period) = representative(c, length);
                (rep == c).then_some(Orbit {
                    representative: c,
                    period: period as u32,
                })
            })
            .collect();

        Ok(ConstrainedBasis {
            length,
            configs,
            orbits,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn config_at(&self, index: usize) -> SpinConfig {
        SpinConfig {
            bits: self.configs[index],
            length: self.length as u8,
        }
    }

    #[inline]
    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.configs.binary_search(&bits).ok()
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    /// Orbit representatives compatible with momentum `2 pi k / L`.
    pub fn momentum_sector(&self, k: usize) -> Result<SectorBasis> {
        if k >= self.length {
            return Err(Error::InvalidParameter(format!(
                "momentum index {k} outside 0..{}",
                self.length
            )));
        }
        let (reps, periods) = self
            .orbits
            .iter()
            .filter(|o| (k * o.period as usize).is_multiple_of(self.length))
            .map(|o| (o.representative, o.period))
            .unzip();
        Ok(SectorBasis {
            length: self.length,
            k,
            reps,
            periods,
        })
    }
}

/// Momentum-sector basis: states `(1/sqrt p) sum_n e^{-i k n} T^n |r>` over
/// representatives `r` of period `p` with `k p = 0 (mod L)`.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    length: usize,
    k: usize,
    reps: Vec<u64>,
    periods: Vec<u32>,
}

impl SectorBasis {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn momentum(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn representatives(&self) -> &[u64] {
        &self.reps
    }

    pub fn periods(&self) -> &[u32] {
        &self.periods
    }

    pub fn index_of(&self, rep: u64) -> Option<usize> {
        self.reps.binary_search(&rep).ok()
    }

    /// True when all block entries are real (k = 0 or k = L/2).
    pub fn is_real(&self) -> bool {
        self.k == 0 || 2 * self.k == self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(length: usize) -> Vec<u64> {
        (0..1u64 << length)
            .filter(|&b| is_valid(b, length).unwrap())
            .collect()
    }

    #[test]
    fn validity_examples() {
        let cfg = |s: &str| {
            let bits = s
                .chars()
                .enumerate()
                .fold(0u64, |b, (j, c)| if c == '1' { b | 1 << j } else { b });
            is_valid(bits, s.len()).unwrap()
        };
        assert!(cfg("0000"));
        assert!(cfg("1010"));
        assert!(!cfg("1001"));
        assert!(matches!(is_valid(0, 1), Err(Error::InvalidSize { .. })));
    }

    #[test]
    fn enumeration_examples() {
        let b2 = ConstrainedBasis::new(2).unwrap();
        let strings: Vec<String> = (0..b2.len()).map(|i| b2.config_at(i).to_string()).collect();
        assert_eq!(strings, ["00", "10", "01"]);
        assert_eq!(ConstrainedBasis::new(4).unwrap().len(), 7);
        assert_eq!(ConstrainedBasis::new(10).unwrap().len(), 123);
        assert!(ConstrainedBasis::new(1).is_err());
        assert!(ConstrainedBasis::new(MAX_ENUM_LENGTH + 1).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force_up_to_20() {
        for length in 2..=20 {
            let basis = ConstrainedBasis::new(length).unwrap();
            assert_eq!(basis.configs(), brute_force(length).as_slice(), "L={length}");
            assert_eq!(basis.len() as u64, dim(length).unwrap());
            for i in 0..basis.len() {
                assert_eq!(basis.index_of(basis.configs()[i]), Some(i));
            }
        }
    }

    #[test]
    fn dim_examples() {
        assert_eq!(dim(2).unwrap(), 3);
        assert_eq!(dim(4).unwrap(), 7);
        assert_eq!(dim(30).unwrap(), 1_860_498);
        assert!(matches!(dim(200), Err(Error::Overflow { .. })));
    }

    #[test]
    fn translate_examples() {
        let c = SpinConfig::parse("1000").unwrap();
        assert_eq!(translate(c, 1).to_string(), "0100");
        let c = SpinConfig::parse("1010").unwrap();
        assert_eq!(translate(c, 2), c);
        assert_eq!(translate(c, 0), c);
        assert_eq!(SpinConfig::parse("0001").unwrap().bits(), 0b1000);
    }

    #[test]
    fn orbit_decomposition_at_four_sites() {
        let basis = ConstrainedBasis::new(4).unwrap();
        let orbits = basis.orbits();
        // {0000}, {1000,...} and {1010, 0101}
        assert_eq!(orbits.len(), 3);
        assert_eq!(orbits.iter().map(|o| o.period).collect::<Vec<_>>(), [1, 4, 2]);
        let dims: Vec<usize> = (0..4).map(|k| basis.momentum_sector(k).unwrap().len()).collect();
        assert_eq!(dims, [3, 1, 2, 1]);
        assert_eq!(dims.iter().sum::<usize>(), 7);
        let k2 = basis.momentum_sector(2).unwrap();
        assert!(k2.index_of(0b0101).is_some());
    }

    #[test]
    fn representative_reconstructs_config() {
        for length in [5, 6, 9, 12] {
            let basis = ConstrainedBasis::new(length).unwrap();
            for &c in basis.configs() {
                let (rep, shift, period) = representative(c, length);
                assert_eq!(rotate(rep, shift, length), c);
                assert_eq!(length % period, 0);
                assert!(basis.orbits().iter().any(|o| o.representative == rep));
            }
        }
    }
}
