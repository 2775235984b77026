//! Signed lattice quantizer and two's-complement bit-plane codec.
//!
//! Plane `l` (0-based, least significant first) carries weight `2^l`, except
//! the sign plane `L - 1` which carries `-2^(L-1)`. Because the decoder is
//! linear in the plane sums, decoding the bitwise sum of `K` codewords yields
//! the sum of the `K` encoded integers.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Widest supported codeword.
pub const MAX_BITS: u32 = 32;

/// Behaviour for sources outside `[-s_max, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeMode {
    /// Reject out-of-range inputs.
    #[default]
    Strict,
    /// Saturate to `[-s_max, s_max]` first (unbounded sources).
    Clamp,
}

/// `b`-bit quantizer with scale `zeta = 2^(b-1) / (s_max + eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    s_max: f64,
    eps: f64,
    zeta: f64,
    mode: RangeMode,
}

impl QuantizerSpec {
    /// Quantizer with the default guard `eps = 2^(-b-4) * s_max`.
    pub fn new(bits: u32, s_max: f64) -> Result<Self> {
        Self::with_eps(bits, s_max, default_eps(bits, s_max))
    }

    pub fn with_eps(bits: u32, s_max: f64, eps: f64) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::invalid("bits", "must be in 1..=32"));
        }
        if !(s_max.is_finite() && s_max > 0.0) {
            return Err(Error::invalid("s_max", "must be finite and positive"));
        }
        if !(eps > 0.0 && eps < pow2(1 - bits as i32) * s_max) {
            return Err(Error::invalid(
                "eps",
                "must satisfy 0 < eps < 2^(1-b) * s_max",
            ));
        }
        Ok(Self {
            bits,
            s_max,
            eps,
            zeta: pow2(bits as i32 - 1) / (s_max + eps),
            mode: RangeMode::Strict,
        })
    }

    pub fn with_mode(mut self, mode: RangeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn mode(&self) -> RangeMode {
        self.mode
    }

    /// Lattice integer `floor(zeta * s)`.
    pub fn quantize(&self, s: f64) -> Result<i64> {
        let s = match self.mode {
            RangeMode::Strict if !(s.abs() <= self.s_max) => {
                return Err(Error::SourceRange {
                    value: s,
                    s_max: self.s_max,
                });
            }
            RangeMode::Strict => s,
            RangeMode::Clamp if s.is_nan() => {
                return Err(Error::SourceRange {
                    value: s,
                    s_max: self.s_max,
                });
            }
            RangeMode::Clamp => s.clamp(-self.s_max, self.s_max),
        };
        let v = libm::floor(self.zeta * s) as i64;
        debug_assert!(lattice_range(self.bits).contains(&v));
        Ok(v)
    }

    /// Quantized source value `floor(zeta * s) / zeta`.
    pub fn quantize_value(&self, s: f64) -> Result<f64> {
        Ok(self.quantize(s)? as f64 / self.zeta)
    }
}

/// Default guard `2^(-b-4) * s_max`.
pub fn default_eps(bits: u32, s_max: f64) -> f64 {
    pow2(-(bits as i32) - 4) * s_max
}

/// Inclusive lattice range `[-2^(b-1), 2^(b-1) - 1]`.
pub fn lattice_range(bits: u32) -> core::ops::RangeInclusive<i64> {
    let half = 1i64 << (bits - 1);
    -half..=half - 1
}

/// Two's-complement codeword, plane 0 first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Codeword {
    word: u32,
    len: u32,
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit on plane `plane` (0-based).
    pub fn bit(&self, plane: usize) -> u8 {
        assert!(plane < self.len(), "plane {plane} out of range");
        ((self.word >> plane) & 1) as u8
    }

    /// Bits in plane order (least significant first).
    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(|l| self.bit(l))
    }

    /// BPSK symbol `2x - 1` on plane `plane`.
    pub fn symbol(&self, plane: usize) -> f64 {
        if self.bit(plane) == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Raw bit pattern, bit `l` holding plane `l`.
    pub fn word(&self) -> u32 {
        self.word
    }

    /// Signed value `sum_{l<L-1} x_l 2^l - x_{L-1} 2^(L-1)`.
    pub fn value(&self) -> i64 {
        (0..self.len())
            .map(|l| i64::from(self.bit(l)) * plane_weight_int(l, self.len()))
            .sum()
    }
}

/// Displays MSB first, e.g. `-3` on four planes prints `1101`.
impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in (0..self.len()).rev() {
            f.write_str(if self.bit(l) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Codeword {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let len = s.len();
        if len == 0 || len > MAX_BITS as usize {
            return Err(Error::invalid("codeword", "length must be in 1..=32"));
        }
        let mut word = 0u32;
        for (l, c) in s.bytes().rev().enumerate() {
            match c {
                b'0' => {}
                b'1' => word |= 1 << l,
                _ => return Err(Error::invalid("codeword", "expected only '0' and '1'")),
            }
        }
        Ok(Self {
            word,
            len: len as u32,
        })
    }
}

fn check_len(len: u32) -> Result<()> {
    if len == 0 || len > MAX_BITS {
        return Err(Error::invalid("len", "must be in 1..=32"));
    }
    Ok(())
}

/// Two's-complement encoding of `v` on `len` planes.
pub fn encode(v: i64, len: u32) -> Result<Codeword> {
    check_len(len)?;
    if !lattice_range(len).contains(&v) {
        return Err(Error::LatticeRange {
            value: v,
            bits: len,
        });
    }
    let mask = if len == 32 {
        u64::from(u32::MAX)
    } else {
        (1u64 << len) - 1
    };
    Ok(Codeword {
        word: (v as u64 & mask) as u32,
        len,
    })
}

/// Offset-binary encoding: `v + 2^(len-1)` as an unsigned integer.
pub fn encode_offset_binary(v: i64, len: u32) -> Result<Codeword> {
    check_len(len)?;
    if !lattice_range(len).contains(&v) {
        return Err(Error::LatticeRange {
            value: v,
            bits: len,
        });
    }
    let u = (v + (1i64 << (len - 1))) as u64;
    Ok(Codeword {
        word: u as u32,
        len,
    })
}

fn plane_weight_int(plane: usize, len: usize) -> i64 {
    if plane + 1 == len {
        -(1i64 << plane)
    } else {
        1i64 << plane
    }
}

/// Decoding weight of plane `plane` in a `len`-plane code.
pub fn plane_weight(plane: usize, len: usize) -> f64 {
    plane_weight_int(plane, len) as f64
}

/// Per-plane device counts of a set of codewords, computed in integers.
pub fn plane_counts(codewords: &[Codeword]) -> Result<Vec<i64>> {
    let len = match codewords.first() {
        Some(c) => c.len(),
        None => return Err(Error::invalid("codewords", "need at least one codeword")),
    };
    let mut counts = alloc::vec![0i64; len];
    for c in codewords {
        if c.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: c.len(),
            });
        }
        for (l, count) in counts.iter_mut().enumerate() {
            *count += i64::from(c.bit(l));
        }
    }
    Ok(counts)
}

/// Integer decoder at unit scale; exact for noiseless plane counts.
pub fn decode_counts(counts: &[i64]) -> Result<i64> {
    if counts.is_empty() {
        return Err(Error::invalid("r", "need at least one plane"));
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(l, &r)| r * plane_weight_int(l, counts.len()))
        .sum())
}

/// Plane sums `r_l`; exact integers before detection, real after.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPlaneSums {
    pub sums: Vec<f64>,
    pub devices: usize,
}

impl BitPlaneSums {
    pub fn new(sums: Vec<f64>, devices: usize) -> Self {
        Self { sums, devices }
    }

    pub fn from_codewords(codewords: &[Codeword]) -> Result<Self> {
        let counts = plane_counts(codewords)?;
        Ok(Self {
            sums: counts.into_iter().map(|r| r as f64).collect(),
            devices: codewords.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn decode(&self, zeta: f64) -> Result<f64> {
        decode(&self.sums, zeta)
    }
}

/// `(1/zeta) (sum_{l<L-1} r_l 2^l - r_{L-1} 2^(L-1))`.
pub fn decode(r: &[f64], zeta: f64) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::invalid("r", "need at least one plane"));
    }
    if !(zeta > 0.0) {
        return Err(Error::invalid("zeta", "must be positive"));
    }
    let len = r.len();
    let acc: f64 = r
        .iter()
        .enumerate()
        .map(|(l, &x)| x * plane_weight(l, len))
        .sum();
    Ok(acc / zeta)
}

/// Inverse of offset-binary superposition: subtracts `devices * 2^(L-1)`.
pub fn decode_offset_binary(r: &[f64], devices: usize, zeta: f64) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::invalid("r", "need at least one plane"));
    }
    if !(zeta > 0.0) {
        return Err(Error::invalid("zeta", "must be positive"));
    }
    let acc: f64 = r.iter().enumerate().map(|(l, &x)| x * pow2(l as i32)).sum();
    Ok((acc - devices as f64 * pow2(r.len() as i32 - 1)) / zeta)
}

fn pow2(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn quantize_examples() {
        let spec = QuantizerSpec::new(8, 1.0).unwrap();
        assert_eq!(spec.quantize(0.0).unwrap(), 0);

        // s_max + eps = 8 with b = 4 gives zeta = 1.
        let unit = QuantizerSpec::with_eps(4, 7.9, 0.1).unwrap();
        assert_eq!(unit.zeta(), 1.0);
        assert_eq!(unit.quantize(-2.3).unwrap(), -3);

        // s_max + eps = 1 with b = 8 gives zeta = 128.
        let edge = QuantizerSpec::with_eps(8, 0.9990234375, 0.0009765625).unwrap();
        assert_eq!(edge.zeta(), 128.0);
        assert_eq!(edge.quantize(0.999).unwrap(), 127);
    }

    #[test]
    fn quantize_rejects_out_of_range_unless_clamped() {
        let spec = QuantizerSpec::new(8, 1.0).unwrap();
        assert!(matches!(spec.quantize(1.5), Err(Error::SourceRange { .. })));
        assert!(spec.quantize(f64::NAN).is_err());
        let clamp = spec.with_mode(RangeMode::Clamp);
        assert_eq!(clamp.quantize(1.5).unwrap(), 127);
        assert_eq!(clamp.quantize(-7.0).unwrap(), -128);
        assert!(clamp.quantize(f64::NAN).is_err());
    }

    #[test]
    fn quantizer_parameter_validation() {
        assert!(QuantizerSpec::new(0, 1.0).is_err());
        assert!(QuantizerSpec::new(33, 1.0).is_err());
        assert!(QuantizerSpec::new(8, 0.0).is_err());
        assert!(QuantizerSpec::with_eps(8, 1.0, 0.0).is_err());
        // eps must stay below 2^(1-b) * s_max = 1/128.
        assert!(QuantizerSpec::with_eps(8, 1.0, 1.0 / 128.0).is_err());
        assert_eq!(default_eps(8, 2.0), 2.0 / 4096.0);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode(0, 4).unwrap().bits().collect::<Vec<_>>(),
            [0, 0, 0, 0]
        );
        assert_eq!(
            encode(-3, 4).unwrap().bits().collect::<Vec<_>>(),
            [1, 0, 1, 1]
        );
        assert_eq!(
            encode(5, 4).unwrap().bits().collect::<Vec<_>>(),
            [1, 0, 1, 0]
        );
    }

    #[test]
    fn encode_rejects_unrepresentable() {
        assert_eq!(encode(8, 4), Err(Error::LatticeRange { value: 8, bits: 4 }));
        assert!(encode(-9, 4).is_err());
        assert!(encode(-8, 4).is_ok());
        assert!(encode(0, 0).is_err());
        assert!(encode(0, 33).is_err());
        assert!(encode(i64::from(i32::MIN), 32).is_ok());
    }

    #[test]
    fn display_is_msb_first_and_parses_back() {
        let c = encode(-3, 4).unwrap();
        assert_eq!(c.to_string(), "1101");
        assert_eq!("1101".parse::<Codeword>().unwrap(), c);
        assert!("10a1".parse::<Codeword>().is_err());
        assert!("".parse::<Codeword>().is_err());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(&[0.0; 4], 1.0).unwrap(), 0.0);
        let words = [encode(-3, 4).unwrap(), encode(5, 4).unwrap()];
        let r = BitPlaneSums::from_codewords(&words).unwrap();
        assert_eq!(r.sums, vec![2.0, 0.0, 2.0, 1.0]);
        assert_eq!(r.decode(1.0).unwrap(), 2.0);
        assert_eq!(decode_counts(&plane_counts(&words).unwrap()).unwrap(), 2);
    }

    #[test]
    fn decode_rejects_malformed_input() {
        assert!(decode(&[], 1.0).is_err());
        assert!(decode(&[1.0], 0.0).is_err());
        assert!(decode_counts(&[]).is_err());
        assert!(plane_counts(&[]).is_err());
        let mixed = [encode(1, 4).unwrap(), encode(1, 5).unwrap()];
        assert!(matches!(
            plane_counts(&mixed),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_plane_code_is_sign_only() {
        assert_eq!(encode(-1, 1).unwrap().value(), -1);
        assert_eq!(encode(0, 1).unwrap().value(), 0);
        assert_eq!(decode(&[3.0], 1.0).unwrap(), -3.0);
    }

    #[test]
    fn offset_binary_round_trip() {
        for v in lattice_range(5) {
            let c = encode_offset_binary(v, 5).unwrap();
            let r: Vec<f64> = c.bits().map(f64::from).collect();
            assert_eq!(decode_offset_binary(&r, 1, 1.0).unwrap(), v as f64);
        }
        // Offset binary differs from two's complement only in the sign plane.
        let a = encode(-3, 4).unwrap().word();
        let b = encode_offset_binary(-3, 4).unwrap().word();
        assert_eq!(a ^ b, 0b1000);
    }
}
