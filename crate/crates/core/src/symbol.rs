//! Microstate strings and the contracts shared by every other module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the payload of a [`SymbolString`] is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Bit-granular string; `bit_length` may be any value, pad bits are zero.
    Bits,
    /// Plain byte string.
    Bytes,
    /// Little-endian signed 16-bit mono samples.
    Pcm16Mono,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Bits => "bits",
            Encoding::Bytes => "bytes",
            Encoding::Pcm16Mono => "pcm16-mono",
        })
    }
}

/// A finite microstate: bits, bytes or 16-bit PCM samples.
///
/// Bits are packed high bit first. For [`Encoding::Bits`] the trailing pad
/// bits of the last byte are always zero, so two strings with equal bits have
/// equal payloads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolString {
    payload: Vec<u8>,
    bit_length: usize,
    encoding: Encoding,
}

impl SymbolString {
    pub fn empty(encoding: Encoding) -> Self {
        Self {
            payload: Vec::new(),
            bit_length: 0,
            encoding,
        }
    }

    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        let payload = bytes.into();
        Self {
            bit_length: payload.len() * 8,
            payload,
            encoding: Encoding::Bytes,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut payload = Vec::new();
        let mut bit_length = 0;
        for bit in bits {
            if bit_length % 8 == 0 {
                payload.push(0);
            }
            if bit {
                *payload.last_mut().unwrap() |= 0x80 >> (bit_length % 8);
            }
            bit_length += 1;
        }
        Self {
            payload,
            bit_length,
            encoding: Encoding::Bits,
        }
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn from_bit_str(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(bits))
    }

    /// Packed bits with an explicit length. Pad bits beyond `bit_length` are cleared.
    pub fn from_packed_bits(mut payload: Vec<u8>, bit_length: usize) -> Result<Self> {
        if bit_length > payload.len() * 8 || payload.len() != bit_length.div_ceil(8) {
            return Err(Error::Format(format!(
                "bit length {bit_length} does not fit {} payload bytes",
                payload.len()
            )));
        }
        if !bit_length.is_multiple_of(8) {
            let keep = 0xFFu8 << (8 - bit_length % 8);
            *payload.last_mut().unwrap() &= keep;
        }
        Ok(Self {
            payload,
            bit_length,
            encoding: Encoding::Bits,
        })
    }

    pub fn from_samples(samples: &[i16]) -> Self {
        let payload: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        Self {
            bit_length: payload.len() * 8,
            payload,
            encoding: Encoding::Pcm16Mono,
        }
    }

    /// Reinterprets little-endian bytes as PCM samples.
    pub fn from_pcm_bytes(payload: Vec<u8>) -> Result<Self> {
        if !payload.len().is_multiple_of(2) {
            return Err(Error::Format(format!(
                "pcm16-mono payload has odd byte count {}",
                payload.len()
            )));
        }
        Ok(Self {
            bit_length: payload.len() * 8,
            payload,
            encoding: Encoding::Pcm16Mono,
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn bit_length(&self) -> usize {
        self.bit_length
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn is_empty(&self) -> bool {
        self.bit_length == 0
    }

    pub fn bit(&self, index: usize) -> bool {
        debug_assert!(index < self.bit_length);
        self.payload[index / 8] & (0x80 >> (index % 8)) != 0
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.bit_length).map(move |i| self.bit(i))
    }

    pub fn count_ones(&self) -> usize {
        self.payload.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Samples of a PCM string; `None` for other encodings.
    pub fn samples(&self) -> Option<Vec<i16>> {
        (self.encoding == Encoding::Pcm16Mono).then(|| {
            self.payload
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect()
        })
    }

    /// `'0'`/`'1'` rendering of the bits.
    pub fn to_bit_string(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.encoding {
            Encoding::Bits => write!(f, "\"{}\"", self.to_bit_string()),
            _ => write!(f, "<{} {} bytes>", self.encoding, self.payload.len()),
        }
    }
}

/// Sentinel placed between the operands of a conditional.
pub const JOIN_SENTINEL: [u8; 2] = [0x00, 0xFF];

/// Combines `a` and `b` into the string `a ‖ 0x00 0xFF ‖ b`.
///
/// For bit strings the sentinel is inserted as sixteen bits, so byte-aligned
/// operands give the same payload as the byte case.
pub fn join_for_conditional(a: &SymbolString, b: &SymbolString) -> Result<SymbolString> {
    if a.encoding != b.encoding {
        return Err(Error::IncompatibleEncodings {
            left: a.encoding.to_string(),
            right: b.encoding.to_string(),
        });
    }
    match a.encoding {
        Encoding::Bits => {
            let sentinel = JOIN_SENTINEL
                .iter()
                .flat_map(|byte| (0..8).map(move |i| byte & (0x80 >> i) != 0));
            Ok(SymbolString::from_bits(
                a.bits().chain(sentinel).chain(b.bits()),
            ))
        }
        encoding => {
            let mut payload = Vec::with_capacity(a.payload.len() + b.payload.len() + 2);
            payload.extend_from_slice(&a.payload);
            payload.extend_from_slice(&JOIN_SENTINEL);
            payload.extend_from_slice(&b.payload);
            Ok(SymbolString {
                bit_length: payload.len() * 8,
                payload,
                encoding,
            })
        }
    }
}

/// An observer model P, realized as a canonicalizer `q` with `X ~ Y` iff `q(X) = q(Y)`.
pub trait EquivalenceRelation: Send + Sync {
    fn name(&self) -> String;

    /// Canonical representative of the class of `x`. Must be idempotent.
    fn canonical_form(&self, x: &SymbolString) -> Result<SymbolString>;

    /// All strings of `universe_bits` bits equivalent to `x`, in ascending
    /// bit-string order, or [`Error::NotEnumerable`].
    fn enumerate_class(&self, x: &SymbolString, universe_bits: usize) -> Result<Vec<SymbolString>>;

    fn same_class(&self, x: &SymbolString, y: &SymbolString) -> Result<bool> {
        Ok(self.canonical_form(x)? == self.canonical_form(y)?)
    }
}

/// A complexity estimator `K̂`: a deterministic code length in bits.
pub trait Compressor: Send + Sync {
    fn name(&self) -> String;

    fn code_length(&self, data: &SymbolString) -> Result<f64>;
}

impl<C: Compressor + ?Sized> Compressor for &C {
    fn name(&self) -> String {
        (**self).name()
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        (**self).code_length(data)
    }
}

impl<C: Compressor + ?Sized> Compressor for Box<C> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        (**self).code_length(data)
    }
}

/// K̂(X), Ŝ(X/P) and the entropy estimate derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub k_hat_bits: f64,
    pub s_hat_bits: f64,
    pub entropy_estimate_bits: f64,
    /// `2^entropy_estimate_bits`; infinite (serialized as `null`) past `f64` range.
    pub cardinality_estimate: f64,
    pub relation_name: String,
    pub compressor_name: String,
}

impl ComplexityReport {
    pub fn new(k_hat_bits: f64, s_hat_bits: f64, relation_name: String, compressor_name: String) -> Self {
        let entropy_estimate_bits = k_hat_bits - s_hat_bits;
        Self {
            k_hat_bits,
            s_hat_bits,
            entropy_estimate_bits,
            cardinality_estimate: entropy_estimate_bits.exp2(),
            relation_name,
            compressor_name,
        }
    }
}
