//! Bundled equivalence relations, each an idempotent canonicalizer.
//!
//! Textual syntax: `identity`, `multiset`, `parity`, `cyl:n=4`, `bitdepth:k=8`,
//! `down:m=4`, `band:rate=48000,cutoff=3000`, and the preset `speech-band`
//! (`band:rate=48000,cutoff=3000`).

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::symbol::{Encoding, EquivalenceRelation, SymbolString};

/// Largest universe [`RelationSpec::enumerate_class`] will walk.
pub const MAX_ENUMERABLE_BITS: usize = 20;

/// Transform-round cycles tried before the band limiter gives up.
pub const MAX_BANDLIMIT_CYCLES: usize = 64;

pub const SPEECH_BAND: RelationSpec = RelationSpec::Bandlimit {
    sample_rate_hz: 48_000,
    cutoff_hz: 3_000,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationSpec {
    Identity,
    /// Unordered symbols: sort.
    Multiset,
    /// Number of ones mod 2.
    Parity,
    /// Keep the first `n` bits, zero the rest.
    PrefixCylinder(usize),
    /// Keep the top `k` bits of each 16-bit sample.
    BitDepth(u8),
    /// Keep every `m`-th sample, zero the others.
    Downsample(usize),
    /// Remove spectral content above `cutoff_hz`.
    Bandlimit { sample_rate_hz: u32, cutoff_hz: u32 },
}

impl RelationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRelation(msg));
        match *self {
            RelationSpec::BitDepth(k) if !(1..=16).contains(&k) => bad(format!("bitdepth k={k} outside 1..=16")),
            RelationSpec::Downsample(0) => bad("down m must be at least 1".into()),
            RelationSpec::Bandlimit {
                sample_rate_hz,
                cutoff_hz,
            } if cutoff_hz == 0 || 2 * cutoff_hz as u64 >= sample_rate_hz as u64 => bad(format!(
                "band cutoff {cutoff_hz} must lie in (0, {sample_rate_hz}/2)"
            )),
            _ => Ok(()),
        }
    }

    pub fn is_enumerable(&self) -> bool {
        matches!(
            self,
            RelationSpec::Identity | RelationSpec::Multiset | RelationSpec::Parity | RelationSpec::PrefixCylinder(_)
        )
    }

    fn accepts(&self, encoding: Encoding) -> bool {
        match self {
            RelationSpec::Identity => true,
            RelationSpec::Multiset | RelationSpec::Parity | RelationSpec::PrefixCylinder(_) => {
                encoding != Encoding::Pcm16Mono
            }
            RelationSpec::BitDepth(_) | RelationSpec::Downsample(_) | RelationSpec::Bandlimit { .. } => {
                encoding == Encoding::Pcm16Mono
            }
        }
    }

    pub fn canonicalize(&self, x: &SymbolString) -> Result<SymbolString> {
        self.validate()?;
        if !self.accepts(x.encoding()) {
            return Err(Error::UnsupportedEncoding {
                relation: self.to_string(),
                encoding: x.encoding().to_string(),
            });
        }
        match *self {
            RelationSpec::Identity => Ok(x.clone()),
            RelationSpec::Multiset => {
                let ones = x.count_ones();
                let zeros = x.bit_length() - ones;
                let sorted =
                    SymbolString::from_bits(std::iter::repeat_n(false, zeros).chain(std::iter::repeat_n(true, ones)));
                rewrap(sorted, x.encoding())
            }
            RelationSpec::Parity => Ok(SymbolString::from_bits([x.count_ones() % 2 == 1])),
            RelationSpec::PrefixCylinder(n) => {
                let keep = n.min(x.bit_length());
                let bits = x.bits().enumerate().map(|(i, b)| i < keep && b);
                rewrap(SymbolString::from_bits(bits), x.encoding())
            }
            RelationSpec::BitDepth(k) => {
                let mask = !(u16::MAX.checked_shr(k as u32).unwrap_or(0));
                let samples = pcm(x);
                let kept: Vec<i16> = samples.iter().map(|&s| (s as u16 & mask) as i16).collect();
                Ok(SymbolString::from_samples(&kept))
            }
            RelationSpec::Downsample(m) => {
                let samples = pcm(x);
                let kept: Vec<i16> = samples
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| if i % m == 0 { s } else { 0 })
                    .collect();
                Ok(SymbolString::from_samples(&kept))
            }
            RelationSpec::Bandlimit {
                sample_rate_hz,
                cutoff_hz,
            } => {
                let limiter = BandLimiter::new(pcm(x).len(), sample_rate_hz, cutoff_hz);
                limiter.settle(pcm(x)).map(|s| SymbolString::from_samples(&s))
            }
        }
    }

    pub fn same_class(&self, x: &SymbolString, y: &SymbolString) -> Result<bool> {
        Ok(self.canonicalize(x)? == self.canonicalize(y)?)
    }

    /// All `universe_bits`-bit strings equivalent to `x`, ascending.
    pub fn enumerate_class(&self, x: &SymbolString, universe_bits: usize) -> Result<Vec<SymbolString>> {
        if !self.is_enumerable() {
            return Err(Error::NotEnumerable(self.to_string()));
        }
        if universe_bits > MAX_ENUMERABLE_BITS {
            return Err(Error::Config(format!(
                "universe of {universe_bits} bits exceeds {MAX_ENUMERABLE_BITS}"
            )));
        }
        if x.encoding() != Encoding::Bits {
            return Err(Error::UnsupportedEncoding {
                relation: self.to_string(),
                encoding: x.encoding().to_string(),
            });
        }
        if x.bit_length() != universe_bits {
            return Err(Error::Config(format!(
                "{x} has {} bits, universe is {universe_bits}",
                x.bit_length()
            )));
        }
        let code = bits_to_code(x);
        let ones = code.count_ones();
        let codes: Vec<u32> = match *self {
            RelationSpec::Identity => vec![code],
            RelationSpec::Multiset => (0..1u32 << universe_bits).filter(|c| c.count_ones() == ones).collect(),
            RelationSpec::Parity => (0..1u32 << universe_bits)
                .filter(|c| c.count_ones() % 2 == ones % 2)
                .collect(),
            RelationSpec::PrefixCylinder(n) => {
                let free = universe_bits - n.min(universe_bits);
                let prefix = code >> free << free;
                (0..1u32 << free).map(|suffix| prefix | suffix).collect()
            }
            _ => unreachable!(),
        };
        Ok(codes.into_iter().map(|c| code_to_bits(c, universe_bits)).collect())
    }
}

fn pcm(x: &SymbolString) -> Vec<i16> {
    x.samples().expect("encoding checked by accepts()")
}

fn bits_to_code(x: &SymbolString) -> u32 {
    x.bits().fold(0, |acc, b| acc << 1 | b as u32)
}

/// The `len`-bit string whose bits, high first, are the low `len` bits of `code`.
/// Byte-aligned bit string back in the caller's encoding.
fn rewrap(bits: SymbolString, encoding: Encoding) -> Result<SymbolString> {
    match encoding {
        Encoding::Bits => Ok(bits),
        Encoding::Bytes => Ok(SymbolString::from_bytes(bits.payload().to_vec())),
        Encoding::Pcm16Mono => SymbolString::from_pcm_bytes(bits.payload().to_vec()),
    }
}

pub fn code_to_bits(code: u32, len: usize) -> SymbolString {
    SymbolString::from_bits((0..len).rev().map(|i| code >> i & 1 == 1))
}

/// One DFT low-pass plus re-quantization to 16-bit samples.
struct BandLimiter {
    len: usize,
    keep: Vec<bool>,
}

impl BandLimiter {
    fn new(len: usize, sample_rate_hz: u32, cutoff_hz: u32) -> Self {
        // Bin k and its mirror N-k carry frequency min(k, N-k)·rate/N.
        let keep = (0..len)
            .map(|k| {
                let f = k.min(len - k) as u64;
                f * sample_rate_hz as u64 <= cutoff_hz as u64 * len as u64
            })
            .collect();
        Self { len, keep }
    }

    /// Iterates the transform-round cycle until a state repeats and returns
    /// the smallest state of the limit cycle (usually a fixed point, sometimes
    /// a 2-cycle). Every state of the limit cycle maps to the same result,
    /// which makes the map idempotent.
    fn settle(&self, samples: Vec<i16>) -> Result<Vec<i16>> {
        let mut history = vec![samples];
        for _ in 0..MAX_BANDLIMIT_CYCLES {
            let next = self.cycle(history.last().unwrap());
            if let Some(start) = history.iter().position(|h| *h == next) {
                return Ok(history.swap_remove(
                    (start..history.len()).min_by(|&a, &b| history[a].cmp(&history[b])).unwrap(),
                ));
            }
            history.push(next);
        }
        Err(Error::NoFixedPoint(MAX_BANDLIMIT_CYCLES))
    }

    fn cycle(&self, samples: &[i16]) -> Vec<i16> {
        if self.len == 0 {
            return Vec::new();
        }
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(self.len);
        let inverse = planner.plan_fft_inverse(self.len);
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s as f64, 0.0)).collect();
        forward.process(&mut buf);
        for (bin, keep) in buf.iter_mut().zip(&self.keep) {
            if !keep {
                *bin = Complex::new(0.0, 0.0);
            }
        }
        inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.iter()
            .map(|c| (c.re * scale).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
            .collect()
    }
}

/// Magnitudes of the DFT bins strictly above `cutoff_hz`.
pub fn spectrum_above(samples: &[i16], sample_rate_hz: u32, cutoff_hz: u32) -> Vec<f64> {
    let len = samples.len();
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s as f64, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut buf);
    buf.iter()
        .enumerate()
        .filter(|(k, _)| (*k.min(&(len - k)) as u64) * sample_rate_hz as u64 > cutoff_hz as u64 * len as u64)
        .map(|(_, c)| c.norm())
        .collect()
}

impl EquivalenceRelation for RelationSpec {
    fn name(&self) -> String {
        self.to_string()
    }

    fn canonical_form(&self, x: &SymbolString) -> Result<SymbolString> {
        self.canonicalize(x)
    }

    fn enumerate_class(&self, x: &SymbolString, universe_bits: usize) -> Result<Vec<SymbolString>> {
        RelationSpec::enumerate_class(self, x, universe_bits)
    }
}

impl fmt::Display for RelationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationSpec::Identity => f.write_str("identity"),
            RelationSpec::Multiset => f.write_str("multiset"),
            RelationSpec::Parity => f.write_str("parity"),
            RelationSpec::PrefixCylinder(n) => write!(f, "cyl:n={n}"),
            RelationSpec::BitDepth(k) => write!(f, "bitdepth:k={k}"),
            RelationSpec::Downsample(m) => write!(f, "down:m={m}"),
            RelationSpec::Bandlimit {
                sample_rate_hz,
                cutoff_hz,
            } => write!(f, "band:rate={sample_rate_hz},cutoff={cutoff_hz}"),
        }
    }
}

impl FromStr for RelationSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidRelation(format!("cannot parse relation {text:?}"));
        let (kind, params) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
        let mut fields = Vec::new();
        for pair in params.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(bad)?;
            let value: u64 = value.trim().parse().map_err(|_| bad())?;
            fields.push((key.trim(), value));
        }
        let field = |name: &str| fields.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).ok_or_else(bad);
        let expect = |names: &[&str]| {
            if fields.len() == names.len() && fields.iter().all(|(k, _)| names.contains(k)) {
                Ok(())
            } else {
                Err(bad())
            }
        };
        let spec = match kind {
            "identity" => expect(&[]).map(|_| RelationSpec::Identity)?,
            "multiset" => expect(&[]).map(|_| RelationSpec::Multiset)?,
            "parity" => expect(&[]).map(|_| RelationSpec::Parity)?,
            "speech-band" => expect(&[]).map(|_| SPEECH_BAND)?,
            "cyl" => {
                expect(&["n"])?;
                RelationSpec::PrefixCylinder(field("n")? as usize)
            }
            "bitdepth" => {
                expect(&["k"])?;
                RelationSpec::BitDepth(u8::try_from(field("k")?).map_err(|_| bad())?)
            }
            "down" => {
                expect(&["m"])?;
                RelationSpec::Downsample(field("m")? as usize)
            }
            "band" => {
                expect(&["rate", "cutoff"])?;
                RelationSpec::Bandlimit {
                    sample_rate_hz: u32::try_from(field("rate")?).map_err(|_| bad())?,
                    cutoff_hz: u32::try_from(field("cutoff")?).map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(bits: &str) -> SymbolString {
        SymbolString::from_bit_str(bits).unwrap()
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn parses_every_documented_form() {
        for (text, spec) in [
            ("identity", RelationSpec::Identity),
            ("multiset", RelationSpec::Multiset),
            ("parity", RelationSpec::Parity),
            ("cyl:n=4", RelationSpec::PrefixCylinder(4)),
            ("bitdepth:k=8", RelationSpec::BitDepth(8)),
            ("down:m=4", RelationSpec::Downsample(4)),
            ("band:rate=48000,cutoff=3000", SPEECH_BAND),
            ("speech-band", SPEECH_BAND),
        ] {
            let parsed: RelationSpec = text.parse().unwrap();
            assert_eq!(parsed, spec, "{text}");
            assert_eq!(parsed.to_string().parse::<RelationSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        for text in [
            "bitdepth:k=0",
            "bitdepth:k=17",
            "down:m=0",
            "band:rate=48000,cutoff=24000",
            "band:rate=48000,cutoff=0",
            "cyl",
            "cyl:k=3",
            "multiset:n=2",
            "lowpass",
        ] {
            assert!(text.parse::<RelationSpec>().is_err(), "{text}");
        }
    }

    #[test]
    fn multiset_sorts_bits() {
        assert_eq!(RelationSpec::Multiset.canonicalize(&s("0110")).unwrap(), s("0011"));
        let bytes = SymbolString::from_bytes(vec![0x81, 0x0f, 0x00]);
        assert_eq!(
            RelationSpec::Multiset.canonicalize(&bytes).unwrap(),
            SymbolString::from_bytes(vec![0x00, 0x00, 0x3f])
        );
        assert!(RelationSpec::Multiset.same_class(&s("0110"), &s("1001")).unwrap());
    }

    #[test]
    fn parity_classes() {
        assert!(RelationSpec::Parity.same_class(&s("01"), &s("10")).unwrap());
        assert!(!RelationSpec::Parity.same_class(&s("01"), &s("11")).unwrap());
        assert_eq!(RelationSpec::Parity.canonicalize(&s("0111")).unwrap(), s("1"));
    }

    #[test]
    fn prefix_cylinder_zero_pads() {
        let q = RelationSpec::PrefixCylinder(3);
        assert_eq!(q.canonicalize(&s("110111")).unwrap(), s("110000"));
        assert_eq!(q.canonicalize(&s("11")).unwrap(), s("11"));
    }

    #[test]
    fn encoding_checks() {
        let pcm = SymbolString::from_samples(&[1, 2]);
        assert!(matches!(
            RelationSpec::Multiset.canonicalize(&pcm),
            Err(Error::UnsupportedEncoding { .. })
        ));
        assert!(matches!(
            RelationSpec::BitDepth(4).canonicalize(&s("01")),
            Err(Error::UnsupportedEncoding { .. })
        ));
        assert_eq!(RelationSpec::Identity.canonicalize(&pcm).unwrap(), pcm);
    }

    #[test]
    fn bitdepth_keeps_top_bits() {
        let x = SymbolString::from_samples(&[0x1234, -1, 0x7FFF]);
        let q = RelationSpec::BitDepth(8).canonicalize(&x).unwrap();
        assert_eq!(q.samples().unwrap(), vec![0x1200, -256, 0x7F00]);
        let q16 = RelationSpec::BitDepth(16).canonicalize(&x).unwrap();
        assert_eq!(q16, x);
    }

    #[test]
    fn downsample_keeps_every_mth() {
        let x = SymbolString::from_samples(&[1, 2, 3, 4, 5, 6, 7]);
        let q = RelationSpec::Downsample(3).canonicalize(&x).unwrap();
        assert_eq!(q.samples().unwrap(), vec![1, 0, 0, 4, 0, 0, 7]);
    }

    #[test]
    fn bandlimit_leaves_dc_alone() {
        let x = SymbolString::from_samples(&[1000; 4]);
        for cutoff in [1, 100, 3000, 23_999] {
            let q = RelationSpec::Bandlimit {
                sample_rate_hz: 48_000,
                cutoff_hz: cutoff,
            };
            assert_eq!(q.canonicalize(&x).unwrap(), x);
        }
    }

    #[test]
    fn bandlimit_removes_tone_above_cutoff() {
        let rate = 48_000u32;
        let samples: Vec<i16> = (0..4800)
            .map(|i| {
                let t = i as f64 / rate as f64;
                (10_000.0 * (2.0 * std::f64::consts::PI * 0.4 * rate as f64 * t).sin()).round() as i16
            })
            .collect();
        let q = RelationSpec::Bandlimit {
            sample_rate_hz: rate,
            cutoff_hz: rate / 10,
        };
        let out = q.canonicalize(&SymbolString::from_samples(&samples)).unwrap();
        assert!(out.samples().unwrap().iter().all(|s| s.abs() <= 1));
    }

    #[test]
    fn bandlimit_accepts_odd_lengths() {
        let x = SymbolString::from_samples(&[5, -3, 200, 17, -90]);
        let q = RelationSpec::Bandlimit {
            sample_rate_hz: 8000,
            cutoff_hz: 1000,
        };
        let once = q.canonicalize(&x).unwrap();
        assert_eq!(once.samples().unwrap().len(), 5);
        assert_eq!(q.canonicalize(&once).unwrap(), once);
        assert!(q.canonicalize(&SymbolString::from_samples(&[])).unwrap().is_empty());
    }

    #[test]
    fn bandlimit_residual_within_rounding_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<i16> = (0..2000).map(|_| rng.random_range(-8000..8000)).collect();
        let out = SPEECH_BAND
            .canonicalize(&SymbolString::from_samples(&samples))
            .unwrap()
            .samples()
            .unwrap();
        let bound = out.len() as f64 * 0.5;
        assert!(spectrum_above(&out, 48_000, 3000).iter().all(|&m| m <= bound));
    }

    #[test]
    fn idempotent_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bit_relations = [
            RelationSpec::Identity,
            RelationSpec::Multiset,
            RelationSpec::Parity,
            RelationSpec::PrefixCylinder(5),
        ];
        let pcm_relations = [RelationSpec::BitDepth(5), RelationSpec::Downsample(3)];
        for _ in 0..1000 {
            let len = rng.random_range(0..40);
            let x = SymbolString::from_bits((0..len).map(|_| rng.random::<bool>()));
            let bytes = SymbolString::from_bytes((0..len).map(|_| rng.random::<u8>()).collect::<Vec<_>>());
            for q in &bit_relations {
                for input in [&x, &bytes] {
                    let once = q.canonicalize(input).unwrap();
                    assert_eq!(q.canonicalize(&once).unwrap(), once, "{q} on {input}");
                }
            }
            let pcm = SymbolString::from_samples(&(0..len).map(|_| rng.random::<i16>()).collect::<Vec<_>>());
            for q in &pcm_relations {
                let once = q.canonicalize(&pcm).unwrap();
                assert_eq!(q.canonicalize(&once).unwrap(), once, "{q}");
            }
        }
    }

    #[test]
    fn bandlimit_idempotent_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = RelationSpec::Bandlimit {
            sample_rate_hz: 8000,
            cutoff_hz: 1500,
        };
        for _ in 0..1000 {
            let len = rng.random_range(1..64);
            let x = SymbolString::from_samples(&(0..len).map(|_| rng.random::<i16>()).collect::<Vec<_>>());
            let once = q.canonicalize(&x).unwrap();
            assert_eq!(q.canonicalize(&once).unwrap(), once);
        }
    }

    #[test]
    fn class_cardinalities_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let universe = rng.random_range(1..=12);
            let x = SymbolString::from_bits((0..universe).map(|_| rng.random::<bool>()));
            let ones = x.count_ones() as u64;
            let n = rng.random_range(0..=universe);
            let cases = [
                (RelationSpec::Identity, 1),
                (RelationSpec::Multiset, binomial(universe as u64, ones)),
                (RelationSpec::Parity, 1 << (universe - 1)),
                (RelationSpec::PrefixCylinder(n), 1 << (universe - n)),
            ];
            for (q, expected) in cases {
                let class = q.enumerate_class(&x, universe).unwrap();
                assert_eq!(class.len() as u64, expected, "{q} on {x}");
                assert!(class.contains(&x));
                for y in &class {
                    assert!(q.same_class(&x, y).unwrap());
                }
                assert!(class.windows(2).all(|w| w[0].to_bit_string() < w[1].to_bit_string()));
            }
        }
    }

    #[test]
    fn worked_class_sizes() {
        assert_eq!(RelationSpec::Multiset.enumerate_class(&s("01101001"), 8).unwrap().len(), 70);
        assert_eq!(
            RelationSpec::PrefixCylinder(4).enumerate_class(&s("01101001"), 8).unwrap().len(),
            16
        );
        assert_eq!(RelationSpec::Identity.enumerate_class(&s("0110"), 4).unwrap(), vec![s("0110")]);
    }

    #[test]
    fn continuous_relations_are_not_enumerable() {
        assert!(matches!(
            SPEECH_BAND.enumerate_class(&s("01"), 2),
            Err(Error::NotEnumerable(_))
        ));
    }

    #[test]
    fn prefix_cylinders_partition_the_universe() {
        for universe in 0..=12usize {
            for n in 0..=universe {
                let q = RelationSpec::PrefixCylinder(n);
                let mut seen = std::collections::HashSet::new();
                let mut total = 0;
                for prefix in 0u32..(1 << n) {
                    let rep = code_to_bits(prefix << (universe - n), universe);
                    let class = q.enumerate_class(&rep, universe).unwrap();
                    total += class.len();
                    for y in class {
                        assert!(seen.insert(y.to_bit_string()), "classes overlap");
                    }
                }
                assert_eq!(total, 1 << universe);
            }
        }
    }
}
