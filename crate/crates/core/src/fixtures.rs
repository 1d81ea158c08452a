//! Seeded synthetic data: byte and bit strings, the speech-band test signal,
//! and the two-band tone corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::symbol::SymbolString;

pub const SAMPLE_RATE: u32 = 48_000;

/// Out-of-band noise occupies frequencies at or above this.
pub const NOISE_FLOOR_HZ: f64 = 3_500.0;

/// Tone frequencies sit on this grid.
pub const GRID_HZ: f64 = 50.0;

/// Every grid tone repeats within this many samples at 48 kHz.
const PHASE_SAMPLES: u32 = 960;

pub const LOW_LABEL: &str = "LOW";
pub const HIGH_LABEL: &str = "HIGH";

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bytes(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = rng(seed);
    (0..n).map(|_| rng.random()).collect()
}

pub fn random_bits(seed: u64, n: usize) -> SymbolString {
    let mut rng = rng(seed);
    SymbolString::from_bits((0..n).map(|_| rng.random::<bool>()).collect::<Vec<_>>())
}

pub fn constant_bytes(byte: u8, n: usize) -> Vec<u8> {
    vec![byte; n]
}

/// Words drawn from a six-word vocabulary, cut to `n` bytes.
pub fn text_like(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = rng(seed);
    let words = [&b"alpha "[..], b"beta ", b"gamma ", b"delta ", b"epsilon ", b"zeta "];
    let mut out = Vec::with_capacity(n + 8);
    while out.len() < n {
        out.extend_from_slice(words[rng.random_range(0..words.len())]);
    }
    out.truncate(n);
    out
}

fn tone(n: usize, freq_hz: f64, amplitude: f64, phase: f64) -> Vec<f64> {
    let w = std::f64::consts::TAU * freq_hz / SAMPLE_RATE as f64;
    (0..n).map(|i| amplitude * (w * i as f64 + phase).sin()).collect()
}

/// Gaussian noise with every component below `min_hz` removed, scaled to RMS `rms`.
pub fn high_passed_noise(rng: &mut ChaCha8Rng, n: usize, min_hz: f64, rms: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(normal.sample(rng), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, bin) in buf.iter_mut().enumerate() {
        let freq = k.min(n - k) as f64 * SAMPLE_RATE as f64 / n as f64;
        if freq < min_hz {
            *bin = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let noise: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let actual = (noise.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if actual == 0.0 {
        return noise;
    }
    noise.iter().map(|v| v * rms / actual).collect()
}

fn to_pcm(signal: &[f64]) -> Vec<i16> {
    signal
        .iter()
        .map(|v| v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect()
}

/// One second of a 200 Hz sine (amplitude 8000) plus noise above 3.5 kHz
/// (RMS 2000), at 48 kHz.
pub fn sine_plus_hf_noise(seed: u64) -> Vec<i16> {
    let n = SAMPLE_RATE as usize;
    let mut rng = rng(seed);
    let noise = high_passed_noise(&mut rng, n, NOISE_FLOOR_HZ, 2_000.0);
    let signal: Vec<f64> = tone(n, 200.0, 8_000.0, 0.0).iter().zip(&noise).map(|(a, b)| a + b).collect();
    to_pcm(&signal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBandConfig {
    pub per_class: usize,
    /// Samples per exemplar.
    pub samples: usize,
    pub tone_amplitude: f64,
    /// Tone power over out-of-band noise power, in dB.
    pub snr_db: f64,
}

impl Default for TwoBandConfig {
    fn default() -> Self {
        Self {
            per_class: 20,
            samples: 9_600,
            tone_amplitude: 3_000.0,
            snr_db: -10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticExemplar {
    pub label: &'static str,
    pub name: String,
    pub frequency_hz: f64,
    pub samples: Vec<i16>,
}

/// LOW exemplars carry a 200-400 Hz tone, HIGH exemplars a 5-6 kHz tone; both
/// are buried in noise above 3.5 kHz.
pub fn two_band_corpus(seed: u64, config: &TwoBandConfig) -> Vec<SyntheticExemplar> {
    let mut rng = rng(seed);
    let tone_power = config.tone_amplitude * config.tone_amplitude / 2.0;
    let noise_rms = (tone_power / 10f64.powf(config.snr_db / 10.0)).sqrt();
    let mut out = Vec::with_capacity(2 * config.per_class);
    for (label, lo, hi) in [(LOW_LABEL, 200.0, 400.0), (HIGH_LABEL, 5_000.0, 6_000.0)] {
        let steps = ((hi - lo) / GRID_HZ) as u32;
        for i in 0..config.per_class {
            let freq = lo + GRID_HZ * rng.random_range(0..=steps) as f64;
            // A whole-sample delay: tones of one frequency are cyclic shifts
            // of each other.
            let delay = rng.random_range(0..PHASE_SAMPLES) as f64;
            let phase = std::f64::consts::TAU * freq * delay / SAMPLE_RATE as f64;
            let noise = high_passed_noise(&mut rng, config.samples, NOISE_FLOOR_HZ, noise_rms);
            let signal: Vec<f64> = tone(config.samples, freq, config.tone_amplitude, phase)
                .iter()
                .zip(&noise)
                .map(|(a, b)| a + b)
                .collect();
            out.push(SyntheticExemplar {
                label,
                name: format!("{}_{i:02}.wav", label.to_ascii_lowercase()),
                frequency_hz: freq,
                samples: to_pcm(&signal),
            });
        }
    }
    out
}
