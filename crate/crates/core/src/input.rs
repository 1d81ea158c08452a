//! Reading microstates from disk: raw bytes, `0`/`1` text, and 16-bit mono WAV.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::symbol::{Encoding, SymbolString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputFormat {
    Raw,
    Bits,
    Wav,
}

impl InputFormat {
    /// `.wav` → wav, `.bits` → bits, anything else → raw.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("wav") => InputFormat::Wav,
            Some("bits") => InputFormat::Bits,
            _ => InputFormat::Raw,
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(InputFormat::Raw),
            "bits" => Ok(InputFormat::Bits),
            "wav" => Ok(InputFormat::Wav),
            other => Err(Error::Config(format!("unknown input format {other:?}"))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Raw => "raw",
            InputFormat::Bits => "bits",
            InputFormat::Wav => "wav",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSource {
    pub path: PathBuf,
    pub format: InputFormat,
    pub decoded: SymbolString,
    /// Sample rate of WAV inputs.
    pub sample_rate: Option<u32>,
}

/// Loads `path`; `format` defaults to [`InputFormat::infer`].
pub fn load_input(path: &Path, format: Option<InputFormat>) -> Result<InputSource> {
    let format = format.unwrap_or_else(|| InputFormat::infer(path));
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (decoded, sample_rate) = decode(&bytes, format).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(InputSource {
        path: path.to_path_buf(),
        format,
        decoded,
        sample_rate,
    })
}

pub fn decode(bytes: &[u8], format: InputFormat) -> Result<(SymbolString, Option<u32>)> {
    match format {
        InputFormat::Raw => Ok((SymbolString::from_bytes(bytes.to_vec()), None)),
        InputFormat::Bits => parse_bits(bytes).map(|s| (s, None)),
        InputFormat::Wav => {
            let wav = parse_wav(bytes)?;
            Ok((SymbolString::from_samples(&wav.samples), Some(wav.sample_rate)))
        }
    }
}

fn parse_bits(bytes: &[u8]) -> Result<SymbolString> {
    let mut bits = Vec::new();
    for (offset, &b) in bytes.iter().enumerate() {
        match b {
            b'0' => bits.push(false),
            b'1' => bits.push(true),
            b if b.is_ascii_whitespace() => {}
            other => {
                return Err(Error::Format(format!(
                    "bits file has byte 0x{other:02x} at offset {offset}"
                )))
            }
        }
    }
    Ok(SymbolString::from_bits(bits))
}

/// Inverse of bits parsing: `0`/`1` characters and a trailing newline.
pub fn render_bits(s: &SymbolString) -> String {
    format!("{}\n", s.to_bit_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wav {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses RIFF/WAVE with a PCM (format 1), mono, 16-bit `fmt ` chunk.
pub fn parse_wav(bytes: &[u8]) -> Result<Wav> {
    let bad = |msg: String| Err(Error::Format(msg));
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return bad("missing RIFF header".into());
    }
    if &bytes[8..12] != b"WAVE" {
        return bad("RIFF form type is not WAVE".into());
    }
    let mut pos = 12;
    let mut sample_rate = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let Some(end) = body.checked_add(size).filter(|&e| e <= bytes.len()) else {
            return bad(format!(
                "chunk {:?} declares {size} bytes, only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - body
            ));
        };
        match id {
            b"fmt " => {
                if size < 16 {
                    return bad(format!("fmt chunk size={size} too small"));
                }
                let format = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let rate = u32_at(bytes, body + 4);
                let bits = u16_at(bytes, body + 14);
                if format != 1 {
                    return bad(format!("format={format} unsupported (PCM=1 required)"));
                }
                if channels != 1 {
                    return bad(format!("channels={channels} unsupported"));
                }
                if bits != 16 {
                    return bad(format!("bits_per_sample={bits} unsupported"));
                }
                sample_rate = Some(rate);
            }
            b"data" => {
                let Some(sample_rate) = sample_rate else {
                    return bad("data chunk before fmt chunk".into());
                };
                if !size.is_multiple_of(2) {
                    return bad(format!("data size={size} is not a whole number of samples"));
                }
                let samples = bytes[body..end]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]))
                    .collect();
                return Ok(Wav { sample_rate, samples });
            }
            _ => {}
        }
        // Chunks are word aligned.
        pos = end + (size & 1);
    }
    bad("no data chunk".into())
}

/// Canonical 44-byte-header mono 16-bit PCM WAV.
pub fn write_wav(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Serializes `s` in the given on-disk format.
pub fn encode(s: &SymbolString, format: InputFormat, sample_rate: Option<u32>) -> Result<Vec<u8>> {
    match format {
        InputFormat::Raw => Ok(s.payload().to_vec()),
        InputFormat::Bits => Ok(render_bits(s).into_bytes()),
        InputFormat::Wav => {
            let samples = s.samples().ok_or_else(|| {
                Error::Format(format!("cannot write {} data as wav", s.encoding()))
            })?;
            let rate = sample_rate.ok_or_else(|| Error::Format("wav output needs a sample rate".into()))?;
            Ok(write_wav(&samples, rate))
        }
    }
}

/// Encoding a format decodes to.
pub fn encoding_of(format: InputFormat) -> Encoding {
    match format {
        InputFormat::Raw => Encoding::Bytes,
        InputFormat::Bits => Encoding::Bits,
        InputFormat::Wav => Encoding::Pcm16Mono,
    }
}
