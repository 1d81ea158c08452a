//! Code-length providers standing in for K.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::thread;

use crate::error::{Error, Result};
use crate::symbol::{Compressor, SymbolString};

/// Default cap on external compressor output, in bytes.
pub const DEFAULT_OUTPUT_CAP: usize = 256 << 20;

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// One LZ78 phrase: a dictionary reference plus an optional new byte.
/// Only the trailing phrase may lack the byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Phrase {
    pub prefix: u32,
    pub byte: Option<u8>,
}

/// LZ78 parse of `data`: longest dictionary match plus one new byte per phrase.
pub(crate) fn lz78_phrases(data: &[u8]) -> Vec<Phrase> {
    // Trie edges keyed by (node, byte); node 0 is the empty phrase.
    let mut children: HashMap<(u32, u8), u32> = HashMap::new();
    let mut next_index = 1u32;
    let mut current = 0u32;
    let mut phrases = Vec::new();
    for &byte in data {
        match children.get(&(current, byte)) {
            Some(&child) => current = child,
            None => {
                children.insert((current, byte), next_index);
                phrases.push(Phrase {
                    prefix: current,
                    byte: Some(byte),
                });
                next_index += 1;
                current = 0;
            }
        }
    }
    if current != 0 {
        phrases.push(Phrase {
            prefix: current,
            byte: None,
        });
    }
    phrases
}

/// Exact LZ78 code length in bits.
///
/// Phrase `i` (1-based) costs `ceil(log2 i)` index bits plus 8 literal bits.
/// A trailing phrase that is already in the dictionary costs only its index,
/// sized by the next free index.
pub fn lz78_length(data: &[u8]) -> u64 {
    lz78_phrases(data)
        .iter()
        .enumerate()
        .map(|(i, phrase)| ceil_log2(i as u64 + 1) + if phrase.byte.is_some() { 8 } else { 0 })
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Lz78;

impl Compressor for Lz78 {
    fn name(&self) -> String {
        "lz78".into()
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        Ok(lz78_length(data.payload()) as f64)
    }
}

/// An external filter program: bytes in on stdin, compressed bytes out on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCompressor {
    pub command: Vec<String>,
    pub output_cap: usize,
}

impl ExternalCompressor {
    pub fn new(command: Vec<String>) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::Config("external compressor command is empty".into()));
        }
        Ok(Self {
            command,
            output_cap: DEFAULT_OUTPUT_CAP,
        })
    }

    pub fn with_output_cap(mut self, cap: usize) -> Self {
        self.output_cap = cap;
        self
    }

    /// 8 × the number of bytes the filter writes for `data`.
    pub fn external_length(&self, data: &[u8]) -> Result<u64> {
        let tool_err = |msg: String| Error::ExternalTool(format!("{}: {msg}", self.command.join(" ")));
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| tool_err(format!("launch failed: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = data.to_vec();
        let writer = thread::spawn(move || {
            // A filter may exit early; a broken pipe then surfaces through its status.
            let _ = stdin.write_all(&input);
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let reader = thread::spawn(move || {
            let mut diag = Vec::new();
            let _ = stderr.read_to_end(&mut diag);
            diag
        });

        let stdout = child.stdout.take().expect("piped stdout");
        let mut counted = 0usize;
        let mut buf = [0u8; 1 << 16];
        let mut stdout = stdout;
        let mut over_cap = false;
        loop {
            let n = stdout.read(&mut buf).map_err(|e| tool_err(format!("read failed: {e}")))?;
            if n == 0 {
                break;
            }
            counted += n;
            if counted > self.output_cap {
                over_cap = true;
                let _ = child.kill();
                break;
            }
        }
        drop(stdout);
        let status = child.wait().map_err(|e| tool_err(format!("wait failed: {e}")))?;
        let _ = writer.join();
        let diag = reader.join().unwrap_or_default();
        let diag = String::from_utf8_lossy(&diag).trim().to_string();
        if over_cap {
            return Err(tool_err(format!("output exceeds cap of {} bytes", self.output_cap)));
        }
        if !status.success() {
            return Err(tool_err(format!("exited with {status}; stderr: {diag}")));
        }
        Ok(8 * counted as u64)
    }
}

impl Compressor for ExternalCompressor {
    fn name(&self) -> String {
        format!("ext:{}", self.command.join(" "))
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        self.external_length(data.payload()).map(|bits| bits as f64)
    }
}

/// Textual compressor choice: `lz78` or `ext:<command line>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompressorSpec {
    Lz78,
    External(Vec<String>),
}

impl CompressorSpec {
    pub fn build(&self) -> Result<Box<dyn Compressor>> {
        Ok(match self {
            CompressorSpec::Lz78 => Box::new(Lz78),
            CompressorSpec::External(cmd) => Box::new(ExternalCompressor::new(cmd.clone())?),
        })
    }
}

impl FromStr for CompressorSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        if text == "lz78" {
            return Ok(CompressorSpec::Lz78);
        }
        match text.strip_prefix("ext:") {
            Some(cmd) => {
                let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    Err(Error::Config("ext: needs a command line".into()))
                } else {
                    Ok(CompressorSpec::External(argv))
                }
            }
            None => Err(Error::Config(format!("unknown compressor {text:?}"))),
        }
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressorSpec::Lz78 => f.write_str("lz78"),
            CompressorSpec::External(cmd) => write!(f, "ext:{}", cmd.join(" ")),
        }
    }
}
