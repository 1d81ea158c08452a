//! The toy self-delimiting machine.
//!
//! Programs are streams of 2-bit opcodes:
//!
//! ```text
//! 00          emit 0
//! 01          emit 1
//! 10 nnn b    emit b repeated (nnn + 2) times, nnn read high bit first
//! 11          halt
//! ```
//!
//! A program halts only if its last instruction is `11` and it consumes every
//! bit, so the set of halting programs is prefix-free.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::symbol::SymbolString;

pub const MACHINE_VERSION: &str = "toy-prefix-v1";

/// Longest output a [`Word`] can hold.
pub const MAX_WORD_BITS: usize = 64;

pub const LITERAL_BITS: u32 = 2;
pub const RUN_BITS: u32 = 6;
pub const HALT_BITS: u32 = 2;
pub const MIN_RUN: u8 = 2;
pub const MAX_RUN: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Literal(bool),
    Run { bit: bool, count: u8 },
    Halt,
}

impl Instruction {
    pub fn cost(self) -> u32 {
        match self {
            Instruction::Literal(_) => LITERAL_BITS,
            Instruction::Run { .. } => RUN_BITS,
            Instruction::Halt => HALT_BITS,
        }
    }

    /// Every non-halt instruction, in encoding order.
    pub fn emitting() -> impl Iterator<Item = Instruction> {
        let literals = [false, true].into_iter().map(Instruction::Literal);
        let runs = (0..16u8).map(|code| Instruction::Run {
            bit: code & 1 == 1,
            count: (code >> 1) + MIN_RUN,
        });
        literals.chain(runs)
    }

    pub fn encode(self) -> Vec<bool> {
        match self {
            Instruction::Literal(b) => vec![false, b],
            Instruction::Run { bit, count } => {
                let n = count - MIN_RUN;
                vec![true, false, n & 4 != 0, n & 2 != 0, n & 1 != 0, bit]
            }
            Instruction::Halt => vec![true, true],
        }
    }
}

/// A bit-string output of at most 64 symbols, stored left-aligned.
///
/// The derived ordering (aligned bits, then length) coincides with ordering by
/// `(packed hex, bit length)`, which is the sort order of exported tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    bits: u64,
    len: u8,
}

impl Word {
    pub const EMPTY: Word = Word { bits: 0, len: 0 };

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    pub fn bit(self, index: usize) -> bool {
        self.bits & (1u64 << (63 - index)) != 0
    }

    /// Appends `count` copies of `bit`; the caller guarantees the result fits.
    pub fn push_run(self, bit: bool, count: u8) -> Word {
        let len = self.len + count;
        debug_assert!(len as usize <= MAX_WORD_BITS);
        let mut bits = self.bits;
        if bit {
            let ones = if count == 64 { u64::MAX } else { (1u64 << count) - 1 };
            bits |= ones << (64 - len as u32);
        }
        Word { bits, len }
    }

    pub fn from_bits(bits: &[bool]) -> Result<Word> {
        if bits.len() > MAX_WORD_BITS {
            return Err(Error::Config(format!(
                "outputs longer than {MAX_WORD_BITS} bits are not supported"
            )));
        }
        Ok(bits.iter().fold(Word::EMPTY, |w, &b| w.push_run(b, 1)))
    }

    pub fn from_symbols(s: &SymbolString) -> Result<Word> {
        Word::from_bits(&s.bits().collect::<Vec<_>>())
    }

    pub fn to_symbols(self) -> SymbolString {
        SymbolString::from_bits((0..self.len()).map(|i| self.bit(i)))
    }

    /// Packed bytes, high bit first, zero padded.
    pub fn to_bytes(self) -> Vec<u8> {
        self.bits.to_be_bytes()[..self.len().div_ceil(8)].to_vec()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Word> {
        if len > MAX_WORD_BITS || bytes.len() != len.div_ceil(8) {
            return Err(Error::Config(format!(
                "{} bytes cannot hold a {len}-bit word",
                bytes.len()
            )));
        }
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        let mut bits = u64::from_be_bytes(buf);
        if len < 64 {
            bits &= !(u64::MAX >> len);
        }
        Ok(Word { bits, len: len as u8 })
    }

    /// Lexicographic comparison of the bit strings themselves.
    pub fn cmp_bitwise(self, other: Word) -> Ordering {
        let common = self.len.min(other.len) as u32;
        let mask = if common == 0 { 0 } else { u64::MAX << (64 - common) };
        (self.bits & mask)
            .cmp(&(other.bits & mask))
            .then(self.len.cmp(&other.len))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseStatus {
    Halting,
    Truncated,
    Overrun,
}

/// A candidate program together with the outcome of parsing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyProgram {
    pub bits: Vec<bool>,
    pub parse_status: ParseStatus,
}

impl ToyProgram {
    pub fn new(bits: Vec<bool>, max_output: usize) -> Self {
        let parse_status = match run_program(&bits, max_output) {
            Ok(_) => ParseStatus::Halting,
            Err(Error::Overrun(_)) => ParseStatus::Overrun,
            Err(_) => ParseStatus::Truncated,
        };
        Self { bits, parse_status }
    }
}

/// Runs `bits` on the toy machine.
pub fn run_program(bits: &[bool], max_output: usize) -> Result<Vec<bool>> {
    let mut output = Vec::new();
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[bool]> {
        let slice = bits.get(pos..pos + n).ok_or(Error::Truncated)?;
        pos += n;
        Ok(slice)
    };
    loop {
        let op = take(2)?;
        match (op[0], op[1]) {
            (false, b) => output.push(b),
            (true, false) => {
                let operand = take(4)?;
                let n = (operand[0] as usize) << 2 | (operand[1] as usize) << 1 | operand[2] as usize;
                output.extend(std::iter::repeat_n(operand[3], n + MIN_RUN as usize));
            }
            (true, true) => break,
        }
        if output.len() > max_output {
            return Err(Error::Overrun(max_output));
        }
    }
    if pos != bits.len() {
        return Err(Error::Overlong);
    }
    Ok(output)
}

/// Exact shortest-program length for `x`, by dynamic programming over the
/// output instead of program enumeration.
///
/// Every program is a sequence of literal/run blocks plus a halt, so the
/// optimum is a cheapest segmentation of `x` into blocks.
pub fn shortest_program_bits(x: &SymbolString) -> u64 {
    let bits: Vec<bool> = x.bits().collect();
    let mut cost = vec![0u64; bits.len() + 1];
    for i in 1..=bits.len() {
        let mut best = cost[i - 1] + LITERAL_BITS as u64;
        let mut run = 1;
        while run < MAX_RUN as usize && run < i && bits[i - 1 - run] == bits[i - 1] {
            run += 1;
            if run >= MIN_RUN as usize {
                best = best.min(cost[i - run] + RUN_BITS as u64);
            }
        }
        cost[i] = best;
    }
    cost[bits.len()] + HALT_BITS as u64
}
