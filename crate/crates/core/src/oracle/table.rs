use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use super::dyadic::Dyadic;
use super::machine::{run_program, Instruction, Word, HALT_BITS, MACHINE_VERSION, MAX_WORD_BITS};
use crate::error::{Error, Result};

pub const MIN_PROGRAM_BITS: u32 = 2;
pub const MAX_PROGRAM_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableEntry {
    pub min_program_bits: u32,
    /// Σ 2^-|p| over halting programs of at most L bits with this output.
    pub mass: Dyadic,
}

/// Exact enumeration results for all halting programs of at most `max_program_bits` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationTable {
    max_program_bits: u32,
    max_output: usize,
    entries: BTreeMap<Word, TableEntry>,
    total_mass: Dyadic,
}

/// Per-output accumulator: shortest length and mass numerator over `2^L`.
type Partial = HashMap<Word, (u32, u64)>;

fn record(acc: &mut Partial, output: Word, bits: u32, limit: u32) {
    let weight = 1u64 << (limit - bits);
    acc.entry(output)
        .and_modify(|(min, mass)| {
            *min = (*min).min(bits);
            *mass += weight;
        })
        .or_insert((bits, weight));
}

fn explore(acc: &mut Partial, used: u32, output: Word, limit: u32, max_output: usize) {
    if used + HALT_BITS <= limit {
        record(acc, output, used + HALT_BITS, limit);
    }
    for ins in Instruction::emitting() {
        let next = used + ins.cost();
        // Any continuation still needs a halt.
        if next + HALT_BITS > limit {
            continue;
        }
        let word = match ins {
            Instruction::Literal(b) => (output.len() < max_output).then(|| output.push_run(b, 1)),
            Instruction::Run { bit, count } => {
                (output.len() + count as usize <= max_output).then(|| output.push_run(bit, count))
            }
            Instruction::Halt => unreachable!(),
        };
        if let Some(word) = word {
            explore(acc, next, word, limit, max_output);
        }
    }
}

fn check_range(limit: u32, max_output: usize) -> Result<()> {
    if !(MIN_PROGRAM_BITS..=MAX_PROGRAM_BITS).contains(&limit) {
        return Err(Error::Config(format!(
            "L={limit} outside {MIN_PROGRAM_BITS}..={MAX_PROGRAM_BITS}"
        )));
    }
    if max_output > MAX_WORD_BITS {
        return Err(Error::Config(format!(
            "max_output={max_output} exceeds {MAX_WORD_BITS}"
        )));
    }
    Ok(())
}

impl EnumerationTable {
    /// Enumerates every halting program of at most `limit` bits whose output
    /// has at most `max_output` symbols.
    ///
    /// The program space is split by first instruction; subtrees are walked
    /// in parallel and merged by (min, +), which is order-independent.
    pub fn enumerate(limit: u32, max_output: usize) -> Result<Self> {
        check_range(limit, max_output)?;
        let mut roots: Vec<Option<Instruction>> = vec![None];
        roots.extend(Instruction::emitting().map(Some));
        let merged = roots
            .into_par_iter()
            .map(|root| {
                let mut acc = Partial::new();
                match root {
                    None => record(&mut acc, Word::EMPTY, HALT_BITS, limit),
                    Some(ins) => {
                        let count = match ins {
                            Instruction::Literal(_) => 1,
                            Instruction::Run { count, .. } => count as usize,
                            Instruction::Halt => unreachable!(),
                        };
                        if ins.cost() + HALT_BITS <= limit && count <= max_output {
                            let word = match ins {
                                Instruction::Literal(b) => Word::EMPTY.push_run(b, 1),
                                Instruction::Run { bit, count } => Word::EMPTY.push_run(bit, count),
                                Instruction::Halt => unreachable!(),
                            };
                            explore(&mut acc, ins.cost(), word, limit, max_output);
                        }
                    }
                }
                acc
            })
            .reduce(Partial::new, |mut left, right| {
                for (word, (min, mass)) in right {
                    left.entry(word)
                        .and_modify(|(m, s)| {
                            *m = (*m).min(min);
                            *s += mass;
                        })
                        .or_insert((min, mass));
                }
                left
            });
        Ok(Self::from_partial(limit, max_output, merged))
    }

    /// Builds the same table by running every bit string of length at most
    /// `limit` through the machine. Exponential; used as an independent check.
    pub fn scan(limit: u32, max_output: usize) -> Result<Self> {
        check_range(limit, max_output)?;
        let mut acc = Partial::new();
        for (bits, output) in halting_programs(limit, max_output) {
            record(&mut acc, Word::from_bits(&output)?, bits.len() as u32, limit);
        }
        Ok(Self::from_partial(limit, max_output, acc))
    }

    fn from_partial(limit: u32, max_output: usize, partial: Partial) -> Self {
        let entries: BTreeMap<Word, TableEntry> = partial
            .into_iter()
            .map(|(word, (min, mass))| {
                (
                    word,
                    TableEntry {
                        min_program_bits: min,
                        mass: Dyadic::new(mass as u128, limit),
                    },
                )
            })
            .collect();
        let total_mass = entries.values().map(|e| e.mass).sum();
        Self {
            max_program_bits: limit,
            max_output,
            entries,
            total_mass,
        }
    }

    pub fn max_program_bits(&self) -> u32 {
        self.max_program_bits
    }

    pub fn max_output(&self) -> usize {
        self.max_output
    }

    pub fn total_mass(&self) -> Dyadic {
        self.total_mass
    }

    pub fn get(&self, output: Word) -> Option<&TableEntry> {
        self.entries.get(&output)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (Word, &TableEntry)> {
        self.entries.iter().map(|(w, e)| (*w, e))
    }

    /// Line-oriented export: a header, then `output_hex bitlen min_bits mass_num mass_exp`
    /// per entry, sorted by `(output_hex, bitlen)`. The empty output is written as `-`.
    pub fn export(&self) -> String {
        let mut out = format!(
            "# machine={MACHINE_VERSION} L={} max_output={}\n",
            self.max_program_bits, self.max_output
        );
        for (word, entry) in &self.entries {
            let hex: String = word.to_bytes().iter().map(|b| format!("{b:02x}")).collect();
            let hex = if hex.is_empty() { "-".to_string() } else { hex };
            let _ = writeln!(
                out,
                "{hex} {} {} {} {}",
                word.len(),
                entry.min_program_bits,
                entry.mass.numerator(),
                entry.mass.exponent()
            );
        }
        out
    }

    pub fn import(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::TableParse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let mut machine = None;
        let mut limit = None;
        let mut max_output = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("machine", v)) => machine = Some(v.to_string()),
                Some(("L", v)) => limit = v.parse::<u32>().ok(),
                Some(("max_output", v)) => max_output = v.parse::<usize>().ok(),
                _ => return Err(err(1, format!("unexpected header field {field:?}"))),
            }
        }
        if machine.as_deref() != Some(MACHINE_VERSION) {
            return Err(err(1, format!("unsupported machine {machine:?}")));
        }
        let limit = limit.ok_or_else(|| err(1, "missing L".into()))?;
        let max_output = max_output.ok_or_else(|| err(1, "missing max_output".into()))?;
        check_range(limit, max_output).map_err(|e| err(1, e.to_string()))?;

        let mut entries = BTreeMap::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [hex, bitlen, min_bits, num, exp] = fields[..] else {
                return Err(err(lineno, format!("expected 5 fields, got {}", fields.len())));
            };
            let parse = |s: &str| s.parse::<u128>().map_err(|e| err(lineno, format!("{s:?}: {e}")));
            let bitlen = parse(bitlen)? as usize;
            let bytes = if hex == "-" {
                Vec::new()
            } else {
                (0..hex.len())
                    .step_by(2)
                    .map(|i| {
                        hex.get(i..i + 2)
                            .and_then(|h| u8::from_str_radix(h, 16).ok())
                            .ok_or_else(|| err(lineno, format!("bad hex {hex:?}")))
                    })
                    .collect::<Result<Vec<u8>>>()?
            };
            let word = Word::from_bytes(&bytes, bitlen).map_err(|e| err(lineno, e.to_string()))?;
            let entry = TableEntry {
                min_program_bits: parse(min_bits)? as u32,
                mass: Dyadic::new(parse(num)?, parse(exp)? as u32),
            };
            if entries.insert(word, entry).is_some() {
                return Err(err(lineno, format!("duplicate output {word}")));
            }
        }
        let total_mass = entries.values().map(|e| e.mass).sum();
        Ok(Self {
            max_program_bits: limit,
            max_output,
            entries,
            total_mass,
        })
    }
}

/// Every halting program of at most `limit` bits and its output, found by
/// running all `2^(limit+1) - 1` bit strings.
pub fn halting_programs(limit: u32, max_output: usize) -> Vec<(Vec<bool>, Vec<bool>)> {
    let mut found = Vec::new();
    for len in 0..=limit {
        for code in 0u64..(1u64 << len) {
            let bits: Vec<bool> = (0..len).rev().map(|i| code >> i & 1 == 1).collect();
            if let Ok(output) = run_program(&bits, max_output) {
                found.push((bits, output));
            }
        }
    }
    found
}
