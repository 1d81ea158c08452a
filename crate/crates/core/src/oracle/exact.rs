use std::sync::Arc;

use super::dyadic::Dyadic;
use super::machine::{shortest_program_bits, Word};
use super::table::EnumerationTable;
use crate::error::{Error, Result};
use crate::symbol::{Compressor, EquivalenceRelation, SymbolString};

fn lookup(x: &SymbolString, table: &EnumerationTable) -> Result<(Word, super::table::TableEntry)> {
    let word = Word::from_symbols(x)?;
    table
        .get(word)
        .map(|e| (word, *e))
        .ok_or_else(|| Error::NotReached(word.to_string(), table.max_program_bits()))
}

/// C(X) = K(X) on the toy machine, read from the table.
pub fn exact_complexity(x: &SymbolString, table: &EnumerationTable) -> Result<u32> {
    Ok(lookup(x, table)?.1.min_program_bits)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalProbability {
    /// Truncated Σ 2^-|p| over programs printing X.
    pub mass: Dyadic,
    /// 2^-C(X), the shortest program's share.
    pub first_order: Dyadic,
    /// mass / first_order, always ≥ 1.
    pub ratio: f64,
}

pub fn universal_probability(x: &SymbolString, table: &EnumerationTable) -> Result<UniversalProbability> {
    let (_, entry) = lookup(x, table)?;
    let first_order = Dyadic::pow2_neg(entry.min_program_bits);
    Ok(UniversalProbability {
        mass: entry.mass,
        first_order,
        ratio: entry.mass.to_f64() / first_order.to_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacroComplexity {
    /// S(X/P) with the lexicographically first minimizing class member.
    Exact { bits: u32, witness: SymbolString },
    /// No class member is produced by a program of at most L bits, so S(X/P) ≥ `bits`.
    LowerBound { bits: u32 },
}

impl MacroComplexity {
    pub fn exact_bits(&self) -> Option<u32> {
        match self {
            MacroComplexity::Exact { bits, .. } => Some(*bits),
            MacroComplexity::LowerBound { .. } => None,
        }
    }
}

fn class_members(
    x: &SymbolString,
    relation: &dyn EquivalenceRelation,
    universe_bits: usize,
) -> Result<Vec<SymbolString>> {
    if x.bit_length() != universe_bits {
        return Err(Error::Config(format!(
            "{x} has {} bits, universe is {universe_bits}",
            x.bit_length()
        )));
    }
    relation.enumerate_class(x, universe_bits)
}

/// S(X/P) = min over Y ~ X of C(Y).
pub fn exact_macrocomplexity(
    x: &SymbolString,
    relation: &dyn EquivalenceRelation,
    universe_bits: usize,
    table: &EnumerationTable,
) -> Result<MacroComplexity> {
    let mut best: Option<(u32, Word)> = None;
    for member in class_members(x, relation, universe_bits)? {
        let word = Word::from_symbols(&member)?;
        if let Some(entry) = table.get(word) {
            let better = match best {
                None => true,
                Some((bits, w)) => {
                    entry.min_program_bits < bits
                        || (entry.min_program_bits == bits && word.cmp_bitwise(w).is_lt())
                }
            };
            if better {
                best = Some((entry.min_program_bits, word));
            }
        }
    }
    Ok(match best {
        Some((bits, witness)) => MacroComplexity::Exact {
            bits,
            witness: witness.to_symbols(),
        },
        // Programs have even length, but only "more than L" is certain.
        None => MacroComplexity::LowerBound {
            bits: table.max_program_bits() + 1,
        },
    })
}

/// Independent route to S(X/P): scan a list of (program length, output)
/// pairs and keep those whose output is equivalent to X.
pub fn scanned_macrocomplexity(
    x: &SymbolString,
    relation: &dyn EquivalenceRelation,
    programs: &[(u32, SymbolString)],
) -> Result<Option<u32>> {
    let target = relation.canonical_form(x)?;
    let mut best = None;
    for (bits, output) in programs {
        if output.bit_length() == x.bit_length() && relation.canonical_form(output)? == target {
            best = Some(best.map_or(*bits, |b: u32| b.min(*bits)));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassProbability {
    /// Σ over class members of U(X_i).
    pub by_members: Dyadic,
    /// Σ over table outputs that fall in the class.
    pub by_outputs: Dyadic,
    /// Class size.
    pub members: usize,
    /// Members not produced by any program of at most L bits.
    pub unreached: usize,
}

impl ClassProbability {
    pub fn consistent(&self) -> bool {
        self.by_members == self.by_outputs
    }
}

/// U(X,P), computed both as a sum over class members and as a sum over all
/// table outputs that land in the class.
pub fn class_universal_probability(
    x: &SymbolString,
    relation: &dyn EquivalenceRelation,
    universe_bits: usize,
    table: &EnumerationTable,
) -> Result<ClassProbability> {
    let members = class_members(x, relation, universe_bits)?;
    let mut by_members = Dyadic::ZERO;
    let mut unreached = 0;
    for member in &members {
        match table.get(Word::from_symbols(member)?) {
            Some(entry) => by_members = by_members + entry.mass,
            None => unreached += 1,
        }
    }
    let target = relation.canonical_form(x)?;
    let mut by_outputs = Dyadic::ZERO;
    for (word, entry) in table.entries() {
        if word.len() == universe_bits && relation.canonical_form(&word.to_symbols())? == target {
            by_outputs = by_outputs + entry.mass;
        }
    }
    Ok(ClassProbability {
        by_members,
        by_outputs,
        members: members.len(),
        unreached,
    })
}

/// Exact toy-machine complexity as a [`Compressor`], computed by dynamic
/// programming so it works for strings of any length.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyMachineCompressor;

impl Compressor for ToyMachineCompressor {
    fn name(&self) -> String {
        "toy-exact".into()
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        Ok(shortest_program_bits(data) as f64)
    }
}

/// Table lookups as a [`Compressor`]; strings the table has not reached are errors.
#[derive(Debug, Clone)]
pub struct TableCompressor(pub Arc<EnumerationTable>);

impl Compressor for TableCompressor {
    fn name(&self) -> String {
        format!("toy-table:L={}", self.0.max_program_bits())
    }

    fn code_length(&self, data: &SymbolString) -> Result<f64> {
        exact_complexity(data, &self.0).map(f64::from)
    }
}

/// Exact conditional complexity of the joined canonical forms,
/// C(q(A) ‖ SEP ‖ q(B)) − C(q(B)), from the table.
pub fn exact_conditional(
    a: &SymbolString,
    b: &SymbolString,
    relation: &dyn EquivalenceRelation,
    table: &EnumerationTable,
) -> Result<i64> {
    let qa = relation.canonical_form(a)?;
    let qb = relation.canonical_form(b)?;
    let joined = crate::symbol::join_for_conditional(&qa, &qb)?;
    Ok(exact_complexity(&joined, table)? as i64 - exact_complexity(&qb, table)? as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizers::RelationSpec;

    fn s(bits: &str) -> SymbolString {
        SymbolString::from_bit_str(bits).unwrap()
    }

    #[test]
    fn worked_complexities() {
        let table = EnumerationTable::enumerate(18, 64).unwrap();
        assert_eq!(exact_complexity(&s(""), &table).unwrap(), 2);
        assert_eq!(exact_complexity(&s("0"), &table).unwrap(), 4);
        assert_eq!(exact_complexity(&s("00000000"), &table).unwrap(), 8);
        assert_eq!(exact_complexity(&s("01101001"), &table).unwrap(), 18);
    }

    #[test]
    fn unreached_string_is_an_error() {
        let table = EnumerationTable::enumerate(6, 64).unwrap();
        assert!(matches!(
            exact_complexity(&s("0101"), &table),
            Err(Error::NotReached(_, 6))
        ));
    }

    #[test]
    fn universal_probability_of_empty_and_zero() {
        for limit in [2, 6, 12] {
            let table = EnumerationTable::enumerate(limit, 64).unwrap();
            assert_eq!(universal_probability(&s(""), &table).unwrap().mass, Dyadic::pow2_neg(2));
        }
        let table = EnumerationTable::enumerate(6, 64).unwrap();
        let u = universal_probability(&s("0"), &table).unwrap();
        assert_eq!(u.mass, Dyadic::pow2_neg(4));
        assert_eq!(u.ratio, 1.0);
    }

    #[test]
    fn probability_ratio_at_least_one() {
        let table = EnumerationTable::enumerate(16, 64).unwrap();
        for (word, _) in table.entries() {
            let u = universal_probability(&word.to_symbols(), &table).unwrap();
            assert!(u.mass >= u.first_order);
            assert!(u.ratio >= 1.0);
        }
    }

    #[test]
    fn identity_macrocomplexity_is_complexity() {
        let table = EnumerationTable::enumerate(16, 64).unwrap();
        let x = s("00110");
        let m = exact_macrocomplexity(&x, &RelationSpec::Identity, 5, &table).unwrap();
        assert_eq!(m.exact_bits(), Some(exact_complexity(&x, &table).unwrap()));
    }

    #[test]
    fn multiset_four_ones() {
        let table = EnumerationTable::enumerate(18, 64).unwrap();
        let m = exact_macrocomplexity(&s("01101001"), &RelationSpec::Multiset, 8, &table).unwrap();
        assert_eq!(
            m,
            MacroComplexity::Exact {
                bits: 14,
                witness: s("00001111")
            }
        );
    }

    #[test]
    fn unreachable_class_gives_lower_bound() {
        let table = EnumerationTable::enumerate(4, 64).unwrap();
        let m = exact_macrocomplexity(&s("0110"), &RelationSpec::Identity, 4, &table).unwrap();
        assert_eq!(m, MacroComplexity::LowerBound { bits: 5 });
    }

    #[test]
    fn universe_must_match_length() {
        let table = EnumerationTable::enumerate(8, 64).unwrap();
        assert!(exact_macrocomplexity(&s("01"), &RelationSpec::Multiset, 3, &table).is_err());
    }

    #[test]
    fn class_probability_of_single_symbols() {
        let table = EnumerationTable::enumerate(6, 64).unwrap();
        let p = class_universal_probability(&s("0"), &RelationSpec::Multiset, 1, &table).unwrap();
        assert_eq!(p.by_members, Dyadic::pow2_neg(4));
        let p = class_universal_probability(&s("0"), &RelationSpec::PrefixCylinder(0), 1, &table).unwrap();
        assert_eq!(p.by_members, Dyadic::pow2_neg(3));
        assert!(p.consistent());
        assert_eq!(p.members, 2);
    }

    #[test]
    fn class_probability_dominates_member_probability() {
        let table = EnumerationTable::enumerate(16, 64).unwrap();
        for code in 0u32..64 {
            let x = SymbolString::from_bits((0..6).rev().map(|i| code >> i & 1 == 1));
            let Ok(u) = universal_probability(&x, &table) else { continue };
            for rel in [RelationSpec::Multiset, RelationSpec::Parity, RelationSpec::PrefixCylinder(2)] {
                let p = class_universal_probability(&x, &rel, 6, &table).unwrap();
                assert!(p.consistent());
                assert!(p.by_members >= u.mass);
            }
        }
    }

    #[test]
    fn dp_agrees_with_table() {
        let table = EnumerationTable::enumerate(22, 64).unwrap();
        for len in 0..=10 {
            for code in 0u32..(1 << len) {
                let x = SymbolString::from_bits((0..len).rev().map(|i| code >> i & 1 == 1));
                let dp = shortest_program_bits(&x);
                assert_eq!(exact_complexity(&x, &table).unwrap() as u64, dp, "{x}");
            }
        }
    }
}
