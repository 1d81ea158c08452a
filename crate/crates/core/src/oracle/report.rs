//! Exact check of the entropy relation `log2|X/P| ≈ C(X) − S(X/P)` over a
//! whole universe of strings.

use std::collections::HashSet;

use serde::Serialize;

use super::exact::{class_universal_probability, exact_macrocomplexity, MacroComplexity};
use super::machine::Word;
use super::table::EnumerationTable;
use crate::error::{Error, Result};
use crate::quantizers::code_to_bits;
use crate::symbol::EquivalenceRelation;

/// A member is typical when `U(X|X/P)` is within this factor of `1/|X/P|`.
pub const DEFAULT_TYPICALITY: f64 = 4.0;

/// `U(X)/2^-C(X)` above this marks a member whose mass is not dominated by
/// its shortest program.
const DEEP_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct MemberReport {
    pub member: String,
    /// C(X); `None` when no program of at most L bits prints X.
    pub complexity_bits: Option<u32>,
    /// Δ = log2|X/P| − (C(X) − S(X/P)).
    pub residual_bits: Option<f64>,
    /// U(X|X/P) = U(X)/U(X,P).
    pub conditional_probability: Option<f64>,
    pub typical: bool,
    /// U(X)/2^-C(X).
    pub probability_ratio: Option<f64>,
    /// C(X) − |X|.
    pub randomness_deficiency_bits: Option<f64>,
    /// C(X) − S(X/P) − |X|, the prediction for the length-normalized entropy.
    pub normalized_prediction_bits: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub representative: String,
    pub cardinality: usize,
    pub log2_cardinality: f64,
    /// log2(|X/P| / 2^|X|).
    pub normalized_entropy_bits: f64,
    pub macrocomplexity_bits: Option<u32>,
    pub witness: Option<String>,
    /// Σ = (log2|X/P| − |X|) + S(X/P), to compare against C(X) − |X|.
    pub total_information_bits: Option<f64>,
    /// log2|X/P| + S(X/P), the unshifted counterpart, to compare against C(X).
    pub total_information_unshifted_bits: Option<f64>,
    pub class_probability: String,
    pub sum_identity_holds: bool,
    pub partial: bool,
    pub members: Vec<MemberReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

impl ResidualStats {
    fn from_values(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            (values[n / 2 - 1] + values[n / 2]) / 2.0
        };
        Self {
            count: n,
            min: values.first().copied(),
            median: Some(median),
            max: values.last().copied(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub relation: String,
    pub universe_bits: usize,
    pub max_program_bits: u32,
    pub typicality_factor: f64,
    pub classes: Vec<ClassReport>,
    pub partial_classes: usize,
    /// Members with U(X)/2^-C(X) > 2.
    pub deep_members: usize,
    pub residuals_all: ResidualStats,
    pub residuals_typical: ResidualStats,
}

impl EntropyReport {
    pub fn member(&self, bits: &str) -> Option<(&ClassReport, &MemberReport)> {
        self.classes
            .iter()
            .find_map(|c| c.members.iter().find(|m| m.member == bits).map(|m| (c, m)))
    }
}

/// Partitions every `universe_bits`-bit string into classes of `relation`
/// and compares `log2|X/P|` with `C(X) − S(X/P)` member by member.
pub fn entropy_relation_report(
    relation: &dyn EquivalenceRelation,
    universe_bits: usize,
    table: &EnumerationTable,
    typicality_factor: f64,
) -> Result<EntropyReport> {
    if typicality_factor < 1.0 {
        return Err(Error::Config(format!("typicality factor {typicality_factor} < 1")));
    }
    let log_tau = typicality_factor.log2();
    let mut assigned = HashSet::new();
    let mut classes = Vec::new();
    let mut all = Vec::new();
    let mut typical = Vec::new();
    let mut deep_members = 0;

    for code in 0u32..(1u32 << universe_bits) {
        if assigned.contains(&code) {
            continue;
        }
        let representative = code_to_bits(code, universe_bits);
        let members = relation.enumerate_class(&representative, universe_bits)?;
        let cardinality = members.len();
        let log2_cardinality = (cardinality as f64).log2();
        let macro_c = exact_macrocomplexity(&representative, relation, universe_bits, table)?;
        let class_p = class_universal_probability(&representative, relation, universe_bits, table)?;
        let s = macro_c.exact_bits();
        let partial = class_p.unreached > 0;

        let mut member_reports = Vec::with_capacity(cardinality);
        for member in &members {
            let word = Word::from_symbols(member)?;
            assigned.insert(member.bits().fold(0u32, |acc, b| acc << 1 | b as u32));
            let entry = table.get(word);
            let c = entry.map(|e| e.min_program_bits);
            let residual = c.zip(s).map(|(c, s)| log2_cardinality - (c as f64 - s as f64));
            let cond = entry.map(|e| e.mass.to_f64() / class_p.by_members.to_f64());
            let is_typical = cond.is_some_and(|p| (p * cardinality as f64).log2().abs() <= log_tau);
            let ratio = entry.map(|e| e.mass.to_f64() * (e.min_program_bits as f64).exp2());
            if ratio.is_some_and(|r| r > DEEP_RATIO) {
                deep_members += 1;
            }
            if let (Some(r), false) = (residual, partial) {
                all.push(r);
                if is_typical {
                    typical.push(r);
                }
            }
            member_reports.push(MemberReport {
                member: member.to_bit_string(),
                complexity_bits: c,
                residual_bits: residual,
                conditional_probability: cond,
                typical: is_typical,
                probability_ratio: ratio,
                randomness_deficiency_bits: c.map(|c| c as f64 - universe_bits as f64),
                normalized_prediction_bits: c.zip(s).map(|(c, s)| c as f64 - s as f64 - universe_bits as f64),
            });
        }

        let normalized_entropy_bits = log2_cardinality - universe_bits as f64;
        classes.push(ClassReport {
            representative: representative.to_bit_string(),
            cardinality,
            log2_cardinality,
            normalized_entropy_bits,
            macrocomplexity_bits: s,
            witness: match &macro_c {
                MacroComplexity::Exact { witness, .. } => Some(witness.to_bit_string()),
                MacroComplexity::LowerBound { .. } => None,
            },
            total_information_bits: s.map(|s| normalized_entropy_bits + s as f64),
            total_information_unshifted_bits: s.map(|s| log2_cardinality + s as f64),
            class_probability: class_p.by_members.to_string(),
            sum_identity_holds: class_p.consistent(),
            partial,
            members: member_reports,
        });
    }

    Ok(EntropyReport {
        relation: relation.name(),
        universe_bits,
        max_program_bits: table.max_program_bits(),
        typicality_factor,
        partial_classes: classes.iter().filter(|c| c.partial).count(),
        classes,
        deep_members,
        residuals_all: ResidualStats::from_values(all),
        residuals_typical: ResidualStats::from_values(typical),
    })
}
