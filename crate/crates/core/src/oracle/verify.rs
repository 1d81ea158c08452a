//! The exact-invariant suite behind `oracle verify`.

use std::collections::HashSet;

use serde::Serialize;

use super::dyadic::Dyadic;
use super::exact::{
    class_universal_probability, exact_complexity, exact_macrocomplexity, scanned_macrocomplexity, MacroComplexity,
};
use super::machine::shortest_program_bits;
use super::table::{halting_programs, EnumerationTable};
use crate::error::Result;
use crate::quantizers::{code_to_bits, RelationSpec};
use crate::symbol::SymbolString;

/// Above this L the exhaustive bit-string scans are skipped.
pub const MAX_SCAN_BITS: u32 = 22;

const MAX_DETAILS: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    pub skipped: bool,
    pub details: Vec<String>,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            violations: 0,
            skipped: false,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.details.len() < MAX_DETAILS {
                self.details.push(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub max_program_bits: u32,
    pub universe_bits: usize,
    pub relations: Vec<String>,
    pub table_entries: usize,
    pub total_mass: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn universe(bits: usize) -> impl Iterator<Item = SymbolString> {
    (0u32..1 << bits).map(move |c| code_to_bits(c, bits))
}

/// Pairs (finer, coarser) whose coarser classes are unions of finer ones.
fn refinement_pairs(relations: &[RelationSpec]) -> Vec<(RelationSpec, RelationSpec)> {
    let mut pairs = vec![(RelationSpec::Multiset, RelationSpec::Parity)];
    for r in relations {
        if let RelationSpec::PrefixCylinder(n) = *r {
            if n > 0 {
                pairs.push((RelationSpec::PrefixCylinder(n), RelationSpec::PrefixCylinder(n - 1)));
            }
        }
    }
    pairs
}

/// Runs every exact invariant at program bound `limit` over all strings of
/// `universe_bits` bits.
pub fn verify(limit: u32, relations: &[RelationSpec], universe_bits: usize) -> Result<VerifyReport> {
    let table = EnumerationTable::enumerate(limit, super::machine::MAX_WORD_BITS)?;
    for r in relations {
        r.validate()?;
        if !r.is_enumerable() {
            return Err(crate::Error::NotEnumerable(r.to_string()));
        }
    }
    let scan = limit <= MAX_SCAN_BITS;
    let programs = if scan {
        halting_programs(limit, super::machine::MAX_WORD_BITS)
    } else {
        Vec::new()
    };
    let mut checks = Vec::new();

    let mut prefix = CheckResult::new("prefix_free");
    if scan {
        let set: HashSet<&[bool]> = programs.iter().map(|(p, _)| p.as_slice()).collect();
        for (p, _) in &programs {
            let clash = (0..p.len()).find(|&cut| set.contains(&p[..cut]));
            prefix.check(clash.is_none(), || format!("proper prefix of {p:?} halts"));
        }
    } else {
        prefix.skipped = true;
    }
    checks.push(prefix);

    let mut kraft = CheckResult::new("kraft");
    kraft.check(table.total_mass() <= Dyadic::ONE, || {
        format!("total mass {} exceeds 1", table.total_mass())
    });
    let sum: Dyadic = table.entries().map(|(_, e)| e.mass).sum();
    kraft.check(sum == table.total_mass(), || "entry masses do not sum to total".into());
    checks.push(kraft);

    let mut dfs_vs_scan = CheckResult::new("enumeration_matches_scan");
    if scan {
        let scanned = EnumerationTable::scan(limit, super::machine::MAX_WORD_BITS)?;
        dfs_vs_scan.check(scanned == table, || "parallel enumeration differs from scan".into());
    } else {
        dfs_vs_scan.skipped = true;
    }
    checks.push(dfs_vs_scan);

    let mut dp_vs_table = CheckResult::new("complexity_dp_matches_table");
    for x in universe(universe_bits) {
        let dp = shortest_program_bits(&x);
        match exact_complexity(&x, &table) {
            Ok(c) => dp_vs_table.check(u64::from(c) == dp, || format!("{x}: table {c} vs dp {dp}")),
            Err(_) => dp_vs_table.check(dp > u64::from(limit), || format!("{x}: unreached but dp {dp}")),
        }
    }
    checks.push(dp_vs_table);

    let scanned_programs: Vec<(u32, SymbolString)> = programs
        .iter()
        .filter(|(_, out)| out.len() == universe_bits)
        .map(|(p, out)| (p.len() as u32, SymbolString::from_bits(out.iter().copied())))
        .collect();

    for relation in relations {
        let mut s_le_c = CheckResult::new(format!("s_le_c[{relation}]"));
        let mut sum_identity = CheckResult::new(format!("sum_identity[{relation}]"));
        let mut brute = CheckResult::new(format!("brute_force_equivalence[{relation}]"));
        let mut seen_classes = HashSet::new();
        for x in universe(universe_bits) {
            let macro_c = exact_macrocomplexity(&x, relation, universe_bits, &table)?;
            // C(X) from the segmentation DP is exact for every X, reached or not.
            let c = shortest_program_bits(&x);
            let ok = match macro_c {
                MacroComplexity::Exact { bits, .. } => u64::from(bits) <= c,
                // Nothing in the class is reached, so X itself needs more than L bits.
                MacroComplexity::LowerBound { bits } => u64::from(bits) <= c,
            };
            s_le_c.check(ok, || format!("{x}: S={macro_c:?} C={c}"));
            if seen_classes.insert(relation.canonicalize(&x)?) {
                let p = class_universal_probability(&x, relation, universe_bits, &table)?;
                sum_identity.check(p.consistent(), || {
                    format!("{x}: members {} vs outputs {}", p.by_members, p.by_outputs)
                });
            }
            if scan {
                let by_scan = scanned_macrocomplexity(&x, relation, &scanned_programs)?;
                brute.check(by_scan == macro_c.exact_bits(), || {
                    format!("{x}: scan {by_scan:?} vs table {macro_c:?}")
                });
            }
        }
        brute.skipped = !scan;
        checks.extend([s_le_c, sum_identity, brute]);
    }

    for (finer, coarser) in refinement_pairs(relations) {
        let mut check = CheckResult::new(format!("refinement[{finer}->{coarser}]"));
        for x in universe(universe_bits) {
            for y in finer.enumerate_class(&x, universe_bits)? {
                check.check(coarser.same_class(&x, &y)?, || {
                    format!("{x}~{y} under {finer} but not {coarser}")
                });
            }
            let fine = exact_macrocomplexity(&x, &finer, universe_bits, &table)?;
            let coarse = exact_macrocomplexity(&x, &coarser, universe_bits, &table)?;
            if let MacroComplexity::Exact { bits: f, .. } = fine {
                check.check(coarse.exact_bits().is_some_and(|c| c <= f), || {
                    format!("{x}: S({coarser})={coarse:?} > S({finer})={f}")
                });
            }
        }
        checks.push(check);
    }

    let passed = checks.iter().all(CheckResult::passed);
    Ok(VerifyReport {
        max_program_bits: limit,
        universe_bits,
        relations: relations.iter().map(ToString::to_string).collect(),
        table_entries: table.len(),
        total_mass: table.total_mass().to_string(),
        checks,
        passed,
    })
}
