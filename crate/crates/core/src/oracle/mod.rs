//! Exact ground truth on the toy prefix machine.

mod dyadic;
mod exact;
mod machine;
mod report;
mod table;
mod verify;

pub use dyadic::Dyadic;
pub use exact::{
    class_universal_probability, exact_complexity, exact_conditional, exact_macrocomplexity,
    scanned_macrocomplexity, universal_probability, ClassProbability, MacroComplexity, TableCompressor,
    ToyMachineCompressor, UniversalProbability,
};
pub use machine::{
    run_program, shortest_program_bits, Instruction, ParseStatus, ToyProgram, Word, MACHINE_VERSION,
    MAX_WORD_BITS,
};
pub use report::{entropy_relation_report, ClassReport, EntropyReport, MemberReport, ResidualStats, DEFAULT_TYPICALITY};
pub use table::{halting_programs, EnumerationTable, TableEntry, MAX_PROGRAM_BITS, MIN_PROGRAM_BITS};
pub use verify::{verify, CheckResult, VerifyReport};
