//! `macrostate`: estimates, distances, classification and exact oracle checks
//! from the command line. One JSON document goes to stdout; a short summary
//! goes to stderr.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use macrostate::classifier::{classify, evaluate_loocv, Corpus};
use macrostate::compressors::CompressorSpec;
use macrostate::estimators::{
    boltzmann_estimate, prepare, prepared_conditional, prepared_distance, DistanceKind, EstimatorConfig,
};
use macrostate::fixtures::{self, TwoBandConfig};
use macrostate::input::{encode, load_input, write_wav, InputFormat, InputSource};
use macrostate::oracle::{
    entropy_relation_report, exact_macrocomplexity, shortest_program_bits, verify, EnumerationTable,
    MacroComplexity, MACHINE_VERSION, MAX_WORD_BITS,
};
use macrostate::quantizers::RelationSpec;
use macrostate::{Encoding, SymbolString};

use manifest::{document, sha256_hex, RunManifest};

#[derive(Parser)]
#[command(name = "macrostate", version, about = "Macrostate complexity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Shared {
    /// Observer relation, e.g. identity, multiset, parity, cyl:n=4,
    /// bitdepth:k=8, down:m=4, band:rate=48000,cutoff=3000, speech-band.
    /// `oracle verify` accepts it more than once.
    #[arg(long, global = true)]
    relation: Vec<RelationSpec>,
    /// `lz78`, or `ext:<command>` for a stdin-to-stdout filter.
    #[arg(long, global = true, default_value = "lz78")]
    compressor: CompressorSpec,
    /// Input format; inferred from the extension when absent.
    #[arg(long, global = true)]
    format: Option<InputFormat>,
    #[arg(long, global = true, default_value = "ncd")]
    distance: DistanceKind,
    /// Pretty-print the JSON document.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for fixture generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// K̂(X), Ŝ(X/P) and the Boltzmann-entropy estimate.
    Estimate { input: PathBuf },
    /// Distance between two inputs under the relation.
    Distance { a: PathBuf, b: PathBuf },
    /// Nearest class in a corpus laid out as <dir>/<label>/<file>.
    Classify {
        input: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Leave-one-out accuracy over a corpus.
    Loocv {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Entropy estimate; short bit strings also get the exact oracle values.
    Entropy {
        input: PathBuf,
        /// Program-length bound for the exact part.
        #[arg(short = 'L', long = "max-program-bits", default_value_t = 24)]
        max_program_bits: u32,
    },
    /// Write the canonical representative of the input's class.
    Quantize {
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Exact computations on the toy prefix machine.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Deterministic synthetic inputs.
    Fixture {
        #[command(subcommand)]
        kind: FixtureKind,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Enumerate every halting program of at most L bits.
    Table {
        #[arg(short = 'L', long = "max-program-bits")]
        max_program_bits: u32,
        #[arg(long, default_value_t = MAX_WORD_BITS)]
        max_output: usize,
        /// Write the table text here instead of embedding it in the JSON.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Run the exact invariant suite.
    Verify {
        #[arg(short = 'L', long = "max-program-bits")]
        max_program_bits: u32,
        #[arg(long, default_value_t = 8)]
        universe: usize,
    },
    /// Per-class comparison of log2|X/P| with C(X) - S(X/P).
    Report {
        #[arg(short = 'L', long = "max-program-bits")]
        max_program_bits: u32,
        #[arg(long, default_value_t = 8)]
        universe: usize,
        #[arg(long, default_value_t = macrostate::oracle::DEFAULT_TYPICALITY)]
        typicality: f64,
    },
}

#[derive(Subcommand)]
enum FixtureKind {
    /// 1 s of a 200 Hz sine plus noise above 3.5 kHz, 48 kHz WAV.
    Speech {
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// LOW/HIGH tone corpus directory.
    TwoBand {
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 9_600)]
        samples: usize,
    },
    /// Raw bytes: random, constant or text-like.
    Bytes {
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long, default_value_t = 4096)]
        size: usize,
        #[arg(long, default_value = "random", value_parser = ["random", "constant", "text"])]
        kind: String,
    },
}

struct Outcome {
    document: Value,
    summary: String,
    success: bool,
}

impl Outcome {
    fn ok(manifest: &RunManifest, body: impl Serialize, summary: String) -> anyhow::Result<Self> {
        Ok(Self {
            document: document(manifest, body)?,
            summary,
            success: true,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = if cli.shared.json {
                serde_json::to_string_pretty(&outcome.document)
            } else {
                serde_json::to_string(&outcome.document)
            }
            .expect("JSON values serialize");
            // A closed pipe downstream is not our failure.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            eprintln!("{}", outcome.summary);
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(message: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, message).exit()
}

impl Shared {
    fn relation(&self) -> RelationSpec {
        match self.relation.as_slice() {
            [] => RelationSpec::Identity,
            [one] => *one,
            _ => usage_error("--relation given more than once"),
        }
    }

    fn config(&self) -> anyhow::Result<EstimatorConfig> {
        let compressor = self.compressor.build()?;
        Ok(EstimatorConfig::new(self.relation(), Arc::from(compressor)).with_distance(self.distance))
    }

    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command, self.relation().to_string(), self.compressor.to_string());
        if let Some(format) = self.format {
            m.param("format", format.to_string());
        }
        m
    }
}

/// Loads an input, records its digest, and checks the relation's sample rate.
fn load(path: &Path, shared: &Shared, manifest: &mut RunManifest) -> anyhow::Result<InputSource> {
    let source = load_input(path, shared.format)?;
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    manifest.input(&path.display().to_string(), path, &source.format.to_string(), &bytes);
    check_rate(&shared.relation(), &source)?;
    Ok(source)
}

fn check_rate(relation: &RelationSpec, source: &InputSource) -> anyhow::Result<()> {
    if let (RelationSpec::Bandlimit { sample_rate_hz, .. }, Some(rate)) = (relation, source.sample_rate) {
        if *sample_rate_hz != rate {
            bail!(
                "{}: sample rate {rate} Hz does not match relation rate {sample_rate_hz} Hz",
                source.path.display()
            );
        }
    }
    Ok(())
}

fn load_corpus(dir: &Path, shared: &Shared, manifest: &mut RunManifest) -> anyhow::Result<Corpus> {
    let corpus = Corpus::load(dir, shared.format)?;
    for (_, e) in corpus.exemplars() {
        let path = e.source.as_ref().expect("loaded from disk");
        let bytes = fs::read(path)?;
        let format = shared.format.unwrap_or_else(|| InputFormat::infer(path));
        manifest.input(&e.id, path, &format.to_string(), &bytes);
        let source = load_input(path, shared.format)?;
        check_rate(&shared.relation(), &source)?;
    }
    manifest.param("corpus", dir.display().to_string());
    Ok(corpus)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let shared = &cli.shared;
    match &cli.command {
        Command::Estimate { input } => {
            let mut m = shared.manifest("estimate");
            let source = load(input, shared, &mut m)?;
            let report = boltzmann_estimate(&source.decoded, &shared.config()?)?;
            let mut body = serde_json::to_value(&report)?;
            body["input_id"] = json!(input.display().to_string());
            body["relation"] = json!(shared.relation().to_string());
            body["compressor"] = json!(shared.compressor.to_string());
            let summary = format!(
                "{}: K={:.1} S={:.1} entropy={:.1} bits",
                input.display(),
                report.k_hat_bits,
                report.s_hat_bits,
                report.entropy_estimate_bits
            );
            Outcome::ok(&m, body, summary)
        }
        Command::Distance { a, b } => {
            let mut m = shared.manifest("distance");
            m.param("distance", shared.distance.to_string());
            let sa = load(a, shared, &mut m)?;
            let sb = load(b, shared, &mut m)?;
            let cfg = shared.config()?;
            let pa = prepare(&sa.decoded, &cfg)?;
            let pb = prepare(&sb.decoded, &cfg)?;
            let value = prepared_distance(&pa, &pb, &cfg)?;
            let body = json!({
                "a": a.display().to_string(),
                "b": b.display().to_string(),
                "distance": shared.distance.to_string(),
                "value": value,
                "s_hat_a_bits": pa.s_hat,
                "s_hat_b_bits": pb.s_hat,
                "conditional_a_given_b_bits": prepared_conditional(&pa, &pb, &cfg)?.bits,
                "conditional_b_given_a_bits": prepared_conditional(&pb, &pa, &cfg)?.bits,
            });
            Outcome::ok(&m, body, format!("{} distance = {value:.4}", shared.distance))
        }
        Command::Classify { input, corpus } => {
            let mut m = shared.manifest("classify");
            m.param("distance", shared.distance.to_string());
            let source = load(input, shared, &mut m)?;
            let corpus = load_corpus(corpus, shared, &mut m)?;
            let result = classify(&input.display().to_string(), &source.decoded, &corpus, &shared.config()?)?;
            let summary = format!(
                "{} -> {} (witness {}{})",
                input.display(),
                result.winner,
                result.witness,
                if result.tie { ", tie" } else { "" }
            );
            Outcome::ok(&m, result, summary)
        }
        Command::Loocv { corpus } => {
            let mut m = shared.manifest("loocv");
            m.param("distance", shared.distance.to_string());
            let corpus = load_corpus(corpus, shared, &mut m)?;
            let report = evaluate_loocv(&corpus, &shared.config()?)?;
            let summary = format!("accuracy {}/{} = {:.4}", report.correct, report.total, report.accuracy);
            Outcome::ok(&m, report, summary)
        }
        Command::Entropy { input, max_program_bits } => {
            let mut m = shared.manifest("entropy");
            m.param("max_program_bits", max_program_bits);
            let source = load(input, shared, &mut m)?;
            let relation = shared.relation();
            let estimate = boltzmann_estimate(&source.decoded, &shared.config()?)?;
            let x = &source.decoded;
            let exact = if x.encoding() == Encoding::Bits && x.bit_length() <= 20 && relation.is_enumerable() {
                Some(exact_entropy(x, &relation, *max_program_bits)?)
            } else {
                None
            };
            let summary = match &exact {
                Some(e) => format!(
                    "estimate {:.2} bits; exact log2|X/P| = {:.4}, C - S = {}",
                    estimate.entropy_estimate_bits,
                    e["log2_cardinality"],
                    e["complexity_minus_macrocomplexity_bits"]
                ),
                None => format!("estimate {:.2} bits", estimate.entropy_estimate_bits),
            };
            let body = json!({
                "input_id": input.display().to_string(),
                "estimate": estimate,
                "exact": exact,
            });
            Outcome::ok(&m, body, summary)
        }
        Command::Quantize { input, output } => {
            let mut m = shared.manifest("quantize");
            let source = load(input, shared, &mut m)?;
            let canonical = shared.relation().canonicalize(&source.decoded)?;
            let format = match canonical.encoding() {
                Encoding::Bits => InputFormat::Bits,
                Encoding::Bytes => InputFormat::Raw,
                Encoding::Pcm16Mono => InputFormat::Wav,
            };
            let bytes = encode(&canonical, format, source.sample_rate)?;
            fs::write(output, &bytes).with_context(|| format!("writing {}", output.display()))?;
            m.param("output", output.display().to_string());
            let body = json!({
                "input_id": input.display().to_string(),
                "output": output.display().to_string(),
                "output_format": format.to_string(),
                "output_sha256": sha256_hex(&bytes),
                "bit_length": canonical.bit_length(),
            });
            Outcome::ok(&m, body, format!("wrote {}", output.display()))
        }
        Command::Oracle { command } => run_oracle(command, shared),
        Command::Fixture { kind } => run_fixture(kind, shared),
    }
}

fn exact_entropy(x: &SymbolString, relation: &RelationSpec, limit: u32) -> anyhow::Result<Value> {
    let n = x.bit_length();
    let table = EnumerationTable::enumerate(limit, MAX_WORD_BITS)?;
    let cardinality = relation.enumerate_class(x, n)?.len();
    let complexity = shortest_program_bits(x);
    let log2_cardinality = (cardinality as f64).log2();
    let (macro_json, residual) = match exact_macrocomplexity(x, relation, n, &table)? {
        MacroComplexity::Exact { bits, witness } => {
            let gap = complexity as f64 - bits as f64;
            (
                json!({ "exact_bits": bits, "witness": witness.to_bit_string() }),
                Some((gap, log2_cardinality - gap)),
            )
        }
        MacroComplexity::LowerBound { bits } => (json!({ "lower_bound_bits": bits }), None),
    };
    Ok(json!({
        "machine": MACHINE_VERSION,
        "max_program_bits": limit,
        "class_cardinality": cardinality,
        "log2_cardinality": log2_cardinality,
        "complexity_bits": complexity,
        "macrocomplexity": macro_json,
        "complexity_minus_macrocomplexity_bits": residual.map(|r| r.0),
        "residual_bits": residual.map(|r| r.1),
    }))
}

fn run_oracle(command: &OracleCommand, shared: &Shared) -> anyhow::Result<Outcome> {
    match command {
        OracleCommand::Table {
            max_program_bits,
            max_output,
            output,
        } => {
            let mut m = shared.manifest("oracle table");
            m.param("max_program_bits", max_program_bits).param("max_output", max_output);
            m.param("machine", MACHINE_VERSION);
            let table = EnumerationTable::enumerate(*max_program_bits, *max_output)?;
            let text = table.export();
            let mut body = json!({
                "entries": table.len(),
                "total_mass": table.total_mass().to_string(),
                "table_sha256": sha256_hex(text.as_bytes()),
            });
            match output {
                Some(path) => {
                    fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
                    m.param("output", path.display().to_string());
                }
                None => body["table"] = json!(text),
            }
            let summary = format!(
                "L={max_program_bits}: {} outputs, total mass {}",
                table.len(),
                table.total_mass()
            );
            Outcome::ok(&m, body, summary)
        }
        OracleCommand::Verify {
            max_program_bits,
            universe,
        } => {
            let relations = if shared.relation.is_empty() {
                vec![
                    RelationSpec::Identity,
                    RelationSpec::Multiset,
                    RelationSpec::Parity,
                    RelationSpec::PrefixCylinder(4),
                ]
            } else {
                shared.relation.clone()
            };
            let names: Vec<String> = relations.iter().map(ToString::to_string).collect();
            let mut m = RunManifest::new("oracle verify", names.join(" "), "none".into());
            m.param("max_program_bits", max_program_bits).param("universe", universe);
            m.param("machine", MACHINE_VERSION);
            let report = verify(*max_program_bits, &relations, *universe)?;
            let mut lines: Vec<String> = report
                .checks
                .iter()
                .map(|c| {
                    let state = if c.skipped {
                        "skipped"
                    } else if c.passed() {
                        "ok"
                    } else {
                        "FAILED"
                    };
                    format!("{:<48} {state} ({} checked, {} violations)", c.name, c.checked, c.violations)
                })
                .collect();
            lines.push(if report.passed { "all invariants hold".into() } else { "violations found".into() });
            let success = report.passed;
            let mut outcome = Outcome::ok(&m, report, lines.join("\n"))?;
            outcome.success = success;
            Ok(outcome)
        }
        OracleCommand::Report {
            max_program_bits,
            universe,
            typicality,
        } => {
            let relation = if shared.relation.is_empty() {
                RelationSpec::Multiset
            } else {
                shared.relation()
            };
            let mut m = RunManifest::new("oracle report", relation.to_string(), "none".into());
            m.param("max_program_bits", max_program_bits)
                .param("universe", universe)
                .param("typicality", typicality)
                .param("machine", MACHINE_VERSION);
            let table = EnumerationTable::enumerate(*max_program_bits, MAX_WORD_BITS)?;
            let report = entropy_relation_report(&relation, *universe, &table, *typicality)?;
            let summary = format!(
                "{} classes ({} partial); residual median {:?}",
                report.classes.len(),
                report.partial_classes,
                report.residuals_all.median
            );
            Outcome::ok(&m, report, summary)
        }
    }
}

fn write_output(path: &Path, bytes: &[u8], written: &mut Vec<Value>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    written.push(json!({
        "path": path.display().to_string(),
        "bytes": bytes.len(),
        "sha256": sha256_hex(bytes),
    }));
    Ok(())
}

fn run_fixture(kind: &FixtureKind, shared: &Shared) -> anyhow::Result<Outcome> {
    let mut m = RunManifest::new("fixture", "none".into(), "none".into());
    m.param("seed", shared.seed);
    let mut written = Vec::new();
    match kind {
        FixtureKind::Speech { output } => {
            m.param("kind", "speech");
            let samples = fixtures::sine_plus_hf_noise(shared.seed);
            write_output(output, &write_wav(&samples, fixtures::SAMPLE_RATE), &mut written)?;
        }
        FixtureKind::TwoBand {
            output,
            per_class,
            snr_db,
            samples,
        } => {
            if *per_class == 0 || *samples == 0 {
                usage_error("--per-class and --samples must be positive");
            }
            let config = TwoBandConfig {
                per_class: *per_class,
                samples: *samples,
                snr_db: *snr_db,
                ..Default::default()
            };
            m.param("kind", "two-band")
                .param("per_class", per_class)
                .param("snr_db", snr_db)
                .param("samples", samples);
            for ex in fixtures::two_band_corpus(shared.seed, &config) {
                let path = output.join(ex.label).join(&ex.name);
                write_output(&path, &write_wav(&ex.samples, fixtures::SAMPLE_RATE), &mut written)?;
            }
        }
        FixtureKind::Bytes { output, size, kind } => {
            m.param("kind", kind).param("size", size);
            let bytes = match kind.as_str() {
                "random" => fixtures::random_bytes(shared.seed, *size),
                "constant" => fixtures::constant_bytes((shared.seed & 0xff) as u8, *size),
                _ => fixtures::text_like(shared.seed, *size),
            };
            write_output(output, &bytes, &mut written)?;
        }
    }
    let summary = format!("wrote {} file(s)", written.len());
    Outcome::ok(&m, json!({ "outputs": written }), summary)
}
