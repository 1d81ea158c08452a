//! Nearest-macrostate classification over labelled exemplar corpora, and
//! leave-one-out evaluation.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{prepare, prepared_distance, EstimatorConfig, Prepared};
use crate::input::{load_input, InputFormat};
use crate::symbol::SymbolString;

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub id: String,
    pub data: SymbolString,
    /// File the exemplar was read from, if any.
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    classes: BTreeMap<String, Vec<Exemplar>>,
}

impl Corpus {
    /// Validates: at least one class, no empty class, ids unique corpus-wide.
    pub fn new(classes: BTreeMap<String, Vec<Exemplar>>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config("corpus has no classes".into()));
        }
        let mut seen = HashSet::new();
        for (label, exemplars) in &classes {
            if exemplars.is_empty() {
                return Err(Error::Config(format!("class {label:?} has no exemplars")));
            }
            for e in exemplars {
                if !seen.insert(e.id.as_str()) {
                    return Err(Error::Config(format!("duplicate exemplar id {:?}", e.id)));
                }
            }
        }
        Ok(Self { classes })
    }

    pub fn from_pairs<L, I, S>(classes: impl IntoIterator<Item = (L, I)>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = (S, SymbolString)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, Vec<Exemplar>> = BTreeMap::new();
        for (label, items) in classes {
            let entry = map.entry(label.into()).or_default();
            entry.extend(items.into_iter().map(|(id, data)| Exemplar {
                id: id.into(),
                data,
                source: None,
            }));
        }
        Self::new(map)
    }

    /// Reads `dir/<label>/<file>`; ids are `<label>/<file>`. Hidden entries
    /// are skipped and everything is visited in sorted order.
    pub fn load(dir: &Path, format: Option<InputFormat>) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for class_dir in sorted_entries(dir)? {
            if !class_dir.is_dir() {
                continue;
            }
            let label = file_name(&class_dir);
            let mut exemplars = Vec::new();
            for file in sorted_entries(&class_dir)? {
                if !file.is_file() {
                    continue;
                }
                let source = load_input(&file, format)?;
                exemplars.push(Exemplar {
                    id: format!("{label}/{}", file_name(&file)),
                    data: source.decoded,
                    source: Some(file),
                });
            }
            classes.insert(label, exemplars);
        }
        Self::new(classes)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn class(&self, label: &str) -> Option<&[Exemplar]> {
        self.classes.get(label).map(Vec::as_slice)
    }

    pub fn exemplars(&self) -> impl Iterator<Item = (&str, &Exemplar)> {
        self.classes.iter().flat_map(|(l, es)| es.iter().map(move |e| (l.as_str(), e)))
    }

    pub fn len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in read {
        let path = entry?.path();
        if !file_name(&path).starts_with('.') {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistance {
    pub bits: f64,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub input_id: String,
    pub winner: String,
    pub distances: BTreeMap<String, f64>,
    pub witness: String,
    pub tie: bool,
    /// Classes that could not be evaluated, with the reason.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

/// Minimum over `(id, result)` pairs; ties go to the smallest id. Fails only if
/// every candidate failed.
fn arg_min<'a>(label: &str, candidates: impl IntoIterator<Item = (&'a str, Result<f64>)>) -> Result<ClassDistance> {
    let mut best: Option<(f64, &str)> = None;
    let mut last_err = None;
    for (id, d) in candidates {
        match d {
            Ok(d) => {
                let better = match best {
                    None => true,
                    Some((b, bid)) => d < b || (d == b && id < bid),
                };
                if better {
                    best = Some((d, id));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((bits, id)), _) => Ok(ClassDistance {
            bits,
            witness: id.to_string(),
        }),
        (None, Some(e)) => Err(Error::Classification(format!("class {label:?}: every exemplar failed: {e}"))),
        (None, None) => Err(Error::Classification(format!("class {label:?} has no exemplars"))),
    }
}

/// D(X, class) = min over the class's exemplars, with the arg-min exemplar id.
pub fn class_distance(x: &SymbolString, label: &str, corpus: &Corpus, cfg: &EstimatorConfig) -> Result<ClassDistance> {
    let exemplars = corpus
        .class(label)
        .ok_or_else(|| Error::Config(format!("unknown class {label:?}")))?;
    let px = prepare(x, cfg)?;
    let dists: Vec<Result<f64>> = exemplars
        .par_iter()
        .map(|e| prepare(&e.data, cfg).and_then(|pe| prepared_distance(&px, &pe, cfg)))
        .collect();
    arg_min(label, exemplars.iter().map(|e| e.id.as_str()).zip(dists))
}

fn decide(input_id: &str, per_class: Vec<(&str, Result<ClassDistance>)>) -> Result<ClassificationResult> {
    let mut distances = BTreeMap::new();
    let mut errors = BTreeMap::new();
    let mut best: Option<(&str, ClassDistance)> = None;
    let mut tie = false;
    // Labels arrive sorted, so the first of equal minima is the smallest label.
    for (label, result) in per_class {
        match result {
            Ok(cd) => {
                distances.insert(label.to_string(), cd.bits);
                match &best {
                    Some((_, b)) if cd.bits == b.bits => tie = true,
                    Some((_, b)) if cd.bits > b.bits => {}
                    _ => {
                        tie = false;
                        best = Some((label, cd));
                    }
                }
            }
            Err(e) => {
                errors.insert(label.to_string(), e.to_string());
            }
        }
    }
    let (winner, cd) = best.ok_or_else(|| {
        Error::Classification(format!(
            "{input_id}: no class could be evaluated ({})",
            errors.values().cloned().collect::<Vec<_>>().join("; ")
        ))
    })?;
    Ok(ClassificationResult {
        input_id: input_id.to_string(),
        winner: winner.to_string(),
        distances,
        witness: cd.witness,
        tie,
        errors,
    })
}

/// Arg-min over class distances; exact ties go to the smallest label with
/// `tie` set.
pub fn classify(
    input_id: &str,
    x: &SymbolString,
    corpus: &Corpus,
    cfg: &EstimatorConfig,
) -> Result<ClassificationResult> {
    let px = prepare(x, cfg)?;
    let items: Vec<(&str, &Exemplar)> = corpus.exemplars().collect();
    let dists: Vec<Result<f64>> = items
        .par_iter()
        .map(|(_, e)| prepare(&e.data, cfg).and_then(|pe| prepared_distance(&px, &pe, cfg)))
        .collect();
    let per_class = corpus
        .labels()
        .map(|label| {
            let members = items
                .iter()
                .zip(&dists)
                .filter(|((l, _), _)| *l == label)
                .map(|((_, e), d)| (e.id.as_str(), d.clone()));
            (label, arg_min(label, members))
        })
        .collect();
    decide(input_id, per_class)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoocvItem {
    pub id: String,
    pub label: String,
    pub result: ClassificationResult,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoocvReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[true_label][predicted_label]`.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub items: Vec<LoocvItem>,
}

/// Classifies every exemplar against the corpus without it.
pub fn evaluate_loocv(corpus: &Corpus, cfg: &EstimatorConfig) -> Result<LoocvReport> {
    for label in corpus.labels() {
        if corpus.class(label).map_or(0, <[Exemplar]>::len) < 2 {
            return Err(Error::Config(format!(
                "class {label:?} has 1 exemplar; leave-one-out needs at least 2"
            )));
        }
    }
    let items: Vec<(&str, &Exemplar)> = corpus.exemplars().collect();
    let prepared: Vec<Result<Prepared>> = items.par_iter().map(|(_, e)| prepare(&e.data, cfg)).collect();
    let n = items.len();
    let pair = |i: usize, j: usize| -> Result<f64> {
        match (&prepared[i], &prepared[j]) {
            (Ok(a), Ok(b)) => prepared_distance(a, b, cfg),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        }
    };
    // Distances are symmetric; compute each unordered pair once.
    let upper: Vec<((usize, usize), Result<f64>)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| ((i, j), pair(i, j)))
        .collect();
    let mut matrix: Vec<Vec<Option<Result<f64>>>> = vec![vec![None; n]; n];
    for ((i, j), d) in upper {
        matrix[j][i] = Some(d.clone());
        matrix[i][j] = Some(d);
    }

    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = corpus
        .labels()
        .map(|l| (l.to_string(), corpus.labels().map(|p| (p.to_string(), 0)).collect()))
        .collect();
    let mut results = Vec::with_capacity(n);
    for (i, (label, exemplar)) in items.iter().enumerate() {
        let per_class = corpus
            .labels()
            .map(|class| {
                let members = (0..n)
                    .filter(|&j| j != i && items[j].0 == class)
                    .map(|j| (items[j].1.id.as_str(), matrix[i][j].clone().expect("filled")));
                (class, arg_min(class, members))
            })
            .collect();
        let result = decide(&exemplar.id, per_class)?;
        *confusion
            .get_mut(*label)
            .and_then(|row| row.get_mut(&result.winner))
            .expect("labels known") += 1;
        results.push(LoocvItem {
            id: exemplar.id.clone(),
            label: label.to_string(),
            correct: result.winner == *label,
            result,
        });
    }
    let correct = results.iter().filter(|r| r.correct).count();
    Ok(LoocvReport {
        accuracy: correct as f64 / n as f64,
        correct,
        total: n,
        confusion,
        items: results,
    })
}
