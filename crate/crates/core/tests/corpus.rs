use std::fs;

use macrostate::classifier::{classify, evaluate_loocv, Corpus};
use macrostate::estimators::EstimatorConfig;
use macrostate::fixtures::{random_bytes, text_like, two_band_corpus, TwoBandConfig};
use macrostate::input::write_wav;
use macrostate::quantizers::SPEECH_BAND;
use macrostate::Error;

#[test]
fn loads_directory_layout_in_sorted_order() {
    let dir = tempfile::tempdir().unwrap();
    for (label, files) in [("zeta", ["b.raw", "a.raw"]), ("alpha", ["y.raw", "x.raw"])] {
        fs::create_dir(dir.path().join(label)).unwrap();
        for (i, f) in files.iter().enumerate() {
            fs::write(dir.path().join(label).join(f), random_bytes(i as u64, 32)).unwrap();
        }
    }
    fs::write(dir.path().join("alpha").join(".hidden"), b"skip").unwrap();
    fs::write(dir.path().join("README"), b"not a class").unwrap();
    let corpus = Corpus::load(dir.path(), None).unwrap();
    let ids: Vec<&str> = corpus.exemplars().map(|(_, e)| e.id.as_str()).collect();
    assert_eq!(ids, ["alpha/x.raw", "alpha/y.raw", "zeta/a.raw", "zeta/b.raw"]);
}

#[test]
fn empty_or_broken_corpora_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Corpus::load(dir.path(), None), Err(Error::Config(_))));
    fs::create_dir(dir.path().join("empty")).unwrap();
    assert!(matches!(Corpus::load(dir.path(), None), Err(Error::Config(m)) if m.contains("empty")));
    fs::create_dir(dir.path().join("bad")).unwrap();
    fs::write(dir.path().join("bad").join("x.wav"), b"RIFF").unwrap();
    assert!(matches!(Corpus::load(dir.path(), None), Err(Error::Format(_))));
    assert!(Corpus::load(&dir.path().join("missing"), None).is_err());
}

#[test]
fn held_out_low_tone_is_classified_low() {
    let dir = tempfile::tempdir().unwrap();
    let config = TwoBandConfig { per_class: 6, ..Default::default() };
    let exemplars = two_band_corpus(5, &config);
    for ex in &exemplars[1..] {
        let class = dir.path().join(ex.label);
        fs::create_dir_all(&class).unwrap();
        fs::write(class.join(&ex.name), write_wav(&ex.samples, 48_000)).unwrap();
    }
    let corpus = Corpus::load(dir.path(), None).unwrap();
    let held_out = &exemplars[0];
    assert_eq!(held_out.label, "LOW");
    let cfg = EstimatorConfig { relation: SPEECH_BAND, ..Default::default() };
    let x = macrostate::SymbolString::from_samples(&held_out.samples);
    let r = classify("held-out", &x, &corpus, &cfg).unwrap();
    assert_eq!(r.winner, "LOW");
    assert!(r.witness.starts_with("LOW/"));
}

#[test]
fn loocv_report_is_deterministic_and_consistent() {
    let corpus = Corpus::from_pairs([
        ("text", (0..4).map(|i| (format!("text/{i}"), macrostate::SymbolString::from_bytes(text_like(i, 600)))).collect::<Vec<_>>()),
        ("noise", (0..4).map(|i| (format!("noise/{i}"), macrostate::SymbolString::from_bytes(random_bytes(i, 600)))).collect()),
    ])
    .unwrap();
    let cfg = EstimatorConfig::default();
    let a = evaluate_loocv(&corpus, &cfg).unwrap();
    let b = evaluate_loocv(&corpus, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.total, 8);
    assert_eq!(a.accuracy, 1.0);
    for (label, row) in &a.confusion {
        assert_eq!(row.values().sum::<usize>(), corpus.class(label).unwrap().len());
    }
    assert!(a.items.iter().all(|it| it.result.witness != it.id));
}
