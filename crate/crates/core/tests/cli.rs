mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::corpus_fixture;
use tempfile::TempDir;

fn lavs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lavs"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = lavs(dir, args);
    assert!(
        out.status.success(),
        "lavs {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Three-language fixture written to disk.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let fix = corpus_fixture(11, 3, 60, 120);
    fs::write(dir.path().join("vocab.txt"), fix.vocab.to_text()).unwrap();
    fs::write(dir.path().join("vocab.json"), fix.vocab.to_json()).unwrap();
    for (lang, text) in &fix.corpora {
        fs::write(dir.path().join(format!("{}.txt", lang.code())), text).unwrap();
    }
    dir
}

const CORPORA: [&str; 6] = ["--corpus", "cs=cs.txt", "--corpus", "de=de.txt", "--corpus", "fr=fr.txt"];

fn with_corpora<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(CORPORA).collect()
}

#[test]
fn zero_budget_returns_the_input_vocabulary() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.txt", "--budget", "0", "--out", "o"]));
    assert_eq!(
        fs::read(w.path().join("o/vocab.txt")).unwrap(),
        fs::read(w.path().join("vocab.txt")).unwrap()
    );
}

#[test]
fn lavs_adds_exactly_budget_entries() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.json", "--budget", "25", "--out", "o"]));
    let before = fs::read_to_string(w.path().join("vocab.json")).unwrap();
    let after = fs::read_to_string(w.path().join("o/vocab.json")).unwrap();
    let count = |s: &str| serde_json::from_str::<Vec<serde_json::Value>>(s).unwrap().len();
    assert_eq!(count(&after), count(&before) + 25);
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path().join("o/plan.json")).unwrap()).unwrap();
    assert_eq!(plan["realized"].as_array().unwrap().len(), 25);
    assert_eq!(plan["budget"], 25);
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let w = workspace();
    for t in ["1", "4"] {
        let out = format!("t{t}");
        ok(w.path(), &with_corpora(&["kl", "--vocab", "vocab.txt", "--threads", t, "--out", &out]));
        ok(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.txt", "--budget", "40", "--threads", t, "--out", &out]));
    }
    for f in ["kl.csv", "kl.json", "plan.json", "vocab.txt"] {
        assert_eq!(
            fs::read(w.path().join("t1").join(f)).unwrap(),
            fs::read(w.path().join("t4").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn kl_csv_has_language_header_and_zero_diagonal() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["kl", "--vocab", "vocab.txt", "--out", "o"]));
    let csv = fs::read_to_string(w.path().join("o/kl.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["", "cs", "de", "fr"]);
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(row[i + 1], "0");
        for v in &row[1..] {
            let digits = v.trim_start_matches(['-', '0', '.']).replace('.', "");
            assert!(digits.split('e').next().unwrap().len() <= 12, "{v}");
        }
    }
}

#[test]
fn stats_and_split_all_and_masks() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["stats", "--vocab", "vocab.txt", "--out", "o"]));
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path().join("o/stats.de.json")).unwrap()).unwrap();
    assert_eq!(stats["lang"], "de");
    assert_eq!(stats["lines"], 120);

    ok(w.path(), &with_corpora(&["split-all", "--vocab", "vocab.txt", "--out", "sep"]));
    let sep = fs::read_to_string(w.path().join("sep/vocab.txt")).unwrap();
    assert!(sep.lines().count() > 60);
    assert!(sep.lines().any(|l| l.ends_with("@@fr")));

    ok(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.txt", "--budget", "20", "--out", "o"]));
    ok(w.path(), &with_corpora(&["mcd-mask", "--vocab", "o/vocab.txt", "--out", "m"]));
    let report = fs::read_to_string(w.path().join("m/mask_sizes.csv")).unwrap();
    assert!(report.starts_with("lang,size\ncs,"));
    let bin = fs::read(w.path().join("m/mask.fr.bin")).unwrap();
    assert_eq!(&bin[..4], b"LVSM");
    let size = u32::from_le_bytes(bin[4..8].try_into().unwrap()) as usize;
    assert_eq!(size, 80);
    let text = fs::read_to_string(w.path().join("m/mask.fr.txt")).unwrap();
    assert!(!text.lines().any(|l| l.ends_with("@@cs") || l.ends_with("@@de")));
}

#[test]
fn errors_are_structured_json() {
    let w = workspace();
    let out = lavs(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.txt", "--budget", "100000", "--out", "o"]));
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "BUDGET_UNREACHABLE");

    fs::write(w.path().join("bad.txt"), "a\nb@@\n").unwrap();
    let out = lavs(w.path(), &["kl", "--vocab", "bad.txt", "--corpus", "cs=cs.txt"]);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().is_some());

    let out = lavs(w.path(), &["kl", "--vocab", "vocab.txt", "--corpus", "cs=missing.txt", "--corpus", "de=de.txt"]);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "IO_ERROR");

    fs::write(w.path().join("odd.txt"), "zzz_not_in_vocab\n").unwrap();
    let out = lavs(w.path(), &["kl", "--vocab", "vocab.txt", "--corpus", "cs=odd.txt", "--corpus", "de=de.txt"]);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "UNKNOWN_TOKEN");
    ok(w.path(), &["kl", "--vocab", "vocab.txt", "--unk", "drop", "--corpus", "cs=odd.txt", "--corpus", "de=de.txt"]);
}

#[test]
fn flags_override_the_config_file() {
    let w = workspace();
    let config = serde_json::json!({
        "corpus": {"cs": "cs.txt", "de": "de.txt", "fr": "fr.txt"},
        "langs": ["cs", "de", "fr"],
        "vocab": "vocab.txt",
        "budget": 7,
        "out": "from_config"
    });
    fs::write(w.path().join("run.json"), config.to_string()).unwrap();
    ok(w.path(), &["lavs", "--config", "run.json"]);
    ok(w.path(), &["lavs", "--config", "run.json", "--budget", "3", "--out", "from_flags"]);
    let lines = |p: &str| fs::read_to_string(w.path().join(p)).unwrap().lines().count();
    assert_eq!(lines("from_config/vocab.txt"), 67);
    assert_eq!(lines("from_flags/vocab.txt"), 63);

    fs::write(w.path().join("typo.json"), r#"{"budgte": 3}"#).unwrap();
    let out = lavs(w.path(), &["lavs", "--config", "typo.json"]);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "CONFIG_INVALID");
}

#[test]
fn otr_and_correlate_outputs() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["kl", "--vocab", "vocab.txt", "--out", "o"]));
    let mut tsv = String::new();
    for (s, t, off) in [("cs", "de", 3), ("cs", "fr", 1), ("de", "cs", 2), ("de", "fr", 4), ("fr", "cs", 0), ("fr", "de", 5)] {
        for i in 0..10 {
            let detected = if i < off { if i % 2 == 0 { s } else { "other" } } else { t };
            tsv.push_str(&format!("{s}\t{t}\t{detected}\n"));
        }
    }
    fs::write(w.path().join("det.tsv"), tsv).unwrap();
    ok(w.path(), &["otr", "--detections", "det.tsv", "--tiers", "cs=high,de=high,fr=low", "--out", "o"]);
    let otr: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path().join("o/otr.json")).unwrap()).unwrap();
    assert_eq!(otr["grand_mean"], 0.25);
    let tiers: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path().join("o/tiers.json")).unwrap()).unwrap();
    assert_eq!(tiers["high_to_high"], 0.25);
    assert_eq!(tiers["low_to_low"], serde_json::Value::Null);
    assert!(w.path().join("o/deviation.json").exists());

    for o in ["t2s", "s2t"] {
        ok(w.path(), &["correlate", "--detections", "det.tsv", "--kl", "o/kl.json", "--orientation", o, "--out", o]);
        let scatter = fs::read_to_string(w.path().join(o).join("scatter.csv")).unwrap();
        assert_eq!(scatter.lines().count(), 7);
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path().join("t2s/correlation.json")).unwrap()).unwrap();
    // Two points per source: r is ±1.
    for s in report["per_source"].as_array().unwrap() {
        assert_eq!(s["r"].as_f64().unwrap().abs(), 1.0);
    }
}

#[test]
fn retag_infers_languages_from_the_vocabulary() {
    let w = workspace();
    ok(w.path(), &with_corpora(&["lavs", "--vocab", "vocab.txt", "--budget", "30", "--out", "o"]));
    let out = Command::new(env!("CARGO_BIN_EXE_lavs"))
        .current_dir(w.path())
        .args(["retag", "--vocab", "o/vocab.txt", "--lang", "de", "--input", "de.txt", "--output", "de.tagged"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    ok(w.path(), &["detag", "--input", "de.tagged", "--output", "de.back"]);
    assert_eq!(
        fs::read(w.path().join("de.back")).unwrap(),
        fs::read(w.path().join("de.txt")).unwrap()
    );
    let tagged = fs::read_to_string(w.path().join("de.tagged")).unwrap();
    assert!(!tagged.contains("@@cs") && !tagged.contains("@@fr"));
}
