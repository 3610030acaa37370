//! Runs the `uslt` binary on the golden corpus and on small temporary inputs.

use std::ffi::OsStr;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use uslt_core::pipeline::SimplificationRecord;

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/golden")
}

fn uslt<S: AsRef<OsStr>>(args: &[S], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_uslt"))
        .args(args)
        .env_remove("USLT_PROVIDER_URL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn config() -> String {
    golden().join("uslt.cfg").to_string_lossy().into_owned()
}

fn first_sentences(n: usize) -> String {
    let text = std::fs::read_to_string(golden().join("sentences.txt")).unwrap();
    text.lines().take(n).map(|l| format!("{l}\n")).collect()
}

fn expected_records(n: usize) -> Vec<SimplificationRecord> {
    std::fs::read_to_string(golden().join("expected.jsonl"))
        .unwrap()
        .lines()
        .take(n)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simplify_plain_text() {
    let out = uslt(
        &["simplify", "--config", &config()],
        Some(&first_sentences(3)),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    let expected: Vec<String> = expected_records(3).iter().map(|r| r.output()).collect();
    assert_eq!(lines, expected);
    assert!(lines[0].contains("The act was committed."));
}

#[test]
fn simplify_batch_records() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let output = dir.path().join("out.jsonl");
    std::fs::write(&input, first_sentences(5)).unwrap();
    let out = uslt(
        &[
            "simplify",
            "--config",
            &config(),
            "--batch",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let got: Vec<SimplificationRecord> = std::fs::read_to_string(&output)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(got, expected_records(5));
}

#[test]
fn no_split_keeps_lexical_output() {
    let out = uslt(
        &["simplify", "--config", &config(), "--batch", "--no-split"],
        Some(&first_sentences(3)),
    );
    assert_eq!(out.status.code(), Some(0));
    for line in stdout(&out).lines() {
        let r: SimplificationRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.final_sentences, std::slice::from_ref(&r.lexical));
    }
}

#[test]
fn set_overrides_config() {
    let out = uslt(
        &[
            "simplify",
            "--config",
            &config(),
            "--set",
            "split_enabled=false",
            "--set",
            "ls_enabled=false",
        ],
        Some(&first_sentences(1)),
    );
    assert_eq!(
        out.status.code(),
        Some(1),
        "both stages off is a usage error"
    );
    let out = uslt(
        &[
            "simplify",
            "--config",
            &config(),
            "--set",
            "ls_enabled=false",
        ],
        Some(&first_sentences(1)),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("actus reus"));
}

#[test]
fn unreachable_provider_exits_three() {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uslt"));
    let out = cmd
        .args([
            "simplify",
            "--config",
            &config(),
            "--set",
            "provider_retries=0",
        ])
        .env("USLT_PROVIDER_URL", "http://127.0.0.1:9")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin
                .take()
                .unwrap()
                .write_all(first_sentences(2).as_bytes())?;
            c.wait_with_output()
        })
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // originals are passed through unchanged
    assert_eq!(stdout(&out), first_sentences(2));
}

#[test]
fn usage_and_resource_errors() {
    assert_eq!(
        uslt(&["simplify", "--set", "bogus=1"], Some(""))
            .status
            .code(),
        Some(1)
    );
    assert_eq!(uslt(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(uslt(&["--help"], None).status.code(), Some(0));
    assert_eq!(
        uslt(&["simplify", "--config", "/nonexistent/uslt.cfg"], Some(""))
            .status
            .code(),
        Some(2)
    );
    let out = uslt(
        &[
            "simplify",
            "--config",
            &config(),
            "--set",
            "embeddings=/nonexistent/e.vec",
        ],
        Some("x\n"),
    );
    assert_eq!(out.status.code(), Some(2));

    // no provider configured while lexical simplification is on
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("no-provider.cfg");
    let g = golden();
    let lines: String = [
        "general_zipf=general.tsv",
        "legal_zipf=legal.tsv",
        "embeddings=embeddings.vec",
        "familiar=familiar.txt",
        "real_words=real_words.txt",
    ]
    .iter()
    .map(|kv| {
        let (k, v) = kv.split_once('=').unwrap();
        format!("{k} = {}\n", g.join(v).display())
    })
    .collect();
    std::fs::write(&cfg, lines).unwrap();
    let out = uslt(
        &["simplify", "--config", cfg.to_str().unwrap()],
        Some("x\n"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no provider"));
    let out = uslt(
        &["simplify", "--config", cfg.to_str().unwrap(), "--no-ls"],
        Some("The court met.\n"),
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn build_freq_and_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::write(
        corpus.join("a.txt"),
        "the court the tenant\nthe lessee paid\n",
    )
    .unwrap();
    let freq = dir.path().join("freq.tsv");
    let zipf = dir.path().join("zipf.tsv");
    let out = uslt(
        &[
            "build-freq",
            "--input",
            corpus.to_str().unwrap(),
            "--output",
            freq.to_str().unwrap(),
            "--per-line",
            "--zipf",
            zipf.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let counts = std::fs::read_to_string(&freq).unwrap();
    assert!(counts.lines().any(|l| l == "the\t3"), "{counts}");
    assert!(std::fs::read_to_string(&zipf).unwrap().starts_with('#'));

    let lex = dir.path().join("lexicon.tsv");
    let g = golden();
    let out = uslt(
        &[
            "build-lexicon",
            "--general",
            g.join("general.tsv").to_str().unwrap(),
            "--legal",
            g.join("legal.tsv").to_str().unwrap(),
            "--phrases",
            g.join("phrases.txt").to_str().unwrap(),
            "--out",
            lex.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let lexicon = std::fs::read_to_string(&lex).unwrap();
    assert!(lexicon.contains("plaintiff"));
    assert!(lexicon.contains("actus reus"));
}

#[test]
fn eval_report() {
    let dir = tempfile::tempdir().unwrap();
    let original = dir.path().join("orig.txt");
    let output = dir.path().join("out.txt");
    let report = dir.path().join("report.json");
    std::fs::write(
        &original,
        "The lessee shall remit the rent.\nThe court held the statute void.\n",
    )
    .unwrap();
    std::fs::write(
        &output,
        "The lessee shall remit the rent.\nThe court said the law was void.\n",
    )
    .unwrap();
    let g = golden();
    let out = uslt(
        &[
            "eval",
            "--original",
            original.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--embeddings",
            g.join("embeddings.vec").to_str().unwrap(),
            "--familiar",
            g.join("familiar.txt").to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let pairs = r["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[0]["sd"], 0.0);
    assert!(pairs[1]["sd"].as_f64().unwrap() > 0.0);
    let mean_fkgl = (pairs[0]["fkgl"].as_f64().unwrap() + pairs[1]["fkgl"].as_f64().unwrap()) / 2.0;
    assert!((r["mean"]["fkgl"].as_f64().unwrap() - mean_fkgl).abs() < 1e-12);

    let ratio = uslt(
        &[
            "eval",
            "--original",
            original.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--embeddings",
            g.join("embeddings.vec").to_str().unwrap(),
            "--familiar",
            g.join("familiar.txt").to_str().unwrap(),
            "--dc-ratio-form",
        ],
        None,
    );
    let r2: Value = serde_json::from_str(&stdout(&ratio)).unwrap();
    assert!(r2["mean"]["dc"].as_f64().unwrap() <= r["mean"]["dc"].as_f64().unwrap());

    std::fs::write(&output, "only one line\n").unwrap();
    let mismatch = uslt(
        &[
            "eval",
            "--original",
            original.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--embeddings",
            g.join("embeddings.vec").to_str().unwrap(),
            "--familiar",
            g.join("familiar.txt").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn segment_sentences() {
    let out = uslt(
        &["segment"],
        Some("The court met in Smith v. Jones. It ruled\nfor the U.S. government!\n\nA new paragraph."),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "The court met in Smith v. Jones.\nIt ruled for the U.S. government!\nA new paragraph.\n"
    );
}

fn benchmark(extra: &[&str]) -> Output {
    let dataset = golden()
        .join("sentences.txt")
        .to_string_lossy()
        .into_owned();
    let config = config();
    let mut args = vec![
        "benchmark",
        "--config",
        &config,
        "--dataset",
        &dataset,
        "--chunks",
        "5",
        "--chunk-size",
        "10",
        "--seed",
        "2",
    ];
    args.extend_from_slice(extra);
    uslt(&args, None)
}

#[test]
fn benchmark_reports() {
    let a = benchmark(&[]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = benchmark(&[]);
    assert_eq!(a.stdout, b.stdout, "reports differ between runs");
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["chunks"].as_array().unwrap().len(), 5);
    assert!(report["overall_output"]["fkgl"].as_f64() < report["overall_input"]["fkgl"].as_f64());

    let id = benchmark(&["--identity"]);
    let report: Value = serde_json::from_slice(&id.stdout).unwrap();
    assert_eq!(
        report["overall_output"]["fkgl"],
        report["overall_input"]["fkgl"]
    );
    assert_eq!(
        report["overall_output"]["dc"],
        report["overall_input"]["dc"]
    );

    let compare = format!("identity={}", golden().join("sentences.txt").display());
    let c = benchmark(&["--compare", &compare]);
    let report: Value = serde_json::from_slice(&c.stdout).unwrap();
    let p = report["comparison"]["p_values"]["fkgl"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn optimize_weights_writes_weights_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let validation = dir.path().join("val.txt");
    std::fs::write(&validation, first_sentences(6)).unwrap();
    let weights = dir.path().join("w.cfg");
    let trace = dir.path().join("trace.jsonl");
    let out = uslt(
        &[
            "optimize-weights",
            "--config",
            &config(),
            "--validation",
            validation.to_str().unwrap(),
            "--budget",
            "12",
            "--seed",
            "1",
            "--out",
            weights.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 12);
    let w = std::fs::read_to_string(&weights).unwrap();
    for key in ["w_b=", "w_c=", "w_lm=", "w_f=", "w_l="] {
        assert!(w.contains(key), "{w}");
    }

    // the written weights file is accepted back
    let out = uslt(
        &[
            "simplify",
            "--config",
            &config(),
            "--weights",
            weights.to_str().unwrap(),
        ],
        Some(&first_sentences(1)),
    );
    assert_eq!(out.status.code(), Some(0));
}
