//! Writes the fill fixtures and expected records of the golden corpus.
//!
//! Every sentence is masked exactly as the pipeline masks it and answered
//! from `candidates.tsv`; losses use the constant in `fixtures/defaults.json`.
//! The pipeline is then replayed on the fixtures and its records are written
//! to `expected.jsonl` for review.
//!
//!     cargo run -p uslt-core --example record_golden -- crates/core/tests/data/golden

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use uslt_core::candidates::{
    build_masked_query, Candidate, FillResponse, FixtureProvider, FixtureRecord, DEFAULT_TOP_N,
};
use uslt_core::config::{KeyValues, Settings};
use uslt_core::cwi::identify_complex_spans;
use uslt_core::pipeline::{simplify, Resources};
use uslt_core::text::tokenize;

const DEFAULT_LOSS: f64 = 2.0;

fn candidate_table(path: &Path) -> HashMap<String, Vec<Candidate>> {
    let content = std::fs::read_to_string(path).expect("candidates.tsv");
    let mut table = HashMap::new();
    for line in content
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let (span, cands) = line.split_once('\t').expect("span<TAB>candidates");
        let cands = cands
            .split_whitespace()
            .map(|item| {
                let (token, prob) = item.rsplit_once(':').expect("token:prob");
                Candidate::new(
                    token.trim_start_matches('+'),
                    prob.parse().expect("probability"),
                )
            })
            .collect();
        table.insert(span.to_string(), cands);
    }
    table
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).expect("usage: record_golden DIR"));
    let settings =
        Settings::from_key_values(&KeyValues::load(&dir.join("uslt.cfg")).expect("config"))
            .expect("settings");
    let resources = Resources::load(&settings.paths, &settings.cwi).expect("resources");
    let table = candidate_table(&dir.join("candidates.tsv"));
    let sentences: Vec<String> = std::fs::read_to_string(dir.join("sentences.txt"))
        .expect("sentences.txt")
        .lines()
        .map(str::to_string)
        .collect();

    let fixtures = dir.join("fixtures");
    std::fs::create_dir_all(&fixtures).expect("fixture dir");
    let mut fills = String::new();
    for sentence in &sentences {
        let tokens = tokenize(sentence);
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let spans = identify_complex_spans(
            &surfaces,
            &resources.lexicon,
            &resources.entities.tag(&tokens),
        );
        if spans.is_empty() {
            continue;
        }
        let query = build_masked_query(sentence, &spans).expect("masked query");
        let slots = spans
            .iter()
            .map(|s| {
                let key = s.surface.to_lowercase();
                table.get(&key).cloned().unwrap_or_else(|| {
                    eprintln!("no candidates for {key:?}");
                    Vec::new()
                })
            })
            .collect();
        let record = FixtureRecord::Fill {
            request: query.request(DEFAULT_TOP_N),
            response: FillResponse { slots },
        };
        let _ = writeln!(fills, "{}", serde_json::to_string(&record).expect("json"));
    }
    std::fs::write(fixtures.join("fill.jsonl"), fills).expect("write fill.jsonl");
    std::fs::write(
        fixtures.join("defaults.json"),
        format!("{{\"default_loss\": {DEFAULT_LOSS}}}\n"),
    )
    .expect("write defaults.json");

    let provider = FixtureProvider::load_dir(&fixtures).expect("reload fixtures");
    let mut expected = String::new();
    for sentence in &sentences {
        let record =
            simplify(sentence, &settings.pipeline, &resources, &provider).expect("simplify");
        println!("{}", record.original);
        for s in &record.substitutions {
            println!(
                "    {:?} -> {:?} ({} of {} survive)",
                s.original, s.chosen, s.survivors, s.generated
            );
        }
        for f in &record.final_sentences {
            println!("  | {f}");
        }
        let _ = writeln!(
            expected,
            "{}",
            serde_json::to_string(&record).expect("json")
        );
    }
    std::fs::write(dir.join("expected.jsonl"), expected).expect("write expected.jsonl");
}
