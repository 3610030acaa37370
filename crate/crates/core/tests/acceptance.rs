//! Acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero when any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use uslt_core::candidates::{Candidate, CandidateSet, FixtureProvider};
use uslt_core::config::{KeyValues, Settings};
use uslt_core::cwi::{build_complex_lexicon, ComplexWordLexicon, CwiConfig, Provenance, TokenSpan};
use uslt_core::embeddings::Embeddings;
use uslt_core::frequency::{build_zipf_table, FrequencyTable, ZipfTable};
use uslt_core::metrics::{dale_chall, fkgl, semantic_difference, FamiliarWordList, SD_WINDOW};
use uslt_core::optimize::{optimize_weights, SearchDomain};
use uslt_core::pipeline::{simplify_batch, PipelineConfig, Resources, SimplificationRecord};
use uslt_core::pos::{CoarsePos, RuleTagger};
use uslt_core::ranking::{
    aggregate_score, length_feature, select_substitutions, CandidateFeatures, RankingContext,
    RankingWeights, WordResources, DEFAULT_MAX_LM_FEATURE,
};
use uslt_core::split::{
    flatten_tree, split_sentence, Label, LeafOrder, SplitConfig, SplitNode, SplitRule,
};
use uslt_core::stats::{signed_rank_test, wilcoxon_signed_rank, Method};

// Tolerances and limits.
const ZIPF_TOL: f64 = 1e-9;
const DECADE_TOL: f64 = 1e-12;
const FEATURE_TOL: f64 = 1e-12;
const SCORE_TOL: f64 = 1e-12;
const READABILITY_TOL: f64 = 0.01;
const SD_TOL: f64 = 1e-9;
const OPTIMUM_TOL: f64 = 0.5;
const EXACT_P_TOL: f64 = 1e-12;
const APPROX_P_TOL: f64 = 0.01;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    if took < limit {
        Ok(())
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn zipf_correctness() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts: Vec<(String, u64)> = (0..990)
        .map(|i| (format!("w{i:04}"), rng.gen_range(1..=50_000u64)))
        .collect();
    // decade pairs: (c + 1) * 10 = (10c + 9) + 1
    let bases = [1u64, 4, 9, 37, 120];
    for (j, &c) in bases.iter().enumerate() {
        counts.push((format!("d{j}a"), c));
        counts.push((format!("d{j}b"), 10 * c + 9));
    }
    let freq = FrequencyTable::from_counts(counts.clone());
    let table = build_zipf_table(&freq, "synthetic").map_err(|e| e.to_string())?;
    ensure!(table.len() == 1000, "table has {} entries", table.len());

    let total: u64 = counts.iter().map(|(_, c)| c).sum();
    let denom = total as f64 / 1e6 + counts.len() as f64 / 1e6;
    for (w, c) in &counts {
        let expected = ((*c as f64 + 1.0) / denom).log10() + 3.0;
        let got = table.get(w).ok_or(format!("{w} missing"))?;
        ensure!(
            (got - expected).abs() <= ZIPF_TOL,
            "{w}: {got} vs {expected}"
        );
    }
    for j in 0..bases.len() {
        let a = table.get(&format!("d{j}a")).unwrap();
        let b = table.get(&format!("d{j}b")).unwrap();
        ensure!(
            ((b - a) - 1.0).abs() <= DECADE_TOL,
            "decade {j}: difference {}",
            b - a
        );
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "1000 entries within {ZIPF_TOL:e}, {} decade pairs",
        bases.len()
    ))
}

fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn cwi_oracle() -> Check {
    let start = Instant::now();
    let regimes = [(3.0, 0.5), (4.0, 1.0), (2.5, 1.5), (5.0, 0.3), (3.5, 2.0)];
    let cwi = CwiConfig::default();
    let mut flagged = 0;
    for (r, &(mu, sigma)) in regimes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + r as u64);
        let vocab: Vec<String> = (0..200).map(|i| format!("v{i:03}")).collect();
        let draw = |rng: &mut ChaCha8Rng| mu + sigma * (rng.gen::<f64>() * 2.0 - 1.0) * 1.7;
        let general: BTreeMap<String, f64> =
            vocab.iter().map(|w| (w.clone(), draw(&mut rng))).collect();
        // legal values: general plus a shift that is large for some words
        let legal: BTreeMap<String, f64> = vocab
            .iter()
            .map(|w| {
                let bump = if rng.gen_bool(0.15) {
                    rng.gen_range(1.0..4.0)
                } else {
                    0.0
                };
                (w.clone(), general[w] + rng.gen_range(-0.3..0.3) + bump)
            })
            .collect();
        let g = ZipfTable::from_values("general", general.clone()).map_err(|e| e.to_string())?;
        let l = ZipfTable::from_values("legal", legal.clone()).map_err(|e| e.to_string())?;
        let lex = build_complex_lexicon(&g, &l, None, &cwi).map_err(|e| e.to_string())?;

        let gv: Vec<f64> = general.values().copied().collect();
        let lv: Vec<f64> = legal.values().copied().collect();
        let (mu_s, sigma_s) = population_stats(&gv);
        let (_, sigma_l) = population_stats(&lv);
        for w in &vocab {
            let rule1 = general[w] < mu_s - cwi.k_general * sigma_s;
            let rule2 = general[w] < legal[w] - cwi.k_domain * sigma_l;
            let oracle = rule1 || rule2;
            ensure!(
                lex.is_complex(w) == oracle,
                "regime {r}, {w}: lexicon {} oracle {oracle}",
                lex.is_complex(w)
            );
            flagged += usize::from(oracle);
        }
        ensure!(
            lex.len() == vocab.iter().filter(|w| lex.is_complex(w)).count(),
            "extra lexicon entries"
        );
    }
    ensure!(flagged > 0, "no word flagged in any regime");
    within(start, Duration::from_secs(1))?;
    Ok(format!("5 regimes x 200 words agree, {flagged} flagged"))
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| rng.gen_range(b'a'..=b'z') as char)
        .collect()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

struct RankingCase {
    sentence: String,
    span: TokenSpan,
    candidates: Vec<Candidate>,
    provider: FixtureProvider,
    resources: WordResources,
    lexicon: ComplexWordLexicon,
    weights: RankingWeights,
    // oracle inputs
    vectors: HashMap<String, Vec<f64>>,
    zipf: HashMap<String, f64>,
    losses: HashMap<(String, usize), f64>,
    eligible: Vec<String>,
}

fn ranking_case(seed: u64) -> RankingCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let original = format!("q{}", random_word(&mut rng, 9));
    let sentence = format!("The court issued the {original} today.");
    let k = rng.gen_range(1..=10);
    let mut pool: Vec<String> = Vec::new();
    while pool.len() < k {
        let len = rng.gen_range(2..=11);
        let w = random_word(&mut rng, len);
        if !pool.contains(&w) && w != original {
            pool.push(w);
        }
    }
    let candidates: Vec<Candidate> = pool
        .iter()
        .map(|w| Candidate::new(w.as_str(), rng.gen_range(0.0..1.0)))
        .collect();

    // one rejection reason per ineligible candidate
    let mut real = vec![
        original.clone(),
        "the".into(),
        "court".into(),
        "issued".into(),
        "today".into(),
    ];
    let mut tags = vec![(original.clone(), CoarsePos::Noun)];
    let mut lexicon = ComplexWordLexicon::default();
    lexicon.insert_word(&original, Provenance::Rule2);
    let mut eligible = Vec::new();
    for w in &pool {
        match rng.gen_range(0..10) {
            0 => {
                real.push(w.clone());
                tags.push((w.clone(), CoarsePos::Verb));
            }
            1 => {
                real.push(w.clone());
                tags.push((w.clone(), CoarsePos::Noun));
                lexicon.insert_word(w, Provenance::Rule1);
            }
            2 => tags.push((w.clone(), CoarsePos::Noun)),
            _ => {
                real.push(w.clone());
                tags.push((w.clone(), CoarsePos::Noun));
                eligible.push(w.clone());
            }
        }
    }

    let mut vectors = HashMap::new();
    let mut emb = Embeddings::new(4);
    for w in pool.iter().chain([&original]) {
        if w == &original || rng.gen_bool(0.8) {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            emb.insert(w.as_str(), v.clone()).unwrap();
            vectors.insert(w.clone(), v);
        }
    }

    let mut zipf = HashMap::new();
    zipf.insert("court".to_string(), 5.1);
    for w in &pool {
        if rng.gen_bool(0.7) {
            zipf.insert(w.clone(), rng.gen_range(1.0..7.0));
        }
    }
    let general = ZipfTable::from_values("general", zipf.clone()).unwrap();

    let mut provider = FixtureProvider::new();
    let mut losses = HashMap::new();
    for w in &pool {
        let s = format!("The court issued the {w} today.");
        for position in [2usize, 3, 5] {
            let loss = rng.gen_range(0.1..5.0);
            provider.insert_loss(s.clone(), position, loss);
            losses.insert((s.clone(), position), loss);
        }
    }

    let weights = if seed.is_multiple_of(2) {
        RankingWeights::default()
    } else {
        RankingWeights::from_array(std::array::from_fn(|_| rng.gen_range(0.0..6.0)))
    };
    let resources =
        WordResources::new(emb, real, Box::new(RuleTagger::with_lexicon(tags)), general).unwrap();
    RankingCase {
        span: TokenSpan {
            start: 4,
            end: 5,
            surface: original.clone(),
        },
        sentence,
        candidates,
        provider,
        resources,
        lexicon,
        weights,
        vectors,
        zipf,
        losses,
        eligible,
    }
}

/// Exhaustive scoring of the eligible candidates, best first.
fn oracle_ranking(case: &RankingCase, weights: &RankingWeights) -> Vec<(String, f64)> {
    let original = &case.span.surface;
    let unseen = case.zipf.values().copied().fold(f64::INFINITY, f64::min);
    let mut scored: Vec<(String, f64, f64)> = case
        .candidates
        .iter()
        .filter(|c| case.eligible.contains(&c.token))
        .map(|c| {
            let w = &c.token;
            let f_c = match case.vectors.get(w) {
                Some(v) => cos(&case.vectors[original], v),
                None => 0.0,
            };
            let s = format!("The court issued the {w} today.");
            let sum: f64 = [2usize, 3, 5]
                .iter()
                .map(|&p| case.losses[&(s.clone(), p)])
                .sum();
            let f_lm = (1.0 / sum).min(DEFAULT_MAX_LM_FEATURE);
            let f_f = case.zipf.get(w).copied().unwrap_or(unseen);
            let f_l = (w.len() as f64).powf(-3.78);
            let score = weights.w_b * c.prob
                + weights.w_c * f_c
                + weights.w_lm * f_lm
                + weights.w_f * f_f
                + weights.w_l * f_l;
            (w.clone(), score, c.prob)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(w, s, _)| (w, s)).collect()
}

fn ranking_oracle() -> Check {
    let start = Instant::now();
    let mut with_choice = 0;
    for seed in 0..100u64 {
        let case = ranking_case(seed);
        let set = CandidateSet {
            slots: vec![case.candidates.clone()],
            n_requested: 10,
        };
        let mut chosen_at_scale = Vec::new();
        for c in [0.1, 1.0, 7.0] {
            let weights = case.weights.scaled(c);
            let ctx = RankingContext {
                weights: &weights,
                lexicon: &case.lexicon,
                resources: &case.resources,
                provider: &case.provider,
                max_lm_feature: DEFAULT_MAX_LM_FEATURE,
            };
            let out =
                select_substitutions(&case.sentence, std::slice::from_ref(&case.span), &set, &ctx)
                    .map_err(|e| format!("fixture {seed}: {e}"))?;
            let sub = &out.substitutions[0];
            let oracle = oracle_ranking(&case, &weights);
            ensure!(
                sub.ranked.len() == oracle.len(),
                "fixture {seed}: {} ranked vs {} eligible",
                sub.ranked.len(),
                oracle.len()
            );
            for (got, (word, score)) in sub.ranked.iter().zip(&oracle) {
                ensure!(
                    &got.token == word,
                    "fixture {seed} c={c}: order {} vs {word}",
                    got.token
                );
                ensure!(
                    (got.score - score).abs() <= SCORE_TOL * score.abs().max(1.0),
                    "fixture {seed}: score {} vs {score}",
                    got.score
                );
            }
            let expected_text = match oracle.first() {
                Some((w, _)) => case.sentence.replace(&case.span.surface, w),
                None => case.sentence.clone(),
            };
            ensure!(
                out.text == expected_text,
                "fixture {seed}: output {:?}",
                out.text
            );
            chosen_at_scale.push(sub.chosen().map(|s| s.token.clone()));
        }
        ensure!(
            chosen_at_scale.windows(2).all(|w| w[0] == w[1]),
            "fixture {seed}: argmax changes with scale: {chosen_at_scale:?}"
        );
        with_choice += usize::from(chosen_at_scale[0].is_some());
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "100 fixtures match enumeration ({with_choice} with a substitution), scale-invariant"
    ))
}

fn feature_formulas() -> Check {
    for len in 1..=30usize {
        let oracle = (len as f64).powf(-3.78);
        ensure!(
            (length_feature(len) - oracle).abs() <= FEATURE_TOL,
            "f_l({len})"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let f: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..8.0));
        let w: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.0..6.0));
        let features = CandidateFeatures {
            f_b: f[0],
            f_c: f[1],
            f_lm: f[2],
            f_f: f[3],
            f_l: f[4],
        };
        let dot: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
        let got = aggregate_score(&features, &RankingWeights::from_array(w));
        ensure!((got - dot).abs() <= FEATURE_TOL, "aggregate {got} vs {dot}");
    }
    let table = [3.00, 1.42, 0.36, 2.00, 4.61];
    ensure!(
        RankingWeights::default().to_array() == table,
        "defaults {:?}",
        RankingWeights::default()
    );
    let settings = Settings::from_key_values(&KeyValues::new()).map_err(|e| e.to_string())?;
    ensure!(
        settings.pipeline.weights.to_array() == table,
        "config defaults {:?}",
        settings.pipeline.weights
    );
    let parsed = RankingWeights::parse("", Path::new("weights.cfg")).map_err(|e| e.to_string())?;
    ensure!(parsed.to_array() == table, "empty weights file {parsed:?}");
    Ok("f_l for 1..30, 1000 dot products, default weights exact".into())
}

#[derive(Deserialize)]
struct ReadabilityFixture {
    text: String,
    fkgl: f64,
    dc: f64,
}

fn brute_force_sd(original: &[&str], output: &[&str], vecs: &HashMap<&str, Vec<f64>>) -> f64 {
    let windows = |ws: &[&str]| -> Vec<Vec<f64>> {
        let size = SD_WINDOW.min(ws.len());
        (0..=ws.len() - size)
            .filter_map(|s| {
                let known: Vec<&Vec<f64>> =
                    ws[s..s + size].iter().filter_map(|w| vecs.get(w)).collect();
                if known.is_empty() {
                    return None;
                }
                let dim = known[0].len();
                Some(
                    (0..dim)
                        .map(|d| known.iter().map(|v| v[d]).sum::<f64>() / known.len() as f64)
                        .collect(),
                )
            })
            .collect()
    };
    let src = windows(original);
    let out = windows(output);
    let total: f64 = out
        .iter()
        .map(|o| {
            src.iter()
                .map(|s| cos(o, s))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    6.0 * (1.0 - total / out.len() as f64)
}

fn metrics() -> Check {
    let familiar =
        FamiliarWordList::load(&data("familiar_small.txt")).map_err(|e| e.to_string())?;
    let fixtures: Vec<ReadabilityFixture> =
        serde_json::from_str(&std::fs::read_to_string(data("readability.json")).unwrap()).unwrap();
    ensure!(
        fixtures.len() == 10,
        "{} readability fixtures",
        fixtures.len()
    );
    for f in &fixtures {
        let g = fkgl(&f.text).map_err(|e| e.to_string())?;
        let d = dale_chall(&f.text, &familiar).map_err(|e| e.to_string())?;
        ensure!(
            (g - f.fkgl).abs() <= READABILITY_TOL,
            "FKGL {g} vs {} for {:?}",
            f.fkgl,
            f.text
        );
        ensure!(
            (d - f.dc).abs() <= READABILITY_TOL,
            "DC {d} vs {} for {:?}",
            f.dc,
            f.text
        );
    }

    const VOCAB: [&str; 10] = [
        "court", "judge", "ruled", "tenant", "rent", "paid", "late", "notice", "owner", "sale",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut emb = Embeddings::new(6);
    for w in VOCAB {
        emb.insert(w, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
    }
    let sentence = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.gen_range(1..15);
        (0..n)
            .map(|_| *VOCAB.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for i in 0..1000 {
        let x = sentence(&mut rng);
        let y = sentence(&mut rng);
        let same = semantic_difference(&x, &x, &emb).map_err(|e| e.to_string())?;
        ensure!(same == 0.0, "SD(x, x) = {same} for {x:?}");
        let sd = semantic_difference(&x, &y, &emb).map_err(|e| e.to_string())?;
        ensure!((0.0..=12.0).contains(&sd), "pair {i}: SD {sd}");
    }

    for case in 0..20 {
        let mut vecs: HashMap<&str, Vec<f64>> = HashMap::new();
        let mut glove = String::new();
        for w in VOCAB {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nums: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            glove.push_str(&format!("{w} {}\n", nums.join(" ")));
            vecs.insert(w, v);
        }
        let emb = Embeddings::parse(&glove, Path::new("case")).unwrap();
        let mut pick = |n: usize| -> Vec<&str> {
            let mut ws: Vec<&str> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        "zzz"
                    } else {
                        *VOCAB.choose(&mut rng).unwrap()
                    }
                })
                .collect();
            ws.push("court");
            ws
        };
        let a = pick(2 + case % 10);
        let b = pick(2 + (case * 7) % 12);
        let oracle = brute_force_sd(&a, &b, &vecs);
        let got =
            semantic_difference(&a.join(" "), &b.join(" "), &emb).map_err(|e| e.to_string())?;
        ensure!(
            (got - oracle).abs() <= SD_TOL,
            "SD fixture {case}: {got} vs {oracle}"
        );
    }
    Ok("10 readability fixtures, 1000 SD pairs, 20 SD oracles".into())
}

#[derive(Deserialize)]
struct SplitFixture {
    sentence: String,
    leaves: Vec<String>,
}

fn check_tree(node: &SplitNode, depth: usize, config: &SplitConfig) -> Result<(), String> {
    ensure!(
        depth <= config.max_depth,
        "depth {depth} beyond limit in {:?}",
        node.text
    );
    if node.is_leaf() {
        if depth < config.max_depth {
            ensure!(
                split_sentence(&node.text, config).is_leaf(),
                "leaf {:?} splits again",
                node.text
            );
        }
        return Ok(());
    }
    ensure!(
        node.children.len() == 2,
        "{} children for {:?}",
        node.children.len(),
        node.text
    );
    ensure!(
        node.children[0].label == Label::Core && node.children[1].label == Label::Context,
        "labels of {:?}",
        node.text
    );
    for child in &node.children {
        check_tree(child, depth + 1, config)?;
    }
    Ok(())
}

fn splitting() -> Check {
    let config = SplitConfig::default();
    let fixtures: Vec<SplitFixture> =
        serde_json::from_str(&std::fs::read_to_string(data("split_fixtures.json")).unwrap())
            .unwrap();
    ensure!(fixtures.len() == 30, "{} split fixtures", fixtures.len());
    let mut applied = 0;
    for f in &fixtures {
        let tree = split_sentence(&f.sentence, &config);
        check_tree(&tree, 0, &config)?;
        let leaves = flatten_tree(&tree, LeafOrder::CoreFirst);
        ensure!(leaves == f.leaves, "{:?} gave {leaves:?}", f.sentence);
        applied += usize::from(!tree.is_leaf());
    }
    let before = split_sentence(
        "Before filing a petition for a divorce the plaintiff must have lived within the state at least one year.",
        &config,
    );
    ensure!(
        before.rule == SplitRule::Subordinate,
        "before-clause rule {:?}",
        before.rule
    );
    ensure!(
        flatten_tree(&before, LeafOrder::CoreFirst).len() == 2,
        "before-clause leaves"
    );
    let context = &before.children[1];
    ensure!(
        context.label == Label::Context && context.text.contains("filing a petition for a divorce"),
        "context child {:?}",
        context.text
    );
    Ok(format!(
        "30 fixtures ({applied} split), before-clause is context"
    ))
}

const MINIMUM: [f64; 5] = [3.0, 1.4, 0.4, 2.0, 4.6];

fn quadratic(w: &[f64]) -> Result<f64, String> {
    let scales = [1.0, 2.0, 0.5, 1.5, 1.0];
    Ok(w.iter()
        .zip(MINIMUM)
        .zip(scales)
        .map(|((x, m), s)| s * (x - m) * (x - m))
        .sum::<f64>()
        + 0.7)
}

fn optimizer() -> Check {
    let start = Instant::now();
    let domain = SearchDomain::default();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let a = optimize_weights(quadratic, &domain, 200, seed).map_err(|e| e.to_string())?;
        let b = optimize_weights(quadratic, &domain, 200, seed).map_err(|e| e.to_string())?;
        ensure!(
            serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
            "seed {seed}: traces differ"
        );
        let d = a
            .best()
            .point
            .iter()
            .zip(MINIMUM)
            .map(|(x, m)| (x - m).abs())
            .fold(0.0, f64::max);
        ensure!(d <= OPTIMUM_TOL, "seed {seed}: L-inf distance {d}");
        worst = worst.max(d);
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "seeds 0-4 within {worst:.3} of the minimum, traces reproducible"
    ))
}

fn enumeration_p(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let rank = |v: f64| {
        let below = d.iter().filter(|o| o.abs() < v.abs()).count() as f64;
        let equal = d.iter().filter(|o| o.abs() == v.abs()).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = d.iter().map(|v| rank(*v)).collect();
    let observed: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = d.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        le += u64::from(w <= observed + 1e-9);
        ge += u64::from(w >= observed - 1e-9);
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

fn paired_sample(rng: &mut ChaCha8Rng, n: usize, shift: f64, ties: bool) -> (Vec<f64>, Vec<f64>) {
    let mut draw = |s: f64| {
        let v: f64 = rng.gen_range(0.0..10.0) + s;
        if ties {
            v.round()
        } else {
            v
        }
    };
    let x: Vec<f64> = (0..n).map(|_| draw(0.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| draw(shift)).collect();
    (x, y)
}

fn wilcoxon() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut exact_cases = 0;
    for n in 5..=12 {
        for rep in 0..15 {
            let (x, y) = paired_sample(&mut rng, n, (rep % 4) as f64 * 0.8, rep % 3 == 0);
            let Ok(p) = wilcoxon_signed_rank(&x, &y) else {
                continue;
            };
            let oracle = enumeration_p(&x, &y);
            ensure!(
                (p - oracle).abs() <= EXACT_P_TOL,
                "n={n} rep={rep}: {p} vs {oracle}"
            );
            exact_cases += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for rep in 0..40 {
        let (x, y) = paired_sample(&mut rng, 12, 5.0, false);
        let exact = signed_rank_test(&x, &y, Some(Method::Exact))
            .map_err(|e| e.to_string())?
            .p_value;
        let normal = signed_rank_test(&x, &y, Some(Method::Normal))
            .map_err(|e| e.to_string())?
            .p_value;
        worst = worst.max((exact - normal).abs());
        ensure!(
            (exact - normal).abs() <= APPROX_P_TOL,
            "rep {rep}: exact {exact} normal {normal}"
        );
    }
    Ok(format!("{exact_cases} exact p-values match enumeration; n=12 approximation off by at most {worst:.4}"))
}

fn corpus_means(records: &[SimplificationRecord]) -> Result<[f64; 5], String> {
    let n = records.len() as f64;
    let mut sums = [0.0; 5];
    for r in records {
        let s = r
            .scores
            .as_ref()
            .ok_or(format!("no scores for {:?}", r.original))?;
        sums[0] += s.original.fkgl;
        sums[1] += s.final_.fkgl;
        sums[2] += s.original.dc;
        sums[3] += s.final_.dc;
        sums[4] += s.final_.sd.ok_or(format!("no SD for {:?}", r.original))?;
    }
    Ok(sums.map(|s| s / n))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let dir = data("golden");
    let settings = Settings::from_key_values(
        &KeyValues::load(&dir.join("uslt.cfg")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let resources = Resources::load(&settings.paths, &settings.cwi).map_err(|e| e.to_string())?;
    let provider = settings
        .provider
        .as_ref()
        .ok_or("no provider")?
        .open()
        .map_err(|e| e.to_string())?;
    let sentences: Vec<String> = std::fs::read_to_string(dir.join("sentences.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    ensure!(
        sentences.len() == 50,
        "{} golden sentences",
        sentences.len()
    );
    let run = |config: &PipelineConfig| -> Result<Vec<SimplificationRecord>, String> {
        simplify_batch(&sentences, config, &resources, &provider)
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    };
    let with_split = corpus_means(&run(&settings.pipeline)?)?;
    let without_split = corpus_means(&run(&PipelineConfig {
        split_enabled: false,
        ..settings.pipeline.clone()
    })?)?;
    let [fk_orig, fk_final, dc_orig, dc_final, sd_split] = with_split;
    let sd_no_split = without_split[4];
    ensure!(
        fk_final < fk_orig,
        "FKGL {fk_final:.3} not below {fk_orig:.3}"
    );
    ensure!(
        dc_final < dc_orig,
        "DC {dc_final:.3} not below {dc_orig:.3}"
    );
    ensure!(
        sd_no_split < sd_split,
        "SD without split {sd_no_split:.3} not below {sd_split:.3}"
    );
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "FKGL {fk_orig:.2} -> {fk_final:.2}, DC {dc_orig:.2} -> {dc_final:.2}, SD {sd_no_split:.3} (no split) < {sd_split:.3}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("zipf correctness", zipf_correctness),
        ("cwi oracle equivalence", cwi_oracle),
        ("ranking oracle", ranking_oracle),
        ("feature formulas", feature_formulas),
        ("metrics", metrics),
        ("splitting", splitting),
        ("optimizer", optimizer),
        ("wilcoxon", wilcoxon),
        ("end-to-end direction", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
