//! Substitution ranking: candidate elimination, the five ranking features,
//! the weighted score and the final substitution.
//!
//! Features of a candidate `c` replacing original word `w`:
//!
//! | feature | value |
//! |---------|-------|
//! | `f_b`   | masked-LM probability of `c` |
//! | `f_c`   | cosine similarity of the embeddings of `w` and `c` |
//! | `f_lm`  | `1 / (L(w-2) + L(w-1) + L(w+1) + L(w+2))`, losses of the window neighbours with `c` in place |
//! | `f_f`   | Zipf value of `c` in the general corpus |
//! | `f_l`   | `len(c)^-3.78` (brevity law with `delta = 2.8`, `alpha1 = 1.4`, `alpha2 = 2.75`) |

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::{Candidate, CandidateSet, LossRequest, MaskedLmProvider, ProviderError};
use crate::cwi::{ComplexWordLexicon, TokenSpan};
use crate::embeddings::{cosine, Embeddings};
use crate::error::{read_list, read_to_string, Error, Result};
use crate::frequency::ZipfTable;
use crate::pos::{CoarsePos, PosTagger, RuleTagger};
use crate::text::{self, Token};

/// `delta * (alpha1 - alpha2)` = 2.8 * (1.4 - 2.75).
pub const LENGTH_EXPONENT: f64 = -3.78;

pub const DEFAULT_MAX_LM_FEATURE: f64 = 10.0;

/// `len^-3.78`.
pub fn length_feature(len: usize) -> f64 {
    (len as f64).powf(LENGTH_EXPONENT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    Probability,
    Cosine,
    LmLoss,
    Frequency,
    Length,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Probability,
        Feature::Cosine,
        Feature::LmLoss,
        Feature::Frequency,
        Feature::Length,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Feature::Probability => "w_b",
            Feature::Cosine => "w_c",
            Feature::LmLoss => "w_lm",
            Feature::Frequency => "w_f",
            Feature::Length => "w_l",
        }
    }
}

impl std::str::FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "b" | "prob" | "probability" => Ok(Feature::Probability),
            "c" | "cos" | "cosine" => Ok(Feature::Cosine),
            "lm" | "loss" | "lm-loss" => Ok(Feature::LmLoss),
            "f" | "freq" | "frequency" => Ok(Feature::Frequency),
            "l" | "len" | "length" => Ok(Feature::Length),
            _ => Err(format!("unknown feature {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateFeatures {
    pub f_b: f64,
    pub f_c: f64,
    pub f_lm: f64,
    pub f_f: f64,
    pub f_l: f64,
}

/// Weights of the five features; the optimization domain is [0, 6] each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingWeights {
    pub w_b: f64,
    pub w_c: f64,
    pub w_lm: f64,
    pub w_f: f64,
    pub w_l: f64,
}

impl Default for RankingWeights {
    /// Weights learned on the legal validation set.
    fn default() -> Self {
        RankingWeights {
            w_b: 3.00,
            w_c: 1.42,
            w_lm: 0.36,
            w_f: 2.00,
            w_l: 4.61,
        }
    }
}

impl RankingWeights {
    /// Order: `w_b, w_c, w_lm, w_f, w_l`.
    pub fn from_array(w: [f64; 5]) -> Self {
        RankingWeights {
            w_b: w[0],
            w_c: w[1],
            w_lm: w[2],
            w_f: w[3],
            w_l: w[4],
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.w_b, self.w_c, self.w_lm, self.w_f, self.w_l]
    }

    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Probability => self.w_b,
            Feature::Cosine => self.w_c,
            Feature::LmLoss => self.w_lm,
            Feature::Frequency => self.w_f,
            Feature::Length => self.w_l,
        }
    }

    fn slot(&mut self, f: Feature) -> &mut f64 {
        match f {
            Feature::Probability => &mut self.w_b,
            Feature::Cosine => &mut self.w_c,
            Feature::LmLoss => &mut self.w_lm,
            Feature::Frequency => &mut self.w_f,
            Feature::Length => &mut self.w_l,
        }
    }

    /// Copy with `feature` switched off.
    pub fn without(mut self, feature: Feature) -> Self {
        *self.slot(feature) = 0.0;
        self
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::from_array(self.to_array().map(|w| w * c))
    }

    /// Parses `key=value` lines (`w_b=3.00`). Missing keys keep their defaults.
    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut w = RankingWeights::default();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected key=value"))?;
            let feature = Feature::ALL
                .into_iter()
                .find(|f| f.key() == k.trim())
                .ok_or_else(|| Error::parse(path, idx + 1, format!("unknown weight {k:?}")))?;
            *w.slot(feature) = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad number {v:?}")))?;
        }
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for f in Feature::ALL {
            let _ = writeln!(out, "{}={}", f.key(), self.get(f));
        }
        out
    }
}

/// `W_B*F_B + W_C*F_C + W_LM*F_LM + W_L*F_L + W_F*F_F`.
pub fn aggregate_score(f: &CandidateFeatures, w: &RankingWeights) -> f64 {
    w.w_b * f.f_b + w.w_c * f.f_c + w.w_lm * f.f_lm + w.w_l * f.f_l + w.w_f * f.f_f
}

/// Lexical resources used during ranking. Read-only once loaded.
pub struct WordResources {
    pub embeddings: Embeddings,
    pub real_words: HashSet<String>,
    pub tagger: Box<dyn PosTagger>,
    /// General-language Zipf table, source of `f_f`.
    pub general: ZipfTable,
}

impl WordResources {
    pub fn new(
        embeddings: Embeddings,
        real_words: impl IntoIterator<Item = String>,
        tagger: Box<dyn PosTagger>,
        general: ZipfTable,
    ) -> Result<Self> {
        let real_words: HashSet<String> =
            real_words.into_iter().map(|w| w.to_lowercase()).collect();
        if real_words.is_empty() {
            return Err(Error::Config("real-word list is empty".into()));
        }
        Ok(WordResources {
            embeddings,
            real_words,
            tagger,
            general,
        })
    }

    pub fn load(
        embeddings: &Path,
        real_words: &Path,
        pos_lexicon: Option<&Path>,
        general: ZipfTable,
    ) -> Result<Self> {
        let tagger = match pos_lexicon {
            Some(p) => RuleTagger::load(p)?,
            None => RuleTagger::default(),
        };
        Self::new(
            Embeddings::load(embeddings)?,
            read_list(real_words)?,
            Box::new(tagger),
            general,
        )
    }

    pub fn is_real_word(&self, word: &str) -> bool {
        self.real_words.contains(&word.to_lowercase())
    }
}

/// A complex span located in its tokenized sentence.
#[derive(Debug, Clone, Copy)]
pub struct Slot<'a> {
    pub sentence: &'a str,
    pub tokens: &'a [Token],
    pub span: &'a TokenSpan,
}

impl<'a> Slot<'a> {
    pub fn byte_range(&self) -> (usize, usize) {
        (
            self.tokens[self.span.start].start,
            self.tokens[self.span.end - 1].end,
        )
    }

    pub fn original_surface(&self) -> &'a str {
        let (a, b) = self.byte_range();
        &self.sentence[a..b]
    }

    pub fn original_words(&self) -> Vec<&'a str> {
        self.tokens[self.span.start..self.span.end]
            .iter()
            .filter(|t| t.is_word())
            .map(|t| t.text.as_str())
            .collect()
    }

    /// Index of the span among the sentence's word tokens.
    pub fn word_position(&self) -> usize {
        self.tokens[..self.span.start]
            .iter()
            .filter(|t| t.is_word())
            .count()
    }

    fn is_sentence_initial(&self) -> bool {
        !self.tokens[..self.span.start].iter().any(Token::is_word)
    }

    /// The candidate as it should appear in the sentence.
    pub fn render(&self, candidate: &str) -> String {
        if self.is_sentence_initial() && text::is_capitalized(self.original_surface()) {
            text::capitalize_first(candidate)
        } else {
            candidate.to_string()
        }
    }

    /// The sentence with the span replaced by `candidate`.
    pub fn substituted(&self, candidate: &str) -> String {
        let (a, b) = self.byte_range();
        format!(
            "{}{}{}",
            &self.sentence[..a],
            self.render(candidate),
            &self.sentence[b..]
        )
    }

    /// Word tokens with the span collapsed into `replacement` (or into its
    /// last word when `None`), and the index of that word.
    fn context_words(&self, replacement: Option<&'a str>) -> (Vec<&'a str>, usize) {
        let before = self.tokens[..self.span.start]
            .iter()
            .filter(|t| t.is_word());
        let after = self.tokens[self.span.end..].iter().filter(|t| t.is_word());
        let head =
            replacement.unwrap_or_else(|| self.original_words().last().copied().unwrap_or(""));
        let mut words: Vec<&str> = before.map(|t| t.text.as_str()).collect();
        let pos = words.len();
        words.push(head);
        words.extend(after.map(|t| t.text.as_str()));
        (words, pos)
    }

    pub fn original_pos(&self, tagger: &dyn PosTagger) -> CoarsePos {
        let (words, pos) = self.context_words(None);
        tagger.tag(&words, pos)
    }

    pub fn candidate_pos(&self, tagger: &dyn PosTagger, candidate: &'a str) -> CoarsePos {
        let (words, pos) = self.context_words(Some(candidate));
        tagger.tag(&words, pos)
    }
}

/// Drops candidates that are complex, not real words, of a different coarse
/// part of speech than the original, or identical to it.
pub fn eliminate_candidates(
    candidates: &[Candidate],
    slot: &Slot<'_>,
    lexicon: &ComplexWordLexicon,
    resources: &WordResources,
) -> Vec<Candidate> {
    let original = slot.original_surface().to_lowercase();
    let original_pos = slot.original_pos(resources.tagger.as_ref());
    candidates
        .iter()
        .filter(|c| {
            let token = c.token.as_str();
            !lexicon.is_complex(token)
                && resources.is_real_word(token)
                && token.to_lowercase() != original
                && slot.candidate_pos(resources.tagger.as_ref(), token) == original_pos
        })
        .cloned()
        .collect()
}

/// Computes the five features of `candidate` for `slot`. The LM feature
/// queries the provider once per window neighbour, masking each in turn in
/// the sentence with the candidate already substituted.
pub fn compute_features(
    candidate: &Candidate,
    slot: &Slot<'_>,
    provider: &dyn MaskedLmProvider,
    resources: &WordResources,
    max_lm_feature: f64,
) -> Result<CandidateFeatures, ProviderError> {
    let token = candidate.token.as_str();

    let original_words = slot.original_words();
    let f_c = if original_words.len() == 1 && original_words[0].eq_ignore_ascii_case(token) {
        if resources.embeddings.get(token).is_some() {
            1.0
        } else {
            0.0
        }
    } else {
        match (
            resources.embeddings.mean_vector(&original_words),
            resources.embeddings.get(token),
        ) {
            (Some(orig), Some(cand)) => cosine(&orig, cand),
            _ => 0.0,
        }
    };

    let sentence = slot.substituted(token);
    let n_words = text::tokenize(&sentence)
        .iter()
        .filter(|t| t.is_word())
        .count();
    let center = slot.word_position();
    let mut loss_sum = 0.0;
    let mut neighbours = 0;
    for position in window_positions(center, n_words) {
        loss_sum += provider.loss(&LossRequest {
            sentence: sentence.clone(),
            position,
        })?;
        neighbours += 1;
    }
    let f_lm = if neighbours == 0 || loss_sum <= 0.0 {
        max_lm_feature
    } else {
        (1.0 / loss_sum).min(max_lm_feature)
    };

    Ok(CandidateFeatures {
        f_b: candidate.prob,
        f_c,
        f_lm,
        f_f: resources.general.value_or_unseen(&token.to_lowercase()),
        f_l: length_feature(token.chars().count()),
    })
}

/// Existing positions among `center-2, center-1, center+1, center+2`.
pub fn window_positions(center: usize, n_words: usize) -> impl Iterator<Item = usize> {
    [-2i64, -1, 1, 2]
        .into_iter()
        .map(move |d| center as i64 + d)
        .filter(move |&p| p >= 0 && (p as usize) < n_words)
        .map(|p| p as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub token: String,
    pub features: CandidateFeatures,
    pub score: f64,
}

/// Higher score first, then higher LM probability, then lexicographic.
pub fn ranking_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            b.features
                .f_b
                .partial_cmp(&a.features.f_b)
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.token.cmp(&b.token))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub span: TokenSpan,
    /// Byte range of the span in the original sentence.
    pub range: (usize, usize),
    pub original: String,
    pub generated: usize,
    pub survivors: usize,
    /// Every scored survivor, best first.
    pub ranked: Vec<ScoredCandidate>,
}

impl Substitution {
    pub fn chosen(&self) -> Option<&ScoredCandidate> {
        self.ranked.first()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingOutcome {
    pub text: String,
    pub substitutions: Vec<Substitution>,
}

#[derive(Clone, Copy)]
pub struct RankingContext<'a> {
    pub weights: &'a RankingWeights,
    pub lexicon: &'a ComplexWordLexicon,
    pub resources: &'a WordResources,
    pub provider: &'a dyn MaskedLmProvider,
    pub max_lm_feature: f64,
}

/// Scores the surviving candidates of one slot, best first. Candidates
/// whose loss queries are rejected or missing are skipped; a transport
/// failure aborts the slot.
pub fn rank_slot(
    candidates: &[Candidate],
    slot: &Slot<'_>,
    ctx: &RankingContext<'_>,
) -> Result<Substitution, ProviderError> {
    let survivors = eliminate_candidates(candidates, slot, ctx.lexicon, ctx.resources);
    let mut ranked = Vec::with_capacity(survivors.len());
    for c in &survivors {
        match compute_features(c, slot, ctx.provider, ctx.resources, ctx.max_lm_feature) {
            Ok(features) => ranked.push(ScoredCandidate {
                token: c.token.clone(),
                score: aggregate_score(&features, ctx.weights),
                features,
            }),
            Err(e) if e.is_retriable() => return Err(e),
            Err(e) => log::warn!("skipping candidate {:?}: {e}", c.token),
        }
    }
    ranked.sort_by(ranking_order);
    Ok(Substitution {
        span: slot.span.clone(),
        range: slot.byte_range(),
        original: slot.original_surface().to_string(),
        generated: candidates.len(),
        survivors: survivors.len(),
        ranked,
    })
}

/// Replaces each span with its best-scoring surviving candidate. Spans
/// without survivors keep their original text.
pub fn select_substitutions(
    sentence: &str,
    spans: &[TokenSpan],
    candidates: &CandidateSet,
    ctx: &RankingContext<'_>,
) -> Result<RankingOutcome> {
    if spans.len() != candidates.slots.len() {
        return Err(Error::Domain(format!(
            "{} spans but {} candidate slots",
            spans.len(),
            candidates.slots.len()
        )));
    }
    let tokens = text::tokenize(sentence);
    let substitutions: Vec<Substitution> = spans
        .iter()
        .zip(&candidates.slots)
        .map(|(span, cands)| {
            let slot = Slot {
                sentence,
                tokens: &tokens,
                span,
            };
            rank_slot(cands, &slot, ctx)
        })
        .collect::<Result<_, _>>()?;

    let mut out = String::with_capacity(sentence.len());
    let mut cursor = 0;
    for (sub, span) in substitutions.iter().zip(spans) {
        let (a, b) = sub.range;
        out.push_str(&sentence[cursor..a]);
        match sub.chosen() {
            Some(best) => {
                let slot = Slot {
                    sentence,
                    tokens: &tokens,
                    span,
                };
                text::agree_article(&mut out, &best.token);
                out.push_str(&slot.render(&best.token));
            }
            None => out.push_str(&sentence[a..b]),
        }
        cursor = b;
    }
    out.push_str(&sentence[cursor..]);
    Ok(RankingOutcome {
        text: out,
        substitutions,
    })
}
