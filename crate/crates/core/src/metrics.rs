//! Readability (FKGL, Dale-Chall) and meaning preservation (semantic
//! difference) scores for original and simplified text.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine, Embeddings};
use crate::error::{read_list, Error, Result};
use crate::syllables::count_syllables;
use crate::text::{split_sentences, tokenize, TokenKind};

pub const SD_WINDOW: usize = 5;

/// Familiar words for the Dale-Chall difficult-word test.
#[derive(Debug, Clone)]
pub struct FamiliarWordList {
    words: HashSet<String>,
}

impl FamiliarWordList {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(|w| normalize(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Config("familiar word list is empty".into()));
        }
        Ok(FamiliarWordList { words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(read_list(path)?)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Case-insensitive lookup after stripping punctuation. A possessive or
    /// hyphenated word is familiar if its stem, or every part, is.
    pub fn contains(&self, word: &str) -> bool {
        let w = normalize(word);
        if w.is_empty() || self.words.contains(&w) {
            return true;
        }
        if let Some(stem) = w.strip_suffix("'s") {
            if self.words.contains(stem) {
                return true;
            }
        }
        w.contains('-') && w.split('-').all(|p| p.is_empty() || self.words.contains(p))
    }
}

fn normalize(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
        .replace('\u{2019}', "'")
}

/// Dale-Chall difficult-word term: percentage (`100 * n_dw / n_w`) or the
/// bare ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcForm {
    #[default]
    Percentage,
    Ratio,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCounts {
    pub n_sentences: usize,
    pub n_words: usize,
    pub n_syllables: usize,
    pub n_difficult_words: usize,
}

impl TextCounts {
    /// Counts sentences, words and syllables; difficult words only when a
    /// familiar list is given. Sentences without words are not counted.
    pub fn of(text: &str, familiar: Option<&FamiliarWordList>) -> Result<Self> {
        let mut c = TextCounts::default();
        for sentence in split_sentences(text) {
            let mut any = false;
            for tok in tokenize(&sentence).into_iter().filter(|t| t.is_word()) {
                any = true;
                c.n_words += 1;
                c.n_syllables += count_syllables(&tok.text)?;
                if familiar.is_some_and(|f| !f.contains(&tok.text)) {
                    c.n_difficult_words += 1;
                }
            }
            c.n_sentences += usize::from(any);
        }
        if c.n_words == 0 {
            return Err(Error::EmptyText);
        }
        Ok(c)
    }

    pub fn words_per_sentence(&self) -> f64 {
        self.n_words as f64 / self.n_sentences as f64
    }

    pub fn fkgl(&self) -> f64 {
        0.39 * self.words_per_sentence() + 11.8 * (self.n_syllables as f64 / self.n_words as f64)
            - 15.59
    }

    pub fn dale_chall(&self, form: DcForm) -> f64 {
        let ratio = self.n_difficult_words as f64 / self.n_words as f64;
        let difficult = match form {
            DcForm::Percentage => 100.0 * ratio,
            DcForm::Ratio => ratio,
        };
        0.1579 * difficult + 0.0496 * self.words_per_sentence()
    }
}

pub fn fkgl(text: &str) -> Result<f64> {
    Ok(TextCounts::of(text, None)?.fkgl())
}

pub fn dale_chall(text: &str, familiar: &FamiliarWordList) -> Result<f64> {
    dale_chall_with(text, familiar, DcForm::Percentage)
}

pub fn dale_chall_with(text: &str, familiar: &FamiliarWordList, form: DcForm) -> Result<f64> {
    Ok(TextCounts::of(text, Some(familiar))?.dale_chall(form))
}

/// Mean-pooled vectors of every stride-1 window of `size` tokens; the whole
/// text is one window when shorter. Windows with no known word are dropped.
pub fn window_vectors(text: &str, emb: &Embeddings, size: usize) -> Vec<Vec<f64>> {
    let toks: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.text.to_lowercase())
        .collect();
    if toks.is_empty() {
        return Vec::new();
    }
    let size = size.clamp(1, toks.len());
    toks.windows(size)
        .filter_map(|w| emb.mean_vector(w))
        .collect()
}

/// `6 * (1 - sim)`, where `sim` averages, over output windows, the best
/// cosine against any original window. Ranges over [0, 12].
pub fn semantic_difference(original: &str, output: &str, emb: &Embeddings) -> Result<f64> {
    let src = window_vectors(original, emb, SD_WINDOW);
    if src.is_empty() {
        return Err(Error::NoEmbeddings("original text"));
    }
    let out = window_vectors(output, emb, SD_WINDOW);
    if out.is_empty() {
        return Err(Error::NoEmbeddings("output text"));
    }
    let total: f64 = out
        .iter()
        .map(|o| {
            src.iter()
                .map(|s| if s == o { 1.0 } else { cosine(o, s) })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    let sim = total / out.len() as f64;
    Ok((6.0 * (1.0 - sim)).clamp(0.0, 12.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub fkgl: f64,
    pub dc: f64,
    pub sd: f64,
    pub counts: TextCounts,
}

impl ReadabilityReport {
    /// Scores `output` for readability and against `original` for meaning.
    pub fn evaluate(
        original: &str,
        output: &str,
        emb: &Embeddings,
        familiar: &FamiliarWordList,
        form: DcForm,
    ) -> Result<Self> {
        let counts = TextCounts::of(output, Some(familiar))?;
        Ok(ReadabilityReport {
            fkgl: counts.fkgl(),
            dc: counts.dale_chall(form),
            sd: semantic_difference(original, output, emb)?,
            counts,
        })
    }
}
