//! Complex word identification.
//!
//! A word is complex when it is rare in everyday language
//! (`Z_S < mu_S - k_general * sigma_S`) or markedly more common in legal text
//! than in everyday text (`Z_S < Z_L - k_domain * sigma_D`). Multi-word legal
//! expressions come from a fixed phrase list.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_list, read_to_string, Error, Result};
use crate::frequency::ZipfTable;
use crate::text::{self, Token};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwiConfig {
    pub k_general: f64,
    pub k_domain: f64,
}

impl Default for CwiConfig {
    fn default() -> Self {
        CwiConfig {
            k_general: 2.0,
            k_domain: 2.0,
        }
    }
}

impl CwiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_general > 0.0 && self.k_domain > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "CWI multipliers must be positive, got {} and {}",
                self.k_general, self.k_domain
            )))
        }
    }
}

/// Why an entry is in the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Rare in the general corpus.
    Rule1,
    /// Much more frequent in the legal corpus.
    Rule2,
    PhraseList,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::Rule1 => "rule1",
            Provenance::Rule2 => "rule2",
            Provenance::PhraseList => "phrase-list",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "rule1" => Some(Provenance::Rule1),
            "rule2" => Some(Provenance::Rule2),
            "phrase-list" => Some(Provenance::PhraseList),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexWordLexicon {
    words: BTreeMap<String, BTreeSet<Provenance>>,
    phrases: BTreeSet<Vec<String>>,
    max_phrase_len: usize,
}

impl ComplexWordLexicon {
    pub fn is_complex(&self, word: &str) -> bool {
        self.words.contains_key(&word.to_lowercase())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.keys().map(String::as_str)
    }

    pub fn phrases(&self) -> impl Iterator<Item = &[String]> {
        self.phrases.iter().map(Vec::as_slice)
    }

    pub fn provenance(&self, word: &str) -> Option<&BTreeSet<Provenance>> {
        self.words.get(word)
    }

    pub fn contains_phrase(&self, phrase: &[&str]) -> bool {
        let key: Vec<String> = phrase.iter().map(|w| w.to_lowercase()).collect();
        self.phrases.contains(&key)
    }

    pub fn insert_word(&mut self, word: &str, why: Provenance) {
        self.words
            .entry(word.to_lowercase())
            .or_default()
            .insert(why);
    }

    /// Adds a phrase-list entry. Single-word entries become complex words.
    pub fn insert_entry(&mut self, entry: &str) {
        let tokens: Vec<String> = text::words(entry).collect();
        match tokens.len() {
            0 => {}
            1 => self.insert_word(&tokens[0], Provenance::PhraseList),
            n => {
                self.max_phrase_len = self.max_phrase_len.max(n);
                self.phrases.insert(tokens);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.words.len() + self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `entry<TAB>provenance[,provenance]` lines; phrases contain spaces.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("#uslt-lexicon\n");
        for (w, why) in &self.words {
            let tags: Vec<&str> = why.iter().map(|p| p.as_str()).collect();
            let _ = writeln!(out, "{w}\t{}", tags.join(","));
        }
        for p in &self.phrases {
            let _ = writeln!(out, "{}\tphrase-list", p.join(" "));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let content = read_to_string(path)?;
        let mut lex = ComplexWordLexicon::default();
        for (idx, line) in content.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (entry, tags) = line.split_once('\t').unwrap_or((line, "phrase-list"));
            if entry.contains(' ') {
                lex.insert_entry(entry);
                continue;
            }
            for tag in tags.split(',') {
                let why = Provenance::parse(tag.trim()).ok_or_else(|| {
                    Error::parse(path, idx + 1, format!("unknown provenance {tag:?}"))
                })?;
                lex.insert_word(entry, why);
            }
        }
        Ok(lex)
    }
}

/// Flags complex words from the two Zipf tables and appends the phrase list.
pub fn build_complex_lexicon(
    general: &ZipfTable,
    legal: &ZipfTable,
    phrase_file: Option<&Path>,
    config: &CwiConfig,
) -> Result<ComplexWordLexicon> {
    config.validate()?;
    if general.is_empty() || legal.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut lex = ComplexWordLexicon::default();

    let rare_threshold = general.mean() - config.k_general * general.std();
    for (word, z) in general.iter() {
        if z < rare_threshold {
            lex.insert_word(word, Provenance::Rule1);
        }
    }

    let margin = config.k_domain * legal.std();
    for (word, z_legal) in legal.iter() {
        if general.value_or_unseen(word) < z_legal - margin {
            lex.insert_word(word, Provenance::Rule2);
        }
    }

    if let Some(path) = phrase_file {
        for entry in read_list(path)? {
            lex.insert_entry(&entry);
        }
    }
    Ok(lex)
}

/// A half-open range of token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Finds complex phrases (longest match, left to right) and then single
/// complex words outside those phrases that are not named entities.
pub fn identify_complex_spans<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &ComplexWordLexicon,
    ne_tags: &[bool],
) -> Vec<TokenSpan> {
    assert_eq!(tokens.len(), ne_tags.len(), "one NE tag per token");
    let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let surface = |s: usize, e: usize| {
        tokens[s..e]
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (2..=lexicon.max_phrase_len.min(tokens.len() - i))
            .rev()
            .find(|&n| lexicon.phrases.contains(&lower[i..i + n]));
        if let Some(n) = longest {
            spans.push(TokenSpan {
                start: i,
                end: i + n,
                surface: surface(i, i + n),
            });
            i += n;
        } else {
            if !ne_tags[i] && lexicon.words.contains_key(&lower[i]) {
                spans.push(TokenSpan {
                    start: i,
                    end: i + 1,
                    surface: tokens[i].as_ref().to_string(),
                });
            }
            i += 1;
        }
    }
    spans
}

/// Heuristic named-entity tagger: a capitalized word that is not the first
/// word of the sentence, or any word found in the gazetteer.
#[derive(Debug, Clone, Default)]
pub struct NamedEntityTagger {
    gazetteer: HashSet<String>,
}

impl NamedEntityTagger {
    pub fn new<I: IntoIterator<Item = String>>(gazetteer: I) -> Self {
        NamedEntityTagger {
            gazetteer: gazetteer.into_iter().map(|g| g.to_lowercase()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_list(path)?))
    }

    pub fn tag(&self, tokens: &[Token]) -> Vec<bool> {
        let first_word = tokens.iter().position(Token::is_word);
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.is_word()
                    && ((Some(i) != first_word && text::is_capitalized(&t.text))
                        || self.gazetteer.contains(&t.text.to_lowercase()))
            })
            .collect()
    }
}
