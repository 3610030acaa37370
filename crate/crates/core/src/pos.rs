//! Coarse part-of-speech tagging for candidate filtering.
//!
//! Only the four open classes matter when comparing a candidate with the
//! word it replaces, so the default tagger is a lexicon plus suffix and
//! left-context rules rather than a statistical model.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoarsePos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl FromStr for CoarsePos {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" | "N" | "NN" => Ok(CoarsePos::Noun),
            "VERB" | "V" | "VB" => Ok(CoarsePos::Verb),
            "ADJ" | "J" | "JJ" => Ok(CoarsePos::Adj),
            "ADV" | "R" | "RB" => Ok(CoarsePos::Adv),
            "OTHER" | "X" => Ok(CoarsePos::Other),
            other => Err(format!("unknown tag {other:?}")),
        }
    }
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoarsePos::Noun => "NOUN",
            CoarsePos::Verb => "VERB",
            CoarsePos::Adj => "ADJ",
            CoarsePos::Adv => "ADV",
            CoarsePos::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// Tags the word at `index` of a word sequence.
pub trait PosTagger: Send + Sync {
    fn tag(&self, words: &[&str], index: usize) -> CoarsePos;
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "his", "her", "its", "their", "our", "my",
    "your", "any", "each", "every", "no", "some", "such",
];

const SUBJECT_PRONOUNS: &[&str] = &["i", "you", "he", "she", "it", "we", "they", "who"];

const MODALS: &[&str] = &[
    "can", "could", "may", "might", "must", "shall", "should", "will", "would", "to",
];

const CLOSED_CLASS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "his", "her", "its", "their", "our", "my",
    "your", "any", "each", "every", "no", "some", "such", "i", "you", "he", "she", "it", "we",
    "they", "me", "him", "us", "them", "who", "whom", "whose", "which", "what", "and", "or", "but",
    "nor", "if", "because", "although", "though", "while", "when", "whereas", "unless", "since",
    "of", "in", "on", "at", "by", "for", "with", "without", "from", "to", "into", "onto", "upon",
    "within", "about", "above", "below", "under", "over", "between", "among", "through", "during",
    "before", "after", "against", "toward", "towards", "per", "can", "could", "may", "might",
    "must", "shall", "should", "will", "would", "not", "as", "than", "there", "here", "whether",
    "whereby", "herein", "thereof", "hereby",
];

const COMMON_VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "done", "made", "make", "gave", "give", "given", "took", "take", "taken", "said", "say",
    "held", "hold", "found", "find", "went", "go", "gone", "came", "come", "saw", "see", "seen",
    "got", "get", "put", "set", "let", "sent", "send", "paid", "pay", "sued", "sue", "won", "lost",
    "kept", "left", "brought", "bought", "sold", "told", "thought", "knew", "known", "began",
    "begun", "wrote", "written", "ran", "run", "met", "meet", "agreed", "filed", "ruled", "signed",
    "owed", "owe", "argue", "argued", "claim", "claimed",
];

/// Lexicon, suffix and context rules over four open classes.
#[derive(Debug, Clone)]
pub struct RuleTagger {
    lexicon: HashMap<String, CoarsePos>,
}

impl Default for RuleTagger {
    fn default() -> Self {
        let mut lexicon = HashMap::new();
        for w in CLOSED_CLASS {
            lexicon.insert(w.to_string(), CoarsePos::Other);
        }
        for w in COMMON_VERBS {
            lexicon.insert(w.to_string(), CoarsePos::Verb);
        }
        RuleTagger { lexicon }
    }
}

impl RuleTagger {
    /// Default rules extended with `word<TAB>TAG` entries. Entries override
    /// the built-in lexicon.
    pub fn with_lexicon<I: IntoIterator<Item = (String, CoarsePos)>>(entries: I) -> Self {
        let mut t = RuleTagger::default();
        for (w, tag) in entries {
            t.lexicon.insert(w.to_lowercase(), tag);
        }
        t
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = read_to_string(path)?;
        let mut entries = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, tag) = line
                .split_once(['\t', ' '])
                .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>TAG"))?;
            let tag = tag
                .trim()
                .parse()
                .map_err(|e: String| Error::parse(path, idx + 1, e))?;
            entries.push((w.to_string(), tag));
        }
        Ok(Self::with_lexicon(entries))
    }

    fn by_suffix(word: &str) -> Option<CoarsePos> {
        const NOUN: &[&str] = &[
            "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist", "hood",
            "dom", "ure", "ery",
        ];
        const ADJ: &[&str] = &["ous", "ful", "ive", "able", "ible", "less", "ical", "ary"];
        const VERB: &[&str] = &["ize", "ise", "ify", "ed", "ing"];
        let long = |s: &str| word.len() > s.len() + 2 && word.ends_with(s);
        if long("ly") {
            Some(CoarsePos::Adv)
        } else if NOUN.iter().any(|s| long(s)) {
            Some(CoarsePos::Noun)
        } else if ADJ.iter().any(|s| long(s)) {
            Some(CoarsePos::Adj)
        } else if VERB.iter().any(|s| long(s)) {
            Some(CoarsePos::Verb)
        } else {
            None
        }
    }
}

impl PosTagger for RuleTagger {
    fn tag(&self, words: &[&str], index: usize) -> CoarsePos {
        let word = words[index].to_lowercase();
        if let Some(&tag) = self.lexicon.get(&word) {
            return tag;
        }
        if !word.chars().any(char::is_alphabetic) {
            return CoarsePos::Other;
        }
        let prev = index
            .checked_sub(1)
            .map(|i| words[i].to_lowercase())
            .unwrap_or_default();
        let after_determiner = DETERMINERS.contains(&prev.as_str());
        match Self::by_suffix(&word) {
            // "the filing", "the accused"
            Some(CoarsePos::Verb) if after_determiner => {
                if word.ends_with("ing") {
                    CoarsePos::Noun
                } else {
                    CoarsePos::Adj
                }
            }
            Some(tag) => tag,
            None if MODALS.contains(&prev.as_str())
                || SUBJECT_PRONOUNS.contains(&prev.as_str()) =>
            {
                CoarsePos::Verb
            }
            None => CoarsePos::Noun,
        }
    }
}
