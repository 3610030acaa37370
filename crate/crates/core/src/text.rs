//! Tokenization and sentence segmentation shared by every stage.
//!
//! Words are maximal runs of alphabetic characters, allowing apostrophes and
//! hyphens only between two letters (`don't`, `well-known`). Digits and
//! punctuation never belong to a word.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Number,
    Punct,
}

/// A token with its byte range in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits `text` into word, number and punctuation tokens, keeping offsets.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let kind = if c.is_alphabetic() {
            while j < chars.len() {
                let cj = chars[j].1;
                if cj.is_alphabetic() {
                    j += 1;
                } else if is_joiner(cj) && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphabetic())
                {
                    j += 2;
                } else {
                    break;
                }
            }
            TokenKind::Word
        } else if c.is_ascii_digit() {
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            TokenKind::Number
        } else {
            TokenKind::Punct
        };
        let end = end_of(j);
        tokens.push(Token {
            text: text[start..end].to_string(),
            kind,
            start,
            end,
        });
        i = j;
    }
    tokens
}

/// Lowercased word tokens, the unit counted by frequency tables.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    tokenize(text)
        .into_iter()
        .filter(Token::is_word)
        .map(|t| t.text.to_lowercase())
}

/// Joins token surfaces with single spaces, attaching punctuation to its neighbour.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = false;
    for tok in tokens {
        let tok = tok.as_ref();
        let closing = matches!(tok, "." | "," | ";" | ":" | "!" | "?" | ")" | "]" | "%")
            || tok.starts_with('\'') && tok.len() > 1;
        if !out.is_empty() && !closing && !glue_next {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = matches!(tok, "(" | "[" | "$");
    }
    out
}

/// Uppercases the first alphabetic character.
pub fn capitalize_first(s: &str) -> String {
    match s.char_indices().find(|(_, c)| c.is_alphabetic()) {
        Some((i, c)) => {
            let mut out = String::with_capacity(s.len());
            out.push_str(&s[..i]);
            out.extend(c.to_uppercase());
            out.push_str(&s[i + c.len_utf8()..]);
            out
        }
        None => s.to_string(),
    }
}

pub fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Whether `word` takes "an" rather than "a", judged from its spelling.
pub fn takes_an(word: &str) -> bool {
    const CONSONANT_SOUND: &[&str] = &[
        "uni", "use", "usa", "usu", "ure", "uti", "eu", "one", "once",
    ];
    const SILENT_H: &[&str] = &["honest", "honor", "honour", "hour", "heir"];
    let w = word.to_lowercase();
    if CONSONANT_SOUND.iter().any(|p| w.starts_with(p)) {
        return false;
    }
    SILENT_H.iter().any(|p| w.starts_with(p)) || w.starts_with(['a', 'e', 'i', 'o', 'u'])
}

/// Makes an article ending `prefix` agree with the word that follows it.
pub fn agree_article(prefix: &mut String, next_word: &str) {
    let trimmed = prefix.trim_end();
    let ws = prefix.len() - trimmed.len();
    if ws == 0 {
        return;
    }
    let start = trimmed.rfind(|c: char| !c.is_alphabetic()).map_or(0, |i| {
        i + trimmed[i..].chars().next().map_or(1, char::len_utf8)
    });
    let article = &trimmed[start..];
    let fixed = match (article, takes_an(next_word)) {
        ("a", true) => "an",
        ("A", true) => "An",
        ("an", false) => "a",
        ("An", false) => "A",
        _ => return,
    };
    let tail = prefix[trimmed.len()..].to_string();
    prefix.truncate(start);
    prefix.push_str(fixed);
    prefix.push_str(&tail);
}

/// Ensures the sentence starts with a capital and ends with `.`, `?` or `!`.
pub fn finish_sentence(s: &str) -> String {
    let trimmed = s.trim().trim_end_matches([',', ';', ':']).trim_end();
    let mut out = capitalize_first(trimmed);
    if !out.ends_with(['.', '?', '!']) {
        out.push('.');
    }
    out
}

const ABBREVIATIONS: &[&str] = &[
    "v.", "vs.", "u.s.", "no.", "nos.", "mr.", "mrs.", "ms.", "dr.", "jr.", "sr.", "st.", "inc.",
    "co.", "corp.", "ltd.", "art.", "sec.", "id.", "e.g.", "i.e.", "cf.", "app.", "ct.", "supp.",
    "cir.", "f.", "rev.", "stat.", "ann.", "pp.", "p.", "para.", "ch.", "cl.", "ed.", "et al.",
    "al.", "seq.", "n.", "u.s.c.", "s.ct.", "l.ed.", "d.c.", "fed.", "jan.", "feb.", "mar.",
    "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
];

fn ends_with_abbreviation(text: &str, period: usize) -> bool {
    let head = &text[..=period];
    let word_start = head
        .rfind(|c: char| c.is_whitespace() || c == '(')
        .map_or(0, |i| i + 1);
    let word = head[word_start..].to_lowercase();
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    // Single initials such as "J." in "J. Smith".
    let mut cs = word.chars();
    matches!((cs.next(), cs.next(), cs.next()), (Some(c), Some('.'), None) if c.is_uppercase())
}

/// Splits running text into sentences on `.`, `?` or `!` followed by
/// whitespace or end of input, skipping periods that end known abbreviations.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if matches!(c, '.' | '?' | '!') {
            // absorb runs of terminators and closing quotes/brackets
            let mut j = i + 1;
            while j < bytes.len()
                && matches!(
                    bytes[j].1,
                    '.' | '?' | '!' | '"' | '\'' | ')' | '\u{201d}' | '\u{2019}'
                )
            {
                j += 1;
            }
            let at_boundary = j == bytes.len() || bytes[j].1.is_whitespace();
            if at_boundary && !(c == '.' && j == i + 1 && ends_with_abbreviation(text, pos)) {
                let end = bytes.get(j).map_or(text.len(), |&(b, _)| b);
                let s = text[start..end].trim();
                if !s.is_empty() {
                    sentences.push(s.to_string());
                }
                start = end;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        sentences.push(rest.to_string());
    }
    sentences
}
