//! Dictionary-free syllable counting.
//!
//! Counts vowel groups, then corrects for silent endings, vowel pairs that
//! are pronounced as two syllables, common derivational suffixes and a few
//! compounds whose first half ends in a silent `e`.

use crate::error::{Error, Result};

/// Syllables in a single word. Hyphenated words count each part;
/// apostrophes are ignored. Any other non-alphabetic character is an error.
pub fn count_syllables(word: &str) -> Result<usize> {
    if word.is_empty() {
        return Err(Error::Domain(
            "cannot count syllables of an empty word".into(),
        ));
    }
    if let Some(c) = word
        .chars()
        .find(|&c| !(c.is_alphabetic() || matches!(c, '-' | '\'' | '\u{2019}')))
    {
        return Err(Error::Domain(format!(
            "non-alphabetic character {c:?} in {word:?}"
        )));
    }
    let lower = word.to_lowercase();
    let total: usize = lower
        .split('-')
        .map(|part| {
            let ascii: String = part.chars().filter(char::is_ascii_alphabetic).collect();
            if ascii.is_empty() {
                usize::from(part.chars().any(char::is_alphabetic))
            } else {
                count_part(&ascii)
            }
        })
        .sum();
    Ok(total.max(1))
}

const SUFFIXES: &[(&str, usize)] = &[
    ("ments", 1),
    ("fully", 2),
    ("lessly", 2),
    ("ness", 1),
    ("less", 1),
    ("ment", 1),
    ("ful", 1),
    ("ly", 1),
];

// First halves of compounds that end in a silent e ("somewhere", "baseline").
const SILENT_E_HEADS: &[&str] = &[
    "some", "every", "share", "there", "where", "base", "frame", "like", "fore", "home", "life",
    "care", "safe", "time", "case", "house", "stone", "whole", "store",
];

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn count_part(w: &str) -> usize {
    if w.len() > 8 && w.ends_with("ically") {
        return count_part(&w[..w.len() - 4]) + 1;
    }
    for &(suffix, n) in SUFFIXES {
        if w.len() >= suffix.len() + 3 && w.ends_with(suffix) {
            return count_part(&w[..w.len() - suffix.len()]) + n;
        }
    }
    for head in SILENT_E_HEADS {
        if w.len() >= head.len() + 3 && w.starts_with(head) {
            return count_part(head) + count_part(&w[head.len()..]);
        }
    }
    if w.len() <= 3 {
        return 1;
    }
    let original = w;
    let mut w = w.to_string();
    if w.ends_with("que") {
        w.replace_range(w.len() - 3.., "k");
    } else if w.ends_with("ques") {
        w.replace_range(w.len() - 4.., "ks");
    }
    let b = w.as_bytes();
    let n = b.len();
    let consonant_le = |end: usize| end >= 3 && &b[end - 2..end] == b"le" && !is_vowel(b[end - 3]);
    let strip = if w.ends_with("es") {
        let sibilant = ["ses", "xes", "zes", "ches", "shes", "ges", "ces"]
            .iter()
            .any(|s| w.ends_with(s));
        (!sibilant && !consonant_le(n - 1)).then_some(2)
    } else if w.ends_with("ed") {
        (!w.ends_with("ted") && !w.ends_with("ded")).then_some(2)
    } else if w.ends_with('e') {
        (!consonant_le(n) && !w.ends_with("ee")).then_some(1)
    } else {
        None
    };
    if let Some(k) = strip {
        w.truncate(n - k);
    }
    if w.starts_with('y') {
        w.remove(0);
    }

    let b = w.as_bytes();
    let mut count = 0;
    let mut in_group = false;
    for &c in b {
        let v = is_vowel(c);
        if v && !in_group {
            count += 1;
        }
        in_group = v;
    }
    count += split_vowel_pairs(b);
    if ["ire", "ired", "ires"]
        .iter()
        .any(|s| original.ends_with(s))
    {
        count += 1;
    }
    if w.ends_with("ism") {
        count += 1;
    }
    count.max(1)
}

/// Vowel pairs inside one group that are usually two syllables ("radio",
/// "science", "dual"). Matches do not overlap.
fn split_vowel_pairs(b: &[u8]) -> usize {
    let at = |i: usize| b.get(i).copied().unwrap_or(0);
    let prev_in = |i: usize, set: &[u8]| i > 0 && set.contains(&b[i - 1]);
    let rest_starts = |i: usize, s: &[u8]| b[i..].starts_with(s);
    let mut extra = 0;
    let mut i = 0;
    while i + 1 < b.len() {
        let pair = (b[i], b[i + 1]);
        let len = match pair {
            (b'i', b'o') if !prev_in(i, b"tcsgxhn") => 2,
            (b'i', b'a') if !prev_in(i, b"ctg") && at(i + 2) != b'g' => 2,
            (b'u', b'a') | (b'u', b'o') if !prev_in(i, b"gq") => 2,
            (b'u', b'e') if !prev_in(i, b"gq") && at(i + 2) == b'n' => 2,
            (b'i', b'u') | (b'i', b'i') => 2,
            (b'i', b'e')
                if !prev_in(i, b"ct")
                    && (rest_starts(i + 2, b"nt")
                        || rest_starts(i + 2, b"nc")
                        || at(i + 2) == b't') =>
            {
                2
            }
            (b'e', b'a') if rest_starts(i + 2, b"tion") => 2,
            (b'a', b'o') => 2,
            (b'o', b'a') if matches!(at(i + 2), b'i' | b'e') => 2,
            (b'y', b'a') | (b'y', b'o') | (b'y', b'i') => 2,
            (b'u', b'e') if at(i + 2) == b'e' => 3,
            (b'o', b'i') if at(i + 2) == b'c' || rest_starts(i + 2, b"ng") => 2,
            (b'i', b'e') if at(i + 2) == b'r' => 3,
            (a, b'y')
                if matches!(a, b'a' | b'e' | b'i' | b'o' | b'u')
                    && matches!(at(i + 2), b'a' | b'e' | b'i' | b'o' | b'u') =>
            {
                3
            }
            _ => 0,
        };
        if len > 0 {
            extra += 1;
            i += len;
        } else {
            i += 1;
        }
    }
    extra
}
