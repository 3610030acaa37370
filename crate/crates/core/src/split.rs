//! Recursive sentence splitting into core and context sentences.
//!
//! Three rule families are tried in a fixed order at every node:
//!
//! * subordinate clause opened by a cue word (`before`, `because`, ...),
//!   either sentence-initial or after the main clause;
//! * relative clause on `who`/`which`/`that`, with the referent copied into
//!   the context sentence;
//! * coordination on `, and`, `, but` or `;`, copying the subject when the
//!   second conjunct lacks one.
//!
//! Clause boundaries come from cue words, commas and a small verb heuristic
//! rather than a parser.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_list, Error, Result};
use crate::text::{finish_sentence, join_tokens, tokenize, TokenKind};

/// Multi-word cues are matched token by token.
pub const DEFAULT_SUBORDINATORS: &[&str] = &[
    "before",
    "after",
    "when",
    "while",
    "because",
    "although",
    "if",
    "since",
    "unless",
    "at the time",
];
pub const DEFAULT_RELATIVES: &[&str] = &["who", "which", "that"];
pub const DEFAULT_COORDINATORS: &[&str] = &["and", "but"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub min_split_tokens: usize,
    pub max_depth: usize,
    pub subordinators: Vec<String>,
    pub relatives: Vec<String>,
    pub coordinators: Vec<String>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        SplitConfig {
            min_split_tokens: 12,
            max_depth: 4,
            subordinators: owned(DEFAULT_SUBORDINATORS),
            relatives: owned(DEFAULT_RELATIVES),
            coordinators: owned(DEFAULT_COORDINATORS),
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_split_tokens < 4 {
            return Err(Error::Config(format!(
                "min_split_tokens must be at least 4, got {}",
                self.min_split_tokens
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }

    /// Replaces one cue lexicon with a one-cue-per-line file.
    pub fn load_cues(&mut self, rule: SplitRule, path: &Path) -> Result<()> {
        let cues: Vec<String> = read_list(path)?.iter().map(|c| c.to_lowercase()).collect();
        match rule {
            SplitRule::Subordinate => self.subordinators = cues,
            SplitRule::Relative => self.relatives = cues,
            SplitRule::Coordination => self.coordinators = cues,
            SplitRule::None => return Err(Error::Config("no cue lexicon for rule NONE".into())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Core,
    Context,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    None,
    Subordinate,
    Relative,
    Coordination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitNode {
    pub text: String,
    pub label: Label,
    pub rule: SplitRule,
    /// Empty for leaves, otherwise `[core, context]`.
    pub children: Vec<SplitNode>,
}

impl SplitNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.children
            .iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&SplitNode> {
        if self.is_leaf() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafOrder {
    #[default]
    CoreFirst,
    ContextFirst,
}

/// Builds the split tree of one sentence. Never fails; a sentence no rule
/// applies to comes back as a single leaf.
pub fn split_sentence(sentence: &str, config: &SplitConfig) -> SplitNode {
    split_at(&finish_sentence(sentence), Label::Core, 0, config)
}

fn split_at(text: &str, label: Label, depth: usize, config: &SplitConfig) -> SplitNode {
    let leaf = || SplitNode {
        text: text.to_string(),
        label,
        rule: SplitRule::None,
        children: Vec::new(),
    };
    if depth >= config.max_depth {
        return leaf();
    }
    let toks = body_tokens(text);
    let n = word_count(&toks);
    if n < config.min_split_tokens {
        return leaf();
    }
    match apply_rules(&toks, config) {
        Some((rule, core, context)) => SplitNode {
            text: text.to_string(),
            label,
            rule,
            children: vec![
                split_at(&core, Label::Core, depth + 1, config),
                split_at(&context, Label::Context, depth + 1, config),
            ],
        },
        None => leaf(),
    }
}

/// Leaf sentences in the requested order.
pub fn flatten_tree(root: &SplitNode, order: LeafOrder) -> Vec<String> {
    let mut out = Vec::new();
    collect(root, order, &mut out);
    out
}

fn collect(node: &SplitNode, order: LeafOrder, out: &mut Vec<String>) {
    if node.is_leaf() {
        out.push(finish_sentence(&node.text));
        return;
    }
    let mut kids: Vec<&SplitNode> = node.children.iter().collect();
    if order == LeafOrder::ContextFirst {
        kids.sort_by_key(|k| k.label == Label::Core);
    }
    for k in kids {
        collect(k, order, out);
    }
}

/// Splits one sentence and returns its leaves.
pub fn split_text(sentence: &str, config: &SplitConfig, order: LeafOrder) -> Vec<String> {
    flatten_tree(&split_sentence(sentence, config), order)
}

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    lower: String,
    kind: TokenKind,
}

impl Tok {
    fn is_word(&self) -> bool {
        self.kind != TokenKind::Punct
    }

    fn is_comma(&self) -> bool {
        matches!(self.text.as_str(), "," | ";")
    }
}

fn body_tokens(text: &str) -> Vec<Tok> {
    let mut toks: Vec<Tok> = tokenize(text)
        .into_iter()
        .map(|t| Tok {
            lower: t.text.to_lowercase(),
            text: t.text,
            kind: t.kind,
        })
        .collect();
    while toks
        .last()
        .is_some_and(|t| t.kind == TokenKind::Punct && !matches!(t.text.as_str(), ")" | "]"))
    {
        toks.pop();
    }
    toks
}

fn word_count(toks: &[Tok]) -> usize {
    toks.iter().filter(|t| t.is_word()).count()
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "his", "her", "its", "their", "our", "my",
    "your", "each", "every", "any", "no", "some",
];
const SUBJECT_PRONOUNS: &[&str] = &["i", "you", "he", "she", "it", "we", "they"];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "am", "has", "have", "had", "do", "does", "did", "will", "would",
    "shall", "should", "can", "could", "may", "might", "must", "cannot",
];
const IRREGULAR_PAST: &[&str] = &[
    "held", "found", "made", "gave", "took", "said", "paid", "sued", "knew", "left", "kept",
    "sold", "told", "lost", "won", "brought", "bought", "sent", "went", "came", "met", "ran",
    "saw", "got", "began", "wrote", "stole", "broke", "fell", "heard", "led", "lent", "owed",
    "swore", "fled", "hid", "struck", "drove", "forgave", "bore", "shot", "spent", "stood",
];
const NON_HEADS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "and", "or", "but", "not",
    "as", "than", "is", "are", "was", "were", "be", "been",
];

fn is_aux(t: &Tok) -> bool {
    AUXILIARIES.contains(&t.lower.as_str())
}

fn is_determiner(t: &Tok) -> bool {
    DETERMINERS.contains(&t.lower.as_str())
}

fn is_subject_pronoun(t: &Tok) -> bool {
    SUBJECT_PRONOUNS.contains(&t.lower.as_str())
}

/// Whether `toks[i]` looks like a finite verb.
fn is_finite(toks: &[Tok], i: usize) -> bool {
    let t = &toks[i];
    if t.kind != TokenKind::Word {
        return false;
    }
    if is_aux(t) {
        return true;
    }
    let prev = i.checked_sub(1).map(|p| &toks[p]);
    let after_subject =
        prev.is_some_and(|p| is_subject_pronoun(p) || matches!(p.lower.as_str(), "who" | "which"));
    if after_subject
        && !DETERMINERS.contains(&t.lower.as_str())
        && !NON_HEADS.contains(&t.lower.as_str())
    {
        return true;
    }
    let noun_before = prev.is_some_and(|p| {
        p.kind == TokenKind::Word && !is_determiner(p) && !NON_HEADS.contains(&p.lower.as_str())
    });
    let past = IRREGULAR_PAST.contains(&t.lower.as_str())
        || (t.lower.len() >= 5 && t.lower.ends_with("ed"));
    // "the defendant fails", "the borrower defaults"
    let present = t.lower.len() >= 4
        && t.lower.ends_with('s')
        && !t.lower.ends_with("ss")
        && i >= 2
        && is_determiner(&toks[i - 2]);
    noun_before && (past || present)
}

fn first_finite(toks: &[Tok]) -> Option<usize> {
    (0..toks.len()).find(|&i| is_finite(toks, i))
}

fn has_finite(toks: &[Tok]) -> bool {
    first_finite(toks).is_some()
}

fn is_gerund(t: &Tok) -> bool {
    t.kind == TokenKind::Word && t.lower.len() > 4 && t.lower.ends_with("ing")
}

/// Subject noun phrase: everything before the first finite verb, if short
/// and comma-free.
fn subject(toks: &[Tok]) -> Option<&[Tok]> {
    let v = first_finite(toks)?;
    let s = &toks[..v];
    let ok = (1..=6).contains(&s.len())
        && s.iter().all(|t| t.is_word())
        && !NON_HEADS.contains(&s[0].lower.as_str());
    ok.then_some(s)
}

fn plural(subj: &[Tok]) -> bool {
    let last = &subj[subj.len() - 1].lower;
    matches!(last.as_str(), "they" | "we" | "you")
        || (subj.len() > 1 && last.ends_with('s') && !last.ends_with("ss"))
}

fn sentence(parts: &[&[Tok]]) -> String {
    let mut words: Vec<String> = Vec::new();
    for part in parts {
        words.extend(part.iter().map(|t| t.text.clone()));
    }
    while words
        .first()
        .is_some_and(|w| matches!(w.as_str(), "," | ";"))
    {
        words.remove(0);
    }
    while words
        .last()
        .is_some_and(|w| matches!(w.as_str(), "," | ";"))
    {
        words.pop();
    }
    finish_sentence(&join_tokens(&words))
}

fn literal(words: &[&str]) -> Vec<Tok> {
    words
        .iter()
        .map(|w| Tok {
            text: w.to_string(),
            lower: w.to_lowercase(),
            kind: TokenKind::Word,
        })
        .collect()
}

/// Lowercases a sentence-initial determiner or pronoun that is about to be
/// placed mid-sentence.
fn demote(toks: &[Tok]) -> Vec<Tok> {
    let mut out = toks.to_vec();
    if let Some(first) = out.first_mut() {
        if is_determiner(first) || (is_subject_pronoun(first) && first.lower != "i") {
            first.text = first.lower.clone();
        }
    }
    out
}

type Split = (SplitRule, String, String);

fn apply_rules(toks: &[Tok], config: &SplitConfig) -> Option<Split> {
    let parent = word_count(toks);
    let smaller = |s: &(SplitRule, String, String)| {
        let a = word_count(&body_tokens(&s.1));
        let b = word_count(&body_tokens(&s.2));
        a > 0 && b > 0 && a < parent && b < parent
    };
    subordinate(toks, config)
        .into_iter()
        .chain(relative(toks, config))
        .chain(coordination(toks, config))
        .find(smaller)
}

fn is_cue(t: &Tok, cues: &[String]) -> bool {
    t.kind == TokenKind::Word && cues.contains(&t.lower)
}

/// Token length of the longest cue starting at `toks[i]`.
fn cue_at(toks: &[Tok], i: usize, cues: &[String]) -> Option<usize> {
    cues.iter()
        .filter_map(|c| {
            let parts: Vec<&str> = c.split_whitespace().collect();
            let window = toks.get(i..i + parts.len())?;
            let hit = !parts.is_empty()
                && window
                    .iter()
                    .zip(&parts)
                    .all(|(t, p)| t.kind == TokenKind::Word && t.lower == *p);
            hit.then_some(parts.len())
        })
        .max()
}

/// Context sentence for a subordinate clause whose cue has been removed.
fn clause_sentence(cue: &[Tok], clause: &[Tok], core: &[Tok]) -> String {
    if is_gerund(&clause[0]) {
        if let Some(subj) = subject(core) {
            let be = if plural(subj) { "were" } else { "was" };
            return sentence(&[subj, &literal(&[be]), clause]);
        }
    }
    if has_finite(clause) {
        return sentence(&[clause]);
    }
    let cue: Vec<Tok> = cue
        .iter()
        .map(|t| Tok {
            text: t.lower.clone(),
            ..t.clone()
        })
        .collect();
    sentence(&[&literal(&["This", "happened"]), &cue, clause])
}

fn subordinate(toks: &[Tok], config: &SplitConfig) -> Vec<Split> {
    let cues = &config.subordinators;
    let mut out = Vec::new();
    if let Some(m) = cue_at(toks, 0, cues) {
        let boundary = toks
            .iter()
            .position(Tok::is_comma)
            .filter(|&c| c > m + 1)
            .or_else(|| {
                // "Before filing a petition the plaintiff must ..."
                (m + 2..toks.len()).find(|&j| {
                    (is_determiner(&toks[j]) || is_subject_pronoun(&toks[j]))
                        && (j + 1..(j + 4).min(toks.len())).any(|k| is_finite(toks, k))
                })
            });
        if let Some(b) = boundary {
            let clause = &toks[m..b];
            let rest = if toks[b].is_comma() {
                &toks[b + 1..]
            } else {
                &toks[b..]
            };
            if word_count(clause) >= 2 && word_count(rest) >= 3 && has_finite(rest) {
                let context = clause_sentence(&toks[..m], clause, rest);
                out.push((SplitRule::Subordinate, sentence(&[rest]), context));
            }
        }
    }
    for k in 4..toks.len().saturating_sub(2) {
        let Some(m) = cue_at(toks, k, cues) else {
            continue;
        };
        let core = if toks[k - 1].is_comma() {
            &toks[..k - 1]
        } else {
            &toks[..k]
        };
        let clause = &toks[k + m..];
        let clause_ok = word_count(clause) >= 2 && (has_finite(clause) || is_gerund(&clause[0]));
        if word_count(core) >= 4 && has_finite(core) && clause_ok {
            let context = clause_sentence(&toks[k..k + m], clause, core);
            out.push((SplitRule::Subordinate, sentence(&[core]), context));
            break;
        }
    }
    out
}

fn relative(toks: &[Tok], config: &SplitConfig) -> Vec<Split> {
    let mut out = Vec::new();
    for k in 2..toks.len().saturating_sub(2) {
        if !is_cue(&toks[k], &config.relatives) {
            continue;
        }
        let comma_before = toks[k - 1].is_comma();
        let head = if comma_before { k - 1 } else { k };
        if head < 2 || toks[head - 1].kind != TokenKind::Word {
            continue;
        }
        let head_word = &toks[head - 1];
        if is_aux(head_word)
            || NON_HEADS.contains(&head_word.lower.as_str())
            || is_finite(toks, head - 1)
        {
            continue;
        }
        let next = &toks[k + 1];
        if is_determiner(next) || is_subject_pronoun(next) || next.kind != TokenKind::Word {
            continue;
        }
        // referent: determiner-led noun phrase of at most four words
        let Some(start) = (head.saturating_sub(4)..head - 1)
            .rev()
            .find(|&s| is_determiner(&toks[s]))
        else {
            continue;
        };
        let np = &toks[start..head];
        if np[1..]
            .iter()
            .any(|t| !t.is_word() || is_aux(t) || is_determiner(t))
        {
            continue;
        }
        // sentence-initial, or after an introductory phrase and its comma
        let in_subject = start == 0 || (toks[start - 1].is_comma() && !has_finite(&toks[..start]));
        let mut end = toks[k + 1..]
            .iter()
            .position(Tok::is_comma)
            .map_or(toks.len(), |p| k + 1 + p);
        if in_subject {
            // "The tenant who paid the rent is entitled ...": the clause
            // ends before the main verb
            let own = (k + 1..end).find(|&i| is_finite(toks, i));
            let later = own.and_then(|o| (o + 2..end).find(|&i| is_finite(toks, i)));
            match later {
                Some(l) => end = l,
                None if end < toks.len() => {}
                None => continue,
            }
        }
        let clause = &toks[k + 1..end];
        if word_count(clause) < 2 || !has_finite(&toks[k..end]) {
            continue;
        }
        let after = if end < toks.len() && toks[end].is_comma() {
            &toks[end + 1..]
        } else {
            &toks[end..]
        };
        let core_tokens: Vec<Tok> = toks[..head].iter().chain(after).cloned().collect();
        if word_count(&core_tokens) < 3 || !has_finite(&core_tokens) {
            continue;
        }
        let mut referent = demote(np);
        if matches!(referent[0].lower.as_str(), "a" | "an") {
            referent[0] = literal(&["the"]).remove(0);
        }
        out.push((
            SplitRule::Relative,
            sentence(&[&core_tokens]),
            sentence(&[&referent, clause]),
        ));
        break;
    }
    out
}

fn coordination(toks: &[Tok], config: &SplitConfig) -> Vec<Split> {
    let mut out = Vec::new();
    for k in 3..toks.len().saturating_sub(2) {
        let (left_end, right_start) = if toks[k].text == ";" {
            (k, k + 1)
        } else if toks[k].text == "," && is_cue(&toks[k + 1], &config.coordinators) {
            (k, k + 2)
        } else {
            continue;
        };
        let left = &toks[..left_end];
        let right = &toks[right_start..];
        if word_count(left) < 3 || !has_finite(left) || word_count(right) < 2 {
            continue;
        }
        // "..., and must pay the costs" borrows the first conjunct's subject
        let needs_subject = is_aux(&right[0]) || first_finite(right) == Some(0);
        let context = if needs_subject {
            match subject(left) {
                Some(subj) => sentence(&[subj, right]),
                None => continue,
            }
        } else if has_finite(right) {
            sentence(&[right])
        } else {
            continue;
        };
        out.push((SplitRule::Coordination, sentence(&[left]), context));
        break;
    }
    out
}
