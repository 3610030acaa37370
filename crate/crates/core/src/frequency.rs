//! Corpus word counts and Zipf-scale frequency tables.
//!
//! The Zipf scale maps a raw count onto a log10 scale where 3 corresponds to
//! one occurrence per billion words and 7 to ten thousand per million:
//!
//! ```text
//! zipf = log10((count + 1) / (W + N)) + 3
//! ```
//!
//! with `W` the corpus size and `N` the number of distinct word types, both in
//! millions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{read_to_string, Error, Result};
use crate::text;

/// Per-word occurrence counts for one corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    /// Builds a table from explicit counts. Zero counts are dropped.
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut table = FrequencyTable::default();
        for (word, n) in counts {
            if n > 0 {
                *table.counts.entry(word.into()).or_default() += n;
                table.total += n;
            }
        }
        table
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    /// `W`: total words, in millions.
    pub fn total_words_millions(&self) -> f64 {
        self.total as f64 / 1e6
    }

    /// `N`: distinct word types, in millions.
    pub fn total_types_millions(&self) -> f64 {
        self.counts.len() as f64 / 1e6
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn merge(mut self, other: FrequencyTable) -> Self {
        for (w, n) in other.counts {
            *self.counts.entry(w).or_default() += n;
        }
        self.total += other.total;
        self
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("#uslt-frequency\n");
        let _ = writeln!(out, "#W\t{}", self.total_words_millions());
        let _ = writeln!(out, "#N\t{}", self.total_types_millions());
        for (w, n) in &self.counts {
            let _ = writeln!(out, "{w}\t{n}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let content = read_to_string(path)?;
        let mut table = FrequencyTable::default();
        for (idx, line) in content.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>count"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad count {count:?}")))?;
            if count > 0 {
                *table.counts.entry(word.to_string()).or_default() += count;
                table.total += count;
            }
        }
        Ok(table)
    }
}

/// Counts words across documents. Documents are counted in parallel and the
/// partial maps merged.
pub fn ingest_corpus<S: AsRef<str> + Sync>(documents: &[S]) -> FrequencyTable {
    documents
        .par_iter()
        .map(|doc| {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            let mut total = 0;
            for w in text::words(doc.as_ref()) {
                *counts.entry(w).or_default() += 1;
                total += 1;
            }
            FrequencyTable { counts, total }
        })
        .reduce(FrequencyTable::default, FrequencyTable::merge)
}

/// Reads every regular file in `dir` (sorted by name) as corpus input.
/// With `per_line`, each non-empty line is a separate document.
pub fn read_corpus_dir(dir: &Path, per_line: bool) -> Result<Vec<String>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut docs = Vec::new();
    for p in paths {
        let content = read_to_string(&p)?;
        if per_line {
            docs.extend(
                content
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(str::to_string),
            );
        } else {
            docs.push(content);
        }
    }
    Ok(docs)
}

/// `log10((count + 1) / (W + N)) + 3` with `W`, `N` in millions.
pub fn zipf_value(count: u64, words_millions: f64, types_millions: f64) -> Result<f64> {
    let denom = words_millions + types_millions;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Domain(format!(
            "zipf denominator W + N must be positive, got {denom}"
        )));
    }
    Ok(((count as f64 + 1.0) / denom).log10() + 3.0)
}

/// Zipf values for the words of one corpus, with their distribution summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfTable {
    zipf: BTreeMap<String, f64>,
    mean: f64,
    std: f64,
    label: String,
    /// `(W, N)` of the source corpus when known.
    corpus_size: Option<(f64, f64)>,
}

impl ZipfTable {
    /// Builds a table from precomputed Zipf values, e.g. a published list.
    pub fn from_values<I, S>(label: &str, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let zipf: BTreeMap<String, f64> = values.into_iter().map(|(w, z)| (w.into(), z)).collect();
        if zipf.is_empty() {
            return Err(Error::EmptyTable);
        }
        if let Some((w, z)) = zipf.iter().find(|(_, z)| !z.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite zipf value {z} for {w:?}"
            )));
        }
        let (mean, std) = mean_and_population_std(zipf.values().copied());
        Ok(ZipfTable {
            zipf,
            mean,
            std,
            label: label.to_string(),
            corpus_size: None,
        })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.zipf.get(word).copied()
    }

    /// Zipf value of `word`, falling back to [`ZipfTable::unseen`].
    pub fn value_or_unseen(&self, word: &str) -> f64 {
        self.get(word).unwrap_or_else(|| self.unseen())
    }

    /// Value assigned to a word absent from the corpus: `zipf_value(0, W, N)`
    /// when corpus size is known, otherwise the lowest stored value.
    pub fn unseen(&self) -> f64 {
        match self.corpus_size {
            Some((w, n)) => ((1.0 / (w + n)).log10()) + 3.0,
            None => self.zipf.values().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.zipf.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.zipf.iter().map(|(w, &z)| (w.as_str(), z))
    }

    pub fn len(&self) -> usize {
        self.zipf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zipf.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation of the stored values.
    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn corpus_size(&self) -> Option<(f64, f64)> {
        self.corpus_size
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "#zipf\t{}", self.label);
        let _ = writeln!(out, "#mean\t{}\tstd\t{}", self.mean, self.std);
        match self.corpus_size {
            Some((w, n)) => {
                let _ = writeln!(out, "#W\t{w}\tN\t{n}");
            }
            None => out.push_str("#W\t-\tN\t-\n"),
        }
        for (w, z) in &self.zipf {
            let _ = writeln!(out, "{w}\t{z}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a `word<TAB>zipf` file. The header is optional, so published
    /// Zipf lists load directly; mean and std are always recomputed.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let content = read_to_string(path)?;
        let mut label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut corpus_size = None;
        let mut values = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            if let Some(header) = line.strip_prefix('#') {
                let fields: Vec<&str> = header.split('\t').collect();
                match fields.as_slice() {
                    ["zipf", l] => label = l.to_string(),
                    ["W", w, "N", n] => {
                        if let (Ok(w), Ok(n)) = (w.parse::<f64>(), n.parse::<f64>()) {
                            corpus_size = Some((w, n));
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (word, z) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>zipf"))?;
            let z: f64 = z
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad zipf value {z:?}")))?;
            values.push((word.to_string(), z));
        }
        let mut table = ZipfTable::from_values(&label, values)?;
        table.corpus_size = corpus_size;
        Ok(table)
    }
}

/// Assigns every counted word its Zipf value.
pub fn build_zipf_table(freq: &FrequencyTable, label: &str) -> Result<ZipfTable> {
    if freq.is_empty() {
        return Err(Error::EmptyTable);
    }
    let w = freq.total_words_millions();
    let n = freq.total_types_millions();
    let values = freq
        .counts
        .iter()
        .map(|(word, &c)| zipf_value(c, w, n).map(|z| (word.clone(), z)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = ZipfTable::from_values(label, values)?;
    table.corpus_size = Some((w, n));
    Ok(table)
}

fn mean_and_population_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
