//! Static word embeddings in the plain text `word v1 v2 ... vd` format.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Embeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl Embeddings {
    pub fn new(dim: usize) -> Self {
        Embeddings {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Domain(format!(
                "vector of dimension {} in a {}-dimensional lexicon",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    /// Parses GloVe-style text. A leading `count dim` header line, as written
    /// by word2vec and fastText, is skipped.
    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut emb: Option<Embeddings> = None;
        for (idx, line) in content.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            if idx == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
                continue;
            }
            let e = emb.get_or_insert_with(|| Embeddings::new(values.len()));
            if e.dim == 0 {
                return Err(Error::parse(path, idx + 1, "vector has no components"));
            }
            e.insert(word, values)
                .map_err(|err| Error::parse(path, idx + 1, err.to_string()))?;
        }
        emb.ok_or_else(|| Error::parse(path, 0, "no vectors"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Looks a word up as written, then lowercased.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Mean of the in-vocabulary vectors among `words`.
    pub fn mean_vector<S: AsRef<str>>(&self, words: &[S]) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for v in words.iter().filter_map(|w| self.get(w.as_ref())) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }
}

/// Cosine similarity, clamped to [-1, 1]; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}
