//! Chunked benchmarking: a seeded shuffle of the dataset is cut into
//! consecutive chunks, every chunk is scored by its mean FKGL, DC and SD,
//! and per-chunk means can be compared against another system with the
//! signed-rank test.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::MaskedLmProvider;
use crate::error::{read_to_string, Error, Result};
use crate::metrics::DcForm;
use crate::pipeline::{simplify, PipelineConfig, Resources, Scores};
use crate::stats::{mean, wilcoxon_signed_rank};

/// Turns one input sentence into output sentences.
pub trait Simplifier: Sync {
    fn simplify(&self, sentence: &str) -> Result<Vec<String>>;
}

/// Returns every sentence unchanged.
pub struct Identity;

impl Simplifier for Identity {
    fn simplify(&self, sentence: &str) -> Result<Vec<String>> {
        Ok(vec![sentence.to_string()])
    }
}

/// The full pipeline as a [`Simplifier`].
pub struct Pipeline<'a> {
    pub config: &'a PipelineConfig,
    pub resources: &'a Resources,
    pub provider: &'a dyn MaskedLmProvider,
}

impl Simplifier for Pipeline<'_> {
    fn simplify(&self, sentence: &str) -> Result<Vec<String>> {
        simplify(sentence, self.config, self.resources, self.provider)
            .map(|r| r.final_sentences)
            .map_err(|e| e.source)
    }
}

/// Non-blank lines of a sentence-per-line file, trimmed.
pub fn read_dataset(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunks: usize,
    pub chunk_size: usize,
    pub seed: u64,
}

impl Default for ChunkPlan {
    fn default() -> Self {
        ChunkPlan {
            chunks: 10,
            chunk_size: 50,
            seed: 0,
        }
    }
}

impl ChunkPlan {
    /// Dataset indices per chunk. The first `chunks * chunk_size` indices of
    /// a seeded shuffle are cut into consecutive chunks; each selected
    /// index appears exactly once and the last chunk may be short.
    pub fn partition(&self, n: usize) -> Result<Vec<Vec<usize>>> {
        if self.chunks == 0 || self.chunk_size == 0 {
            return Err(Error::Config(
                "chunks and chunk_size must be at least 1".into(),
            ));
        }
        if n < self.chunks {
            return Err(Error::Config(format!(
                "dataset has {n} sentences, fewer than {} chunks",
                self.chunks
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let wanted = self.chunks * self.chunk_size;
        if n > wanted {
            log::warn!("using a random sample of {wanted} of {n} sentences");
        }
        order.truncate(wanted);
        let parts: Vec<Vec<usize>> = order
            .chunks(self.chunk_size)
            .map(<[usize]>::to_vec)
            .collect();
        if parts.len() != self.chunks {
            log::warn!(
                "{n} sentences fill {} chunks instead of {}",
                parts.len(),
                self.chunks
            );
        }
        if parts.last().is_some_and(|p| p.len() < self.chunk_size) {
            log::warn!(
                "last chunk has {} sentences",
                parts.last().map_or(0, Vec::len)
            );
        }
        Ok(parts)
    }
}

/// Mean scores of a set of sentences. `sd` is `None` when undefined for
/// every sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub fkgl: f64,
    pub dc: f64,
    pub sd: Option<f64>,
}

impl MetricMeans {
    fn of(scores: &[Scores]) -> Self {
        let sds: Vec<f64> = scores.iter().filter_map(|s| s.sd).collect();
        MetricMeans {
            fkgl: mean(&scores.iter().map(|s| s.fkgl).collect::<Vec<_>>()),
            dc: mean(&scores.iter().map(|s| s.dc).collect::<Vec<_>>()),
            sd: (!sds.is_empty()).then(|| mean(&sds)),
        }
    }

    fn average(rows: &[MetricMeans]) -> Self {
        let sds: Option<Vec<f64>> = rows.iter().map(|r| r.sd).collect();
        MetricMeans {
            fkgl: mean(&rows.iter().map(|r| r.fkgl).collect::<Vec<_>>()),
            dc: mean(&rows.iter().map(|r| r.dc).collect::<Vec<_>>()),
            sd: sds.map(|v| mean(&v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRow {
    pub index: usize,
    pub sentences: usize,
    pub input: MetricMeans,
    pub output: MetricMeans,
}

/// Two-sided signed-rank p-values on paired per-chunk means; `None` where
/// the test is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    pub fkgl: Option<f64>,
    pub dc: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub system: String,
    pub chunks: Vec<MetricMeans>,
    pub overall: MetricMeans,
    pub p_values: PValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub plan: ChunkPlan,
    pub chunks: Vec<ChunkRow>,
    /// Mean of the chunk rows.
    pub overall_input: MetricMeans,
    pub overall_output: MetricMeans,
    pub comparison: Option<Comparison>,
}

/// Scores `system` on `dataset`. The optional comparison holds another
/// system's output, one line per dataset sentence.
pub fn run_benchmark(
    dataset: &[String],
    system: &dyn Simplifier,
    resources: &Resources,
    form: DcForm,
    plan: ChunkPlan,
    comparison: Option<(&str, &[String])>,
) -> Result<BenchmarkReport> {
    if let Some((name, outputs)) = comparison {
        if outputs.len() != dataset.len() {
            return Err(Error::Domain(format!(
                "{name}: {} outputs for {} sentences",
                outputs.len(),
                dataset.len()
            )));
        }
    }
    let parts = plan.partition(dataset.len())?;
    let selected: Vec<usize> = parts.iter().flatten().copied().collect();

    let outputs: Vec<String> = selected
        .par_iter()
        .map(|&i| system.simplify(&dataset[i]).map(|s| s.join(" ")))
        .collect::<Result<_>>()?;
    let mut by_index = vec![None; dataset.len()];
    for (&i, out) in selected.iter().zip(outputs) {
        by_index[i] = Some(out);
    }

    let measure = |i: usize, text: &str| {
        Scores::measure(&dataset[i], text, resources, form)
            .ok_or_else(|| Error::Domain(format!("sentence {} has no words", i + 1)))
    };
    let chunk_means = |text_of: &dyn Fn(usize) -> String| -> Result<Vec<MetricMeans>> {
        parts
            .iter()
            .map(|part| {
                let scores = part
                    .iter()
                    .map(|&i| measure(i, &text_of(i)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MetricMeans::of(&scores))
            })
            .collect()
    };

    let input = chunk_means(&|i| dataset[i].clone())?;
    let output = chunk_means(&|i| by_index[i].clone().expect("selected sentence simplified"))?;
    let chunks: Vec<ChunkRow> = parts
        .iter()
        .enumerate()
        .map(|(index, part)| ChunkRow {
            index,
            sentences: part.len(),
            input: input[index],
            output: output[index],
        })
        .collect();

    let comparison = match comparison {
        Some((name, other)) => {
            let theirs = chunk_means(&|i| other[i].clone())?;
            Some(Comparison {
                system: name.to_string(),
                overall: MetricMeans::average(&theirs),
                p_values: paired_p_values(&output, &theirs),
                chunks: theirs,
            })
        }
        None => None,
    };

    Ok(BenchmarkReport {
        plan,
        overall_input: MetricMeans::average(&input),
        overall_output: MetricMeans::average(&output),
        chunks,
        comparison,
    })
}

fn paired_p_values(ours: &[MetricMeans], theirs: &[MetricMeans]) -> PValues {
    let test = |f: &dyn Fn(&MetricMeans) -> Option<f64>| -> Option<f64> {
        let x: Option<Vec<f64>> = ours.iter().map(f).collect();
        let y: Option<Vec<f64>> = theirs.iter().map(f).collect();
        match wilcoxon_signed_rank(&x?, &y?) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("signed-rank test skipped: {e}");
                None
            }
        }
    };
    PValues {
        fkgl: test(&|m| Some(m.fkgl)),
        dc: test(&|m| Some(m.dc)),
        sd: test(&|m| m.sd),
    }
}
