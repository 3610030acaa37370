//! End-to-end simplification: lexical simplification (identify, mask,
//! generate, eliminate, rank, substitute) followed by recursive splitting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{build_masked_query, generate_candidates, MaskedLmProvider, DEFAULT_TOP_N};
use crate::config::ResourcePaths;
use crate::cwi::{
    build_complex_lexicon, identify_complex_spans, ComplexWordLexicon, CwiConfig,
    NamedEntityTagger, TokenSpan,
};
use crate::error::{Error, Result};
use crate::frequency::ZipfTable;
use crate::metrics::{semantic_difference, DcForm, FamiliarWordList, TextCounts};
use crate::optimize::harmonic_mean;
use crate::ranking::{
    select_substitutions, CandidateFeatures, Feature, RankingContext, RankingWeights,
    WordResources, DEFAULT_MAX_LM_FEATURE,
};
use crate::split::{split_text, LeafOrder, SplitConfig};
use crate::stats::mean;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_candidates: usize,
    pub weights: RankingWeights,
    /// Features whose weight is forced to zero.
    pub ablate: Vec<Feature>,
    pub ls_enabled: bool,
    pub split_enabled: bool,
    pub split: SplitConfig,
    pub leaf_order: LeafOrder,
    pub max_lm_feature: f64,
    pub dc_form: DcForm,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_candidates: DEFAULT_TOP_N,
            weights: RankingWeights::default(),
            ablate: Vec::new(),
            ls_enabled: true,
            split_enabled: true,
            split: SplitConfig::default(),
            leaf_order: LeafOrder::CoreFirst,
            max_lm_feature: DEFAULT_MAX_LM_FEATURE,
            dc_form: DcForm::Percentage,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::Config("n_candidates must be at least 1".into()));
        }
        if !self.ls_enabled && !self.split_enabled {
            return Err(Error::Config("at least one stage must be enabled".into()));
        }
        if !self.weights.to_array().iter().all(|w| w.is_finite()) {
            return Err(Error::Config("weights must be finite".into()));
        }
        if !(self.max_lm_feature.is_finite() && self.max_lm_feature > 0.0) {
            return Err(Error::Config("max_lm_feature must be positive".into()));
        }
        if self.split_enabled {
            self.split.validate()?;
        }
        Ok(())
    }

    /// Weights with the ablated features zeroed.
    pub fn effective_weights(&self) -> RankingWeights {
        self.ablate.iter().fold(self.weights, |w, &f| w.without(f))
    }
}

/// Everything the pipeline reads besides the provider. Read-only once loaded.
pub struct Resources {
    pub lexicon: ComplexWordLexicon,
    pub words: WordResources,
    pub familiar: FamiliarWordList,
    pub entities: NamedEntityTagger,
}

impl Resources {
    /// Loads every resource. The lexicon is read from `paths.lexicon` when
    /// given, otherwise built from the two Zipf tables and the phrase list.
    pub fn load(paths: &ResourcePaths, cwi: &CwiConfig) -> Result<Self> {
        let general =
            ZipfTable::read_tsv(ResourcePaths::require(&paths.general_zipf, "general_zipf")?)?;
        let lexicon = match &paths.lexicon {
            Some(p) => ComplexWordLexicon::read_tsv(p)?,
            None => {
                let legal =
                    ZipfTable::read_tsv(ResourcePaths::require(&paths.legal_zipf, "legal_zipf")?)?;
                build_complex_lexicon(&general, &legal, paths.phrases.as_deref(), cwi)?
            }
        };
        let words = WordResources::load(
            ResourcePaths::require(&paths.embeddings, "embeddings")?,
            ResourcePaths::require(&paths.real_words, "real_words")?,
            paths.pos_lexicon.as_deref(),
            general,
        )?;
        let familiar =
            FamiliarWordList::load(ResourcePaths::require(&paths.familiar, "familiar")?)?;
        let entities = match &paths.gazetteer {
            Some(p) => NamedEntityTagger::load(p)?,
            None => NamedEntityTagger::default(),
        };
        Ok(Resources {
            lexicon,
            words,
            familiar,
            entities,
        })
    }
}

/// Readability of a text and its semantic difference from the original.
/// `sd` is `None` when either side has no in-vocabulary window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub fkgl: f64,
    pub dc: f64,
    pub sd: Option<f64>,
}

impl Scores {
    /// `None` when `text` has no words.
    pub fn measure(
        original: &str,
        text: &str,
        resources: &Resources,
        form: DcForm,
    ) -> Option<Self> {
        let counts = TextCounts::of(text, Some(&resources.familiar)).ok()?;
        Some(Scores {
            fkgl: counts.fkgl(),
            dc: counts.dale_chall(form),
            sd: semantic_difference(original, text, &resources.words.embeddings).ok(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub original: Scores,
    pub lexical: Scores,
    #[serde(rename = "final")]
    pub final_: Scores,
}

/// One substitution decision. `range` is the byte range in the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedSubstitution {
    pub span: TokenSpan,
    pub range: (usize, usize),
    pub original: String,
    pub chosen: Option<String>,
    pub features: Option<CandidateFeatures>,
    pub score: Option<f64>,
    pub generated: usize,
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationRecord {
    pub original: String,
    /// Sentence after lexical simplification.
    pub lexical: String,
    /// Sentences after splitting; `[lexical]` when splitting is off.
    #[serde(rename = "final")]
    pub final_sentences: Vec<String>,
    pub scores: Option<StageScores>,
    pub substitutions: Vec<LoggedSubstitution>,
}

impl SimplificationRecord {
    /// Untouched record, also used as the partial record on failure.
    fn identity(sentence: &str) -> Self {
        SimplificationRecord {
            original: sentence.to_string(),
            lexical: sentence.to_string(),
            final_sentences: Vec::new(),
            scores: None,
            substitutions: Vec::new(),
        }
    }

    /// Final sentences joined by a space.
    pub fn output(&self) -> String {
        self.final_sentences.join(" ")
    }
}

/// A failed simplification. The partial record keeps the original and has
/// no substitutions and no final sentences.
#[derive(Debug, Error)]
#[error("cannot simplify {:?}: {source}", partial.original)]
pub struct SimplifyError {
    pub partial: Box<SimplificationRecord>,
    #[source]
    pub source: Error,
}

/// Simplifies one sentence, honoring stage toggles and ablations.
pub fn simplify(
    sentence: &str,
    config: &PipelineConfig,
    resources: &Resources,
    provider: &dyn MaskedLmProvider,
) -> Result<SimplificationRecord, SimplifyError> {
    let mut record = SimplificationRecord::identity(sentence);
    let fail = |source: Error| SimplifyError {
        partial: Box::new(SimplificationRecord::identity(sentence)),
        source,
    };
    config.validate().map_err(fail)?;

    if config.ls_enabled {
        let (lexical, log) = lexical_stage(sentence, config, resources, provider).map_err(fail)?;
        record.lexical = lexical;
        record.substitutions = log;
    }
    record.final_sentences = if config.split_enabled {
        split_text(&record.lexical, &config.split, config.leaf_order)
    } else {
        vec![record.lexical.clone()]
    };

    let form = config.dc_form;
    record.scores = match (
        Scores::measure(sentence, sentence, resources, form),
        Scores::measure(sentence, &record.lexical, resources, form),
        Scores::measure(sentence, &record.output(), resources, form),
    ) {
        (Some(original), Some(lexical), Some(final_)) => Some(StageScores {
            original,
            lexical,
            final_,
        }),
        _ => None,
    };
    Ok(record)
}

fn lexical_stage(
    sentence: &str,
    config: &PipelineConfig,
    resources: &Resources,
    provider: &dyn MaskedLmProvider,
) -> Result<(String, Vec<LoggedSubstitution>)> {
    let tokens = tokenize(sentence);
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let spans = identify_complex_spans(
        &surfaces,
        &resources.lexicon,
        &resources.entities.tag(&tokens),
    );
    if spans.is_empty() {
        return Ok((sentence.to_string(), Vec::new()));
    }
    let query = build_masked_query(sentence, &spans)?;
    let candidates = generate_candidates(provider, &query, config.n_candidates)?;
    let weights = config.effective_weights();
    let ctx = RankingContext {
        weights: &weights,
        lexicon: &resources.lexicon,
        resources: &resources.words,
        provider,
        max_lm_feature: config.max_lm_feature,
    };
    let outcome = select_substitutions(sentence, &spans, &candidates, &ctx)?;
    let log = outcome
        .substitutions
        .into_iter()
        .map(|s| {
            let best = s.chosen().cloned();
            LoggedSubstitution {
                span: s.span,
                range: s.range,
                original: s.original,
                chosen: best.as_ref().map(|b| b.token.clone()),
                features: best.as_ref().map(|b| b.features),
                score: best.as_ref().map(|b| b.score),
                generated: s.generated,
                survivors: s.survivors,
            }
        })
        .collect();
    Ok((outcome.text, log))
}

/// Simplifies sentences in parallel, keeping input order.
pub fn simplify_batch<S: AsRef<str> + Sync>(
    sentences: &[S],
    config: &PipelineConfig,
    resources: &Resources,
    provider: &dyn MaskedLmProvider,
) -> Vec<Result<SimplificationRecord, SimplifyError>> {
    sentences
        .par_iter()
        .map(|s| simplify(s.as_ref(), config, resources, provider))
        .collect()
}

/// Mean FKGL, DC and SD of `outputs` against `originals`. Texts without
/// words are skipped; SD is averaged over the texts where it is defined.
pub fn mean_scores<S: AsRef<str> + Sync, T: AsRef<str> + Sync>(
    originals: &[S],
    outputs: &[T],
    resources: &Resources,
    form: DcForm,
) -> Result<(f64, f64, Option<f64>)> {
    if originals.len() != outputs.len() {
        return Err(Error::Domain(format!(
            "{} originals but {} outputs",
            originals.len(),
            outputs.len()
        )));
    }
    let scores: Vec<Scores> = originals
        .par_iter()
        .zip(outputs)
        .filter_map(|(o, t)| Scores::measure(o.as_ref(), t.as_ref(), resources, form))
        .collect();
    if scores.is_empty() {
        return Err(Error::EmptyText);
    }
    let fkgl = mean(&scores.iter().map(|s| s.fkgl).collect::<Vec<_>>());
    let dc = mean(&scores.iter().map(|s| s.dc).collect::<Vec<_>>());
    let sds: Vec<f64> = scores.iter().filter_map(|s| s.sd).collect();
    let sd = (!sds.is_empty()).then(|| mean(&sds));
    Ok((fkgl, dc, sd))
}

/// Weight-search objective: the harmonic mean of mean FKGL, mean DC and
/// mean SD of the pipeline output on `validation`.
pub fn weight_objective<S: AsRef<str> + Sync>(
    weights: RankingWeights,
    validation: &[S],
    config: &PipelineConfig,
    resources: &Resources,
    provider: &dyn MaskedLmProvider,
) -> Result<f64> {
    let config = PipelineConfig {
        weights,
        ..config.clone()
    };
    let outputs = simplify_batch(validation, &config, resources, provider)
        .into_iter()
        .map(|r| r.map(|rec| rec.output()).map_err(|e| e.source))
        .collect::<Result<Vec<_>>>()?;
    let (fkgl, dc, sd) = mean_scores(validation, &outputs, resources, config.dc_form)?;
    let sd = sd.ok_or(Error::NoEmbeddings("validation outputs"))?;
    harmonic_mean(&[fkgl, dc, sd])
}
