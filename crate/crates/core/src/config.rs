//! Key-value configuration files (`key = value`, `#` comments) and their
//! mapping onto resource paths, provider choice and pipeline settings.
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::candidates::{FixtureProvider, HttpProvider, MaskedLmProvider};
use crate::cwi::CwiConfig;
use crate::error::{read_to_string, Error, Result};
use crate::metrics::DcForm;
use crate::pipeline::PipelineConfig;
use crate::ranking::{Feature, RankingWeights};
use crate::split::{LeafOrder, SplitRule};

/// Every key understood by [`Settings::from_key_values`].
pub const KNOWN_KEYS: &[&str] = &[
    "general_zipf",
    "legal_zipf",
    "lexicon",
    "phrases",
    "embeddings",
    "familiar",
    "real_words",
    "pos_lexicon",
    "gazetteer",
    "weights",
    "subordinators",
    "relatives",
    "coordinators",
    "provider_url",
    "provider_retries",
    "fixture_dir",
    "n_candidates",
    "ls_enabled",
    "split_enabled",
    "ablate",
    "min_split_tokens",
    "max_depth",
    "leaf_order",
    "max_lm_feature",
    "dc_form",
    "k_general",
    "k_domain",
    "w_b",
    "w_c",
    "w_lm",
    "w_f",
    "w_l",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut kv = KeyValues {
            entries: BTreeMap::new(),
            base_dir: path.parent().map(Path::to_path_buf),
        };
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected key=value"))?;
            let key = k.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::parse(path, idx + 1, format!("unknown key {key:?}")));
            }
            if kv
                .entries
                .insert(key.to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    format!("duplicate key {key:?}"),
                ));
            }
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    /// Sets or overrides a key. Values set here are not rebased.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let p = PathBuf::from(self.get(key)?);
        match &self.base_dir {
            Some(base) if p.is_relative() => Some(base.join(p)),
            _ => Some(p),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(Error::Config(format!(
                    "{key}: expected a boolean, got {v:?}"
                ))),
            })
            .transpose()
    }
}

/// Locations of the lexical resources. Which ones are required depends on
/// the command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourcePaths {
    pub general_zipf: Option<PathBuf>,
    pub legal_zipf: Option<PathBuf>,
    /// Prebuilt complex-word lexicon; built from the Zipf tables when absent.
    pub lexicon: Option<PathBuf>,
    pub phrases: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub familiar: Option<PathBuf>,
    pub real_words: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
}

impl ResourcePaths {
    pub fn require<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Http { url: String, retries: usize },
    Fixture(PathBuf),
}

impl ProviderSpec {
    pub fn open(&self) -> Result<Box<dyn MaskedLmProvider>> {
        Ok(match self {
            ProviderSpec::Http { url, retries } => {
                Box::new(HttpProvider::new(url).with_retries(*retries))
            }
            ProviderSpec::Fixture(dir) => Box::new(FixtureProvider::load_dir(dir)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub paths: ResourcePaths,
    /// `provider_url` wins over `fixture_dir` when both are set.
    pub provider: Option<ProviderSpec>,
    pub pipeline: PipelineConfig,
    pub cwi: CwiConfig,
}

impl Settings {
    /// Resolves every key. Cue and weight files are read here.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let paths = ResourcePaths {
            general_zipf: kv.path("general_zipf"),
            legal_zipf: kv.path("legal_zipf"),
            lexicon: kv.path("lexicon"),
            phrases: kv.path("phrases"),
            embeddings: kv.path("embeddings"),
            familiar: kv.path("familiar"),
            real_words: kv.path("real_words"),
            pos_lexicon: kv.path("pos_lexicon"),
            gazetteer: kv.path("gazetteer"),
        };

        let provider = match (kv.get("provider_url"), kv.path("fixture_dir")) {
            (Some(url), _) if !url.is_empty() => Some(ProviderSpec::Http {
                url: url.to_string(),
                retries: kv.parsed("provider_retries")?.unwrap_or(2),
            }),
            (_, Some(dir)) => Some(ProviderSpec::Fixture(dir)),
            _ => None,
        };

        let mut p = PipelineConfig::default();
        if let Some(path) = kv.path("weights") {
            p.weights = RankingWeights::load(&path)?;
        }
        for f in Feature::ALL {
            if let Some(w) = kv.parsed::<f64>(f.key())? {
                p.weights = set_weight(p.weights, f, w);
            }
        }
        if let Some(n) = kv.parsed("n_candidates")? {
            p.n_candidates = n;
        }
        if let Some(b) = kv.flag("ls_enabled")? {
            p.ls_enabled = b;
        }
        if let Some(b) = kv.flag("split_enabled")? {
            p.split_enabled = b;
        }
        if let Some(list) = kv.get("ablate") {
            p.ablate = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<Feature>()
                        .map_err(|e| Error::Config(format!("ablate: {e}")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(n) = kv.parsed("min_split_tokens")? {
            p.split.min_split_tokens = n;
        }
        if let Some(n) = kv.parsed("max_depth")? {
            p.split.max_depth = n;
        }
        for (key, rule) in [
            ("subordinators", SplitRule::Subordinate),
            ("relatives", SplitRule::Relative),
            ("coordinators", SplitRule::Coordination),
        ] {
            if let Some(path) = kv.path(key) {
                p.split.load_cues(rule, &path)?;
            }
        }
        if let Some(v) = kv.get("leaf_order") {
            p.leaf_order = match v {
                "core-first" => LeafOrder::CoreFirst,
                "context-first" => LeafOrder::ContextFirst,
                _ => return Err(Error::Config(format!("leaf_order: unknown value {v:?}"))),
            };
        }
        if let Some(x) = kv.parsed("max_lm_feature")? {
            p.max_lm_feature = x;
        }
        if let Some(v) = kv.get("dc_form") {
            p.dc_form = match v {
                "percentage" => DcForm::Percentage,
                "ratio" => DcForm::Ratio,
                _ => return Err(Error::Config(format!("dc_form: unknown value {v:?}"))),
            };
        }

        let mut cwi = CwiConfig::default();
        if let Some(k) = kv.parsed("k_general")? {
            cwi.k_general = k;
        }
        if let Some(k) = kv.parsed("k_domain")? {
            cwi.k_domain = k;
        }
        cwi.validate()?;

        Ok(Settings {
            paths,
            provider,
            pipeline: p,
            cwi,
        })
    }
}

fn set_weight(w: RankingWeights, f: Feature, value: f64) -> RankingWeights {
    let mut a = w.to_array();
    let i = Feature::ALL
        .iter()
        .position(|&g| g == f)
        .expect("feature listed in ALL");
    a[i] = value;
    RankingWeights::from_array(a)
}
