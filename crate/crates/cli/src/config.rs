//! Layered configuration: built-in defaults, then a TOML file, then
//! environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use kbqa_core::generation::DEFAULT_CHAR_BUDGET;
use kbqa_core::provider::{Endpoint, ProviderConfig, Role, DEFAULT_EVAL_EMBED_MODEL, DEFAULT_MOCK_DIM};
use kbqa_core::retrieval::RetrievalParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "KBQA_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "kbqa.toml";
pub const EVAL_EMBED_URL_ENV: &str = "RAG_EVAL_EMBED_URL";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub providers: Providers,
    pub retrieval: RetrievalParams,
    pub generation: GenerationConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub raw: PathBuf,
    pub clean: PathBuf,
    pub chunks: PathBuf,
    pub qa: PathBuf,
    pub index: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            raw: "data/raw".into(),
            clean: "data/clean".into(),
            chunks: "data/chunks.jsonl".into(),
            qa: "data/qa.jsonl".into(),
            index: "data/index.bin".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderEntry {
    /// `mock`, `mock:<seed>` or an http(s) base URL.
    pub url: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_batch: Option<usize>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub embed: ProviderEntry,
    pub rerank: ProviderEntry,
    pub generate: ProviderEntry,
    /// Embedder for the answer-cosine metric.
    pub eval_embed: ProviderEntry,
    pub mock_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub template: Option<PathBuf>,
    /// Prompt size limit in characters; 0 disables it.
    pub char_budget: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            template: None,
            char_budget: DEFAULT_CHAR_BUDGET,
            max_new_tokens: 256,
            temperature: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Enables CORS for `ui_origin`.
    pub dev: bool,
    pub ui_origin: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            dev: false,
            ui_origin: "http://localhost:5173".into(),
        }
    }
}

/// Provider slots addressable from the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Embed,
    Rerank,
    Generate,
    EvalEmbed,
}

impl Slot {
    pub fn env_var(self) -> &'static str {
        match self {
            Slot::Embed => Role::Embedding.env_var(),
            Slot::Rerank => Role::Rerank.env_var(),
            Slot::Generate => Role::Generation.env_var(),
            Slot::EvalEmbed => EVAL_EMBED_URL_ENV,
        }
    }

    fn role(self) -> Role {
        match self {
            Slot::Embed | Slot::EvalEmbed => Role::Embedding,
            Slot::Rerank => Role::Rerank,
            Slot::Generate => Role::Generation,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Slot::Embed => "embed",
            Slot::Rerank => "rerank",
            Slot::Generate => "generate",
            Slot::EvalEmbed => "eval_embed",
        }
    }
}

impl Config {
    /// Reads `explicit`, else `$KBQA_CONFIG`, else `./kbqa.toml` when present,
    /// then applies environment overrides.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let path = explicit.map(Path::to_path_buf).or(from_env);
        let mut cfg = match path {
            Some(p) => Self::from_file(&p)?,
            None if Path::new(DEFAULT_CONFIG_FILE).is_file() => Self::from_file(Path::new(DEFAULT_CONFIG_FILE))?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::missing(format!("config file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::validation(format!("config file {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        for slot in [Slot::Embed, Slot::Rerank, Slot::Generate, Slot::EvalEmbed] {
            if let Some(v) = get(slot.env_var()).filter(|v| !v.trim().is_empty()) {
                self.entry_mut(slot).url = Some(v);
            }
        }
    }

    pub fn entry(&self, slot: Slot) -> &ProviderEntry {
        match slot {
            Slot::Embed => &self.providers.embed,
            Slot::Rerank => &self.providers.rerank,
            Slot::Generate => &self.providers.generate,
            Slot::EvalEmbed => &self.providers.eval_embed,
        }
    }

    pub fn entry_mut(&mut self, slot: Slot) -> &mut ProviderEntry {
        match slot {
            Slot::Embed => &mut self.providers.embed,
            Slot::Rerank => &mut self.providers.rerank,
            Slot::Generate => &mut self.providers.generate,
            Slot::EvalEmbed => &mut self.providers.eval_embed,
        }
    }

    /// `None` when the slot has no endpoint.
    pub fn provider(&self, slot: Slot) -> Result<Option<ProviderConfig>, CliError> {
        let entry = self.entry(slot);
        let Some(url) = entry.url.as_deref() else {
            return Ok(None);
        };
        let endpoint = Endpoint::parse(url).map_err(|e| CliError::validation(format!("providers.{}: {e}", slot.name())))?;
        let mut cfg = ProviderConfig::new(slot.role(), endpoint);
        if slot == Slot::EvalEmbed {
            cfg.model_id = DEFAULT_EVAL_EMBED_MODEL.into();
        }
        if let Some(m) = &entry.model {
            cfg.model_id = m.clone();
        }
        if let Some(t) = entry.timeout_secs {
            cfg.timeout = std::time::Duration::from_secs(t);
        }
        if let Some(b) = entry.max_batch {
            cfg.max_batch = b;
        }
        if let Some(r) = entry.max_retries {
            cfg.max_retries = r;
        }
        cfg.mock_dim = self.providers.mock_dim.unwrap_or(DEFAULT_MOCK_DIM);
        if slot == Slot::Generate {
            cfg.max_new_tokens = self.generation.max_new_tokens;
            cfg.temperature = self.generation.temperature;
            cfg.seed = self.generation.seed;
        }
        cfg.validate()
            .map_err(|e| CliError::validation(format!("providers.{}: {e}", slot.name())))?;
        Ok(Some(cfg))
    }

    pub fn require_provider(&self, slot: Slot) -> Result<ProviderConfig, CliError> {
        self.provider(slot)?.ok_or_else(|| {
            CliError::validation(format!(
                "no {} provider configured: set {} or providers.{}.url (use \"mock\" for offline runs)",
                slot.name(),
                slot.env_var(),
                slot.name()
            ))
        })
    }

    pub fn char_budget(&self) -> Option<usize> {
        (self.generation.char_budget > 0).then_some(self.generation.char_budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env_precedence() {
        let mut cfg = Config::parse(
            r#"
            [providers.embed]
            url = "http://embed.local/"
            model = "custom-embed"
            [providers.generate]
            url = "mock:3"
            [retrieval]
            fetch_k = 8
            final_k = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.retrieval.lambda, 0.5);
        cfg.apply_env(|k| (k == "RAG_EMBED_URL").then(|| "mock:1".to_owned()));
        let e = cfg.provider(Slot::Embed).unwrap().unwrap();
        assert_eq!(e.endpoint, Endpoint::Mock { seed: 1 });
        assert_eq!(e.model_id, "custom-embed");
        assert_eq!(cfg.provider(Slot::Generate).unwrap().unwrap().endpoint, Endpoint::Mock { seed: 3 });
        assert!(cfg.provider(Slot::Rerank).unwrap().is_none());
        assert!(cfg.require_provider(Slot::Rerank).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[paths]\nindx = \"x\"").is_err());
    }

    #[test]
    fn eval_embedder_defaults_to_small_model() {
        let mut cfg = Config::default();
        cfg.apply_env(|k| (k == EVAL_EMBED_URL_ENV).then(|| "mock".to_owned()));
        assert_eq!(cfg.provider(Slot::EvalEmbed).unwrap().unwrap().model_id, DEFAULT_EVAL_EMBED_MODEL);
    }

    #[test]
    fn zero_budget_disables_truncation() {
        let mut cfg = Config::default();
        assert_eq!(cfg.char_budget(), Some(DEFAULT_CHAR_BUDGET));
        cfg.generation.char_budget = 0;
        assert_eq!(cfg.char_budget(), None);
    }
}
