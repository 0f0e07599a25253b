//! Flag / config-file / default resolution. Flags win over the file, the
//! file wins over built-in defaults (which read `SEMCODEC_BACKEND` and
//! `SEMCODEC_FIXTURES` from the environment).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use semcodec::backends::ENV_BACKEND;
use semcodec::pipeline::{load_prompts, PromptSet, TimestampMode};
use semcodec::textcodec::{RepairMode, RepairPolicy};
use semcodec::PipelineConfig;

pub const ENV_FIXTURES: &str = "SEMCODEC_FIXTURES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Http,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            other => Err(format!("unknown backend {other:?} (expected mock or http)")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Mock => "mock",
            BackendKind::Http => "http",
        })
    }
}

/// Settings that can come from flags or from a TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Model backend.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendKind>,

    /// Target word count K for Word Select.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words: Option<usize>,

    /// Allowed relative deviation from K before a warning (default 0.10).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,

    /// Reflection iterations R.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflect: Option<u32>,

    /// Minimum payload rate for reflection, in µbpp.
    #[arg(long = "reflect-threshold")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflect_threshold: Option<f64>,

    /// Handling of characters outside the alphabet.
    #[arg(long, value_parser = parse_mode)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<RepairMode>,

    /// Prompt template directory (defaults to the built-in set).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompts: Option<PathBuf>,

    /// Mock fixture directory (`descriptions/<hash>.txt`, optional `words.txt`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Images processed concurrently.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,

    /// Transcript timestamps: logical (stage index) or wall clock.
    #[arg(long, value_parser = parse_timestamps)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<TimestampMode>,
}

fn parse_mode(s: &str) -> Result<RepairMode, String> {
    s.parse()
}

fn parse_timestamps(s: &str) -> Result<TimestampMode, String> {
    match s {
        "logical" => Ok(TimestampMode::Logical),
        "wall" => Ok(TimestampMode::Wall),
        other => Err(format!("unknown timestamp mode {other:?} (expected logical or wall)")),
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }

    /// Fields set here win; unset fields fall back to `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            backend: self.backend.or(lower.backend),
            words: self.words.or(lower.words),
            tolerance: self.tolerance.or(lower.tolerance),
            reflect: self.reflect.or(lower.reflect),
            reflect_threshold: self.reflect_threshold.or(lower.reflect_threshold),
            policy: self.policy.or(lower.policy),
            prompts: self.prompts.or(lower.prompts),
            fixtures: self.fixtures.or(lower.fixtures),
            out: self.out.or(lower.out),
            jobs: self.jobs.or(lower.jobs),
            timestamps: self.timestamps.or(lower.timestamps),
        }
    }

    /// Built-in defaults, including the environment-provided ones.
    pub fn defaults() -> Settings {
        Settings {
            backend: std::env::var(ENV_BACKEND).ok().and_then(|v| v.parse().ok()),
            fixtures: std::env::var_os(ENV_FIXTURES).map(PathBuf::from),
            ..Settings::default()
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub backend: BackendKind,
    pub pipeline: PipelineConfig,
    pub fixtures: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Resolved {
    pub fn from_settings(s: Settings) -> Result<Self> {
        let backend = s.backend.unwrap_or(BackendKind::Mock);
        let prompts = match &s.prompts {
            Some(dir) => load_prompts(dir)?,
            None => PromptSet::bundled(),
        };
        let defaults = PipelineConfig::default();
        let pipeline = PipelineConfig {
            target_words: s.words.unwrap_or(defaults.target_words),
            word_count_tolerance: s.tolerance.unwrap_or(defaults.word_count_tolerance),
            reflection_iterations: s.reflect.unwrap_or(defaults.reflection_iterations),
            reflection_threshold: s.reflect_threshold.unwrap_or(defaults.reflection_threshold),
            repair_policy: RepairPolicy::with_mode(s.policy.unwrap_or_default()),
            prompts,
            timestamps: s.timestamps.unwrap_or(match backend {
                BackendKind::Mock => TimestampMode::Logical,
                BackendKind::Http => TimestampMode::Wall,
            }),
        };
        pipeline.validate()?;
        Ok(Self {
            backend,
            pipeline,
            fixtures: s.fixtures,
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
            jobs: s.jobs.unwrap_or(1).max(1),
        })
    }
}
