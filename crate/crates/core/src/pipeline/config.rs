use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentationPolicy;
use crate::decoder::BeamConfig;
use crate::dsp::FrontendConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Training recipe of one cell of the variant grid.
#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    /// Stop after training on the initial split.
    InitialOnly,
    /// Human-labeled selection only; no pseudo-labels.
    Hls,
    /// Pseudo-labels in the supervised term, no consistency loss.
    Pls,
    /// As [`Variant::Pls`] after dropping low-confidence pseudo-labels.
    PlsFiltered,
    /// Pseudo-labels plus consistency loss under the given augmentation.
    Cr(AugmentationPolicy),
    CrFiltered(AugmentationPolicy),
    /// Every pool utterance human-labeled.
    FullBudget,
}

impl Variant {
    pub fn uses_pls(&self) -> bool {
        matches!(
            self,
            Variant::Pls | Variant::PlsFiltered | Variant::Cr(_) | Variant::CrFiltered(_)
        )
    }

    pub fn filtered(&self) -> bool {
        matches!(self, Variant::PlsFiltered | Variant::CrFiltered(_))
    }

    pub fn policy(&self) -> Option<&AugmentationPolicy> {
        match self {
            Variant::Cr(p) | Variant::CrFiltered(p) => Some(p),
            _ => None,
        }
    }

    /// Every name [`FromStr`] accepts, for help texts.
    pub fn known_names() -> &'static str {
        "initial_only, hls, pls, pls_filtered, cr-{s,p,a,sa}, cr_filtered-{s,p,a,sa}, full_budget"
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::InitialOnly => f.write_str("initial_only"),
            Variant::Hls => f.write_str("hls"),
            Variant::Pls => f.write_str("pls"),
            Variant::PlsFiltered => f.write_str("pls_filtered"),
            Variant::Cr(p) => write!(f, "cr-{}", p.short()),
            Variant::CrFiltered(p) => write!(f, "cr_filtered-{}", p.short()),
            Variant::FullBudget => f.write_str("full_budget"),
        }
    }
}

fn policy_from_short(s: &str) -> Option<AugmentationPolicy> {
    Some(match s {
        "s" | "speed" => AugmentationPolicy::speed(),
        "p" | "pitch" => AugmentationPolicy::pitch(),
        "a" | "awgn" => AugmentationPolicy::awgn(),
        "sa" | "specaugment" => AugmentationPolicy::spec_augment(),
        _ => return None,
    })
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::InvalidArgument(format!(
                "unknown variant '{s}' (expected one of {})",
                Variant::known_names()
            ))
        };
        let norm = s.to_ascii_lowercase();
        Ok(match norm.as_str() {
            "initial_only" => Variant::InitialOnly,
            "hls" => Variant::Hls,
            "pls" => Variant::Pls,
            "pls_filtered" => Variant::PlsFiltered,
            "full_budget" => Variant::FullBudget,
            _ => {
                let (head, tail) = norm.split_once(['-', ':']).ok_or_else(unknown)?;
                let policy = policy_from_short(tail).ok_or_else(unknown)?;
                match head {
                    "cr" => Variant::Cr(policy),
                    "cr_filtered" => Variant::CrFiltered(policy),
                    _ => return Err(unknown()),
                }
            }
        })
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMetric {
    Pprob,
    OracleLoss,
    OracleCer,
    Random,
}

impl FromStr for UncertaintyMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pprob" => Self::Pprob,
            "oracle_loss" | "loss" => Self::OracleLoss,
            "oracle_cer" | "cer" => Self::OracleCer,
            "random" | "rnd" => Self::Random,
            _ => return Err(Error::InvalidArgument(format!("unknown uncertainty metric '{s}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub budget_fraction: f64,
    pub lambda: f64,
    /// Pseudo-label refresh period in epochs.
    pub delta: usize,
    /// Pseudo-labels with pprob below this are dropped by filtered variants.
    pub tau: f64,
    pub metric: UncertaintyMetric,
    pub epochs_initial: usize,
    pub epochs_pipeline: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub lr_initial: f64,
    pub lr_pipeline: f64,
    pub lr_decay: f64,
    pub clip_norm: f64,
    /// SpecAugment on the supervised term while training the initial model.
    pub initial_spec_augment: bool,
    /// Drop every pseudo-label regardless of variant.
    pub force_empty_pls: bool,
    pub beam: BeamConfig,
    /// Threads used for decoding and scoring.
    pub workers: usize,
    pub model: ModelConfig,
    pub frontend: FrontendConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Hls,
            budget_fraction: 0.1,
            lambda: 1.0,
            delta: 1,
            tau: -0.5,
            metric: UncertaintyMetric::Pprob,
            epochs_initial: 20,
            epochs_pipeline: 15,
            seed: 0,
            batch_size: 32,
            lr_initial: 0.003,
            lr_pipeline: 0.001,
            lr_decay: 1.1,
            clip_norm: 400.0,
            initial_spec_augment: true,
            force_empty_pls: false,
            beam: BeamConfig::default(),
            workers: 1,
            model: ModelConfig::default(),
            frontend: FrontendConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.budget_fraction) {
            return bad(format!("budget_fraction {} outside [0, 1]", self.budget_fraction));
        }
        if self.delta == 0 {
            return bad("delta must be at least 1".into());
        }
        if self.batch_size == 0 || self.workers == 0 {
            return bad("batch_size and workers must be positive".into());
        }
        if !(self.lr_initial > 0.0 && self.lr_pipeline > 0.0 && self.lr_decay > 1.0 && self.clip_norm > 0.0) {
            return bad("learning rates and clip norm must be positive, lr_decay above 1".into());
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad(format!("lambda {} must be finite and non-negative", self.lambda));
        }
        if let Some(p) = self.variant.policy() {
            p.validate()?;
        }
        self.beam.validate()?;
        self.model.validate()?;
        self.frontend.validate()
    }

    /// Budget after variant overrides: full_budget labels everything.
    pub fn effective_budget(&self) -> f64 {
        match self.variant {
            Variant::FullBudget => 1.0,
            _ => self.budget_fraction,
        }
    }

    /// Consistency weight after variant overrides.
    pub fn effective_lambda(&self) -> f64 {
        match self.variant {
            Variant::Cr(_) | Variant::CrFiltered(_) => self.lambda,
            _ => 0.0,
        }
    }

    /// Pseudo-labels are refreshed before epochs `0, Δ, 2Δ, …`.
    pub fn is_refresh_epoch(&self, epoch: usize) -> bool {
        epoch.is_multiple_of(self.delta)
    }

    pub fn refresh_epochs(&self) -> Vec<usize> {
        (0..self.epochs_pipeline)
            .filter(|&e| self.is_refresh_epoch(e))
            .collect()
    }

    pub fn uses_pls(&self) -> bool {
        self.variant.uses_pls() && !self.force_empty_pls
    }

    /// Settings that determine the initial model; runs sharing this key can
    /// share one initial checkpoint.
    pub fn initial_key(&self) -> String {
        let frontend = serde_json::to_string(&self.frontend).expect("frontend serializes");
        format!(
            "{}-{:016x}-{}-{}-{}-{}-{}-{}-{}",
            self.model.hash(),
            crate::rng::hash_str(&frontend),
            self.seed,
            self.epochs_initial,
            self.batch_size,
            self.lr_initial,
            self.lr_decay,
            self.clip_norm,
            self.initial_spec_augment
        )
    }
}
