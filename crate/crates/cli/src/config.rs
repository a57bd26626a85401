//! Flat `key=value` configuration files. Blank lines and lines starting
//! with `#` are ignored; unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clam::synth::SynthSpec;
use clam::training::{SplitFractions, TrainConfig};

use crate::error::{CliError, Result};
use crate::io::read_text;

pub const TRAIN_KEYS: &[&str] = &[
    "model",
    "n_classes",
    "folds",
    "train_fraction",
    "val_fraction",
    "test_fraction",
    "learning_rate",
    "weight_decay",
    "min_epochs",
    "max_epochs",
    "patience",
    "alpha",
    "tau",
    "c1",
    "c2",
    "sample_size",
    "mutually_exclusive",
    "beta1",
    "beta2",
    "adam_eps",
    "seed",
];

pub const SYNTH_KEYS: &[&str] = &[
    "count",
    "n_classes",
    "feature_dim",
    "k_min",
    "k_max",
    "evidence_fraction",
    "separation",
    "noise_std",
    "seed",
];

#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !allowed.contains(&k) {
                return Err(CliError::usage(format!("config line {}: unknown key {k:?}", i + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::usage(format!("config line {}: {k} set twice", i + 1)));
            }
        }
        Ok(KeyValues { values })
    }

    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&read_text(p)?, allowed),
            None => Ok(Self::default()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::usage(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        self.set("learning_rate", &mut c.learning_rate)?;
        self.set("weight_decay", &mut c.weight_decay)?;
        self.set("min_epochs", &mut c.min_epochs)?;
        self.set("max_epochs", &mut c.max_epochs)?;
        self.set("patience", &mut c.patience)?;
        self.set("alpha", &mut c.loss.alpha)?;
        self.set("tau", &mut c.loss.tau)?;
        self.set("c1", &mut c.loss.c1)?;
        self.set("c2", &mut c.loss.c2)?;
        self.set("sample_size", &mut c.loss.sample_size)?;
        self.set("mutually_exclusive", &mut c.loss.mutually_exclusive)?;
        self.set("beta1", &mut c.adam.beta1)?;
        self.set("beta2", &mut c.adam.beta2)?;
        self.set("adam_eps", &mut c.adam.eps)?;
        self.set("seed", &mut c.seed)?;
        c.validate()?;
        Ok(c)
    }

    pub fn split_fractions(&self) -> Result<SplitFractions> {
        let mut f = SplitFractions::default();
        self.set("train_fraction", &mut f.train)?;
        self.set("val_fraction", &mut f.val)?;
        self.set("test_fraction", &mut f.test)?;
        Ok(f)
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let mut s = SynthSpec::default();
        self.set("n_classes", &mut s.n_classes)?;
        self.set("feature_dim", &mut s.feature_dim)?;
        self.set("k_min", &mut s.k_min)?;
        self.set("k_max", &mut s.k_max)?;
        self.set("evidence_fraction", &mut s.evidence_fraction)?;
        self.set("separation", &mut s.separation)?;
        self.set("noise_std", &mut s.noise_std)?;
        self.set("seed", &mut s.seed)?;
        s.validate()?;
        Ok(s)
    }
}
