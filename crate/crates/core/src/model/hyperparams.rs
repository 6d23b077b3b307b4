// Copyright 2026 The aspectval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::topics::WordTopic;
use crate::corpus::ValueTypes;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Every latent update in a pass reads the previous pass; parallel over entities.
    Batch,
    /// Each latent update reads the freshest values; single-threaded.
    Sequential,
}

/// Model configuration.
///
/// The config file uses the short names `K`, `N`, `lambda_B`, ... ; see
/// [`Hyperparameters::from_config_str`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Aspects per scope (per entity, or corpus-wide with `shared_aspects`).
    pub num_aspects: usize,
    /// Value types; 0 disables the value component.
    pub num_values: usize,
    /// Names of the value types; empty means the defaults for `num_values`.
    pub value_names: Vec<String>,
    pub lambda_background: f64,
    pub lambda_aspect: f64,
    /// Extra prior mass on seed words of a value distribution.
    pub lambda_seed: f64,
    /// Base prior mass of every word in a value distribution.
    pub epsilon_value: f64,
    pub lambda_aspect_value: f64,
    pub lambda_mixture: f64,
    pub lambda_ignore: f64,
    pub lambda_transition: f64,
    pub gamma_self: f64,
    pub gamma_ignore: f64,
    /// Log-weight per word topic, ordered A, V, B, I.
    pub topic_prior: [f64; 4],
    pub lambda_tag: f64,
    pub use_ignore: bool,
    pub use_pos: bool,
    pub shared_aspects: bool,
    pub shared_aspect_multinomial: bool,
    pub max_iters: usize,
    /// Stop once no q component moves by this much in a pass; 0 disables.
    pub convergence_tol: f64,
    pub schedule: Schedule,
    pub rng_seed: u64,
    /// Greedy restarts per aspect scope in the search run once during
    /// fitting; 0 disables the search.
    #[serde(default = "default_restarts")]
    pub aspect_restarts: usize,
}

fn default_restarts() -> usize {
    20
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            num_aspects: 10,
            num_values: 2,
            value_names: Vec::new(),
            lambda_background: 0.2,
            lambda_aspect: 0.075,
            lambda_seed: 0.15,
            epsilon_value: 0.075,
            lambda_aspect_value: 1.0,
            lambda_mixture: 1.0,
            lambda_ignore: 0.2,
            lambda_transition: 1.0,
            gamma_self: 1.0,
            gamma_ignore: 5.0,
            topic_prior: [0.0; 4],
            lambda_tag: 1.0,
            use_ignore: false,
            use_pos: false,
            shared_aspects: false,
            shared_aspect_multinomial: false,
            max_iters: 50,
            convergence_tol: 1e-5,
            schedule: Schedule::Batch,
            rng_seed: 0,
            aspect_restarts: default_restarts(),
        }
    }
}

impl Hyperparameters {
    /// Per-restaurant aspects with positive/negative values.
    pub fn restaurant() -> Self {
        Hyperparameters::default()
    }

    /// Corpus-wide aspects, no values, Ignore topic on.
    pub fn medical() -> Self {
        Hyperparameters {
            num_aspects: 30,
            num_values: 0,
            use_ignore: true,
            shared_aspects: true,
            shared_aspect_multinomial: true,
            ..Hyperparameters::default()
        }
    }

    pub fn value_types(&self) -> ValueTypes {
        if self.value_names.is_empty() {
            ValueTypes::default_for(self.num_values)
        } else {
            ValueTypes::new(self.value_names.clone())
        }
    }

    pub fn topic_log_prior(&self, topic: WordTopic) -> f64 {
        self.topic_prior[topic as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_aspects == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !self.value_names.is_empty() && self.value_names.len() != self.num_values {
            return Err(Error::Config(format!(
                "{} value names given for N = {}",
                self.value_names.len(),
                self.num_values
            )));
        }
        let concentrations = [
            ("lambda_B", self.lambda_background),
            ("lambda_A", self.lambda_aspect),
            ("lambda_V", self.lambda_seed),
            ("epsilon_V", self.epsilon_value),
            ("lambda_AV", self.lambda_aspect_value),
            ("lambda_M", self.lambda_mixture),
            ("lambda_I", self.lambda_ignore),
            ("lambda_T", self.lambda_transition),
            ("gamma_self", self.gamma_self),
            ("gamma_ignore", self.gamma_ignore),
            ("lambda_tag", self.lambda_tag),
        ];
        for (name, value) in concentrations {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive number, got {value}")));
            }
        }
        if self.topic_prior.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("topic_prior entries must be finite".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Config("convergence_tol must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses a flat `key = value` config. Unknown keys are an error; missing
    /// keys keep their defaults. `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut hp = Hyperparameters::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            hp.set(key, value)
                .map_err(|msg| Error::Config(format!("line {}: {key}: {msg}", lineno + 1)))?;
        }
        hp.validate()?;
        Ok(hp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_str(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn flag(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("expected true/false, got {v:?}")),
            }
        }
        match key {
            "K" => self.num_aspects = num(value)?,
            "N" => self.num_values = num(value)?,
            "value_names" => {
                self.value_names = value
                    .split(',')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "lambda_B" => self.lambda_background = num(value)?,
            "lambda_A" => self.lambda_aspect = num(value)?,
            "lambda_V" => self.lambda_seed = num(value)?,
            "epsilon_V" => self.epsilon_value = num(value)?,
            "lambda_AV" => self.lambda_aspect_value = num(value)?,
            "lambda_M" => self.lambda_mixture = num(value)?,
            "lambda_I" => self.lambda_ignore = num(value)?,
            "lambda_T" => self.lambda_transition = num(value)?,
            "gamma_self" => self.gamma_self = num(value)?,
            "gamma_ignore" => self.gamma_ignore = num(value)?,
            "topic_prior" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err("expected four comma-separated log-weights (A, V, B, I)".into());
                }
                for (slot, part) in self.topic_prior.iter_mut().zip(parts) {
                    *slot = num(part)?;
                }
            }
            "lambda_tag" => self.lambda_tag = num(value)?,
            "use_ignore" => self.use_ignore = flag(value)?,
            "use_pos" => self.use_pos = flag(value)?,
            "shared_aspects" => self.shared_aspects = flag(value)?,
            "shared_aspect_multinomial" => self.shared_aspect_multinomial = flag(value)?,
            "max_iters" => self.max_iters = num(value)?,
            "convergence_tol" => self.convergence_tol = num(value)?,
            "schedule" => {
                self.schedule = match value {
                    "batch" => Schedule::Batch,
                    "sequential" => Schedule::Sequential,
                    other => return Err(format!("unknown schedule {other:?}")),
                }
            }
            "rng_seed" => self.rng_seed = num(value)?,
            "aspect_restarts" => self.aspect_restarts = num(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Renders the config in the format accepted by `from_config_str`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "K = {}", self.num_aspects);
        let _ = writeln!(s, "N = {}", self.num_values);
        if !self.value_names.is_empty() {
            let _ = writeln!(s, "value_names = {}", self.value_names.join(","));
        }
        let _ = writeln!(s, "lambda_B = {}", self.lambda_background);
        let _ = writeln!(s, "lambda_A = {}", self.lambda_aspect);
        let _ = writeln!(s, "lambda_V = {}", self.lambda_seed);
        let _ = writeln!(s, "epsilon_V = {}", self.epsilon_value);
        let _ = writeln!(s, "lambda_AV = {}", self.lambda_aspect_value);
        let _ = writeln!(s, "lambda_M = {}", self.lambda_mixture);
        let _ = writeln!(s, "lambda_I = {}", self.lambda_ignore);
        let _ = writeln!(s, "lambda_T = {}", self.lambda_transition);
        let _ = writeln!(s, "gamma_self = {}", self.gamma_self);
        let _ = writeln!(s, "gamma_ignore = {}", self.gamma_ignore);
        let tp: Vec<String> = self.topic_prior.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "topic_prior = {}", tp.join(","));
        let _ = writeln!(s, "lambda_tag = {}", self.lambda_tag);
        let _ = writeln!(s, "use_ignore = {}", self.use_ignore);
        let _ = writeln!(s, "use_pos = {}", self.use_pos);
        let _ = writeln!(s, "shared_aspects = {}", self.shared_aspects);
        let _ = writeln!(s, "shared_aspect_multinomial = {}", self.shared_aspect_multinomial);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "convergence_tol = {}", self.convergence_tol);
        let schedule = match self.schedule {
            Schedule::Batch => "batch",
            Schedule::Sequential => "sequential",
        };
        let _ = writeln!(s, "schedule = {schedule}");
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        let _ = writeln!(s, "aspect_restarts = {}", self.aspect_restarts);
        s
    }
}
