use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::disorder::Sampler;
use crate::error::{Error, Result};
use crate::free_energy::{SlqOptions, DEFAULT_DEFLATION, DEFAULT_DENSE_CAP};
use crate::model::{ModelKind, ModelParameters, Order};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Covariance,
    SelfAveraging,
    Convergence,
    PhaseDiagram,
    BoundsAudit,
    Clusters,
    Monotonicity,
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// How pressures are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Classical sum at `Γ = 0`, dense diagonalization up to `dense_cap`,
    /// SLQ beyond.
    #[default]
    Auto,
    Exact,
    Classical,
    Slq,
}

/// The order used at each `N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PSchedule {
    /// The `p` list, at every `N`.
    #[default]
    Fixed,
    /// `p = N`.
    EqualsN,
    /// `p = ⌈(ln N)²⌉`.
    LogSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlqSettings {
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Low-lying Ritz vectors handled exactly (0 disables deflation).
    #[serde(default = "default_deflation")]
    pub deflation: usize,
}

fn default_probes() -> usize {
    32
}

fn default_steps() -> usize {
    80
}

fn default_deflation() -> usize {
    DEFAULT_DEFLATION
}

impl Default for SlqSettings {
    fn default() -> Self {
        Self {
            probes: default_probes(),
            steps: default_steps(),
            deflation: default_deflation(),
        }
    }
}

impl SlqSettings {
    pub fn options(&self, seed: u64) -> SlqOptions {
        SlqOptions {
            deflation: self.deflation,
            ..SlqOptions::new(self.probes, self.steps, seed)
        }
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// SHA-256 of a value's JSON serialization, hex encoded.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let canonical = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(canonical))
}

fn default_kind() -> ModelKind {
    ModelKind::Sk
}

fn default_k() -> usize {
    4
}

fn default_realizations() -> usize {
    1
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

/// A declarative experiment description, read from TOML.
///
/// Statistical contracts compare at `sigmas` standard errors: 5 by default
/// for covariances (many simultaneous comparisons) and 2 for scalar means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    /// Defaults to the natural sampler of `kind`; for covariance runs on SK
    /// fields both SK samplers are checked when unset.
    #[serde(default)]
    pub sampler: Option<Sampler>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub p: Vec<Order>,
    #[serde(default)]
    pub p_schedule: PSchedule,
    #[serde(default)]
    pub beta: Vec<f64>,
    /// Alternative to `beta` for the phase diagram (`β = 1/T`).
    #[serde(default)]
    pub temperature: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Ball-containment multiplier `K`.
    #[serde(default = "default_k")]
    pub k_parameter: usize,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    #[serde(default)]
    pub slq: SlqSettings,
    #[serde(default)]
    pub sigmas: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// An empty grid for `experiment` with default settings.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            kind: default_kind(),
            sampler: None,
            n: Vec::new(),
            p: Vec::new(),
            p_schedule: PSchedule::Fixed,
            beta: Vec::new(),
            temperature: Vec::new(),
            gamma: Vec::new(),
            eps: Vec::new(),
            k_parameter: default_k(),
            realizations: default_realizations(),
            master_seed: 0,
            method: MethodChoice::Auto,
            dense_cap: default_dense_cap(),
            slq: SlqSettings::default(),
            sigmas: None,
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config for a known experiment; the `experiment` key may be
    /// omitted but must match when present.
    pub fn from_toml_str_as(text: &str, experiment: Experiment) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let name = experiment.to_string();
        match table.get("experiment") {
            None => {
                table.insert("experiment".into(), toml::Value::String(name));
            }
            Some(toml::Value::String(s)) if *s == name => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "config is for experiment {other}, but {name} was requested"
                )))
            }
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&read_config(path.as_ref())?)
    }

    pub fn load_as(path: impl AsRef<Path>, experiment: Experiment) -> Result<Self> {
        Self::from_toml_str_as(&read_config(path.as_ref())?, experiment)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        content_hash(self)
    }

    /// Tolerance in standard errors for the experiment's contract.
    pub fn sigma_tolerance(&self) -> f64 {
        self.sigmas.unwrap_or(match self.experiment {
            Experiment::Covariance => 5.0,
            _ => 2.0,
        })
    }

    /// Samplers exercised for this configuration.
    pub fn samplers(&self) -> Vec<Sampler> {
        match (self.sampler, self.experiment, self.kind) {
            (Some(s), _, _) => vec![s],
            (None, Experiment::Covariance, ModelKind::Sk) => {
                vec![Sampler::WalshSpectral, Sampler::NaiveMonomial]
            }
            (None, _, kind) => vec![Sampler::default_for(kind)],
        }
    }

    /// Orders used at dimension `n`.
    pub fn orders_for(&self, n: usize) -> Vec<Order> {
        if self.kind == ModelKind::Rem {
            return vec![Order::Infinite];
        }
        match self.p_schedule {
            PSchedule::Fixed => self.p.clone(),
            PSchedule::EqualsN => vec![Order::Finite(n as u32)],
            PSchedule::LogSquared => {
                let l = (n as f64).ln();
                vec![Order::Finite((l * l).ceil().max(1.0) as u32)]
            }
        }
    }

    /// Inverse temperatures, from `beta` or else `1/temperature`.
    pub fn betas(&self) -> Vec<f64> {
        if !self.beta.is_empty() {
            return self.beta.clone();
        }
        self.temperature.iter().map(|t| 1.0 / t).collect()
    }

    /// Every `(n, p)` pair of the grid.
    pub fn model_points(&self) -> Result<Vec<ModelParameters>> {
        let mut out = Vec::new();
        for &n in &self.n {
            for p in self.orders_for(n) {
                let params = ModelParameters::new(n, p, 0.0, 0.0, self.kind)
                    .map_err(|e| Error::Config(format!("grid point N = {n}, p = {p}: {e}")))?;
                out.push(params);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.realizations < 1 {
            return bad("realizations must be ≥ 1".into());
        }
        let e = self.experiment;
        let needs_fields = e != Experiment::PhaseDiagram;
        if needs_fields {
            if self.n.is_empty() {
                return bad(format!("{e} needs a nonempty `n` list"));
            }
            if self.kind != ModelKind::Rem && self.p_schedule == PSchedule::Fixed && self.p.is_empty()
            {
                return bad(format!("{e} needs a nonempty `p` list or a `p_schedule`"));
            }
            for s in self.samplers() {
                if s == Sampler::Synthetic || !s.supports(self.kind) {
                    return bad(format!("sampler {s} cannot generate {} fields", self.kind));
                }
            }
            self.model_points()?;
        }
        let temps_or_betas = !self.beta.is_empty() || !self.temperature.is_empty();
        match e {
            Experiment::SelfAveraging | Experiment::Convergence | Experiment::BoundsAudit => {
                if !temps_or_betas || self.gamma.is_empty() {
                    return bad(format!("{e} needs nonempty `beta` and `gamma` lists"));
                }
            }
            Experiment::PhaseDiagram => {
                if !temps_or_betas || self.gamma.is_empty() {
                    return bad("phase_diagram needs `temperature` (or `beta`) and `gamma` lists".into());
                }
                if self.temperature.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                    return bad("temperatures must be finite and > 0".into());
                }
            }
            Experiment::Monotonicity => {
                if !temps_or_betas {
                    return bad("monotonicity needs a nonempty `beta` list".into());
                }
                if self.gamma.iter().any(|&g| g != 0.0) {
                    return bad("monotonicity compares classical pressures; gamma must be 0".into());
                }
                if self.kind != ModelKind::Sk {
                    return bad("monotonicity compares SK-type fields with the REM".into());
                }
                if let Some(p) = self.p.iter().find(|p| p.finite().is_none_or(|p| p % 2 != 0)) {
                    return bad(format!("monotonicity uses even orders, got p = {p}"));
                }
            }
            Experiment::Clusters => {
                if self.eps.is_empty() {
                    return bad("clusters needs a nonempty `eps` list".into());
                }
                if self.k_parameter < 1 {
                    return bad("k_parameter must be ≥ 1".into());
                }
            }
            Experiment::Covariance => {
                if let Some(&n) = self.n.iter().find(|&&n| n > 8) {
                    return bad(format!("covariance runs compare full matrices and need N ≤ 8, got {n}"));
                }
            }
        }
        if e == Experiment::BoundsAudit {
            if self.eps.is_empty() {
                return bad("bounds_audit needs a nonempty `eps` list".into());
            }
            if let Some(&n) = self.n.iter().find(|&&n| n > self.dense_cap) {
                return bad(format!("bounds_audit needs exact pressures; N = {n} exceeds dense_cap"));
            }
        }
        if self.eps.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return bad("eps values must be finite and > 0".into());
        }
        for &b in &self.betas() {
            if !(b >= 0.0 && b.is_finite()) {
                return bad(format!("beta = {b} must be finite and ≥ 0"));
            }
        }
        if self.gamma.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return bad("gamma values must be finite and ≥ 0".into());
        }
        if self.slq.probes < 2 || self.slq.steps < 10 {
            return bad("slq needs probes ≥ 2 and steps ≥ 10".into());
        }
        if let Some(s) = self.sigmas {
            if !(s > 0.0) {
                return bad("sigmas must be > 0".into());
            }
        }
        Ok(())
    }
}
