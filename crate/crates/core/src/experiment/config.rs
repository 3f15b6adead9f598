use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::{ChannelModel, SystemDims};
use crate::error::{Error, Result};
use crate::waterfill::{IwfOptions, PowerBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Covariance,
    Eigenbeam,
    Grassmann,
    RandomBf,
    StatisticalBf,
    FullCsi,
    NoFeedback,
    Tdma,
    Region2u,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::Covariance,
        Scheme::Eigenbeam,
        Scheme::Grassmann,
        Scheme::RandomBf,
        Scheme::StatisticalBf,
        Scheme::FullCsi,
        Scheme::NoFeedback,
        Scheme::Tdma,
        Scheme::Region2u,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Covariance => "covariance",
            Scheme::Eigenbeam => "eigenbeam",
            Scheme::Grassmann => "grassmann",
            Scheme::RandomBf => "random_bf",
            Scheme::StatisticalBf => "statistical_bf",
            Scheme::FullCsi => "full_csi",
            Scheme::NoFeedback => "no_feedback",
            Scheme::Tdma => "tdma",
            Scheme::Region2u => "region2u",
        }
    }

    /// Whether the scheme has one curve per feedback size.
    pub fn uses_feedback(self) -> bool {
        matches!(
            self,
            Scheme::Covariance | Scheme::Eigenbeam | Scheme::Grassmann | Scheme::RandomBf | Scheme::Region2u
        )
    }

    pub fn is_beamforming(self) -> bool {
        matches!(
            self,
            Scheme::Eigenbeam | Scheme::Grassmann | Scheme::RandomBf | Scheme::StatisticalBf
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    IidRayleigh,
    /// Every user gets `diag(eigenvalues)` as transmit correlation.
    Kronecker { tx_correlation_eigenvalues: Vec<f64> },
}

/// Power budget relative to the SNR-derived total `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetSpec {
    Sum,
    /// User `k` may spend `shares[k] * P`.
    Individual { shares: Vec<f64> },
}

impl BudgetSpec {
    pub fn at_power(&self, power: f64) -> PowerBudget {
        match self {
            BudgetSpec::Sum => PowerBudget::sum(power),
            BudgetSpec::Individual { shares } => {
                PowerBudget::individual(shares.iter().map(|s| s * power).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSettings {
    pub restarts: usize,
    pub max_rounds: usize,
    pub tol_bits: f64,
    /// Start each larger design from the previous one in `bits_list`.
    pub nested: bool,
    pub iwf: IwfOptions,
}

impl Default for DesignSettings {
    fn default() -> Self {
        DesignSettings {
            restarts: 4,
            max_rounds: 50,
            tol_bits: 1e-4,
            nested: true,
            iwf: IwfOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrassmannSettings {
    pub training_size: usize,
    pub rounds: usize,
    pub restarts: usize,
}

impl Default for GrassmannSettings {
    fn default() -> Self {
        GrassmannSettings {
            training_size: 4000,
            rounds: 60,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSettings {
    /// Grid size of the weighted selection rules tracing the boundary.
    pub weights: usize,
}

impl Default for RegionSettings {
    fn default() -> Self {
        RegionSettings { weights: 21 }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub regions_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dims: SystemDims,
    pub channel: ChannelSpec,
    pub snr_grid_db: Vec<f64>,
    pub bits_list: Vec<u32>,
    pub schemes: Vec<Scheme>,
    pub budget: BudgetSpec,
    pub training_size: usize,
    pub eval_draws: usize,
    pub seed: u64,
    pub design: DesignSettings,
    pub grassmann: GrassmannSettings,
    pub region: RegionSettings,
    pub outputs: OutputSpec,
}

const REQUIRED: [&str; 10] = [
    "name",
    "dims",
    "channel",
    "snr_grid_db",
    "bits_list",
    "schemes",
    "budget",
    "training_size",
    "eval_draws",
    "seed",
];
const OPTIONAL: [&str; 4] = ["design", "grassmann", "region", "outputs"];

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    obj.get(key)
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| Error::config(key, e.to_string())))
        .transpose()
}

fn required<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<T> {
    field(obj, key)?.ok_or_else(|| Error::config(key, "missing required field"))
}

impl ExperimentConfig {
    /// Parses and validates a JSON config. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("$", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("$", "config must be a JSON object"))?;
        if let Some(key) = obj
            .keys()
            .find(|k| !REQUIRED.contains(&k.as_str()) && !OPTIONAL.contains(&k.as_str()))
        {
            return Err(Error::config(key.as_str(), "unknown field"));
        }
        let config = ExperimentConfig {
            name: required(obj, "name")?,
            dims: required(obj, "dims")?,
            channel: required(obj, "channel")?,
            snr_grid_db: required(obj, "snr_grid_db")?,
            bits_list: required(obj, "bits_list")?,
            schemes: required(obj, "schemes")?,
            budget: required(obj, "budget")?,
            training_size: required(obj, "training_size")?,
            eval_draws: required(obj, "eval_draws")?,
            seed: required(obj, "seed")?,
            design: field(obj, "design")?.unwrap_or_default(),
            grassmann: field(obj, "grassmann")?.unwrap_or_default(),
            region: field(obj, "region")?.unwrap_or_default(),
            outputs: field(obj, "outputs")?.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("$", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Semantic checks on an already parsed config.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.name.contains(['/', '\\']) {
            return Err(Error::config("name", "must not contain path separators"));
        }
        for (key, v) in [("users", d.users), ("tx_antennas", d.tx_antennas), ("rx_antennas", d.rx_antennas)] {
            if v == 0 {
                return Err(Error::config(format!("dims.{key}"), "must be at least 1"));
            }
        }
        if let ChannelSpec::Kronecker { tx_correlation_eigenvalues: ev } = &self.channel {
            let path = "channel.tx_correlation_eigenvalues";
            if ev.len() != d.tx_antennas {
                return Err(Error::config(path, format!("needs {} values", d.tx_antennas)));
            }
            if let Some(i) = ev.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::config(format!("{path}[{i}]"), "must be finite and non-negative"));
            }
            let trace: f64 = ev.iter().sum();
            if (trace - d.tx_antennas as f64).abs() > 1e-9 * d.tx_antennas as f64 {
                return Err(Error::config(path, format!("must sum to {} (got {trace})", d.tx_antennas)));
            }
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db", "must not be empty"));
        }
        if let Some(i) = self.snr_grid_db.iter().position(|x| !x.is_finite()) {
            return Err(Error::config(format!("snr_grid_db[{i}]"), "must be finite"));
        }
        if let Some(i) = self.snr_grid_db.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::config(format!("snr_grid_db[{}]", i + 1), "grid must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must name at least one scheme"));
        }
        let mut seen = BTreeSet::new();
        for (i, s) in self.schemes.iter().enumerate() {
            if !seen.insert(*s) {
                return Err(Error::config(format!("schemes[{i}]"), format!("`{s}` listed twice")));
            }
        }
        let feedback = self.schemes.iter().any(|s| s.uses_feedback());
        if feedback && self.bits_list.is_empty() {
            return Err(Error::config("bits_list", "feedback schemes need at least one B"));
        }
        let mut bits_seen = BTreeSet::new();
        for (i, &b) in self.bits_list.iter().enumerate() {
            if b > 10 {
                return Err(Error::config(format!("bits_list[{i}]"), "at most 10 bits are supported"));
            }
            if !bits_seen.insert(b) {
                return Err(Error::config(format!("bits_list[{i}]"), "duplicate value"));
            }
        }
        match &self.budget {
            BudgetSpec::Sum => {}
            BudgetSpec::Individual { shares } => {
                if shares.len() != d.users {
                    return Err(Error::config("budget.shares", format!("needs {} values", d.users)));
                }
                if let Some(i) = shares.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(Error::config(format!("budget.shares[{i}]"), "must be positive"));
                }
            }
        }
        for (i, s) in self.schemes.iter().enumerate() {
            let path = format!("schemes[{i}]");
            if s.is_beamforming() && !matches!(self.budget, BudgetSpec::Sum) {
                return Err(Error::config(path, format!("`{s}` needs a sum power budget")));
            }
            if *s == Scheme::Region2u && d.users != 2 {
                return Err(Error::config(path, "region2u needs exactly 2 users"));
            }
            if *s == Scheme::Grassmann {
                if let Some(j) = self.bits_list.iter().position(|&b| b == 0) {
                    return Err(Error::config(format!("bits_list[{j}]"), "grassmann needs B >= 1"));
                }
            }
        }
        let designs = self
            .schemes
            .iter()
            .any(|s| matches!(s, Scheme::Covariance | Scheme::Eigenbeam | Scheme::Region2u));
        if designs {
            let max_bits = self.bits_list.iter().copied().max().unwrap_or(0);
            let need = crate::lloyd::MIN_DRAWS_PER_CELL << max_bits;
            if self.training_size < need {
                return Err(Error::config(
                    "training_size",
                    format!("{} draws cannot train 2^{max_bits} cells (need {need})", self.training_size),
                ));
            }
        }
        if self.schemes.contains(&Scheme::Grassmann) {
            let max_bits = self.bits_list.iter().copied().max().unwrap_or(1);
            let need = crate::lloyd::MIN_DRAWS_PER_CELL << max_bits;
            if self.grassmann.training_size < need {
                return Err(Error::config("grassmann.training_size", format!("need at least {need}")));
            }
        }
        if self.eval_draws < 2 {
            return Err(Error::config("eval_draws", "need at least 2 draws for a standard error"));
        }
        if self.design.restarts == 0 {
            return Err(Error::config("design.restarts", "must be at least 1"));
        }
        if !(self.design.tol_bits >= 0.0) {
            return Err(Error::config("design.tol_bits", "must be non-negative"));
        }
        if self.region.weights < 2 && self.schemes.contains(&Scheme::Region2u) {
            return Err(Error::config("region.weights", "must be at least 2"));
        }
        Ok(())
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        match &self.channel {
            ChannelSpec::IidRayleigh => Ok(ChannelModel::iid(self.dims)),
            ChannelSpec::Kronecker { tx_correlation_eigenvalues } => {
                ChannelModel::kronecker_diagonal(self.dims, tx_correlation_eigenvalues)
            }
        }
    }

    pub fn csv_name(&self) -> String {
        self.outputs.csv.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn json_name(&self) -> String {
        self.outputs.json.clone().unwrap_or_else(|| format!("{}.json", self.name))
    }

    pub fn regions_csv_name(&self) -> String {
        self.outputs
            .regions_csv
            .clone()
            .unwrap_or_else(|| format!("{}_regions.csv", self.name))
    }
}

/// Total power `P` for an SNR in dB with unit noise variance.
pub fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}
