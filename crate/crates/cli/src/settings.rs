//! Run settings. Values come from command-line flags layered over an optional
//! plain-text config file of `key = value` lines; flags win. The resolved
//! map, with defaults filled in, is echoed in every report and can be saved
//! as a config file to reproduce the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use groupperm_core::{AttributeCode, Direction, Estimator, ExposureKind};

use crate::error::CliError;

/// Keys accepted by analysis commands.
pub const ANALYSIS_KEYS: &[&str] = &[
    "data",
    "attribute-levels",
    "design",
    "exposure",
    "coarsen-map",
    "c1",
    "c2",
    "subgroup",
    "statistic",
    "permutations",
    "seed",
    "estimator",
    "direction",
    "alpha",
    "grid",
    "null",
    "limit",
    "candidate-col",
];

/// Keys accepted by simulation commands.
pub const SIM_KEYS: &[&str] = &[
    "taus",
    "replicates",
    "permutations",
    "alpha",
    "seed",
    "group-types",
    "groups",
    "draws",
    "cap",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Layers `flags` over the contents of `file`, rejecting keys outside
    /// `allowed`.
    pub fn resolve(
        flags: BTreeMap<String, String>,
        file: Option<&Path>,
        allowed: &[&str],
    ) -> Result<Self, CliError> {
        let mut values = match file {
            Some(path) => parse_config(&std::fs::read_to_string(path).map_err(|e| {
                CliError::Io(format!("cannot read config {}: {e}", path.display()))
            })?)?,
            None => BTreeMap::new(),
        };
        values.extend(flags);
        if let Some(key) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::validation(format!("unknown setting '{key}'")));
        }
        Ok(Settings { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The value for `key`, recording `default` as the resolved value when
    /// the key is unset.
    pub fn or_default(&mut self, key: &str, default: &str) -> String {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| default.to_string())
            .clone()
    }

    pub fn parse<T: FromStr>(&mut self, key: &str, default: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.or_default(key, default);
        raw.parse()
            .map_err(|e| CliError::validation(format!("setting '{key}' = '{raw}': {e}")))
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|raw| {
                raw.parse()
                    .map_err(|e| CliError::validation(format!("setting '{key}' = '{raw}': {e}")))
            })
            .transpose()
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::validation(format!("missing required setting '{key}'")))
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Config-file text that reproduces these settings.
    pub fn to_config_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a key may appear once.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::validation(format!("config line {}: expected 'key = value'", i + 1))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(CliError::validation(format!(
                "config line {}: empty key",
                i + 1
            )));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::validation(format!(
                "config line {}: duplicate key '{key}'",
                i + 1
            )));
        }
    }
    Ok(out)
}

/// Which randomization design the observed assignment is analysed under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DesignSpec {
    /// Stratified on the attribute with the observed per-group tallies.
    Sr,
    /// Stratified on the attribute refined by a covariate column.
    SrBy(String),
    /// Completely randomized with the observed group sizes.
    Cr,
}

impl FromStr for DesignSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sr" | "observed" => Ok(DesignSpec::Sr),
            "cr" => Ok(DesignSpec::Cr),
            _ => match s.strip_prefix("sr:") {
                Some(col) if !col.is_empty() => Ok(DesignSpec::SrBy(col.to_string())),
                _ => Err("expected sr, observed, cr or sr:COLUMN".into()),
            },
        }
    }
}

/// Test statistic named on the command line; covariates are column names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatisticSpec {
    DiffInMeans,
    Studentized,
    Stratified(String),
    Residual(Vec<String>),
}

impl FromStr for StatisticSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "diff-in-means" => Ok(StatisticSpec::DiffInMeans),
            "studentized" => Ok(StatisticSpec::Studentized),
            _ => {
                if let Some(col) = s.strip_prefix("stratified:").filter(|c| !c.is_empty()) {
                    Ok(StatisticSpec::Stratified(col.to_string()))
                } else if let Some(cols) = s.strip_prefix("residual:").filter(|c| !c.is_empty()) {
                    Ok(StatisticSpec::Residual(
                        cols.split(',').map(|c| c.trim().to_string()).collect(),
                    ))
                } else {
                    Err("expected diff-in-means, studentized, stratified:COLUMN or residual:COL[,COL...]".into())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    Sharp,
    Pairwise,
}

impl FromStr for NullKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sharp" => Ok(NullKind::Sharp),
            "pairwise" => Ok(NullKind::Pairwise),
            _ => Err("expected sharp or pairwise".into()),
        }
    }
}

/// Comma-separated list of values.
pub fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|e| CliError::validation(format!("setting '{key}': bad entry '{t}': {e}")))
        })
        .collect()
}

/// Settings shared by every analysis command, typed.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub data: PathBuf,
    pub levels: Option<Vec<AttributeCode>>,
    pub design: DesignSpec,
    pub exposure: Option<ExposureKind>,
    pub coarsen_map: Option<PathBuf>,
    pub subgroup: Option<AttributeCode>,
    pub statistic: StatisticSpec,
    pub permutations: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub direction: Direction,
    pub alpha: f64,
}

impl AnalysisConfig {
    /// Reads the common keys, filling defaults into `settings`.
    /// `statistic` is the command's default statistic.
    pub fn from_settings(settings: &mut Settings, statistic: &str) -> Result<Self, CliError> {
        let data = PathBuf::from(settings.require("data")?);
        let levels = match settings.get("attribute-levels") {
            Some(raw) => Some(parse_list("attribute-levels", raw)?),
            None => None,
        };
        let exposure = settings.parse_opt("exposure")?;
        let alpha: f64 = settings.parse("alpha", "0.05")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::validation(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(AnalysisConfig {
            data,
            levels,
            design: settings.parse("design", "sr")?,
            exposure,
            coarsen_map: settings.get("coarsen-map").map(PathBuf::from),
            subgroup: settings.parse_opt("subgroup")?,
            statistic: settings.parse("statistic", statistic)?,
            permutations: settings.parse("permutations", "1000")?,
            seed: settings.parse("seed", "0")?,
            estimator: settings.parse("estimator", "valid")?,
            direction: settings.parse("direction", "two-sided")?,
            alpha,
        })
    }
}
