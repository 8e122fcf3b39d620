//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! model = osn            # or: network = path/to/file.net
//! k3 = 1/10
//! k4 = 0.1
//! k5 = 0.065
//! eps = 0.0071041        # optional, with k2 and k1
//! order = 3
//! n = 2
//! rtol = 1e-9
//! atol = 1e-11
//! format = json
//! ```
//!
//! With a network source, raw rates `K1 .. K6` may replace `k1 .. k5`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::model::{self, ModelError, ModelParams, RegionReport};
use crate::netparse::{self, MassActionOdes, ReactionNetwork};
use crate::rational::{self, Q};
use crate::sim::Tolerances;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("exactly one of `model` and `network` must be given")]
    ModelSource,
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("raw rates K1..K6 need a network source and all six values")]
    RawRates,
    #[error("network file: {0}")]
    Network(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    /// The bundled calcium network.
    Osn,
    Network(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ModelSource,
    pub k3: Option<Q>,
    pub k4: Option<Q>,
    pub k5: Option<Q>,
    pub eps: Option<Q>,
    pub k2: Option<Q>,
    pub k1: Option<Q>,
    pub raw: [Option<Q>; 6],
    pub order: Option<u32>,
    pub n: usize,
    pub tol: Tolerances,
    pub format: Option<Format>,
}

const KEYS: [&str; 19] = [
    "model", "network", "k3", "k4", "k5", "eps", "k2", "k1", "K1", "K2", "K3", "K4", "K5", "K6", "order", "n", "rtol",
    "atol", "format",
];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn rat(key: &str, value: &str) -> Result<Q, ConfigError> {
    rational::parse(value).map_err(|_| bad(key, value))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::load(Some(path), &[])
    }

    /// Reads an optional file, then applies `key=value` overrides. Without a
    /// file the bundled model is the source. Relative network paths resolve
    /// against the file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut pairs = match path {
            Some(p) => Self::pairs(&std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?)?,
            None => Vec::new(),
        };
        let mut from_file_source = pairs.iter().any(|(k, _)| k == "model" || k == "network");
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or(ConfigError::Syntax { line: 0 })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: k.to_string(),
                });
            }
            if k == "model" || k == "network" {
                from_file_source = false;
                pairs.retain(|(key, _)| key != "model" && key != "network");
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        if !pairs.iter().any(|(k, _)| k == "model" || k == "network") {
            pairs.push(("model".into(), "osn".into()));
        }
        let mut cfg = Self::from_pairs(&pairs)?;
        if let (ModelSource::Network(p), Some(file), true) = (&cfg.source, path, from_file_source) {
            if p.is_relative() {
                if let Some(dir) = file.parent() {
                    cfg.source = ModelSource::Network(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let pairs = Self::pairs(text)?;
        Self::from_pairs(&pairs)
    }

    /// `key = value` lines with comments removed, checked for unknown and
    /// duplicate keys.
    pub fn pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
        let mut out: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.split('#').next().unwrap_or_default().trim();
            if t.is_empty() {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: k.to_string(),
                });
            }
            if out.iter().any(|(key, _)| key == k) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: k.to_string(),
                });
            }
            out.push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }

    /// Builds a configuration from pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let opt_rat = |key: &str| get(key).map(|v| rat(key, v)).transpose();
        let source = match (get("model"), get("network")) {
            (Some("osn"), None) => ModelSource::Osn,
            (Some(v), None) => return Err(bad("model", v)),
            (None, Some(p)) => ModelSource::Network(PathBuf::from(p)),
            _ => return Err(ConfigError::ModelSource),
        };
        let raw_keys = ["K1", "K2", "K3", "K4", "K5", "K6"];
        let mut raw: [Option<Q>; 6] = Default::default();
        for (slot, key) in raw.iter_mut().zip(raw_keys) {
            *slot = opt_rat(key)?;
        }
        let n = match get("n") {
            Some(v) => v.parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(|| bad("n", v))?,
            None => 2,
        };
        let order = get("order")
            .map(|v| v.parse::<u32>().map_err(|_| bad("order", v)))
            .transpose()?;
        let float = |key: &str, default: f64| -> Result<f64, ConfigError> {
            match get(key) {
                Some(v) => v.parse::<f64>().ok().filter(|x| *x > 0.0).ok_or_else(|| bad(key, v)),
                None => Ok(default),
            }
        };
        let defaults = Tolerances::default();
        let format = match get("format") {
            None => None,
            Some("json") => Some(Format::Json),
            Some("csv") => Some(Format::Csv),
            Some("text") => Some(Format::Text),
            Some(v) => return Err(bad("format", v)),
        };
        Ok(RunConfig {
            source,
            k3: opt_rat("k3")?,
            k4: opt_rat("k4")?,
            k5: opt_rat("k5")?,
            eps: opt_rat("eps")?,
            k2: opt_rat("k2")?,
            k1: opt_rat("k1")?,
            raw,
            order,
            n,
            tol: Tolerances {
                rtol: float("rtol", defaults.rtol)?,
                atol: float("atol", defaults.atol)?,
            },
            format,
        })
    }

    fn has_raw(&self) -> Result<bool, ConfigError> {
        let count = self.raw.iter().filter(|r| r.is_some()).count();
        match (count, &self.source) {
            (0, _) => Ok(false),
            (6, ModelSource::Network(_)) => Ok(true),
            _ => Err(ConfigError::RawRates),
        }
    }

    /// `(k3, k4, k5)` from the dimensionless keys or the raw rates.
    pub fn free_params(&self) -> Result<(Q, Q, Q), ConfigError> {
        if self.has_raw()? {
            let r = |i: usize| self.raw[i].clone().expect("checked");
            return Ok((r(2), r(3), r(4)));
        }
        Ok((
            self.k3.clone().ok_or(ConfigError::Missing("k3"))?,
            self.k4.clone().ok_or(ConfigError::Missing("k4"))?,
            self.k5.clone().ok_or(ConfigError::Missing("k5"))?,
        ))
    }

    pub fn region(&self) -> Result<RegionReport, ConfigError> {
        let (k3, k4, k5) = self.free_params()?;
        Ok(model::center_region_check(&k3, &k4, &k5))
    }

    /// Model parameters: derived normalizations unless overridden.
    pub fn params(&self) -> Result<Result<ModelParams, ModelError>, ConfigError> {
        if self.has_raw()? {
            let raw: [Q; 6] = std::array::from_fn(|i| self.raw[i].clone().expect("checked"));
            let eps = self.eps.clone().ok_or(ConfigError::Missing("eps"))?;
            return Ok(model::nondimensionalize(&raw, &eps));
        }
        let (k3, k4, k5) = self.free_params()?;
        Ok(ModelParams::with_overrides(
            k3,
            k4,
            k5,
            self.eps.clone(),
            self.k2.clone(),
            self.k1.clone(),
        ))
    }

    /// The reaction network of the model source, with its generated rates.
    pub fn network(&self) -> Result<(ReactionNetwork, MassActionOdes), ConfigError> {
        let text = match &self.source {
            ModelSource::Osn => netparse::OSN_NETWORK.to_string(),
            ModelSource::Network(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?,
        };
        let net = netparse::parse_network(&text).map_err(|e| ConfigError::Network(e.to_string()))?;
        let odes = netparse::mass_action_odes(&net).map_err(|e| ConfigError::Network(e.to_string()))?;
        Ok((net, odes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn parses_exact_decimals() {
        let c = RunConfig::parse("model = osn\nk3 = 1/10\nk4 = 0.1 # same\nk5 = 0.065\n").unwrap();
        assert_eq!(c.free_params().unwrap(), (ratio(1, 10), ratio(1, 10), ratio(13, 200)));
        assert_eq!(c.n, 2);
        assert_eq!(c.tol, Tolerances::default());
        assert!(c.params().unwrap().unwrap().flags.hopf_normalized);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("k3 = 1"), Err(ConfigError::ModelSource)));
        assert!(matches!(
            RunConfig::parse("model = osn\nnetwork = a.net"),
            Err(ConfigError::ModelSource)
        ));
        assert!(matches!(
            RunConfig::parse("model = osn\nk9 = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("model = osn\nk3 = 1\nk3 = 2"),
            Err(ConfigError::DuplicateKey { line: 3, .. })
        ));
        assert!(matches!(
            RunConfig::parse("model = osn\nk3 1"),
            Err(ConfigError::Syntax { line: 2 })
        ));
        assert!(matches!(
            RunConfig::parse("model = osn\nk3 = x"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse("model = osn\nn = 0"),
            Err(ConfigError::BadValue { .. })
        ));
        let c = RunConfig::parse("model = osn\nk3 = 1/10").unwrap();
        assert!(matches!(c.free_params(), Err(ConfigError::Missing("k4"))));
    }

    #[test]
    fn later_pairs_override() {
        let mut pairs = RunConfig::pairs("model = osn\nk3 = 1/10\nk4 = 1/10\nk5 = 1/20").unwrap();
        pairs.push(("k5".into(), "0.0514".into()));
        let c = RunConfig::from_pairs(&pairs).unwrap();
        assert_eq!(c.k5, Some(ratio(514, 10_000)));
    }

    #[test]
    fn raw_rates_need_network() {
        let text = "model = osn\nK1 = 1\nK2 = 1\nK3 = 1\nK4 = 1\nK5 = 1\nK6 = 1\neps = 1";
        let c = RunConfig::parse(text).unwrap();
        assert!(matches!(c.params(), Err(ConfigError::RawRates)));
    }

    #[test]
    fn bundled_network_loads() {
        let c = RunConfig::parse("model = osn").unwrap();
        let (net, odes) = c.network().unwrap();
        assert_eq!(net.species.len(), 3);
        model::check_osn_structure(&odes).unwrap();
    }
}
