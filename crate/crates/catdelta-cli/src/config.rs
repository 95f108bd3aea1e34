//! Run configuration: defaults, overridden by a config file (JSON or flat
//! key=value), overridden by command-line flags. The fully resolved config
//! is echoed into every output directory as `config.json`, which is itself a
//! valid config file, so any run is reproducible from its own echo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub against: Option<PathBuf>,
    pub measures: Vec<String>,
    /// "ones", "mean", or a path to a Q x Q CSV.
    pub weights: String,
    pub response: Option<String>,
    pub supervised_mode: Option<String>,
    /// "strict", "default", or a positive epsilon.
    pub lin_guard: String,
    pub kl_floor: f64,
    pub directed_kl: bool,
    pub unseen: String,
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub symmetrize: bool,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub task: String,
    pub has_header: bool,
    pub delimiter: char,
    pub na_policy: String,
}

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            input: None,
            against: None,
            measures: vec![],
            weights: "ones".into(),
            response: None,
            supervised_mode: None,
            lin_guard: "strict".into(),
            kl_floor: catdelta::DEFAULT_KL_FLOOR,
            directed_kl: false,
            unseen: "error".into(),
            k: None,
            k_grid: vec![1, 3, 5, 9, 15, 21],
            folds: 5,
            repeats: 10,
            seed: 0,
            symmetrize: false,
            threads: None,
            out: PathBuf::from("catdelta-out"),
            task: "knn".into(),
            has_header: true,
            delimiter: ',',
            na_policy: "error".into(),
        }
    }
}

/// Partial configuration as read from a file; every field optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    /// Which command echoed this config; informational (a mismatch with the
    /// invoked command prints a warning).
    pub command: Option<String>,
    pub input: Option<PathBuf>,
    pub against: Option<PathBuf>,
    pub measures: Option<Value>,
    pub weights: Option<String>,
    pub response: Option<String>,
    pub supervised_mode: Option<String>,
    pub lin_guard: Option<String>,
    pub kl_floor: Option<f64>,
    pub directed_kl: Option<bool>,
    pub unseen: Option<String>,
    pub k: Option<usize>,
    pub k_grid: Option<Value>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub symmetrize: Option<bool>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub task: Option<String>,
    pub has_header: Option<bool>,
    pub delimiter: Option<char>,
    pub na_policy: Option<String>,
}

impl PartialConfig {
    /// Load a config file: JSON when it starts with '{', flat `key=value`
    /// lines otherwise ('#' comments, blank lines ignored).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = if text.trim_start().starts_with('{') {
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad JSON config: {e}")))?
        } else {
            let mut map = serde_json::Map::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, raw)) = line.split_once('=') else {
                    return Err(CliError::usage(format!(
                        "config line {} is not key=value: '{line}'",
                        i + 1
                    )));
                };
                let raw = raw.trim();
                // Coerce scalars; leave everything else a string.
                let v = match raw {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => raw
                        .parse::<i64>()
                        .map(Value::from)
                        .or_else(|_| raw.parse::<f64>().map(Value::from))
                        .unwrap_or_else(|_| Value::String(raw.to_string())),
                };
                map.insert(key.trim().to_string(), v);
            }
            Value::Object(map)
        };
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("bad config: {e}")))
    }

    /// Apply file values underneath the already-set CLI values.
    pub fn merge_into(self, cfg: &mut RunConfig, cli_set: &CliSet) {
        macro_rules! take {
            ($field:ident) => {
                if !cli_set.$field {
                    if let Some(v) = self.$field {
                        cfg.$field = v;
                    }
                }
            };
        }
        macro_rules! take_opt {
            ($field:ident) => {
                if !cli_set.$field {
                    if let Some(v) = self.$field {
                        cfg.$field = Some(v);
                    }
                }
            };
        }
        take_opt!(input);
        take_opt!(against);
        if !cli_set.measures {
            if let Some(v) = self.measures {
                cfg.measures = string_list(&v);
            }
        }
        take!(weights);
        take_opt!(response);
        take_opt!(supervised_mode);
        take!(lin_guard);
        take!(kl_floor);
        take!(directed_kl);
        take!(unseen);
        take_opt!(k);
        if !cli_set.k_grid {
            if let Some(v) = self.k_grid {
                cfg.k_grid = string_list(&v)
                    .iter()
                    .filter_map(|s| s.parse().ok())
                    .collect();
            }
        }
        take!(folds);
        take!(repeats);
        take!(seed);
        take!(symmetrize);
        take_opt!(threads);
        take!(out);
        take!(task);
        take!(has_header);
        take!(delimiter);
        take!(na_policy);
    }
}

/// Which fields were explicitly set on the command line (flags win over the
/// config file).
#[derive(Debug, Default)]
pub struct CliSet {
    pub input: bool,
    pub against: bool,
    pub measures: bool,
    pub weights: bool,
    pub response: bool,
    pub supervised_mode: bool,
    pub lin_guard: bool,
    pub kl_floor: bool,
    pub directed_kl: bool,
    pub unseen: bool,
    pub k: bool,
    pub k_grid: bool,
    pub folds: bool,
    pub repeats: bool,
    pub seed: bool,
    pub symmetrize: bool,
    pub threads: bool,
    pub out: bool,
    pub task: bool,
    pub has_header: bool,
    pub delimiter: bool,
    pub na_policy: bool,
}

/// A JSON value that is either a comma-separated string or an array of
/// scalars, as a list of strings.
fn string_list(v: &Value) -> Vec<String> {
    match v {
        Value::String(s) => s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect(),
        Value::Array(items) => items
            .iter()
            .map(|x| match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect(),
        other => vec![other.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nseed=9\nmeasures=matching,tvd\nfolds=3\nsymmetrize=true\n").unwrap();
        let partial = PartialConfig::load(&path).unwrap();
        let mut cfg = RunConfig::defaults("cv");
        partial.merge_into(&mut cfg, &CliSet::default());
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.measures, vec!["matching", "tvd"]);
        assert_eq!(cfg.folds, 3);
        assert!(cfg.symmetrize);
        assert_eq!(cfg.repeats, 10, "untouched default");
    }

    #[test]
    fn json_config_round_trips_through_echo() {
        let mut cfg = RunConfig::defaults("cv");
        cfg.measures = vec!["matching".into()];
        cfg.seed = 4;
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, &text).unwrap();
        let partial = PartialConfig::load(&path).unwrap();
        let mut cfg2 = RunConfig::defaults("cv");
        partial.merge_into(&mut cfg2, &CliSet::default());
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn cli_wins_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "seed=9\n").unwrap();
        let partial = PartialConfig::load(&path).unwrap();
        let mut cfg = RunConfig::defaults("cv");
        cfg.seed = 123; // pretend the flag was given
        let set = CliSet {
            seed: true,
            ..CliSet::default()
        };
        partial.merge_into(&mut cfg, &set);
        assert_eq!(cfg.seed, 123);
    }
}
