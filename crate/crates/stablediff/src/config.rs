//! Flat `key = value` experiment files. `#` starts a comment.
//!
//! | key | meaning |
//! |---|---|
//! | `model` | preset (`kinetic(3)`, …) or `table:<csv with x,b,sigma>` |
//! | `observable` | `id`, `centered_id`, `power(p)`, … or `table:<csv with x,f>` |
//! | `cutoff` | half-width of the tabulated domain |
//! | `claim_alpha`, `claim_ell`, `claim_f_plus`, `claim_f_minus` | claimed tail |
//! | `scheme` | `direct` or `timechange` |
//! | `dt`, `epsilon`, `times`, `n_paths`, `seed` | simulation settings |
//! | `out_dir`, `format` | output directory; `csv`, `binary` or `both` |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stablediff_core::asymptotics::TailClaim;
use stablediff_core::pathsim::Scheme;
use stablediff_core::presets::{parse_number, parse_slowvar};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
    Both,
}

/// Claimed tail data; complete only when `alpha`, `f_plus`, `f_minus` are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimFields {
    pub alpha: Option<f64>,
    pub ell: Option<String>,
    pub f_plus: Option<f64>,
    pub f_minus: Option<f64>,
}

impl ClaimFields {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_none() && self.ell.is_none() && self.f_plus.is_none() && self.f_minus.is_none()
    }

    pub fn to_claim(&self) -> Result<Option<TailClaim>> {
        if self.is_empty() {
            return Ok(None);
        }
        match (self.alpha, self.f_plus, self.f_minus) {
            (Some(alpha), Some(f_plus), Some(f_minus)) => {
                let ell = match &self.ell {
                    Some(s) => parse_slowvar(s)?,
                    None => parse_slowvar("one")?,
                };
                Ok(Some(TailClaim { alpha, ell, f_plus, f_minus }))
            }
            _ => Err(CliError::Input("a claim needs claim_alpha, claim_f_plus and claim_f_minus".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub observable: Option<String>,
    pub cutoff: Option<f64>,
    pub claim: ClaimFields,
    pub scheme: Scheme,
    pub dt: Option<f64>,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "kinetic(3)".into(),
            observable: None,
            cutoff: None,
            claim: ClaimFields::default(),
            scheme: Scheme::Direct,
            dt: None,
            epsilon: 1e-2,
            times: vec![1.0],
            n_paths: 1000,
            seed: 0,
            out_dir: PathBuf::from("."),
            format: OutputFormat::Csv,
        }
    }
}

pub fn parse_times(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_number(t).ok_or_else(|| CliError::Input(format!("bad time `{t}`"))))
        .collect()
}

fn num(key: &str, v: &str) -> Result<f64> {
    parse_number(v).ok_or_else(|| CliError::Input(format!("`{key}`: bad number `{v}`")))
}

impl ExperimentConfig {
    /// Sets one key; shared by the file parser and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model" => self.model = v.into(),
            "observable" | "f" => self.observable = Some(v.into()),
            "cutoff" => self.cutoff = Some(num(key, v)?),
            "claim_alpha" => self.claim.alpha = Some(num(key, v)?),
            "claim_ell" => self.claim.ell = Some(v.into()),
            "claim_f_plus" => self.claim.f_plus = Some(num(key, v)?),
            "claim_f_minus" => self.claim.f_minus = Some(num(key, v)?),
            "scheme" => {
                self.scheme = Scheme::from_tag(v).ok_or_else(|| CliError::Input(format!("unknown scheme `{v}`")))?
            }
            "dt" => self.dt = Some(num(key, v)?),
            "epsilon" => self.epsilon = num(key, v)?,
            "times" => self.times = parse_times(v)?,
            "n_paths" => {
                self.n_paths = v.parse().map_err(|_| CliError::Input(format!("`n_paths`: bad count `{v}`")))?
            }
            "seed" => self.seed = v.parse().map_err(|_| CliError::Input(format!("`seed`: bad seed `{v}`")))?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "format" => {
                self.format = match v {
                    "csv" => OutputFormat::Csv,
                    "binary" | "bin" => OutputFormat::Binary,
                    "both" => OutputFormat::Both,
                    _ => return Err(CliError::Input(format!("unknown format `{v}`"))),
                }
            }
            other => return Err(CliError::Input(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected key = value", k + 1)))?;
            cfg.set(key, value).map_err(|e| CliError::Input(format!("line {}: {e}", k + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::format(path, e.to_string()))
    }

    /// `dt`, or the largest step giving 1000 steps before the first horizon
    /// (capped at 0.01).
    pub fn effective_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| (self.times[0] / (1000.0 * self.epsilon)).min(0.01))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = ExperimentConfig::parse(
            "# kinetic run\nmodel = kinetic(3)\nobservable=id\nepsilon = 1e-3 # small\n\
             times = 1/2, 1\nn_paths = 20\nseed = 9\nscheme = timechange\nformat = both\n\
             claim_alpha = 4/3\nclaim_f_plus = 0.35\nclaim_f_minus = -0.35\n",
        )
        .unwrap();
        assert_eq!(cfg.times, vec![0.5, 1.0]);
        assert_eq!(cfg.scheme, Scheme::TimeChange);
        assert_eq!(cfg.format, OutputFormat::Both);
        assert_eq!(cfg.claim.to_claim().unwrap().unwrap().alpha, 4.0 / 3.0);
        assert_eq!(cfg.effective_dt(), 0.01);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ExperimentConfig::parse("nonsense").is_err());
        assert!(ExperimentConfig::parse("colour = blue").is_err());
        assert!(ExperimentConfig::parse("epsilon = x").is_err());
        let partial = ExperimentConfig::parse("claim_alpha = 1.5").unwrap();
        assert!(partial.claim.to_claim().is_err());
    }
}
