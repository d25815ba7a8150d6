//! Named presets: `heavy_tailed(theta)`, `kinetic(beta[,c_plus,c_minus])`,
//! `driftless(beta,gamma)` and the observable names understood by the CLI.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::asymptotics::TailClaim;
use crate::coeffs::{ModelPreset, ObservablePreset};
use crate::error::{Error, Result};
use crate::slowvar::SlowVar;

/// Splits `name(a,b,...)` into the name and its numeric arguments.
pub fn parse_call(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(Error::InvalidConfig(alloc::format!("malformed preset `{s}`")));
    }
    let name = s[..open].trim().to_string();
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    for a in inner.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        let v = parse_number(a)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("bad number `{a}` in `{s}`")))?;
        args.push(v);
    }
    Ok((name, args))
}

/// Parses a float, also accepting a simple ratio such as `5/2`.
pub fn parse_number(a: &str) -> Option<f64> {
    if let Some((n, d)) = a.split_once('/') {
        let n: f64 = n.trim().parse().ok()?;
        let d: f64 = d.trim().parse().ok()?;
        return Some(n / d);
    }
    a.parse().ok()
}

/// A model preset together with the observable that the family is usually
/// paired with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelChoice {
    pub model: ModelPreset,
    pub default_observable: ObservableChoice,
}

/// An observable as named on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableChoice {
    Preset { preset: ObservablePreset },
    /// `x - μ(id)`, resolved once the model is built.
    CenteredId,
    /// Piecewise-linear table read from a file by the caller.
    Table { path: String },
}

pub fn parse_model(s: &str) -> Result<ModelChoice> {
    let (name, a) = parse_call(s)?;
    let bad = || Error::InvalidConfig(alloc::format!("wrong arguments for `{s}`"));
    let id = ObservableChoice::Preset { preset: ObservablePreset::id() };
    match name.as_str() {
        "heavy_tailed" => {
            let theta = *a.first().unwrap_or(&1.0);
            if a.len() > 1 || !(theta >= 0.0) {
                return Err(bad());
            }
            Ok(ModelChoice { model: ModelPreset::HeavyTailed { theta }, default_observable: id })
        }
        "kinetic" => {
            let (beta, cp, cm) = match a.as_slice() {
                [b] => (*b, 1.0, 1.0),
                [b, p, m] => (*b, *p, *m),
                _ => return Err(bad()),
            };
            if !(beta > 1.0 && cp > 0.0 && cm > 0.0) {
                return Err(Error::InvalidConfig(
                    "kinetic preset needs beta > 1 and positive c_plus, c_minus".to_string(),
                ));
            }
            Ok(ModelChoice {
                model: ModelPreset::Kinetic { beta, c_plus: cp, c_minus: cm },
                default_observable: if cp == cm { id } else { ObservableChoice::CenteredId },
            })
        }
        "driftless" => {
            let (beta, gamma) = match a.as_slice() {
                [b] => (*b, 1.0),
                [b, g] => (*b, *g),
                _ => return Err(bad()),
            };
            if !(beta > 1.0) {
                return Err(Error::InvalidConfig("driftless preset needs beta > 1".to_string()));
            }
            Ok(ModelChoice {
                model: ModelPreset::Driftless { beta },
                default_observable: ObservableChoice::Preset {
                    preset: ObservablePreset::Saturating { gamma },
                },
            })
        }
        _ => Err(Error::InvalidConfig(alloc::format!("unknown model preset `{name}`"))),
    }
}

pub fn parse_observable(s: &str) -> Result<ObservableChoice> {
    let s = s.trim();
    if let Some(path) = s.strip_prefix("table:") {
        return Ok(ObservableChoice::Table { path: path.to_string() });
    }
    let (name, a) = parse_call(s)?;
    let bad = || Error::InvalidConfig(alloc::format!("wrong arguments for `{s}`"));
    let p = match (name.as_str(), a.as_slice()) {
        ("id", []) => ObservablePreset::id(),
        ("centered_id", []) => return Ok(ObservableChoice::CenteredId),
        ("shifted", [c]) => ObservablePreset::Shifted { shift: *c },
        ("power", [p]) => ObservablePreset::Power { p: *p },
        ("abs_power", [p]) => ObservablePreset::AbsPower { p: *p },
        ("saturating", [g]) => ObservablePreset::Saturating { gamma: *g },
        ("heavy_tail", [t, al, fp, fm]) => {
            ObservablePreset::HeavyTail { theta: *t, alpha: *al, f_plus: *fp, f_minus: *fm }
        }
        ("const", [c]) => ObservablePreset::Constant { value: *c },
        ("id" | "centered_id" | "shifted" | "power" | "abs_power" | "saturating" | "heavy_tail" | "const", _) => {
            return Err(bad())
        }
        _ => return Err(Error::InvalidConfig(alloc::format!("unknown observable `{name}`"))),
    };
    Ok(ObservableChoice::Preset { preset: p })
}

pub fn parse_slowvar(s: &str) -> Result<SlowVar> {
    let (name, a) = parse_call(s)?;
    match (name.as_str(), a.as_slice()) {
        ("one", []) | ("1", []) => Ok(SlowVar::One),
        ("logpow", [k]) => Ok(SlowVar::LogPower { k: *k }),
        _ => Err(Error::InvalidConfig(alloc::format!("unknown slowly varying function `{s}`"))),
    }
}

/// Tail parameters known in closed form for a preset and its matching
/// observable. `None` when the pair has no closed form.
pub fn known_claim(model: &ModelPreset, f: &ObservablePreset) -> Option<TailClaim> {
    match (*model, f) {
        (ModelPreset::Kinetic { beta, c_plus, c_minus }, ObservablePreset::Shifted { .. }) => {
            let alpha = (beta + 1.0) / 3.0;
            let k = (beta + 1.0).powf(1.0 / alpha - 2.0);
            // the scale function is normalised by 𝔰'(0) = 1, so the weights
            // enter relative to Θ(0)
            let theta0 = 0.5 * (c_plus + c_minus);
            Some(TailClaim {
                alpha,
                ell: SlowVar::One,
                f_plus: k * (c_plus / theta0).powf(beta / alpha),
                f_minus: -k * (c_minus / theta0).powf(beta / alpha),
            })
        }
        (ModelPreset::Driftless { beta }, ObservablePreset::Saturating { gamma }) => {
            Some(TailClaim {
                alpha: 1.0 / (gamma + 2.0 - beta),
                ell: SlowVar::One,
                f_plus: 1.0,
                f_minus: -1.0,
            })
        }
        (
            ModelPreset::HeavyTailed { theta },
            ObservablePreset::HeavyTail { theta: t2, alpha, f_plus, f_minus },
        ) if theta == *t2 => {
            Some(TailClaim { alpha: *alpha, ell: SlowVar::One, f_plus: *f_plus, f_minus: *f_minus })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_calls() {
        assert_eq!(parse_call("kinetic(3)").unwrap(), ("kinetic".to_string(), alloc::vec![3.0]));
        assert_eq!(parse_call(" id ").unwrap(), ("id".to_string(), alloc::vec![]));
        assert_eq!(parse_number("5/2"), Some(2.5));
        assert!(parse_call("kinetic(3").is_err());
    }

    #[test]
    fn model_presets() {
        let m = parse_model("driftless(5/2,1)").unwrap();
        assert_eq!(m.model, ModelPreset::Driftless { beta: 2.5 });
        assert!(parse_model("kinetic(0.5)").is_err());
        assert!(parse_model("nosuch(1)").is_err());
        let k = parse_model("kinetic(2,2,1)").unwrap();
        assert_eq!(k.default_observable, ObservableChoice::CenteredId);
    }

    #[test]
    fn kinetic_claim() {
        let c = known_claim(&ModelPreset::kinetic(3.0), &ObservablePreset::id()).unwrap();
        assert!((c.alpha - 4.0 / 3.0).abs() < 1e-15);
        assert!((c.f_plus - 4f64.powf(-1.25)).abs() < 1e-15);
        assert_eq!(c.f_minus, -c.f_plus);
    }

    #[test]
    fn observables() {
        assert_eq!(parse_observable("centered_id").unwrap(), ObservableChoice::CenteredId);
        assert_eq!(
            parse_observable("table:f.csv").unwrap(),
            ObservableChoice::Table { path: "f.csv".to_string() }
        );
        assert!(parse_observable("power()").is_err());
    }
}
