//! Orchestration shared by the CLI and the tests: building a model and
//! observable from names, analysis, parallel simulation, reference stable
//! samples and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stablediff_core::asymptotics::{classify_regime, limit_law, LimitLaw, RegimeReport, TailClaim};
use stablediff_core::pathsim::{assemble, FunctionalSample, PathJob, Rescaling, Scheme, SimConfig};
use stablediff_core::presets::{known_claim, parse_model, parse_observable, ObservableChoice};
use stablediff_core::stable::{excursion_path, params_of_law, ExcursionConfig, StableParams, StableSpec};
use stablediff_core::validate::{validate_against_law, ValidationConfig, ValidationReport};
use stablediff_core::{DiffusionModel, ModelPreset, ObservablePreset};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io;
use crate::parallel::map_indexed;
use stablediff_core::rng::{purpose, stream};

pub struct Setup {
    pub model: DiffusionModel,
    pub preset: Option<ModelPreset>,
    pub observable: ObservablePreset,
    pub model_name: String,
    pub observable_name: String,
}

impl Setup {
    /// Builds the model and resolves the observable (`centered_id` and
    /// tables need the model or the file system).
    pub fn build(model: &str, observable: Option<&str>, cutoff: Option<f64>) -> Result<Setup> {
        let (built, preset, default_obs) = if let Some(path) = model.trim().strip_prefix("table:") {
            let table = io::read_coefficient_table(Path::new(path))?;
            let xs: Vec<f64> = stablediff_core::Coefficients::breakpoints(&table);
            let span = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let m = DiffusionModel::new(table, cutoff.unwrap_or(span.max(1.0)))?;
            (m, None, ObservableChoice::CenteredId)
        } else {
            let choice = parse_model(model)?;
            let cut = cutoff.unwrap_or_else(|| choice.model.default_cutoff());
            (DiffusionModel::new(choice.model, cut)?, Some(choice.model), choice.default_observable)
        };
        let obs_choice = match observable {
            Some(s) => parse_observable(s)?,
            None => default_obs,
        };
        let observable = match obs_choice {
            ObservableChoice::Preset { preset } => preset,
            ObservableChoice::CenteredId => {
                let mu = built.invariant_integral(&ObservablePreset::id())?;
                ObservablePreset::Shifted { shift: mu.value }
            }
            ObservableChoice::Table { path } => {
                ObservablePreset::Table { rows: io::read_observable_table(Path::new(&path))? }
            }
        };
        let model_name = preset.map(|p| p.name()).unwrap_or_else(|| model.trim().to_string());
        let observable_name = observable.name();
        Ok(Setup { model: built, preset, observable, model_name, observable_name })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Setup> {
        Setup::build(&cfg.model, cfg.observable.as_deref(), cfg.cutoff)
    }

    /// The explicit claim, else the closed form known for the preset pair.
    pub fn claim(&self, explicit: Option<TailClaim>) -> Option<TailClaim> {
        explicit.or_else(|| self.preset.and_then(|p| known_claim(&p, &self.observable)))
    }
}

/// Content of `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub schema: u32,
    pub model: String,
    pub observable: String,
    pub kappa: f64,
    pub report: RegimeReport,
    pub law: LimitLaw,
    /// Normalisation and centering rate at `epsilon`, when requested.
    pub epsilon: Option<f64>,
    pub rescaling: Option<Rescaling>,
}

pub fn analyze(setup: &Setup, claim: Option<TailClaim>, epsilon: Option<f64>) -> Result<Analysis> {
    let claim = setup.claim(claim);
    let report = classify_regime(&setup.model, &setup.observable, claim.as_ref())?;
    let law = limit_law(&report, &setup.model, &setup.observable)?;
    let rescaling = match epsilon {
        Some(eps) => Some(Rescaling::for_law(&law, &setup.model, &setup.observable, eps)?),
        None => None,
    };
    Ok(Analysis {
        schema: io::SCHEMA,
        model: setup.model_name.clone(),
        observable: setup.observable_name.clone(),
        kappa: setup.model.kappa()?,
        report,
        law,
        epsilon,
        rescaling,
    })
}

pub fn sim_config(cfg: &ExperimentConfig) -> SimConfig {
    SimConfig {
        dt: cfg.effective_dt(),
        epsilon: cfg.epsilon,
        horizon_times: cfg.times.clone(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        scheme: cfg.scheme,
    }
}

/// Rescaled functional of `setup` under `law`, paths run on `threads` workers.
pub fn simulate(setup: &Setup, law: &LimitLaw, sim: &SimConfig, threads: usize) -> Result<FunctionalSample> {
    let resc = Rescaling::for_law(law, &setup.model, &setup.observable, sim.epsilon)?;
    simulate_with(setup, Some(law.clone()), resc, sim, threads)
}

pub fn simulate_with(
    setup: &Setup,
    law: Option<LimitLaw>,
    resc: Rescaling,
    sim: &SimConfig,
    threads: usize,
) -> Result<FunctionalSample> {
    let job = PathJob::new(&setup.model, &setup.observable, sim, resc)?;
    let results = map_indexed(sim.n_paths as u64, threads, |i| job.run(i));
    let label = format!("{} | {}", setup.model_name, setup.observable_name);
    Ok(assemble(sim, resc, law, label, results)?)
}

/// Named stable presets of the `stable` command.
pub fn stable_preset(name: &str) -> Option<StableSpec> {
    let (alpha, a, b) = match name {
        "half" => (0.5, 1.0, 0.0),
        "three_halves" => (1.5, 1.0, -1.0),
        "cauchy" => (1.0, 1.0, 1.0),
        _ => return None,
    };
    StableSpec::new(alpha, a, b).ok()
}

pub const STABLE_PRESETS: [&str; 3] = ["half", "three_halves", "cauchy"];

/// Paths of a stable process at `times`: exact CMS increments, or the
/// Brownian excursion construction with minimal step `dt`.
pub fn stable_samples(
    spec: &StableSpec,
    scheme: Scheme,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    dt: f64,
    threads: usize,
) -> Result<FunctionalSample> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Input("times must be positive and strictly increasing".into()));
    }
    let law = spec.law()?;
    let values: Vec<Vec<f64>> = match scheme {
        Scheme::Cms => {
            let p = spec.params()?;
            map_indexed(n_paths as u64, threads, |i| cms_path(&p, times, seed, i))
        }
        Scheme::Excursion => {
            let cfg = ExcursionConfig::new(dt);
            map_indexed(n_paths as u64, threads, |i| excursion_path(spec, times, &cfg, seed, i))
                .into_iter()
                .collect::<stablediff_core::Result<_>>()?
        }
        _ => return Err(CliError::Input("stable samples use the cms or excursion scheme".into())),
    };
    Ok(FunctionalSample {
        times: times.to_vec(),
        values,
        scheme,
        seed,
        dt: if scheme == Scheme::Excursion { dt } else { 0.0 },
        epsilon: 0.0,
        rescaling: Rescaling::identity(),
        law: Some(law),
        exploded: 0,
        clipped: 0,
        label: format!("stable({},{},{})", spec.alpha, spec.a, spec.b),
    })
}

/// CMS paths of a limit law (the reference for simulated functionals).
pub fn law_samples(law: &LimitLaw, times: &[f64], n_paths: usize, seed: u64, threads: usize) -> Result<FunctionalSample> {
    let p = params_of_law(law)?;
    let values = map_indexed(n_paths as u64, threads, |i| cms_path(&p, times, seed, i));
    Ok(FunctionalSample {
        times: times.to_vec(),
        values,
        scheme: Scheme::Cms,
        seed,
        dt: 0.0,
        epsilon: 0.0,
        rescaling: Rescaling::identity(),
        law: Some(law.clone()),
        exploded: 0,
        clipped: 0,
        label: format!("{} limit", law.regime),
    })
}

/// Sums of independent CMS increments over the gaps between `times`.
pub fn cms_path(p: &StableParams, times: &[f64], seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream(seed, purpose::CMS, index);
    let mut prev = 0.0;
    let mut x = 0.0;
    times
        .iter()
        .map(|&t| {
            x += p.draw(t - prev, &mut rng);
            prev = t;
            x
        })
        .collect()
}

/// Validate the column at `t` against `law`, with an optional KS reference.
pub fn validate_sample(
    sample: &FunctionalSample,
    law: &LimitLaw,
    t: f64,
    reference: Option<&FunctionalSample>,
    cfg: &ValidationConfig,
) -> Result<ValidationReport> {
    let col = column_at(sample, t)?;
    let ref_col = match reference {
        Some(r) => Some(column_at(r, t)?),
        None => None,
    };
    let label = reference.map(|r| r.scheme.tag()).unwrap_or("");
    Ok(validate_against_law(&col, law, t, ref_col.as_deref().map(|c| (label, c)), cfg)?)
}

fn column_at(s: &FunctionalSample, t: f64) -> Result<Vec<f64>> {
    let j = s
        .times
        .iter()
        .position(|&u| (u - t).abs() <= 1e-12 * t.abs().max(1.0))
        .ok_or_else(|| CliError::Input(format!("sample has no column at t = {t}")))?;
    Ok(s.column(j))
}
