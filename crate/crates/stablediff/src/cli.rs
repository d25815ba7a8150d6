//! `stablediff analyze | simulate | validate | stable | presets`
//!
//! Every command prints one JSON document on standard output. Failures print
//! `{"schema":1,"error":…,"message":…,"exit_code":…}` on standard error and
//! exit with 2 (bad input) or 3 (computation failed); a validation whose
//! verdicts do not all pass exits with 1.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use stablediff_core::pathsim::{FunctionalSample, Scheme};
use stablediff_core::stable::StableSpec;
use stablediff_core::validate::ValidationConfig;

use crate::config::{parse_times, ExperimentConfig, OutputFormat};
use crate::error::{CliError, Result};
use crate::experiment::{self, Analysis, Setup, STABLE_PRESETS};
use crate::io;
use crate::parallel::resolve_threads;

#[derive(Debug, Parser)]
#[command(name = "stablediff", version, about = "Stable limit laws of additive functionals of 1-d diffusions")]
pub struct Cli {
    /// Worker threads (default: all logical cores)
    #[arg(long, global = true, env = "STABLEDIFF_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the regime and compute the limit law; writes analysis.json
    Analyze(ModelArgs),
    /// Simulate the rescaled functional; writes sample_<scheme>.csv/.bin
    Simulate(SimulateArgs),
    /// Compare a sample with a limit law; writes validation.json and validation_cf.csv
    Validate(ValidateArgs),
    /// Reference stable samples by CMS or the excursion construction
    Stable(StableArgs),
    /// List the built-in presets
    Presets,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// key = value experiment file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model preset or table:<csv>
    #[arg(long)]
    pub model: Option<String>,
    /// Observable preset or table:<csv>
    #[arg(long, short = 'f')]
    pub observable: Option<String>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub claim_alpha: Option<String>,
    #[arg(long)]
    pub claim_ell: Option<String>,
    #[arg(long)]
    pub claim_f_plus: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub claim_f_minus: Option<String>,
    /// Also report the rescaling at this ε
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// direct or timechange
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    /// Comma-separated rescaled times
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args, Clone)]
pub struct ValidateArgs {
    /// Sample file (CSV or binary)
    #[arg(long)]
    pub samples: PathBuf,
    /// Second sample for a two-sample KS test
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// analysis.json holding the target law (default: the law stored in the sample)
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    /// Time column to test (default: the last)
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub allowance: f64,
    #[arg(long, default_value_t = 2)]
    pub max_outside: usize,
    #[arg(long, default_value_t = 0.15)]
    pub alpha_tol: f64,
    /// KS test against this many CMS draws of the target law
    #[arg(long, conflicts_with = "reference")]
    pub cms_reference: Option<usize>,
    /// Skip the index estimate
    #[arg(long)]
    pub no_alpha: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct StableArgs {
    /// half = (1/2,1,0), three_halves = (3/2,1,-1), cauchy = (1,1,1)
    #[arg(long, conflicts_with_all = ["alpha", "a", "b"])]
    pub preset: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// cms or excursion
    #[arg(long, default_value = "cms")]
    pub method: String,
    #[arg(long, default_value = "1")]
    pub times: String,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest Brownian step of the excursion construction
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn number(flag: &str, s: &str) -> Result<f64> {
    stablediff_core::presets::parse_number(s).ok_or_else(|| CliError::Input(format!("--{flag}: bad number `{s}`")))
}

impl ModelArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let mut set = |k: &str, v: &Option<String>| -> Result<()> {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
            Ok(())
        };
        set("model", &self.model)?;
        set("observable", &self.observable)?;
        set("claim_alpha", &self.claim_alpha)?;
        set("claim_ell", &self.claim_ell)?;
        set("claim_f_plus", &self.claim_f_plus)?;
        set("claim_f_minus", &self.claim_f_minus)?;
        set("epsilon", &self.epsilon)?;
        if let Some(c) = self.cutoff {
            cfg.cutoff = Some(c);
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        Ok(cfg)
    }
}

impl SimulateArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.model.config()?;
        if let Some(s) = &self.scheme {
            cfg.set("scheme", s)?;
        }
        if let Some(s) = &self.dt {
            cfg.set("dt", s)?;
        }
        if let Some(s) = &self.times {
            cfg.set("times", s)?;
        }
        if let Some(n) = self.paths {
            cfg.n_paths = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(cfg)
    }
}

/// Writes a sample in the configured format(s); returns the written paths.
pub fn write_sample(dir: &Path, s: &FunctionalSample, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let stem = format!("sample_{}", s.scheme.tag());
    let mut out = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let p = dir.join(format!("{stem}.csv"));
        io::write_sample_csv(&p, s)?;
        out.push(p);
    }
    if matches!(format, OutputFormat::Binary | OutputFormat::Both) {
        let p = dir.join(format!("{stem}.bin"));
        io::write_sample_bin(&p, s)?;
        out.push(p);
    }
    Ok(out)
}

fn cmd_analyze(args: &ModelArgs) -> Result<serde_json::Value> {
    let cfg = args.config()?;
    let setup = Setup::from_config(&cfg)?;
    let eps = args.epsilon.as_ref().map(|_| cfg.epsilon);
    let analysis = experiment::analyze(&setup, cfg.claim.to_claim()?, eps)?;
    let path = cfg.out_dir.join("analysis.json");
    io::write_json(&path, &analysis)?;
    Ok(serde_json::to_value(&analysis)?)
}

fn cmd_simulate(args: &SimulateArgs, threads: usize) -> Result<serde_json::Value> {
    let cfg = args.config()?;
    let setup = Setup::from_config(&cfg)?;
    let analysis = experiment::analyze(&setup, cfg.claim.to_claim()?, Some(cfg.epsilon))?;
    let sim = experiment::sim_config(&cfg);
    let sample = experiment::simulate(&setup, &analysis.law, &sim, threads)?;
    let files = write_sample(&cfg.out_dir, &sample, cfg.format)?;
    Ok(json!({
        "schema": io::SCHEMA,
        "scheme": sample.scheme.tag(),
        "n_paths": sample.n_paths(),
        "exploded": sample.exploded,
        "clipped": sample.clipped,
        "regime": analysis.law.regime,
        "rescaling": sample.rescaling,
        "files": files,
    }))
}

fn cmd_validate(args: &ValidateArgs, threads: usize) -> Result<(serde_json::Value, bool)> {
    let sample = io::read_sample(&args.samples)?;
    if sample.values.is_empty() {
        return Err(CliError::Input(format!("{}: sample has no paths", args.samples.display())));
    }
    let law = match &args.analysis {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let a: Analysis = serde_json::from_str(&text).map_err(|e| CliError::format(p, e.to_string()))?;
            a.law
        }
        None => sample
            .law
            .clone()
            .ok_or_else(|| CliError::Input("no --analysis given and the sample carries no law".into()))?,
    };
    let t = args.time.unwrap_or(*sample.times.last().unwrap());
    let reference = match (&args.reference, args.cms_reference) {
        (Some(p), _) => Some(io::read_sample(p)?),
        (None, Some(n)) => Some(experiment::law_samples(&law, &[t], n, args.seed, threads)?),
        (None, None) => None,
    };
    let vcfg = ValidationConfig {
        allowance: args.allowance,
        max_outside: args.max_outside,
        alpha_tol: (!args.no_alpha).then_some(args.alpha_tol),
        seed: args.seed,
    };
    let report = experiment::validate_sample(&sample, &law, t, reference.as_ref(), &vcfg)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    io::write_json(&dir.join("validation.json"), &json!({"schema": io::SCHEMA, "report": &report}))?;
    io::write_cf_csv(&dir.join("validation_cf.csv"), &report)?;
    let pass = report.passed();
    Ok((json!({"schema": io::SCHEMA, "pass": pass, "report": report}), pass))
}

fn stable_spec(args: &StableArgs) -> Result<StableSpec> {
    if let Some(name) = &args.preset {
        return experiment::stable_preset(name).ok_or_else(|| {
            CliError::Input(format!("unknown stable preset `{name}` (known: {})", STABLE_PRESETS.join(", ")))
        });
    }
    match (&args.alpha, &args.a, &args.b) {
        (Some(al), Some(a), Some(b)) => Ok(StableSpec::new(number("alpha", al)?, number("a", a)?, number("b", b)?)?),
        _ => Err(CliError::Input("give --preset or all of --alpha, --a, --b".into())),
    }
}

fn cmd_stable(args: &StableArgs, threads: usize) -> Result<serde_json::Value> {
    let spec = stable_spec(args)?;
    let scheme = match Scheme::from_tag(&args.method) {
        Some(s @ (Scheme::Cms | Scheme::Excursion)) => s,
        _ => return Err(CliError::Input(format!("unknown method `{}`", args.method))),
    };
    let times = parse_times(&args.times)?;
    let sample = experiment::stable_samples(&spec, scheme, &times, args.paths, args.seed, args.dt, threads)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let files = write_sample(&dir, &sample, args.format)?;
    let p = spec.params()?;
    Ok(json!({
        "schema": io::SCHEMA,
        "spec": spec,
        "c": p.c,
        "skew": p.skew,
        "tau": p.shift,
        "scheme": scheme.tag(),
        "n_paths": sample.n_paths(),
        "files": files,
    }))
}

#[derive(Serialize)]
struct PresetEntry {
    name: &'static str,
    kind: &'static str,
    description: &'static str,
}

fn cmd_presets() -> serde_json::Value {
    let list = [
        PresetEntry { name: "heavy_tailed(theta)", kind: "model", description: "drift -(θ+1)/2 sgn(x)|x|^θ, unit diffusion" },
        PresetEntry { name: "kinetic(beta[,c_plus,c_minus])", kind: "model", description: "invariant density ∝ Θ(x)^β (1+x²)^{-β/2}; α = (β+1)/3 with f = id" },
        PresetEntry { name: "driftless(beta[,gamma])", kind: "model", description: "σ(x) = (1+|x|)^{β/2}, no drift; default observable saturating(γ)" },
        PresetEntry { name: "table:<csv x,b,sigma>", kind: "model", description: "piecewise-linear coefficients" },
        PresetEntry { name: "id", kind: "observable", description: "f(x) = x" },
        PresetEntry { name: "centered_id", kind: "observable", description: "f(x) = x - μ(id)" },
        PresetEntry { name: "shifted(c)", kind: "observable", description: "f(x) = x - c" },
        PresetEntry { name: "power(p)", kind: "observable", description: "f(x) = sgn(x)|x|^p" },
        PresetEntry { name: "abs_power(p)", kind: "observable", description: "f(x) = |x|^p" },
        PresetEntry { name: "saturating(gamma)", kind: "observable", description: "f(x) = x/(1+|x|)^{1-γ}" },
        PresetEntry { name: "heavy_tail(theta,alpha,f_plus,f_minus)", kind: "observable", description: "tail matched to heavy_tailed(θ) with index α" },
        PresetEntry { name: "const(c)", kind: "observable", description: "f(x) = c" },
        PresetEntry { name: "table:<csv x,f>", kind: "observable", description: "piecewise-linear observable" },
        PresetEntry { name: "half", kind: "stable", description: "(α,a,b) = (1/2,1,0)" },
        PresetEntry { name: "three_halves", kind: "stable", description: "(α,a,b) = (3/2,1,-1)" },
        PresetEntry { name: "cauchy", kind: "stable", description: "(α,a,b) = (1,1,1)" },
    ];
    json!({"schema": io::SCHEMA, "presets": list})
}

/// Runs the parsed command; returns the JSON for standard output and the
/// exit code.
pub fn execute(cli: &Cli) -> Result<(serde_json::Value, i32)> {
    let threads = resolve_threads(cli.threads);
    Ok(match &cli.command {
        Command::Analyze(a) => (cmd_analyze(a)?, 0),
        Command::Simulate(a) => (cmd_simulate(a, threads)?, 0),
        Command::Validate(a) => {
            let (v, pass) = cmd_validate(a, threads)?;
            (v, if pass { 0 } else { 1 })
        }
        Command::Stable(a) => (cmd_stable(a, threads)?, 0),
        Command::Presets => (cmd_presets(), 0),
    })
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok((value, code)) => {
            use std::io::Write;
            // a closed pipe is not an error of the computation
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&value).unwrap_or_default());
            code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
