//! Monte Carlo for the rescaled additive functional.
//!
//! Two kernels produce the same law: Euler–Maruyama on `X` directly, and the
//! time-change representation in which a Brownian motion `W` run with the
//! clock `A_t = εa^{-2}∫ψ^{-2}(W_s/a)ds`, `a = ε/κ`, carries the functional
//! `H_t = a^{-2}∫φ(W_s/a)ds` evaluated at the inverse clock.
//!
//! Kernels work one path at a time; the runners here are sequential and the
//! std crate distributes the same kernels over threads.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{centering_exact, LimitLaw, Regime};
use crate::coeffs::Observable;
use crate::error::{Error, Result};
use crate::model::{DiffusionModel, FastScale};
use crate::rng::{purpose, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Direct,
    TimeChange,
    Excursion,
    Cms,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Direct => "direct",
            Scheme::TimeChange => "timechange",
            Scheme::Excursion => "excursion",
            Scheme::Cms => "cms",
        }
    }

    pub fn from_tag(s: &str) -> Option<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Some(Scheme::Direct),
            "timechange" | "time_change" => Some(Scheme::TimeChange),
            "excursion" => Some(Scheme::Excursion),
            "cms" => Some(Scheme::Cms),
            _ => None,
        }
    }
}

/// Settings of a rescaled-functional run. `dt` is the step in diffusion
/// time; the horizons are in rescaled time, i.e. the path runs to `t_n/ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub epsilon: f64,
    pub horizon_times: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

/// Largest fraction of paths allowed to explode before a run fails.
pub const MAX_EXPLODED_FRACTION: f64 = 1e-3;
/// Largest fraction of clipped time-change steps.
pub const MAX_CLIPPED_FRACTION: f64 = 1e-4;
/// Single-step clock contributions beyond this multiple of `dt` are clipped.
pub const CLIP_FACTOR: f64 = 1e6;
/// Paths leaving `[-R, R]` with `R` this multiple of the domain cutoff explode.
pub const EXPLOSION_FACTOR: f64 = 10.0;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.horizon_times.is_empty() {
            return bad("at least one horizon time is needed");
        }
        if !(self.horizon_times[0] > 0.0)
            || self.horizon_times.windows(2).any(|w| !(w[1] > w[0]))
            || !self.horizon_times.iter().all(|t| t.is_finite())
        {
            return bad("horizon times must be positive and strictly increasing");
        }
        if self.n_paths < 2 {
            return bad("n_paths must be at least 2");
        }
        // at least 100 steps per unit of rescaled time
        if self.dt > self.horizon_times[0] / (100.0 * self.epsilon) {
            return bad("dt too large: need at least 100 steps up to the first horizon");
        }
        if !matches!(self.scheme, Scheme::Direct | Scheme::TimeChange) {
            return bad("simulation scheme must be direct or timechange");
        }
        Ok(())
    }

    /// Number of steps to the last horizon.
    pub fn steps(&self) -> u64 {
        (self.horizon_times[self.horizon_times.len() - 1] / (self.epsilon * self.dt)).ceil() as u64
    }
}

/// Affine map applied to the raw integral `∫_0^{t/ε} f(X_s)ds`:
/// `scale · integral − centering_rate · t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub scale: f64,
    pub centering_rate: f64,
}

impl Rescaling {
    /// Normalisation of the regime at `ε`, with exact centering at `α = 1`.
    pub fn for_law(
        law: &LimitLaw,
        model: &DiffusionModel,
        f: &dyn Observable,
        eps: f64,
    ) -> Result<Rescaling> {
        let scale = law.normalization(eps)?;
        let centering_rate = if law.regime == Regime::CriticalLevy {
            centering_exact(model, f, law, eps)?
        } else {
            0.0
        };
        Ok(Rescaling { scale, centering_rate })
    }

    pub fn identity() -> Rescaling {
        Rescaling { scale: 1.0, centering_rate: 0.0 }
    }

    #[inline]
    pub fn apply(&self, raw: f64, t: f64) -> f64 {
        self.scale * raw - self.centering_rate * t
    }
}

/// Samples of the rescaled functional: one row per path, one column per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub scheme: Scheme,
    pub seed: u64,
    pub dt: f64,
    pub epsilon: f64,
    pub rescaling: Rescaling,
    pub law: Option<LimitLaw>,
    /// Paths dropped after leaving the explosion radius.
    pub exploded: usize,
    /// Clipped time-change steps, summed over paths.
    pub clipped: u64,
    /// Free-form provenance (model, observable, ...).
    pub label: String,
}

impl FunctionalSample {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    /// Column `j` (all paths at `times[j]`).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// Index of the time closest to `t`.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|p| p.0)
    }
}

/// Output of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValues {
    pub values: Vec<f64>,
    pub clipped: u64,
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// A discretised path `(t_k, X_{t_k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub dt: f64,
    pub x: Vec<f64>,
}

impl Path {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Euler–Maruyama from `X_0 = 0` up to `t_end`, path index 0.
pub fn simulate_path(model: &DiffusionModel, t_end: f64, dt: f64, seed: u64) -> Result<Path> {
    simulate_path_indexed(model, t_end, dt, seed, 0)
}

pub fn simulate_path_indexed(
    model: &DiffusionModel,
    t_end: f64,
    dt: f64,
    seed: u64,
    index: u64,
) -> Result<Path> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidConfig("need dt > 0 and t_end >= 0".to_string()));
    }
    let n = (t_end / dt).round() as u64;
    let mut rng = stream(seed, purpose::PATH, index);
    let guard = EXPLOSION_FACTOR * model.domain_cutoff;
    let sq = dt.sqrt();
    let mut x = 0.0;
    let mut xs = Vec::with_capacity(n as usize + 1);
    xs.push(x);
    for step in 0..n {
        x += model.drift(x) * dt + model.diffusion(x) * sq * normal(&mut rng);
        if !(x.abs() <= guard) {
            return Err(Error::PathExploded { step: step + 1, x });
        }
        xs.push(x);
    }
    Ok(Path { dt, x: xs })
}

/// Running left-endpoint sums `∫_0^{t_k} f(X_s)ds`, one per path point.
pub fn additive_functional(path: &Path, f: &dyn Observable) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for &x in &path.x[..path.x.len().saturating_sub(1)] {
        acc += f.eval(x) * path.dt;
        out.push(acc);
    }
    out
}

/// Direct scheme for one path: Euler on `X`, left-endpoint accumulation of
/// `f(X)dt`, read off at `t_i/ε` (partial last step included).
pub fn direct_path(
    model: &DiffusionModel,
    f: &dyn Observable,
    cfg: &SimConfig,
    resc: &Rescaling,
    index: u64,
) -> Result<PathValues> {
    let mut rng = stream(cfg.seed, purpose::DIRECT, index);
    let dt = cfg.dt;
    let sq = dt.sqrt();
    let guard = EXPLOSION_FACTOR * model.domain_cutoff;
    let mut values = Vec::with_capacity(cfg.horizon_times.len());
    let (mut x, mut acc, mut clock) = (0.0f64, 0.0f64, 0.0f64);
    let mut step = 0u64;
    for &t in &cfg.horizon_times {
        let target = t / cfg.epsilon;
        loop {
            let fx = f.eval(x);
            if clock + dt > target {
                values.push(resc.apply(acc + fx * (target - clock), t));
                break;
            }
            acc += fx * dt;
            x += model.drift(x) * dt + model.diffusion(x) * sq * normal(&mut rng);
            step += 1;
            clock = step as f64 * dt;
            if !(x.abs() <= guard) {
                return Err(Error::PathExploded { step, x });
            }
        }
    }
    Ok(PathValues { values, clipped: 0 })
}

/// Time-change scheme for one path.
///
/// Steps of `W` are predictable: `h = dt·a²ψ²(W/a)`, so that every step adds
/// `ε·dt` to the clock `A` and `a^{-2}φ(W/a)h = f(X)dt` to `H`. The clock is
/// therefore strictly increasing and its inverse at `t_i` is located by
/// linear interpolation within the bracketing step. Steps where `ψ^{-2}`
/// exceeds the clip factor have their `W`-increment floored and are counted.
pub fn timechange_path(
    fast: &FastScale,
    kappa: f64,
    f: &dyn Observable,
    cfg: &SimConfig,
    resc: &Rescaling,
    index: u64,
) -> Result<PathValues> {
    let mut rng = stream(cfg.seed, purpose::TIME_CHANGE, index);
    let eps = cfg.epsilon;
    let a = eps / kappa;
    let dt = cfg.dt;
    let mut values = Vec::with_capacity(cfg.horizon_times.len());
    let (mut w, mut clock_a, mut h_acc) = (0.0f64, 0.0f64, 0.0f64);
    let mut hint = 0usize;
    let mut step = 0u64;
    let mut clipped = 0u64;
    for &t in &cfg.horizon_times {
        loop {
            let (_, psi, phi) = fast
                .psi_phi(f, w / a, &mut hint)
                .ok_or(Error::PathExploded { step, x: w / a })?;
            // the clock gains εa^{-2}ψ^{-2}h = ε·dt per step
            let psi_sq = if psi * psi * CLIP_FACTOR < 1.0 {
                clipped += 1;
                1.0 / CLIP_FACTOR
            } else {
                psi * psi
            };
            let h = dt * a * a * psi_sq;
            let da = eps * dt;
            let dh = phi / (a * a) * h;
            if clock_a + da >= t {
                let frac = (t - clock_a) / da;
                values.push(resc.apply(h_acc + frac * dh, t));
                break;
            }
            clock_a += da;
            h_acc += dh;
            w += h.sqrt() * normal(&mut rng);
            step += 1;
        }
    }
    Ok(PathValues { values, clipped })
}

/// Gather per-path results (in path order) into a sample, enforcing the
/// explosion and clipping budgets.
pub fn assemble(
    cfg: &SimConfig,
    resc: Rescaling,
    law: Option<LimitLaw>,
    label: String,
    results: Vec<Result<PathValues>>,
) -> Result<FunctionalSample> {
    let total = results.len();
    let mut values = Vec::with_capacity(total);
    let mut exploded = 0usize;
    let mut clipped = 0u64;
    for r in results {
        match r {
            Ok(p) => {
                clipped += p.clipped;
                values.push(p.values);
            }
            Err(Error::PathExploded { .. }) => exploded += 1,
            Err(e) => return Err(e),
        }
    }
    if exploded as f64 > MAX_EXPLODED_FRACTION * total as f64 {
        return Err(Error::TooManyExplosions { exploded, total });
    }
    let steps = cfg.steps().saturating_mul(total as u64);
    if clipped as f64 > MAX_CLIPPED_FRACTION * steps as f64 {
        return Err(Error::TooManyClips { clips: clipped, steps });
    }
    Ok(FunctionalSample {
        times: cfg.horizon_times.clone(),
        values,
        scheme: cfg.scheme,
        seed: cfg.seed,
        dt: cfg.dt,
        epsilon: cfg.epsilon,
        rescaling: resc,
        law,
        exploded,
        clipped,
        label,
    })
}

/// Everything a worker needs to run one path of either scheme.
pub struct PathJob<'a> {
    pub model: &'a DiffusionModel,
    pub fast: Option<FastScale>,
    pub kappa: f64,
    pub f: &'a dyn Observable,
    pub cfg: &'a SimConfig,
    pub rescaling: Rescaling,
}

impl<'a> PathJob<'a> {
    pub fn new(
        model: &'a DiffusionModel,
        f: &'a dyn Observable,
        cfg: &'a SimConfig,
        rescaling: Rescaling,
    ) -> Result<Self> {
        cfg.validate()?;
        let (fast, kappa) = match cfg.scheme {
            Scheme::TimeChange => (Some(model.fast_scale()), model.kappa()?),
            _ => (None, 0.0),
        };
        Ok(PathJob { model, fast, kappa, f, cfg, rescaling })
    }

    pub fn run(&self, index: u64) -> Result<PathValues> {
        match &self.fast {
            Some(fast) => timechange_path(fast, self.kappa, self.f, self.cfg, &self.rescaling, index),
            None => direct_path(self.model, self.f, self.cfg, &self.rescaling, index),
        }
    }
}

/// Sequential run with an explicit rescaling.
pub fn run_sequential(
    model: &DiffusionModel,
    f: &dyn Observable,
    cfg: &SimConfig,
    rescaling: Rescaling,
    law: Option<LimitLaw>,
) -> Result<FunctionalSample> {
    let job = PathJob::new(model, f, cfg, rescaling)?;
    let results = (0..cfg.n_paths as u64).map(|i| job.run(i)).collect();
    assemble(cfg, rescaling, law, String::new(), results)
}

/// Rescaled (and at `α = 1` centred) functional under the law's normalisation.
pub fn rescaled_functional(
    model: &DiffusionModel,
    f: &dyn Observable,
    law: &LimitLaw,
    cfg: &SimConfig,
) -> Result<FunctionalSample> {
    let resc = Rescaling::for_law(law, model, f, cfg.epsilon)?;
    run_sequential(model, f, cfg, resc, Some(law.clone()))
}

/// Same as [`rescaled_functional`] through the time-change kernel.
pub fn simulate_timechange(
    model: &DiffusionModel,
    f: &dyn Observable,
    law: &LimitLaw,
    cfg: &SimConfig,
) -> Result<FunctionalSample> {
    let mut cfg = cfg.clone();
    cfg.scheme = Scheme::TimeChange;
    rescaled_functional(model, f, law, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ModelPreset, ObservablePreset};

    fn ou() -> DiffusionModel {
        let p = ModelPreset::HeavyTailed { theta: 1.0 };
        DiffusionModel::new(p, p.default_cutoff()).unwrap()
    }

    fn cfg(scheme: Scheme) -> SimConfig {
        SimConfig {
            dt: 0.01,
            epsilon: 0.01,
            horizon_times: alloc::vec![0.5, 1.0],
            n_paths: 20,
            seed: 11,
            scheme,
        }
    }

    #[test]
    fn config_checks() {
        assert!(cfg(Scheme::Direct).validate().is_ok());
        let mut c = cfg(Scheme::Direct);
        c.dt = 1.0;
        assert!(c.validate().is_err());
        c = cfg(Scheme::Direct);
        c.n_paths = 1;
        assert!(c.validate().is_err());
        c = cfg(Scheme::Cms);
        assert!(c.validate().is_err());
        c = cfg(Scheme::Direct);
        c.horizon_times = alloc::vec![1.0, 0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_observable_gives_elapsed_time() {
        let m = ou();
        let one = ObservablePreset::Constant { value: 1.0 };
        for scheme in [Scheme::Direct, Scheme::TimeChange] {
            let c = cfg(scheme);
            // scale ε turns ∫_0^{t/ε} 1 ds into t
            let resc = Rescaling { scale: c.epsilon, centering_rate: 0.0 };
            let s = run_sequential(&m, &one, &c, resc, None).unwrap();
            for row in &s.values {
                assert!((row[0] - 0.5).abs() < 1e-9 && (row[1] - 1.0).abs() < 1e-9, "{row:?}");
            }
        }
    }

    #[test]
    fn zero_observable_gives_zero() {
        let m = ou();
        let zero = ObservablePreset::Constant { value: 0.0 };
        let s = run_sequential(&m, &zero, &cfg(Scheme::Direct), Rescaling::identity(), None).unwrap();
        assert!(s.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn additive_functional_of_one_is_time() {
        let m = ou();
        let p = simulate_path(&m, 1.0, 0.01, 3).unwrap();
        let a = additive_functional(&p, &ObservablePreset::Constant { value: 1.0 });
        assert_eq!(a.len(), 101);
        assert!((a[100] - 1.0).abs() < 1e-12);
        assert_eq!(p.x[0], 0.0);
    }

    #[test]
    fn runs_are_reproducible() {
        let m = ou();
        let f = ObservablePreset::id();
        let a = run_sequential(&m, &f, &cfg(Scheme::TimeChange), Rescaling::identity(), None).unwrap();
        let b = run_sequential(&m, &f, &cfg(Scheme::TimeChange), Rescaling::identity(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn explosion_is_reported() {
        let wild = crate::coeffs::FnCoefficients { drift: |x: f64| -x, diffusion: |_x: f64| 1.0 };
        let m = DiffusionModel::new(wild, 0.05).unwrap();
        let r = simulate_path(&m, 10.0, 0.01, 1);
        assert!(matches!(r, Err(Error::PathExploded { .. })));
    }
}
