//! Empirical characteristic functions, stable-index estimation and
//! two-sample Kolmogorov–Smirnov tests.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::LimitLaw;
use crate::error::{Error, Result};
use crate::rng::{purpose, stream};

pub const MIN_ECF_SAMPLES: usize = 100;
pub const MIN_ALPHA_SAMPLES: usize = 500;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// `c(0.01)` of the asymptotic two-sample KS distribution.
pub const KS_C_001: f64 = 1.627_6;
pub const ECF_WINDOW: (f64, f64) = (0.2, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcfPoint {
    pub xi: f64,
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
}

impl EcfPoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Standard error of the complex estimate as a whole.
    pub fn se(&self) -> f64 {
        (self.se_re * self.se_re + self.se_im * self.se_im).sqrt()
    }
}

pub fn empirical_cf(samples: &[f64], xi_grid: &[f64]) -> Result<Vec<EcfPoint>> {
    let n = samples.len();
    if n < MIN_ECF_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_ECF_SAMPLES, got: n });
    }
    let nf = n as f64;
    Ok(xi_grid
        .iter()
        .map(|&xi| {
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &x in samples {
                let (s, c) = (xi * x).sin_cos();
                sc += c;
                ss += s;
                sc2 += c * c;
                ss2 += s * s;
            }
            let (re, im) = (sc / nf, ss / nf);
            let var_re = ((sc2 / nf - re * re) * nf / (nf - 1.0)).max(0.0);
            let var_im = ((ss2 / nf - im * im) * nf / (nf - 1.0)).max(0.0);
            EcfPoint { xi, re, im, se_re: (var_re / nf).sqrt(), se_im: (var_im / nf).sqrt() }
        })
        .collect())
}

/// 21 log-spaced points over `[0.05, 20] / scale`.
pub fn default_xi_grid(scale: f64) -> Vec<f64> {
    log_grid(0.05 / scale, 20.0 / scale, 21)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfDistance {
    /// `sup |ecf - target|` over the grid.
    pub sup_gap: f64,
    /// Points with `|ecf - target| > 3·SE + allowance`.
    pub outside: usize,
    pub points: usize,
}

pub fn cf_distance(ecf: &[EcfPoint], target: &[Complex64], allowance: f64) -> CfDistance {
    let mut sup_gap = 0.0f64;
    let mut outside = 0;
    for (p, t) in ecf.iter().zip(target) {
        let gap = (p.value() - t).norm();
        sup_gap = sup_gap.max(gap);
        if gap > 3.0 * p.se() + allowance {
            outside += 1;
        }
    }
    CfDistance { sup_gap, outside, points: ecf.len().min(target.len()) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub xi_window: (f64, f64),
    pub window_points: usize,
}

fn median_abs_dev(samples: &[f64]) -> f64 {
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let med = v[v.len() / 2];
    let mut d: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    d.sort_unstable_by(f64::total_cmp);
    d[d.len() / 2]
}

fn ecf_modulus(samples: &[f64], xi: f64) -> f64 {
    let (mut c, mut s) = (0.0, 0.0);
    for &x in samples {
        let (sn, cs) = (xi * x).sin_cos();
        c += cs;
        s += sn;
    }
    let n = samples.len() as f64;
    (c * c + s * s).sqrt() / n
}

/// Least-squares slope of `(x, y)`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

fn window_slope(samples: &[f64], xis: &[f64]) -> Option<f64> {
    let mut lx = Vec::with_capacity(xis.len());
    let mut ly = Vec::with_capacity(xis.len());
    for &xi in xis {
        let m = ecf_modulus(samples, xi);
        if m > 0.0 && m < 1.0 {
            lx.push(xi.ln());
            ly.push((-m.ln()).ln());
        }
    }
    (lx.len() >= 3).then(|| slope(&lx, &ly))
}

/// Slope of `log(-log|ECF|)` against `log ξ` over the first contiguous run
/// of grid points with `|ECF| ∈ [0.2, 0.9]`; bootstrap CI at 95%.
pub fn estimate_alpha(samples: &[f64], seed: u64) -> Result<AlphaEstimate> {
    let n = samples.len();
    if n < MIN_ALPHA_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_ALPHA_SAMPLES, got: n });
    }
    let scale = median_abs_dev(samples);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::WindowNotFound);
    }
    let grid = log_grid(1e-3 / scale, 1e3 / scale, 241);
    let mods: Vec<f64> = grid.iter().map(|&xi| ecf_modulus(samples, xi)).collect();
    let inside = |m: f64| m >= ECF_WINDOW.0 && m <= ECF_WINDOW.1;
    let start = mods.iter().position(|&m| inside(m)).ok_or(Error::WindowNotFound)?;
    let len = mods[start..].iter().take_while(|&&m| inside(m)).count();
    if len < 3 {
        return Err(Error::WindowNotFound);
    }
    let window = &grid[start..start + len];
    let alpha = window_slope(samples, window).ok_or(Error::WindowNotFound)?;

    let mut boots = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = alloc::vec![0.0; n];
    for b in 0..BOOTSTRAP_RESAMPLES as u64 {
        let mut rng = stream(seed, purpose::BOOTSTRAP, b);
        for r in resample.iter_mut() {
            *r = samples[rng.random_range(0..n)];
        }
        if let Some(s) = window_slope(&resample, window) {
            boots.push(s);
        }
    }
    boots.sort_unstable_by(f64::total_cmp);
    let m = boots.len().max(1) as f64;
    let mean = boots.iter().sum::<f64>() / m;
    let se = (boots.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (m - 1.0).max(1.0)).sqrt();
    let q = |p: f64| {
        if boots.is_empty() {
            alpha
        } else {
            boots[((p * (boots.len() - 1) as f64).round() as usize).min(boots.len() - 1)]
        }
    };
    Ok(AlphaEstimate {
        alpha,
        se,
        ci_low: q(0.025),
        ci_high: q(0.975),
        xi_window: (window[0], window[len - 1]),
        window_points: len,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Two-sample KS statistic with the asymptotic 1% critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for s in [a, b] {
        if s.len() < MIN_ECF_SAMPLES {
            return Err(Error::TooFewSamples { need: MIN_ECF_SAMPLES, got: s.len() });
        }
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    y.sort_unstable_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = if x[i].total_cmp(&y[j]).is_le() { x[i] } else { y[j] };
        while i < n && x[i] == v {
            i += 1;
        }
        while j < m && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical = KS_C_001 * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsResult { statistic: d, critical, reject: d > critical })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub label: String,
    pub statistic: f64,
    pub critical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub time: f64,
    pub xi_grid: Vec<f64>,
    pub ecf: Vec<EcfPoint>,
    /// Target CF as `(re, im)` pairs.
    pub target_cf: Vec<(f64, f64)>,
    pub sup_gap: f64,
    pub outside: usize,
    pub allowance: f64,
    pub alpha_hat: Option<AlphaEstimate>,
    pub ks_stats: Vec<KsEntry>,
    pub verdicts: Vec<Verdict>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Tolerances of [`validate_against_law`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub allowance: f64,
    /// Grid points allowed outside the band.
    pub max_outside: usize,
    /// `|α̂ - α|` allowed; `None` skips the estimate.
    pub alpha_tol: Option<f64>,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { allowance: 0.02, max_outside: 2, alpha_tol: Some(0.15), seed: 0 }
    }
}

/// Compare rescaled samples at time `t` with the law's characteristic
/// function; `reference` adds a KS comparison against a second sample.
pub fn validate_against_law(
    samples: &[f64],
    law: &LimitLaw,
    t: f64,
    reference: Option<(&str, &[f64])>,
    cfg: &ValidationConfig,
) -> Result<ValidationReport> {
    let xi_grid = default_xi_grid(law.reference_scale() * t.powf(1.0 / law.alpha.min(2.0)));
    let ecf = empirical_cf(samples, &xi_grid)?;
    let target: Vec<Complex64> = xi_grid.iter().map(|&xi| law.char_exponent(xi, t)).collect();
    let dist = cf_distance(&ecf, &target, cfg.allowance);
    let mut verdicts = alloc::vec![Verdict {
        name: "cf_band".into(),
        pass: dist.outside <= cfg.max_outside,
    }];
    let mut alpha_hat = None;
    if let Some(tol) = cfg.alpha_tol {
        let est = estimate_alpha(samples, cfg.seed);
        let target_alpha = law.alpha.min(2.0);
        verdicts.push(Verdict {
            name: "alpha_hat".into(),
            pass: est.as_ref().map(|e| (e.alpha - target_alpha).abs() <= tol).unwrap_or(false),
        });
        alpha_hat = est.ok();
    }
    let mut ks_stats = Vec::new();
    if let Some((label, other)) = reference {
        let ks = ks_two_sample(samples, other)?;
        verdicts.push(Verdict { name: alloc::format!("ks:{label}"), pass: !ks.reject });
        ks_stats.push(KsEntry { label: label.into(), statistic: ks.statistic, critical: ks.critical });
    }
    Ok(ValidationReport {
        time: t,
        xi_grid,
        ecf,
        target_cf: target.iter().map(|z| (z.re, z.im)).collect(),
        sup_gap: dist.sup_gap,
        outside: dist.outside,
        allowance: cfg.allowance,
        alpha_hat,
        ks_stats,
        verdicts,
    })
}
