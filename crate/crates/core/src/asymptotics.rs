//! Regime classification and the constants of the limit law.
//!
//! The tail of the observable in natural scale, `|w|^{2-1/α} ℓ(|w|) φ(w) → f_±`,
//! decides the normalisation: Brownian for `α > 2` (or `α = 2` with `ρ < ∞`),
//! logarithmically corrected Brownian at `α = 2, ρ = ∞`, `α`-stable for
//! `α ∈ (0,2)`, and Cauchy-type with a centering drift at `α = 1`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::coeffs::Observable;
use crate::consts::{EULER_GAMMA, LN_2, PI, SINE_DRIFT_CONST};
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::quad::{gk15, integrate, integrate_to_infinity, local_decay, power_tail, Estimate};
use crate::slowvar::SlowVar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Diffusive,
    CriticalDiffusive,
    Levy,
    CriticalLevy,
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Regime::Diffusive => "Diffusive",
            Regime::CriticalDiffusive => "CriticalDiffusive",
            Regime::Levy => "Levy",
            Regime::CriticalLevy => "CriticalLevy",
        };
        f.write_str(s)
    }
}

/// User-supplied tail parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailClaim {
    pub alpha: f64,
    #[serde(default)]
    pub ell: SlowVar,
    pub f_plus: f64,
    pub f_minus: f64,
}

/// The tail ratio sampled at `±x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub x: f64,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub alpha: f64,
    pub ell: SlowVar,
    pub f_plus: f64,
    pub f_minus: f64,
    pub regime: Regime,
    pub f_in_l1mu: bool,
    /// Largest `|x|` first.
    pub tail_diagnostics: Vec<TailSample>,
    pub alpha_estimated: bool,
    pub warnings: Vec<String>,
}

const ALPHA_EPS: f64 = 1e-9;
/// Relative spread allowed among the outermost tail samples.
pub const TREND_TOL: f64 = 0.02;
const TREND_SAMPLES: usize = 5;

/// Regime implied by `α` and `ℓ`.
pub fn regime_for(alpha: f64, ell: &SlowVar) -> Result<Regime> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(if (alpha - 2.0).abs() <= ALPHA_EPS {
        match ell.rho()? {
            Some(_) => Regime::Diffusive,
            None => Regime::CriticalDiffusive,
        }
    } else if alpha > 2.0 {
        Regime::Diffusive
    } else if (alpha - 1.0).abs() <= ALPHA_EPS {
        Regime::CriticalLevy
    } else {
        Regime::Levy
    })
}

/// Whether `f ∈ L¹(μ)` given the tail parameters.
pub fn in_l1mu(alpha: f64, ell: &SlowVar) -> bool {
    if (alpha - 1.0).abs() <= ALPHA_EPS {
        ell.n_converges()
    } else {
        alpha > 1.0
    }
}

/// `[σ(x)𝔰'(x)]^{-2} |𝔰(x)|^{2-1/α} ℓ(|𝔰(x)|) f(x)`, in log form internally.
pub fn tail_ratio(
    model: &DiffusionModel,
    f: &dyn Observable,
    alpha: f64,
    ell: &SlowVar,
    x: f64,
) -> Result<f64> {
    let fx = f.eval(x);
    if fx == 0.0 {
        return Ok(0.0);
    }
    let ls = model.ln_abs_scale(x)?;
    let ln = -2.0 * (model.ln_scale_deriv(x) + model.diffusion(x).ln())
        + (2.0 - 1.0 / alpha) * ls
        + ell.at_log(ls).ln()
        + fx.abs().ln();
    Ok(fx.signum() * ln.exp())
}

fn sample_points(x_max: f64) -> Vec<f64> {
    let mut xs = Vec::new();
    let mut x = x_max;
    while xs.len() < TREND_SAMPLES || (x >= 1.0 && xs.len() < 40) {
        xs.push(x);
        x *= 0.5;
    }
    xs
}

/// Outermost samples flat to within the trend tolerance and close to `target`.
fn side_converged(vals: &[f64], target: f64, scale: f64) -> bool {
    let top = &vals[..TREND_SAMPLES.min(vals.len())];
    let hi = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = top.iter().cloned().fold(f64::INFINITY, f64::min);
    let mag = hi.abs().max(lo.abs());
    let flat = mag <= TREND_TOL * scale || hi - lo <= TREND_TOL * mag;
    flat && (top[0] - target).abs() <= TREND_TOL * scale
}

/// `|x|` with `ln|𝔰(±|x|)| = target`, by bisection on `[0, cutoff]`.
fn inv_ln_scale(model: &DiffusionModel, sign: f64, target: f64) -> Result<f64> {
    let (mut a, mut b) = (0.0, model.domain_cutoff);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if model.ln_abs_scale(sign * m)? < target {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    Ok(sign * 0.5 * (a + b))
}

/// Slope of `ln|φ|` against `ln|w|` over the top decade of one side.
fn estimate_alpha_side(model: &DiffusionModel, f: &dyn Observable, sign: f64) -> Result<Option<f64>> {
    let x_top = sign * model.domain_cutoff;
    if f.eval(x_top) == 0.0 {
        return Ok(None);
    }
    let l_top = model.ln_abs_scale(x_top)?;
    let decade = 10f64.ln();
    if l_top < decade + 1.0 {
        return Err(Error::ClassificationFailed(
            "scale range too small to estimate α over a decade".to_string(),
        ));
    }
    let mut pts = Vec::new();
    for k in 0..=8 {
        let lw = l_top - decade * k as f64 / 8.0;
        let x = inv_ln_scale(model, sign, lw)?;
        let fx = f.eval(x);
        if fx == 0.0 {
            return Ok(None);
        }
        let y = fx.abs().ln() - 2.0 * (model.ln_scale_deriv(x) + model.diffusion(x).ln());
        pts.push((lw, y));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    if !(slope + 2.0 > 0.0) {
        return Err(Error::ClassificationFailed(alloc::format!(
            "tail slope {slope:.4} gives no positive α; supply a claimed α"
        )));
    }
    Ok(Some(1.0 / (slope + 2.0)))
}

/// Decide `α`, `ℓ`, `f_±` and the regime. With a claim the tail ratio is
/// checked against it; without one `α` is estimated and `ℓ ≡ 1`.
pub fn classify_regime(
    model: &DiffusionModel,
    f: &dyn Observable,
    claimed: Option<&TailClaim>,
) -> Result<RegimeReport> {
    let verdict = model.check_harris();
    if !verdict.admissible {
        return Err(Error::NotPositiveRecurrent(verdict.reason.unwrap_or_default()));
    }
    let mut warnings = Vec::new();
    let (alpha, ell, estimated) = match claimed {
        Some(c) => {
            if !(c.alpha > 0.0 && c.alpha.is_finite()) {
                return Err(Error::InvalidAlpha(c.alpha));
            }
            (c.alpha, c.ell, false)
        }
        None => {
            let a: Vec<f64> = [1.0, -1.0]
                .iter()
                .filter_map(|&s| estimate_alpha_side(model, f, s).transpose())
                .collect::<Result<_>>()?;
            if a.is_empty() {
                return Err(Error::ClassificationFailed("f vanishes on both tails".to_string()));
            }
            let alpha = a.iter().sum::<f64>() / a.len() as f64;
            if alpha > 1.9 {
                return Err(Error::ClassificationFailed(alloc::format!(
                    "estimated α = {alpha:.3} is near or above 2; supply a claimed α"
                )));
            }
            if (alpha - 1.0).abs() < 0.05 {
                return Err(Error::ClassificationFailed(alloc::format!(
                    "estimated α = {alpha:.3} is too close to 1; supply a claimed α"
                )));
            }
            warnings.push(alloc::format!("α = {alpha:.4} estimated from the tail of φ; ℓ set to 1"));
            (alpha, SlowVar::One, true)
        }
    };

    let mut diag = Vec::new();
    for x in sample_points(model.domain_cutoff) {
        diag.push(TailSample {
            x,
            plus: tail_ratio(model, f, alpha, &ell, x)?,
            minus: tail_ratio(model, f, alpha, &ell, -x)?,
        });
    }
    let (f_plus, f_minus) = match claimed {
        Some(c) => (c.f_plus, c.f_minus),
        None => (diag[0].plus, diag[0].minus),
    };
    if !(f_plus.abs() + f_minus.abs() > 0.0) {
        return Err(Error::ClassificationFailed("|f_+| + |f_-| must be positive".to_string()));
    }
    let scale = f_plus.abs().max(f_minus.abs());
    let plus: Vec<f64> = diag.iter().map(|d| d.plus).collect();
    let minus: Vec<f64> = diag.iter().map(|d| d.minus).collect();
    for (vals, target, side) in [(&plus, f_plus, "+"), (&minus, f_minus, "-")] {
        if !side_converged(vals, target, scale) {
            return Err(Error::ClassificationFailed(alloc::format!(
                "tail ratio on the {side} side does not settle at {target}: {:?}",
                &vals[..TREND_SAMPLES.min(vals.len())]
            )));
        }
    }
    let regime = regime_for(alpha, &ell)?;
    if alpha >= 2.0 - ALPHA_EPS && !f.is_continuous() {
        warnings.push("α ≥ 2 requires a continuous observable".to_string());
    }
    Ok(RegimeReport {
        alpha,
        ell,
        f_plus,
        f_minus,
        regime,
        f_in_l1mu: in_l1mu(alpha, &ell),
        tail_diagnostics: diag,
        alpha_estimated: estimated,
        warnings,
    })
}

/// `2^{α-2}π/(α sin(απ/2)) (α^α/Γ(α))²`, the scale factor of the stable
/// limit per unit `|f_+|^α + |f_-|^α` (before the factor `κ`).
pub fn stable_scale_factor(alpha: f64) -> f64 {
    let g = libm::tgamma(alpha);
    2f64.powf(alpha - 2.0) * PI / (alpha * (alpha * PI / 2.0).sin())
        * (alpha.powf(alpha) / g).powi(2)
}

/// Lévy-measure density factor per unit `|f|^α` (before `κ`): for `α ≠ 1`,
/// `2^{α-1}α^{2α}/Γ(α)`, and `1` at `α = 1`.
pub fn levy_density_factor(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() <= ALPHA_EPS {
        return 1.0;
    }
    2f64.powf(alpha - 1.0) * alpha.powf(2.0 * alpha) / libm::tgamma(alpha)
}

fn x_ln_abs(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.abs().ln()
    }
}

fn sgn(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Every constant of the limit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub regime: Regime,
    pub alpha: f64,
    pub kappa: f64,
    pub ell: SlowVar,
    pub f_plus: f64,
    pub f_minus: f64,
    pub f_in_l1mu: bool,
    /// `μ(f)` when `f ∈ L¹(μ)`.
    pub mu_f: Option<f64>,
    /// Scale of the limit: `σ_α` (standard deviation at unit time in the
    /// Brownian regimes).
    pub sigma_alpha: f64,
    /// Variance from the tail-integral formula (Brownian regimes).
    pub sigma_sq: Option<f64>,
    /// Variance through the Poisson equation (Brownian regimes with `ρ < ∞`).
    pub gamma_sq: Option<f64>,
    /// Asymmetry `β ∈ [-1, 1]`.
    pub skew: f64,
    /// Constant part of the `α = 1` bracket.
    pub skew_log_const: f64,
    /// `ρ` at `α = 2`; `None` when infinite or not applicable.
    pub rho: Option<f64>,
    pub levy_c_plus: f64,
    pub levy_c_minus: f64,
    pub lambda_alpha: f64,
    /// Drift of the generator (`α = 1`, truncation at `|x| ≤ 1`).
    pub generator_drift: Option<f64>,
}

impl LimitLaw {
    /// Closed-form constants from the tail parameters and `κ`. The variance
    /// of the `α > 2` regime needs the model and is left empty here.
    pub fn from_constants(report: &RegimeReport, kappa: f64) -> Result<LimitLaw> {
        let (fp, fm, alpha) = (report.f_plus, report.f_minus, report.alpha);
        let mut law = LimitLaw {
            regime: report.regime,
            alpha,
            kappa,
            ell: report.ell,
            f_plus: fp,
            f_minus: fm,
            f_in_l1mu: report.f_in_l1mu,
            mu_f: None,
            sigma_alpha: f64::NAN,
            sigma_sq: None,
            gamma_sq: None,
            skew: 0.0,
            skew_log_const: 0.0,
            rho: None,
            levy_c_plus: 0.0,
            levy_c_minus: 0.0,
            lambda_alpha: 0.0,
            generator_drift: None,
        };
        match report.regime {
            Regime::Diffusive => {
                if (alpha - 2.0).abs() <= ALPHA_EPS {
                    law.rho = report.ell.rho()?;
                }
            }
            Regime::CriticalDiffusive => {
                let v = 4.0 * kappa * (fp * fp + fm * fm);
                law.sigma_sq = Some(v);
                law.sigma_alpha = v.sqrt();
            }
            Regime::Levy | Regime::CriticalLevy => {
                let pa = fp.abs().powf(alpha);
                let ma = fm.abs().powf(alpha);
                law.skew = (fp.signum() * pa + fm.signum() * ma) / (pa + ma);
                let lam = kappa * levy_density_factor(alpha);
                law.lambda_alpha = lam;
                let part = |v: f64, pos: bool| {
                    if (v > 0.0) == pos && v != 0.0 {
                        v.abs().powf(alpha)
                    } else {
                        0.0
                    }
                };
                law.levy_c_plus = lam * (part(fp, true) + part(fm, true));
                law.levy_c_minus = lam * (part(fp, false) + part(fm, false));
                if report.regime == Regime::Levy {
                    law.sigma_alpha = (kappa * stable_scale_factor(alpha) * (pa + ma)).powf(1.0 / alpha);
                } else {
                    let sum = fp.abs() + fm.abs();
                    law.sigma_alpha = kappa * PI / 2.0 * sum;
                    law.skew = (fp + fm) / sum;
                    let r = x_ln_abs(fp) + x_ln_abs(fm);
                    law.skew_log_const = ((fp + fm) * (2.0 * EULER_GAMMA + LN_2) + r) / sum;
                    law.generator_drift = Some(
                        -kappa
                            * ((fp + fm) * (2.0 * EULER_GAMMA + LN_2 + kappa.ln() + SINE_DRIFT_CONST)
                                + r),
                    );
                }
            }
        }
        Ok(law)
    }

    /// `z_α(y)`; identically 1 in the Brownian regimes.
    pub fn z(&self, y: f64) -> Complex64 {
        match self.regime {
            Regime::Diffusive | Regime::CriticalDiffusive => Complex64::new(1.0, 0.0),
            Regime::Levy => {
                Complex64::new(1.0, -self.skew * (self.alpha * PI / 2.0).tan() * sgn(y))
            }
            Regime::CriticalLevy => {
                if y == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                let sum = self.f_plus.abs() + self.f_minus.abs();
                let bracket = self.skew * (2.0 * y.abs() / (PI * sum)).ln() + self.skew_log_const;
                Complex64::new(1.0, 2.0 / PI * sgn(y) * bracket)
            }
        }
    }

    /// Logarithm of the limit characteristic function at `ξ` and time `t`.
    pub fn log_cf(&self, xi: f64, t: f64) -> Complex64 {
        if xi == 0.0 || t == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match self.regime {
            Regime::Diffusive | Regime::CriticalDiffusive => {
                let s = self.sigma_alpha * xi;
                Complex64::new(-0.5 * t * s * s, 0.0)
            }
            Regime::Levy | Regime::CriticalLevy => {
                let y = self.sigma_alpha * xi;
                -self.z(y) * (t * y.abs().powf(self.alpha))
            }
        }
    }

    /// Characteristic function of the limit at time `t`,
    /// `exp(-t|σ_α ξ|^α z_α(σ_α ξ))` (or `exp(-tσ²ξ²/2)`).
    pub fn char_exponent(&self, xi: f64, t: f64) -> Complex64 {
        self.log_cf(xi, t).exp()
    }

    pub fn rho_eps(&self, eps: f64) -> Result<f64> {
        self.ell.m_transform(1.0 / eps)
    }

    /// Factor multiplying `∫_0^{t/ε} f(X_s)ds`.
    pub fn normalization(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidConfig("ε must lie in (0, 1)".to_string()));
        }
        let l = self.ell.eval(1.0 / eps);
        Ok(match self.regime {
            Regime::Diffusive => eps.sqrt(),
            Regime::CriticalDiffusive => (eps / self.rho_eps(eps)?).sqrt(),
            Regime::Levy => eps.powf(1.0 / self.alpha) * l,
            Regime::CriticalLevy => eps * l,
        })
    }

    /// Asymptotic centering factor: `L(1/ε)` if `f ∉ L¹(μ)`, else `-N(1/ε)`.
    pub fn zeta_eps(&self, eps: f64) -> Result<f64> {
        self.require_critical_levy("ζ_ε")?;
        if self.f_in_l1mu {
            Ok(-self.ell.n_transform(1.0 / eps)?)
        } else {
            self.ell.l_transform(1.0 / eps)
        }
    }

    /// `κ(f_+ + f_-) ℓ(1/ε) ζ_ε`, the leading-order centering.
    pub fn xi_eps_asymptotic(&self, eps: f64) -> Result<f64> {
        Ok(self.kappa * (self.f_plus + self.f_minus) * self.ell.eval(1.0 / eps) * self.zeta_eps(eps)?)
    }

    fn require_critical_levy(&self, what: &str) -> Result<()> {
        if self.regime != Regime::CriticalLevy {
            return Err(Error::InvalidRequest(alloc::format!(
                "{what} is only defined for α = 1 (regime is {})",
                self.regime
            )));
        }
        Ok(())
    }

    /// A natural unit for `ξ`-grids: the inverse of the limit's scale.
    pub fn reference_scale(&self) -> f64 {
        self.sigma_alpha
    }
}

/// Fill every constant appropriate to the regime.
pub fn limit_law(report: &RegimeReport, model: &DiffusionModel, f: &dyn Observable) -> Result<LimitLaw> {
    let kappa = model.kappa()?;
    let mut law = LimitLaw::from_constants(report, kappa)?;
    if report.f_in_l1mu {
        let mu = model.invariant_integral(f)?;
        law.mu_f = Some(mu.value);
        if report.regime != Regime::CriticalLevy {
            check_centered(model, f, mu)?;
        }
    }
    if report.regime == Regime::Diffusive {
        let direct = diffusive_variance(model, f)?;
        let poisson = poisson_solution(model, f)?;
        law.sigma_sq = Some(direct);
        law.gamma_sq = Some(poisson.gamma_sq);
        law.sigma_alpha = direct.sqrt();
    }
    Ok(law)
}

fn check_centered(model: &DiffusionModel, f: &dyn Observable, mu: Estimate) -> Result<()> {
    let abs = model.invariant_integral(&|x: f64| f.eval(x).abs())?;
    if mu.value.abs() > 1e-7 * abs.value + 10.0 * mu.error {
        return Err(Error::NotCentered(mu.value));
    }
    Ok(())
}

/// `f·m` evaluated from the model's exponent.
fn f_times_m(model: &DiffusionModel, f: &dyn Observable, v: f64) -> f64 {
    let fv = f.eval(v);
    if fv == 0.0 {
        return 0.0;
    }
    let s = model.diffusion(v);
    fv * model.exponent(v).exp() / (s * s)
}

/// `G(x) = ∫_x^∞ f m`, cached at grid nodes. For `x < 0` it is computed as
/// `-∫_{-∞}^x f m`, which coincides when `μ(f) = 0` and avoids cancellation.
struct TailIntegral<'a> {
    model: &'a DiffusionModel,
    f: &'a dyn Observable,
    right: Vec<f64>,
    left: Vec<f64>,
}

impl<'a> TailIntegral<'a> {
    fn new(model: &'a DiffusionModel, f: &'a dyn Observable) -> Result<Self> {
        let xs = model.nodes();
        let n = xs.len();
        let z = model.zero_index();
        let x_max = model.domain_cutoff;
        let unavailable = || Error::PoissonUnavailable("f·m does not decay integrably".to_string());
        let tail_plus = power_tail(|v| f_times_m(model, f, v), x_max).ok_or_else(unavailable)?.value;
        let tail_minus =
            power_tail(|v| f_times_m(model, f, -v), x_max).ok_or_else(unavailable)?.value;
        let cell = |k: usize| -> Result<f64> {
            Ok(model
                .integrate_with_exponent(xs[k], xs[k + 1], |x, e| {
                    let s = model.diffusion(x);
                    f.eval(x) * e.exp() / (s * s)
                })?
                .value)
        };
        let mut right = alloc::vec![0.0; n];
        right[n - 1] = tail_plus;
        for k in (z..n - 1).rev() {
            right[k] = right[k + 1] + cell(k)?;
        }
        let mut left = alloc::vec![0.0; n];
        left[0] = -tail_minus;
        for k in 0..z {
            left[k + 1] = left[k] - cell(k)?;
        }
        Ok(TailIntegral { model, f, right, left })
    }

    fn fm(&self, v: f64) -> f64 {
        f_times_m(self.model, self.f, v)
    }

    fn eval(&self, x: f64) -> f64 {
        let xs = self.model.nodes();
        let n = xs.len();
        let x_max = self.model.domain_cutoff;
        // beyond the grid the tails are estimated afresh rather than by
        // subtracting from the cached tail, which would cancel
        if x >= x_max {
            return power_tail(|v| self.fm(v), x).map_or(f64::NAN, |e| e.value);
        }
        if x <= -x_max {
            return -power_tail(|v| self.fm(-v), -x).map_or(f64::NAN, |e| e.value);
        }
        let k = (xs.partition_point(|&v| v <= x) - 1).min(n - 2);
        if x >= 0.0 {
            self.right[k + 1] + gk15(&mut |v| self.fm(v), x, xs[k + 1]).0
        } else {
            self.left[k] - gk15(&mut |v| self.fm(v), xs[k], x).0
        }
    }

    /// `∫_x^∞ f m` minus `-∫_{-∞}^x f m` at 0, i.e. `∫ f m`.
    fn mismatch(&self) -> f64 {
        let z = self.model.zero_index();
        self.right[z] - self.left[z]
    }
}

/// `σ² = 4κ ∫ 𝔰'(x) G(x)² dx` with `G(x) = ∫_x^∞ f/(σ²𝔰')`.
pub fn diffusive_variance(model: &DiffusionModel, f: &dyn Observable) -> Result<f64> {
    let kappa = model.kappa()?;
    let g = TailIntegral::new(model, f)?;
    let scale = g.right[model.zero_index()].abs() + g.left[model.zero_index()].abs();
    if g.mismatch().abs() > 1e-7 * scale {
        return Err(Error::NotCentered(kappa * g.mismatch()));
    }
    let xs = model.nodes();
    let tol = model.quadrature_tol;
    let h = |x: f64| {
        let gv = g.eval(x);
        (-model.exponent(x)).exp() * gv * gv
    };
    let mut body = 0.0;
    for w in xs.windows(2) {
        body += integrate(h, w[0], w[1], tol, 1e-300)?.value;
    }
    let x_max = model.domain_cutoff;
    let div = || Error::Divergent("𝔰'G² is not integrable: ρ is infinite".to_string());
    let tp = power_tail(h, x_max).ok_or_else(div)?;
    let tm = power_tail(|v| h(-v), x_max).ok_or_else(div)?;
    Ok(4.0 * kappa * (body + tp.value + tm.value))
}

/// Solution of `2b g' + σ² g'' = -2f` with `g(0) = 0`, and `γ² = ∫(g'σ)² dμ`.
///
/// `g'` is obtained by integrating the first-order equation for `u = g'`
/// inwards from both ends of the grid (the direction in which the
/// homogeneous solution `𝔰'` decays), then interpolated by cubic Hermite
/// pieces.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    xs: Vec<f64>,
    zero: usize,
    /// `g'` and `g''` at nodes `k ≥ zero`, from the right end.
    u_right: Vec<(f64, f64)>,
    /// Same for `k ≤ zero`, from the left end.
    u_left: Vec<(f64, f64)>,
    g_nodes: Vec<f64>,
    pub gamma_sq: f64,
    /// `μ(f)` used for the centering check.
    pub mu_f: f64,
    /// `|g'(0+) - g'(0-)|`, a consistency diagnostic.
    pub junction_gap: f64,
}

const RK_SUBSTEPS: usize = 4;

fn hermite(x0: f64, x1: f64, p0: (f64, f64), p1: (f64, f64), x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * p0.0
        + (s3 - 2.0 * s2 + s) * h * p0.1
        + (-2.0 * s3 + 3.0 * s2) * p1.0
        + (s3 - s2) * h * p1.1;
    let d = ((6.0 * s2 - 6.0 * s) * p0.0 + (-6.0 * s2 + 6.0 * s) * p1.0) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * p0.1
        + (3.0 * s2 - 2.0 * s) * p1.1;
    (v, d)
}

/// `∫_{x0}^{x} ` of the Hermite cubic.
fn hermite_integral(x0: f64, x1: f64, p0: (f64, f64), p1: (f64, f64), x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
    h * ((s - s3 + 0.5 * s4) * p0.0
        + (0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4) * h * p0.1
        + (s3 - 0.5 * s4) * p1.0
        + (-s3 / 3.0 + 0.25 * s4) * h * p1.1)
}

impl PoissonSolution {
    fn cell_data(&self, k: usize) -> ((f64, f64), (f64, f64)) {
        if k >= self.zero {
            (self.u_right[k], self.u_right[k + 1])
        } else {
            (self.u_left[k], self.u_left[k + 1])
        }
    }

    fn cell_of(&self, x: f64) -> Result<usize> {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return Err(Error::OutOfDomain(x));
        }
        let k = self.xs.partition_point(|&v| v <= x);
        Ok(k.saturating_sub(1).min(n - 2))
    }

    /// `g'(x)` and `g''(x)`.
    pub fn g_prime_pair(&self, x: f64) -> Result<(f64, f64)> {
        let k = self.cell_of(x)?;
        let (p0, p1) = self.cell_data(k);
        Ok(hermite(self.xs[k], self.xs[k + 1], p0, p1, x))
    }

    pub fn g_prime(&self, x: f64) -> Result<f64> {
        Ok(self.g_prime_pair(x)?.0)
    }

    pub fn g(&self, x: f64) -> Result<f64> {
        let k = self.cell_of(x)?;
        let (p0, p1) = self.cell_data(k);
        Ok(self.g_nodes[k] + hermite_integral(self.xs[k], self.xs[k + 1], p0, p1, x))
    }

    /// `2b g' + σ² g'' + 2f` with `g''` by central differences of `g'`.
    pub fn residual(&self, model: &DiffusionModel, f: &dyn Observable, x: f64) -> Result<f64> {
        let h = 1e-5 * x.abs().max(1.0);
        let d = (self.g_prime(x + h)? - self.g_prime(x - h)?) / (2.0 * h);
        let s = model.diffusion(x);
        Ok(2.0 * model.drift(x) * self.g_prime(x)? + s * s * d + 2.0 * f.eval(x))
    }
}

/// Solve the Poisson equation for centered `f` and compute `γ²`.
pub fn poisson_solution(model: &DiffusionModel, f: &dyn Observable) -> Result<PoissonSolution> {
    let kappa = model.kappa()?;
    let mu = model.invariant_integral(f)?;
    check_centered(model, f, mu)?;
    let xs = model.nodes().to_vec();
    let n = xs.len();
    let z = model.zero_index();
    let x_max = model.domain_cutoff;
    let unavailable = || Error::PoissonUnavailable("f·m does not decay integrably".to_string());
    let tail_plus = power_tail(|v| f_times_m(model, f, v), x_max).ok_or_else(unavailable)?.value;
    let tail_minus = power_tail(|v| f_times_m(model, f, -v), x_max).ok_or_else(unavailable)?.value;

    // u' = -(2f/σ² + I' u)
    let rhs = |x: f64, u: f64| {
        let s = model.diffusion(x);
        -(2.0 * f.eval(x) / (s * s) + model.rate(x) * u)
    };
    let rk4 = |x0: f64, x1: f64, mut u: f64| {
        let h = (x1 - x0) / RK_SUBSTEPS as f64;
        let mut x = x0;
        for _ in 0..RK_SUBSTEPS {
            let k1 = rhs(x, u);
            let k2 = rhs(x + 0.5 * h, u + 0.5 * h * k1);
            let k3 = rhs(x + 0.5 * h, u + 0.5 * h * k2);
            let k4 = rhs(x + h, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x += h;
        }
        u
    };

    let mut u_right = alloc::vec![(0.0, 0.0); n];
    let mut u = 2.0 * (-model.node_exponent(n - 1)).exp() * tail_plus;
    u_right[n - 1] = (u, rhs(xs[n - 1], u));
    for k in (z..n - 1).rev() {
        u = rk4(xs[k + 1], xs[k], u);
        u_right[k] = (u, rhs(xs[k], u));
    }
    let mut u_left = alloc::vec![(0.0, 0.0); n];
    let mut u = -2.0 * (-model.node_exponent(0)).exp() * tail_minus;
    u_left[0] = (u, rhs(xs[0], u));
    for k in 0..z {
        u = rk4(xs[k], xs[k + 1], u);
        u_left[k + 1] = (u, rhs(xs[k + 1], u));
    }
    let junction_gap = (u_right[z].0 - u_left[z].0).abs();

    let mut sol = PoissonSolution {
        xs,
        zero: z,
        u_right,
        u_left,
        g_nodes: alloc::vec![0.0; n],
        gamma_sq: 0.0,
        mu_f: mu.value,
        junction_gap,
    };
    for k in z..n - 1 {
        let (p0, p1) = sol.cell_data(k);
        sol.g_nodes[k + 1] =
            sol.g_nodes[k] + hermite_integral(sol.xs[k], sol.xs[k + 1], p0, p1, sol.xs[k + 1]);
    }
    for k in (0..z).rev() {
        let (p0, p1) = sol.cell_data(k);
        sol.g_nodes[k] =
            sol.g_nodes[k + 1] - hermite_integral(sol.xs[k], sol.xs[k + 1], p0, p1, sol.xs[k + 1]);
    }

    // γ² = κ ∫ u² e^{I}
    let tol = model.quadrature_tol;
    let mut body = 0.0;
    for k in 0..n - 1 {
        let (p0, p1) = sol.cell_data(k);
        let (x0, x1) = (sol.xs[k], sol.xs[k + 1]);
        let e0 = model.node_exponent(k);
        let r = integrate(
            |x| {
                let uv = hermite(x0, x1, p0, p1, x).0;
                uv * uv * (e0 + (model.exponent(x) - e0)).exp()
            },
            x0,
            x1,
            tol,
            1e-300,
        )?;
        body += r.value;
    }
    let end_tail = |k0: usize, k1: usize, u1: f64, u0: f64| -> Result<f64> {
        let h1 = u1 * u1 * model.node_exponent(k1).exp();
        let h0 = u0 * u0 * model.node_exponent(k0).exp();
        if h1 == 0.0 {
            return Ok(0.0);
        }
        let (a, b) = (sol.xs[k0].abs(), sol.xs[k1].abs());
        match local_decay(h0, h1, b / a) {
            Some(p) if p > 1.0 + 1e-3 => Ok(h1 * b / (p - 1.0)),
            _ => Err(Error::PoissonUnavailable("(g'σ)² m does not decay integrably".to_string())),
        }
    };
    let tr = end_tail(n - 2, n - 1, sol.u_right[n - 1].0, sol.u_right[n - 2].0)?;
    let tl = end_tail(1, 0, sol.u_left[0].0, sol.u_left[1].0)?;
    sol.gamma_sq = kappa * (body + tr + tl);
    Ok(sol)
}

/// Exact centering at `α = 1`:
/// `ξ_ε = κℓ(1/ε) ∫_{𝔰^{-1}(-κ/ε)}^{𝔰^{-1}(κ/ε)} f m dx`, which equals
/// `κℓ(1/ε)∫_{-κ/ε}^{κ/ε} φ(w) dw` after the substitution `w = 𝔰(x)`.
pub fn centering_exact(
    model: &DiffusionModel,
    f: &dyn Observable,
    law: &LimitLaw,
    eps: f64,
) -> Result<f64> {
    law.require_critical_levy("ξ_ε")?;
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("ε must be positive".to_string()));
    }
    let k = law.kappa;
    let lo = model.inv_scale(-k / eps)?;
    let hi = model.inv_scale(k / eps)?;
    let body = model.integrate_with_exponent(lo, hi, |x, e| {
        let s = model.diffusion(x);
        f.eval(x) * e.exp() / (s * s)
    })?;
    Ok(k * law.ell.eval(1.0 / eps) * body.value)
}

/// Recompute `γ` (Euler) and the sine-drift constant by quadrature.
pub fn constants_by_quadrature() -> Result<(f64, f64)> {
    // γ = -∫_0^∞ e^{-x} ln x dx
    let head = integrate(|x: f64| -(-x).exp() * x.ln(), 0.0, 1.0, 1e-13, 1e-15)?.value;
    let tail = integrate_to_infinity(|x: f64| -(-x).exp() * x.ln(), 1.0, 1e-13, 200.0)?.value;
    let gamma = head + tail;
    // A = ∫_0^1 (sin x - x)/x² dx + ∫_1^∞ sin x/x² dx
    let near = integrate(|x: f64| if x == 0.0 { 0.0 } else { (x.sin() - x) / (x * x) }, 0.0, 1.0, 1e-13, 1e-15)?
        .value;
    let u = 1.0 + 400.0 * PI;
    let mut far = 0.0;
    let mut a = 1.0;
    while a < u {
        let b = (a + PI / 2.0).min(u);
        far += integrate(|x: f64| x.sin() / (x * x), a, b, 1e-13, 1e-17)?.value;
        a = b;
    }
    // asymptotic remainder by repeated integration by parts
    let (s, c) = (u.sin(), u.cos());
    far += c / (u * u) + 2.0 * s / u.powi(3) - 6.0 * c / u.powi(4) - 24.0 * s / u.powi(5);
    Ok((gamma, near + far))
}
