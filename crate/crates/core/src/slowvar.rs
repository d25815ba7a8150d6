//! Slowly varying functions and the transforms `L`, `N`, `M` built from them.
//!
//! All integrals are taken in the log variable `u = ln v`, where the
//! integrands become polynomially (or exponentially) decaying.

use alloc::string::ToString;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity};

const TOL: f64 = 1e-11;
/// Largest log-variable used when probing for divergence.
const U_LIMIT: f64 = 2.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowVar {
    /// `ℓ ≡ 1`
    One,
    /// `ℓ(v) = (1 + ln v)^k` for `v ≥ 1`, `1` below.
    LogPower { k: f64 },
}

impl Default for SlowVar {
    fn default() -> Self {
        SlowVar::One
    }
}

impl SlowVar {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            SlowVar::One => 1.0,
            SlowVar::LogPower { k } => (1.0 + v.max(1.0).ln()).powf(k),
        }
    }

    /// `ℓ(e^u)`
    pub fn at_log(&self, u: f64) -> f64 {
        match *self {
            SlowVar::One => 1.0,
            SlowVar::LogPower { k } => (1.0 + u.max(0.0)).powf(k),
        }
    }

    pub fn name(&self) -> alloc::string::String {
        match *self {
            SlowVar::One => "one".to_string(),
            SlowVar::LogPower { k } => alloc::format!("logpow({k})"),
        }
    }

    /// `L(x) = ∫_1^x dv/(v ℓ(v))`
    pub fn l_transform(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::InvalidRequest("L needs x > 0".to_string()));
        }
        let u = x.ln();
        Ok(integrate(|s| 1.0 / self.at_log(s), 0.0, u, TOL, 0.0)?.value)
    }

    /// `N(x) = ∫_x^∞ dv/(v ℓ(v))`, or `Divergent`.
    pub fn n_transform(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::InvalidRequest("N needs x > 0".to_string()));
        }
        let u0 = x.ln();
        let shift = u0.max(0.0);
        // the integrand in u is 1/ℓ(e^u); substitute s = u - shift >= 0
        let head = if u0 < 0.0 {
            integrate(|s| 1.0 / self.at_log(s), u0, 0.0, TOL, 0.0)?.value
        } else {
            0.0
        };
        match integrate_to_infinity(|s| 1.0 / self.at_log(s + shift), 0.0, TOL, U_LIMIT) {
            Ok(e) => Ok(head + e.value),
            Err(Error::NotIntegrable(_)) => {
                Err(Error::Divergent("∫ dv/(v ℓ(v)) diverges".to_string()))
            }
            Err(e) => Err(e),
        }
    }

    /// Whether `∫_1^∞ dv/(vℓ(v))` converges.
    pub fn n_converges(&self) -> bool {
        self.n_transform(1.0).is_ok()
    }

    /// `∫_x^∞ du/(u^{3/2} ℓ(u))` for `x ≥ 1`.
    pub fn tail_three_halves(&self, x: f64) -> Result<f64> {
        let u0 = x.ln();
        // in s = ln u: e^{-s/2}/ℓ(e^s); factor out e^{-u0/2}
        let r = integrate_to_infinity(
            |s| (-0.5 * s).exp() / self.at_log(s + u0),
            0.0,
            TOL,
            U_LIMIT,
        )?;
        Ok((-0.5 * u0).exp() * r.value)
    }

    /// `M(x) = ∫_1^x (∫_v^∞ du/(u^{3/2}ℓ(u)))² dv`, which is `ρ_ε` at `x = 1/ε`.
    pub fn m_transform(&self, x: f64) -> Result<f64> {
        if x < 1.0 {
            return Err(Error::InvalidRequest("M needs x >= 1".to_string()));
        }
        let mut err = None;
        let v = integrate(
            |s| {
                let t = self.tail_three_halves(s.exp()).unwrap_or_else(|e| {
                    err = Some(e);
                    0.0
                });
                s.exp() * t * t
            },
            0.0,
            x.ln(),
            1e-10,
            0.0,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(v.value)
    }

    /// `ρ = M(∞)`; `None` when infinite.
    pub fn rho(&self) -> Result<Option<f64>> {
        if let SlowVar::One = self {
            return Ok(None);
        }
        let mut err = None;
        let r = integrate_to_infinity(
            |s| {
                let t = self.tail_three_halves(s.exp()).unwrap_or_else(|e| {
                    err = Some(e);
                    0.0
                });
                s.exp() * t * t
            },
            0.0,
            1e-10,
            U_LIMIT,
        );
        if let Some(e) = err {
            return Err(e);
        }
        match r {
            Ok(e) => Ok(Some(e.value)),
            Err(Error::NotIntegrable(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_ell() {
        let l = SlowVar::One;
        assert_relative_eq!(l.l_transform(1e5).unwrap(), 1e5f64.ln(), max_relative = 1e-12);
        assert!(matches!(l.n_transform(10.0), Err(Error::Divergent(_))));
        assert_eq!(l.rho().unwrap(), None);
        assert_relative_eq!(l.m_transform(1e4).unwrap(), 4.0 * 1e4f64.ln(), max_relative = 1e-9);
        assert_eq!(l.m_transform(1.0).unwrap(), 0.0);
    }

    #[test]
    fn log_squared_ell() {
        let l = SlowVar::LogPower { k: 2.0 };
        for &x in &[1.0, 10.0, 1e6] {
            let exact = 1.0 / (1.0 + f64::ln(x));
            assert_relative_eq!(l.n_transform(x).unwrap(), exact, max_relative = 1e-8);
        }
        let rho = l.rho().unwrap().expect("finite");
        let m_far = l.m_transform(1e200).unwrap();
        assert!(m_far < rho && rho - m_far < 1e-3 * rho, "{rho} {m_far}");
    }

    #[test]
    fn slow_variation_of_l() {
        let l = SlowVar::One;
        let mut last = f64::INFINITY;
        for k in 2..10 {
            let x = 10f64.powi(k);
            let r = (l.l_transform(2.0 * x).unwrap() / l.l_transform(x).unwrap() - 1.0).abs();
            assert!(r < last);
            last = r;
        }
        assert!(last < 0.05);
    }
}
