//! Drift/diffusion coefficient families and observables.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift `b` and diffusion `σ` of `dX = b(X)dt + σ(X)dB`.
pub trait Coefficients: Send + Sync {
    fn drift(&self, x: f64) -> f64;
    fn diffusion(&self, x: f64) -> f64;
    /// Points where the coefficients are not smooth; the model grid includes them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Coefficients given by two closures.
pub struct FnCoefficients<B, S> {
    pub drift: B,
    pub diffusion: S,
}

impl<B, S> Coefficients for FnCoefficients<B, S>
where
    B: Fn(f64) -> f64 + Send + Sync,
    S: Fn(f64) -> f64 + Send + Sync,
{
    fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }
    fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }
}

/// Built-in coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelPreset {
    /// `b(x) = -(θ+1)/2 sgn(x)|x|^θ`, `σ = 1`; invariant density `∝ exp(-|x|^{θ+1})`.
    HeavyTailed { theta: f64 },
    /// Velocity of a kinetic particle: `b = (β/2)Θ'/Θ`, `σ = 1` with
    /// `Θ(v) = w(v)/sqrt(1+v²)` and `w` interpolating between `c_minus` and `c_plus`.
    Kinetic { beta: f64, c_plus: f64, c_minus: f64 },
    /// `b = 0`, `σ(x) = (1+|x|)^{β/2}`.
    Driftless { beta: f64 },
}

impl ModelPreset {
    pub fn kinetic(beta: f64) -> Self {
        ModelPreset::Kinetic { beta, c_plus: 1.0, c_minus: 1.0 }
    }

    /// A cutoff that keeps `ln 𝔰` comfortably inside double range.
    pub fn default_cutoff(&self) -> f64 {
        match *self {
            ModelPreset::HeavyTailed { theta } => 300f64.powf(1.0 / (theta + 1.0)),
            ModelPreset::Kinetic { .. } => 1.0e4,
            ModelPreset::Driftless { .. } => 1.0e4,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ModelPreset::HeavyTailed { theta } => alloc::format!("heavy_tailed({theta})"),
            ModelPreset::Kinetic { beta, c_plus, c_minus } => {
                if c_plus == 1.0 && c_minus == 1.0 {
                    alloc::format!("kinetic({beta})")
                } else {
                    alloc::format!("kinetic({beta},{c_plus},{c_minus})")
                }
            }
            ModelPreset::Driftless { beta } => alloc::format!("driftless({beta})"),
        }
    }

    fn kinetic_weight(v: f64, cp: f64, cm: f64) -> (f64, f64) {
        let t = v.tanh();
        let w = 0.5 * ((cp + cm) + (cp - cm) * t);
        let dw = 0.5 * (cp - cm) * (1.0 - t * t);
        (w, dw)
    }
}

impl Coefficients for ModelPreset {
    fn drift(&self, x: f64) -> f64 {
        match *self {
            ModelPreset::HeavyTailed { theta } => {
                -(theta + 1.0) / 2.0 * x.signum() * x.abs().powf(theta)
            }
            ModelPreset::Kinetic { beta, c_plus, c_minus } => {
                let (w, dw) = Self::kinetic_weight(x, c_plus, c_minus);
                0.5 * beta * (-x / (1.0 + x * x) + dw / w)
            }
            ModelPreset::Driftless { .. } => 0.0,
        }
    }

    fn diffusion(&self, x: f64) -> f64 {
        match *self {
            ModelPreset::HeavyTailed { .. } | ModelPreset::Kinetic { .. } => 1.0,
            ModelPreset::Driftless { beta } => (1.0 + x.abs()).powf(0.5 * beta),
        }
    }
}

/// Piecewise-linear coefficients from a table of `(x, b(x), σ(x))`, held
/// constant beyond the first and last rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCoefficients {
    rows: Vec<(f64, f64, f64)>,
}

impl TableCoefficients {
    pub fn new(mut rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidConfig("coefficient table needs at least two rows".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidConfig(alloc::format!("duplicate x = {}", w[0].0)));
            }
        }
        for r in &rows {
            if !(r.0.is_finite() && r.1.is_finite() && r.2.is_finite()) {
                return Err(Error::NonFiniteCoefficient(r.0));
            }
            if r.2 <= 0.0 {
                return Err(Error::NonPositiveDiffusion(r.0));
            }
        }
        Ok(TableCoefficients { rows })
    }

    fn interp(&self, x: f64, col: usize) -> f64 {
        let get = |r: &(f64, f64, f64)| if col == 1 { r.1 } else { r.2 };
        let n = self.rows.len();
        if x <= self.rows[0].0 {
            return get(&self.rows[0]);
        }
        if x >= self.rows[n - 1].0 {
            return get(&self.rows[n - 1]);
        }
        let k = self.rows.partition_point(|r| r.0 <= x) - 1;
        let (x0, x1) = (self.rows[k].0, self.rows[k + 1].0);
        let t = (x - x0) / (x1 - x0);
        get(&self.rows[k]) * (1.0 - t) + get(&self.rows[k + 1]) * t
    }
}

impl Coefficients for TableCoefficients {
    fn drift(&self, x: f64) -> f64 {
        self.interp(x, 1)
    }
    fn diffusion(&self, x: f64) -> f64 {
        self.interp(x, 2)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }
}

/// The integrand `f` of the additive functional.
pub trait Observable: Send + Sync {
    fn eval(&self, x: f64) -> f64;
    fn is_continuous(&self) -> bool {
        true
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Observable for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Built-in observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservablePreset {
    /// `f(x) = x - shift`; `centered_id` resolves `shift = μ(id)`.
    Shifted { shift: f64 },
    /// `f(x) = sgn(x)|x|^p`.
    Power { p: f64 },
    /// `f(x) = |x|^p`.
    AbsPower { p: f64 },
    /// `f(x) = x / (1+|x|)^{1-γ}`.
    Saturating { gamma: f64 },
    /// `f(x) = f_± ((θ+1) max(|x|,1)^θ)^{2-1/α} exp(|x|^{θ+1}/α)`, matched to
    /// the heavy-tailed family so that the tail ratio tends to `f_±`.
    HeavyTail { theta: f64, alpha: f64, f_plus: f64, f_minus: f64 },
    Constant { value: f64 },
    /// Piecewise linear through `(x, f)` rows, constant outside.
    Table { rows: Vec<(f64, f64)> },
}

impl ObservablePreset {
    pub fn id() -> Self {
        ObservablePreset::Shifted { shift: 0.0 }
    }

    pub fn name(&self) -> String {
        match self {
            ObservablePreset::Shifted { shift } if *shift == 0.0 => "id".to_string(),
            ObservablePreset::Shifted { shift } => alloc::format!("shifted({shift})"),
            ObservablePreset::Power { p } => alloc::format!("power({p})"),
            ObservablePreset::AbsPower { p } => alloc::format!("abs_power({p})"),
            ObservablePreset::Saturating { gamma } => alloc::format!("saturating({gamma})"),
            ObservablePreset::HeavyTail { theta, alpha, f_plus, f_minus } => {
                alloc::format!("heavy_tail({theta},{alpha},{f_plus},{f_minus})")
            }
            ObservablePreset::Constant { value } => alloc::format!("const({value})"),
            ObservablePreset::Table { .. } => "table".to_string(),
        }
    }
}

impl Observable for ObservablePreset {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ObservablePreset::Shifted { shift } => x - shift,
            ObservablePreset::Power { p } => x.signum() * x.abs().powf(*p),
            ObservablePreset::AbsPower { p } => x.abs().powf(*p),
            ObservablePreset::Saturating { gamma } => x / (1.0 + x.abs()).powf(1.0 - gamma),
            ObservablePreset::HeavyTail { theta, alpha, f_plus, f_minus } => {
                let q = 2.0 - 1.0 / alpha;
                let ax = x.abs();
                let lead = if x >= 0.0 { *f_plus } else { *f_minus };
                let ln_mag = q * ((theta + 1.0) * ax.max(1.0).powf(*theta)).ln()
                    + ax.powf(theta + 1.0) / alpha;
                lead * ln_mag.exp()
            }
            ObservablePreset::Constant { value } => *value,
            ObservablePreset::Table { rows } => {
                let n = rows.len();
                if n == 0 {
                    return 0.0;
                }
                if x <= rows[0].0 {
                    return rows[0].1;
                }
                if x >= rows[n - 1].0 {
                    return rows[n - 1].1;
                }
                let k = rows.partition_point(|r| r.0 <= x) - 1;
                let t = (x - rows[k].0) / (rows[k + 1].0 - rows[k].0);
                rows[k].1 * (1.0 - t) + rows[k + 1].1 * t
            }
        }
    }

    fn is_continuous(&self) -> bool {
        match self {
            ObservablePreset::HeavyTail { f_plus, f_minus, .. } => {
                // jump at 0 unless both branches agree there
                f_plus == f_minus
            }
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kinetic_drift_matches_log_derivative() {
        let p = ModelPreset::Kinetic { beta: 2.0, c_plus: 2.0, c_minus: 1.0 };
        let ln_m = |v: f64| {
            let (w, _) = ModelPreset::kinetic_weight(v, 2.0, 1.0);
            2.0 * (w.ln() - 0.5 * (1.0 + v * v).ln())
        };
        for &v in &[-3.0, -0.4, 0.0, 0.7, 5.0] {
            let h = 1e-5;
            let d = (ln_m(v + h) - ln_m(v - h)) / (2.0 * h);
            // with σ = 1, m = exp(2∫b) so (ln m)' = 2b
            assert_relative_eq!(2.0 * p.drift(v), d, epsilon = 1e-8);
        }
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = TableCoefficients::new(alloc::vec![(0.0, 0.0, 1.0), (1.0, -2.0, 3.0)]).unwrap();
        assert_relative_eq!(t.drift(0.25), -0.5);
        assert_relative_eq!(t.diffusion(0.5), 2.0);
        assert_relative_eq!(t.diffusion(9.0), 3.0);
        assert!(TableCoefficients::new(alloc::vec![(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn heavy_tail_observable_at_half() {
        let f = ObservablePreset::HeavyTail { theta: 1.0, alpha: 0.5, f_plus: 2.0, f_minus: -1.0 };
        assert_relative_eq!(f.eval(1.5), 2.0 * (2.0 * 2.25f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(f.eval(-1.5), -(2.0 * 2.25f64).exp(), max_relative = 1e-14);
        assert!(!f.is_continuous());
    }
}
