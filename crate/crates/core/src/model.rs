//! Scale function, speed measure and the natural-scale coefficients of a
//! one-dimensional diffusion.
//!
//! Everything is computed from the exponent `I(x) = ∫_0^x 2b/σ²`, tabulated
//! once on a nonuniform grid. Scale and speed are kept in log form so that
//! super-exponential growth does not overflow.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::coeffs::{Coefficients, Observable};
use crate::error::{Error, Result};
use crate::quad::{gk15, integrate, power_tail, Estimate};

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Debug, Clone)]
struct Grid {
    x: Vec<f64>,
    zero: usize,
    /// `I(x_k)`
    expo: Vec<f64>,
    /// `I'(x_k) = 2b/σ²`
    dexpo: Vec<f64>,
    /// `ln|𝔰(x_k)|`
    ln_scale: Vec<f64>,
    /// `ln|∫_0^{x_k} m|`
    ln_mass: Vec<f64>,
}

/// Diagnostics of the Harris-recurrence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarrisVerdict {
    pub admissible: bool,
    pub scale_at_cutoff: (f64, f64),
    pub scale_unbounded: (bool, bool),
    pub speed_mass: Option<f64>,
    pub reason: Option<alloc::string::String>,
}

/// A diffusion `dX = b(X)dt + σ(X)dB` with cached scale/speed data on
/// `[-domain_cutoff, domain_cutoff]`.
#[derive(Clone)]
pub struct DiffusionModel {
    coeffs: Arc<dyn Coefficients>,
    pub domain_cutoff: f64,
    pub quadrature_tol: f64,
    grid: Grid,
    mass: Option<core::result::Result<Estimate, Error>>,
}

impl core::fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("domain_cutoff", &self.domain_cutoff)
            .field("quadrature_tol", &self.quadrature_tol)
            .field("nodes", &self.grid.x.len())
            .finish()
    }
}

const MAX_NODES: usize = 400_000;

impl DiffusionModel {
    pub fn new<C: Coefficients + 'static>(coeffs: C, domain_cutoff: f64) -> Result<Self> {
        Self::with_tolerance(Arc::new(coeffs), domain_cutoff, 1e-10)
    }

    pub fn with_tolerance(
        coeffs: Arc<dyn Coefficients>,
        domain_cutoff: f64,
        quadrature_tol: f64,
    ) -> Result<Self> {
        if !(domain_cutoff > 0.0 && domain_cutoff.is_finite()) {
            return Err(Error::InvalidConfig("domain cutoff must be positive".to_string()));
        }
        if !(quadrature_tol > 0.0) {
            return Err(Error::InvalidConfig("quadrature tolerance must be positive".to_string()));
        }
        let grid = build_grid(coeffs.as_ref(), domain_cutoff, quadrature_tol)?;
        let mut model = DiffusionModel { coeffs, domain_cutoff, quadrature_tol, grid, mass: None };
        model.mass = Some(model.speed_mass());
        Ok(model)
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coeffs.as_ref()
    }

    pub fn drift(&self, x: f64) -> f64 {
        self.coeffs.drift(x)
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        self.coeffs.diffusion(x)
    }

    pub fn node_count(&self) -> usize {
        self.grid.x.len()
    }

    /// Grid nodes, sorted, with `0` at [`Self::zero_index`].
    pub fn nodes(&self) -> &[f64] {
        &self.grid.x
    }

    pub fn zero_index(&self) -> usize {
        self.grid.zero
    }

    /// `I(x_k)` at grid node `k`.
    pub fn node_exponent(&self, k: usize) -> f64 {
        self.grid.expo[k]
    }

    /// `I'(x_k) = 2b/σ²` at grid node `k`.
    pub fn node_rate(&self, k: usize) -> f64 {
        self.grid.dexpo[k]
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.is_nan() || x.abs() > self.domain_cutoff * (1.0 + 1e-12) {
            Err(Error::OutOfDomain(x))
        } else {
            Ok(())
        }
    }

    /// Index of the grid node used as the base point for `x`: the closest
    /// node between 0 and `x`. Beyond the grid, the outermost node.
    fn base_node(&self, x: f64) -> usize {
        let g = &self.grid;
        if x >= 0.0 {
            let k = g.x.partition_point(|&v| v <= x);
            (k - 1).max(g.zero)
        } else {
            g.x.partition_point(|&v| v < x).min(g.zero)
        }
    }

    pub(crate) fn rate(&self, v: f64) -> f64 {
        let s = self.coeffs.diffusion(v);
        2.0 * self.coeffs.drift(v) / (s * s)
    }

    /// `I(x) - I(x_k)` by a fixed Kronrod panel (cells are small by construction).
    fn local_expo(&self, k: usize, x: f64) -> f64 {
        let x0 = self.grid.x[k];
        if x == x0 {
            return 0.0;
        }
        gk15(&mut |v| self.rate(v), x0, x).0
    }

    /// Exponent `I(x) = ∫_0^x 2b/σ²` (valid up to twice the cutoff).
    pub fn exponent(&self, x: f64) -> f64 {
        let k = self.base_node(x);
        if x.abs() <= self.domain_cutoff * (1.0 + 1e-12) {
            self.grid.expo[k] + self.local_expo(k, x)
        } else {
            // outside the grid: adaptive from the last node
            let x0 = self.grid.x[k];
            let tol = self.quadrature_tol;
            let r = integrate(|v| self.rate(v), x0, x, tol, 1e-14).map(|e| e.value);
            self.grid.expo[k] + r.unwrap_or(f64::NAN)
        }
    }

    /// `ln 𝔰'(x) = -I(x)`.
    pub fn ln_scale_deriv(&self, x: f64) -> f64 {
        -self.exponent(x)
    }

    pub fn scale_deriv(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.ln_scale_deriv(x).exp())
    }

    /// `ln m(x) = I(x) - 2 ln σ(x)`.
    pub fn ln_speed_density(&self, x: f64) -> f64 {
        self.exponent(x) - 2.0 * self.coeffs.diffusion(x).ln()
    }

    pub fn speed_density(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.ln_speed_density(x).exp())
    }

    /// `ln|𝔰(x)|`, `-∞` at 0.
    pub fn ln_abs_scale(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let k = self.base_node(x);
        let x0 = self.grid.x[k];
        let e0 = self.grid.expo[k];
        if x == x0 {
            return Ok(self.grid.ln_scale[k]);
        }
        let (a, b) = if x > x0 { (x0, x) } else { (x, x0) };
        let part = integrate(
            |v| (-self.local_expo(k, v)).exp(),
            a,
            b,
            self.quadrature_tol,
            0.0,
        )?;
        Ok(log_add(self.grid.ln_scale[k], -e0 + part.value.ln()))
    }

    /// Scale function `𝔰(x) = ∫_0^x exp(-I(v)) dv`.
    pub fn scale(&self, x: f64) -> Result<f64> {
        let l = self.ln_abs_scale(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(x.signum() * l.exp())
    }

    /// `𝔰(±cutoff)`.
    pub fn scale_range(&self) -> (f64, f64) {
        let n = self.grid.x.len();
        (-self.grid.ln_scale[0].exp(), self.grid.ln_scale[n - 1].exp())
    }

    /// Inverse scale function by bracketed Newton iteration (the derivative
    /// `𝔰'` is exact), falling back to bisection when a step leaves the bracket.
    pub fn inv_scale(&self, w: f64) -> Result<f64> {
        let (lo, hi) = self.scale_range();
        if !(w >= lo && w <= hi) {
            return Err(Error::OutOfDomain(w));
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        let g = &self.grid;
        let sw = w.abs().ln();
        // bracket on the grid
        let (mut a, mut b) = if w > 0.0 {
            let mut k = g.zero;
            let mut j = g.x.len() - 1;
            while j - k > 1 {
                let m = (k + j) / 2;
                if g.ln_scale[m] < sw {
                    k = m;
                } else {
                    j = m;
                }
            }
            (g.x[k], g.x[j])
        } else {
            let mut k = 0usize;
            let mut j = g.zero;
            while j - k > 1 {
                let m = (k + j) / 2;
                if g.ln_scale[m] < sw {
                    j = m;
                } else {
                    k = m;
                }
            }
            (g.x[k], g.x[j])
        };
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let s = self.scale(x)?;
            let r = s - w;
            if r == 0.0 {
                return Ok(x);
            }
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.ln_scale_deriv(x).exp();
            let mut xn = x - r / d;
            if !(xn > a && xn < b) {
                xn = 0.5 * (a + b);
            }
            if (xn - x).abs() <= 1e-14 * (1.0 + x.abs()) || (b - a) <= 1e-15 * (1.0 + x.abs()) {
                return Ok(xn);
            }
            x = xn;
        }
        Ok(x)
    }

    /// `ψ(w) = 𝔰'(x)σ(x)` and `φ(w) = f(x)/ψ(w)²` at `x = 𝔰^{-1}(w)`.
    pub fn psi_phi(&self, f: &dyn Observable, w: f64) -> Result<(f64, f64)> {
        let x = self.inv_scale(w)?;
        let ln_psi = self.ln_scale_deriv(x) + self.coeffs.diffusion(x).ln();
        Ok((ln_psi.exp(), f.eval(x) * (-2.0 * ln_psi).exp()))
    }

    /// `∫_a^b g(x, I(x)) dx`, split at grid nodes so that the exponent is
    /// evaluated locally in every piece.
    pub fn integrate_with_exponent<G: FnMut(f64, f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        mut g: G,
    ) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate::ZERO);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let xs = &self.grid.x;
        let mut cuts: Vec<f64> = Vec::new();
        cuts.push(lo);
        let start = xs.partition_point(|&v| v <= lo);
        for &v in &xs[start..] {
            if v >= hi {
                break;
            }
            cuts.push(v);
        }
        cuts.push(hi);
        let mut acc = Estimate::ZERO;
        for w in cuts.windows(2) {
            let (c0, c1) = (w[0], w[1]);
            let mid = 0.5 * (c0 + c1);
            let k = self.base_node(mid);
            let e0 = self.grid.expo[k];
            let piece = integrate(
                |v| g(v, e0 + self.local_expo(k, v)),
                c0,
                c1,
                self.quadrature_tol,
                0.0,
            )?;
            acc = acc.add(piece);
        }
        Ok(Estimate { value: sign * acc.value, error: acc.error })
    }

    fn speed_mass(&self) -> core::result::Result<Estimate, Error> {
        let g = &self.grid;
        let n = g.x.len();
        let inner = g.ln_mass[0].exp() + g.ln_mass[n - 1].exp();
        let x_max = self.domain_cutoff;
        let rp = power_tail(|v| self.ln_speed_density(v).exp(), x_max);
        let rm = power_tail(|v| self.ln_speed_density(-v).exp(), x_max);
        match (rp, rm) {
            (Some(tp), Some(tm)) => {
                let v = inner + tp.value + tm.value;
                if !v.is_finite() {
                    return Err(Error::NotPositiveRecurrent("speed measure overflows".to_string()));
                }
                Ok(Estimate {
                    value: v,
                    error: tp.error + tm.error + self.quadrature_tol * inner,
                })
            }
            _ => Err(Error::NotPositiveRecurrent(
                "speed density does not decay integrably".to_string(),
            )),
        }
    }

    /// `κ = 1/∫m`.
    pub fn kappa(&self) -> Result<f64> {
        match &self.mass {
            Some(Ok(e)) => Ok(1.0 / e.value),
            Some(Err(e)) => Err(e.clone()),
            None => unreachable!(),
        }
    }

    /// Relative error estimate of `κ`.
    pub fn kappa_rel_error(&self) -> Result<f64> {
        match &self.mass {
            Some(Ok(e)) => Ok(e.error / e.value),
            Some(Err(e)) => Err(e.clone()),
            None => unreachable!(),
        }
    }

    /// Positive recurrence: `𝔰(±∞) = ±∞` and `∫m < ∞`.
    pub fn check_harris(&self) -> HarrisVerdict {
        let x_max = self.domain_cutoff;
        let (s_lo, s_hi) = self.scale_range();
        let up = power_tail(|v| self.ln_scale_deriv(v).exp(), x_max).is_none();
        let down = power_tail(|v| self.ln_scale_deriv(-v).exp(), x_max).is_none();
        let mass = self.mass.clone().unwrap();
        let mut reason = None;
        if !(up && down) {
            reason = Some("scale function is bounded".to_string());
        } else if let Err(e) = &mass {
            reason = Some(match e {
                Error::NotPositiveRecurrent(_) => "speed measure infinite".to_string(),
                other => alloc::format!("{other}"),
            });
        }
        HarrisVerdict {
            admissible: reason.is_none(),
            scale_at_cutoff: (s_lo, s_hi),
            scale_unbounded: (down, up),
            speed_mass: mass.ok().map(|e| e.value),
            reason,
        }
    }

    /// `μ(h) = κ∫h m`, with an error estimate that includes the tail terms.
    pub fn invariant_integral(&self, h: &dyn Observable) -> Result<Estimate> {
        let kappa = self.kappa()?;
        let x_max = self.domain_cutoff;
        let body = self.integrate_with_exponent(-x_max, x_max, |x, e| {
            let s = self.coeffs.diffusion(x);
            h.eval(x) * e.exp() / (s * s)
        })?;
        let hm = |v: f64| h.eval(v) * self.ln_speed_density(v).exp();
        let tp = power_tail(hm, x_max);
        let tm = power_tail(|v: f64| hm(-v), x_max);
        let hm0 = hm(x_max).abs() + hm(-x_max).abs();
        match (tp, tm) {
            (Some(a), Some(b)) => Ok(Estimate {
                value: kappa * (body.value + a.value + b.value),
                error: kappa * (body.error + a.error + b.error)
                    + (kappa * (body.value + a.value + b.value)).abs()
                        * self.kappa_rel_error()?,
            }),
            _ if hm0 == 0.0 => Ok(Estimate { value: kappa * body.value, error: kappa * body.error }),
            _ => Err(Error::NotIntegrable("h·m does not decay integrably".to_string())),
        }
    }

    /// Tabulated data for fast evaluation inside simulation loops.
    pub fn fast_scale(&self) -> FastScale {
        let g = &self.grid;
        let n = g.x.len();
        let mut keep: Vec<usize> = (0..n).filter(|&k| g.ln_scale[k] < 700.0).collect();
        keep.dedup();
        let mut x = Vec::with_capacity(keep.len());
        let mut w = Vec::with_capacity(keep.len());
        let mut expo = Vec::with_capacity(keep.len());
        let mut dexpo = Vec::with_capacity(keep.len());
        for &k in &keep {
            x.push(g.x[k]);
            let s = g.ln_scale[k].exp();
            w.push(if k < g.zero { -s } else if k == g.zero { 0.0 } else { s });
            expo.push(g.expo[k]);
            dexpo.push(g.dexpo[k]);
        }
        FastScale { x, w, expo, dexpo, coeffs: self.coeffs.clone() }
    }
}

fn node_step(rate: f64, x: f64, x_max: f64) -> f64 {
    let rel = 0.01 * x.abs().max(0.5);
    let by_rate = if rate == 0.0 { f64::INFINITY } else { 0.05 / rate.abs() };
    rel.min(by_rate).max(1e-9 * x_max.max(1.0))
}

fn build_side(
    c: &dyn Coefficients,
    x_max: f64,
    dir: f64,
    breaks: &[f64],
) -> Result<Vec<f64>> {
    let rate = |v: f64| {
        let s = c.diffusion(v);
        2.0 * c.drift(v) / (s * s)
    };
    let mut xs = alloc::vec![0.0];
    let mut x = 0.0f64;
    let mut bi = 0;
    while x.abs() < x_max {
        let s = c.diffusion(x);
        if !(s.is_finite() && c.drift(x).is_finite()) {
            return Err(Error::NonFiniteCoefficient(x));
        }
        if !(s > 0.0) {
            return Err(Error::NonPositiveDiffusion(x));
        }
        let h = node_step(rate(x), x, x_max);
        let mut next = x + dir * h;
        while bi < breaks.len() && breaks[bi] <= x.abs() {
            bi += 1;
        }
        if bi < breaks.len() && breaks[bi] < next.abs() {
            next = dir * breaks[bi];
        }
        if next.abs() > x_max || (x_max - next.abs()) < 0.25 * h {
            next = dir * x_max;
        }
        xs.push(next);
        x = next;
        if xs.len() > MAX_NODES {
            return Err(Error::InvalidConfig(
                "coefficients vary too fast for the node budget".to_string(),
            ));
        }
    }
    Ok(xs)
}

fn build_grid(c: &dyn Coefficients, x_max: f64, tol: f64) -> Result<Grid> {
    let mut bp: Vec<f64> = c.breakpoints();
    let mut pos: Vec<f64> = bp.iter().copied().filter(|&v| v > 0.0 && v < x_max).collect();
    let mut neg: Vec<f64> = bp.drain(..).filter(|&v| v < 0.0 && v > -x_max).map(|v| -v).collect();
    pos.sort_by(|a, b| a.total_cmp(b));
    neg.sort_by(|a, b| a.total_cmp(b));
    let right = build_side(c, x_max, 1.0, &pos)?;
    let left = build_side(c, x_max, -1.0, &neg)?;

    let mut x: Vec<f64> = left.iter().rev().copied().collect();
    let zero = x.len() - 1;
    x.extend_from_slice(&right[1..]);
    let n = x.len();

    for &v in &x {
        let s = c.diffusion(v);
        let b = c.drift(v);
        if !(s.is_finite() && b.is_finite()) {
            return Err(Error::NonFiniteCoefficient(v));
        }
        if !(s > 0.0) {
            return Err(Error::NonPositiveDiffusion(v));
        }
    }
    let rate = |v: f64| {
        let s = c.diffusion(v);
        2.0 * c.drift(v) / (s * s)
    };
    let mut expo = alloc::vec![0.0; n];
    let mut dexpo: Vec<f64> = x.iter().map(|&v| rate(v)).collect();
    let mut ln_scale = alloc::vec![f64::NEG_INFINITY; n];
    let mut ln_mass = alloc::vec![f64::NEG_INFINITY; n];

    let mut walk = |from: usize, to: usize| -> Result<()> {
        let (x0, x1) = (x[from], x[to]);
        let di = integrate(rate, x0, x1, tol, 1e-15)?.value;
        let e0 = expo[from];
        let local = |v: f64| gk15(&mut |u| rate(u), x0, v).0;
        let (a, b) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        let js = integrate(|v| (-local(v)).exp(), a, b, tol, 0.0)?.value;
        let jm = integrate(
            |v| {
                let s = c.diffusion(v);
                local(v).exp() / (s * s)
            },
            a,
            b,
            tol,
            0.0,
        )?
        .value;
        expo[to] = e0 + di;
        ln_scale[to] = log_add(ln_scale[from], -e0 + js.ln());
        ln_mass[to] = log_add(ln_mass[from], e0 + jm.ln());
        Ok(())
    };
    for k in zero..n - 1 {
        walk(k, k + 1)?;
    }
    for k in (1..=zero).rev() {
        walk(k, k - 1)?;
    }
    for (k, d) in dexpo.iter_mut().enumerate() {
        if !d.is_finite() {
            return Err(Error::NonFiniteCoefficient(x[k]));
        }
    }
    Ok(Grid { x, zero, expo, dexpo, ln_scale, ln_mass })
}

/// Cubic-Hermite tables of `𝔰^{-1}` and `I` sharing one set of nodes, for
/// per-step evaluation of `ψ` and `φ` along simulated paths.
#[derive(Clone)]
pub struct FastScale {
    x: Vec<f64>,
    w: Vec<f64>,
    expo: Vec<f64>,
    dexpo: Vec<f64>,
    coeffs: Arc<dyn Coefficients>,
}

#[inline]
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

impl FastScale {
    pub fn range(&self) -> (f64, f64) {
        (self.w[0], self.w[self.w.len() - 1])
    }

    /// Locate the cell of `w`, starting the search from `hint`.
    #[inline]
    pub fn locate(&self, w: f64, hint: usize) -> usize {
        let n = self.w.len();
        let mut k = hint.min(n - 2);
        if w >= self.w[k] {
            if w < self.w[k + 1] {
                return k;
            }
            // hunt upwards
            let mut step = 1;
            let mut hi = k + 1;
            while hi < n - 1 && self.w[hi] <= w {
                k = hi;
                hi = (hi + step).min(n - 1);
                step *= 2;
            }
            let (mut lo, mut up) = (k, hi);
            while up - lo > 1 {
                let m = (lo + up) / 2;
                if self.w[m] <= w {
                    lo = m;
                } else {
                    up = m;
                }
            }
            lo.min(n - 2)
        } else {
            let mut step = 1;
            let mut lo = k;
            while lo > 0 && self.w[lo] > w {
                k = lo;
                lo = lo.saturating_sub(step);
                step *= 2;
            }
            let (mut a, mut b) = (lo, k);
            while b - a > 1 {
                let m = (a + b) / 2;
                if self.w[m] <= w {
                    a = m;
                } else {
                    b = m;
                }
            }
            a
        }
    }

    /// `(x, ln ψ)` at `w`, given the cell index.
    #[inline]
    pub fn eval_in(&self, k: usize, w: f64) -> (f64, f64) {
        let (w0, w1) = (self.w[k], self.w[k + 1]);
        let hw = w1 - w0;
        let t = ((w - w0) / hw).clamp(0.0, 1.0);
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        // dx/dw = exp(I)
        let x = hermite(t, hw, x0, x1, self.expo[k].exp(), self.expo[k + 1].exp());
        let hx = x1 - x0;
        let s = ((x - x0) / hx).clamp(0.0, 1.0);
        let e = hermite(s, hx, self.expo[k], self.expo[k + 1], self.dexpo[k], self.dexpo[k + 1]);
        (x, -e + self.coeffs.diffusion(x).ln())
    }

    /// `(x, ψ, φ)` at `w`; `hint` is updated with the located cell.
    #[inline]
    pub fn psi_phi(&self, f: &dyn Observable, w: f64, hint: &mut usize) -> Option<(f64, f64, f64)> {
        if !(w >= self.w[0] && w <= self.w[self.w.len() - 1]) {
            return None;
        }
        let k = self.locate(w, *hint);
        *hint = k;
        let (x, ln_psi) = self.eval_in(k, w);
        Some((x, ln_psi.exp(), f.eval(x) * (-2.0 * ln_psi).exp()))
    }
}

/// Read-only view exposing the scale/speed evaluators of a model.
pub struct ScaleSpeed<'a> {
    model: &'a DiffusionModel,
}

impl<'a> ScaleSpeed<'a> {
    pub fn scale(&self, x: f64) -> Result<f64> {
        self.model.scale(x)
    }
    pub fn scale_deriv(&self, x: f64) -> Result<f64> {
        self.model.scale_deriv(x)
    }
    pub fn speed_density(&self, x: f64) -> Result<f64> {
        self.model.speed_density(x)
    }
    pub fn kappa(&self) -> Result<f64> {
        self.model.kappa()
    }
    pub fn inv_scale(&self, w: f64) -> Result<f64> {
        self.model.inv_scale(w)
    }
}

/// `ψ` and `φ` for a fixed observable.
pub struct TransformedCoeffs<'a> {
    model: &'a DiffusionModel,
    f: &'a dyn Observable,
}

impl<'a> TransformedCoeffs<'a> {
    pub fn psi(&self, w: f64) -> Result<f64> {
        Ok(self.model.psi_phi(self.f, w)?.0)
    }
    pub fn phi(&self, w: f64) -> Result<f64> {
        Ok(self.model.psi_phi(self.f, w)?.1)
    }
}

impl DiffusionModel {
    pub fn scale_speed(&self) -> ScaleSpeed<'_> {
        ScaleSpeed { model: self }
    }

    pub fn transformed<'a>(&'a self, f: &'a dyn Observable) -> TransformedCoeffs<'a> {
        TransformedCoeffs { model: self, f }
    }
}
