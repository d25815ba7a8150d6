//! Adaptive Gauss–Kronrod quadrature and power-law tail extrapolation.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel. Returns `(kronrod, |kronrod - gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

/// Adaptive bisection on GK15 panels until the summed error is below
/// `max(rel_tol * |I|, abs_tol)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::ZERO);
    }
    let (v0, e0) = gk15(&mut f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    let mut prev = v0;
    let mut iters = 0;
    while err > (rel_tol * total.abs()).max(abs_tol) {
        iters += 1;
        if iters > 2000 || !total.is_finite() {
            return Err(Error::Quadrature { prev, last: total });
        }
        // split the worst panel
        let (k, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = panels.swap_remove(k);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&mut f, pa, m);
        let (v2, e2) = gk15(&mut f, m, pb);
        prev = total;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        panels.push((pa, m, v1, e1));
        panels.push((m, pb, v2, e2));
        if (pb - pa).abs() < 1e-15 * (1.0 + pa.abs()) {
            break;
        }
    }
    // recompute the sum to shed accumulated rounding
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    Ok(Estimate { value: total, error: err })
}

/// Local power-law decay exponent `p` of `g` near `x` (`g ~ x^{-p}`), from
/// two samples `x` and `r x`.
pub fn local_decay(g0: f64, g1: f64, r: f64) -> Option<f64> {
    if g0 == 0.0 || g1 == 0.0 || g0.signum() != g1.signum() {
        return None;
    }
    Some(-(g1 / g0).ln() / r.ln())
}

/// Estimate `∫_x^∞ g` from the local decay of `g` at `x` (`x > 0`).
/// Assumes `g(v) ≈ g(x) (v/x)^{-p}` beyond `x`; a steep decay makes this
/// `g(x)/λ` for exponential tails. Returns `None` when the tail does not
/// decay faster than `1/v`.
pub fn power_tail<G: FnMut(f64) -> f64>(mut g: G, x: f64) -> Option<Estimate> {
    let g0 = g(x);
    if g0 == 0.0 {
        return Some(Estimate::ZERO);
    }
    let g1 = g(x * 1.05);
    let g2 = g(x * 1.2);
    let p1 = local_decay(g0, g1, 1.05)?;
    let p2 = local_decay(g0, g2, 1.2)?;
    if p1 <= 1.0 + 1e-3 || p2 <= 1.0 + 1e-3 {
        return None;
    }
    let t1 = g0 * x / (p1 - 1.0);
    let t2 = g0 * x / (p2 - 1.0);
    Some(Estimate { value: t1, error: (t1 - t2).abs() })
}

/// `∫_a^∞ g` for `a ≥ 0`: GK panels over doubling intervals, each cut closed
/// by the power-law tail. The sequence of closed totals is accelerated with
/// Aitken's Δ² (tail errors shrink geometrically under doubling) and the loop
/// stops when successive accelerated values agree. Detects `1/v`-or-slower decay.
pub fn integrate_to_infinity<G: FnMut(f64) -> f64>(
    mut g: G,
    a: f64,
    rel_tol: f64,
    x_limit: f64,
) -> Result<Estimate> {
    let mut lo = a;
    let mut width = 1.0f64.max(a);
    let mut acc = Estimate::ZERO;
    let mut totals: Vec<f64> = Vec::new();
    let mut accel: Vec<f64> = Vec::new();
    loop {
        let hi = lo + width;
        let piece = integrate(&mut g, lo, hi, rel_tol * 0.1, 1e-300)?;
        acc = acc.add(piece);
        match power_tail(&mut g, hi) {
            Some(t) => {
                let s = acc.value + t.value;
                totals.push(s);
                let n = totals.len();
                if n >= 2 && (s - totals[n - 2]).abs() <= 0.1 * rel_tol * s.abs() {
                    return Ok(Estimate { value: s, error: acc.error + (s - totals[n - 2]).abs() });
                }
                if n >= 3 {
                    let (s0, s1, s2) = (totals[n - 3], totals[n - 2], s);
                    let den = s2 - 2.0 * s1 + s0;
                    let a_k = if den != 0.0 { s2 - (s2 - s1) * (s2 - s1) / den } else { s2 };
                    accel.push(a_k);
                    let m = accel.len();
                    if m >= 2 {
                        let d = (a_k - accel[m - 2]).abs();
                        if d <= rel_tol * a_k.abs() || hi >= x_limit {
                            return Ok(Estimate { value: a_k, error: acc.error + d });
                        }
                    }
                }
                if hi >= x_limit {
                    return Ok(Estimate { value: s, error: acc.error + t.error });
                }
            }
            None => {
                if hi >= x_limit {
                    return Err(Error::NotIntegrable(alloc::format!(
                        "integrand does not decay faster than 1/x beyond {hi}"
                    )));
                }
                totals.clear();
                accel.clear();
            }
        }
        lo = hi;
        width *= 2.0;
    }
}
