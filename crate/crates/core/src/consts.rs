//! Numerical constants shared across modules.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// `∫_0^1 (sin x - x)/x² dx + ∫_1^∞ sin x / x² dx`, equal to `1 - γ`.
pub const SINE_DRIFT_CONST: f64 = 0.422_784_335_098_467_139_39;

pub const PI: f64 = core::f64::consts::PI;
pub const LN_2: f64 = core::f64::consts::LN_2;
