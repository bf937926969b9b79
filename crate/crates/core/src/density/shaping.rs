use core::f64::consts::{FRAC_PI_2, LN_2};

use crate::math;

/// Monotone map `f: β → (0, 1]` used inside the field product.
///
/// | kind          | `f(β)`               | domain     | `T2 = f'/f`                       |
/// |---------------|----------------------|------------|-----------------------------------|
/// | `Exp`         | `e^β`                | `(−∞, 0]`  | `1`                               |
/// | `Tanh`        | `1 − tanh β`         | `[0, ∞)`   | `−(1 + tanh β)`                   |
/// | `Power { n }` | `β^(−n)`             | `[1, ∞)`   | `−n / β`                          |
/// | `Atan`        | `1 − atan(β)/(π/2)`  | `[0, ∞)`   | `−1 / ((π/2 − atan β)(1 + β²))`   |
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ShapingFunction {
    #[default]
    Exp,
    Tanh,
    Power {
        n: u32,
    },
    Atan,
}

impl ShapingFunction {
    pub const DEFAULT_POWER: u32 = 12;

    /// Closed domain `[lo, hi]` of `β`; infinite ends are open.
    pub fn domain(self) -> (f64, f64) {
        match self {
            ShapingFunction::Exp => (f64::NEG_INFINITY, 0.0),
            ShapingFunction::Tanh | ShapingFunction::Atan => (0.0, f64::INFINITY),
            ShapingFunction::Power { .. } => (1.0, f64::INFINITY),
        }
    }

    #[inline]
    pub fn contains(self, beta: f64) -> bool {
        let (lo, hi) = self.domain();
        beta.is_finite() && beta >= lo && beta <= hi
    }

    #[inline]
    pub fn value(self, beta: f64) -> f64 {
        match self {
            ShapingFunction::Exp => math::exp(beta),
            ShapingFunction::Tanh => 2.0 / (1.0 + math::exp(2.0 * beta)),
            ShapingFunction::Power { n } => math::powi(beta, -(n as i32)),
            ShapingFunction::Atan => atan_complement(beta) / FRAC_PI_2,
        }
    }

    /// `ln f(β)`, evaluated without forming `f` where that would lose digits.
    #[inline]
    pub fn ln_value(self, beta: f64) -> f64 {
        match self {
            ShapingFunction::Exp => beta,
            // 1 − tanh β = 2 e^{−2β} / (1 + e^{−2β})
            ShapingFunction::Tanh => LN_2 - 2.0 * beta - math::ln_1p(math::exp(-2.0 * beta)),
            ShapingFunction::Power { n } => -(n as f64) * math::ln(beta),
            ShapingFunction::Atan => math::ln(atan_complement(beta)) - math::ln(FRAC_PI_2),
        }
    }

    /// Logarithmic derivative `T2(β) = f'(β) / f(β)`.
    #[inline]
    pub fn log_derivative(self, beta: f64) -> f64 {
        match self {
            ShapingFunction::Exp => 1.0,
            ShapingFunction::Tanh => -(1.0 + math::tanh(beta)),
            ShapingFunction::Power { n } => -(n as f64) / beta,
            ShapingFunction::Atan => -1.0 / (atan_complement(beta) * (1.0 + beta * beta)),
        }
    }

    /// Range `[lo, hi]` that `T2` stays within over the domain.
    pub fn log_derivative_bounds(self) -> (f64, f64) {
        match self {
            ShapingFunction::Exp => (1.0, 1.0),
            ShapingFunction::Tanh => (-2.0, -1.0),
            ShapingFunction::Power { n } => (-(n as f64), 0.0),
            ShapingFunction::Atan => (-1.0, 0.0),
        }
    }

    /// Default box bounds for an element whose neighborhood holds
    /// `neighborhood_size` elements.
    ///
    /// `Exp` uses `[−10 |N_i|, 0]`; the others use fixed finite ranges that
    /// keep `f` far above underflow while allowing `ρ` within `1e−9` of one.
    pub fn default_bounds(self, neighborhood_size: usize) -> (f64, f64) {
        match self {
            ShapingFunction::Exp => (-10.0 * neighborhood_size as f64, 0.0),
            ShapingFunction::Tanh => (0.0, 10.0),
            ShapingFunction::Power { .. } => (1.0, 1e6),
            ShapingFunction::Atan => (0.0, 1e6),
        }
    }

    /// Uniform `β₀` with `1 − f(β₀) = volume_fraction`.
    pub fn uniform_for_density(self, volume_fraction: f64) -> f64 {
        let vf = volume_fraction;
        match self {
            ShapingFunction::Exp => math::ln(1.0 - vf),
            ShapingFunction::Tanh => math::atanh(vf),
            ShapingFunction::Power { n } => math::powf(1.0 - vf, -1.0 / n as f64),
            ShapingFunction::Atan => math::tan(vf * FRAC_PI_2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapingFunction::Exp => "exp",
            ShapingFunction::Tanh => "tanh",
            ShapingFunction::Power { .. } => "power",
            ShapingFunction::Atan => "atan",
        }
    }
}

/// `π/2 − atan β` without cancellation for large `β`.
#[inline]
fn atan_complement(beta: f64) -> f64 {
    if beta > 1.0 {
        math::atan(1.0 / beta)
    } else {
        FRAC_PI_2 - math::atan(beta)
    }
}
