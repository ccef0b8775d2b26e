//! Deterministic logistic (Verhulst) consumption dynamics.
//!
//! Consumption relative to its initial level follows
//!
//! ```text
//! c_t / c_0 = 1 / (α + (1 − α) e^{−G_t}),    α = c_0 / C,
//! ```
//!
//! where `G_t` is the accumulated intrinsic growth. Everything in the crate is
//! expressed through the functional `R(γ, x) = [α + (1 − α) e^{−x}]^γ`, which
//! is evaluated here in log space so that extreme `x` neither overflows nor
//! underflows.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::term_structure::{validate_grid, Metadata, TermStructure};

/// Bounded-economy geometry: `alpha = c0 / C`.
///
/// `alpha == 0` is the unbounded economy. The carrying capacity itself is
/// never stored; see [`LogisticParams::carrying_capacity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub alpha: f64,
    pub c0: Option<f64>,
}

impl LogisticParams {
    pub fn new(alpha: f64, c0: Option<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if let Some(c) = c0 {
            if !(c.is_finite() && c > 0.0) {
                return domain(format!("initial consumption must be positive, got {c}"));
            }
        }
        Ok(Self { alpha, c0 })
    }

    /// `C = c0 / alpha`; `None` without `c0` or in the unbounded economy.
    pub fn carrying_capacity(&self) -> Option<f64> {
        match self.c0 {
            Some(c) if self.alpha > 0.0 => Some(c / self.alpha),
            _ => None,
        }
    }
}

/// Power-utility preferences: impatience `delta` and concavity `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub delta: f64,
    pub gamma: f64,
}

impl UtilityParams {
    pub fn new(delta: f64, gamma: f64) -> Result<Self> {
        if !delta.is_finite() {
            return domain(format!("delta must be finite, got {delta}"));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return domain(format!(
                "gamma must be a finite non-negative number, got {gamma}"
            ));
        }
        Ok(Self { delta, gamma })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        domain(format!("alpha must lie in [0, 1), got {alpha}"))
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {x}"))
    }
}

/// `ln[α + (1 − α) e^{−x}]` without overflow, with full relative accuracy
/// near `x = 0`.
pub(crate) fn ln_base(alpha: f64, x: f64) -> f64 {
    if x.abs() < 1.0 {
        // α + (1 − α)e^{−x} = 1 + (1 − α)(e^{−x} − 1)
        ((1.0 - alpha) * (-x).exp_m1()).ln_1p()
    } else if alpha == 0.0 {
        -x
    } else {
        let a = alpha.ln();
        let b = (1.0 - alpha).ln() - x;
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln R(γ, x)`.
pub fn ln_r_function(gamma: f64, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_finite("x", x)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma * ln_base(alpha, x))
}

/// `R(γ, x) = [α + (1 − α) e^{−x}]^γ`.
///
/// `r_function(-1.0, alpha, g)` is the logistic consumption ratio.
///
/// ```
/// # use logistic_discount::logistic::r_function;
/// let r = r_function(2.0, 0.1, 1.0)?;
/// assert!((r - (0.1 + 0.9 * (-1.0f64).exp()).powi(2)).abs() < 1e-15);
/// # Ok::<(), logistic_discount::Error>(())
/// ```
pub fn r_function(gamma: f64, alpha: f64, x: f64) -> Result<f64> {
    ln_r_function(gamma, alpha, x).map(f64::exp)
}

/// Consumption ratio `c_t / c_0` after accumulated growth `growth`.
pub fn logistic_ratio(alpha: f64, growth: f64) -> Result<f64> {
    r_function(-1.0, alpha, growth)
}

/// `R''(γ, x) / R(γ, x)`, the curvature ratio driving every noise correction.
///
/// Written as `γ(1−α)[γ(1−α) + αe^x] / (1 − α + αe^x)²` and rescaled by
/// `e^{−2x}` for positive `x`.
pub fn r_curvature_ratio(gamma: f64, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_finite("x", x)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let a1 = 1.0 - alpha;
    let ratio = if x <= 0.0 {
        let u = alpha * x.exp();
        let den = a1 + u;
        gamma * a1 * (gamma * a1 + u) / (den * den)
    } else {
        let w = (-x).exp();
        let den = a1 * w + alpha;
        gamma * a1 * (gamma * a1 * w * w + alpha * w) / (den * den)
    };
    Ok(ratio)
}

/// Inflection time `t_c = g⁻¹ ln((1 − α)/α)` of the logistic curve.
///
/// Negative when `alpha > 0.5`: the inflection point already lies in the past.
pub fn inflection_time(alpha: f64, g: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return domain("inflection time is infinite in the unbounded economy (alpha = 0)");
    }
    if !(g.is_finite() && g > 0.0) {
        return domain(format!("intrinsic rate must be positive, got {g}"));
    }
    Ok(((1.0 - alpha) / alpha).ln() / g)
}

/// Noise-free discount rate at a single horizon; `t = 0` is the analytic
/// limit `δ + γg(1 − α)`.
pub fn deterministic_discount_rate(
    utility: &UtilityParams,
    alpha: f64,
    g: f64,
    t: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_finite("g", g)?;
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("horizon must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(utility.delta + utility.gamma * g * (1.0 - alpha));
    }
    // δ + γg − γ t⁻¹ ln{1 + α(e^{gt} − 1)} = δ − ln R(γ, gt) / t
    Ok(utility.delta - utility.gamma * ln_base(alpha, g * t) / t)
}

/// Discount curve for a constant intrinsic rate `g`.
pub fn deterministic_discount_curve(
    utility: &UtilityParams,
    alpha: f64,
    g: f64,
    grid: &[f64],
) -> Result<TermStructure> {
    validate_grid(grid, true)?;
    let rates = grid
        .iter()
        .map(|&t| deterministic_discount_rate(utility, alpha, g, t))
        .collect::<Result<Vec<_>>>()?;
    let metadata = Metadata::new("deterministic")
        .param("alpha", alpha)
        .param("gamma", utility.gamma)
        .param("delta", utility.delta)
        .param("m_g", g)
        .param("d_g", 0.0);
    Ok(TermStructure::new(
        grid.to_vec(),
        Some(rates),
        None,
        metadata,
    ))
}

/// Instantaneous relative growth rate `c⁻¹ dc/dt` for a constant intrinsic rate.
pub fn relative_growth_rate(alpha: f64, g: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(g.is_finite() && g > 0.0) {
        return domain(format!("intrinsic rate must be positive, got {g}"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    // g e^{−gt} / [α/(1−α) + e^{−gt}] = g(1−α)e^{−gt} / [α + (1−α)e^{−gt}]
    let w = (-g * t).exp();
    Ok(g * (1.0 - alpha) * w / (alpha + (1.0 - alpha) * w))
}
