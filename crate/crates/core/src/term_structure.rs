//! Expected growth and discount-rate term structures.
//!
//! The bounded-economy curves linearize the two-term saddle-point expansion
//! of `E[R(γ, G_t)]` around the mean accumulated growth `m_g t`:
//!
//! ```text
//! ln E[c_t/c_0] ≈ ln R(−1, m_g t) + [R''/R](−1, m_g t) · D_g t / 2
//! y_t           ≈ δ − ln R(γ, m_g t) / t − [R''/R](γ, m_g t) · D_g / 2
//! ```
//!
//! With `D_g = 0` these are the deterministic logistic curves; with `α = 0`
//! they collapse to the Ramsey rule with a precautionary (Jensen) term.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::logistic::{
    check_alpha, inflection_time, ln_base, ln_r_function, r_curvature_ratio, r_function,
    UtilityParams,
};
use crate::rates::{self, ou_markov_map, RateModel};

/// Default validity threshold for `(γ ρ_g τ_g)²`.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.25;

/// Parameter echo and warnings attached to every term structure.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            ..Self::default()
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn warn(&mut self, warning: impl Into<String>) {
        self.warnings.push(warning.into());
    }
}

/// Rates and/or expected log-growth sampled on a horizon grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermStructure {
    pub horizons: Vec<f64>,
    pub rates: Option<Vec<f64>>,
    pub log_growth: Option<Vec<f64>>,
    pub metadata: Metadata,
}

impl TermStructure {
    pub(crate) fn new(
        horizons: Vec<f64>,
        rates: Option<Vec<f64>>,
        log_growth: Option<Vec<f64>>,
        metadata: Metadata,
    ) -> Self {
        debug_assert!(rates.as_ref().is_none_or(|r| r.len() == horizons.len()));
        debug_assert!(log_growth
            .as_ref()
            .is_none_or(|g| g.len() == horizons.len()));
        Self {
            horizons,
            rates,
            log_growth,
            metadata,
        }
    }

    /// Combines a rate curve and a growth curve on the same grid.
    pub fn merge(mut self, other: TermStructure) -> Result<Self> {
        if self.horizons != other.horizons {
            return domain("cannot merge term structures on different grids");
        }
        if self.rates.is_none() {
            self.rates = other.rates;
        }
        if self.log_growth.is_none() {
            self.log_growth = other.log_growth;
        }
        for w in other.metadata.warnings {
            if !self.metadata.warnings.contains(&w) {
                self.metadata.warnings.push(w);
            }
        }
        Ok(self)
    }

    pub fn rate_at(&self, t: f64) -> Option<f64> {
        let i = self.horizons.iter().position(|&h| h == t)?;
        self.rates.as_ref().map(|r| r[i])
    }

    pub fn growth_at(&self, t: f64) -> Option<f64> {
        let i = self.horizons.iter().position(|&h| h == t)?;
        self.log_growth.as_ref().map(|g| g[i])
    }
}

/// Checks that a grid is finite, strictly increasing and non-negative
/// (strictly positive unless `allow_zero`).
pub fn validate_grid(grid: &[f64], allow_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return domain("horizon grid is empty");
    }
    for (i, &t) in grid.iter().enumerate() {
        let ok = t.is_finite() && if allow_zero { t >= 0.0 } else { t > 0.0 };
        if !ok {
            return domain(format!("invalid horizon {t} at position {i}"));
        }
        if i > 0 && t <= grid[i - 1] {
            return domain(format!(
                "horizons must be strictly increasing ({} then {t})",
                grid[i - 1]
            ));
        }
    }
    Ok(())
}

/// `t_min, t_min + step, …, ≤ t_max`.
pub fn uniform_grid(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && t_min >= 0.0 && t_max >= t_min && t_max.is_finite()) {
        return domain(format!(
            "bad grid spec: t_min={t_min}, t_max={t_max}, step={step}"
        ));
    }
    let n = ((t_max - t_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| t_min + k as f64 * step).collect())
}

/// One to 500 years in unit steps.
pub fn default_grid() -> Vec<f64> {
    (1..=500).map(f64::from).collect()
}

/// Where `m_g` and `D_g(t)` come from.
#[derive(Debug, Clone)]
pub enum GrowthSpec {
    /// A single mean rate and a horizon-independent variance rate.
    Fixed { m_g: f64, dg: f64 },
    /// `D_g(t)` computed per horizon from a rate model.
    Model(RateModel),
}

impl GrowthSpec {
    pub fn fixed(m_g: f64, dg: f64) -> Result<Self> {
        if !m_g.is_finite() {
            return domain(format!("m_g must be finite, got {m_g}"));
        }
        if !(dg.is_finite() && dg >= 0.0) {
            return domain(format!("D_g must be non-negative, got {dg}"));
        }
        Ok(Self::Fixed { m_g, dg })
    }

    pub fn m_g(&self, t: f64) -> f64 {
        match self {
            Self::Fixed { m_g, .. } => *m_g,
            Self::Model(model) => model.mean_rate(t),
        }
    }

    pub fn dg(&self, t: f64) -> Result<f64> {
        match self {
            Self::Fixed { dg, .. } => Ok(*dg),
            Self::Model(_) if t == 0.0 => Ok(0.0),
            Self::Model(model) => rates::dg(model, t),
        }
    }

    fn describe(&self, mut meta: Metadata) -> Metadata {
        match self {
            Self::Fixed { m_g, dg } => meta.param("m_g", *m_g).param("d_g", *dg),
            Self::Model(model) => {
                meta = meta.param("m_g", model.mean_rate(0.0));
                if let Some((rho_sq, tau)) = model.stationary() {
                    meta = meta.param("rho_sq", rho_sq).param("tau_g", tau);
                }
                meta.model = format!("{} [{}]", meta.model, model.name());
                meta
            }
        }
    }

    fn validity(&self, gamma: f64, t: f64) -> Option<f64> {
        match self {
            Self::Fixed { .. } => None,
            Self::Model(model) => rates::validity_parameter_at(gamma, model, t).ok(),
        }
    }
}

fn check_variance(dg: f64) -> Result<()> {
    if dg.is_finite() && dg >= 0.0 {
        Ok(())
    } else {
        domain(format!("D_g must be non-negative, got {dg}"))
    }
}

fn check_positive_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        domain(format!("horizon must be positive, got {t}"))
    }
}

/// Two-term saddle-point estimate `R(γ, μ) + R''(γ, μ) · v / 2` of `E[R(γ, G)]`
/// for `G` with mean `μ` and variance `v`.
pub fn saddle_expectation(gamma: f64, alpha: f64, mean: f64, variance: f64) -> Result<f64> {
    check_variance(variance)?;
    let r = r_function(gamma, alpha, mean)?;
    Ok(r * (1.0 + r_curvature_ratio(gamma, alpha, mean)? * variance / 2.0))
}

/// `ln E[R(γ, G_t)] ≈ ln R(γ, m_g t) + [R''/R](γ, m_g t) · D_g t / 2`.
pub fn expected_log_r(gamma: f64, alpha: f64, m_g: f64, dg: f64, t: f64) -> Result<f64> {
    check_positive_t(t)?;
    check_variance(dg)?;
    let x = m_g * t;
    Ok(ln_r_function(gamma, alpha, x)? + r_curvature_ratio(gamma, alpha, x)? * dg * t / 2.0)
}

/// `ln[R + R'' D_g t / 2]` without linearizing the logarithm.
///
/// Fails with [`Error::OutOfValidity`] when the bracket is not positive.
pub fn expected_log_r_unlinearized(
    gamma: f64,
    alpha: f64,
    m_g: f64,
    dg: f64,
    t: f64,
) -> Result<f64> {
    check_positive_t(t)?;
    check_variance(dg)?;
    let x = m_g * t;
    let factor = 1.0 + r_curvature_ratio(gamma, alpha, x)? * dg * t / 2.0;
    if factor <= 0.0 {
        return Err(Error::OutOfValidity(format!(
            "1 + (R''/R) D_g t / 2 = {factor} at t = {t}; the two-term expansion has broken down"
        )));
    }
    Ok(ln_r_function(gamma, alpha, x)? + factor.ln())
}

/// Bounded-economy discount rate at one horizon. `t = 0` is the analytic
/// limit `δ + γ m_g (1 − α) − [R''/R](γ, 0) D_g / 2`.
///
/// ```
/// # use logistic_discount::{term_structure::bounded_discount_rate, UtilityParams};
/// let u = UtilityParams::new(0.0, 2.0)?;
/// let y = bounded_discount_rate(&u, 0.1, 0.02, 0.0012, 100.0)?;
/// assert!((y - 0.029098).abs() < 1e-6);
/// # Ok::<(), logistic_discount::Error>(())
/// ```
pub fn bounded_discount_rate(
    utility: &UtilityParams,
    alpha: f64,
    m_g: f64,
    dg: f64,
    t: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_variance(dg)?;
    let gamma = utility.gamma;
    if t == 0.0 {
        return Ok(utility.delta + gamma * m_g * (1.0 - alpha)
            - r_curvature_ratio(gamma, alpha, 0.0)? * dg / 2.0);
    }
    check_positive_t(t)?;
    let x = m_g * t;
    Ok(utility.delta
        - ln_r_function(gamma, alpha, x)? / t
        - r_curvature_ratio(gamma, alpha, x)? * dg / 2.0)
}

/// Bounded-economy expected log-growth `ln E[c_t/c_0]` at one horizon.
pub fn bounded_log_growth(alpha: f64, m_g: f64, dg: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        check_alpha(alpha)?;
        return Ok(0.0);
    }
    expected_log_r(-1.0, alpha, m_g, dg, t)
}

/// Expected discount curve in the bounded economy.
///
/// A validity warning is attached when `(γ ρ_g τ_g)²` exceeds `threshold`
/// (only computable for model-based growth).
pub fn discount_curve_bounded(
    utility: &UtilityParams,
    alpha: f64,
    growth: &GrowthSpec,
    grid: &[f64],
    threshold: f64,
) -> Result<TermStructure> {
    check_alpha(alpha)?;
    validate_grid(grid, true)?;
    let rates = grid
        .iter()
        .map(|&t| bounded_discount_rate(utility, alpha, growth.m_g(t), growth.dg(t)?, t))
        .collect::<Result<Vec<_>>>()?;
    let meta = Metadata::new("bounded-saddle")
        .param("alpha", alpha)
        .param("gamma", utility.gamma)
        .param("delta", utility.delta);
    let mut meta = growth.describe(meta);
    if let Some(v) = growth.validity(utility.gamma, grid[0]) {
        meta = meta.param("validity", v);
        if v > threshold {
            meta.warn(format!(
                "validity parameter (gamma rho tau)^2 = {v:.4} exceeds {threshold}; second-order truncation is unreliable"
            ));
        }
    }
    Ok(TermStructure::new(grid.to_vec(), Some(rates), None, meta))
}

/// Expected log-growth curve in the bounded economy.
pub fn growth_curve_bounded(
    alpha: f64,
    growth: &GrowthSpec,
    grid: &[f64],
) -> Result<TermStructure> {
    check_alpha(alpha)?;
    validate_grid(grid, true)?;
    let log_growth = grid
        .iter()
        .map(|&t| bounded_log_growth(alpha, growth.m_g(t), growth.dg(t)?, t))
        .collect::<Result<Vec<_>>>()?;
    let meta = growth.describe(Metadata::new("bounded-saddle").param("alpha", alpha));
    Ok(TermStructure::new(
        grid.to_vec(),
        None,
        Some(log_growth),
        meta,
    ))
}

/// Limiting regime relative to the inflection time `t_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Short,
    Long,
}

/// An asymptotic value together with a soft regime warning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Asymptotic {
    pub value: f64,
    pub warning: Option<String>,
}

fn regime_warning(regime: Regime, alpha: f64, m_g: f64, t: f64) -> Option<String> {
    if alpha == 0.0 {
        return None;
    }
    let tc = inflection_time(alpha, m_g).ok()?;
    // "≫ 1/m_g" is enforced only as "at least one e-folding"
    let margin = match regime {
        Regime::Short => (tc - t) * m_g,
        Regime::Long => (t - tc) * m_g,
    };
    (margin < 1.0).then(|| {
        format!("t = {t} is within 1/m_g of the inflection time t_c = {tc:.2}; the {regime:?} asymptotic is unreliable")
    })
}

fn long_regime_alpha(alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return domain("the long-time asymptotic needs alpha > 0 (ln alpha is undefined)");
    }
    Ok(())
}

/// Short- or long-time asymptotic of the bounded discount curve.
pub fn asymptotic_discount(
    regime: Regime,
    utility: &UtilityParams,
    alpha: f64,
    m_g: f64,
    dg: f64,
    t: f64,
) -> Result<Asymptotic> {
    check_variance(dg)?;
    let UtilityParams { delta, gamma } = *utility;
    let value = match regime {
        Regime::Short => {
            check_alpha(alpha)?;
            let dynamic = if t == 0.0 {
                gamma * m_g * (1.0 - alpha)
            } else {
                check_positive_t(t)?;
                // γ m_g [1 − ln(1 − α + α e^{m_g t}) / (m_g t)]
                -gamma * ln_base(alpha, m_g * t) / t
            };
            delta + dynamic - gamma * gamma * dg / 2.0
        }
        Regime::Long => {
            long_regime_alpha(alpha)?;
            check_positive_t(t)?;
            delta
                - gamma * alpha.ln() / t
                - gamma * (1.0 - alpha) * dg * (-m_g * t).exp() / (2.0 * alpha)
        }
    };
    Ok(Asymptotic {
        value,
        warning: regime_warning(regime, alpha, m_g, t),
    })
}

/// Short- or long-time asymptotic of the expected log-growth.
pub fn asymptotic_growth(
    regime: Regime,
    alpha: f64,
    m_g: f64,
    dg: f64,
    t: f64,
) -> Result<Asymptotic> {
    check_variance(dg)?;
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("horizon must be non-negative, got {t}"));
    }
    let value = match regime {
        Regime::Short => {
            check_alpha(alpha)?;
            -ln_base(alpha, m_g * t) + dg * t / 2.0
        }
        Regime::Long => {
            long_regime_alpha(alpha)?;
            -alpha.ln() - dg * t / 2.0 * (1.0 - alpha) / alpha * (-m_g * t).exp()
        }
    };
    Ok(Asymptotic {
        value,
        warning: regime_warning(regime, alpha, m_g, t),
    })
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be non-negative, got {v}"))
    }
}

/// Unbounded economy, exponential-covariance model:
/// `y_∞ + γ²ρ²τ²(1 − e^{−t/τ})/t` with `y_∞ = δ + γm_g − γ²ρ²τ`.
pub fn discount_unbounded_markov(
    utility: &UtilityParams,
    m_g: f64,
    rho_sq: f64,
    tau_g: f64,
    t: f64,
) -> Result<f64> {
    check_nonneg("rho_sq", rho_sq)?;
    check_nonneg("t", t)?;
    if !(tau_g.is_finite() && tau_g > 0.0) {
        return domain(format!("tau_g must be positive, got {tau_g}"));
    }
    let UtilityParams { delta, gamma } = *utility;
    if t == 0.0 {
        return Ok(delta + gamma * m_g);
    }
    let y_inf = delta + gamma * m_g - gamma * gamma * rho_sq * tau_g;
    Ok(y_inf - gamma * gamma * rho_sq * tau_g * tau_g * (-t / tau_g).exp_m1() / t)
}

/// Long-horizon limit `δ + γm_g − γ²ρ²τ` of [`discount_unbounded_markov`].
pub fn discount_unbounded_markov_limit(
    utility: &UtilityParams,
    m_g: f64,
    rho_sq: f64,
    tau_g: f64,
) -> f64 {
    utility.delta + utility.gamma * m_g - utility.gamma * utility.gamma * rho_sq * tau_g
}

/// Unbounded economy, stationary OU model:
/// `y_∞ + γ²σ²(1 − e^{−α_g t})/(2α_g³ t)` with `y_∞ = δ + γm_g − γ²σ²/(2α_g²)`.
pub fn discount_unbounded_ou(
    utility: &UtilityParams,
    m_g: f64,
    sigma_sq: f64,
    alpha_g: f64,
    t: f64,
) -> Result<f64> {
    ou_markov_map(sigma_sq, alpha_g)?;
    check_nonneg("t", t)?;
    let UtilityParams { delta, gamma } = *utility;
    if t == 0.0 {
        return Ok(delta + gamma * m_g);
    }
    let g2s2 = gamma * gamma * sigma_sq;
    let y_inf = delta + gamma * m_g - g2s2 / (2.0 * alpha_g * alpha_g);
    Ok(y_inf - g2s2 * (-alpha_g * t).exp_m1() / (2.0 * alpha_g.powi(3) * t))
}

/// Unbounded-economy expected log-growth `m_g t + ∫₀ᵗ ρ²(t')τ_g(t') dt'`.
pub fn growth_unbounded(model: &RateModel, t: f64) -> Result<f64> {
    check_nonneg("t", t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let drift = model.mean_rate(t) * t;
    match model {
        RateModel::Constant { .. } => Ok(drift),
        RateModel::MarkovExp { .. } | RateModel::OrnsteinUhlenbeck { .. } => {
            let (rho_sq, tau) = model.stationary().expect("exponential family");
            Ok((model.mean_rate(t) + rho_sq * tau) * t)
        }
        RateModel::Custom(_) => {
            let mut failure = None;
            let integral = crate::quadrature::integrate(
                |s| match rates::effective_tau(model, s) {
                    Ok(tau) => rates::rho_sq_at(model, s) * tau,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                t,
                crate::quadrature::Tolerance::relative(1e-6),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(drift + integral.value)
        }
    }
}
