//! Models of the fluctuating intrinsic growth rate `g_t = m_g + g̃_t` and the
//! second-cumulant quantities derived from its autocovariance `q₂(t₁, t₂)`:
//!
//! * `Q₂(t) = ∫₀ᵗ∫₀ᵗ q₂(t₁, t₂) dt₁ dt₂`, the variance of `G̃_t = ∫₀ᵗ g̃`;
//! * `D_g(t) = Q₂(t) / t`, the variance rate;
//! * `ρ_g² = q₂(t, t)` and the effective autocorrelation time
//!   `τ_g(t) = (2 q₂(t,t))⁻¹ ∫ q₂(t − s/2, t + s/2) ds`.
//!
//! Ornstein–Uhlenbeck processes start from their stationary law, so under
//! [`ou_markov_map`] they are indistinguishable from the exponential-covariance
//! Markov model at second order.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::{integrate, Tolerance};

type MeanFn = dyn Fn(f64) -> f64 + Send + Sync;
type CovFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A user-supplied second-order description of `g_t`.
///
/// `mean(t)` is the de-trended average `m_g(t) = E[G_t]/t`; `covariance` is
/// `q₂(t₁, t₂)`. Both closures must be pure.
#[derive(Clone)]
pub struct CustomCovariance {
    mean: Arc<MeanFn>,
    covariance: Arc<CovFn>,
    label: String,
}

impl CustomCovariance {
    const SYMMETRY_PROBES: usize = 64;

    /// Wraps the closures after spot-checking symmetry of `covariance` on
    /// random pairs in `[0, 100]²`.
    pub fn new<M, Q>(label: impl Into<String>, mean: M, covariance: Q) -> Result<Self>
    where
        M: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        for _ in 0..Self::SYMMETRY_PROBES {
            let a = rng.random_range(0.0..100.0);
            let b = rng.random_range(0.0..100.0);
            let (ab, ba) = (covariance(a, b), covariance(b, a));
            if !(ab.is_finite() && ba.is_finite()) {
                return domain(format!("covariance is not finite at ({a}, {b})"));
            }
            if (ab - ba).abs() > 1e-12 * ab.abs().max(ba.abs()).max(f64::MIN_POSITIVE) {
                return domain(format!(
                    "covariance is not symmetric: q2({a}, {b}) = {ab}, q2({b}, {a}) = {ba}"
                ));
            }
        }
        Ok(Self {
            mean: Arc::new(mean),
            covariance: Arc::new(covariance),
            label: label.into(),
        })
    }

    pub fn mean(&self, t: f64) -> f64 {
        (self.mean)(t)
    }

    pub fn covariance(&self, t1: f64, t2: f64) -> f64 {
        (self.covariance)(t1, t2)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CustomCovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCovariance")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// Stochastic model of the intrinsic growth rate.
#[derive(Debug, Clone)]
pub enum RateModel {
    Constant {
        m_g: f64,
    },
    /// Exponential autocovariance `ρ² e^{−|Δt|/τ}`.
    MarkovExp {
        m_g: f64,
        rho_sq: f64,
        tau_g: f64,
    },
    /// Stationary OU with diffusion scale `σ²` and reversion speed `α_g`.
    OrnsteinUhlenbeck {
        m_g: f64,
        sigma_sq: f64,
        alpha_g: f64,
    },
    Custom(CustomCovariance),
}

fn check_rate(m_g: f64) -> Result<()> {
    if m_g.is_finite() {
        Ok(())
    } else {
        domain(format!("mean rate must be finite, got {m_g}"))
    }
}

impl RateModel {
    pub fn constant(m_g: f64) -> Result<Self> {
        check_rate(m_g)?;
        Ok(Self::Constant { m_g })
    }

    pub fn markov(m_g: f64, rho_sq: f64, tau_g: f64) -> Result<Self> {
        let model = Self::MarkovExp { m_g, rho_sq, tau_g };
        model.validate()?;
        Ok(model)
    }

    pub fn ornstein_uhlenbeck(m_g: f64, sigma_sq: f64, alpha_g: f64) -> Result<Self> {
        let model = Self::OrnsteinUhlenbeck {
            m_g,
            sigma_sq,
            alpha_g,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the construction invariants; needed when variants are built
    /// directly.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { m_g } => check_rate(m_g),
            Self::MarkovExp { m_g, rho_sq, tau_g } => {
                check_rate(m_g)?;
                if !(rho_sq.is_finite() && rho_sq >= 0.0) {
                    return domain(format!("rho_sq must be non-negative, got {rho_sq}"));
                }
                if !(tau_g.is_finite() && tau_g > 0.0) {
                    return domain(format!("tau_g must be positive, got {tau_g}"));
                }
                Ok(())
            }
            Self::OrnsteinUhlenbeck {
                m_g,
                sigma_sq,
                alpha_g,
            } => {
                check_rate(m_g)?;
                if !(sigma_sq.is_finite() && sigma_sq >= 0.0) {
                    return domain(format!("sigma_sq must be non-negative, got {sigma_sq}"));
                }
                if !(alpha_g.is_finite() && alpha_g > 0.0) {
                    return domain(format!("alpha_g must be positive, got {alpha_g}"));
                }
                Ok(())
            }
            Self::Custom(_) => Ok(()),
        }
    }

    /// Mean rate `m_g(t)`; constant for the built-in models.
    pub fn mean_rate(&self, t: f64) -> f64 {
        match self {
            Self::Constant { m_g }
            | Self::MarkovExp { m_g, .. }
            | Self::OrnsteinUhlenbeck { m_g, .. } => *m_g,
            Self::Custom(c) => c.mean(t),
        }
    }

    /// Stationary `(ρ², τ)` for the exponential-covariance family; `None`
    /// for the constant model and for custom kernels.
    pub fn stationary(&self) -> Option<(f64, f64)> {
        match *self {
            Self::MarkovExp { rho_sq, tau_g, .. } => Some((rho_sq, tau_g)),
            Self::OrnsteinUhlenbeck {
                sigma_sq, alpha_g, ..
            } => Some((sigma_sq / (2.0 * alpha_g), 1.0 / alpha_g)),
            Self::Constant { .. } | Self::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Constant { .. } => "constant".into(),
            Self::MarkovExp { .. } => "markov-exp".into(),
            Self::OrnsteinUhlenbeck { .. } => "ornstein-uhlenbeck".into(),
            Self::Custom(c) => format!("custom:{}", c.label()),
        }
    }
}

/// `q₂(t₁, t₂)`.
pub fn autocovariance(model: &RateModel, t1: f64, t2: f64) -> f64 {
    match model {
        RateModel::Constant { .. } => 0.0,
        RateModel::MarkovExp { .. } | RateModel::OrnsteinUhlenbeck { .. } => {
            let (rho_sq, tau) = model.stationary().expect("exponential family");
            rho_sq * (-(t1 - t2).abs() / tau).exp()
        }
        RateModel::Custom(c) => c.covariance(t1, t2),
    }
}

/// Closed-form `Q₂(t) = 2ρ²[τt − τ²(1 − e^{−t/τ})]` for the exponential kernel.
pub fn q2_closed_markov(rho_sq: f64, tau_g: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("horizon must be non-negative, got {t}"));
    }
    if !(rho_sq.is_finite() && rho_sq >= 0.0 && tau_g.is_finite() && tau_g > 0.0) {
        return domain(format!(
            "need rho_sq >= 0 and tau_g > 0, got ({rho_sq}, {tau_g})"
        ));
    }
    let u = t / tau_g;
    // u − 1 + e^{−u}, by series where the direct form cancels
    let h = if u < 1e-3 {
        u * u * (0.5 - u * (1.0 / 6.0 - u * (1.0 / 24.0 - u / 120.0)))
    } else {
        u + (-u).exp_m1()
    };
    Ok(2.0 * rho_sq * tau_g * tau_g * h)
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        domain(format!("horizon must be positive, got {t}"))
    }
}

/// `Q₂(t)` by nested adaptive quadrature of the autocovariance over `[0, t]²`.
///
/// The inner integral is split on the diagonal where stationary kernels have a
/// kink.
pub fn q2_numeric(model: &RateModel, t: f64, rel_tol: f64) -> Result<f64> {
    check_horizon(t)?;
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return domain(format!("rel_tol must lie in (0, 1e-3], got {rel_tol}"));
    }
    if let RateModel::Constant { .. } = model {
        return Ok(0.0);
    }
    let budget = Tolerance::DEFAULT_BUDGET;
    let inner_tol = Tolerance {
        abs: 0.0,
        rel: rel_tol * 1e-2,
        max_evaluations: budget,
    };
    let mut used = 0usize;
    let mut failure = None;
    let outer = {
        let mut inner = |t1: f64| -> f64 {
            if failure.is_some() {
                return 0.0;
            }
            let mut sum = 0.0;
            for (a, b) in [(0.0, t1), (t1, t)] {
                match integrate(|t2| autocovariance(model, t1, t2), a, b, inner_tol) {
                    Ok(r) => {
                        used += r.evaluations;
                        sum += r.value;
                    }
                    Err(e) => {
                        failure = Some(e);
                        return 0.0;
                    }
                }
            }
            sum
        };
        integrate(&mut inner, 0.0, t, Tolerance::relative(rel_tol))
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    if used + outer.evaluations > budget {
        return Err(crate::Error::NoConvergence {
            evaluations: used + outer.evaluations,
            estimated_error: outer.error,
        });
    }
    Ok(outer.value)
}

/// `Q₂(t)` by the cheapest available route.
pub fn q2(model: &RateModel, t: f64) -> Result<f64> {
    match model {
        RateModel::Constant { .. } => Ok(0.0),
        RateModel::MarkovExp { .. } | RateModel::OrnsteinUhlenbeck { .. } => {
            let (rho_sq, tau) = model.stationary().expect("exponential family");
            q2_closed_markov(rho_sq, tau, t)
        }
        RateModel::Custom(_) => q2_numeric(model, t, Tolerance::DEFAULT_REL),
    }
}

/// Variance rate `D_g(t) = Q₂(t)/t`.
pub fn dg(model: &RateModel, t: f64) -> Result<f64> {
    check_horizon(t)?;
    Ok(q2(model, t)? / t)
}

/// Effective autocorrelation time `τ_g(t)`.
pub fn effective_tau(model: &RateModel, t: f64) -> Result<f64> {
    match model {
        RateModel::Constant { .. } => {
            domain("autocorrelation time is undefined for a constant rate")
        }
        RateModel::MarkovExp { tau_g, .. } => Ok(*tau_g),
        RateModel::OrnsteinUhlenbeck { alpha_g, .. } => Ok(1.0 / alpha_g),
        RateModel::Custom(c) => {
            let kernel = |s: f64| c.covariance(t - 0.5 * s, t + 0.5 * s);
            let peak = kernel(0.0);
            if !(peak.is_finite() && peak > 0.0) {
                return domain(format!("q2({t}, {t}) must be positive, got {peak}"));
            }
            // widen the window until the kernel falls below 1e-12 of its peak on both sides
            let cutoff = 1e-12 * peak;
            let mut half_width = 1.0;
            let mut widenings = 0;
            while kernel(half_width).abs() > cutoff || kernel(-half_width).abs() > cutoff {
                half_width *= 2.0;
                widenings += 1;
                if widenings > 60 {
                    return domain("covariance kernel does not decay; effective tau is unbounded");
                }
            }
            let tol = Tolerance::relative(Tolerance::DEFAULT_REL);
            let left = integrate(kernel, -half_width, 0.0, tol)?;
            let right = integrate(kernel, 0.0, half_width, tol)?;
            Ok((left.value + right.value) / (2.0 * peak))
        }
    }
}

/// `ρ_g(t)² = q₂(t, t)`.
pub fn rho_sq_at(model: &RateModel, t: f64) -> f64 {
    autocovariance(model, t, t)
}

/// Perturbation-validity parameter `(γ ρ_g τ_g)²` for a stationary model.
pub fn validity_parameter(gamma: f64, model: &RateModel) -> Result<f64> {
    match model {
        RateModel::Constant { .. } => Ok(0.0),
        RateModel::MarkovExp { .. } | RateModel::OrnsteinUhlenbeck { .. } => {
            let (rho_sq, tau) = model.stationary().expect("exponential family");
            Ok(validity_from(gamma, rho_sq, tau))
        }
        RateModel::Custom(_) => {
            domain("custom covariance needs a reference time; use validity_parameter_at")
        }
    }
}

/// `(γ ρ_g(t) τ_g(t))²` at a reference time.
pub fn validity_parameter_at(gamma: f64, model: &RateModel, t: f64) -> Result<f64> {
    match model {
        RateModel::Custom(_) => Ok(validity_from(
            gamma,
            rho_sq_at(model, t),
            effective_tau(model, t)?,
        )),
        _ => validity_parameter(gamma, model),
    }
}

pub fn validity_from(gamma: f64, rho_sq: f64, tau_g: f64) -> f64 {
    gamma * gamma * rho_sq * tau_g * tau_g
}

/// Maps OU parameters `(σ², α_g)` to the Markov pair `(ρ², τ_g) = (σ²/2α_g, 1/α_g)`.
pub fn ou_markov_map(sigma_sq: f64, alpha_g: f64) -> Result<(f64, f64)> {
    if !(alpha_g.is_finite() && alpha_g > 0.0) {
        return domain(format!("alpha_g must be positive, got {alpha_g}"));
    }
    if !(sigma_sq.is_finite() && sigma_sq >= 0.0) {
        return domain(format!("sigma_sq must be non-negative, got {sigma_sq}"));
    }
    Ok((sigma_sq / (2.0 * alpha_g), 1.0 / alpha_g))
}

/// Second-order summary of `G̃_t` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantSummary {
    pub t: f64,
    pub q2: f64,
    pub dg: f64,
    pub rho_g: f64,
    pub tau_g: f64,
}

pub fn cumulant_summary(model: &RateModel, t: f64) -> Result<CumulantSummary> {
    let q2 = q2(model, t)?;
    let tau_g = match model {
        RateModel::Constant { .. } => 0.0,
        _ => effective_tau(model, t)?,
    };
    Ok(CumulantSummary {
        t,
        q2,
        dg: q2 / t,
        rho_g: rho_sq_at(model, t).sqrt(),
        tau_g,
    })
}
