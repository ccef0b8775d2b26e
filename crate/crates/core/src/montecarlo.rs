//! Monte-Carlo and quadrature oracles for `E[R(γ, G_t)]`.
//!
//! Paths of the stationary Gaussian rate are drawn with the exact AR(1)
//! transition, so the only discretization left is the trapezoid rule used to
//! accumulate `G_t`. Path `i` always consumes ChaCha8 stream `i` of the seed,
//! which makes an ensemble independent of the thread count.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::logistic::{check_alpha, ln_r_function, r_function, UtilityParams};
use crate::quadrature::GaussHermite;
use crate::rates::{self, RateModel};
use crate::term_structure::{bounded_discount_rate, validate_grid};

/// Smallest ensemble accepted by [`empirical_cumulants`].
pub const MIN_CUMULANT_PATHS: usize = 10_000;
pub const DEFAULT_PATHS: usize = 100_000;

/// Simulation knobs. `dt: None` picks `min(τ/20, 0.25)`.
#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub dt: Option<f64>,
    /// Start every path at `g̃ = 0` instead of the stationary law.
    pub zero_start: bool,
    /// Accept `dt > τ/10`.
    pub allow_coarse_dt: bool,
    /// Also keep `g̃` at each horizon.
    pub record_rates: bool,
}

/// Realizations of `G_t` (and optionally `g̃_t`) on a horizon grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub dt: f64,
    pub horizons: Vec<f64>,
    pub seed: u64,
    // horizon-major: samples[h * n_paths + path]
    samples: Vec<f64>,
    rates: Option<Vec<f64>>,
}

impl PathEnsemble {
    /// All realizations of `G_t` at horizon index `h`, ordered by path.
    pub fn samples(&self, h: usize) -> &[f64] {
        &self.samples[h * self.n_paths..(h + 1) * self.n_paths]
    }

    /// Recorded `g̃_t` at horizon index `h`, if requested.
    pub fn rates(&self, h: usize) -> Option<&[f64]> {
        self.rates
            .as_ref()
            .map(|r| &r[h * self.n_paths..(h + 1) * self.n_paths])
    }

    /// Writes `path_id,horizon_years,G_t` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "horizon_years", "G_t"])
            .map_err(csv_error)?;
        for p in 0..self.n_paths {
            for (h, t) in self.horizons.iter().enumerate() {
                w.write_record([p.to_string(), t.to_string(), self.samples(h)[p].to_string()])
                    .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

fn step_indices(horizons: &[f64], dt: f64) -> Result<Vec<usize>> {
    horizons
        .iter()
        .map(|&t| {
            let k = (t / dt).round();
            if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
                domain(format!("horizon {t} is not a multiple of dt = {dt}"))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

/// Simulates `n_paths` paths of the accumulated growth `G_t = m_g t + G̃_t`.
///
/// Rates start from the stationary law unless `zero_start` is set. Each path
/// owns a ChaCha8 stream derived from `seed`, so the ensemble does not depend
/// on the rayon pool size.
///
/// ```
/// # use logistic_discount::{montecarlo::*, RateModel};
/// let model = RateModel::ornstein_uhlenbeck(0.02, 0.0024, 1.0)?;
/// let e = simulate_paths(&model, 500, &[1.0, 5.0], 3, &SimulationOptions::default())?;
/// assert_eq!(e.samples(0).len(), 500);
/// # Ok::<(), logistic_discount::Error>(())
/// ```
pub fn simulate_paths(
    model: &RateModel,
    n_paths: usize,
    horizons: &[f64],
    seed: u64,
    options: &SimulationOptions,
) -> Result<PathEnsemble> {
    model.validate()?;
    validate_grid(horizons, false)?;
    if n_paths == 0 {
        return domain("n_paths must be positive");
    }
    let (m_g, rho_sq, tau) = match *model {
        RateModel::Constant { m_g } => (m_g, 0.0, f64::INFINITY),
        RateModel::MarkovExp { m_g, .. } | RateModel::OrnsteinUhlenbeck { m_g, .. } => {
            let (rho_sq, tau) = model.stationary().expect("exponential family");
            (m_g, rho_sq, tau)
        }
        RateModel::Custom(_) => {
            return Err(Error::ModelMismatch(format!(
            "{} cannot be simulated; only constant, markov-exp and ornstein-uhlenbeck models are",
            model.name()
        )))
        }
    };
    let dt = options.dt.unwrap_or((tau / 20.0).min(0.25));
    if !(dt.is_finite() && dt > 0.0) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    if dt > tau / 10.0 && !options.allow_coarse_dt {
        return domain(format!(
            "dt = {dt} exceeds tau/10 = {}; pass allow_coarse_dt to override",
            tau / 10.0
        ));
    }
    let steps = step_indices(horizons, dt)?;
    let n_h = horizons.len();

    if rho_sq == 0.0 {
        let samples = horizons
            .iter()
            .flat_map(|&t| std::iter::repeat_n(m_g * t, n_paths))
            .collect();
        let rates = options.record_rates.then(|| vec![0.0; n_h * n_paths]);
        return Ok(PathEnsemble {
            n_paths,
            dt,
            horizons: horizons.to_vec(),
            seed,
            samples,
            rates,
        });
    }

    let phi = (-dt / tau).exp();
    let innovation = (rho_sq * -(-2.0 * dt / tau).exp_m1()).sqrt();
    let rho = rho_sq.sqrt();
    let last = *steps.last().expect("non-empty grid");

    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x: f64 = if options.zero_start {
                0.0
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                rho * z
            };
            let mut integral = 0.0;
            let mut out_g = Vec::with_capacity(n_h);
            let mut out_x = Vec::with_capacity(if options.record_rates { n_h } else { 0 });
            let mut next = 0;
            for k in 0..=last {
                while next < n_h && steps[next] == k {
                    out_g.push(m_g * horizons[next] + integral);
                    if options.record_rates {
                        out_x.push(x);
                    }
                    next += 1;
                }
                if k == last {
                    break;
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                let x_next = phi * x + innovation * z;
                integral += 0.5 * (x + x_next) * dt;
                x = x_next;
            }
            (out_g, out_x)
        })
        .collect();

    let mut samples = vec![0.0; n_h * n_paths];
    let mut rates = options.record_rates.then(|| vec![0.0; n_h * n_paths]);
    for (p, (g, x)) in paths.into_iter().enumerate() {
        for h in 0..n_h {
            samples[h * n_paths + p] = g[h];
            if let Some(r) = rates.as_mut() {
                r[h * n_paths + p] = x[h];
            }
        }
    }
    Ok(PathEnsemble {
        n_paths,
        dt,
        horizons: horizons.to_vec(),
        seed,
        samples,
        rates,
    })
}

/// Pairwise (cascade) summation; the tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Monte-Carlo estimates at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McPoint {
    pub t: f64,
    /// Sample mean of `R(γ, G_t)`.
    pub expected_r: f64,
    pub se: f64,
    /// `δ − ln(expected_r) / t`.
    pub rate: f64,
    /// Delta-method standard error of `rate`.
    pub rate_se: f64,
    /// `ln` of the sample mean of `c_t / c_0`.
    pub log_growth: f64,
    pub log_growth_se: f64,
}

/// Sample means of `R(γ, G_t)` and `c_t/c_0` with their standard errors.
pub fn mc_expected_r(
    utility: &UtilityParams,
    alpha: f64,
    ensemble: &PathEnsemble,
) -> Result<Vec<McPoint>> {
    check_alpha(alpha)?;
    ensemble
        .horizons
        .iter()
        .enumerate()
        .map(|(h, &t)| {
            let g = ensemble.samples(h);
            let r: Vec<f64> = g
                .iter()
                .map(|&x| r_function(utility.gamma, alpha, x))
                .collect::<Result<_>>()?;
            let c: Vec<f64> = g
                .iter()
                .map(|&x| r_function(-1.0, alpha, x))
                .collect::<Result<_>>()?;
            let (expected_r, se) = mean_and_se(&r);
            let (growth, growth_se) = mean_and_se(&c);
            Ok(McPoint {
                t,
                expected_r,
                se,
                rate: utility.delta - expected_r.ln() / t,
                rate_se: se / (expected_r * t),
                log_growth: growth.ln(),
                log_growth_se: growth_se / growth,
            })
        })
        .collect()
}

/// `E[R(γ, X)]` for `X ~ N(mean, variance)` by Gauss–Hermite quadrature.
pub fn quadrature_expected_r(
    gamma: f64,
    alpha: f64,
    mean: f64,
    variance: f64,
    nodes: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    if !(variance.is_finite() && variance >= 0.0) {
        return domain(format!("variance must be non-negative, got {variance}"));
    }
    let rule = GaussHermite::new(nodes)?;
    if variance == 0.0 {
        return r_function(gamma, alpha, mean);
    }
    // factor out R at the mean so large |γ·mean| neither overflows nor underflows
    let ln_center = ln_r_function(gamma, alpha, mean)?;
    let scaled = rule.expectation(mean, variance, |x| {
        ln_r_function(gamma, alpha, x).map_or(f64::NAN, |v| (v - ln_center).exp())
    });
    if !scaled.is_finite() {
        return domain(format!(
            "quadrature of R({gamma}, ·) over N({mean}, {variance}) is not finite"
        ));
    }
    Ok(scaled * ln_center.exp())
}

/// Unbiased k-statistics with leave-one-out jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KStatistics {
    pub t: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q2_se: f64,
    pub q3_se: f64,
    pub q4_se: f64,
}

fn k_stats(n: f64, m2: f64, m3: f64, m4: f64) -> [f64; 3] {
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    let k4 =
        n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    [k2, k3, k4]
}

/// k-statistics of a sample with jackknife errors.
pub fn k_statistics(xs: &[f64]) -> Result<[(f64, f64); 3]> {
    if xs.len() < 5 {
        return Err(Error::InsufficientSample {
            needed: 5,
            given: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let a = pairwise_sum(xs) / n;
    let d: Vec<f64> = xs.iter().map(|x| x - a).collect();
    let power = |k: i32| pairwise_sum(&d.iter().map(|v| v.powi(k)).collect::<Vec<_>>());
    let (s1, s2, s3, s4) = (power(1), power(2), power(3), power(4));
    let central = |n: f64, s1: f64, s2: f64, s3: f64, s4: f64| {
        let mu = s1 / n;
        let (e2, e3, e4) = (s2 / n, s3 / n, s4 / n);
        let m2 = e2 - mu * mu;
        let m3 = e3 - 3.0 * mu * e2 + 2.0 * mu.powi(3);
        let m4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu.powi(4);
        k_stats(n, m2, m3, m4)
    };
    let full = central(n, s1, s2, s3, s4);
    let loo: Vec<[f64; 3]> = d
        .iter()
        .map(|&v| central(n - 1.0, s1 - v, s2 - v * v, s3 - v.powi(3), s4 - v.powi(4)))
        .collect();
    let mut out = [(0.0, 0.0); 3];
    for j in 0..3 {
        let col: Vec<f64> = loo.iter().map(|k| k[j]).collect();
        let mean = pairwise_sum(&col) / n;
        let ss = pairwise_sum(
            &col.iter()
                .map(|v| (v - mean) * (v - mean))
                .collect::<Vec<_>>(),
        );
        out[j] = (full[j], ((n - 1.0) / n * ss).sqrt());
    }
    Ok(out)
}

/// Sample cumulants `Q̂₂, Q̂₃, Q̂₄` of `G_t` at every horizon.
pub fn empirical_cumulants(ensemble: &PathEnsemble) -> Result<Vec<KStatistics>> {
    if ensemble.n_paths < MIN_CUMULANT_PATHS {
        return Err(Error::InsufficientSample {
            needed: MIN_CUMULANT_PATHS,
            given: ensemble.n_paths,
        });
    }
    ensemble
        .horizons
        .iter()
        .enumerate()
        .map(|(h, &t)| {
            let [(q2, q2_se), (q3, q3_se), (q4, q4_se)] = k_statistics(ensemble.samples(h))?;
            Ok(KStatistics {
                t,
                q2,
                q3,
                q4,
                q2_se,
                q3_se,
                q4_se,
            })
        })
        .collect()
}

/// Absolute slack (per year) for comparisons whose bound is otherwise zero.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// One row of a three-way oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRow {
    pub t: f64,
    pub y_saddle: f64,
    pub y_quadrature: f64,
    pub y_mc: f64,
    pub y_mc_se: f64,
    pub gap_mc_quadrature: f64,
    pub gap_saddle_mc: f64,
    pub gap_saddle_quadrature: f64,
    /// `max(3 SE, factor · (γρτ)² · |y_mc|, ROUNDING_FLOOR)`.
    pub saddle_bound: f64,
    pub agree: bool,
}

/// Saddle point vs. Gauss–Hermite vs. Monte Carlo discount rates.
///
/// A row agrees when `|y_mc − y_quadrature| ≤ max(3 SE, ROUNDING_FLOOR)` and
/// `|y_saddle − y_mc| ≤ saddle_bound`.
pub fn compare_oracles(
    utility: &UtilityParams,
    alpha: f64,
    model: &RateModel,
    ensemble: &PathEnsemble,
    bound_factor: f64,
) -> Result<Vec<OracleRow>> {
    let validity = rates::validity_parameter(utility.gamma, model)?;
    let mc = mc_expected_r(utility, alpha, ensemble)?;
    mc.iter()
        .map(|p| {
            let t = p.t;
            let q2 = rates::q2(model, t)?;
            let m_g = model.mean_rate(t);
            let y_saddle = bounded_discount_rate(utility, alpha, m_g, q2 / t, t)?;
            let er = quadrature_expected_r(
                utility.gamma,
                alpha,
                m_g * t,
                q2,
                GaussHermite::DEFAULT_NODES,
            )?;
            let y_quadrature = utility.delta - er.ln() / t;
            let noise_bound = (3.0 * p.rate_se).max(ROUNDING_FLOOR);
            let saddle_bound = noise_bound.max(bound_factor * validity * p.rate.abs());
            let gap_mc_quadrature = (p.rate - y_quadrature).abs();
            let gap_saddle_mc = (y_saddle - p.rate).abs();
            Ok(OracleRow {
                t,
                y_saddle,
                y_quadrature,
                y_mc: p.rate,
                y_mc_se: p.rate_se,
                gap_mc_quadrature,
                gap_saddle_mc,
                gap_saddle_quadrature: (y_saddle - y_quadrature).abs(),
                saddle_bound,
                agree: gap_mc_quadrature <= noise_bound && gap_saddle_mc <= saddle_bound,
            })
        })
        .collect()
}
