//! Consumption data: loading, moments, trend, diagnostics and the
//! 1949 → 2009 forecast calibration.
//!
//! Year conventions: an increment is labelled by its terminal year, so the
//! window `1890..=1949` covers `c_1889 → c_1949` (60 increments).

use std::io::Read;
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Error, Result};
use crate::logistic::{check_alpha, inflection_time, UtilityParams};
use crate::montecarlo::pairwise_sum;
use crate::rates::validity_from;
use crate::term_structure::discount_unbounded_markov_limit;

const BUNDLED: &str = include_str!("../data/us_consumption_1889_2009.csv");

/// Label echoed in every moment report.
pub const MOMENT_ESTIMATORS: &str =
    "mean; unbiased (n-1) variance; adjusted Fisher-Pearson skewness G1; adjusted excess kurtosis G2";
/// Label echoed in every diagnostics report.
pub const DIAGNOSTIC_ESTIMATORS: &str =
    "Jarque-Bera with population (biased) g1, g2 and chi2(2) p-value; Box-Pierce n*sum(r_k^2) with chi2(lags) p-value";

/// Consecutive annual consumption levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsumptionSeries {
    years: Vec<i32>,
    levels: Vec<f64>,
}

impl ConsumptionSeries {
    /// Validates consecutive years and positive levels.
    pub fn new(years: Vec<i32>, levels: Vec<f64>) -> Result<Self> {
        if years.len() != levels.len() {
            return domain("years and levels differ in length");
        }
        if years.len() < 2 {
            return Err(Error::InsufficientSample {
                needed: 2,
                given: years.len(),
            });
        }
        for i in 0..years.len() {
            if !(levels[i].is_finite() && levels[i] > 0.0) {
                return Err(Error::NonPositiveLevel {
                    year: years[i],
                    level: levels[i],
                });
            }
            if i > 0 {
                check_successor(years[i - 1], years[i])?;
            }
        }
        Ok(Self { years, levels })
    }

    /// Reads `year,consumption` CSV; `#` lines are comments.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_error(0, e))?.clone();
        let line = rdr.position().line();
        if header.len() != 2 || &header[0] != "year" || &header[1] != "consumption" {
            return Err(Error::Parse {
                line: line as usize,
                message: format!(
                    "expected header `year,consumption`, got `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let (mut years, mut levels) = (Vec::new(), Vec::new());
        for record in rdr.records() {
            let record = record.map_err(|e| parse_error(0, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, got {}", record.len()),
                });
            }
            let year: i32 = record[0].parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid year `{}`", &record[0]),
            })?;
            let level: f64 = record[1].parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid consumption `{}`", &record[1]),
            })?;
            if let Some(&prev) = years.last() {
                check_successor(prev, year)?;
            }
            if !(level.is_finite() && level > 0.0) {
                return Err(Error::NonPositiveLevel { year, level });
            }
            years.push(year);
            levels.push(level);
        }
        Self::new(years, levels)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// The bundled 1889–2009 series.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes()).expect("bundled fixture is valid")
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn first_year(&self) -> i32 {
        self.years[0]
    }

    pub fn last_year(&self) -> i32 {
        *self.years.last().expect("non-empty")
    }

    pub fn level(&self, year: i32) -> Result<f64> {
        let i = year - self.first_year();
        if i < 0 || i as usize >= self.len() {
            return domain(format!(
                "year {year} outside {}..={}",
                self.first_year(),
                self.last_year()
            ));
        }
        Ok(self.levels[i as usize])
    }
}

fn check_successor(prev: i32, year: i32) -> Result<()> {
    if year <= prev {
        Err(Error::DuplicateYear(year))
    } else if year > prev + 1 {
        Err(Error::MissingYear(prev + 1))
    } else {
        Ok(())
    }
}

fn parse_error(line: usize, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Annual log-increments `ln(c_t / c_{t−1})`, labelled by `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Increments {
    pub years: Vec<i32>,
    pub values: Vec<f64>,
}

impl Increments {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Increments whose terminal year lies in `start..=end`.
    pub fn window(&self, start: i32, end: i32) -> Result<Increments> {
        let (years, values): (Vec<i32>, Vec<f64>) = self
            .years
            .iter()
            .zip(&self.values)
            .filter(|(y, _)| (start..=end).contains(*y))
            .unzip();
        if years.is_empty() {
            return domain(format!("window {start}..={end} contains no increments"));
        }
        Ok(Increments { years, values })
    }
}

pub fn log_increments(series: &ConsumptionSeries) -> Increments {
    let values = series
        .levels
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    Increments {
        years: series.years[1..].to_vec(),
        values,
    }
}

/// Sample moments of the log-increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub m_g: f64,
    pub rho_sq: f64,
    /// `None` for a zero-variance sample.
    pub skewness: Option<f64>,
    /// `None` below four observations or for zero variance.
    pub excess_kurtosis: Option<f64>,
    pub n: usize,
    pub window: (i32, i32),
    /// Variance is zero up to rounding.
    pub degenerate: bool,
    pub estimators: String,
}

fn central_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    let power =
        |k: i32| pairwise_sum(&x.iter().map(|v| (v - mean).powi(k)).collect::<Vec<_>>()) / n;
    (mean, power(2), power(3), power(4))
}

/// Mean, unbiased variance and adjusted skewness / excess kurtosis, optionally
/// restricted to increments ending in `window`.
pub fn estimate_moments(
    increments: &Increments,
    window: Option<(i32, i32)>,
) -> Result<MomentEstimates> {
    let inc = match window {
        Some((a, b)) => increments.window(a, b)?,
        None => increments.clone(),
    };
    let x = &inc.values;
    if x.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            given: x.len(),
        });
    }
    let n = x.len() as f64;
    let (mean, m2, m3, m4) = central_moments(x);
    let degenerate = m2 <= f64::EPSILON * mean * mean;
    let skewness = if degenerate {
        None
    } else if x.len() == 2 {
        // any two points are symmetric about their mean
        Some(0.0)
    } else {
        let g1 = m3 / m2.powf(1.5);
        Some(g1 * (n * (n - 1.0)).sqrt() / (n - 2.0))
    };
    let excess_kurtosis = if degenerate || x.len() < 4 {
        None
    } else {
        let g2 = m4 / (m2 * m2) - 3.0;
        Some(((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0)))
    };
    Ok(MomentEstimates {
        m_g: mean,
        rho_sq: m2 * n / (n - 1.0),
        skewness,
        excess_kurtosis,
        n: x.len(),
        window: (inc.years[0], *inc.years.last().expect("non-empty")),
        degenerate,
        estimators: MOMENT_ESTIMATORS.to_string(),
    })
}

/// Trailing-window unbiased variance, one value per terminal year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingVariance {
    pub window: usize,
    pub years: Vec<i32>,
    pub values: Vec<f64>,
}

pub fn rolling_variance(increments: &Increments, window: usize) -> Result<RollingVariance> {
    if window < 2 || window > increments.len() {
        return domain(format!(
            "window {window} must lie in 2..={}",
            increments.len()
        ));
    }
    let values = increments
        .values
        .windows(window)
        .map(|w| {
            let (_, m2, _, _) = central_moments(w);
            m2 * window as f64 / (window as f64 - 1.0)
        })
        .collect();
    Ok(RollingVariance {
        window,
        years: increments.years[window - 1..].to_vec(),
        values,
    })
}

/// OLS fit `ln c = intercept + slope · (year − origin_year)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub origin_year: i32,
    pub convention: String,
}

impl TrendFit {
    pub fn predict(&self, year: i32) -> f64 {
        self.intercept + self.slope * f64::from(year - self.origin_year)
    }
}

pub fn fit_log_trend(series: &ConsumptionSeries) -> Result<TrendFit> {
    let origin = series.first_year();
    let x: Vec<f64> = series
        .years
        .iter()
        .map(|&y| f64::from(y - origin))
        .collect();
    let y: Vec<f64> = series.levels.iter().map(|c| c.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (pairwise_sum(&x) / n, pairwise_sum(&y) / n);
    let sxx = pairwise_sum(&x.iter().map(|v| (v - mx) * (v - mx)).collect::<Vec<_>>());
    let sxy = pairwise_sum(
        &x.iter()
            .zip(&y)
            .map(|(a, b)| (a - mx) * (b - my))
            .collect::<Vec<_>>(),
    );
    let syy = pairwise_sum(&y.iter().map(|v| (v - my) * (v - my)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return domain("degenerate series: no spread in years");
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(TrendFit {
        intercept: my - slope * mx,
        slope,
        r_squared,
        origin_year: origin,
        convention: format!("ln c = intercept + slope * (year - {origin})"),
    })
}

/// Result of inverting the long-horizon growth law on a split sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauCalibration {
    pub split_year: i32,
    pub target_year: i32,
    pub moments: MomentEstimates,
    /// Realized mean growth between split and target years.
    pub realized_rate: f64,
    pub tau_g: f64,
    /// `(γ ρ̂ τ̂)²` for the supplied γ.
    pub validity: f64,
    /// Zero-variance sample that also grew at exactly `m̂_g`.
    pub degenerate: bool,
}

/// `τ̂ = [ln(c_target / c_split)/(target − split) − m̂_g] / ρ̂²`, with moments
/// from increments ending at or before `split_year`.
pub fn calibrate_tau(
    series: &ConsumptionSeries,
    split_year: i32,
    target_year: i32,
    gamma: f64,
) -> Result<TauCalibration> {
    if target_year <= split_year {
        return domain(format!(
            "target year {target_year} must follow split year {split_year}"
        ));
    }
    let c_split = series.level(split_year)?;
    let c_target = series.level(target_year)?;
    let moments = estimate_moments(
        &log_increments(series),
        Some((series.first_year() + 1, split_year)),
    )?;
    let realized_rate = (c_target / c_split).ln() / f64::from(target_year - split_year);
    let excess = realized_rate - moments.m_g;
    let scale = moments
        .m_g
        .abs()
        .max(realized_rate.abs())
        .max(f64::MIN_POSITIVE);
    let (tau_g, degenerate) = if moments.degenerate {
        if excess.abs() > 1e-9 * scale {
            return Err(Error::ModelMismatch(format!(
                "zero sample variance before {split_year} cannot explain excess growth {excess:e}"
            )));
        }
        (0.0, true)
    } else {
        (excess / moments.rho_sq, false)
    };
    if tau_g < 0.0 {
        return Err(Error::ModelMismatch(format!(
            "consumption grew at {realized_rate:.5}/year, slower than the pre-{split_year} mean {:.5}; tau would be {tau_g:.3}",
            moments.m_g
        )));
    }
    let validity = validity_from(gamma, moments.rho_sq, tau_g);
    Ok(TauCalibration {
        split_year,
        target_year,
        moments,
        realized_rate,
        tau_g,
        validity,
        degenerate,
    })
}

/// `c_base · exp(m_g T)`, or `c_base · exp((m_g + ρ²τ) T)` with the
/// fluctuation correction.
pub fn forecast_consumption(
    c_base: f64,
    m_g: f64,
    rho_sq: f64,
    tau_g: f64,
    horizon: f64,
    with_correction: bool,
) -> Result<f64> {
    if !(c_base.is_finite() && c_base > 0.0) {
        return domain(format!("base level must be positive, got {c_base}"));
    }
    if !(rho_sq >= 0.0 && tau_g >= 0.0 && horizon >= 0.0 && m_g.is_finite()) {
        return domain("forecast needs rho_sq, tau_g, horizon >= 0 and finite m_g");
    }
    let rate = if with_correction {
        m_g + rho_sq * tau_g
    } else {
        m_g
    };
    Ok(c_base * (rate * horizon).exp())
}

/// Statistic and upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub stat: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub jarque_bera: TestResult,
    pub box_pierce: TestResult,
    pub lags: usize,
    pub estimators: String,
}

/// `n [S²/6 + K²/24]`.
pub fn jarque_bera_statistic(n: usize, skewness: f64, excess_kurtosis: f64) -> f64 {
    n as f64 * (skewness * skewness / 6.0 + excess_kurtosis * excess_kurtosis / 24.0)
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .sf(stat)
}

/// Default Box–Pierce lag count `min(10, n/5)`.
pub fn default_lags(n: usize) -> usize {
    (n / 5).clamp(1, 10)
}

/// Jarque–Bera normality and Box–Pierce independence tests.
pub fn diagnostics(increments: &Increments, lags: Option<usize>) -> Result<Diagnostics> {
    let x = &increments.values;
    let n = x.len();
    if n < 8 {
        return Err(Error::InsufficientSample {
            needed: 8,
            given: n,
        });
    }
    let lags = lags.unwrap_or_else(|| default_lags(n));
    if lags == 0 || lags >= n {
        return domain(format!("Box-Pierce lags must lie in 1..{n}, got {lags}"));
    }
    let (mean, m2, m3, m4) = central_moments(x);
    if m2 <= f64::EPSILON * mean * mean {
        return domain("zero-variance increments; diagnostics are degenerate");
    }
    let jb = jarque_bera_statistic(n, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0);
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom = m2 * n as f64;
    let q = n as f64
        * (1..=lags)
            .map(|k| {
                let r = pairwise_sum(
                    &d.iter()
                        .zip(&d[k..])
                        .map(|(a, b)| a * b)
                        .collect::<Vec<_>>(),
                ) / denom;
                r * r
            })
            .sum::<f64>();
    Ok(Diagnostics {
        jarque_bera: TestResult {
            stat: jb,
            p: chi2_sf(jb, 2),
        },
        box_pierce: TestResult {
            stat: q,
            p: chi2_sf(q, lags),
        },
        lags,
        estimators: DIAGNOSTIC_ESTIMATORS.to_string(),
    })
}

/// Inflection time with the rule of thumb `ln(1/α)/m_g` beside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TcEstimate {
    pub t_c: f64,
    pub rule_of_thumb: f64,
}

pub fn estimate_tc(m_g: f64, alpha: f64) -> Result<TcEstimate> {
    check_alpha(alpha)?;
    Ok(TcEstimate {
        t_c: inflection_time(alpha, m_g)?,
        rule_of_thumb: (1.0 / alpha).ln() / m_g,
    })
}

/// Long-run unbounded discount rate and its precautionary reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpliedRate {
    pub y_infinity: f64,
    pub ramsey: f64,
    pub jensen_reduction: f64,
}

pub fn implied_long_run_rate(
    utility: &UtilityParams,
    m_g: f64,
    rho_sq: f64,
    tau_g: f64,
) -> ImpliedRate {
    let y = discount_unbounded_markov_limit(utility, m_g, rho_sq, tau_g);
    let ramsey = utility.delta + utility.gamma * m_g;
    ImpliedRate {
        y_infinity: y,
        ramsey,
        jensen_reduction: ramsey - y,
    }
}
