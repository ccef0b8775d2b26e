//! Command-line front end.
//!
//! Every output carries the fully resolved configuration (as a `# config:`
//! line in CSV, or a `config` object in JSON). Passing that file back through
//! `--config` reproduces the output byte for byte.
//!
//! Exit codes: 0 success, 2 input or parameter error, 3 validity hard-fail,
//! 4 oracle disagreement.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::empirics::{
    calibrate_tau, diagnostics, estimate_moments, fit_log_trend, forecast_consumption,
    implied_long_run_rate, log_increments, rolling_variance, ConsumptionSeries,
};
use crate::error::{domain, Error, Result};
use crate::logistic::{deterministic_discount_rate, ln_r_function, UtilityParams};
use crate::montecarlo::{compare_oracles, simulate_paths, SimulationOptions, DEFAULT_PATHS};
use crate::rates::{ou_markov_map, validity_from, RateModel};
use crate::term_structure::{
    asymptotic_discount, asymptotic_growth, discount_curve_bounded, discount_unbounded_markov,
    discount_unbounded_ou, growth_curve_bounded, growth_unbounded, uniform_grid, GrowthSpec,
    Regime, DEFAULT_VALIDITY_THRESHOLD,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

const VERSION: &str = concat!("logistic-discount ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "logistic-discount",
    version,
    about = "Discount-rate term structures for a bounded, fluctuating economy"
)]
struct Cli {
    /// JSON config, or a previous output file; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discount-rate and expected-growth term structure.
    Curve(Run),
    /// Moments, trend, tau calibration and diagnostics of a consumption series.
    Calibrate(Run),
    /// Saddle point vs. quadrature vs. Monte Carlo.
    Validate(Run),
    /// Plot-ready CSVs for the consumption figures and the discount-curve family.
    Figures(FigureRun),
}

#[derive(Debug, Args)]
struct Run {
    #[command(flatten)]
    params: Params,
    /// Output file (stdout if absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigureRun {
    #[command(flatten)]
    params: Params,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveModel {
    Deterministic,
    BoundedSaddle,
    UnboundedMarkov,
    UnboundedOu,
    AsymptoticShort,
    AsymptoticLong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every tunable; JSON keys equal the flag names.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<CurveModel>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphag: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Fail with exit code 3 when (gamma rho tau)^2 exceeds the threshold.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_validity: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_factor: Option<f64>,
    /// Consumption CSV (`year,consumption`); the bundled series if absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<i32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<i32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Params { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Params {
    /// Fields of `self` win over `base`.
    pub fn or(self, base: Params) -> Params {
        merge_fields!(self, base; command, model, alpha, gamma, delta, mg, dg, rho2, tau, sigma2, alphag,
            t_min, t_max, step, format, strict_validity, threshold, seed, paths, dt, horizons, bound_factor,
            input, split, target, lags, window)
    }
}

fn need<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Domain(format!("missing --{flag}")))
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

/// Reads a JSON config, a JSON output (its `config` object) or a CSV output
/// (its `# config:` line).
pub fn load_config(path: &Path) -> Result<Params> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(json_error)?
    } else {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix("# config: "))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!(
                    "{}: neither a JSON object nor an output with a `# config:` line",
                    path.display()
                ),
            })?;
        serde_json::from_str(line).map_err(json_error)?
    };
    let value = match (value.get("version"), value.get("config")) {
        (Some(_), Some(config)) => config.clone(),
        _ => value,
    };
    serde_json::from_value(value).map_err(json_error)
}

fn utility(p: &Params) -> Result<UtilityParams> {
    UtilityParams::new(need(p.delta, "delta")?, need(p.gamma, "gamma")?)
}

fn config_json(p: &Params) -> String {
    serde_json::to_string(p).expect("params serialize")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

struct Report {
    config: Params,
    metadata: serde_json::Value,
    warnings: Vec<String>,
    table: Table,
}

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = format!("# {VERSION}\n# config: {}\n", config_json(&self.config));
                if !self.metadata.is_null() {
                    let _ = writeln!(s, "# metadata: {}", self.metadata);
                }
                for w in &self.warnings {
                    let _ = writeln!(s, "# warning: {w}");
                }
                s.push_str(&self.table.columns.join(","));
                s.push('\n');
                for row in &self.table.rows {
                    s.push_str(
                        &row.iter()
                            .map(|v| fmt_opt(*v))
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .table
                    .rows
                    .iter()
                    .map(|r| {
                        self.table
                            .columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(|v| json!(v)))
                            .collect()
                    })
                    .collect();
                let doc = json!({
                    "version": VERSION,
                    "config": self.config,
                    "metadata": self.metadata,
                    "warnings": self.warnings,
                    "rows": rows,
                });
                serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
            }
        }
    }
}

fn validity_check(p: &Params, validity: Option<f64>, warnings: &mut Vec<String>) -> Result<()> {
    let Some(v) = validity else { return Ok(()) };
    let threshold = p.threshold.unwrap_or(DEFAULT_VALIDITY_THRESHOLD);
    if v > threshold {
        let msg = format!("validity parameter (gamma rho tau)^2 = {v:.4} exceeds {threshold}");
        if p.strict_validity == Some(true) {
            return Err(Error::OutOfValidity(msg));
        }
        if !warnings.iter().any(|w| w.starts_with("validity parameter")) {
            warnings.push(msg);
        }
    }
    Ok(())
}

fn rate_model(p: &Params) -> Result<Option<RateModel>> {
    let mg = need(p.mg, "mg")?;
    Ok(match (p.rho2, p.tau, p.sigma2, p.alphag) {
        (Some(r), Some(t), _, _) => Some(RateModel::markov(mg, r, t)?),
        (_, _, Some(s), Some(a)) => Some(RateModel::ornstein_uhlenbeck(mg, s, a)?),
        _ => None,
    })
}

fn curve(mut p: Params) -> Result<Report> {
    let model = need(p.model, "model")?;
    p.t_min = Some(p.t_min.unwrap_or(1.0));
    p.t_max = Some(p.t_max.unwrap_or(500.0));
    p.step = Some(p.step.unwrap_or(1.0));
    p.format = Some(p.format.unwrap_or(Format::Csv));
    p.threshold = Some(p.threshold.unwrap_or(DEFAULT_VALIDITY_THRESHOLD));
    p.strict_validity = Some(p.strict_validity.unwrap_or(false));
    let grid = uniform_grid(p.t_min.unwrap(), p.t_max.unwrap(), p.step.unwrap())?;
    let u = utility(&p)?;
    let mut warnings = Vec::new();
    let (rates, growth, metadata): (Vec<f64>, Vec<f64>, serde_json::Value) = match model {
        CurveModel::Deterministic => {
            let (alpha, mg) = (need(p.alpha, "alpha")?, need(p.mg, "mg")?);
            let y = grid
                .iter()
                .map(|&t| deterministic_discount_rate(&u, alpha, mg, t))
                .collect::<Result<_>>()?;
            let g = grid
                .iter()
                .map(|&t| ln_r_function(-1.0, alpha, mg * t))
                .collect::<Result<_>>()?;
            (y, g, json!({"model": "deterministic"}))
        }
        CurveModel::BoundedSaddle => {
            let alpha = need(p.alpha, "alpha")?;
            let (spec, validity) = match (p.dg, rate_model(&p)?) {
                (Some(dg), _) => {
                    // with a fixed D_g = 2 rho^2 tau, (gamma rho tau)^2 = gamma^2 D_g tau / 2
                    let v = p.tau.map(|tau| u.gamma * u.gamma * dg * tau / 2.0);
                    (GrowthSpec::fixed(need(p.mg, "mg")?, dg)?, v)
                }
                (None, Some(m)) => {
                    let v = crate::rates::validity_parameter(u.gamma, &m).ok();
                    (GrowthSpec::Model(m), v)
                }
                (None, None) => {
                    return domain("bounded-saddle needs --dg, --rho2/--tau or --sigma2/--alphag")
                }
            };
            validity_check(&p, validity, &mut warnings)?;
            let threshold = p.threshold.unwrap();
            let ts = discount_curve_bounded(&u, alpha, &spec, &grid, threshold)?
                .merge(growth_curve_bounded(alpha, &spec, &grid)?)?;
            let has_validity = warnings.iter().any(|w| w.starts_with("validity parameter"));
            for w in &ts.metadata.warnings {
                if !(has_validity && w.starts_with("validity parameter")) {
                    warnings.push(w.clone());
                }
            }
            let meta = json!({"model": ts.metadata.model, "params": ts.metadata.params});
            (ts.rates.unwrap(), ts.log_growth.unwrap(), meta)
        }
        CurveModel::UnboundedMarkov => {
            let (mg, rho2, tau) = (
                need(p.mg, "mg")?,
                need(p.rho2, "rho2")?,
                need(p.tau, "tau")?,
            );
            let m = RateModel::markov(mg, rho2, tau)?;
            validity_check(&p, Some(validity_from(u.gamma, rho2, tau)), &mut warnings)?;
            let y = grid
                .iter()
                .map(|&t| discount_unbounded_markov(&u, mg, rho2, tau, t))
                .collect::<Result<_>>()?;
            let g = grid
                .iter()
                .map(|&t| growth_unbounded(&m, t))
                .collect::<Result<_>>()?;
            (y, g, json!({"model": "unbounded-markov"}))
        }
        CurveModel::UnboundedOu => {
            let (mg, s2, ag) = (
                need(p.mg, "mg")?,
                need(p.sigma2, "sigma2")?,
                need(p.alphag, "alphag")?,
            );
            let m = RateModel::ornstein_uhlenbeck(mg, s2, ag)?;
            let (rho2, tau) = ou_markov_map(s2, ag)?;
            validity_check(&p, Some(validity_from(u.gamma, rho2, tau)), &mut warnings)?;
            let y = grid
                .iter()
                .map(|&t| discount_unbounded_ou(&u, mg, s2, ag, t))
                .collect::<Result<_>>()?;
            let g = grid
                .iter()
                .map(|&t| growth_unbounded(&m, t))
                .collect::<Result<_>>()?;
            (
                y,
                g,
                json!({"model": "unbounded-ou", "rho_sq": rho2, "tau_g": tau}),
            )
        }
        CurveModel::AsymptoticShort | CurveModel::AsymptoticLong => {
            let regime = if model == CurveModel::AsymptoticShort {
                Regime::Short
            } else {
                Regime::Long
            };
            let (alpha, mg, dg) = (
                need(p.alpha, "alpha")?,
                need(p.mg, "mg")?,
                need(p.dg, "dg")?,
            );
            validity_check(
                &p,
                p.tau.map(|tau| u.gamma * u.gamma * dg * tau / 2.0),
                &mut warnings,
            )?;
            let mut y = Vec::with_capacity(grid.len());
            let mut g = Vec::with_capacity(grid.len());
            let mut flagged = Vec::new();
            for &t in &grid {
                let a = asymptotic_discount(regime, &u, alpha, mg, dg, t)?;
                if a.warning.is_some() {
                    flagged.push(t);
                }
                y.push(a.value);
                g.push(asymptotic_growth(regime, alpha, mg, dg, t)?.value);
            }
            if let (Some(first), Some(last)) = (flagged.first(), flagged.last()) {
                warnings.push(format!(
                    "{} of {} horizons (t in [{first}, {last}]) lie within 1/m_g of the inflection time",
                    flagged.len(),
                    grid.len()
                ));
            }
            (
                y,
                g,
                json!({"model": format!("asymptotic-{regime:?}").to_lowercase()}),
            )
        }
    };
    let rows = grid
        .iter()
        .zip(rates)
        .zip(growth)
        .map(|((&t, y), g)| vec![Some(t), Some(y), Some(g)])
        .collect();
    p.command = Some("curve".into());
    Ok(Report {
        config: p,
        metadata,
        warnings,
        table: Table {
            columns: vec!["t".into(), "y".into(), "ln_growth".into()],
            rows,
        },
    })
}

fn load_series(p: &Params) -> Result<ConsumptionSeries> {
    match &p.input {
        Some(path) => ConsumptionSeries::from_path(path),
        None => Ok(ConsumptionSeries::bundled()),
    }
}

fn calibrate(mut p: Params) -> Result<String> {
    p.command = Some("calibrate".into());
    p.gamma = Some(p.gamma.unwrap_or(2.0));
    p.delta = Some(p.delta.unwrap_or(0.0));
    let u = utility(&p)?;
    let series = load_series(&p)?;
    let inc = log_increments(&series);
    let moments = estimate_moments(&inc, None)?;
    let trend = fit_log_trend(&series)?;
    let diag = if moments.degenerate {
        None
    } else {
        Some(diagnostics(&inc, p.lags)?)
    };
    let (calibration, forecast, rate_inputs) = match (p.split, p.target) {
        (Some(split), Some(target)) => {
            let cal = calibrate_tau(&series, split, target, u.gamma)?;
            let base = series.level(split)?;
            let horizon = f64::from(target - split);
            let (m, r2, tau) = (cal.moments.m_g, cal.moments.rho_sq, cal.tau_g);
            let forecast = json!({
                "base_year": split,
                "base_level": base,
                "target_year": target,
                "naive": forecast_consumption(base, m, r2, tau, horizon, false)?,
                "corrected": forecast_consumption(base, m, r2, tau, horizon, true)?,
                "actual": series.level(target)?,
            });
            (Some(cal), Some(forecast), Some((m, r2, tau)))
        }
        (None, None) => (
            None,
            None,
            p.tau.map(|tau| (moments.m_g, moments.rho_sq, tau)),
        ),
        _ => return domain("--split and --target go together"),
    };
    let implied = rate_inputs.map(|(m, r2, tau)| implied_long_run_rate(&u, m, r2, tau));
    let validity = rate_inputs.map(|(_, r2, tau)| validity_from(u.gamma, r2, tau));
    let doc = json!({
        "version": VERSION,
        "config": p,
        "n_levels": series.len(),
        "years": [series.first_year(), series.last_year()],
        "moments": moments,
        "trend": trend,
        "calibration": calibration,
        "forecast": forecast,
        "implied_rate": implied,
        "validity": validity,
        "diagnostics": diag,
        "degenerate": moments.degenerate,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
}

fn validate(mut p: Params) -> Result<(Report, bool)> {
    p.command = Some("validate".into());
    p.horizons = Some(
        p.horizons
            .clone()
            .unwrap_or_else(|| vec![10.0, 50.0, 100.0, 300.0]),
    );
    p.paths = Some(p.paths.unwrap_or(DEFAULT_PATHS));
    p.seed = Some(p.seed.unwrap_or(1949));
    p.bound_factor = Some(p.bound_factor.unwrap_or(0.15));
    p.format = Some(p.format.unwrap_or(Format::Csv));
    let u = utility(&p)?;
    let alpha = need(p.alpha, "alpha")?;
    let model = rate_model(&p)?
        .ok_or_else(|| Error::Domain("validate needs --rho2/--tau or --sigma2/--alphag".into()))?;
    let (_, tau) = model.stationary().expect("exponential family");
    p.dt = Some(p.dt.unwrap_or((tau / 20.0).min(0.25)));
    let horizons = p.horizons.clone().unwrap();
    let options = SimulationOptions {
        dt: p.dt,
        ..Default::default()
    };
    let ensemble = simulate_paths(
        &model,
        p.paths.unwrap(),
        &horizons,
        p.seed.unwrap(),
        &options,
    )?;
    let rows = compare_oracles(&u, alpha, &model, &ensemble, p.bound_factor.unwrap())?;
    let all_agree = rows.iter().all(|r| r.agree);
    let columns = [
        "t",
        "y_saddle",
        "y_quadrature",
        "y_mc",
        "y_mc_se",
        "gap_mc_quadrature",
        "gap_saddle_mc",
        "saddle_bound",
        "agree",
    ];
    let table = Table {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                [
                    r.t,
                    r.y_saddle,
                    r.y_quadrature,
                    r.y_mc,
                    r.y_mc_se,
                    r.gap_mc_quadrature,
                    r.gap_saddle_mc,
                    r.saddle_bound,
                    f64::from(u8::from(r.agree)),
                ]
                .into_iter()
                .map(Some)
                .collect()
            })
            .collect(),
    };
    let validity = crate::rates::validity_parameter(u.gamma, &model)?;
    let mut warnings = Vec::new();
    if !all_agree {
        warnings.push("oracle disagreement beyond the configured bound".to_string());
    }
    Ok((
        Report {
            config: p,
            metadata: json!({"model": model.name(), "validity": validity}),
            warnings,
            table,
        },
        all_agree,
    ))
}

fn figures(mut p: Params, dir: &Path) -> Result<()> {
    p.command = Some("figures".into());
    p.gamma = Some(p.gamma.unwrap_or(2.0));
    p.delta = Some(p.delta.unwrap_or(0.0));
    p.mg = Some(p.mg.unwrap_or(0.02));
    p.dg = Some(p.dg.unwrap_or(0.0012));
    p.t_max = Some(p.t_max.unwrap_or(500.0));
    p.split = Some(p.split.unwrap_or(1949));
    p.target = Some(p.target.unwrap_or(2009));
    p.window = Some(p.window.unwrap_or(20));
    let u = utility(&p)?;
    let series = load_series(&p)?;
    let inc = log_increments(&series);
    fs::create_dir_all(dir)?;
    let write = |name: &str, table: Table| -> Result<()> {
        let report = Report {
            config: p.clone(),
            metadata: json!({"figure": name}),
            warnings: Vec::new(),
            table,
        };
        fs::write(dir.join(format!("{name}.csv")), report.render(Format::Csv))?;
        Ok(())
    };

    let trend = fit_log_trend(&series)?;
    write(
        "fig2",
        Table {
            columns: vec![
                "year".into(),
                "ln_c".into(),
                "fitted".into(),
                "slope".into(),
            ],
            rows: series
                .years()
                .iter()
                .zip(series.levels())
                .map(|(&y, c)| {
                    vec![
                        Some(f64::from(y)),
                        Some(c.ln()),
                        Some(trend.predict(y)),
                        Some(trend.slope),
                    ]
                })
                .collect(),
        },
    )?;

    let rv = rolling_variance(&inc, p.window.unwrap())?;
    write(
        "fig3",
        Table {
            columns: vec!["year".into(), "rolling_variance".into()],
            rows: rv
                .years
                .iter()
                .zip(&rv.values)
                .map(|(&y, &v)| vec![Some(f64::from(y)), Some(v)])
                .collect(),
        },
    )?;

    let (split, target) = (p.split.unwrap(), p.target.unwrap());
    let cal = calibrate_tau(&series, split, target, u.gamma)?;
    let base = series.level(split)?;
    let (m, r2, tau) = (cal.moments.m_g, cal.moments.rho_sq, cal.tau_g);
    let rows = (split..=target)
        .map(|y| {
            let h = f64::from(y - split);
            Ok(vec![
                Some(f64::from(y)),
                Some(series.level(y)?),
                Some(forecast_consumption(base, m, r2, tau, h, false)?),
                Some(forecast_consumption(base, m, r2, tau, h, true)?),
            ])
        })
        .collect::<Result<_>>()?;
    write(
        "fig4",
        Table {
            columns: vec![
                "year".into(),
                "actual".into(),
                "naive".into(),
                "corrected".into(),
            ],
            rows,
        },
    )?;

    let grid = uniform_grid(1.0, p.t_max.unwrap(), 1.0)?;
    let (mg, dg) = (p.mg.unwrap(), p.dg.unwrap());
    let mut columns = vec!["t".to_string()];
    let mut curves = Vec::new();
    for alpha in [0.1, 0.03, 0.01] {
        for d in [dg, 0.0] {
            columns.push(format!("y_alpha{alpha}_dg{d}"));
            let ts = discount_curve_bounded(
                &u,
                alpha,
                &GrowthSpec::fixed(mg, d)?,
                &grid,
                DEFAULT_VALIDITY_THRESHOLD,
            )?;
            curves.push(ts.rates.unwrap());
        }
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            std::iter::once(Some(t))
                .chain(curves.iter().map(|c| Some(c[i])))
                .collect()
        })
        .collect();
    write("fig5", Table { columns, rows })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OutOfValidity(_) => EXIT_VALIDITY,
        _ => EXIT_INPUT,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let base = match &cli.config {
        Some(path) => load_config(path)?,
        None => Params::default(),
    };
    let (name, params) = match &cli.command {
        Command::Curve(r) | Command::Calibrate(r) | Command::Validate(r) => {
            (command_name(&cli.command), &r.params)
        }
        Command::Figures(f) => ("figures", &f.params),
    };
    if let Some(c) = &base.command {
        if c != name {
            return domain(format!("config is for `{c}`, not `{name}`"));
        }
    }
    let merged = params.clone().or(base);
    match cli.command {
        Command::Curve(r) => {
            let report = curve(merged)?;
            emit(
                r.output.as_deref(),
                &report.render(report.config.format.unwrap()),
            )?;
            Ok(EXIT_OK)
        }
        Command::Calibrate(r) => {
            emit(r.output.as_deref(), &calibrate(merged)?)?;
            Ok(EXIT_OK)
        }
        Command::Validate(r) => {
            let (report, agree) = validate(merged)?;
            emit(
                r.output.as_deref(),
                &report.render(report.config.format.unwrap()),
            )?;
            if !agree {
                eprintln!("error: oracle disagreement beyond the configured bound");
            }
            Ok(if agree { EXIT_OK } else { EXIT_ORACLE })
        }
        Command::Figures(f) => {
            figures(merged, &f.output_dir)?;
            Ok(EXIT_OK)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Curve(_) => "curve",
        Command::Calibrate(_) => "calibrate",
        Command::Validate(_) => "validate",
        Command::Figures(_) => "figures",
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
