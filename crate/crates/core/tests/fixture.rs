use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use logistic_discount::empirics::*;
use logistic_discount::UtilityParams;

fn fixture() -> (ConsumptionSeries, Increments) {
    let s = ConsumptionSeries::bundled();
    let inc = log_increments(&s);
    (s, inc)
}

#[test]
fn fixture_shape() {
    let (s, inc) = fixture();
    assert_eq!(s.len(), 121);
    assert_eq!((s.first_year(), s.last_year()), (1889, 2009));
    assert_eq!(inc.len(), 120);
    let from_path = ConsumptionSeries::from_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/us_consumption_1889_2009.csv"
    ))
    .unwrap();
    assert_eq!(from_path, s);
}

#[test]
fn depression_drop() {
    let (s, inc) = fixture();
    let drop: f64 = inc.window(1931, 1934).unwrap().values.iter().sum();
    assert_relative_eq!(drop, 0.74f64.ln(), epsilon = 1e-3);
    assert_relative_eq!(
        s.level(1934).unwrap() / s.level(1930).unwrap(),
        0.74,
        epsilon = 1e-3
    );
}

#[test]
fn full_and_prewar_moments() {
    let (_, inc) = fixture();
    let m = estimate_moments(&inc, None).unwrap();
    assert!((m.m_g - 0.020).abs() < 0.001);
    assert!((m.rho_sq / 0.00123 - 1.0).abs() < 0.05);
    assert!((m.skewness.unwrap() + 0.38).abs() < 0.06);
    assert!((m.excess_kurtosis.unwrap() - 1.14).abs() < 0.20);
    assert_eq!(m.window, (1890, 2009));
    let pre = estimate_moments(&inc, Some((1890, 1949))).unwrap();
    assert_eq!(pre.n, 60);
    assert!((pre.m_g - 0.0182).abs() < 0.0005);
    assert!((pre.rho_sq / 0.0022 - 1.0).abs() < 0.05);
}

#[test]
fn rolling_variance_varies_strongly() {
    let (_, inc) = fixture();
    let r = rolling_variance(&inc, 20).unwrap();
    assert_eq!(r.years.first(), Some(&1909));
    let max = r.values.iter().cloned().fold(f64::MIN, f64::max);
    let min = r.values.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min > 5.0, "{max} / {min}");
}

#[test]
fn log_trend() {
    let (s, _) = fixture();
    let fit = fit_log_trend(&s).unwrap();
    assert!((fit.slope - 0.021).abs() < 0.001);
    assert!(fit.r_squared >= 0.985);
    assert_eq!(fit.origin_year, 1889);
}

#[test]
fn forecast_exercise() {
    let (s, _) = fixture();
    let cal = calibrate_tau(&s, 1949, 2009, 2.0).unwrap();
    assert!((1.75..=1.95).contains(&cal.tau_g), "{}", cal.tau_g);
    let base = s.level(1949).unwrap();
    let m = &cal.moments;
    let naive = forecast_consumption(base, m.m_g, m.rho_sq, cal.tau_g, 60.0, false).unwrap();
    let corrected = forecast_consumption(base, m.m_g, m.rho_sq, cal.tau_g, 60.0, true).unwrap();
    assert!((naive / 23932.2 - 1.0).abs() < 0.01);
    assert!((corrected / 30509.0 - 1.0).abs() < 0.01);
    // "21.6% lower than the actual"
    assert_relative_eq!(1.0 - naive / 30509.0, 0.216, epsilon = 0.001);
    let y = implied_long_run_rate(
        &UtilityParams::new(0.0, 2.0).unwrap(),
        m.m_g,
        m.rho_sq,
        cal.tau_g,
    );
    assert!((0.0195..=0.0205).contains(&y.y_infinity));
}

#[test]
fn fixture_diagnostics() {
    let (_, inc) = fixture();
    let d = diagnostics(&inc, None).unwrap();
    assert_eq!(d.lags, 10);
    assert!(d.jarque_bera.p < 0.05);
    assert!(d.box_pierce.p > 0.05);
    let json = serde_json::to_value(&d).unwrap();
    for key in [
        "/jarque_bera/stat",
        "/jarque_bera/p",
        "/box_pierce/stat",
        "/box_pierce/p",
        "/lags",
        "/estimators",
    ] {
        assert!(json.pointer(key).is_some(), "{key}");
    }
}

#[test]
fn jarque_bera_keeps_size_on_gaussian_samples() {
    let mut accepted = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..120)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.02 + 0.035 * z
            })
            .collect();
        let inc = Increments {
            years: (1890..2010).collect(),
            values,
        };
        if diagnostics(&inc, None).unwrap().jarque_bera.p > 0.05 {
            accepted += 1;
        }
    }
    assert!(accepted >= 90, "{accepted} of 100");
}
