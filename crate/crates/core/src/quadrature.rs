//! Numerical integration used by the cumulant machinery and the Gaussian
//! oracle: globally adaptive 21-point Gauss–Kronrod on finite intervals and
//! Gauss–Hermite rules for expectations under a normal law.

use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the embedded 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_482_532_853_739,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and evaluation budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evaluations: usize,
}

impl Tolerance {
    pub const DEFAULT_REL: f64 = 1e-8;
    pub const DEFAULT_BUDGET: usize = 1_000_000;

    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_evaluations: Self::DEFAULT_BUDGET,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::relative(Self::DEFAULT_REL)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the total
/// estimate drops below `max(tol.abs, tol.rel · |value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return domain(format!("integration bounds must be finite, got [{a}, {b}]"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() {
            return domain("integrand produced a non-finite value");
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        if evaluations + 42 > tol.max_evaluations {
            return Err(Error::NoConvergence {
                evaluations,
                estimated_error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            return Err(Error::NoConvergence {
                evaluations,
                estimated_error: total_err,
            });
        }
        let (lv, le) = kronrod21(&mut f, worst.a, mid);
        let (rv, re) = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        if heap.len() % 64 == 0 {
            // re-sum to stop drift from incremental updates
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// An `n`-point Gauss–Hermite rule for the weight `e^{−x²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub const DEFAULT_NODES: usize = 64;
    const MAX_NODES: usize = 200;

    /// Nodes by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > Self::MAX_NODES {
            return domain(format!(
                "Gauss-Hermite node count must be in 1..={}, got {n}",
                Self::MAX_NODES
            ));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z: f64 = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut dp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                dp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / dp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence {
                    evaluations: 100,
                    estimated_error: f64::NAN,
                });
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (dp * dp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ e^{−x²} f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(X)]` for `X ~ N(mean, variance)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, mean: f64, variance: f64, f: F) -> f64 {
        let scale = (2.0 * variance).sqrt();
        self.integrate(|x| f(mean + scale * x)) / std::f64::consts::PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_weights_are_consistent() {
        let ksum: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert_relative_eq!(ksum, 2.0, max_relative = 1e-15);
        let gsum: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_relative_eq!(gsum, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn kronrod_is_exact_for_high_degree_polynomials() {
        // the 21-point Kronrod rule integrates degree ≤ 31 exactly
        for p in [0, 1, 2, 7, 19, 20, 30, 31] {
            let (v, _) = kronrod21(&mut |x: f64| x.powi(p), -1.0, 1.0);
            let exact = if p % 2 == 1 {
                0.0
            } else {
                2.0 / (p as f64 + 1.0)
            };
            assert!((v - exact).abs() < 1e-14, "degree {p}: {v} vs {exact}");
        }
        // the embedded Gauss rule is exact to degree 19 only
        let g = |x: f64| x.powi(18);
        let centre = 0.0;
        let gauss: f64 = (0..5)
            .map(|k| WG[k] * (g(centre - XGK[2 * k + 1]) + g(centre + XGK[2 * k + 1])))
            .sum();
        assert_relative_eq!(gauss, 2.0 / 19.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_integration_handles_kinks_and_peaks() {
        let r = integrate(
            |x: f64| (-(x - 3.0).abs()).exp(),
            0.0,
            10.0,
            Tolerance::relative(1e-12),
        )
        .unwrap();
        let exact = 2.0 - (-3.0f64).exp() - (-7.0f64).exp();
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
        let r = integrate(
            |x: f64| 1.0 / (1e-4 + x * x),
            -1.0,
            1.0,
            Tolerance::relative(1e-10),
        )
        .unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(r.value, exact, max_relative = 1e-9);
    }

    #[test]
    fn adaptive_integration_reports_budget_exhaustion() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
            max_evaluations: 100,
        };
        let err = integrate(|x: f64| x.sqrt(), 0.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn hermite_rule_moments() {
        let gh = GaussHermite::new(64).unwrap();
        assert_eq!(gh.len(), 64);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(gh.integrate(|_| 1.0), sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(gh.integrate(|x| x * x), sqrt_pi / 2.0, max_relative = 1e-13);
        assert_relative_eq!(
            gh.integrate(|x| x.powi(4)),
            0.75 * sqrt_pi,
            max_relative = 1e-13
        );
        // lognormal moment
        let (mu, var) = (0.3, 0.5);
        assert_relative_eq!(
            gh.expectation(mu, var, f64::exp),
            (mu + var / 2.0).exp(),
            max_relative = 1e-13
        );
        for n in [1, 2, 5, 20, 100] {
            let gh = GaussHermite::new(n).unwrap();
            assert_relative_eq!(gh.integrate(|_| 1.0), sqrt_pi, max_relative = 1e-12);
        }
    }

    #[test]
    fn hermite_node_count_domain() {
        assert!(GaussHermite::new(0).is_err());
        assert!(GaussHermite::new(10_000).is_err());
    }
}
