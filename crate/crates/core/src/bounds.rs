//! Analytic tail and expectation bounds for X_N and Y_N.
//!
//! These are the large-N normal-approximation bounds; they hold for
//! memoryless models and for one- and two-sided memory models alike.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Asymptotic upper tail `exp(-z²/2) / (z √(2π))`, only meaningful for z ≫ 1.
pub fn normal_tail_approx(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::input(format!(
            "normal tail approximation needs z > 0, got {z}"
        )));
    }
    Ok((-0.5 * z * z).exp() / (z * (2.0 * PI).sqrt()))
}

fn check_n(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("N must be at least 1"));
    }
    Ok(n as f64)
}

/// f_N^δ = (1/√(2π)) · √3/(δ√N) · exp(−δ²N/6), the bound on P(Y_N > 3 + δ).
pub fn f_delta(n: u64, delta: f64) -> Result<f64> {
    let n = check_n(n)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::input(format!("delta must be positive, got {delta}")));
    }
    Ok(3f64.sqrt() / (delta * n.sqrt() * (2.0 * PI).sqrt()) * (-delta * delta * n / 6.0).exp())
}

/// Bound on P(X_N > (3 + δ)/(1 − δ)); equals 5 f_N^δ.
pub fn x_tail_bound(n: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::input(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(5.0 * f_delta(n, delta)?)
}

/// Upper bound on E(X_N) for memory models:
/// 3 + 5 N^(−1/2+ε) + 5 √(3/2π) N^(−ε) exp(−N^(2ε)/6).
pub fn x_mean_bound(n: u64, epsilon: f64) -> Result<f64> {
    let n = check_n(n)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
    }
    let drift = 5.0 * n.powf(-0.5 + epsilon);
    let tail = 5.0 * (3.0 / (2.0 * PI)).sqrt() * n.powf(-epsilon) * (-n.powf(2.0 * epsilon) / 6.0).exp();
    Ok(3.0 + drift + tail)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub f_value: f64,
    pub x_tail_bound: f64,
    pub x_mean_bound: Option<f64>,
}

pub fn bound_report(n: u64, delta: f64, epsilon: Option<f64>) -> Result<BoundReport> {
    Ok(BoundReport {
        n,
        delta,
        epsilon,
        f_value: f_delta(n, delta)?,
        x_tail_bound: x_tail_bound(n, delta)?,
        x_mean_bound: epsilon.map(|e| x_mean_bound(n, e)).transpose()?,
    })
}

/// A table cell: an upper limit, or nothing proven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Entry {
    Bound(f64),
    Unknown,
}

impl Entry {
    pub fn label(&self) -> String {
        match self {
            Entry::Bound(v) => format!("bound:{v}"),
            Entry::Unknown => "unknown".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelClass {
    Memoryless,
    OneSided,
    Collective,
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub model: ModelClass,
    pub e_x: Entry,
    pub p_x_tail: Entry,
    pub e_y: Entry,
    pub p_y_tail: Entry,
}

/// Per-model-class bounds on E(X_N), P(X_N − 3 > 5δ), E(Y_N), P(Y_N − 3 > δ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBoundsTable {
    pub n: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub rows: Vec<TableRow>,
}

impl ModelBoundsTable {
    pub fn row(&self, model: ModelClass) -> &TableRow {
        self.rows
            .iter()
            .find(|r| r.model == model)
            .expect("every class has a row")
    }
}

/// Requires (3 + δ) < (3 + 5δ)(1 − δ), i.e. 0 < δ < 1/5, so that the X tail
/// event can be written as X_N − 3 > 5δ.
pub fn bounds_table(n: u64, delta: f64, epsilon: f64) -> Result<ModelBoundsTable> {
    if !(delta > 0.0 && 3.0 + delta < (3.0 + 5.0 * delta) * (1.0 - delta)) {
        return Err(Error::input(format!(
            "delta must satisfy 3 + delta < (3 + 5 delta)(1 - delta), i.e. 0 < delta < 0.2; got {delta}"
        )));
    }
    let f = f_delta(n, delta)?;
    let x_tail = x_tail_bound(n, delta)?;
    let memory_mean = x_mean_bound(n, epsilon)?;
    let proven = |model, e_x| TableRow {
        model,
        e_x: Entry::Bound(e_x),
        p_x_tail: Entry::Bound(x_tail),
        e_y: Entry::Bound(3.0),
        p_y_tail: Entry::Bound(f),
    };
    Ok(ModelBoundsTable {
        n,
        delta,
        epsilon,
        rows: vec![
            proven(ModelClass::Memoryless, 3.0),
            proven(ModelClass::OneSided, memory_mean),
            TableRow {
                model: ModelClass::Collective,
                e_x: Entry::Unknown,
                p_x_tail: Entry::Unknown,
                e_y: Entry::Bound(3.0),
                p_y_tail: Entry::Unknown,
            },
            proven(ModelClass::TwoSided, memory_mean),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of the normal density from -12 to z.
    fn cdf_by_quadrature(z: f64) -> f64 {
        let lo = -12.0;
        let steps = 200_000;
        let h = (z - lo) / steps as f64;
        let pdf = |y: f64| (-0.5 * y * y).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(lo) + pdf(z);
        for i in 1..steps {
            let y = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(y);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_against_quadrature() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for z in [-4.0, -1.3, 0.4, 1.0, 1.96, 2.5, 5.0] {
            let q = cdf_by_quadrature(z);
            assert!((normal_cdf(z) - q).abs() < 1e-10, "z={z}: {} vs {q}", normal_cdf(z));
        }
        assert!((normal_cdf(1.96) - 0.97500).abs() < 1e-4);
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
        assert!(normal_cdf(40.0) <= 1.0 && normal_cdf(8.0) > normal_cdf(7.0));
    }

    #[test]
    fn tail_approx_examples() {
        assert!((normal_tail_approx(3.0).unwrap() - 1.4772e-3).abs() < 1e-6);
        assert!((normal_tail_approx(1.0).unwrap() - 0.24197).abs() < 1e-5);
        assert!(normal_tail_approx(0.0).is_err());
        assert!(normal_tail_approx(-1.0).is_err());
    }

    #[test]
    fn tail_approx_dominates_and_converges() {
        let mut prev_ratio = f64::INFINITY;
        for i in 0..=10 {
            let z = 1.0 + 0.5 * i as f64;
            let exact = 1.0 - normal_cdf(z);
            let approx = normal_tail_approx(z).unwrap();
            assert!(exact <= approx, "z={z}");
            let ratio = approx / exact;
            assert!(ratio < prev_ratio);
            prev_ratio = ratio;
        }
        assert!(prev_ratio < 1.03);
    }

    #[test]
    fn f_delta_examples() {
        assert!((f_delta(1000, 0.1).unwrap() - 0.04127).abs() < 1e-4);
        assert!((f_delta(1000, 0.1).unwrap() - 0.041_271_148_691).abs() < 1e-10);
        assert!((f_delta(100, 0.5).unwrap() - 2.147e-3).abs() < 1e-5);
        assert!(f_delta(4000, 0.1).unwrap() < f_delta(1000, 0.1).unwrap());
        assert!(f_delta(0, 0.1).is_err());
        assert!(f_delta(10, 0.0).is_err());
        assert!(f_delta(10, -0.1).is_err());
    }

    #[test]
    fn f_delta_strictly_decreasing() {
        let ns = [10u64, 50, 100, 500, 1000, 5000, 10_000];
        let ds = [0.01, 0.05, 0.1, 0.2, 0.5, 0.9];
        for &d in &ds {
            for w in ns.windows(2) {
                assert!(f_delta(w[1], d).unwrap() < f_delta(w[0], d).unwrap());
            }
        }
        for &n in &ns {
            for w in ds.windows(2) {
                assert!(f_delta(n, w[1]).unwrap() < f_delta(n, w[0]).unwrap());
            }
        }
    }

    #[test]
    fn x_tail_is_five_f() {
        assert!((x_tail_bound(1000, 0.1).unwrap() - 0.2064).abs() < 5e-4);
        for (n, d) in [(10, 0.3), (1000, 0.1), (77, 0.05)] {
            assert_eq!(x_tail_bound(n, d).unwrap(), 5.0 * f_delta(n, d).unwrap());
        }
        assert!(x_tail_bound(1 << 40, 0.1).unwrap() < 1e-100);
        assert!(x_tail_bound(10, 1.0).is_err());
        assert!(x_tail_bound(10, 0.0).is_err());
    }

    #[test]
    fn x_mean_examples() {
        assert!((x_mean_bound(1_000_000, 0.25).unwrap() - 3.1581).abs() < 1e-3);
        assert!((x_mean_bound(100_000_000, 0.25).unwrap() - 3.0500).abs() < 1e-3);
        assert!(x_mean_bound(10, 0.0).is_err());
    }

    #[test]
    fn x_mean_above_three_and_converging() {
        let mut prev = f64::INFINITY;
        for k in 3..=9 {
            let b = x_mean_bound(10u64.pow(k), 0.25).unwrap();
            assert!(b > 3.0);
            assert!(b < prev);
            prev = b;
        }
        // 5 N^(-1/4) at N = 1e9
        assert!(prev - 3.0 < 0.03);
    }

    #[test]
    fn table_shape() {
        let t = bounds_table(1000, 0.1, 0.25).unwrap();
        assert_eq!(t.rows.len(), 4);
        for r in &t.rows {
            assert_eq!(r.e_y, Entry::Bound(3.0));
        }
        let c = t.row(ModelClass::Collective);
        assert_eq!(c.e_x, Entry::Unknown);
        assert_eq!(c.p_x_tail, Entry::Unknown);
        assert_eq!(c.p_y_tail, Entry::Unknown);
        match t.row(ModelClass::Memoryless).p_y_tail {
            Entry::Bound(v) => assert!((v - 0.04127).abs() < 1e-4),
            Entry::Unknown => panic!(),
        }
        assert_eq!(t.row(ModelClass::TwoSided).e_x, Entry::Bound(x_mean_bound(1000, 0.25).unwrap()));
        assert_eq!(Entry::Unknown.label(), "unknown");
    }

    #[test]
    fn table_rejects_large_delta() {
        assert!(bounds_table(1000, 0.2, 0.25).is_err());
        assert!(bounds_table(1000, 0.5, 0.25).is_err());
        assert!(bounds_table(1000, 0.19, 0.25).is_ok());
    }
}
