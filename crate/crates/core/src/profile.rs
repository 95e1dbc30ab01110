//! Scalar radial profiles `f(r)` used by rotationally symmetric metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    Constant { value: f64 },
    /// `coef * r^exponent`
    Power { coef: f64, exponent: f64 },
    /// Natural cubic spline through `(radii[i], values[i])`.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        if let RadialProfile::Table { radii, values } = self {
            if radii.len() != values.len() {
                return Err(Error::LengthMismatch { left: radii.len(), right: values.len() });
            }
            if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput("profile table needs >= 2 increasing radii".into()));
            }
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    /// Value and first derivative.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            RadialProfile::Constant { value } => (*value, 0.0),
            RadialProfile::Power { coef, exponent } => {
                let v = coef * r.powf(*exponent);
                (v, exponent * v / r)
            }
            RadialProfile::Table { radii, values } => spline_eval(radii, values, r),
        }
    }

    pub fn is_positive_on(&self, r_lo: f64, r_hi: f64) -> bool {
        (0..=64).all(|i| self.value(r_lo + (r_hi - r_lo) * i as f64 / 64.0) > 0.0)
    }
}

/// Second derivatives of the natural cubic spline (Thomas algorithm).
fn spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let cc = h1 / 6.0;
        let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

fn spline_eval(x: &[f64], y: &[f64], r: f64) -> (f64, f64) {
    let m = spline_moments(x, y);
    let n = x.len();
    let i = match x.partition_point(|&xi| xi <= r) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let h = x[i + 1] - x[i];
    let a = (x[i + 1] - r) / h;
    let b = (r - x[i]) / h;
    let v = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    let dv = (y[i + 1] - y[i]) / h + ((1.0 - 3.0 * a * a) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior_and_linear_data() {
        let p = RadialProfile::Table { radii: vec![1.0, 1.5, 2.0], values: vec![2.0, 3.0, 4.0] };
        assert!((p.value(1.25) - 2.5).abs() < 1e-14);
        assert!((p.derivative(1.8) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn power_derivative() {
        let p = RadialProfile::Power { coef: 2.0, exponent: -2.0 };
        let h = 1e-6;
        let fd = (p.value(1.3 + h) - p.value(1.3 - h)) / (2.0 * h);
        assert!((fd - p.derivative(1.3)).abs() < 1e-8);
    }
}
