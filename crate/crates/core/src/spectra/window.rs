use serde::{Deserialize, Serialize};

/// One-dimensional lag window shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// 1 on `[-1, 1]`, 0 outside.
    Rectangular,
    /// Triangular `1 - |tau|` on `[-1, 1]`.
    Bartlett,
    Parzen,
    /// 1 everywhere. Paired with `M = n - 1` this reproduces the raw
    /// estimator, since every sample third moment keeps its full weight.
    Flat,
}

/// Symmetric lag window `lambda(tau)` with `lambda(0) = 1` and truncation
/// point `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagWindow {
    pub kind: WindowKind,
    pub truncation: usize,
}

impl LagWindow {
    pub fn new(kind: WindowKind, truncation: usize) -> Self {
        Self { kind, truncation }
    }

    pub fn parzen(truncation: usize) -> Self {
        Self::new(WindowKind::Parzen, truncation)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let a = tau.abs();
        match self.kind {
            WindowKind::Flat => 1.0,
            _ if a > 1.0 => 0.0,
            WindowKind::Rectangular => 1.0,
            WindowKind::Bartlett => 1.0 - a,
            WindowKind::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else {
                    2.0 * (1.0 - a).powi(3)
                }
            }
        }
    }

    /// Two-dimensional window `lambda(t1) lambda(t2) lambda(t1 - t2)`, which
    /// shares the symmetries of the third-moment function:
    /// `(t1, t2) -> (t2, t1), (-t1, t2 - t1), (t1 - t2, -t2)`.
    pub fn eval2(&self, tau1: f64, tau2: f64) -> f64 {
        self.eval(tau1) * self.eval(tau2) * self.eval(tau1 - tau2)
    }

    /// Weight of lag pair `(u, v)`, i.e. `lambda(u / M, v / M)`.
    pub fn lag_weight(&self, u: isize, v: isize) -> f64 {
        let m = self.truncation.max(1) as f64;
        self.eval2(u as f64 / m, v as f64 / m)
    }
}
