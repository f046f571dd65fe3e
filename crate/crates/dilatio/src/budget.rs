//! Estimation budgets and the `Estimate` value type.
//!
//! Every estimator takes an explicit budget (method, sample/node counts,
//! seed) so that results are reproducible and error bars are first-class.

use serde::{Deserialize, Serialize};

/// How an estimator should evaluate its integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Deterministic quadrature; only available for dimension <= 2.
    Quadrature,
    /// Monte Carlo with CLT standard errors.
    MonteCarlo,
    /// Quadrature for n <= 2, Monte Carlo otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimationBudget {
    pub method: Method,
    /// Monte Carlo sample count.
    pub samples: u64,
    /// Absolute tolerance for adaptive quadrature.
    pub quad_tol: f64,
    pub seed: u64,
}

impl EstimationBudget {
    pub fn quadrature() -> Self {
        EstimationBudget {
            method: Method::Quadrature,
            samples: 0,
            quad_tol: 1e-10,
            seed: 0,
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        EstimationBudget {
            method: Method::MonteCarlo,
            samples,
            quad_tol: 1e-10,
            seed,
        }
    }

    pub fn auto(samples: u64, seed: u64) -> Self {
        EstimationBudget {
            method: Method::Auto,
            samples,
            quad_tol: 1e-10,
            seed,
        }
    }

    /// Resolve `Auto` against a dimension.
    pub fn resolve(&self, dim: usize) -> Method {
        match self.method {
            Method::Auto => {
                if dim <= 2 {
                    Method::Quadrature
                } else {
                    Method::MonteCarlo
                }
            }
            m => m,
        }
    }

    pub fn scaled(&self, factor: u64) -> Self {
        EstimationBudget {
            samples: self.samples.saturating_mul(factor),
            ..*self
        }
    }
}

impl Default for EstimationBudget {
    fn default() -> Self {
        EstimationBudget::auto(100_000, 0)
    }
}

/// A numeric value with an error bar and a method tag.
///
/// Quadrature estimates carry an a-posteriori error bound in `std_error`;
/// Monte Carlo estimates carry a CLT standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub method: String,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64, method: &str) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            method: method.to_string(),
            seed: 0,
        }
    }

    pub fn quadrature(value: f64, err: f64) -> Self {
        Estimate {
            value,
            std_error: err.abs(),
            method: "quadrature".to_string(),
            seed: 0,
        }
    }

    pub fn monte_carlo(value: f64, std_error: f64, seed: u64) -> Self {
        Estimate {
            value,
            std_error,
            method: "monte-carlo".to_string(),
            seed,
        }
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.method = tag.to_string();
        self
    }
}
