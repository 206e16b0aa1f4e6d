//! Smooth test functions with analytic gradients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestFunction {
    /// `φ(x) = x1`
    #[serde(rename = "x1")]
    Linear,
    /// `φ(x) = sin(πx1) cos(πx2)`
    #[serde(rename = "sinx1cosx2")]
    SinCos,
    /// `φ(x) = |x|²`
    #[serde(rename = "quadratic")]
    Quadratic,
    /// `φ(x) = cos(πx1)`
    #[serde(rename = "cosx1")]
    CosX1,
    #[serde(rename = "constant")]
    Constant,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] = [
        TestFunction::Linear,
        TestFunction::SinCos,
        TestFunction::Quadratic,
        TestFunction::CosX1,
        TestFunction::Constant,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TestFunction::Linear => "x1",
            TestFunction::SinCos => "sinx1cosx2",
            TestFunction::Quadratic => "quadratic",
            TestFunction::CosX1 => "cosx1",
            TestFunction::Constant => "constant",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            TestFunction::Linear => "x1",
            TestFunction::SinCos => "sin(pi x1) cos(pi x2)",
            TestFunction::Quadratic => "|x|^2",
            TestFunction::CosX1 => "cos(pi x1)",
            TestFunction::Constant => "1",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.id() == id)
    }

    pub fn min_dimension(self) -> usize {
        match self {
            TestFunction::SinCos => 2,
            _ => 1,
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Linear => x[0],
            TestFunction::SinCos => (PI * x[0]).sin() * (PI * x[1]).cos(),
            TestFunction::Quadratic => x.iter().map(|v| v * v).sum(),
            TestFunction::CosX1 => (PI * x[0]).cos(),
            TestFunction::Constant => 1.0,
        }
    }

    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        match self {
            TestFunction::Linear => g[0] = 1.0,
            TestFunction::SinCos => {
                g[0] = PI * (PI * x[0]).cos() * (PI * x[1]).cos();
                g[1] = -PI * (PI * x[0]).sin() * (PI * x[1]).sin();
            }
            TestFunction::Quadratic => {
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = 2.0 * xi;
                }
            }
            TestFunction::CosX1 => g[0] = -PI * (PI * x[0]).sin(),
            TestFunction::Constant => {}
        }
        g
    }
}
