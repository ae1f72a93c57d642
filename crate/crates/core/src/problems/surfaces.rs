//! Two-dimensional nonconvex benchmark surfaces.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{gaussian, RngStream};
use crate::vecmath::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    /// `20 − 20·exp(−0.2·√(0.5(x² + y²))) − exp(0.5(cos 2πx + cos 2πy)) + e`
    Ackley,
    /// `(x + 2y − 7)² + (2x + y − 5)²`
    Booth,
    /// `100(x − y²)² + (x − 1)²`
    Rosenbrock,
}

impl Surface {
    pub fn name(self) -> &'static str {
        match self {
            Surface::Ackley => "ackley",
            Surface::Booth => "booth",
            Surface::Rosenbrock => "rosenbrock",
        }
    }

    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Surface::Ackley => {
                let r = (0.5 * (x * x + y * y)).sqrt();
                20.0 - 20.0 * (-0.2 * r).exp() - (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp() + E
            }
            Surface::Booth => {
                let a = x + 2.0 * y - 7.0;
                let b = 2.0 * x + y - 5.0;
                a * a + b * b
            }
            Surface::Rosenbrock => {
                let a = x - y * y;
                100.0 * a * a + (x - 1.0) * (x - 1.0)
            }
        }
    }

    /// Analytic gradient. Ackley's cone tip at the origin uses the zero
    /// subgradient.
    pub fn grad(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Surface::Ackley => {
                let r = (0.5 * (x * x + y * y)).sqrt();
                let cone = if r > 0.0 { 2.0 * (-0.2 * r).exp() / r } else { 0.0 };
                let wave = PI * (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp();
                (
                    cone * x + wave * (2.0 * PI * x).sin(),
                    cone * y + wave * (2.0 * PI * y).sin(),
                )
            }
            Surface::Booth => {
                let a = x + 2.0 * y - 7.0;
                let b = 2.0 * x + y - 5.0;
                (2.0 * a + 4.0 * b, 4.0 * a + 2.0 * b)
            }
            Surface::Rosenbrock => {
                let a = x - y * y;
                (200.0 * a + 2.0 * (x - 1.0), -400.0 * y * a)
            }
        }
    }

    pub fn minimizer(self) -> (f64, f64) {
        match self {
            Surface::Ackley => (0.0, 0.0),
            Surface::Booth => (1.0, 3.0),
            Surface::Rosenbrock => (1.0, 1.0),
        }
    }

    pub fn default_start(self) -> (f64, f64) {
        match self {
            Surface::Ackley => (1.3, -0.7),
            Surface::Booth => (0.0, 0.0),
            Surface::Rosenbrock => (-0.5, 1.5),
        }
    }
}

/// A surface plus a starting point; stochastic gradients add N(0, 1) noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProblem {
    pub surface: Surface,
    pub start: (f64, f64),
}

impl SurfaceProblem {
    pub fn new(surface: Surface) -> Self {
        Self {
            surface,
            start: surface.default_start(),
        }
    }

    pub fn objective(&self, w: &DenseVector) -> f64 {
        self.surface.eval(w[0], w[1])
    }

    pub fn grad(&self, w: &DenseVector) -> DenseVector {
        let (gx, gy) = self.surface.grad(w[0], w[1]);
        DenseVector::from_raw(vec![gx, gy])
    }

    /// Analytic gradient plus an independent standard-normal draw per element.
    pub fn noisy_grad(&self, w: &DenseVector, stream: &mut RngStream) -> Result<DenseVector> {
        let mut g = self.grad(w);
        g.add_scaled(1.0, &gaussian(stream, 2)?)?;
        Ok(g)
    }
}
