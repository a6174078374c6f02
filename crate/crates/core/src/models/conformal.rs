use std::f64::consts::TAU;

use super::SourceSurface;
use crate::error::Result;
use crate::geometry::{ChartGeometry, MetricJet};
use crate::tensor::{Matrix, Tensor3, Tensor4, Vector};

/// Periodic conformal rescaling `e^{2φ} g` of a source surface, with
/// `φ = a·sin(2πσ₁/P₁)·cos(2πσ₂/P₂)`. The complex structure is unchanged.
#[derive(Clone, Copy, Debug)]
pub struct ConformalSource<S> {
    pub inner: S,
    pub amplitude: f64,
}

impl<S: SourceSurface> ConformalSource<S> {
    pub fn new(inner: S, amplitude: f64) -> Self {
        Self { inner, amplitude }
    }

    /// `φ`, its gradient and Hessian.
    fn potential(&self, p: &Vector<2>) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let [p1, p2] = self.inner.periods();
        let (k1, k2) = (TAU / p1, TAU / p2);
        let (s1, c1) = (k1 * p[0]).sin_cos();
        let (s2, c2) = (k2 * p[1]).sin_cos();
        let a = self.amplitude;
        let phi = a * s1 * c2;
        let grad = [a * k1 * c1 * c2, -a * k2 * s1 * s2];
        let hess = [
            [-a * k1 * k1 * s1 * c2, -a * k1 * k2 * c1 * s2],
            [-a * k1 * k2 * c1 * s2, -a * k2 * k2 * s1 * c2],
        ];
        (phi, grad, hess)
    }
}

impl<S: SourceSurface> ChartGeometry<2> for ConformalSource<S> {
    fn metric(&self, p: &Vector<2>) -> Matrix<2> {
        let (phi, _, _) = self.potential(p);
        self.inner.metric(p) * (2.0 * phi).exp()
    }

    fn metric_jet(&self, p: &Vector<2>) -> MetricJet<2> {
        let (phi, d, h) = self.potential(p);
        let e = (2.0 * phi).exp();
        let g = self.inner.metric(p);
        let inner = self.inner.metric_jet(p);
        let first = Tensor3::from_fn(|i, j, k| e * (2.0 * d[k] * g[(i, j)] + inner.first[(i, j, k)]));
        let second = Tensor4::from_fn(|i, j, k, l| {
            e * ((4.0 * d[k] * d[l] + 2.0 * h[k][l]) * g[(i, j)]
                + 2.0 * d[k] * inner.first[(i, j, l)]
                + 2.0 * d[l] * inner.first[(i, j, k)]
                + inner.second[(i, j, k, l)])
        });
        MetricJet { first, second }
    }

    fn complex_structure(&self, p: &Vector<2>) -> Matrix<2> {
        self.inner.complex_structure(p)
    }

    fn complex_structure_jet(&self, p: &Vector<2>) -> Tensor3<2> {
        self.inner.complex_structure_jet(p)
    }

    fn check_point(&self, p: &Vector<2>) -> Result<()> {
        self.inner.check_point(p)
    }
}

impl<S: SourceSurface> SourceSurface for ConformalSource<S> {
    fn periods(&self) -> [f64; 2] {
        self.inner.periods()
    }

    fn name(&self) -> &'static str {
        "conformal_rescaling"
    }
}
