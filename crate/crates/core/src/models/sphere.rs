use super::TargetManifold;
use crate::error::{Error, Result};
use crate::geometry::{fd_complex_structure_jet, fd_metric_jet, ChartGeometry, MetricJet};
use crate::tensor::{standard_complex_structure, Matrix, Tensor3, Tensor4, Vector};

/// Chart coordinates beyond this radius are treated as leaving the chart
/// (the projection pole).
const CHART_LIMIT: f64 = 1e6;

/// Round sphere of radius `r` in the stereographic chart projecting from
/// the north pole onto the equatorial plane: `g = 4r⁴/(r² + |x|²)² δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundSphere {
    radius: f64,
}

impl RoundSphere {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config("radius", format!("must be > 0, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn conformal_factor(&self, x: &Vector<2>) -> f64 {
        let r2 = self.radius * self.radius;
        4.0 * r2 * r2 / (r2 + x.norm_squared()).powi(2)
    }

    /// Chart point to the embedded sphere in `ℝ³`.
    pub fn embed(&self, x: &Vector<2>) -> [f64; 3] {
        let r = self.radius;
        let q = x.norm_squared();
        let d = r * r + q;
        [2.0 * r * r * x[0] / d, 2.0 * r * r * x[1] / d, r * (q - r * r) / d]
    }

    /// Inverse of [`Self::embed`] for points away from the north pole.
    pub fn project(&self, p: [f64; 3]) -> Result<Vector<2>> {
        let r = self.radius;
        let denom = r - p[2];
        let x = Vector::<2>::new(r * p[0] / denom, r * p[1] / denom);
        self.check_point(&x)?;
        Ok(x)
    }
}

impl ChartGeometry<2> for RoundSphere {
    fn metric(&self, x: &Vector<2>) -> Matrix<2> {
        Matrix::<2>::identity() * self.conformal_factor(x)
    }

    fn metric_jet(&self, x: &Vector<2>) -> MetricJet<2> {
        let r2 = self.radius * self.radius;
        let c = 16.0 * r2 * r2;
        let d = r2 + x.norm_squared();
        let first = Tensor3::from_fn(|i, j, k| if i == j { -c * x[k] / d.powi(3) } else { 0.0 });
        let second = Tensor4::from_fn(|i, j, k, l| {
            if i != j {
                return 0.0;
            }
            let delta = if k == l { 1.0 } else { 0.0 };
            -c * delta / d.powi(3) + 6.0 * c * x[k] * x[l] / d.powi(4)
        });
        MetricJet { first, second }
    }

    fn complex_structure(&self, _x: &Vector<2>) -> Matrix<2> {
        standard_complex_structure()
    }

    fn complex_structure_jet(&self, _x: &Vector<2>) -> Tensor3<2> {
        Tensor3::zeros()
    }

    fn check_point(&self, x: &Vector<2>) -> Result<()> {
        let n = x.norm();
        if !n.is_finite() || n > CHART_LIMIT * self.radius {
            return Err(Error::OutsideChart {
                point: x.iter().copied().collect(),
                reason: "too close to the projection pole".into(),
            });
        }
        Ok(())
    }
}

impl TargetManifold<2> for RoundSphere {
    fn name(&self) -> &'static str {
        "round_sphere"
    }

    /// Normalized interpolation through the embedding.
    fn interpolate(&self, y0: &Vector<2>, y1: &Vector<2>, t: f64) -> Result<Vector<2>> {
        let a = self.embed(y0);
        let b = self.embed(y1);
        let r2 = self.radius * self.radius;
        let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / r2;
        if cos < -1.0 + 1e-12 {
            return Err(Error::AntipodalPair { node: None });
        }
        let m = [
            (1.0 - t) * a[0] + t * b[0],
            (1.0 - t) * a[1] + t * b[1],
            (1.0 - t) * a[2] + t * b[2],
        ];
        let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        let s = self.radius / n;
        self.project([m[0] * s, m[1] * s, m[2] * s])
    }

    fn length_scale(&self, x: &Vector<2>) -> f64 {
        self.radius + x.norm()
    }
}

/// Log-polar reparametrization `x = c·eˢ(cos θ, sin θ)` of a planar chart.
/// The metric and `J` are pulled back exactly; their jets come from
/// fourth-order finite differences.
#[derive(Clone, Copy, Debug)]
pub struct LogPolarChart<G> {
    pub base: G,
    pub scale: f64,
}

impl<G> LogPolarChart<G> {
    pub fn new(base: G, scale: f64) -> Self {
        Self { base, scale }
    }

    pub fn to_base(&self, p: &Vector<2>) -> Vector<2> {
        let rho = self.scale * p[0].exp();
        Vector::<2>::new(rho * p[1].cos(), rho * p[1].sin())
    }

    fn jacobian(&self, p: &Vector<2>) -> Matrix<2> {
        let rho = self.scale * p[0].exp();
        let (s, c) = p[1].sin_cos();
        Matrix::<2>::new(rho * c, -rho * s, rho * s, rho * c)
    }
}

impl<G: ChartGeometry<2>> ChartGeometry<2> for LogPolarChart<G> {
    fn metric(&self, p: &Vector<2>) -> Matrix<2> {
        let d = self.jacobian(p);
        d.transpose() * self.base.metric(&self.to_base(p)) * d
    }

    fn metric_jet(&self, p: &Vector<2>) -> MetricJet<2> {
        fd_metric_jet(|q| self.metric(q), p, 1e-3)
    }

    fn complex_structure(&self, p: &Vector<2>) -> Matrix<2> {
        let d = self.jacobian(p);
        d.try_inverse().expect("log-polar jacobian is invertible")
            * self.base.complex_structure(&self.to_base(p))
            * d
    }

    fn complex_structure_jet(&self, p: &Vector<2>) -> Tensor3<2> {
        fd_complex_structure_jet(|q| self.complex_structure(q), p, 1e-3)
    }

    fn check_point(&self, p: &Vector<2>) -> Result<()> {
        self.base.check_point(&self.to_base(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{curvature, d_star_omega, FiniteDifferenceJets};
    use crate::rng::SplitMix64;

    #[test]
    fn ricci_equals_metric_over_radius_squared() {
        for radius in [1.0, 2.0, 0.5] {
            let s = RoundSphere::new(radius).unwrap();
            let fd = FiniteDifferenceJets::new(s, radius);
            let mut rng = SplitMix64::new(17);
            for _ in 0..50 {
                let x = Vector::<2>::new(
                    rng.uniform(-2.0, 2.0) * radius,
                    rng.uniform(-2.0, 2.0) * radius,
                );
                let g = s.metric(&x);
                let rc = curvature(&s, &x).unwrap().ricci;
                assert!(
                    (rc - g / (radius * radius)).abs().max() < 1e-8 * g.max(),
                    "radius {radius}"
                );
                // independent finite-difference curvature
                let rc_fd = curvature(&fd, &x).unwrap().ricci;
                assert!((rc_fd - rc).abs().max() < 1e-5 * g.max() / (radius * radius));
                assert_eq!(d_star_omega(&s, &x).unwrap().norm(), 0.0);
            }
        }
    }

    #[test]
    fn embedding_round_trip() {
        let s = RoundSphere::new(1.5).unwrap();
        let x = Vector::<2>::new(0.3, -2.0);
        let p = s.embed(&x);
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        assert!((n - 1.5).abs() < 1e-14);
        assert!((s.project(p).unwrap() - x).norm() < 1e-13);
    }

    #[test]
    fn antipodal_interpolation_is_rejected() {
        let s = RoundSphere::new(1.0).unwrap();
        // x and −x/|x|² are antipodal in this chart
        let x = Vector::<2>::new(0.5, 0.0);
        let y = Vector::<2>::new(-2.0, 0.0);
        assert!(matches!(
            s.interpolate(&x, &y, 0.5),
            Err(Error::AntipodalPair { .. })
        ));
        let mid = s.interpolate(&x, &Vector::<2>::new(0.5, 0.5), 0.0).unwrap();
        assert!((mid - x).norm() < 1e-14);
    }

    #[test]
    fn log_polar_sphere_metric_is_sech_squared() {
        let r = 2.0;
        let chart = LogPolarChart::new(RoundSphere::new(r).unwrap(), r);
        for s in [-3.0, -0.5, 0.0, 1.2, 4.0] {
            let g = chart.metric(&Vector::<2>::new(s, 0.7));
            let expect = r * r / s.cosh().powi(2);
            assert!((g[(0, 0)] - expect).abs() < 1e-12 * expect);
            assert!((g[(1, 1)] - expect).abs() < 1e-12 * expect);
            assert!(g[(0, 1)].abs() < 1e-12 * expect);
            let k = curvature(&chart, &Vector::<2>::new(s, 0.7)).unwrap().ricci;
            let rel = (k[(0, 0)] - g[(0, 0)] / (r * r)).abs() / (g[(0, 0)] / (r * r));
            assert!(rel < 1e-5, "s {s}: {rel:e}");
        }
    }
}
