use super::{DeckElement, SourceSurface, TargetManifold};
use crate::error::{Error, Result};
use crate::geometry::{ChartGeometry, MetricJet};
use crate::tensor::{standard_complex_structure, Matrix, Tensor3, Vector};

/// Flat torus `ℝ²/Λ` in lattice coordinates: the point with coordinates
/// `σ` sits at `σ¹p₁ + σ²p₂`, both coordinate periods are 1, and the metric
/// is the constant Gram matrix `BᵀB` with `B = [p₁ p₂]`.
///
/// As a target its deck group is `ℤ²` acting by integer translations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatTorus {
    basis: Matrix<2>,
    gram: Matrix<2>,
    gram_inverse: Matrix<2>,
    j: Matrix<2>,
}

impl FlatTorus {
    /// `lattice = [p₁, p₂]`.
    pub fn new(lattice: [[f64; 2]; 2]) -> Result<Self> {
        let basis = Matrix::<2>::new(lattice[0][0], lattice[1][0], lattice[0][1], lattice[1][1]);
        let det = basis.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::config("lattice", "period vectors must span ℝ²"));
        }
        let gram = basis.transpose() * basis;
        let binv = basis.try_inverse().expect("checked determinant");
        let j = binv * standard_complex_structure::<2>() * basis;
        Ok(Self {
            basis,
            gram,
            gram_inverse: gram.try_inverse().expect("checked determinant"),
            j,
        })
    }

    pub fn unit_square() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]]).expect("valid lattice")
    }

    pub fn basis(&self) -> Matrix<2> {
        self.basis
    }

    pub fn area(&self) -> f64 {
        self.basis.determinant().abs()
    }
}

impl ChartGeometry<2> for FlatTorus {
    fn metric(&self, _p: &Vector<2>) -> Matrix<2> {
        self.gram
    }

    fn metric_jet(&self, _p: &Vector<2>) -> MetricJet<2> {
        MetricJet::default()
    }

    fn complex_structure(&self, _p: &Vector<2>) -> Matrix<2> {
        self.j
    }

    fn complex_structure_jet(&self, _p: &Vector<2>) -> Tensor3<2> {
        Tensor3::zeros()
    }

    fn metric_inverse(&self, _p: &Vector<2>) -> Result<Matrix<2>> {
        Ok(self.gram_inverse)
    }

    fn christoffel(&self, _p: &Vector<2>) -> Result<Tensor3<2>> {
        Ok(Tensor3::zeros())
    }
}

impl SourceSurface for FlatTorus {
    fn periods(&self) -> [f64; 2] {
        [1.0, 1.0]
    }

    fn name(&self) -> &'static str {
        "flat_torus"
    }
}

impl TargetManifold<2> for FlatTorus {
    fn name(&self) -> &'static str {
        "flat_torus"
    }

    fn deck_rank(&self) -> usize {
        2
    }

    fn deck_point(&self, y: &Vector<2>, g: DeckElement) -> Vector<2> {
        y + Vector::<2>::new(g[0] as f64, g[1] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{christoffel, curvature, d_omega, d_star_omega};

    #[test]
    fn skew_lattice_is_flat_and_kahler() {
        let t = FlatTorus::new([[1.0, 0.0], [0.4, 1.3]]).unwrap();
        let p = Vector::<2>::new(0.2, 0.7);
        assert_eq!(christoffel(&t, &p).unwrap().max_abs(), 0.0);
        assert_eq!(curvature(&t, &p).unwrap().riemann.max_abs(), 0.0);
        assert_eq!(d_omega(&t, &p).unwrap().max_abs(), 0.0);
        assert_eq!(d_star_omega(&t, &p).unwrap().norm(), 0.0);
        let j = t.complex_structure(&p);
        assert!((j * j + Matrix::<2>::identity()).abs().max() < 1e-14);
        let g = t.metric(&p);
        assert!((j.transpose() * g * j - g).abs().max() < 1e-14);
        // ω is the area form: ω₁₂ = det B
        assert!((t.fundamental_form(&p)[(0, 1)] - t.area()).abs() < 1e-14);
    }
}
