use super::{SourceSurface, TargetManifold};
use crate::geometry::{ChartGeometry, MetricJet};
use crate::tensor::{standard_complex_structure, Matrix, Tensor3, Vector};

/// `ℝ^N` with the Euclidean metric and the standard complex structure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Euclidean<const N: usize>;

impl<const N: usize> ChartGeometry<N> for Euclidean<N> {
    fn metric(&self, _p: &Vector<N>) -> Matrix<N> {
        Matrix::<N>::identity()
    }

    fn metric_jet(&self, _p: &Vector<N>) -> MetricJet<N> {
        MetricJet::default()
    }

    fn complex_structure(&self, _p: &Vector<N>) -> Matrix<N> {
        standard_complex_structure()
    }

    fn complex_structure_jet(&self, _p: &Vector<N>) -> Tensor3<N> {
        Tensor3::zeros()
    }

    fn metric_inverse(&self, _p: &Vector<N>) -> crate::Result<Matrix<N>> {
        Ok(Matrix::<N>::identity())
    }

    fn christoffel(&self, _p: &Vector<N>) -> crate::Result<Tensor3<N>> {
        Ok(Tensor3::zeros())
    }
}

impl<const N: usize> TargetManifold<N> for Euclidean<N> {
    fn name(&self) -> &'static str {
        "euclidean"
    }
}

/// The unit-period square, used when ℝ² is asked to act as a periodic source.
impl SourceSurface for Euclidean<2> {
    fn periods(&self) -> [f64; 2] {
        [1.0, 1.0]
    }

    fn name(&self) -> &'static str {
        "euclidean"
    }
}
