//! Concrete almost Hermitian models.
//!
//! Sources are flat-coordinate tori (plus a conformal rescaling used to probe
//! conformal invariance). Targets live on a covering chart together with the
//! deck group that produces the quotient; quotient points are never formed.

mod conformal;
mod euclidean;
mod flat_torus;
mod hopf;
mod sphere;

pub use conformal::ConformalSource;
pub use euclidean::Euclidean;
pub use flat_torus::FlatTorus;
pub use hopf::{random_unitary, unitary_from_complex, HopfSurface, HopfTorusSource, RHO_MIN};
pub use sphere::{LogPolarChart, RoundSphere};

use crate::error::{Error, Result};
use crate::geometry::ChartGeometry;
use crate::tensor::Vector;

/// Element of a deck group of rank at most two, as integer exponents.
pub type DeckElement = [i64; 2];

/// A two-dimensional periodic source chart.
pub trait SourceSurface: ChartGeometry<2> {
    /// Coordinate lengths of the fundamental domain along the two grid axes.
    fn periods(&self) -> [f64; 2];

    fn name(&self) -> &'static str;
}

/// A target chart together with its deck action.
pub trait TargetManifold<const N: usize>: ChartGeometry<N> {
    fn name(&self) -> &'static str;

    /// Number of independent deck generators (0 for simply connected charts).
    fn deck_rank(&self) -> usize {
        0
    }

    /// Apply the deck element `g` to a point.
    fn deck_point(&self, y: &Vector<N>, _g: DeckElement) -> Vector<N> {
        *y
    }

    /// Push a tangent vector at `y` forward along the deck element `g`.
    fn deck_vector(&self, _y: &Vector<N>, _g: DeckElement, v: &Vector<N>) -> Vector<N> {
        *v
    }

    /// `y ⊕ v`: straight-line move in chart coordinates.
    fn retract(&self, y: &Vector<N>, v: &Vector<N>) -> Result<Vector<N>> {
        let out = y + v;
        self.check_point(&out)?;
        Ok(out)
    }

    /// Path between two chart points used by homotopies.
    fn interpolate(&self, y0: &Vector<N>, y1: &Vector<N>, t: f64) -> Result<Vector<N>> {
        let out = y0 * (1.0 - t) + y1 * t;
        self.check_point(&out)?;
        Ok(out)
    }

    /// Scale used by finite-difference jet checks.
    fn length_scale(&self, _y: &Vector<N>) -> f64 {
        1.0
    }
}

/// Named model plus parameters, as read from a run configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    HopfTorus { alpha: f64 },
    HopfSurface { alpha: f64 },
    FlatTorus { lattice: [[f64; 2]; 2] },
    RoundSphere { radius: f64 },
    Euclidean2,
    Euclidean4,
}

/// A built model, ready to be used as source or target.
#[derive(Clone, Debug)]
pub enum Model {
    HopfTorus(HopfTorusSource),
    HopfSurface(HopfSurface),
    FlatTorus(FlatTorus),
    RoundSphere(RoundSphere),
    Euclidean2(Euclidean<2>),
    Euclidean4(Euclidean<4>),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::HopfTorus(m) => SourceSurface::name(m),
            Model::HopfSurface(m) => TargetManifold::name(m),
            Model::FlatTorus(m) => SourceSurface::name(m),
            Model::RoundSphere(m) => TargetManifold::name(m),
            Model::Euclidean2(m) => TargetManifold::name(m),
            Model::Euclidean4(m) => TargetManifold::name(m),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::HopfSurface(_) | Model::Euclidean4(_) => 4,
            _ => 2,
        }
    }
}

/// Validate parameters and construct the model.
pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    Ok(match *spec {
        ModelSpec::HopfTorus { alpha } => Model::HopfTorus(HopfTorusSource::new(alpha)?),
        ModelSpec::HopfSurface { alpha } => Model::HopfSurface(HopfSurface::new(alpha)?),
        ModelSpec::FlatTorus { lattice } => Model::FlatTorus(FlatTorus::new(lattice)?),
        ModelSpec::RoundSphere { radius } => Model::RoundSphere(RoundSphere::new(radius)?),
        ModelSpec::Euclidean2 => Model::Euclidean2(Euclidean),
        ModelSpec::Euclidean4 => Model::Euclidean4(Euclidean),
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::config("alpha", format!("must be > 1, got {alpha}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_rejects_out_of_range_parameters() {
        let err = build_model(&ModelSpec::HopfSurface { alpha: 0.5 }).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "alpha"));
        let err = build_model(&ModelSpec::RoundSphere { radius: -1.0 }).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "radius"));
        let err = build_model(&ModelSpec::FlatTorus {
            lattice: [[1.0, 2.0], [2.0, 4.0]],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "lattice"));
    }

    #[test]
    fn build_hopf_surface_has_conformal_form_and_deck_scale() {
        let Model::HopfSurface(h) = build_model(&ModelSpec::HopfSurface { alpha: 2.0 }).unwrap()
        else {
            panic!("wrong model");
        };
        let y = Vector::<4>::new(0.3, -1.2, 0.5, 0.7);
        let w = h.fundamental_form(&y);
        assert!((w[(0, 1)] - 1.0 / y.norm_squared()).abs() < 1e-15);
        assert_eq!(h.deck_point(&y, [1, 0]), y * 2.0);
    }
}
