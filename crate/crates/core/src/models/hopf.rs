//! The Hopf torus `ℂ*/⟨z ↦ αz⟩` (as a source, in log coordinates) and the
//! Hopf surface `(ℂ² ∖ 0)/⟨y ↦ αy⟩` (as a target, on its covering space).

use std::f64::consts::TAU;

use super::{check_alpha, DeckElement, SourceSurface, TargetManifold};
use crate::error::{Error, Result};
use crate::geometry::{ChartGeometry, MetricJet};
use crate::rng::SplitMix64;
use crate::tensor::{standard_complex_structure, Matrix, Tensor3, Tensor4, Vector};

/// Points of the covering closer than this to the origin are rejected.
pub const RHO_MIN: f64 = 1e-8;

/// Source torus in log coordinates `(s, θ)`, where the metric is `ds² + dθ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfTorusSource {
    alpha: f64,
}

impl HopfTorusSource {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `2π log α`.
    pub fn volume(&self) -> f64 {
        TAU * self.alpha.ln()
    }
}

impl ChartGeometry<2> for HopfTorusSource {
    fn metric(&self, _p: &Vector<2>) -> Matrix<2> {
        Matrix::<2>::identity()
    }

    fn metric_jet(&self, _p: &Vector<2>) -> MetricJet<2> {
        MetricJet::default()
    }

    fn complex_structure(&self, _p: &Vector<2>) -> Matrix<2> {
        standard_complex_structure()
    }

    fn complex_structure_jet(&self, _p: &Vector<2>) -> Tensor3<2> {
        Tensor3::zeros()
    }

    fn metric_inverse(&self, _p: &Vector<2>) -> Result<Matrix<2>> {
        Ok(Matrix::<2>::identity())
    }

    fn christoffel(&self, _p: &Vector<2>) -> Result<Tensor3<2>> {
        Ok(Tensor3::zeros())
    }
}

impl SourceSurface for HopfTorusSource {
    fn periods(&self) -> [f64; 2] {
        [self.alpha.ln(), TAU]
    }

    fn name(&self) -> &'static str {
        "hopf_torus"
    }
}

/// Hopf surface on `ℝ⁴ ∖ {0}` with `h = ρ⁻² δ` and the standard `J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfSurface {
    alpha: f64,
}

impl HopfSurface {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `∂_k ρ⁻² = −2 y_k ρ⁻⁴`.
    fn conformal_gradient(y: &Vector<4>) -> (f64, Vector<4>) {
        let r2 = y.norm_squared();
        (1.0 / r2, y * (-2.0 / (r2 * r2)))
    }
}

impl ChartGeometry<4> for HopfSurface {
    fn metric(&self, y: &Vector<4>) -> Matrix<4> {
        Matrix::<4>::identity() / y.norm_squared()
    }

    fn metric_jet(&self, y: &Vector<4>) -> MetricJet<4> {
        let r2 = y.norm_squared();
        let r4 = r2 * r2;
        let r6 = r4 * r2;
        let first = Tensor3::from_fn(|i, j, k| if i == j { -2.0 * y[k] / r4 } else { 0.0 });
        let second = Tensor4::from_fn(|i, j, k, l| {
            if i != j {
                return 0.0;
            }
            let delta = if k == l { 1.0 } else { 0.0 };
            -2.0 * delta / r4 + 8.0 * y[k] * y[l] / r6
        });
        MetricJet { first, second }
    }

    fn complex_structure(&self, _y: &Vector<4>) -> Matrix<4> {
        standard_complex_structure()
    }

    fn complex_structure_jet(&self, _y: &Vector<4>) -> Tensor3<4> {
        Tensor3::zeros()
    }

    fn check_point(&self, y: &Vector<4>) -> Result<()> {
        let rho = y.norm();
        if !rho.is_finite() || rho <= RHO_MIN {
            return Err(Error::PunctureProximity {
                node: None,
                rho,
                rho_min: RHO_MIN,
            });
        }
        Ok(())
    }

    fn metric_inverse(&self, y: &Vector<4>) -> Result<Matrix<4>> {
        let r2 = y.norm_squared();
        if r2 == 0.0 || !r2.is_finite() {
            return Err(Error::DegenerateMetric {
                point: y.iter().copied().collect(),
            });
        }
        Ok(Matrix::<4>::identity() * r2)
    }

    /// Conformal formula `Γ^i_{jk} = ½(δ^i_j φ_k + δ^i_k φ_j − δ_{jk} φ_i)`,
    /// `φ = −2 log ρ`.
    fn christoffel(&self, y: &Vector<4>) -> Result<Tensor3<4>> {
        let r2 = y.norm_squared();
        if r2 == 0.0 {
            return Err(Error::DegenerateMetric {
                point: y.iter().copied().collect(),
            });
        }
        let phi = y * (-2.0 / r2);
        let mut gamma = Tensor3::<4>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let mut s = 0.0;
                    if i == j {
                        s += phi[k];
                    }
                    if i == k {
                        s += phi[j];
                    }
                    if j == k {
                        s -= phi[i];
                    }
                    gamma[(i, j, k)] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    fn fundamental_form(&self, y: &Vector<4>) -> Matrix<4> {
        standard_complex_structure::<4>().transpose() / y.norm_squared()
    }

    /// `dω = d(ρ⁻²) ∧ (dy¹∧dy² + dy³∧dy⁴)` in the cyclic-sum convention.
    fn d_omega(&self, y: &Vector<4>) -> Tensor3<4> {
        let (_, dpsi) = Self::conformal_gradient(y);
        let omega0 = standard_complex_structure::<4>().transpose();
        Tensor3::from_fn(|i, j, k| {
            dpsi[k] * omega0[(i, j)] + dpsi[j] * omega0[(k, i)] + dpsi[i] * omega0[(j, k)]
        })
    }
}

impl TargetManifold<4> for HopfSurface {
    fn name(&self) -> &'static str {
        "hopf_surface"
    }

    fn deck_rank(&self) -> usize {
        1
    }

    fn deck_point(&self, y: &Vector<4>, g: DeckElement) -> Vector<4> {
        y * self.alpha.powi(g[0] as i32)
    }

    fn deck_vector(&self, _y: &Vector<4>, g: DeckElement, v: &Vector<4>) -> Vector<4> {
        v * self.alpha.powi(g[0] as i32)
    }

    fn length_scale(&self, y: &Vector<4>) -> f64 {
        y.norm()
    }
}

/// Real 4×4 form of a complex 2×2 matrix acting on `(z, w) = (y¹ + i y², y³ + i y⁴)`.
/// Entries are `(re, im)` pairs.
pub fn unitary_from_complex(u: [[(f64, f64); 2]; 2]) -> Matrix<4> {
    let mut m = Matrix::<4>::zeros();
    for (r, row) in u.iter().enumerate() {
        for (c, &(re, im)) in row.iter().enumerate() {
            m[(2 * r, 2 * c)] = re;
            m[(2 * r, 2 * c + 1)] = -im;
            m[(2 * r + 1, 2 * c)] = im;
            m[(2 * r + 1, 2 * c + 1)] = re;
        }
    }
    m
}

/// Random element of `U(2)` (Gram–Schmidt on complex Gaussian columns), in
/// real form.
pub fn random_unitary(rng: &mut SplitMix64) -> Matrix<4> {
    type C = (f64, f64);
    let mul = |a: C, b: C| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let conj = |a: C| (a.0, -a.1);
    let mut col0: [C; 2] = [(rng.normal(), rng.normal()), (rng.normal(), rng.normal())];
    let mut col1: [C; 2] = [(rng.normal(), rng.normal()), (rng.normal(), rng.normal())];
    let norm = |c: &[C; 2]| (c[0].0.powi(2) + c[0].1.powi(2) + c[1].0.powi(2) + c[1].1.powi(2)).sqrt();
    let n0 = norm(&col0);
    for z in col0.iter_mut() {
        *z = (z.0 / n0, z.1 / n0);
    }
    // col1 -= <col0, col1> col0
    let ip = {
        let a = mul(conj(col0[0]), col1[0]);
        let b = mul(conj(col0[1]), col1[1]);
        (a.0 + b.0, a.1 + b.1)
    };
    for (k, z) in col1.iter_mut().enumerate() {
        let p = mul(ip, col0[k]);
        *z = (z.0 - p.0, z.1 - p.1);
    }
    let n1 = norm(&col1);
    for z in col1.iter_mut() {
        *z = (z.0 / n1, z.1 / n1);
    }
    unitary_from_complex([[col0[0], col1[0]], [col0[1], col1[1]]])
}
