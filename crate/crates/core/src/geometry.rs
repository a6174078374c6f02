//! Chart-based almost Hermitian structures.
//!
//! A model supplies closed-form components of the metric `g_{ij}` and the
//! almost complex structure `J^i_j` together with their coordinate partials.
//! Everything else (Christoffel symbols, curvature, the fundamental form
//! `ω(X, Y) = g(JX, Y)`, `dω` and `d*ω`) is assembled from those jets here.
//! Models may override the assembled quantities with closed forms; the
//! assembled versions then serve as the cross-check.
//!
//! Index conventions:
//! * `ω_{ij} = ω(∂_i, ∂_j) = g_{kj} J^k_i`
//! * `(dω)_{ijk} = ω_{ij,k} + ω_{ki,j} + ω_{jk,i}`
//! * `R(∂_k, ∂_l)∂_j = R^i_{jkl} ∂_i` with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`
//! * two-forms are paired as real tensors, `⟨a, b⟩ = a_{ij} b_{kl} g^{ik} g^{jl}`,
//!   so `|ω|² = 2m` on a `2m`-manifold.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Matrix, Tensor3, Tensor4, Vector};

/// First and second coordinate partials of the metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct MetricJet<const N: usize> {
    /// `g_{ij,k}` stored as `[i][j][k]`.
    pub first: Tensor3<N>,
    /// `g_{ij,kl}` stored as `[i][j][k][l]`.
    pub second: Tensor4<N>,
}

pub trait ChartGeometry<const N: usize>: Send + Sync {
    fn metric(&self, p: &Vector<N>) -> Matrix<N>;

    fn metric_jet(&self, p: &Vector<N>) -> MetricJet<N>;

    /// `J^i_j` with `i` the row.
    fn complex_structure(&self, p: &Vector<N>) -> Matrix<N>;

    /// `J^i_{j,k}` stored as `[i][j][k]`.
    fn complex_structure_jet(&self, p: &Vector<N>) -> Tensor3<N>;

    /// Rejects points outside the chart domain.
    fn check_point(&self, _p: &Vector<N>) -> Result<()> {
        Ok(())
    }

    fn metric_inverse(&self, p: &Vector<N>) -> Result<Matrix<N>> {
        invert_metric(&self.metric(p), p)
    }

    fn christoffel(&self, p: &Vector<N>) -> Result<Tensor3<N>> {
        Ok(levi_civita(
            &self.metric_inverse(p)?,
            &self.metric_jet(p).first,
        ))
    }

    fn fundamental_form(&self, p: &Vector<N>) -> Matrix<N> {
        omega_from(&self.metric(p), &self.complex_structure(p))
    }

    /// `ω_{ij,k}` stored as `[i][j][k]`.
    fn fundamental_form_jet(&self, p: &Vector<N>) -> Tensor3<N> {
        let g = self.metric(p);
        let dg = self.metric_jet(p).first;
        let j = self.complex_structure(p);
        let dj = self.complex_structure_jet(p);
        Tensor3::from_fn(|a, b, k| {
            (0..N)
                .map(|l| dg[(l, b, k)] * j[(l, a)] + g[(l, b)] * dj[(l, a, k)])
                .sum()
        })
    }

    fn d_omega(&self, p: &Vector<N>) -> Tensor3<N> {
        exterior_derivative(&self.fundamental_form_jet(p))
    }
}

pub(crate) fn invert_metric<const N: usize>(g: &Matrix<N>, p: &Vector<N>) -> Result<Matrix<N>> {
    match g.try_inverse() {
        Some(inv) if inv.iter().all(|x| x.is_finite()) => Ok(inv),
        _ => Err(Error::DegenerateMetric {
            point: p.iter().copied().collect(),
        }),
    }
}

/// `ω_{ij} = g_{kj} J^k_i`, i.e. `ω = Jᵀ g`.
pub fn omega_from<const N: usize>(g: &Matrix<N>, j: &Matrix<N>) -> Matrix<N> {
    j.transpose() * g
}

/// `Γ^i_{jk} = ½ g^{il}(g_{lj,k} + g_{lk,j} − g_{jk,l})`.
pub fn levi_civita<const N: usize>(ginv: &Matrix<N>, dg: &Tensor3<N>) -> Tensor3<N> {
    // lowered symbols first: Γ_{ljk}
    let lowered =
        Tensor3::<N>::from_fn(|l, j, k| 0.5 * (dg[(l, j, k)] + dg[(l, k, j)] - dg[(j, k, l)]));
    Tensor3::from_fn(|i, j, k| (0..N).map(|l| ginv[(i, l)] * lowered[(l, j, k)]).sum())
}

/// `(dω)_{ijk} = ω_{ij,k} + ω_{ki,j} + ω_{jk,i}` from `ω_{ij,k}`.
pub fn exterior_derivative<const N: usize>(domega: &Tensor3<N>) -> Tensor3<N> {
    Tensor3::from_fn(|i, j, k| domega[(i, j, k)] + domega[(k, i, j)] + domega[(j, k, i)])
}

pub fn christoffel<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
) -> Result<Tensor3<N>> {
    geom.check_point(p)?;
    geom.christoffel(p)
}

pub fn fundamental_form<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
) -> Result<Matrix<N>> {
    geom.check_point(p)?;
    Ok(geom.fundamental_form(p))
}

pub fn d_omega<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
) -> Result<Tensor3<N>> {
    geom.check_point(p)?;
    Ok(geom.d_omega(p))
}

/// Finite-difference mode of [`d_omega`]: second-order centered differences
/// of the `ω` components with the given step, so discrepancies against the
/// analytic mode fall like `step²`.
pub fn d_omega_fd<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
    step: f64,
) -> Tensor3<N> {
    let mut jet = Tensor3::<N>::zeros();
    for k in 0..N {
        let mut plus = *p;
        let mut minus = *p;
        plus[k] += step;
        minus[k] -= step;
        let diff = (geom.fundamental_form(&plus) - geom.fundamental_form(&minus)) / (2.0 * step);
        for i in 0..N {
            for j in 0..N {
                jet[(i, j, k)] = diff[(i, j)];
            }
        }
    }
    exterior_derivative(&jet)
}

/// Codifferential of the fundamental form, `(d*ω)_j = −g^{ab} ∇_a ω_{bj}`.
///
/// Evaluated through the divergence identity for skew tensors,
/// `∇_a ω^{ab} = |g|^{-1/2} ∂_a(|g|^{1/2} ω^{ab})`, using only the analytic
/// jets (no Christoffel symbols). Identically zero in real dimension 2.
pub fn d_star_omega<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
) -> Result<Vector<N>> {
    geom.check_point(p)?;
    if N == 2 {
        return Ok(Vector::<N>::zeros());
    }
    let g = geom.metric(p);
    let ginv = geom.metric_inverse(p)?;
    let dg = geom.metric_jet(p).first;
    let omega = geom.fundamental_form(p);
    let domega = geom.fundamental_form_jet(p);

    // ∂_k g^{ab} = −g^{ac} g_{cd,k} g^{db}
    let dginv = Tensor3::<N>::from_fn(|a, b, k| {
        let mut s = 0.0;
        for c in 0..N {
            for d in 0..N {
                s -= ginv[(a, c)] * dg[(c, d, k)] * ginv[(d, b)];
            }
        }
        s
    });
    // ∂_k log sqrt|g| = ½ g^{ab} g_{ab,k}
    let mut dlog_vol = [0.0; N];
    for (k, slot) in dlog_vol.iter_mut().enumerate() {
        let mut s = 0.0;
        for a in 0..N {
            for b in 0..N {
                s += ginv[(a, b)] * dg[(a, b, k)];
            }
        }
        *slot = 0.5 * s;
    }
    let raised = ginv * omega * ginv.transpose();

    // div^b = ∂_a ω^{ab} + (∂_a log sqrt|g|) ω^{ab}
    let mut div = Vector::<N>::zeros();
    for b in 0..N {
        let mut s = 0.0;
        for a in 0..N {
            // ∂_a ω^{ab} = ∂_a(g^{ac} g^{bd} ω_{cd})
            let mut d = 0.0;
            for c in 0..N {
                for e in 0..N {
                    d += dginv[(a, c, a)] * ginv[(b, e)] * omega[(c, e)]
                        + ginv[(a, c)] * dginv[(b, e, a)] * omega[(c, e)]
                        + ginv[(a, c)] * ginv[(b, e)] * domega[(c, e, a)];
                }
            }
            s += d + dlog_vol[a] * raised[(a, b)];
        }
        div[b] = s;
    }
    Ok(-(g * div))
}

/// Riemann and Ricci tensors at one point.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureData<const N: usize> {
    /// `R^i_{jkl}` stored as `[i][j][k][l]`.
    pub riemann: Tensor4<N>,
    /// `Rc_{jl} = R^i_{jil}`.
    pub ricci: Matrix<N>,
}

impl<const N: usize> CurvatureData<N> {
    /// `R^i_{jkl} + R^i_{klj} + R^i_{ljk}`, maximum over components.
    pub fn bianchi_residual(&self) -> f64 {
        let r = &self.riemann;
        let mut m = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    for l in 0..N {
                        let s = r[(i, j, k, l)] + r[(i, k, l, j)] + r[(i, l, j, k)];
                        m = m.max(s.abs());
                    }
                }
            }
        }
        m
    }

    /// Deviation of the stored Ricci tensor from the trace of Riemann.
    pub fn ricci_trace_residual(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 0..N {
            for l in 0..N {
                let tr: f64 = (0..N).map(|i| self.riemann[(i, j, i, l)]).sum();
                m = m.max((tr - self.ricci[(j, l)]).abs());
            }
        }
        m
    }
}

/// Curvature assembled from the metric jets.
pub fn curvature<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
) -> Result<CurvatureData<N>> {
    geom.check_point(p)?;
    let ginv = geom.metric_inverse(p)?;
    let jet = geom.metric_jet(p);
    let gamma = levi_civita(&ginv, &jet.first);

    // ∂_m Γ^i_{jk} = ∂_m g^{il} Γ_{ljk} + g^{il} ∂_m Γ_{ljk}
    let lowered = Tensor3::<N>::from_fn(|l, j, k| {
        0.5 * (jet.first[(l, j, k)] + jet.first[(l, k, j)] - jet.first[(j, k, l)])
    });
    let dgamma = Tensor4::<N>::from_fn(|i, j, k, m| {
        let mut s = 0.0;
        for l in 0..N {
            let mut dginv = 0.0;
            for a in 0..N {
                for b in 0..N {
                    dginv -= ginv[(i, a)] * jet.first[(a, b, m)] * ginv[(b, l)];
                }
            }
            let dlow = 0.5
                * (jet.second[(l, j, k, m)] + jet.second[(l, k, j, m)]
                    - jet.second[(j, k, l, m)]);
            s += dginv * lowered[(l, j, k)] + ginv[(i, l)] * dlow;
        }
        s
    });
    Ok(assemble_curvature(&gamma, &dgamma))
}

/// `R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} − Γ^i_{lm} Γ^m_{kj}`,
/// with `dgamma[i][j][k][m] = ∂_m Γ^i_{jk}`.
pub fn assemble_curvature<const N: usize>(
    gamma: &Tensor3<N>,
    dgamma: &Tensor4<N>,
) -> CurvatureData<N> {
    let riemann = Tensor4::<N>::from_fn(|i, j, k, l| {
        let mut s = dgamma[(i, l, j, k)] - dgamma[(i, k, j, l)];
        for m in 0..N {
            s += gamma[(i, k, m)] * gamma[(m, l, j)] - gamma[(i, l, m)] * gamma[(m, k, j)];
        }
        s
    });
    let mut ricci = Matrix::<N>::zeros();
    for j in 0..N {
        for l in 0..N {
            ricci[(j, l)] = (0..N).map(|i| riemann[(i, j, i, l)]).sum();
        }
    }
    CurvatureData { riemann, ricci }
}

/// Fourth-order centered difference of a matrix-valued function along
/// coordinate `k`.
fn fd4_matrix<const N: usize>(
    f: &impl Fn(&Vector<N>) -> Matrix<N>,
    p: &Vector<N>,
    k: usize,
    h: f64,
) -> Matrix<N> {
    let at = |t: f64| {
        let mut q = *p;
        q[k] += t;
        f(&q)
    };
    (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h)
}

/// Metric jets by fourth-order centered differences of `metric`.
pub fn fd_metric_jet<const N: usize>(
    metric: impl Fn(&Vector<N>) -> Matrix<N>,
    p: &Vector<N>,
    h: f64,
) -> MetricJet<N> {
    let mut first = Tensor3::<N>::zeros();
    let mut second = Tensor4::<N>::zeros();
    for k in 0..N {
        let dk = fd4_matrix(&metric, p, k, h);
        for i in 0..N {
            for j in 0..N {
                first[(i, j, k)] = dk[(i, j)];
            }
        }
        for l in 0..N {
            let dkl = fd4_matrix(&|q: &Vector<N>| fd4_matrix(&metric, q, k, h), p, l, h);
            for i in 0..N {
                for j in 0..N {
                    second[(i, j, k, l)] = dkl[(i, j)];
                }
            }
        }
    }
    MetricJet { first, second }
}

/// `J^i_{j,k}` by fourth-order centered differences.
pub fn fd_complex_structure_jet<const N: usize>(
    j: impl Fn(&Vector<N>) -> Matrix<N>,
    p: &Vector<N>,
    h: f64,
) -> Tensor3<N> {
    let mut out = Tensor3::<N>::zeros();
    for k in 0..N {
        let dk = fd4_matrix(&j, p, k, h);
        for a in 0..N {
            for b in 0..N {
                out[(a, b, k)] = dk[(a, b)];
            }
        }
    }
    out
}

/// Replaces a model's analytic jets by finite differences of its
/// components. Used as an independent oracle for the analytic jets and for
/// charts whose jets are not available in closed form.
#[derive(Clone, Debug)]
pub struct FiniteDifferenceJets<G> {
    pub inner: G,
    /// Absolute step; defaults to `1e-4` times the supplied length scale.
    pub step: f64,
}

impl<G> FiniteDifferenceJets<G> {
    pub fn new(inner: G, scale: f64) -> Self {
        Self {
            inner,
            step: 1e-4 * scale,
        }
    }
}

impl<G: ChartGeometry<N>, const N: usize> ChartGeometry<N> for FiniteDifferenceJets<G> {
    fn metric(&self, p: &Vector<N>) -> Matrix<N> {
        self.inner.metric(p)
    }

    fn metric_jet(&self, p: &Vector<N>) -> MetricJet<N> {
        fd_metric_jet(|q| self.inner.metric(q), p, self.step)
    }

    fn complex_structure(&self, p: &Vector<N>) -> Matrix<N> {
        self.inner.complex_structure(p)
    }

    fn complex_structure_jet(&self, p: &Vector<N>) -> Tensor3<N> {
        fd_complex_structure_jet(|q| self.inner.complex_structure(q), p, self.step)
    }

    fn check_point(&self, p: &Vector<N>) -> Result<()> {
        self.inner.check_point(p)
    }
}

/// Pointwise residuals of the almost Hermitian axioms.
#[derive(Clone, Copy, Debug, Default)]
pub struct StructureResiduals {
    /// Smallest metric eigenvalue seen (must stay positive).
    pub min_metric_eigenvalue: f64,
    /// `max |J² + I|`.
    pub j_squared: f64,
    /// `max |g(JX, JY) − g(X, Y)|` over random unit-scale `X, Y`.
    pub compatibility: f64,
    /// `max |ω + ωᵀ|`.
    pub omega_skew: f64,
    /// First Bianchi identity residual.
    pub bianchi: f64,
    /// Ricci-versus-trace consistency.
    pub ricci_trace: f64,
    /// `max |(dω)_{ijk} + (dω)_{jik}|`.
    pub d_omega_antisymmetry: f64,
}

impl StructureResiduals {
    pub fn merge(self, other: Self) -> Self {
        Self {
            min_metric_eigenvalue: self.min_metric_eigenvalue.min(other.min_metric_eigenvalue),
            j_squared: self.j_squared.max(other.j_squared),
            compatibility: self.compatibility.max(other.compatibility),
            omega_skew: self.omega_skew.max(other.omega_skew),
            bianchi: self.bianchi.max(other.bianchi),
            ricci_trace: self.ricci_trace.max(other.ricci_trace),
            d_omega_antisymmetry: self.d_omega_antisymmetry.max(other.d_omega_antisymmetry),
        }
    }

    pub fn worst_identity(&self) -> f64 {
        self.j_squared
            .max(self.compatibility)
            .max(self.omega_skew)
            .max(self.bianchi)
            .max(self.ricci_trace)
            .max(self.d_omega_antisymmetry)
    }
}

/// Evaluates the structure axioms at one point, with random test vectors.
pub fn structure_residuals<G: ChartGeometry<N> + ?Sized, const N: usize>(
    geom: &G,
    p: &Vector<N>,
    rng: &mut SplitMix64,
) -> Result<StructureResiduals> {
    geom.check_point(p)?;
    let g = geom.metric(p);
    let j = geom.complex_structure(p);
    let omega = geom.fundamental_form(p);
    let curv = curvature(geom, p)?;
    let dw = geom.d_omega(p);

    let min_eig = nalgebra::DMatrix::from_iterator(N, N, g.iter().copied())
        .symmetric_eigenvalues()
        .min();
    let j_squared = (j * j + Matrix::<N>::identity()).abs().max();
    let x = Vector::<N>::from_fn(|_, _| rng.normal());
    let y = Vector::<N>::from_fn(|_, _| rng.normal());
    let compat = ((j * x).dot(&(g * (j * y))) - x.dot(&(g * y))).abs();
    let omega_skew = (omega + omega.transpose()).abs().max();
    let mut anti = 0.0_f64;
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                anti = anti.max((dw[(a, b, c)] + dw[(b, a, c)]).abs());
            }
        }
    }
    Ok(StructureResiduals {
        min_metric_eigenvalue: min_eig,
        j_squared,
        compatibility: compat,
        omega_skew,
        bianchi: curv.bianchi_residual(),
        ricci_trace: curv.ricci_trace_residual(),
        d_omega_antisymmetry: anti,
    })
}
