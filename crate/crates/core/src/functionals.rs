//! Energies, Euler–Lagrange fields and the identity checks built on them.
//!
//! Two-forms are paired as real tensors, `⟨a, b⟩ = g^{αγ} g^{βδ} a_{αβ} b_{γδ}`,
//! and maps' derivatives as `⟨X, Y⟩ = g^{αβ} h_{ij} X^i_α Y^j_β`.

use crate::discrete_map::{MapField, MapSpace, NodeJet, SourceNode, VariationField};
use crate::error::{Error, Result};
use crate::models::{SourceSurface, TargetManifold};
use crate::tensor::{Matrix, Tensor3, TangentMap, Vector};

/// `g^{αβ} h_{ij} X^i_α Y^j_β`.
pub fn map_inner<const N: usize>(
    g_inv: &Matrix<2>,
    h: &Matrix<N>,
    x: &TangentMap<N>,
    y: &TangentMap<N>,
) -> f64 {
    (x.transpose() * h * y * g_inv).trace()
}

/// `g^{αγ} g^{βδ} a_{αβ} b_{γδ}`.
pub fn form_inner(g_inv: &Matrix<2>, a: &Matrix<2>, b: &Matrix<2>) -> f64 {
    (g_inv * a * g_inv * b.transpose()).trace()
}

/// Pointwise quantities behind the energy densities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointEnergy {
    /// `½|Tf|²`.
    pub e: f64,
    /// `−½⟨ω_M, f*ω_N⟩`.
    pub k: f64,
    /// `¼|Tf + J_N Tf J_M|²`.
    pub e_plus_direct: f64,
    /// `¼|Tf − J_N Tf J_M|²`.
    pub e_minus_direct: f64,
    /// `⟨Tf, J_N Tf J_M⟩`.
    pub twisted_pairing: f64,
    /// `⟨Tf + J Tf J, Tf − J Tf J⟩`.
    pub orthogonality: f64,
    /// `|Tf|`.
    pub tf_norm: f64,
}

pub fn point_energy<const N: usize>(
    src: &SourceNode,
    tf: &TangentMap<N>,
    h: &Matrix<N>,
    j_n: &Matrix<N>,
    omega_n: &Matrix<N>,
) -> PointEnergy {
    let jtj = j_n * tf * src.j;
    let plus = tf + jtj;
    let minus = tf - jtj;
    let tf2 = map_inner(&src.g_inv, h, tf, tf);
    let pull = tf.transpose() * omega_n * tf;
    PointEnergy {
        e: 0.5 * tf2,
        k: -0.5 * form_inner(&src.g_inv, &src.omega, &pull),
        e_plus_direct: 0.25 * map_inner(&src.g_inv, h, &plus, &plus),
        e_minus_direct: 0.25 * map_inner(&src.g_inv, h, &minus, &minus),
        twisted_pairing: map_inner(&src.g_inv, h, tf, &jtj),
        orthogonality: map_inner(&src.g_inv, h, &plus, &minus),
        tf_norm: tf2.max(0.0).sqrt(),
    }
}

/// Integrated energies of one map.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub e: f64,
    pub k: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_a: f64,
    pub a: f64,
    /// `E₊` integrated from `¼|Tf + J Tf J|²` instead of `E + K`.
    pub e_plus_direct: f64,
    pub sup_dtf: f64,
    /// Node of the largest `|Tf|`.
    pub argmax: (usize, usize),
    /// False when some density was not finite.
    pub finite: bool,
}

impl EnergyReport {
    /// `|E₊(E + K) − E₊(direct)| / (1 + |E₊|)`.
    pub fn two_route_defect(&self) -> f64 {
        (self.e_plus - self.e_plus_direct).abs() / (1.0 + self.e_plus.abs())
    }
}

/// Energies from per-node values and derivatives supplied by the caller.
pub fn energy_from_jet<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    values: &[Vector<N>],
    derivs: &[TangentMap<N>],
    a: f64,
) -> Result<EnergyReport>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let grid = space.grid();
    let mut dens_e = Vec::with_capacity(grid.len());
    let mut dens_k = Vec::with_capacity(grid.len());
    let mut dens_p = Vec::with_capacity(grid.len());
    let mut sup = 0.0_f64;
    let mut argmax = (0, 0);
    for (k, (y, tf)) in values.iter().zip(derivs).enumerate() {
        space
            .target
            .check_point(y)
            .map_err(|e| e.at_node(grid.node(k)))?;
        let pe = point_energy(
            space.source_node(k),
            tf,
            &space.target.metric(y),
            &space.target.complex_structure(y),
            &space.target.fundamental_form(y),
        );
        if pe.tf_norm > sup {
            sup = pe.tf_norm;
            argmax = grid.node(k);
        }
        dens_e.push(pe.e);
        dens_k.push(pe.k);
        dens_p.push(pe.e_plus_direct);
    }
    let e = space.integrate(&dens_e);
    let k = space.integrate(&dens_k);
    let e_plus_direct = space.integrate(&dens_p);
    Ok(EnergyReport {
        e,
        k,
        e_plus: e + k,
        e_minus: e - k,
        e_a: e + a * k,
        a,
        e_plus_direct,
        sup_dtf: sup,
        argmax,
        finite: [e, k, e_plus_direct].iter().all(|x| x.is_finite()),
    })
}

/// Energies of `f` with finite-difference derivatives.
pub fn energy<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    a: f64,
) -> Result<EnergyReport>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    space.validate(f)?;
    energy_from_jet(space, &f.values, &space.derivative(f), a)
}

/// Worst-node residuals of the algebraic decomposition identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecompositionResiduals {
    /// `max |⟨Tf + JTfJ, Tf − JTfJ⟩|`.
    pub orthogonality: f64,
    /// `max |¼|Tf + JTfJ|² − ½|Tf|² − ½⟨Tf, JTfJ⟩|`.
    pub expansion: f64,
    /// `max |⟨Tf, JTfJ⟩ + ⟨ω_M, f*ω_N⟩|`.
    pub pullback: f64,
    /// `max |Tf + JTfJ|` and `max |Tf − JTfJ|`.
    pub plus_sup: f64,
    pub minus_sup: f64,
}

impl DecompositionResiduals {
    pub fn worst_identity(&self) -> f64 {
        self.orthogonality.max(self.expansion).max(self.pullback)
    }
}

pub fn decomposition_check<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
) -> Result<DecompositionResiduals>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    space.validate(f)?;
    let mut r = DecompositionResiduals::default();
    for (k, tf) in space.derivative(f).iter().enumerate() {
        let y = &f.values[k];
        let src = space.source_node(k);
        let h = space.target.metric(y);
        let pe = point_energy(
            src,
            tf,
            &h,
            &space.target.complex_structure(y),
            &space.target.fundamental_form(y),
        );
        // scale so that the residuals are relative to |Tf|²
        let scale = 1.0 + pe.tf_norm * pe.tf_norm;
        r.orthogonality = r.orthogonality.max(pe.orthogonality.abs() / scale);
        r.expansion = r
            .expansion
            .max((pe.e_plus_direct - pe.e - 0.5 * pe.twisted_pairing).abs() / scale);
        r.pullback = r.pullback.max((pe.twisted_pairing - 2.0 * pe.k).abs() / scale);
        r.plus_sup = r.plus_sup.max((4.0 * pe.e_plus_direct).max(0.0).sqrt());
        r.minus_sup = r.minus_sup.max((4.0 * pe.e_minus_direct).max(0.0).sqrt());
    }
    Ok(r)
}

/// Tension `τ^i = g^{αβ}(f^i_{αβ} − f^i_γ Γ^γ_{αβ} + Γ^i_{jk} f^j_α f^k_β)`.
pub fn tau_vector<const N: usize>(src: &SourceNode, jet: &NodeJet<N>, gamma_n: &Tensor3<N>) -> Vector<N> {
    let mut tau = Vector::<N>::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let gab = src.g_inv[(a, b)];
            if gab == 0.0 {
                continue;
            }
            let mut t = jet.second[a][b];
            for c in 0..2 {
                t -= jet.tf.column(c) * src.gamma[(c, a, b)];
            }
            for i in 0..N {
                let mut s = 0.0;
                for j in 0..N {
                    for k in 0..N {
                        s += gamma_n[(i, j, k)] * jet.tf[(j, a)] * jet.tf[(k, b)];
                    }
                }
                t[i] += s;
            }
            tau += t * gab;
        }
    }
    tau
}

/// `A^i = ½ ω_{αβ} f^j_γ f^k_δ (dω)_{ljk} g^{αγ} g^{βδ} h^{li}`; the `d*ω_M`
/// term vanishes on surfaces.
pub fn a_vector<const N: usize>(
    g_inv: &Matrix<2>,
    omega_m: &Matrix<2>,
    tf: &TangentMap<N>,
    h_inv: &Matrix<N>,
    d_omega: &Tensor3<N>,
) -> Vector<N> {
    let w = g_inv * omega_m * g_inv;
    let m = tf * w * tf.transpose();
    let mut b = Vector::<N>::zeros();
    for l in 0..N {
        let mut s = 0.0;
        for j in 0..N {
            for k in 0..N {
                s += d_omega[(l, j, k)] * m[(j, k)];
            }
        }
        b[l] = s;
    }
    h_inv * b * 0.5
}

/// `τ`, `A` and `τ₊ = τ + A` at every node, with norms.
#[derive(Clone, Debug, PartialEq)]
pub struct TensionField<const N: usize> {
    pub tau: Vec<Vector<N>>,
    pub a_field: Vec<Vector<N>>,
    pub tau_plus: Vec<Vector<N>>,
    pub tau_l2: f64,
    pub a_l2: f64,
    pub tau_plus_l2: f64,
    pub tau_sup: f64,
    pub a_sup: f64,
    pub tau_plus_sup: f64,
    /// `h`-lengths of `τ₊` per node.
    pub tau_plus_len: Vec<f64>,
    /// Target metric at each node.
    pub metric: Vec<Matrix<N>>,
}

impl<const N: usize> TensionField<N> {
    /// `τ_a = τ + aA`.
    pub fn tau_a(&self, a: f64) -> Vec<Vector<N>> {
        self.tau
            .iter()
            .zip(&self.a_field)
            .map(|(t, x)| t + x * a)
            .collect()
    }

    /// `‖τ_a‖_∞` in the target metric.
    pub fn tau_a_sup(&self, a: f64) -> f64 {
        if a == 1.0 {
            return self.tau_plus_sup;
        }
        self.tau
            .iter()
            .zip(&self.a_field)
            .zip(&self.metric)
            .map(|((t, x), h)| {
                let v = t + x * a;
                v.dot(&(h * v))
            })
            .fold(0.0_f64, f64::max)
            .sqrt()
    }
}

pub fn tension<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>) -> Result<TensionField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    tension_from_jets(space, &space.jets(f)?)
}

/// Energies and tension sharing one pass of finite differences.
pub fn evaluate<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    a: f64,
) -> Result<(EnergyReport, TensionField<N>)>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let jets = space.jets(f)?;
    let derivs: Vec<TangentMap<N>> = jets.iter().map(|j| j.tf).collect();
    let report = energy_from_jet(space, &f.values, &derivs, a)?;
    Ok((report, tension_from_jets(space, &jets)?))
}

/// [`tension`] from precomputed jets.
pub fn tension_from_jets<S, T, const N: usize>(space: &MapSpace<S, T, N>, jets: &[NodeJet<N>]) -> Result<TensionField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let grid = space.grid();
    let n = grid.len();
    let mut tau = Vec::with_capacity(n);
    let mut a_field = Vec::with_capacity(n);
    let mut tau_plus = Vec::with_capacity(n);
    let (mut d_tau, mut d_a, mut d_plus) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut len = Vec::with_capacity(n);
    let mut metric = Vec::with_capacity(n);
    for (k, jet) in jets.iter().enumerate() {
        let node = grid.node(k);
        let src = space.source_node(k);
        let y = &jet.y;
        let h = space.target.metric(y);
        let h_inv = space.target.metric_inverse(y).map_err(|e| e.at_node(node))?;
        let gamma = space.target.christoffel(y).map_err(|e| e.at_node(node))?;
        let t = tau_vector(src, jet, &gamma);
        let a = a_vector(&src.g_inv, &src.omega, &jet.tf, &h_inv, &space.target.d_omega(y));
        let p = t + a;
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let sq = |v: &Vector<N>| v.dot(&(h * v));
        d_tau.push(sq(&t));
        d_a.push(sq(&a));
        d_plus.push(sq(&p));
        len.push(sq(&p).max(0.0).sqrt());
        tau.push(t);
        a_field.push(a);
        tau_plus.push(p);
        metric.push(h);
    }
    let sup = |d: &[f64]| d.iter().fold(0.0_f64, |m, x| m.max(*x)).sqrt();
    Ok(TensionField {
        tau_l2: space.integrate(&d_tau).max(0.0).sqrt(),
        a_l2: space.integrate(&d_a).max(0.0).sqrt(),
        tau_plus_l2: space.integrate(&d_plus).max(0.0).sqrt(),
        tau_sup: sup(&d_tau),
        a_sup: sup(&d_a),
        tau_plus_sup: sup(&d_plus),
        tau_plus_len: len,
        metric,
        tau,
        a_field,
        tau_plus,
    })
}

/// `∫ h(X, Y) dV` for target vector fields along `f`.
pub fn l2_pairing<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    x: &[Vector<N>],
    y: &[Vector<N>],
) -> f64
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let dens: Vec<f64> = f
        .values
        .iter()
        .zip(x.iter().zip(y))
        .map(|(p, (a, b))| a.dot(&(space.target.metric(p) * b)))
        .collect();
    space.integrate(&dens)
}

fn e_plus_at<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    Ok(energy(space, f, 1.0)?.e_plus_direct)
}

/// `|(E₊(f ⊕ εv) − E₊(f ⊖ εv))/(2ε) + ∫⟨τ₊, v⟩ dV|`.
pub fn first_variation_check<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    v: &VariationField<N>,
    eps: f64,
) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    Ok(first_variation_signed(space, f, v, eps)?.abs())
}

/// The quantity inside [`first_variation_check`] before taking the absolute
/// value, for convergence studies that need to separate the `ε` and grid
/// contributions.
pub fn first_variation_signed<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    v: &VariationField<N>,
    eps: f64,
) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::config("eps", format!("must be positive, got {eps}")));
    }
    let up = e_plus_at(space, &space.perturb(f, v, eps)?)?;
    let down = e_plus_at(space, &space.perturb(f, v, -eps)?)?;
    let tf = tension(space, f)?;
    let pairing = l2_pairing(space, f, &tf.tau_plus, &v.values);
    Ok((up - down) / (2.0 * eps) + pairing)
}

/// Worst-node residual of `d/dt f*ω = d(f*ι_v ω) + f*(ι_v dω)` for the
/// target fundamental form, the left side by centered differences in `t`.
pub fn cartan_check<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    v: &VariationField<N>,
    eps: f64,
) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    cartan_check_with(space, f, v, eps, |y| space.target.fundamental_form(y), |y| {
        space.target.d_omega(y)
    })
}

/// [`cartan_check`] for an arbitrary target two-form and its exterior
/// derivative.
pub fn cartan_check_with<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    v: &VariationField<N>,
    eps: f64,
    omega: impl Fn(&Vector<N>) -> Matrix<N>,
    d_omega: impl Fn(&Vector<N>) -> Tensor3<N>,
) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let up = space.pullback_two_form(&space.perturb(f, v, eps)?, &omega)?;
    let down = space.pullback_two_form(&space.perturb(f, v, -eps)?, &omega)?;
    let tf = space.derivative(f);
    let beta: Vec<[f64; 2]> = f
        .values
        .iter()
        .zip(&v.values)
        .zip(&tf)
        .map(|((y, dv), t)| {
            let row = dv.transpose() * omega(y) * t;
            [row[0], row[1]]
        })
        .collect();
    let d_beta = space.exterior_derivative_1form(&beta);
    let mut worst = 0.0_f64;
    for k in 0..tf.len() {
        let dw = d_omega(&f.values[k]);
        let mut iv = Matrix::<N>::zeros();
        for j in 0..N {
            for l in 0..N {
                iv[(j, l)] = (0..N).map(|i| v.values[k][i] * dw[(i, j, l)]).sum();
            }
        }
        let rhs = d_beta[k] + (tf[k].transpose() * iv * tf[k])[(0, 1)];
        let lhs = (up[k][(0, 1)] - down[k][(0, 1)]) / (2.0 * eps);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `(E₊(f ⊕ εv) − 2E₊(f) + E₊(f ⊖ εv)) / ε²`.
pub fn second_variation_qform<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    v: &VariationField<N>,
    eps: f64,
) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let up = e_plus_at(space, &space.perturb(f, v, eps)?)?;
    let mid = e_plus_at(space, f)?;
    let down = e_plus_at(space, &space.perturb(f, v, -eps)?)?;
    Ok((up - 2.0 * mid + down) / (eps * eps))
}

/// Jacobi form `∫ |∇v|²` of a map into a flat target, for comparison with
/// [`second_variation_qform`] on Kähler targets where `K` is a homotopy
/// invariant.
pub fn flat_jacobi_form<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>, v: &VariationField<N>) -> f64
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let vf = MapField {
        grid: v.grid,
        twist: crate::discrete_map::TwistData::TRIVIAL,
        values: v.values.clone(),
    };
    let dv = space.derivative(&vf);
    let dens: Vec<f64> = dv
        .iter()
        .enumerate()
        .map(|(k, d)| map_inner(&space.source_node(k).g_inv, &space.target.metric(&f.values[k]), d, d))
        .collect();
    space.integrate(&dens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_map::{StencilOrder, TwistData};
    use crate::geometry::ChartGeometry;
    use crate::models::{ConformalSource, Euclidean, FlatTorus, HopfSurface, HopfTorusSource};
    use crate::rng::SplitMix64;
    use std::f64::consts::TAU;

    const HOPF_TWIST: TwistData = TwistData {
        along_s: [1, 0],
        along_theta: [0, 0],
    };

    fn hopf(n: usize) -> MapSpace<HopfTorusSource, HopfSurface, 4> {
        MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [n, n],
            StencilOrder::Second,
        )
        .unwrap()
    }

    fn frame_map(sp: &MapSpace<HopfTorusSource, HopfSurface, 4>, u: Vector<4>, v: Vector<4>) -> MapField<4> {
        sp.sample(HOPF_TWIST, move |p| (u * p[1].cos() + v * p[1].sin()) * p[0].exp())
    }

    fn e(i: usize) -> Vector<4> {
        Vector::<4>::ith(i, 1.0)
    }

    #[test]
    fn hopf_frame_energies() {
        let sp = hopf(64);
        let vol = TAU * 2f64.ln();
        let r = energy(&sp, &frame_map(&sp, e(0), e(1)), 1.0).unwrap();
        // leading error Δθ²/6 from the angular stencil
        assert!((r.k + vol).abs() < 2e-3 * vol);
        assert!((r.e - vol).abs() < 2e-3 * vol);
        let sp2 = hopf(128);
        let r2 = energy(&sp2, &frame_map(&sp2, e(0), e(1)), 1.0).unwrap();
        let ratio = (r.k + vol) / (r2.k + vol);
        assert!((3.9..4.1).contains(&ratio), "{ratio}");
        assert!(r.e_plus.abs() < 1e-5, "{}", r.e_plus);
        assert!(r.two_route_defect() < 1e-12);
        let r = energy(&sp, &frame_map(&sp, e(0), e(2)), 1.0).unwrap();
        assert!(r.k.abs() < 1e-12);
        assert!((r.e_plus - r.e).abs() < 1e-12);
        assert!((r.e - vol).abs() < 2e-3 * vol);
        let c = sp.sample(TwistData::TRIVIAL, |_| e(3));
        let r = energy(&sp, &c, 0.5).unwrap();
        assert_eq!([r.e, r.k, r.e_plus, r.e_minus, r.e_a], [0.0; 5]);
    }

    #[test]
    fn decomposition_identities_and_type_of_the_frames() {
        let sp = hopf(32);
        let r = decomposition_check(&sp, &frame_map(&sp, e(0), e(1))).unwrap();
        assert!(r.worst_identity() < 1e-12);
        // only the difference between the two stencil errors survives
        assert!(r.plus_sup < 1e-2, "{}", r.plus_sup);
        let r = decomposition_check(&sp, &frame_map(&sp, e(0), -e(1))).unwrap();
        assert!(r.worst_identity() < 1e-12);
        assert!(r.minus_sup < 1e-2);
        assert!(r.plus_sup > 1.0);
    }

    #[test]
    fn holomorphic_frame_is_critical_and_e13_has_orthogonal_a() {
        let sp = hopf(64);
        let t = tension(&sp, &frame_map(&sp, e(0), e(1))).unwrap();
        assert!(t.tau_plus_sup < 5e-3, "{}", t.tau_plus_sup);
        let sp2 = hopf(128);
        let t2 = tension(&sp2, &frame_map(&sp2, e(0), e(1))).unwrap();
        let ratio = t.tau_plus_sup / t2.tau_plus_sup;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");

        let f = frame_map(&sp, e(0), e(2));
        let t = tension(&sp, &f).unwrap();
        assert!(t.tau_sup < 5e-3);
        assert!(t.a_sup > 0.5);
        let tf = sp.derivative(&f);
        for (k, a) in t.a_field.iter().enumerate() {
            let h = sp.target.metric(&f.values[k]);
            for c in 0..2 {
                let x: Vector<4> = tf[k].column(c).into();
                assert!(a.dot(&(h * x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn a_field_matches_closed_form_on_the_family() {
        // f = eˢ(cos θ u + sin θ v): A = −2eˢ(J b + c a), a = cos θ u + sin θ v,
        // b = −sin θ u + cos θ v, c = ⟨Ju, v⟩
        let hs = HopfSurface::new(2.0).unwrap();
        let src = HopfTorusSource::new(2.0).unwrap();
        let jm = crate::tensor::standard_complex_structure::<4>();
        let mut rng = SplitMix64::new(5);
        for _ in 0..10 {
            let u = crate::models::random_unitary(&mut rng) * e(0);
            let w = Vector::<4>::from_fn(|_, _| rng.normal());
            let v = (w - u * u.dot(&w)).normalize();
            let c = (jm * u).dot(&v);
            let p = Vector::<2>::new(rng.uniform(-1.0, 1.0), rng.uniform(0.0, TAU));
            let a = u * p[1].cos() + v * p[1].sin();
            let b = -u * p[1].sin() + v * p[1].cos();
            let es = p[0].exp();
            let y = a * es;
            let mut tf = TangentMap::<4>::zeros();
            tf.set_column(0, &y);
            tf.set_column(1, &(b * es));
            let got = a_vector(
                &src.metric_inverse(&p).unwrap(),
                &src.fundamental_form(&p),
                &tf,
                &hs.metric_inverse(&y).unwrap(),
                &hs.d_omega(&y),
            );
            let expect = (jm * b + a * c) * (-2.0 * es);
            assert!((got - expect).norm() < 1e-12 * es, "{got} vs {expect}");
        }
    }

    fn hopf_frame_pair(
        n: usize,
        order: StencilOrder,
        seed: u64,
    ) -> (MapSpace<HopfTorusSource, HopfSurface, 4>, MapField<4>, VariationField<4>) {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [n, n],
            order,
        )
        .unwrap();
        let mut rng = SplitMix64::new(seed);
        let u = crate::models::random_unitary(&mut rng);
        let f = sp.sample(HOPF_TWIST, |p| u * ((e(0) * p[1].cos() + e(2) * p[1].sin()) * p[0].exp()));
        let v = sp.random_variation(&f, &mut rng, 1.0);
        (sp, f, v)
    }

    #[test]
    fn hopf_first_variation_and_cartan_orders() {
        let mut prev: Option<(f64, f64)> = None;
        for n in [32, 64, 128] {
            let (sp, f, v) = hopf_frame_pair(n, StencilOrder::Second, 11);
            let d = first_variation_signed(&sp, &f, &v, 1e-4).unwrap();
            let c = cartan_check(&sp, &f, &v, 1e-4).unwrap();
            if let Some((d0, c0)) = prev {
                assert!((3.5..4.5).contains(&(d0 / d)), "{}", d0 / d);
                assert!((3.5..4.5).contains(&(c0 / c)), "{}", c0 / c);
            }
            prev = Some((d, c));
        }
        // the ε contribution, separated by differencing at fixed grid
        let (sp, f, v) = hopf_frame_pair(64, StencilOrder::Second, 11);
        let ds: Vec<f64> = [4e-2, 2e-2, 1e-2]
            .iter()
            .map(|eps| first_variation_signed(&sp, &f, &v, *eps).unwrap())
            .collect();
        let ratio = (ds[0] - ds[1]) / (ds[1] - ds[2]);
        assert!((3.8..4.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn hopf_first_variation_and_cartan_fourth_order_budget() {
        for seed in 1..=3 {
            let (sp, f, v) = hopf_frame_pair(64, StencilOrder::Fourth, seed);
            assert!(first_variation_check(&sp, &f, &v, 1e-4).unwrap() < 1e-5);
            assert!(cartan_check(&sp, &f, &v, 1e-4).unwrap() < 1e-4);
            let zero = VariationField::zeros(sp.grid());
            assert_eq!(cartan_check(&sp, &f, &zero, 1e-4).unwrap(), 0.0);
        }
    }

    #[test]
    fn cartan_exact_zero_for_rigid_translation() {
        // dyadic data keeps every operation exact
        let torus = FlatTorus::unit_square();
        let sp = MapSpace::new(torus, torus, [16, 16], StencilOrder::Second).unwrap();
        let tw = TwistData {
            along_s: [2, 1],
            along_theta: [0, 1],
        };
        let f = sp.sample(tw, |p| Vector::<2>::new(2.0 * p[0], p[0] + p[1]));
        let v = sp.sample_variation(|_| Vector::<2>::new(0.25, -0.5));
        assert_eq!(cartan_check(&sp, &f, &v, 1.0 / 1024.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_flat_maps_have_no_tension() {
        let m = FlatTorus::new([[1.0, 0.2], [0.0, 0.9]]).unwrap();
        let n = FlatTorus::new([[1.0, 0.0], [0.5, 1.0]]).unwrap();
        let sp = MapSpace::new(m, n, [16, 16], StencilOrder::Second).unwrap();
        let tw = TwistData {
            along_s: [2, 1],
            along_theta: [-1, 1],
        };
        let f = sp.sample(tw, |p| Vector::<2>::new(2.0 * p[0] - p[1] + 0.1, p[0] + p[1]));
        let t = tension(&sp, &f).unwrap();
        assert!(t.tau_plus_sup < 1e-10 && t.a_sup == 0.0);
    }

    #[test]
    fn conformal_rescaling_leaves_energies_unchanged() {
        let base = FlatTorus::new([[1.0, 0.0], [0.3, 1.1]]).unwrap();
        let sp0 = MapSpace::new(base, Euclidean::<4>, [32, 32], StencilOrder::Second).unwrap();
        let sp1 = MapSpace::new(ConformalSource::new(base, 0.5), Euclidean::<4>, [32, 32], StencilOrder::Second).unwrap();
        let map = |p: &Vector<2>| {
            let (a, b) = (TAU * p[0], TAU * p[1]);
            Vector::<4>::new(a.sin() * b.cos(), (a + b).cos(), 0.3 * (2.0 * a).sin(), b.sin() * a.cos())
        };
        let r0 = energy(&sp0, &sp0.sample(TwistData::TRIVIAL, map), 0.5).unwrap();
        let r1 = energy(&sp1, &sp1.sample(TwistData::TRIVIAL, map), 0.5).unwrap();
        for (x, y) in [(r0.e, r1.e), (r0.k, r1.k), (r0.e_plus, r1.e_plus), (r0.e_minus, r1.e_minus)] {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn flat_second_variation_matches_jacobi_form() {
        let torus = FlatTorus::unit_square();
        let sp = MapSpace::new(torus, torus, [16, 16], StencilOrder::Second).unwrap();
        let tw = TwistData {
            along_s: [1, 0],
            along_theta: [0, 1],
        };
        let id = sp.sample(tw, |p| *p);
        let v = sp.sample_variation(|p| Vector::<2>::new((TAU * p[0]).sin(), (TAU * (p[0] + p[1])).cos() * 0.5));
        let q = second_variation_qform(&sp, &id, &v, 1e-3).unwrap();
        // at the identity the form is 2E₊(v) = 2E(v) + 2K(v), and K(v)
        // integrates a Jacobian, so it matches ∫|∇v|²
        let vf = MapField {
            grid: v.grid,
            twist: TwistData::TRIVIAL,
            values: v.values.clone(),
        };
        let ev = energy(&sp, &vf, 1.0).unwrap();
        assert!((q - 2.0 * ev.e_plus_direct).abs() < 1e-6 * q.abs().max(1.0), "{q} {}", ev.e_plus_direct);
        let j = flat_jacobi_form(&sp, &id, &v);
        assert!((q - j).abs() < 1e-6 * j, "{q} vs {j}");
        let zero = second_variation_qform(&sp, &id, &sp.sample_variation(|_| Vector::<2>::new(0.3, -0.2)), 1e-3).unwrap();
        assert!(zero.abs() < 1e-9);
        assert_eq!(first_variation_check(&sp, &id, &VariationField::zeros(sp.grid()), 1e-3).unwrap(), 0.0);
    }
}
