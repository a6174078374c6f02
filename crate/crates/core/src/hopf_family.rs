//! Linear maps `x ↦ x¹u + x²v` from the Hopf torus to the Hopf surface and
//! the frame ODE they induce.
//!
//! In log coordinates the lift is `f(s, θ) = eˢ(cos θ u + sin θ v)`, which is
//! equivariant for `z ↦ αz` on both sides. `A` is linear in `x`, so the flow
//! restricted to the family is determined by its values at `x = (1, 0)` and
//! `x = (0, 1)`.

use std::f64::consts::FRAC_PI_2;

use crate::discrete_map::{MapField, MapSpace, NodeJet, SmoothNoise, SourceNode, TwistData};
use crate::error::{Error, Result};
use crate::functionals::{a_vector, energy_from_jet, tau_vector, EnergyReport};
use crate::geometry::ChartGeometry;
use crate::models::{HopfSurface, HopfTorusSource};
use crate::rng::SplitMix64;
use crate::tensor::{standard_complex_structure, Matrix, TangentMap, Vector};

pub type HopfSpace = MapSpace<HopfTorusSource, HopfSurface, 4>;

/// Twist of the family: one period in `s` is one application of `y ↦ αy`.
pub const FAMILY_TWIST: TwistData = TwistData {
    along_s: [1, 0],
    along_theta: [0, 0],
};

/// Tolerance on `|c ∓ 1|` for classifying a frame.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Largest allowed normal component of the raw frame velocity.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Orthonormal pair `(u, v)` in `ℝ⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameState {
    pub u: Vector<4>,
    pub v: Vector<4>,
    pub alpha: f64,
}

impl FrameState {
    /// Gram–Schmidt on `(u, v)`.
    pub fn orthonormalized(u: Vector<4>, v: Vector<4>, alpha: f64) -> Result<Self> {
        crate::models::HopfSurface::new(alpha)?;
        let un = u.norm();
        if !(un > 1e-12 && un.is_finite()) {
            return Err(Error::config("frame", "u must be a nonzero finite vector"));
        }
        let u = u / un;
        let w = v - u * u.dot(&v);
        let wn = w.norm();
        if !(wn > 1e-12 && wn.is_finite()) {
            return Err(Error::config("frame", "v must be independent of u"));
        }
        Ok(Self { u, v: w / wn, alpha })
    }

    pub fn e(i: usize) -> Vector<4> {
        Vector::<4>::ith(i, 1.0)
    }

    /// `max(|‖u‖ − 1|, |‖v‖ − 1|, |⟨u, v⟩|)`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.u.norm() - 1.0)
            .abs()
            .max((self.v.norm() - 1.0).abs())
            .max(self.u.dot(&self.v).abs())
    }

    /// `2π log α`.
    pub fn volume(&self) -> f64 {
        std::f64::consts::TAU * self.alpha.ln()
    }

    fn as_matrix(&self) -> TangentMap<4> {
        let mut x = TangentMap::<4>::zeros();
        x.set_column(0, &self.u);
        x.set_column(1, &self.v);
        x
    }

    /// Apply a linear map to both vectors.
    pub fn transformed(&self, m: &Matrix<4>) -> Self {
        Self {
            u: m * self.u,
            v: m * self.v,
            alpha: self.alpha,
        }
    }
}

/// Random frame from two Gaussian vectors.
pub fn random_frame(rng: &mut SplitMix64, alpha: f64) -> Result<FrameState> {
    loop {
        let u = Vector::<4>::from_fn(|_, _| rng.normal());
        let v = Vector::<4>::from_fn(|_, _| rng.normal());
        if let Ok(fr) = FrameState::orthonormalized(u, v, alpha) {
            return Ok(fr);
        }
    }
}

/// `c = ⟨Ju, v⟩ = u¹v² − u²v¹ + u³v⁴ − u⁴v³`.
pub fn holomorphy_parameter(fr: &FrameState) -> f64 {
    fr.u[0] * fr.v[1] - fr.u[1] * fr.v[0] + fr.u[2] * fr.v[3] - fr.u[3] * fr.v[2]
}

/// Closed-form energies of the family member: `E = V`, `K = −cV`,
/// `E₊ = (1 − c)V`, `E₋ = (1 + c)V`.
pub fn closed_form_energies(fr: &FrameState) -> (f64, f64, f64, f64) {
    let c = holomorphy_parameter(fr);
    let vol = fr.volume();
    (vol, -c * vol, (1.0 - c) * vol, (1.0 + c) * vol)
}

/// Exact value, first and second derivatives of the lift at `(s, θ)`.
pub fn family_jet(fr: &FrameState, p: &Vector<2>) -> NodeJet<4> {
    let es = p[0].exp();
    let (sn, cs) = p[1].sin_cos();
    let y = (fr.u * cs + fr.v * sn) * es;
    let yt = (fr.v * cs - fr.u * sn) * es;
    let mut tf = TangentMap::<4>::zeros();
    tf.set_column(0, &y);
    tf.set_column(1, &yt);
    NodeJet {
        y,
        tf,
        second: [[y, yt], [yt, -y]],
    }
}

/// Sample the lift on the space's grid.
pub fn family_map(space: &HopfSpace, fr: &FrameState) -> MapField<4> {
    let fr = *fr;
    space.sample(FAMILY_TWIST, move |p| family_jet(&fr, p).y)
}

/// Family member plus `eˢ` times a smooth periodic perturbation, which keeps
/// the twist. `noise` is the perturbation amplitude relative to `|f|`.
pub fn perturbed_family_map(space: &HopfSpace, fr: &FrameState, rng: &mut SplitMix64, noise: f64) -> MapField<4> {
    let field = SmoothNoise::<4>::new(rng, space.grid().periods, 2, noise);
    let fr = *fr;
    space.sample(FAMILY_TWIST, move |p| family_jet(&fr, p).y + field.eval(p) * p[0].exp())
}

/// Energies with exact derivatives and grid quadrature.
pub fn family_energy_analytic(space: &HopfSpace, fr: &FrameState, a: f64) -> Result<EnergyReport> {
    let grid = space.grid();
    let (values, derivs): (Vec<_>, Vec<_>) = (0..grid.len())
        .map(|k| {
            let jet = family_jet(fr, &space.source_node(k).sigma);
            (jet.y, jet.tf)
        })
        .unzip();
    energy_from_jet(space, &values, &derivs, a)
}

/// `τ₊` of the lift at the source point `p`, from exact derivatives.
pub fn tau_plus_at(target: &HopfSurface, fr: &FrameState, p: &Vector<2>) -> Result<Vector<4>> {
    let src = flat_source_node(p);
    let jet = family_jet(fr, p);
    target.check_point(&jet.y)?;
    let tau = tau_vector(&src, &jet, &target.christoffel(&jet.y)?);
    let a = a_vector(
        &src.g_inv,
        &src.omega,
        &jet.tf,
        &target.metric_inverse(&jet.y)?,
        &target.d_omega(&jet.y),
    );
    Ok(tau + a)
}

fn flat_source_node(p: &Vector<2>) -> SourceNode {
    let j = standard_complex_structure::<2>();
    SourceNode {
        sigma: *p,
        g: Matrix::<2>::identity(),
        g_inv: Matrix::<2>::identity(),
        j,
        omega: j.transpose(),
        gamma: Default::default(),
        sqrt_det: 1.0,
    }
}

/// `P(Z) = Z − X sym(XᵀZ)`, the projection onto `T_X V₂(ℝ⁴)`.
pub fn stiefel_projection(fr: &FrameState, du: &Vector<4>, dv: &Vector<4>) -> (Vector<4>, Vector<4>) {
    let x = fr.as_matrix();
    let mut z = TangentMap::<4>::zeros();
    z.set_column(0, du);
    z.set_column(1, dv);
    let xtz = x.transpose() * z;
    let sym = (xtz + xtz.transpose()) * 0.5;
    let p = z - x * sym;
    (p.column(0).into(), p.column(1).into())
}

/// Frame velocity `(du/dt, dv/dt)`: the flow field evaluated at `x = (1, 0)`
/// and `x = (0, 1)`, i.e. `(s, θ) = (0, 0)` and `(0, π/2)`, then projected
/// onto the Stiefel tangent space. The projection must move the raw values
/// by less than [`TANGENCY_TOL`].
pub fn frame_vector_field(fr: &FrameState) -> Result<(Vector<4>, Vector<4>)> {
    let target = HopfSurface::new(fr.alpha)?;
    let du = tau_plus_at(&target, fr, &Vector::<2>::new(0.0, 0.0))?;
    let dv = tau_plus_at(&target, fr, &Vector::<2>::new(0.0, FRAC_PI_2))?;
    let (pu, pv) = stiefel_projection(fr, &du, &dv);
    let defect = (pu - du).norm().max((pv - dv).norm());
    if defect > TANGENCY_TOL * (1.0 + du.norm() + dv.norm()) {
        return Err(Error::NotTangent { defect });
    }
    Ok((pu, pv))
}

/// Closed form of [`frame_vector_field`]: `du = −2(Jv + cu)`,
/// `dv = 2(Ju − cv)`.
pub fn frame_vector_field_closed_form(fr: &FrameState) -> (Vector<4>, Vector<4>) {
    let j = standard_complex_structure::<4>();
    let c = holomorphy_parameter(fr);
    ((j * fr.v + fr.u * c) * -2.0, (j * fr.u - fr.v * c) * 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameClass {
    Holomorphic,
    AntiHolomorphic,
    NonConverged,
}

impl FrameClass {
    pub fn label(&self) -> &'static str {
        match self {
            FrameClass::Holomorphic => "holomorphic",
            FrameClass::AntiHolomorphic => "anti_holomorphic",
            FrameClass::NonConverged => "non_converged",
        }
    }

    pub fn of(c: f64) -> Self {
        if (c - 1.0).abs() < CLASSIFY_TOL {
            FrameClass::Holomorphic
        } else if (c + 1.0).abs() < CLASSIFY_TOL {
            FrameClass::AntiHolomorphic
        } else {
            FrameClass::NonConverged
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRow {
    pub t: f64,
    pub frame: FrameState,
    pub c: f64,
    pub e_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameTrajectory {
    pub rows: Vec<FrameRow>,
    pub class: FrameClass,
    /// First time at which the frame was classified, if ever.
    pub convergence_time: Option<f64>,
    /// Largest per-step increase of `E₊` (negative when strictly decreasing).
    pub max_e_plus_increase: f64,
    /// Largest orthonormality defect before retraction.
    pub max_drift: f64,
}

impl FrameTrajectory {
    pub fn final_row(&self) -> &FrameRow {
        self.rows.last().expect("trajectory has an initial row")
    }
}

fn frame_row(t: f64, fr: FrameState) -> FrameRow {
    let c = holomorphy_parameter(&fr);
    FrameRow {
        t,
        frame: fr,
        c,
        e_plus: (1.0 - c) * fr.volume(),
    }
}

/// One classical RK4 step followed by Gram–Schmidt. Returns the retracted
/// frame and the defect before retraction.
pub fn frame_step(fr: &FrameState, dt: f64) -> Result<(FrameState, f64)> {
    let shift = |k: &(Vector<4>, Vector<4>), h: f64| FrameState {
        u: fr.u + k.0 * h,
        v: fr.v + k.1 * h,
        alpha: fr.alpha,
    };
    let k1 = frame_vector_field(fr)?;
    let k2 = frame_vector_field(&shift(&k1, dt / 2.0))?;
    let k3 = frame_vector_field(&shift(&k2, dt / 2.0))?;
    let k4 = frame_vector_field(&shift(&k3, dt))?;
    let raw = FrameState {
        u: fr.u + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0),
        v: fr.v + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0),
        alpha: fr.alpha,
    };
    let drift = raw.orthonormality_defect();
    Ok((FrameState::orthonormalized(raw.u, raw.v, fr.alpha)?, drift))
}

/// Integrate the frame ODE to `t_max` and classify the endpoint. Every step
/// is recorded.
pub fn frame_flow(fr0: &FrameState, dt: f64, t_max: f64) -> Result<FrameTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::config("t_max", format!("must be nonnegative, got {t_max}")));
    }
    let mut fr = *fr0;
    let mut rows = vec![frame_row(0.0, fr)];
    let mut convergence_time = (FrameClass::of(rows[0].c) != FrameClass::NonConverged).then_some(0.0);
    let mut max_inc = f64::NEG_INFINITY;
    let mut max_drift = 0.0_f64;
    let steps = (t_max / dt).round() as usize;
    for n in 1..=steps {
        let (next, drift) = frame_step(&fr, dt)?;
        fr = next;
        max_drift = max_drift.max(drift);
        let row = frame_row(n as f64 * dt, fr);
        max_inc = max_inc.max(row.e_plus - rows[rows.len() - 1].e_plus);
        if convergence_time.is_none() && FrameClass::of(row.c) != FrameClass::NonConverged {
            convergence_time = Some(row.t);
        }
        rows.push(row);
    }
    let class = FrameClass::of(rows[rows.len() - 1].c);
    if class == FrameClass::NonConverged {
        convergence_time = None;
    }
    Ok(FrameTrajectory {
        rows,
        class,
        convergence_time,
        max_e_plus_increase: max_inc,
        max_drift,
    })
}

/// `c(t)` of the frame ODE at the requested times (linear interpolation
/// between steps).
pub fn c_at_times(traj: &FrameTrajectory, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let rows = &traj.rows;
            let k = rows.partition_point(|r| r.t <= t).clamp(1, rows.len() - 1);
            let (a, b) = (&rows[k - 1], &rows[k]);
            let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
            a.c * (1.0 - w) + b.c * w
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasinRow {
    pub c0: f64,
    pub c_final: f64,
    pub class: FrameClass,
    pub convergence_time: Option<f64>,
    pub max_e_plus_increase: f64,
}

/// Run [`frame_flow`] from `count` random frames.
pub fn basin_sweep(
    rng: &mut SplitMix64,
    count: usize,
    alpha: f64,
    dt: f64,
    t_max: f64,
) -> Result<Vec<BasinRow>> {
    (0..count)
        .map(|_| {
            let fr = random_frame(rng, alpha)?;
            let traj = frame_flow(&fr, dt, t_max)?;
            Ok(BasinRow {
                c0: traj.rows[0].c,
                c_final: traj.final_row().c,
                class: traj.class,
                convergence_time: traj.convergence_time,
                max_e_plus_increase: traj.max_e_plus_increase,
            })
        })
        .collect()
}

/// Least-squares frame of a grid field: the `cos θ` and `sin θ` Fourier
/// coefficients of `e⁻ˢ f`, which reproduce `(u, v)` exactly for family
/// members. Also returns the largest `h`-distance between `f` and the lift of
/// the fitted pair.
pub fn nearest_family_frame(space: &HopfSpace, f: &MapField<4>) -> Result<(Vector<4>, Vector<4>, f64)> {
    space.validate(f)?;
    let n = space.grid().len() as f64;
    let mut u = Vector::<4>::zeros();
    let mut v = Vector::<4>::zeros();
    for (k, y) in f.values.iter().enumerate() {
        let p = space.source_node(k).sigma;
        let w = y * (-p[0]).exp();
        u += w * p[1].cos();
        v += w * p[1].sin();
    }
    u *= 2.0 / n;
    v *= 2.0 / n;
    let mut dist = 0.0_f64;
    for (k, y) in f.values.iter().enumerate() {
        let p = space.source_node(k).sigma;
        let fit = (u * p[1].cos() + v * p[1].sin()) * p[0].exp();
        dist = dist.max((y - fit).norm() / y.norm());
    }
    Ok((u, v, dist))
}

/// `c` of the nearest orthonormal family frame.
pub fn fitted_holomorphy_parameter(space: &HopfSpace, f: &MapField<4>) -> Result<f64> {
    let (u, v, _) = nearest_family_frame(space, f)?;
    Ok(holomorphy_parameter(&FrameState::orthonormalized(
        u,
        v,
        space.source.alpha(),
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_map::StencilOrder;
    use crate::functionals::{energy, tension};
    use crate::models::random_unitary;

    fn e(i: usize) -> Vector<4> {
        FrameState::e(i)
    }

    fn frame(u: Vector<4>, v: Vector<4>) -> FrameState {
        FrameState::orthonormalized(u, v, 2.0).unwrap()
    }

    #[test]
    fn family_values_at_probe_nodes() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [16, 16],
            StencilOrder::Second,
        )
        .unwrap();
        let f = family_map(&sp, &frame(e(0), e(1)));
        assert_eq!(f.get(0, 0), e(0));
        assert!((f.get(0, 4) - e(1)).norm() < 1e-15);
        assert_eq!(f.twist, FAMILY_TWIST);
    }

    #[test]
    fn holomorphy_parameter_examples() {
        assert_eq!(holomorphy_parameter(&frame(e(0), e(1))), 1.0);
        assert_eq!(holomorphy_parameter(&frame(e(0), e(2))), 0.0);
        assert_eq!(holomorphy_parameter(&frame(e(0), -e(1))), -1.0);
    }

    #[test]
    fn pullback_metric_is_the_source_metric() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [64, 64],
            StencilOrder::Second,
        )
        .unwrap();
        let mut rng = SplitMix64::new(9);
        let fr = random_frame(&mut rng, 2.0).unwrap();
        let f = family_map(&sp, &fr);
        for (k, tf) in sp.derivative(&f).iter().enumerate() {
            let h = sp.target.metric(&f.values[k]);
            let n2 = (tf.transpose() * h * tf).trace();
            assert!((n2 - 2.0).abs() < 4e-3);
            // exact derivatives give exactly f*h = g
            let jet = family_jet(&fr, &sp.source_node(k).sigma);
            let pull = jet.tf.transpose() * h * jet.tf;
            assert!((pull - Matrix::<2>::identity()).abs().max() < 1e-13);
        }
    }

    #[test]
    fn analytic_energies_match_closed_form() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [32, 32],
            StencilOrder::Second,
        )
        .unwrap();
        let mut rng = SplitMix64::new(4);
        for _ in 0..5 {
            let fr = random_frame(&mut rng, 2.0).unwrap();
            let r = family_energy_analytic(&sp, &fr, 0.5).unwrap();
            let (e0, k0, p0, m0) = closed_form_energies(&fr);
            for (x, y) in [(r.e, e0), (r.k, k0), (r.e_plus, p0), (r.e_minus, m0)] {
                assert!((x - y).abs() < 1e-12 * e0, "{x} vs {y}");
            }
            assert!(r.two_route_defect() < 1e-13);
            // the grid version sits within O(Δ²)
            let g = energy(&sp, &family_map(&sp, &fr), 0.5).unwrap();
            assert!((g.k - k0).abs() < 1e-2 * e0);
        }
    }

    #[test]
    fn fixed_points_and_tangency() {
        for fr in [frame(e(0), e(1)), frame(e(0), -e(1))] {
            let (du, dv) = frame_vector_field(&fr).unwrap();
            assert!(du.norm() < 1e-12 && dv.norm() < 1e-12);
        }
        let fr = frame(e(0), e(2));
        let (du, dv) = frame_vector_field(&fr).unwrap();
        assert!(du.norm() > 1.0);
        // ⟨A, Tf⟩ = 0 at the probes: Tf spans (u, v) there
        for x in [du, dv] {
            assert!(x.dot(&fr.u).abs() < 1e-12 && x.dot(&fr.v).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_field_agrees() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..20 {
            let alpha = 1.0 + 3.0 * rng.next_f64();
            let fr = random_frame(&mut rng, alpha).unwrap();
            let (du, dv) = frame_vector_field(&fr).unwrap();
            let (cu, cv) = frame_vector_field_closed_form(&fr);
            assert!((du - cu).norm() < 1e-12 && (dv - cv).norm() < 1e-12);
        }
    }

    #[test]
    fn field_is_a_rescaled_riemannian_gradient_of_e_plus() {
        let mut rng = SplitMix64::new(8);
        let fr = frame(e(0), e(2));
        let e_plus = |u: &Vector<4>, v: &Vector<4>| {
            let c = u[0] * v[1] - u[1] * v[0] + u[2] * v[3] - u[3] * v[2];
            (1.0 - c) * fr.volume()
        };
        for fr in [fr, random_frame(&mut rng, 2.0).unwrap()] {
            let h = 1e-6;
            let mut gu = Vector::<4>::zeros();
            let mut gv = Vector::<4>::zeros();
            for i in 0..4 {
                let d = Vector::<4>::ith(i, h);
                gu[i] = (e_plus(&(fr.u + d), &fr.v) - e_plus(&(fr.u - d), &fr.v)) / (2.0 * h);
                gv[i] = (e_plus(&fr.u, &(fr.v + d)) - e_plus(&fr.u, &(fr.v - d))) / (2.0 * h);
            }
            let (pu, pv) = stiefel_projection(&fr, &gu, &gv);
            let (du, dv) = frame_vector_field(&fr).unwrap();
            let lambda = (du.dot(&pu) + dv.dot(&pv)) / (pu.norm_squared() + pv.norm_squared());
            assert!(lambda < 0.0);
            assert!((lambda * fr.volume() + 2.0).abs() < 1e-6);
            let res = ((du - pu * lambda).norm_squared() + (dv - pv * lambda).norm_squared()).sqrt();
            assert!(res < 1e-6, "{res}");
        }
    }

    #[test]
    fn unitary_equivariance() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..10 {
            let fr = random_frame(&mut rng, 2.0).unwrap();
            let u = random_unitary(&mut rng);
            let (du, dv) = frame_vector_field(&fr).unwrap();
            let (ru, rv) = frame_vector_field(&fr.transformed(&u)).unwrap();
            assert!((ru - u * du).norm() < 1e-8 && (rv - u * dv).norm() < 1e-8);
        }
    }

    #[test]
    fn flow_examples() {
        let t = frame_flow(&frame(e(0), e(1)), 0.01, 1.0).unwrap();
        assert_eq!(t.class, FrameClass::Holomorphic);
        assert_eq!(t.convergence_time, Some(0.0));
        assert!(t.rows.iter().all(|r| (r.frame.u - e(0)).norm() < 1e-14));

        let c0 = 0.5_f64;
        let fr = frame(e(0), e(1) * c0 + e(2) * (1.0 - c0 * c0).sqrt());
        let t = frame_flow(&fr, 0.01, 5.0).unwrap();
        assert_eq!(t.class, FrameClass::Holomorphic);
        assert!(t.rows.windows(2).all(|w| w[1].c >= w[0].c - 1e-14));
        assert!(t.max_e_plus_increase <= 1e-9);
        // c(t) = tanh(4t + atanh c₀)
        for r in t.rows.iter().step_by(25) {
            let exact = (4.0 * r.t + c0.atanh()).tanh();
            assert!((r.c - exact).abs() < 1e-8, "{} {} {}", r.t, r.c, exact);
        }
        assert!(t.max_drift < 10.0 * 0.01 * 0.01);
        assert!(t.final_row().frame.orthonormality_defect() < 1e-15);

        let t = frame_flow(&frame(e(0), e(2)), 0.01, 10.0).unwrap();
        assert!(matches!(t.class, FrameClass::Holomorphic | FrameClass::AntiHolomorphic));
        assert!(t.max_e_plus_increase <= 1e-9);
    }

    #[test]
    fn grid_family_stays_critical_only_at_holomorphic_frames() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [32, 32],
            StencilOrder::Second,
        )
        .unwrap();
        let fr = frame(e(0), e(2));
        let t = tension(&sp, &family_map(&sp, &fr)).unwrap();
        // grid τ₊ at (0, 0) against the exact probe value
        let exact = tau_plus_at(&sp.target, &fr, &Vector::<2>::zeros()).unwrap();
        assert!((t.tau_plus[0] - exact).norm() < 2e-2 * exact.norm());
    }

    #[test]
    fn fit_recovers_frames() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [16, 16],
            StencilOrder::Second,
        )
        .unwrap();
        let mut rng = SplitMix64::new(2);
        let fr = random_frame(&mut rng, 2.0).unwrap();
        let (u, v, d) = nearest_family_frame(&sp, &family_map(&sp, &fr)).unwrap();
        assert!((u - fr.u).norm() < 1e-14 && (v - fr.v).norm() < 1e-14 && d < 1e-14);
        let c = fitted_holomorphy_parameter(&sp, &family_map(&sp, &fr)).unwrap();
        assert!((c - holomorphy_parameter(&fr)).abs() < 1e-14);
    }
}
