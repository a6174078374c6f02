//! Seeded invariant suites over the shipped models: structure axioms and jets,
//! energy identities, and grid plumbing. Each check yields one row of a
//! pass/fail table.

use std::io::{self, Write};

use crate::discrete_map::{MapField, MapSpace, SmoothNoise, StencilOrder, TwistData};
use crate::error::Result;
use crate::functionals::{decomposition_check, energy};
use crate::geometry::{d_omega_fd, fd_metric_jet, levi_civita, structure_residuals, ChartGeometry, MetricJet};
use crate::hopf_family::{family_jet, perturbed_family_map, random_frame};
use crate::models::{
    random_unitary, ConformalSource, DeckElement, Euclidean, FlatTorus, HopfSurface, HopfTorusSource,
    LogPolarChart, RoundSphere, SourceSurface, TargetManifold,
};
use crate::rng::SplitMix64;
use crate::tensor::{Matrix, Tensor3, Vector};

/// Deliberately broken models for negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fixture {
    #[default]
    None,
    /// Targets report `−ω` (and `−dω`) while keeping `J`.
    SignFlip,
}

impl Fixture {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "sign_flip" => Some(Self::SignFlip),
            _ => None,
        }
    }
}

/// Target whose fundamental form has the wrong sign.
#[derive(Clone, Debug)]
pub struct SignFlipped<T>(pub T);

impl<T: ChartGeometry<N>, const N: usize> ChartGeometry<N> for SignFlipped<T> {
    fn metric(&self, p: &Vector<N>) -> Matrix<N> {
        self.0.metric(p)
    }
    fn metric_jet(&self, p: &Vector<N>) -> MetricJet<N> {
        self.0.metric_jet(p)
    }
    fn complex_structure(&self, p: &Vector<N>) -> Matrix<N> {
        self.0.complex_structure(p)
    }
    fn complex_structure_jet(&self, p: &Vector<N>) -> Tensor3<N> {
        self.0.complex_structure_jet(p)
    }
    fn check_point(&self, p: &Vector<N>) -> Result<()> {
        self.0.check_point(p)
    }
    fn metric_inverse(&self, p: &Vector<N>) -> Result<Matrix<N>> {
        self.0.metric_inverse(p)
    }
    fn christoffel(&self, p: &Vector<N>) -> Result<Tensor3<N>> {
        self.0.christoffel(p)
    }
    fn fundamental_form(&self, p: &Vector<N>) -> Matrix<N> {
        -self.0.fundamental_form(p)
    }
    fn d_omega(&self, p: &Vector<N>) -> Tensor3<N> {
        let mut t = self.0.d_omega(p);
        t.0.iter_mut().flatten().flatten().for_each(|x| *x = -*x);
        t
    }
}

impl<T: TargetManifold<N>, const N: usize> TargetManifold<N> for SignFlipped<T> {
    fn name(&self) -> &'static str {
        self.0.name()
    }
    fn deck_rank(&self) -> usize {
        self.0.deck_rank()
    }
    fn deck_point(&self, y: &Vector<N>, g: DeckElement) -> Vector<N> {
        self.0.deck_point(y, g)
    }
    fn deck_vector(&self, y: &Vector<N>, g: DeckElement, v: &Vector<N>) -> Vector<N> {
        self.0.deck_vector(y, g, v)
    }
    fn retract(&self, y: &Vector<N>, v: &Vector<N>) -> Result<Vector<N>> {
        self.0.retract(y, v)
    }
    fn interpolate(&self, y0: &Vector<N>, y1: &Vector<N>, t: f64) -> Result<Vector<N>> {
        self.0.interpolate(y0, y1, t)
    }
    fn length_scale(&self, y: &Vector<N>) -> f64 {
        self.0.length_scale(y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub suite: &'static str,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    fn push(&mut self, suite: &'static str, check: impl Into<String>, value: f64, tolerance: f64) {
        self.rows.push(CheckRow {
            suite,
            check: check.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        });
    }

    /// A check that could not be evaluated counts as a failure.
    fn push_result(&mut self, suite: &'static str, check: impl Into<String>, value: Result<f64>, tolerance: f64) {
        self.push(suite, check, value.unwrap_or(f64::NAN), tolerance);
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// `suite,check,value,tolerance,pass` with `header` lines prefixed `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "suite,check,value,tolerance,pass")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{:.6e},{:.1e},{}",
                r.suite,
                r.check,
                r.value,
                r.tolerance,
                if r.pass { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }
}

/// Number of random points per model in the geometry suite.
const POINTS: usize = 6;

fn tensor_diff<const N: usize>(a: &Tensor3<N>, b: &Tensor3<N>) -> (f64, f64) {
    let mut diff = 0.0_f64;
    let mut size = 0.0_f64;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                diff = diff.max((a[(i, j, k)] - b[(i, j, k)]).abs());
                size = size.max(a[(i, j, k)].abs());
            }
        }
    }
    (diff, size)
}

fn geometry_checks<G: ChartGeometry<N>, const N: usize>(
    report: &mut VerifyReport,
    label: &str,
    geom: &G,
    points: &[Vector<N>],
    rng: &mut SplitMix64,
    structure_tol: f64,
) {
    let mut structure = Ok(0.0_f64);
    let mut positive = Ok(f64::INFINITY);
    let mut gamma = Ok(0.0_f64);
    let mut dw = 0.0_f64;
    for p in points {
        match structure_residuals(geom, p, rng) {
            Ok(r) => {
                structure = structure.map(|m| m.max(r.worst_identity()));
                positive = positive.map(|m| m.min(r.min_metric_eigenvalue));
            }
            Err(e) => {
                structure = Err(e.clone());
                positive = Err(e);
            }
        }
        let scale = p.norm().max(1.0);
        let fd = levi_civita(
            &geom.metric(p).try_inverse().unwrap_or_else(Matrix::zeros),
            &fd_metric_jet(|q| geom.metric(q), p, 1e-3 * scale).first,
        );
        gamma = match (gamma, geom.christoffel(p)) {
            (Ok(m), Ok(g)) => {
                let (d, s) = tensor_diff(&g, &fd);
                Ok(m.max(d / (1.0 + s)))
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
        let (d, s) = tensor_diff(&geom.d_omega(p), &d_omega_fd(geom, p, 1e-5 * scale));
        dw = dw.max(d / (1.0 + s));
    }
    report.push_result("geom_core", format!("structure/{label}"), structure, structure_tol);
    // reported as the negated eigenvalue so that smaller is better
    report.push_result("geom_core", format!("metric_positive/{label}"), positive.map(|m| -m), 0.0);
    report.push_result("geom_core", format!("christoffel_vs_fd/{label}"), gamma, 1e-6);
    report.push("geom_core", format!("d_omega_vs_fd/{label}"), dw, 1e-6);
}

fn geometry_suite(report: &mut VerifyReport, rng: &mut SplitMix64) -> Result<()> {
    let hopf = HopfSurface::new(2.0)?;
    let pts: Vec<Vector<4>> = (0..POINTS)
        .map(|_| {
            let d = Vector::<4>::from_fn(|_, _| rng.normal()).normalize();
            d * rng.uniform(0.5, 2.0)
        })
        .collect();
    geometry_checks(report, "hopf_surface", &hopf, &pts, rng, 1e-8);

    let torus = FlatTorus::new([[1.0, 0.0], [0.4, 1.3]])?;
    let flat_pts: Vec<Vector<2>> = (0..POINTS)
        .map(|_| Vector::<2>::new(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)))
        .collect();
    geometry_checks(report, "flat_torus", &torus, &flat_pts, rng, 1e-10);
    geometry_checks(report, "conformal_rescaling", &ConformalSource::new(torus, 0.4), &flat_pts, rng, 1e-8);

    let sphere = RoundSphere::new(1.5)?;
    let sphere_pts: Vec<Vector<2>> = (0..POINTS)
        .map(|_| Vector::<2>::new(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)))
        .collect();
    geometry_checks(report, "round_sphere", &sphere, &sphere_pts, rng, 1e-8);
    let log_pts: Vec<Vector<2>> = (0..POINTS)
        .map(|_| Vector::<2>::new(rng.uniform(-3.0, 3.0), rng.uniform(0.0, std::f64::consts::TAU)))
        .collect();
    geometry_checks(report, "log_polar_sphere", &LogPolarChart::new(sphere, 1.5), &log_pts, rng, 1e-5);
    Ok(())
}

fn energy_checks<S, T, const N: usize>(report: &mut VerifyReport, label: &str, space: &MapSpace<S, T, N>, f: &MapField<N>)
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    report.push_result(
        "functionals",
        format!("decomposition/{label}"),
        decomposition_check(space, f).map(|r| r.worst_identity()),
        1e-10,
    );
    report.push_result(
        "functionals",
        format!("two_route_e_plus/{label}"),
        energy(space, f, 1.0).map(|r| r.two_route_defect()),
        1e-10,
    );
}

fn with_fixture<S, T, const N: usize>(
    report: &mut VerifyReport,
    label: &str,
    fixture: Fixture,
    space: MapSpace<S, T, N>,
    f: &MapField<N>,
) -> Result<()>
where
    S: SourceSurface + Clone,
    T: TargetManifold<N> + Clone,
{
    match fixture {
        Fixture::None => energy_checks(report, label, &space, f),
        Fixture::SignFlip => {
            let flipped = MapSpace::new(
                space.source.clone(),
                SignFlipped(space.target.clone()),
                space.grid().n,
                space.order(),
            )?;
            energy_checks(report, label, &flipped, f);
        }
    }
    Ok(())
}

fn functionals_suite(report: &mut VerifyReport, rng: &mut SplitMix64, fixture: Fixture) -> Result<()> {
    let alpha = 2.0;
    let hopf = MapSpace::new(
        HopfTorusSource::new(alpha)?,
        HopfSurface::new(alpha)?,
        [32, 32],
        StencilOrder::Second,
    )?;
    let fr = random_frame(rng, alpha)?;
    let f = perturbed_family_map(&hopf, &fr, rng, 0.1);
    let u = random_unitary(rng);
    let uf = MapField {
        values: f.values.iter().map(|y| u * y).collect(),
        ..f.clone()
    };
    let e0 = energy(&hopf, &f, 1.0);
    let e1 = energy(&hopf, &uf, 1.0);
    let unitary = match (e0, e1) {
        (Ok(a), Ok(b)) => Ok((a.e_plus_direct - b.e_plus_direct).abs() / (1.0 + a.e_plus_direct.abs())),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    report.push_result("functionals", "unitary_invariance/hopf", unitary, 1e-10);
    with_fixture(report, "hopf_torus->hopf_surface", fixture, hopf, &f)?;

    let base = FlatTorus::new([[1.0, 0.0], [0.3, 1.1]])?;
    let torus = FlatTorus::new([[1.0, 0.2], [0.0, 0.8]])?;
    let twist = TwistData {
        along_s: [1, 0],
        along_theta: [1, 2],
    };
    let noise = SmoothNoise::<2>::new(rng, [1.0, 1.0], 2, 0.05);
    let flat = MapSpace::new(base, torus, [24, 24], StencilOrder::Second)?;
    let ff = flat.sample(twist, |p| Vector::<2>::new(p[0] + p[1], 2.0 * p[1]) + noise.eval(p));
    with_fixture(report, "flat_torus->flat_torus", fixture, flat, &ff)?;

    let sphere = MapSpace::new(base, RoundSphere::new(1.0)?, [24, 24], StencilOrder::Second)?;
    let noise = SmoothNoise::<2>::new(rng, [1.0, 1.0], 2, 1.0);
    let fs = sphere.sample(TwistData::TRIVIAL, |p| noise.eval(p));
    with_fixture(report, "flat_torus->round_sphere", fixture, sphere, &fs)?;

    let noise = SmoothNoise::<4>::new(rng, [1.0, 1.0], 2, 1.0);
    let map = |p: &Vector<2>| noise.eval(p);
    let e4 = MapSpace::new(base, Euclidean::<4>, [24, 24], StencilOrder::Second)?;
    let fe = e4.sample(TwistData::TRIVIAL, map);
    let conformal = MapSpace::new(ConformalSource::new(base, 0.5), Euclidean::<4>, [24, 24], StencilOrder::Second)?;
    let fc = conformal.sample(TwistData::TRIVIAL, map);
    let invariance = match (energy(&e4, &fe, 0.5), energy(&conformal, &fc, 0.5)) {
        (Ok(a), Ok(b)) => Ok([(a.e, b.e), (a.k, b.k), (a.e_plus, b.e_plus), (a.e_minus, b.e_minus)]
            .iter()
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    report.push_result("functionals", "conformal_invariance/flat_torus->euclidean4", invariance, 1e-10);
    with_fixture(report, "flat_torus->euclidean4", fixture, e4, &fe)?;
    Ok(())
}

fn discrete_map_suite(report: &mut VerifyReport, rng: &mut SplitMix64) -> Result<()> {
    let alpha = 2.0;
    let hopf = MapSpace::new(
        HopfTorusSource::new(alpha)?,
        HopfSurface::new(alpha)?,
        [16, 16],
        StencilOrder::Second,
    )?;
    let fr = random_frame(rng, alpha)?;
    let f = crate::hopf_family::family_map(&hopf, &fr);
    let grid = hopf.grid();
    let mut seam = 0.0_f64;
    for (di, dj) in [(grid.n[0] as isize, 0), (-1, 0), (0, grid.n[1] as isize), (-2, -3)] {
        for k in 0..grid.len() {
            let (i, j) = grid.node(k);
            let (ii, jj) = (i as isize + di, j as isize + dj);
            let [hs, ht] = grid.spacing();
            let exact = family_jet(&fr, &Vector::<2>::new(ii as f64 * hs, jj as f64 * ht)).y;
            seam = seam.max((hopf.value(&f, ii, jj) - exact).norm() / exact.norm());
        }
    }
    report.push("discrete_map", "deck_seam/hopf", seam, 1e-12);

    let v = hopf.random_variation(&f, rng, 0.7);
    let sup = v
        .values
        .iter()
        .zip(&f.values)
        .map(|(x, y)| x.dot(&(hopf.target.metric(y) * x)).sqrt())
        .fold(0.0, f64::max);
    report.push("discrete_map", "variation_normalization/hopf", (sup - 0.7).abs(), 1e-12);

    let t = FlatTorus::unit_square();
    let flat = MapSpace::new(t, t, [16, 16], StencilOrder::Second)?;
    let twist = TwistData {
        along_s: [1, 0],
        along_theta: [0, 1],
    };
    let n0 = SmoothNoise::<2>::new(rng, [1.0, 1.0], 1, 0.1);
    let n1 = SmoothNoise::<2>::new(rng, [1.0, 1.0], 1, 0.1);
    let f0 = flat.sample(twist, |p| p + n0.eval(p));
    let f1 = flat.sample(twist, |p| p + n1.eval(p));
    let ends = match (flat.homotopy_path(&f0, &f1, 0.0), flat.homotopy_path(&f0, &f1, 1.0)) {
        (Ok(a), Ok(b)) => Ok(f64::from(u8::from(a != f0 || b != f1))),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    report.push_result("discrete_map", "homotopy_endpoints/flat_torus", ends, 0.0);
    let mut ks = Vec::new();
    for s in 0..=10 {
        let g = flat.homotopy_path(&f0, &f1, s as f64 / 10.0)?;
        ks.push(energy(&flat, &g, 1.0)?.k);
    }
    let k0 = ks[0];
    let spread = ks.iter().map(|k| (k - k0).abs()).fold(0.0, f64::max) / (1.0 + k0.abs());
    report.push("discrete_map", "homotopy_k_constant/flat_torus", spread, 1e-8);
    Ok(())
}

/// Run all suites. Each suite draws from its own fork of the seeded stream.
pub fn run_suites(seed: u64, fixture: Fixture) -> Result<VerifyReport> {
    let mut root = SplitMix64::new(seed);
    let mut geom_rng = root.fork();
    let mut fun_rng = root.fork();
    let mut map_rng = root.fork();
    let mut report = VerifyReport::default();
    geometry_suite(&mut report, &mut geom_rng)?;
    functionals_suite(&mut report, &mut fun_rng, fixture)?;
    discrete_map_suite(&mut report, &mut map_rng)?;
    Ok(report)
}
