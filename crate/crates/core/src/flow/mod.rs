//! Explicit time stepping of `∂ₜf = τ_a(f)` with energy, blow-up and
//! convergence monitors.

mod monitor;
mod rescale;

pub use monitor::{energy_bound_monitor, EnergyBoundVerdict, GROWTH_BAND};
pub use rescale::{interpolate, rescale_diagnostic, rescale_snapshot, RescaleWindow, RescaledField, NORMALIZATION_BAND};

use std::io::{self, Write};

use crate::discrete_map::{MapField, MapSpace};
use crate::error::{Error, Result};
use crate::functionals::{evaluate, EnergyReport, TensionField};
use crate::models::{SourceSurface, TargetManifold};
use crate::tensor::Vector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    /// `dt = c_cfl Δ² / (1 + sup|Tf|²)`, recomputed every step.
    Auto { c_cfl: f64 },
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Euler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub dt: TimeStep,
    pub t_max: f64,
    pub a: f64,
    pub scheme: Scheme,
    /// Stop once `‖τ_a‖_∞` drops below this.
    pub stop_tau_tol: f64,
    /// Declare blow-up once `sup|Tf|` exceeds this.
    pub blowup_threshold: f64,
    pub report_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto { c_cfl: 0.2 },
            t_max: 1.0,
            a: 1.0,
            scheme: Scheme::Euler,
            stop_tau_tol: 1e-8,
            blowup_threshold: 1e3,
            report_every: 10,
        }
    }
}

/// Hard ceiling `dt ≤ DT_CAP · Δ²`.
pub const DT_CAP: f64 = 0.25;

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        match self.dt {
            TimeStep::Auto { c_cfl } if !(c_cfl > 0.0 && c_cfl <= DT_CAP) => {
                return Err(Error::config("c_cfl", format!("must lie in (0, {DT_CAP}], got {c_cfl}")));
            }
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::config("dt", format!("must be positive, got {dt}")));
            }
            _ => {}
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::config("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if !(-1.0..=1.0).contains(&self.a) {
            return Err(Error::config("a", format!("must lie in [-1, 1], got {}", self.a)));
        }
        if !(self.stop_tau_tol >= 0.0) {
            return Err(Error::config("stop_tau_tol", "must be nonnegative"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::config("blowup_threshold", "must be positive"));
        }
        if self.report_every == 0 {
            return Err(Error::config("report_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Effective squared spacing `2 / max_nodes(Σ_α g^{αα}/Δ_α²)`; equals `Δ²`
/// on a square grid with identity metric.
pub fn effective_spacing_sq<S, T, const N: usize>(space: &MapSpace<S, T, N>) -> f64
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let [hs, ht] = space.grid().spacing();
    let worst = (0..space.grid().len())
        .map(|k| {
            let gi = space.source_node(k).g_inv;
            gi[(0, 0)] / (hs * hs) + gi[(1, 1)] / (ht * ht)
        })
        .fold(0.0_f64, f64::max);
    2.0 / worst
}

/// Time step for the current state.
pub fn time_step<S, T, const N: usize>(space: &MapSpace<S, T, N>, cfg: &FlowConfig, sup_dtf: f64) -> Result<f64>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let d2 = effective_spacing_sq(space);
    match cfg.dt {
        TimeStep::Auto { c_cfl } => Ok((c_cfl * d2 / (1.0 + sup_dtf * sup_dtf)).min(DT_CAP * d2)),
        TimeStep::Fixed(dt) if dt > DT_CAP * d2 => Err(Error::config(
            "dt",
            format!("{dt} exceeds the stability ceiling {:e}", DT_CAP * d2),
        )),
        TimeStep::Fixed(dt) => Ok(dt),
    }
}

fn advance<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    dir: &[Vector<N>],
    h: f64,
) -> Result<MapField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let grid = space.grid();
    let mut values = Vec::with_capacity(f.values.len());
    for (k, (y, d)) in f.values.iter().zip(dir).enumerate() {
        let node = grid.node(k);
        let next = space.target.retract(y, &(d * h)).map_err(|e| e.at_node(node))?;
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        values.push(next);
    }
    Ok(MapField {
        grid: f.grid,
        twist: f.twist,
        values,
    })
}

fn tau_a_of<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>, a: f64) -> Result<Vec<Vector<N>>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    Ok(crate::functionals::tension(space, f)?.tau_a(a))
}

/// One step of size `dt`. `tau_a` is `τ_a(f)` when the caller already has it.
pub fn step_with<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f: &MapField<N>,
    cfg: &FlowConfig,
    dt: f64,
    tau_a: Option<&[Vector<N>]>,
) -> Result<MapField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let k1 = match tau_a {
        Some(t) => t.to_vec(),
        None => tau_a_of(space, f, cfg.a)?,
    };
    match cfg.scheme {
        Scheme::Euler => advance(space, f, &k1, dt),
        Scheme::Rk4 => {
            let k2 = tau_a_of(space, &advance(space, f, &k1, dt / 2.0)?, cfg.a)?;
            let k3 = tau_a_of(space, &advance(space, f, &k2, dt / 2.0)?, cfg.a)?;
            let k4 = tau_a_of(space, &advance(space, f, &k3, dt)?, cfg.a)?;
            let dir: Vec<Vector<N>> = (0..k1.len())
                .map(|k| (k1[k] + k2[k] * 2.0 + k3[k] * 2.0 + k4[k]) / 6.0)
                .collect();
            advance(space, f, &dir, dt)
        }
    }
}

/// One step with the configured time-step rule.
pub fn step<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>, cfg: &FlowConfig) -> Result<MapField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    cfg.validate()?;
    let (report, tension) = evaluate(space, f, cfg.a)?;
    let dt = time_step(space, cfg, report.sup_dtf)?;
    step_with(space, f, cfg, dt, Some(&tension.tau_a(cfg.a)))
}

/// One trace row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub step: usize,
    pub energy: EnergyReport,
    pub tau_l2: f64,
    pub tau_plus_l2: f64,
    pub tau_plus_sup: f64,
    pub tau_a_sup: f64,
    pub blowup: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
}

/// Fixed leading columns of the trace CSV.
pub const TRACE_COLUMNS: [&str; 9] = [
    "t", "E", "K", "E_plus", "E_minus", "E_a", "sup_dTf", "tau_norm", "tau_plus_norm",
];

impl FlowTrace {
    /// CSV with the fixed leading columns followed by `tau_plus_sup`,
    /// `tau_a_sup`, `blowup`, `argmax_i`, `argmax_j`. `header` lines are
    /// written first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(
            w,
            "{},tau_plus_sup,tau_a_sup,blowup,argmax_i,argmax_j",
            TRACE_COLUMNS.join(",")
        )?;
        for r in &self.rows {
            let e = &r.energy;
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
                r.t,
                e.e,
                e.k,
                e.e_plus,
                e.e_minus,
                e.e_a,
                e.sup_dtf,
                r.tau_l2,
                r.tau_plus_l2,
                r.tau_plus_sup,
                r.tau_a_sup,
                u8::from(r.blowup),
                e.argmax.0,
                e.argmax.1
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowStatus {
    /// `‖τ_a‖_∞` fell below the tolerance.
    Converged,
    TMaxReached,
    BlowUp { t: f64, node: (usize, usize), sup_dtf: f64 },
    Aborted(Error),
}

/// Retained state for the rescale diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<const N: usize> {
    pub t: f64,
    pub sup_dtf: f64,
    pub argmax: (usize, usize),
    pub field: MapField<N>,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome<const N: usize> {
    pub trace: FlowTrace,
    pub status: FlowStatus,
    /// Last valid state (the state before the failing step on abort).
    pub field: MapField<N>,
    /// States kept whenever `sup|Tf|` doubled, plus the blow-up state.
    pub snapshots: Vec<Snapshot<N>>,
}

impl<const N: usize> FlowOutcome<N> {
    pub fn blown_up(&self) -> bool {
        matches!(self.status, FlowStatus::BlowUp { .. })
    }
}

fn row_of<const N: usize>(t: f64, step: usize, report: EnergyReport, tension: &TensionField<N>, a: f64, blowup: bool) -> TraceRow {
    TraceRow {
        t,
        step,
        energy: report,
        tau_l2: tension.tau_l2,
        tau_plus_l2: tension.tau_plus_l2,
        tau_plus_sup: tension.tau_plus_sup,
        tau_a_sup: tension.tau_a_sup(a),
        blowup,
    }
}

/// Integrate from `f0` until `t_max`, convergence or blow-up. Integrator
/// errors end the run with [`FlowStatus::Aborted`] and keep the partial trace.
pub fn run<S, T, const N: usize>(space: &MapSpace<S, T, N>, f0: &MapField<N>, cfg: &FlowConfig) -> Result<FlowOutcome<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    run_observed(space, f0, cfg, |_, _| {})
}

/// [`run`], calling `observe(row, state)` for every trace row as it is
/// recorded.
pub fn run_observed<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    f0: &MapField<N>,
    cfg: &FlowConfig,
    mut observe: impl FnMut(&TraceRow, &MapField<N>),
) -> Result<FlowOutcome<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    cfg.validate()?;
    let mut f = f0.clone();
    let mut t = 0.0;
    let mut n = 0usize;
    let mut trace = FlowTrace::default();
    let mut snapshots: Vec<Snapshot<N>> = Vec::new();
    let (mut report, mut tension) = evaluate(space, &f, cfg.a)?;
    let status = loop {
        let sup_tau_a = tension.tau_a_sup(cfg.a);
        let blowup = report.sup_dtf > cfg.blowup_threshold || !report.sup_dtf.is_finite();
        let done = blowup || sup_tau_a < cfg.stop_tau_tol || t >= cfg.t_max * (1.0 - 1e-12);
        if n.is_multiple_of(cfg.report_every) || done {
            let row = row_of(t, n, report, &tension, cfg.a, blowup);
            observe(&row, &f);
            trace.rows.push(row);
        }
        if snapshots.last().is_none_or(|s| report.sup_dtf >= 2.0 * s.sup_dtf) || blowup {
            snapshots.push(Snapshot {
                t,
                sup_dtf: report.sup_dtf,
                argmax: report.argmax,
                field: f.clone(),
            });
        }
        if blowup {
            break FlowStatus::BlowUp {
                t,
                node: report.argmax,
                sup_dtf: report.sup_dtf,
            };
        }
        if sup_tau_a < cfg.stop_tau_tol {
            break FlowStatus::Converged;
        }
        if done {
            break FlowStatus::TMaxReached;
        }
        let dt = {
            let dt = time_step(space, cfg, report.sup_dtf)?;
            dt.min(cfg.t_max - t)
        };
        let next = step_with(space, &f, cfg, dt, Some(&tension.tau_a(cfg.a)))
            .and_then(|g| evaluate(space, &g, cfg.a).map(|(r, tn)| (g, r, tn)));
        match next {
            Ok((g, r, tn)) => {
                f = g;
                report = r;
                tension = tn;
                t += dt;
                n += 1;
            }
            Err(e) => break FlowStatus::Aborted(e),
        }
    };
    Ok(FlowOutcome {
        trace,
        status,
        field: f,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_map::{StencilOrder, TwistData};
    use crate::hopf_family::{family_map, perturbed_family_map, random_frame, FrameState};
    use crate::models::{FlatTorus, HopfSurface, HopfTorusSource};
    use crate::rng::SplitMix64;

    type Hopf = MapSpace<HopfTorusSource, HopfSurface, 4>;

    fn hopf(n: usize, alpha: f64) -> Hopf {
        MapSpace::new(
            HopfTorusSource::new(alpha).unwrap(),
            HopfSurface::new(alpha).unwrap(),
            [n, n],
            StencilOrder::Second,
        )
        .unwrap()
    }

    fn perturbed(sp: &Hopf, seed: u64, amp: f64) -> MapField<4> {
        let mut rng = SplitMix64::new(seed);
        let fr = random_frame(&mut rng, sp.source.alpha()).unwrap();
        perturbed_family_map(sp, &fr, &mut rng, amp)
    }

    fn linear_flat() -> (MapSpace<FlatTorus, FlatTorus, 2>, MapField<2>) {
        let m = FlatTorus::new([[1.0, 0.2], [0.0, 0.9]]).unwrap();
        let n = FlatTorus::new([[1.0, 0.0], [0.5, 1.0]]).unwrap();
        let sp = MapSpace::new(m, n, [16, 16], StencilOrder::Second).unwrap();
        let tw = TwistData {
            along_s: [2, 1],
            along_theta: [-1, 1],
        };
        let f = sp.sample(tw, |p| Vector::<2>::new(2.0 * p[0] - p[1] + 0.1, p[0] + p[1]));
        (sp, f)
    }

    fn sup_diff<const N: usize>(a: &MapField<N>, b: &MapField<N>) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn linear_flat_map_is_a_fixed_point() {
        let (sp, f) = linear_flat();
        for a in [1.0, 0.3, -0.7] {
            let cfg = FlowConfig { a, ..FlowConfig::default() };
            let g = step(&sp, &f, &cfg).unwrap();
            assert!(sup_diff(&f, &g) < 1e-14);
            assert_eq!(g.twist, f.twist);
        }
    }

    #[test]
    fn holomorphic_frame_barely_moves() {
        let sp = hopf(64, 2.0);
        let fr = FrameState::orthonormalized(FrameState::e(0), FrameState::e(1), 2.0).unwrap();
        let f = family_map(&sp, &fr);
        let cfg = FlowConfig::default();
        let (r, _) = evaluate(&sp, &f, 1.0).unwrap();
        let dt = time_step(&sp, &cfg, r.sup_dtf).unwrap();
        let g = step(&sp, &f, &cfg).unwrap();
        // h-length of the move, h = ρ⁻² δ
        let moved = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(x, y)| (y - x).norm() / x.norm())
            .fold(0.0, f64::max);
        assert!(moved < dt * 5e-3, "{moved} vs {}", dt * 5e-3);
    }

    #[test]
    fn euler_update_is_linear_in_dt() {
        let sp = hopf(16, 2.0);
        let f = perturbed(&sp, 5, 0.05);
        let cfg = FlowConfig::default();
        let g1 = step_with(&sp, &f, &cfg, 1e-3, None).unwrap();
        let g2 = step_with(&sp, &f, &cfg, 5e-4, None).unwrap();
        for k in 0..f.values.len() {
            let d1 = g1.values[k] - f.values[k];
            let d2 = g2.values[k] - f.values[k];
            assert!((d1 - d2 * 2.0).norm() <= 1e-12 * d1.norm().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn fixed_point_run_has_constant_energy() {
        let (sp, f) = linear_flat();
        let cfg = FlowConfig {
            a: 0.5,
            t_max: 0.01,
            stop_tau_tol: 0.0,
            report_every: 1,
            ..FlowConfig::default()
        };
        let out = run(&sp, &f, &cfg).unwrap();
        assert_eq!(out.status, FlowStatus::TMaxReached);
        let e0 = out.trace.rows[0].energy.e_a;
        assert!(out.trace.rows.len() > 5);
        for r in &out.trace.rows {
            assert!((r.energy.e_a - e0).abs() < 1e-10);
        }
        assert!(out.trace.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn ea_flow_descends() {
        let sp = hopf(24, 2.0);
        let f = perturbed(&sp, 11, 0.2);
        let cfg = FlowConfig {
            a: 0.9,
            t_max: 0.1,
            report_every: 1,
            ..FlowConfig::default()
        };
        let out = run(&sp, &f, &cfg).unwrap();
        assert_eq!(out.status, FlowStatus::TMaxReached);
        let rows = &out.trace.rows;
        assert!(rows.last().unwrap().energy.e_a < rows[0].energy.e_a);
        for w in rows.windows(2) {
            assert!(w[1].energy.e_a <= w[0].energy.e_a + 1e-9);
        }
    }

    /// Worst `|ΔE₊/Δt + ‖τ₊‖²|` over the first steps.
    fn energy_identity_defect(n: usize) -> f64 {
        let sp = hopf(n, 2.0);
        let f = perturbed(&sp, 3, 0.1);
        let cfg = FlowConfig {
            t_max: 0.02,
            report_every: 1,
            ..FlowConfig::default()
        };
        let out = run(&sp, &f, &cfg).unwrap();
        out.trace
            .rows
            .windows(2)
            .map(|w| {
                let rate = (w[1].energy.e_plus - w[0].energy.e_plus) / (w[1].t - w[0].t);
                (rate + w[0].tau_plus_l2.powi(2)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn energy_identity_defect_shrinks_with_refinement() {
        let coarse = energy_identity_defect(16);
        let fine = energy_identity_defect(32);
        let ratio = coarse / fine;
        assert!((3.0..5.5).contains(&ratio), "{coarse} {fine} {ratio}");
    }

    #[test]
    fn euler_and_rk4_agree_to_first_order() {
        let sp = hopf(16, 2.0);
        let f = perturbed(&sp, 9, 0.1);
        let go = |scheme, dt| {
            let cfg = FlowConfig {
                dt: TimeStep::Fixed(dt),
                t_max: 0.02,
                scheme,
                ..FlowConfig::default()
            };
            run(&sp, &f, &cfg).unwrap().field
        };
        let rk = go(Scheme::Rk4, 4e-4);
        let e1 = sup_diff(&go(Scheme::Euler, 4e-4), &rk);
        let e2 = sup_diff(&go(Scheme::Euler, 2e-4), &rk);
        let ratio = e1 / e2;
        assert!((1.8..2.2).contains(&ratio), "{e1} {e2}");
        let rk_half = go(Scheme::Rk4, 2e-4);
        assert!(sup_diff(&rk, &rk_half) < 1e-3 * e2);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            FlowConfig { a: 1.5, ..FlowConfig::default() },
            FlowConfig { t_max: -1.0, ..FlowConfig::default() },
            FlowConfig { dt: TimeStep::Auto { c_cfl: 0.3 }, ..FlowConfig::default() },
            FlowConfig { dt: TimeStep::Fixed(0.0), ..FlowConfig::default() },
            FlowConfig { report_every: 0, ..FlowConfig::default() },
            FlowConfig { blowup_threshold: 0.0, ..FlowConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config { .. })), "{cfg:?}");
        }
        let sp = hopf(16, 2.0);
        let cfg = FlowConfig { dt: TimeStep::Fixed(1.0), ..FlowConfig::default() };
        assert!(matches!(time_step(&sp, &cfg, 1.0), Err(Error::Config { .. })));
    }

    #[test]
    fn trace_csv_has_fixed_columns() {
        let (sp, f) = linear_flat();
        let cfg = FlowConfig { t_max: 1e-3, ..FlowConfig::default() };
        let out = run(&sp, &f, &cfg).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf, &["model flat".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# model flat"));
        assert!(lines.next().unwrap().starts_with("t,E,K,E_plus,E_minus,E_a,sup_dTf,tau_norm,tau_plus_norm,"));
        assert_eq!(lines.next().unwrap().split(',').count(), 14);
    }

    #[test]
    fn blow_up_is_flagged_with_a_snapshot() {
        let sp = hopf(16, 2.0);
        let f = perturbed(&sp, 1, 0.05);
        let cfg = FlowConfig { blowup_threshold: 0.5, ..FlowConfig::default() };
        let out = run(&sp, &f, &cfg).unwrap();
        assert!(out.blown_up());
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.trace.rows.len(), 1);
        assert!(out.trace.rows[0].blowup);
    }
}
