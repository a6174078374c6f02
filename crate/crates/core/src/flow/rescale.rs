//! Parabolic rescaling at concentration points: `x ↦ f(exp_p(r x), t)` with
//! `r⁻¹ = sup|Tf|`, resampled on a fixed window grid.

use crate::discrete_map::{MapField, MapSpace};
use crate::error::{Error, Result};
use crate::models::{SourceSurface, TargetManifold};
use crate::tensor::{Matrix, Vector};

use super::{FlowOutcome, Snapshot};

/// Accepted range of `sup|T·|` after rescaling.
pub const NORMALIZATION_BAND: (f64, f64) = (0.5, 1.5);

/// Window `[−half_width, half_width]²` sampled with `n × n` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleWindow {
    pub half_width: f64,
    pub n: usize,
}

impl Default for RescaleWindow {
    fn default() -> Self {
        Self { half_width: 4.0, n: 65 }
    }
}

impl RescaleWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::config("half_width", "must be positive"));
        }
        if self.n < 5 {
            return Err(Error::config("window_n", "need at least 5 points"));
        }
        Ok(())
    }

    /// Window coordinate of sample `a`.
    pub fn coord(&self, a: usize) -> f64 {
        -self.half_width + 2.0 * self.half_width * a as f64 / (self.n - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescaledField<const N: usize> {
    pub t: f64,
    /// Source point of the maximum.
    pub center: Vector<2>,
    pub node: (usize, usize),
    pub r: f64,
    pub window: RescaleWindow,
    /// The window had to be shrunk to fit in a fundamental domain.
    pub shrunk: bool,
    /// Row-major samples, `values[a * n + b]` at `(coord(a), coord(b))`.
    pub values: Vec<Vector<N>>,
    /// `sup|T·|` of the rescaled map over interior window points.
    pub sup_dtf: f64,
}

impl<const N: usize> RescaledField<N> {
    pub fn in_band(&self) -> bool {
        (NORMALIZATION_BAND.0..=NORMALIZATION_BAND.1).contains(&self.sup_dtf)
    }

    pub fn get(&self, a: usize, b: usize) -> Vector<N> {
        self.values[a * self.window.n + b]
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Bicubic (Catmull-Rom) value of `f` at source coordinates `sigma` on the
/// covering, deck actions applied across seams.
pub fn interpolate<S, T, const N: usize>(space: &MapSpace<S, T, N>, f: &MapField<N>, sigma: &Vector<2>) -> Vector<N>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let [hs, ht] = space.grid().spacing();
    let (u, v) = (sigma[0] / hs, sigma[1] / ht);
    let (i0, j0) = (u.floor(), v.floor());
    let wu = catmull_rom(u - i0);
    let wv = catmull_rom(v - j0);
    let mut out = Vector::<N>::zeros();
    for (a, wa) in wu.iter().enumerate() {
        for (b, wb) in wv.iter().enumerate() {
            let y = space.value(f, i0 as isize + a as isize - 1, j0 as isize + b as isize - 1);
            out += y * (wa * wb);
        }
    }
    out
}

/// `E` with `Eᵀ g E = I`.
fn orthonormal_frame(g: &Matrix<2>) -> Result<Matrix<2>> {
    let chol = g.cholesky().ok_or_else(|| Error::DegenerateMetric {
        point: g.iter().copied().collect(),
    })?;
    chol.l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMetric {
            point: g.iter().copied().collect(),
        })
}

/// Rescale one snapshot around its `|Tf|` maximum.
pub fn rescale_snapshot<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    snap: &Snapshot<N>,
    window: &RescaleWindow,
) -> Result<RescaledField<N>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    window.validate()?;
    if !(snap.sup_dtf > 0.0 && snap.sup_dtf.is_finite()) {
        return Err(Error::config("snapshot", format!("sup|Tf| = {} cannot be rescaled", snap.sup_dtf)));
    }
    let grid = space.grid();
    let (i, j) = snap.argmax;
    let center = grid.coord(i, j);
    let frame = orthonormal_frame(&space.source_node(grid.index(i, j)).g)?;
    let r = 1.0 / snap.sup_dtf;
    let reach = r * (frame.column(0).norm() + frame.column(1).norm());
    let limit = 0.5 * grid.periods[0].min(grid.periods[1]);
    let mut window = *window;
    let shrunk = reach * window.half_width > limit;
    if shrunk {
        window.half_width = limit / reach;
    }
    let n = window.n;
    let mut values = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let x = Vector::<2>::new(window.coord(a), window.coord(b));
            values.push(interpolate(space, &snap.field, &(center + frame * x * r)));
        }
    }
    let step = 2.0 * window.half_width / (n - 1) as f64;
    let mut sup2 = 0.0_f64;
    for a in 1..n - 1 {
        for b in 1..n - 1 {
            let y = values[a * n + b];
            let h = space.target.metric(&y);
            let d0 = (values[(a + 1) * n + b] - values[(a - 1) * n + b]) / (2.0 * step);
            let d1 = (values[a * n + b + 1] - values[a * n + b - 1]) / (2.0 * step);
            sup2 = sup2.max(d0.dot(&(h * d0)) + d1.dot(&(h * d1)));
        }
    }
    Ok(RescaledField {
        t: snap.t,
        center,
        node: snap.argmax,
        r,
        window,
        shrunk,
        values,
        sup_dtf: sup2.sqrt(),
    })
}

/// Rescaled fields for every retained snapshot of a blown-up run; empty when
/// the run did not blow up.
pub fn rescale_diagnostic<S, T, const N: usize>(
    space: &MapSpace<S, T, N>,
    outcome: &FlowOutcome<N>,
    window: &RescaleWindow,
) -> Result<Vec<RescaledField<N>>>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    if !outcome.blown_up() {
        return Ok(Vec::new());
    }
    outcome
        .snapshots
        .iter()
        .map(|s| rescale_snapshot(space, s, window))
        .collect()
}
