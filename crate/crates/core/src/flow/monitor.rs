//! Exponential energy-growth monitor: fits `log E(t)` to a line.

use super::FlowTrace;

/// Default band on the linear-fit residual of `log E` before super-exponential
/// growth is flagged.
pub const GROWTH_BAND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBoundVerdict {
    /// Empirical rate in `E(t) ≈ E(0) e^{C₃ t}`.
    pub c3: f64,
    pub intercept: f64,
    /// Largest `|log E − fit|`.
    pub max_residual: f64,
    /// Leading coefficient of a quadratic fit of `log E`.
    pub curvature: f64,
    /// Growth faster than exponential beyond the band.
    pub anomaly: bool,
}

/// Least-squares fit of `log E` against `t` over the trace rows. Rows with
/// `E ≤ 0` are clamped to the smallest positive double; fewer than two
/// distinct times give `C₃ = 0`.
pub fn energy_bound_monitor(trace: &FlowTrace, band: f64) -> EnergyBoundVerdict {
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .map(|r| (r.t, r.energy.e.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let (c3, intercept) = line_fit(&pts);
    let max_residual = pts
        .iter()
        .map(|(t, y)| (y - (intercept + c3 * t)).abs())
        .fold(0.0, f64::max);
    let curvature = quadratic_coefficient(&pts);
    let growing = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => b.1 > a.1,
        _ => false,
    };
    EnergyBoundVerdict {
        c3,
        intercept,
        max_residual,
        curvature,
        anomaly: growing && curvature > 0.0 && max_residual > band,
    }
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return (0.0, my);
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    (slope, my - slope * mt)
}

fn quadratic_coefficient(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for &(t, y) in pts {
        let s = t - mt;
        let row = nalgebra::Vector3::new(1.0, s, s * s);
        a += row * row.transpose();
        b += row * y;
    }
    a.lu().solve(&b).map_or(0.0, |c| c[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::TraceRow;
    use crate::functionals::EnergyReport;

    fn trace(e: impl Fn(f64) -> f64) -> FlowTrace {
        let rows = (0..=50)
            .map(|k| {
                let t = k as f64 * 0.1;
                TraceRow {
                    t,
                    step: k,
                    energy: EnergyReport {
                        e: e(t),
                        ..EnergyReport::default()
                    },
                    tau_l2: 0.0,
                    tau_plus_l2: 0.0,
                    tau_plus_sup: 0.0,
                    tau_a_sup: 0.0,
                    blowup: false,
                }
            })
            .collect();
        FlowTrace { rows }
    }

    #[test]
    fn constant_energy_has_zero_rate() {
        let v = energy_bound_monitor(&trace(|_| 3.0), GROWTH_BAND);
        assert!(v.c3.abs() < 1e-12 && !v.anomaly);
    }

    #[test]
    fn exponential_growth_rate_is_recovered() {
        let v = energy_bound_monitor(&trace(|t| 2.0 * (0.3 * t).exp()), GROWTH_BAND);
        assert!((v.c3 - 0.3).abs() < 0.01 && !v.anomaly, "{v:?}");
    }

    #[test]
    fn decreasing_energy_is_not_flagged() {
        let v = energy_bound_monitor(&trace(|t| 1.0 + (-2.0 * t).exp()), GROWTH_BAND);
        assert!(v.c3 <= 0.0 && !v.anomaly, "{v:?}");
    }

    #[test]
    fn super_exponential_growth_is_flagged() {
        let v = energy_bound_monitor(&trace(|t| (0.5 * t * t).exp()), GROWTH_BAND);
        assert!(v.anomaly, "{v:?}");
    }
}
