//! Flow the grid lift of a Hopf frame and compare its holomorphy parameter
//! with the frame ODE.
//!
//! cargo run --release --example frame_cross_check -- [n] [t_max] [c0]

use std::time::Instant;

use dbar_core::discrete_map::{MapSpace, StencilOrder};
use dbar_core::flow::{run_observed, FlowConfig};
use dbar_core::hopf_family::{c_at_times, family_map, fitted_holomorphy_parameter, frame_flow, FrameState};
use dbar_core::models::{HopfSurface, HopfTorusSource};

fn arg<T: std::str::FromStr>(k: usize, default: T) -> T {
    std::env::args().nth(k).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let (n, t_max, c0): (usize, f64, f64) = (arg(1, 32), arg(2, 1.0), arg(3, 0.5));
    // square fundamental domain
    let alpha = std::f64::consts::TAU.exp();
    let sp = MapSpace::new(
        HopfTorusSource::new(alpha).unwrap(),
        HopfSurface::new(alpha).unwrap(),
        [n, n],
        StencilOrder::Second,
    )
    .unwrap();
    let fr = FrameState::orthonormalized(
        FrameState::e(0),
        FrameState::e(1) * c0 + FrameState::e(2) * (1.0 - c0 * c0).sqrt(),
        alpha,
    )
    .unwrap();
    let ode = frame_flow(&fr, 1e-3, t_max).unwrap();
    let cfg = FlowConfig {
        t_max,
        stop_tau_tol: 0.0,
        report_every: 50,
        ..FlowConfig::default()
    };
    let start = Instant::now();
    let mut dev = 0.0_f64;
    let out = run_observed(&sp, &family_map(&sp, &fr), &cfg, |row, f| {
        let c = fitted_holomorphy_parameter(&sp, f).unwrap();
        let expect = c_at_times(&ode, &[row.t])[0];
        dev = dev.max((c - expect).abs());
        println!("t {:.4} c_grid {c:.8} c_ode {expect:.8} E_plus {:.6e}", row.t, row.energy.e_plus);
    })
    .unwrap();
    let steps = out.trace.rows.last().unwrap().step;
    println!("{n}x{n}: {steps} steps in {:.2?}, max deviation {dev:.3e}, {:?}", start.elapsed(), out.status);
}
