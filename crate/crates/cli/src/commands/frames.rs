use std::io::Write;

use dbar_core::hopf_family::{basin_sweep, frame_flow, random_frame, FrameState};
use dbar_core::rng::SplitMix64;
use dbar_core::tensor::Vector;

use super::Outcome;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_header, Output};

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |t| format!("{t:.17e}"))
}

pub fn cmd_frames(cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError> {
    let alpha = cfg.model.alpha;
    let fr0 = if cfg.frames.random {
        random_frame(&mut SplitMix64::new(cfg.run.seed), alpha)
    } else {
        FrameState::orthonormalized(Vector::<4>::from(cfg.init.u), Vector::<4>::from(cfg.init.v), alpha)
    }
    .map_err(|e| CliError::prefixed("init", e))?;
    if cfg.frames.record_every == 0 {
        return Err(CliError::config("frames.record_every", "must be at least 1"));
    }
    let traj = frame_flow(&fr0, cfg.frames.dt, cfg.frames.t_max).map_err(|e| CliError::prefixed("frames", e))?;
    out.write("frames.csv", |w, h| {
        write_header(w, h)?;
        writeln!(w, "t,u0,u1,u2,u3,v0,v1,v2,v3,c,E_plus")?;
        let last = traj.rows.len() - 1;
        for (k, r) in traj.rows.iter().enumerate() {
            if k % cfg.frames.record_every != 0 && k != last {
                continue;
            }
            write!(w, "{:.17e}", r.t)?;
            for x in r.frame.u.iter().chain(r.frame.v.iter()) {
                write!(w, ",{x:.17e}")?;
            }
            writeln!(w, ",{:.17e},{:.17e}", r.c, r.e_plus)?;
        }
        Ok(())
    })?;
    if !quiet {
        let f = traj.final_row();
        println!(
            "class={} c0={:.6e} c_final={:.6e} convergence_time={} max_drift={:.3e}",
            traj.class.label(),
            traj.rows[0].c,
            f.c,
            opt(traj.convergence_time),
            traj.max_drift
        );
    }
    Ok(Outcome::Success)
}

pub fn cmd_basin(cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError> {
    let b = &cfg.basin;
    let mut rng = SplitMix64::new(cfg.run.seed);
    let rows = basin_sweep(&mut rng, b.count, cfg.model.alpha, b.dt, b.t_max).map_err(|e| CliError::prefixed("basin", e))?;
    out.write("basin.csv", |w, h| {
        write_header(w, h)?;
        writeln!(w, "c0,c_final,class,convergence_time,max_e_plus_increase")?;
        for r in &rows {
            writeln!(
                w,
                "{:.17e},{:.17e},{},{},{:.17e}",
                r.c0,
                r.c_final,
                r.class.label(),
                opt(r.convergence_time),
                r.max_e_plus_increase
            )?;
        }
        Ok(())
    })?;
    if !quiet {
        let count = |label: &str| rows.iter().filter(|r| r.class.label() == label).count();
        println!(
            "frames={} holomorphic={} anti_holomorphic={} non_converged={}",
            rows.len(),
            count("holomorphic"),
            count("anti_holomorphic"),
            count("non_converged")
        );
    }
    Ok(Outcome::Success)
}
