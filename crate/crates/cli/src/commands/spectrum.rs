use std::io::Write;

use dbar_core::models::RoundSphere;
use dbar_core::spectrum::{eigenvalue_experiment, EigenReport};

use super::Outcome;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_header, Output};

pub fn cmd_spectrum(cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError> {
    let sp = &cfg.spectrum;
    if sp.radii.is_empty() || sp.resolutions.is_empty() {
        return Err(CliError::config("spectrum", "radii and resolutions must be nonempty"));
    }
    // check everything before the first (slow) solve
    let spheres = sp
        .radii
        .iter()
        .map(|&r| RoundSphere::new(r).map_err(|e| CliError::prefixed("spectrum", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let configs = sp.resolutions.iter().map(|&n| sp.eigen_config(n)).collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<(f64, usize, usize, EigenReport)> = Vec::new();
    for sphere in &spheres {
        for ec in &configs {
            let rep = eigenvalue_experiment(*sphere, ec)?;
            if !quiet {
                println!(
                    "radius={} n={}x{} lambda1={:.8e} bound={:.8e} iterations={}",
                    sphere.radius(),
                    ec.n_s,
                    ec.n_theta,
                    rep.lambda1,
                    rep.bound,
                    rep.iterations
                );
            }
            rows.push((sphere.radius(), ec.n_s, ec.n_theta, rep));
        }
    }
    out.write("spectrum.csv", |w, h| {
        write_header(w, h)?;
        writeln!(w, "radius,n_s,n_theta,lambda1,ricci_min,bound,iterations,residual")?;
        for (r, ns, nt, rep) in &rows {
            writeln!(
                w,
                "{r:.17e},{ns},{nt},{:.17e},{:.17e},{:.17e},{},{:.17e}",
                rep.lambda1, rep.ricci_min, rep.bound, rep.iterations, rep.residual
            )?;
        }
        Ok(())
    })?;
    Ok(Outcome::Success)
}
