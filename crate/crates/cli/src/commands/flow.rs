use std::io::Write;

use dbar_core::discrete_map::MapSpace;
use dbar_core::field_io::{write_field, FieldHeader};
use dbar_core::flow::{energy_bound_monitor, rescale_diagnostic, run, FlowStatus, RescaledField};
use dbar_core::models::{SourceSurface, TargetManifold};
use dbar_core::rng::SplitMix64;

use super::Outcome;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::init::InitialMap;
use crate::output::{write_header, Output};

pub fn cmd_flow(cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError> {
    crate::with_space!(cfg, |sp| flow_on(&sp, cfg, out, quiet))
}

fn uses_alpha(cfg: &RunConfig) -> Option<f64> {
    (cfg.model.source == "hopf_torus" || cfg.model.target == "hopf_surface").then_some(cfg.model.alpha)
}

fn write_rescaled<W: Write, const N: usize>(w: &mut W, header: &[String], r: &RescaledField<N>) -> std::io::Result<()> {
    write_header(w, header)?;
    writeln!(w, "# t = {:.17e}", r.t)?;
    writeln!(w, "# center = {:.17e},{:.17e}", r.center[0], r.center[1])?;
    writeln!(w, "# r = {:.17e}", r.r)?;
    writeln!(w, "# sup_dtf = {:.17e}", r.sup_dtf)?;
    writeln!(w, "# in_band = {}", r.in_band())?;
    writeln!(w, "# shrunk = {}", r.shrunk)?;
    let ys: Vec<String> = (0..N).map(|k| format!("y{k}")).collect();
    writeln!(w, "a,b,x0,x1,{}", ys.join(","))?;
    for a in 0..r.window.n {
        for b in 0..r.window.n {
            write!(w, "{a},{b},{:.17e},{:.17e}", r.window.coord(a), r.window.coord(b))?;
            for y in r.get(a, b).iter() {
                write!(w, ",{y:.17e}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

fn flow_on<S, T, const N: usize>(sp: &MapSpace<S, T, N>, cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError>
where
    S: SourceSurface,
    T: TargetManifold<N>,
    MapSpace<S, T, N>: InitialMap<N>,
{
    let flow_cfg = cfg.flow.flow_config()?;
    let window = cfg.flow.window()?;
    let mut rng = SplitMix64::new(cfg.run.seed);
    let f0 = sp.initial(&cfg.init, &mut rng)?;
    sp.validate(&f0).map_err(|e| CliError::prefixed("init", e))?;
    let outcome = run(sp, &f0, &flow_cfg)?;

    out.write("trace.csv", |w, h| outcome.trace.write_csv(w, h))?;
    let alpha = uses_alpha(cfg);
    let dump = |name: &str, f: &dbar_core::discrete_map::MapField<N>| {
        let header = FieldHeader::for_space(sp, f.twist, alpha);
        out.write(name, |w, h| write_field(w, &header, f, h))
    };
    dump("field_final.csv", &outcome.field)?;

    let monitor = energy_bound_monitor(&outcome.trace, cfg.flow.growth_band);
    if outcome.blown_up() {
        for (k, snap) in outcome.snapshots.iter().enumerate() {
            dump(&format!("snapshot_{k:03}.csv"), &snap.field)?;
        }
        for (k, r) in rescale_diagnostic(sp, &outcome, &window)?.iter().enumerate() {
            if r.shrunk && !quiet {
                eprintln!("warning: rescale window {k} shrunk to half-width {:.3e}", r.window.half_width);
            }
            out.write(&format!("rescaled_{k:03}.csv"), |w, h| write_rescaled(w, h, r))?;
        }
    }

    let (status, result) = match &outcome.status {
        FlowStatus::Converged => ("converged".to_string(), Outcome::Success),
        FlowStatus::TMaxReached => ("t_max".to_string(), Outcome::Success),
        FlowStatus::BlowUp { t, node, sup_dtf } => (
            format!("blow_up t={t:.6e} node={},{} sup_dTf={sup_dtf:.6e}", node.0, node.1),
            Outcome::BlowUp,
        ),
        FlowStatus::Aborted(e) => {
            eprintln!("error: {e}");
            ("aborted".to_string(), Outcome::Aborted)
        }
    };
    if !quiet {
        let last = outcome.trace.rows.last().expect("trace has a first row");
        println!(
            "status={status} t={:.6e} steps={} E_plus={:.6e} tau_plus_norm={:.6e} C3={:.4e} anomaly={}",
            last.t, last.step, last.energy.e_plus, last.tau_plus_l2, monitor.c3, monitor.anomaly
        );
    }
    Ok(result)
}
