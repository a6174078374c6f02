//! One module per command. Each returns how the run ended; `main` maps that
//! to an exit status.

pub mod flow;
pub mod frames;
pub mod spectrum;
pub mod verify;

use dbar_core::models::{build_model, Model};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerifyFailed,
    BlowUp,
    /// The flow stopped on an integrator error; partial output was written.
    Aborted,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Aborted => 3,
            Outcome::VerifyFailed => 4,
            Outcome::BlowUp => 5,
        }
    }
}

pub fn models(cfg: &RunConfig) -> Result<(Model, Model), CliError> {
    let src = build_model(&cfg.model.source_spec()?).map_err(|e| CliError::prefixed("model", e))?;
    let tgt = build_model(&cfg.model.target_spec()?).map_err(|e| CliError::prefixed("model", e))?;
    Ok((src, tgt))
}

/// Build the map space for the configured pair and evaluate `$body` with it
/// bound to `$sp`.
#[macro_export]
macro_rules! with_space {
    ($cfg:expr, |$sp:ident| $body:expr) => {{
        use dbar_core::discrete_map::MapSpace;
        use dbar_core::models::Model;
        let (src, tgt) = $crate::commands::models($cfg)?;
        let n = [$cfg.grid.n_s, $cfg.grid.n_theta];
        let order = $cfg.grid.stencil()?;
        let grid_err = |e| $crate::error::CliError::prefixed("grid", e);
        match (src, tgt) {
            (Model::HopfTorus(s), Model::HopfSurface(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::HopfTorus(s), Model::FlatTorus(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::HopfTorus(s), Model::RoundSphere(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::HopfTorus(s), Model::Euclidean2(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::HopfTorus(s), Model::Euclidean4(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::FlatTorus(s), Model::HopfSurface(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::FlatTorus(s), Model::FlatTorus(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::FlatTorus(s), Model::RoundSphere(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::FlatTorus(s), Model::Euclidean2(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (Model::FlatTorus(s), Model::Euclidean4(t)) => {
                let $sp = MapSpace::new(s, t, n, order).map_err(grid_err)?;
                $body
            }
            (s, t) => Err($crate::error::CliError::config(
                "model",
                format!("{} -> {} is not a supported source/target pair", s.name(), t.name()),
            )),
        }
    }};
}
