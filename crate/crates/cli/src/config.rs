//! Run configuration: one TOML file with a section per module. Unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dbar_core::discrete_map::StencilOrder;
use dbar_core::flow::{FlowConfig, RescaleWindow, Scheme, TimeStep};
use dbar_core::models::ModelSpec;
use dbar_core::spectrum::EigenConfig;
use dbar_core::verify::Fixture;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Flow,
    Frames,
    Verify,
    Spectrum,
    Basin,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Frames => "frames",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Basin => "basin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub frames: FramesSection,
    #[serde(default)]
    pub basin: BasinSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// `hopf_torus` or `flat_torus`.
    pub source: String,
    /// `hopf_surface`, `flat_torus`, `round_sphere`, `euclidean2` or `euclidean4`.
    pub target: String,
    pub alpha: f64,
    pub radius: f64,
    /// Rows are the lattice vectors.
    pub source_lattice: [[f64; 2]; 2],
    pub target_lattice: [[f64; 2]; 2],
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            source: "hopf_torus".into(),
            target: "hopf_surface".into(),
            alpha: 2.0,
            radius: 1.0,
            source_lattice: IDENTITY,
            target_lattice: IDENTITY,
        }
    }
}

impl ModelSection {
    pub fn source_spec(&self) -> Result<ModelSpec, CliError> {
        match self.source.as_str() {
            "hopf_torus" => Ok(ModelSpec::HopfTorus { alpha: self.alpha }),
            "flat_torus" => Ok(ModelSpec::FlatTorus {
                lattice: self.source_lattice,
            }),
            other => Err(CliError::config("model.source", format!("unknown source model {other:?}"))),
        }
    }

    pub fn target_spec(&self) -> Result<ModelSpec, CliError> {
        match self.target.as_str() {
            "hopf_surface" => Ok(ModelSpec::HopfSurface { alpha: self.alpha }),
            "flat_torus" => Ok(ModelSpec::FlatTorus {
                lattice: self.target_lattice,
            }),
            "round_sphere" => Ok(ModelSpec::RoundSphere { radius: self.radius }),
            "euclidean2" => Ok(ModelSpec::Euclidean2),
            "euclidean4" => Ok(ModelSpec::Euclidean4),
            other => Err(CliError::config("model.target", format!("unknown target model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_s: usize,
    pub n_theta: usize,
    /// `second` or `fourth`.
    pub order: String,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_s: 64,
            n_theta: 64,
            order: "second".into(),
        }
    }
}

impl GridSection {
    pub fn stencil(&self) -> Result<StencilOrder, CliError> {
        match self.order.as_str() {
            "second" => Ok(StencilOrder::Second),
            "fourth" => Ok(StencilOrder::Fourth),
            other => Err(CliError::config("grid.order", format!("expected second or fourth, got {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    /// `frame`, `random_frame`, `identity`, `linear`, `random` or `file`.
    pub kind: String,
    pub u: [f64; 4],
    pub v: [f64; 4],
    /// Amplitude of the smooth random perturbation.
    pub noise: f64,
    /// Integer matrix of a linear map between flat tori, in lattice coordinates.
    pub matrix: [[i64; 2]; 2],
    /// Constant added to the initial map; empty means the target's default.
    pub offset: Vec<f64>,
    pub path: Option<String>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            kind: "frame".into(),
            u: [1.0, 0.0, 0.0, 0.0],
            v: [0.0, 1.0, 0.0, 0.0],
            noise: 0.0,
            matrix: [[1, 0], [0, 1]],
            offset: Vec::new(),
            path: None,
        }
    }
}

/// `dt = "auto"` or a positive number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Fixed(f64),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub dt: DtSetting,
    pub c_cfl: f64,
    pub t_max: f64,
    pub a: f64,
    /// `euler` or `rk4`.
    pub scheme: String,
    pub stop_tau_tol: f64,
    pub blowup_threshold: f64,
    pub report_every: usize,
    pub window_half_width: f64,
    pub window_n: usize,
    pub growth_band: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::default();
        let w = RescaleWindow::default();
        Self {
            dt: DtSetting::Named("auto".into()),
            c_cfl: 0.2,
            t_max: d.t_max,
            a: d.a,
            scheme: "euler".into(),
            stop_tau_tol: d.stop_tau_tol,
            blowup_threshold: d.blowup_threshold,
            report_every: d.report_every,
            window_half_width: w.half_width,
            window_n: w.n,
            growth_band: dbar_core::flow::GROWTH_BAND,
        }
    }
}

impl FlowSection {
    pub fn flow_config(&self) -> Result<FlowConfig, CliError> {
        let dt = match &self.dt {
            DtSetting::Fixed(x) => TimeStep::Fixed(*x),
            DtSetting::Named(s) if s == "auto" => TimeStep::Auto { c_cfl: self.c_cfl },
            DtSetting::Named(s) => return Err(CliError::config("flow.dt", format!("expected \"auto\" or a number, got {s:?}"))),
        };
        let scheme = match self.scheme.as_str() {
            "euler" => Scheme::Euler,
            "rk4" => Scheme::Rk4,
            other => return Err(CliError::config("flow.scheme", format!("expected euler or rk4, got {other:?}"))),
        };
        let cfg = FlowConfig {
            dt,
            t_max: self.t_max,
            a: self.a,
            scheme,
            stop_tau_tol: self.stop_tau_tol,
            blowup_threshold: self.blowup_threshold,
            report_every: self.report_every,
        };
        cfg.validate().map_err(|e| CliError::prefixed("flow", e))?;
        Ok(cfg)
    }

    pub fn window(&self) -> Result<RescaleWindow, CliError> {
        let w = RescaleWindow {
            half_width: self.window_half_width,
            n: self.window_n,
        };
        w.validate().map_err(|e| CliError::prefixed("flow", e))?;
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FramesSection {
    /// Draw the initial frame from the seed instead of `init.u`, `init.v`.
    pub random: bool,
    pub dt: f64,
    pub t_max: f64,
    pub record_every: usize,
}

impl Default for FramesSection {
    fn default() -> Self {
        Self {
            random: false,
            dt: 1e-3,
            t_max: 5.0,
            record_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSection {
    pub count: usize,
    pub dt: f64,
    pub t_max: f64,
}

impl Default for BasinSection {
    fn default() -> Self {
        Self {
            count: 100,
            dt: 1e-2,
            t_max: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub radii: Vec<f64>,
    pub resolutions: Vec<usize>,
    pub s_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let e = EigenConfig::with_resolution(32);
        Self {
            radii: vec![1.0, 2.0],
            resolutions: vec![32, 64, 128],
            s_max: e.s_max,
            tol: e.tol,
            max_iter: e.max_iter,
        }
    }
}

impl SpectrumSection {
    pub fn eigen_config(&self, n: usize) -> Result<EigenConfig, CliError> {
        let cfg = EigenConfig {
            s_max: self.s_max,
            tol: self.tol,
            max_iter: self.max_iter,
            ..EigenConfig::with_resolution(n)
        };
        cfg.validate().map_err(|e| CliError::prefixed("spectrum", e))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// `none` or `sign_flip` (negative control).
    pub fixture: String,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { fixture: "none".into() }
    }
}

impl VerifySection {
    pub fn fixture(&self) -> Result<Fixture, CliError> {
        Fixture::parse(&self.fixture)
            .ok_or_else(|| CliError::config("verify.fixture", format!("expected none or sign_flip, got {:?}", self.fixture)))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical TOML echo, used in output headers.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse("[run]\ncommand = \"flow\"\n").unwrap();
        assert_eq!(c.run.seed, 0);
        assert_eq!(c.grid.n_s, 64);
        assert!(matches!(
            c.flow.flow_config().unwrap().dt,
            TimeStep::Auto { c_cfl } if c_cfl == 0.2
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[run]\ncommand = \"flow\"\n[flow]\nspeed = 3\n").unwrap_err();
        assert!(err.to_string().contains("speed"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::parse("[run]\ncommand = \"basin\"\nseed = 9\n[flow]\ndt = 0.001\n").unwrap();
        assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }

    #[test]
    fn bad_enumerations_name_their_key() {
        let c = RunConfig::parse("[run]\ncommand = \"flow\"\n[flow]\nscheme = \"leapfrog\"\n").unwrap();
        assert!(c.flow.flow_config().unwrap_err().to_string().contains("flow.scheme"));
        let c = RunConfig::parse("[run]\ncommand = \"flow\"\n[flow]\ndt = \"fast\"\n").unwrap();
        assert!(c.flow.flow_config().unwrap_err().to_string().contains("flow.dt"));
    }
}
