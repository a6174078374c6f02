//! Initial maps for the flow command.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use dbar_core::discrete_map::{MapField, MapSpace, SmoothNoise, TwistData};
use dbar_core::field_io::read_field_for;
use dbar_core::hopf_family::{family_map, perturbed_family_map, random_frame, FrameState};
use dbar_core::models::{Euclidean, FlatTorus, HopfSurface, HopfTorusSource, RoundSphere, SourceSurface, TargetManifold};
use dbar_core::rng::SplitMix64;
use dbar_core::tensor::Vector;

use crate::config::InitSection;
use crate::error::CliError;

pub trait InitialMap<const N: usize> {
    fn initial(&self, init: &InitSection, rng: &mut SplitMix64) -> Result<MapField<N>, CliError>;
}

fn offset<const N: usize>(init: &InitSection, default: Vector<N>) -> Result<Vector<N>, CliError> {
    match init.offset.len() {
        0 => Ok(default),
        n if n == N => Ok(Vector::<N>::from_column_slice(&init.offset)),
        n => Err(CliError::config("init.offset", format!("expected {N} components, got {n}"))),
    }
}

/// `random` (a smooth map around the offset) and `file`, available for every
/// model pair.
fn common<S, T, const N: usize>(
    sp: &MapSpace<S, T, N>,
    init: &InitSection,
    rng: &mut SplitMix64,
    center: Vector<N>,
) -> Result<MapField<N>, CliError>
where
    S: SourceSurface,
    T: TargetManifold<N>,
{
    match init.kind.as_str() {
        "random" => {
            let c = offset(init, center)?;
            let noise = SmoothNoise::<N>::new(rng, sp.grid().periods, 2, init.noise);
            Ok(sp.sample(TwistData::TRIVIAL, |p| c + noise.eval(p)))
        }
        "file" => {
            let path = init
                .path
                .as_deref()
                .ok_or_else(|| CliError::config("init.path", "required when init.kind = \"file\""))?;
            let path = Path::new(path);
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            Ok(read_field_for(sp, BufReader::new(file))?)
        }
        other => Err(CliError::config(
            "init.kind",
            format!(
                "{other:?} is not available for {} -> {}",
                sp.source.name(),
                sp.target.name()
            ),
        )),
    }
}

impl InitialMap<4> for MapSpace<HopfTorusSource, HopfSurface, 4> {
    fn initial(&self, init: &InitSection, rng: &mut SplitMix64) -> Result<MapField<4>, CliError> {
        let alpha = self.source.alpha();
        let frame = match init.kind.as_str() {
            "frame" => FrameState::orthonormalized(Vector::<4>::from(init.u), Vector::<4>::from(init.v), alpha)
                .map_err(|e| CliError::prefixed("init", e))?,
            "random_frame" => random_frame(rng, alpha)?,
            _ => return common(self, init, rng, Vector::<4>::new(1.0, 0.0, 0.0, 0.0)),
        };
        Ok(if init.noise > 0.0 {
            perturbed_family_map(self, &frame, rng, init.noise)
        } else {
            family_map(self, &frame)
        })
    }
}

impl InitialMap<2> for MapSpace<FlatTorus, FlatTorus, 2> {
    fn initial(&self, init: &InitSection, rng: &mut SplitMix64) -> Result<MapField<2>, CliError> {
        let m = match init.kind.as_str() {
            "identity" => [[1, 0], [0, 1]],
            "linear" => init.matrix,
            "random" => init.matrix,
            _ => return common(self, init, rng, Vector::<2>::zeros()),
        };
        let c = offset(init, Vector::<2>::zeros())?;
        let twist = TwistData {
            along_s: [m[0][0], m[1][0]],
            along_theta: [m[0][1], m[1][1]],
        };
        let noise = SmoothNoise::<2>::new(rng, self.grid().periods, 2, init.noise);
        Ok(self.sample(twist, |p| {
            Vector::<2>::new(
                m[0][0] as f64 * p[0] + m[0][1] as f64 * p[1],
                m[1][0] as f64 * p[0] + m[1][1] as f64 * p[1],
            ) + c
                + noise.eval(p)
        }))
    }
}

macro_rules! common_only {
    ($s:ty, $t:ty, $n:literal, $center:expr) => {
        impl InitialMap<$n> for MapSpace<$s, $t, $n> {
            fn initial(&self, init: &InitSection, rng: &mut SplitMix64) -> Result<MapField<$n>, CliError> {
                common(self, init, rng, $center)
            }
        }
    };
}

common_only!(HopfTorusSource, FlatTorus, 2, Vector::<2>::zeros());
common_only!(HopfTorusSource, RoundSphere, 2, Vector::<2>::zeros());
common_only!(HopfTorusSource, Euclidean<2>, 2, Vector::<2>::zeros());
common_only!(HopfTorusSource, Euclidean<4>, 4, Vector::<4>::zeros());
common_only!(FlatTorus, HopfSurface, 4, Vector::<4>::new(1.0, 0.0, 0.0, 0.0));
common_only!(FlatTorus, RoundSphere, 2, Vector::<2>::zeros());
common_only!(FlatTorus, Euclidean<2>, 2, Vector::<2>::zeros());
common_only!(FlatTorus, Euclidean<4>, 4, Vector::<4>::zeros());
