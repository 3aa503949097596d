//! Run configuration: strict JSON with path-qualified errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::FlowConfig;
use crate::mesh::{
    gen_bent_channel, gen_channel, gen_rect_with_hole, load_mesh, BentChannel, DisplacementField, Mesh2D,
};
use crate::shape_opt::{radial_field, smoothed_normal_field, GradientRecovery, OptimConfig};
use crate::{Error, Result};

/// Structured mesh generators available from configs and the `mesh` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Channel {
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    RectWithHole {
        rect: [f64; 4],
        center: [f64; 2],
        radius: f64,
        resolution: usize,
    },
    BentChannel(BentChannel),
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Mesh2D> {
        match self {
            GeneratorSpec::Channel { length, height, nx, ny } => gen_channel(*length, *height, *nx, *ny),
            GeneratorSpec::RectWithHole {
                rect,
                center,
                radius,
                resolution,
            } => gen_rect_with_hole(*rect, *center, *radius, *resolution).map(|(m, _)| m),
            GeneratorSpec::BentChannel(p) => gen_bent_channel(p),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    /// Mesh JSON file; relative paths resolve against the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
}

/// Boundary perturbation used by `gradcheck`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// `chi(r) cos(mode theta) e_r` around `center`.
    Radial {
        center: [f64; 2],
        r0: f64,
        r1: f64,
        #[serde(default)]
        mode: u32,
    },
    /// Smoothed extension of `exp(-|x - center|^2 / width^2) n` from the free boundary.
    NormalBump { center: [f64; 2], width: f64 },
}

impl Perturbation {
    pub fn field(&self, mesh: &Mesh2D) -> Result<DisplacementField> {
        match *self {
            Perturbation::Radial { center, r0, r1, mode } => radial_field(mesh, center, r0, r1, mode),
            Perturbation::NormalBump { center, width } => smoothed_normal_field(mesh, |p| {
                let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                (-d2 / (width * width)).exp()
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub perturbation: Option<Perturbation>,
    pub steps: Vec<f64>,
    pub recovery: GradientRecovery,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            perturbation: None,
            steps: vec![1e-2, 5e-3, 2.5e-3],
            recovery: GradientRecovery::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub vtk: bool,
    /// Also write the optimized mesh as mesh JSON.
    pub mesh: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { vtk: true, mesh: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub flow: FlowConfig,
    #[serde(default)]
    pub optimize: OptimConfig,
    #[serde(default)]
    pub gradcheck: GradCheckConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory of the config file, for relative mesh paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.mesh.path, &self.mesh.generator) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::config(
                    "mesh",
                    "exactly one of `path` or `generator` is required",
                ))
            }
        }
        self.flow.validate()?;
        self.optimize.validate()?;
        if let Some(i) = self.gradcheck.steps.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::config(format!("gradcheck.steps[{i}]"), "must be positive"));
        }
        Ok(())
    }

    /// Loads or generates the configured mesh.
    pub fn build_mesh(&self) -> Result<Mesh2D> {
        if let Some(g) = &self.mesh.generator {
            return g.generate();
        }
        let path = self.mesh_path().expect("validated mesh source");
        let bytes = std::fs::read(&path)?;
        load_mesh(&bytes)
    }

    pub fn mesh_path(&self) -> Option<PathBuf> {
        let p = self.mesh.path.as_ref()?;
        Some(match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.clone(),
        })
    }
}

/// Parses and validates a run configuration. Unknown keys are rejected and
/// every error names the JSON path of the offending field.
pub fn parse_config(bytes: &[u8]) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        Error::Config {
            path: if path == "." { "<root>".into() } else { path },
            message,
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file; relative mesh paths are resolved against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let bytes = std::fs::read(path)?;
    let mut cfg = parse_config(&bytes)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowModel;

    fn path_of(json: &str) -> String {
        match parse_config(json.as_bytes()) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    const MINIMAL: &str = r#"{"mesh": {"generator": {"kind": "channel", "length": 3, "height": 1, "nx": 6, "ny": 2}},
                              "flow": {"viscosity": 0.1}}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.flow.model, FlowModel::NavierStokes);
        assert_eq!(c.optimize, OptimConfig::default());
        assert_eq!(c.gradcheck.steps, vec![1e-2, 5e-3, 2.5e-3]);
        assert_eq!(c.build_mesh().unwrap().triangle_count(), 24);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            path_of(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": -1}}"#),
            "flow.viscosity"
        );
        assert_eq!(
            path_of(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": 1, "inflow": {"coefs_x": []}}}"#),
            "flow.inflow.coefs_x"
        );
        assert_eq!(
            path_of(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": 1}, "optimize": {"step0": "big"}}"#),
            "optimize.step0"
        );
        assert_eq!(
            path_of(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": 1}, "optimize": {"step0": -1}}"#),
            "optimize.step0"
        );
        assert_eq!(path_of(r#"{"mesh": {}, "flow": {"viscosity": 1}}"#), "mesh");
        assert_eq!(
            path_of(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": 1}, "extra": 1}"#),
            "extra"
        );
        assert_eq!(
            path_of(r#"{"mesh": {"generator": {"kind": "disk"}}, "flow": {"viscosity": 1}}"#),
            "mesh.generator.kind"
        );
        assert_eq!(path_of("[]"), "<root>");
    }

    #[test]
    fn relative_mesh_path_uses_config_dir() {
        let mut c = parse_config(br#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": 1}}"#).unwrap();
        c.base_dir = Some(PathBuf::from("/tmp/scenario"));
        assert_eq!(c.mesh_path().unwrap(), PathBuf::from("/tmp/scenario/m.json"));
    }
}
