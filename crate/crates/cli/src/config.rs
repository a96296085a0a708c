//! JSON configuration of each subcommand. Every field with a default is
//! written back out fully resolved in the run manifest.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use stcov::geom::{GeoTransform, RFParams};
use stcov::kernels::{SupportConfig, TemporalKernelSpec};
use stcov::scspace::{DerivativeSpec, FdAccuracy, SmoothConfig};
use stcov::verify::sweep::SweepConfig;
use stcov::volume::Grid3;
use stcov::warp::{Interpolation, OutOfDomain, PatternSpec};

/// A video given either as a volume on disk or as a synthesized pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InputSpec {
    /// Path of a volume header, relative to the configuration file.
    Volume {
        volume: PathBuf,
    },
    Pattern {
        pattern: PatternSpec,
        grid: Grid3,
    },
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGenConfig {
    pub params: RFParams,
    pub kernel: TemporalKernelSpec,
    #[serde(default)]
    pub support: SupportConfig,
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RespondConfig {
    pub input: InputSpec,
    pub params: RFParams,
    pub kernel: TemporalKernelSpec,
    #[serde(default)]
    pub derivative: Option<DerivativeSpec>,
    #[serde(default)]
    pub smooth: SmoothConfig,
    #[serde(default)]
    pub accuracy: FdAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpRunConfig {
    pub input: InputSpec,
    pub transform: GeoTransform,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub out_of_domain: OutOfDomain,
    /// Defaults to the input grid.
    #[serde(default)]
    pub output_grid: Option<Grid3>,
}

/// Configuration of one run, as parsed from the `--config` file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RunConfig {
    KernelGen(KernelGenConfig),
    Respond(RespondConfig),
    Warp(WarpRunConfig),
    Sweep(SweepConfig),
}

#[derive(Debug)]
pub enum ConfigError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Read(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            // serde_json appends "at line L column C" itself.
            Self::Parse(p, e) => write!(f, "{}: {e}", p.display()),
            Self::Invalid(m) => f.write_str(m),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e))
}

impl InputSpec {
    /// Makes a volume path absolute against `base` and checks that the
    /// header and its sample file exist.
    fn resolve(&mut self, base: &Path) -> Result<(), ConfigError> {
        if let Self::Volume { volume } = self {
            let p = if volume.is_absolute() {
                volume.clone()
            } else {
                base.join(&*volume)
            };
            for q in [p.clone(), p.with_extension("f32")] {
                if !q.is_file() {
                    return Err(ConfigError::Invalid(format!(
                        "input volume file {} does not exist",
                        q.display()
                    )));
                }
            }
            *volume = p;
        }
        Ok(())
    }
}

pub fn load(subcommand: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = match subcommand {
        "kernel-gen" => RunConfig::KernelGen(parse(path, &text)?),
        "respond" => {
            let mut c: RespondConfig = parse(path, &text)?;
            c.input.resolve(base)?;
            RunConfig::Respond(c)
        }
        "warp" => {
            let mut c: WarpRunConfig = parse(path, &text)?;
            c.input.resolve(base)?;
            RunConfig::Warp(c)
        }
        "verify" | "sweep" => RunConfig::Sweep(parse(path, &text)?),
        other => return Err(ConfigError::Invalid(format!("unknown subcommand {other}"))),
    };
    Ok(cfg)
}
