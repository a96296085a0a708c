use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use stcov::kernels::{self, spatiotemporal_kernel, SampledKernel3D};
use stcov::scspace::{self, apply_operator, smooth_with, DifferentialOperator};
use stcov::verify::sweep::{all_passed, sweep, write_sweep_outputs, CaseResult, CaseStatus, SweepConfig};
use stcov::verify::{self, algebra};
use stcov::volume::{read_volume, write_volume, Grid3, VideoVolume};
use stcov::warp::{warp_video, Pattern, WarpConfig};
use stcov::{geom, Error};

use crate::config::{InputSpec, KernelGenConfig, RespondConfig, RunConfig, WarpRunConfig};

/// What a finished run reports back to `main`.
pub struct Outcome {
    pub verification_failed: bool,
}

fn load_input(input: &InputSpec) -> Result<VideoVolume, Error> {
    match input {
        InputSpec::Volume { volume } => Ok(read_volume(volume)?.0),
        InputSpec::Pattern { pattern, grid } => {
            let p = Pattern::new(pattern)?;
            p.check_grid(grid)?;
            VideoVolume::from_fn(*grid, |x| p.eval(x))
        }
    }
}

fn kernel_volume(k: &SampledKernel3D) -> Result<VideoVolume, Error> {
    let origin = std::array::from_fn(|a| -(k.origin[a] as f64) * k.spacing[a]);
    VideoVolume::new(Grid3::new(k.shape, origin, k.spacing)?, k.values.clone())
}

fn kernel_gen(cfg: &KernelGenConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let k = spatiotemporal_kernel(&cfg.params, &cfg.kernel, &cfg.support, cfg.spacing)?;
    let meta = json!({
        "params": cfg.params,
        "kernel": cfg.kernel,
        "mass": k.mass(),
        "center_index": k.origin,
    });
    let (h, d) = write_volume(out, "kernel", &kernel_volume(&k)?, meta)?;
    Ok(vec![h, d])
}

fn respond(cfg: &RespondConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let f = load_input(&cfg.input)?;
    let l = smooth_with(&f, &cfg.params, &cfg.kernel, &cfg.smooth)?;
    let r = match &cfg.derivative {
        Some(d) => {
            if let scspace::DerivativeSpec::SimpleCell { phi, .. } = d {
                scspace::check_eigendirection(&cfg.params.sigma, *phi)?;
            }
            apply_operator(&l, &d.operator()?, cfg.accuracy)?
        }
        None => apply_operator(&l, &DifferentialOperator::identity(), cfg.accuracy)?,
    };
    let meta = json!({
        "params": cfg.params,
        "kernel": cfg.kernel,
        "derivative": cfg.derivative,
    });
    let (h, d) = write_volume(out, "response", &r, meta)?;
    Ok(vec![h, d])
}

fn warp(cfg: &WarpRunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let f = load_input(&cfg.input)?;
    let wcfg = WarpConfig::new(cfg.output_grid.unwrap_or(*f.grid()))
        .with_interpolation(cfg.interpolation)
        .with_out_of_domain(cfg.out_of_domain);
    let w = warp_video(&f, &cfg.transform, &wcfg)?;
    let meta = json!({ "transform": cfg.transform, "valid_fraction": w.valid_fraction() });
    let (h1, d1) = write_volume(out, "warped", &w.volume, meta)?;
    let (h2, d2) = write_volume(out, "mask", &w.mask_volume(), json!({ "transform": cfg.transform }))?;
    Ok(vec![h1, d1, h2, d2])
}

fn run_sweep(cfg: &SweepConfig, seed: u64, out: &Path, strict: bool) -> Result<(Vec<PathBuf>, bool), Error> {
    let results = sweep(cfg, seed)?;
    for r in &results {
        report_case(r);
    }
    let paths = write_sweep_outputs(out, &results)?;
    let ok = all_passed(&results);
    let graded = results.iter().filter(|r| r.is_graded()).count();
    let passed = results.iter().filter(|r| r.status == CaseStatus::Pass).count();
    eprintln!(
        "{passed}/{graded} graded cases passed, {} rejected",
        results.len() - graded
    );
    Ok((paths, strict && !ok))
}

fn report_case(r: &CaseResult) {
    let err = r.max_rel_error.map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"));
    let status = match r.status {
        CaseStatus::Pass => "PASS",
        CaseStatus::Fail => "FAIL",
        CaseStatus::Rejected => "N/A ",
        CaseStatus::Error => "ERR ",
    };
    log::info!("{status} {} {} {} max_rel_error={err}", r.case_id, r.group, r.family);
    if let Some(d) = &r.diagnostic {
        log::debug!("{}: {d}", r.case_id);
    }
}

/// Numeric defaults and tolerances compiled into the library; recorded so
/// no value that influenced a run is hidden from the manifest.
pub fn constants() -> Value {
    json!({
        "geom.DET_EPS": geom::DET_EPS,
        "geom.STRUCTURAL_TOL": geom::STRUCTURAL_TOL,
        "kernels.MIN_CASCADE_DEPTH": kernels::MIN_CASCADE_DEPTH,
        "kernels.DEFAULT_CASCADE_DEPTH": kernels::DEFAULT_CASCADE_DEPTH,
        "scspace.MAX_DERIVATIVE_ORDER": scspace::MAX_DERIVATIVE_ORDER,
        "scspace.EIGENDIRECTION_TOL": scspace::EIGENDIRECTION_TOL,
        "verify.PIPELINE_TOLERANCE": verify::PIPELINE_TOLERANCE,
        "verify.KERNEL_TOLERANCE": verify::KERNEL_TOLERANCE,
        "verify.KERNEL_FLOOR": verify::KERNEL_FLOOR,
        "verify.QUANTIZATION_TOL": verify::QUANTIZATION_TOL,
        "verify.FOOTPRINT_LEVEL": verify::FOOTPRINT_LEVEL,
        "verify.algebra.ALGEBRA_TOLERANCE": algebra::ALGEBRA_TOLERANCE,
        "verify.sweep.SCALE_BOUNDS": verify::sweep::SCALE_BOUNDS,
        "verify.sweep.MAX_GALILEAN_SPEED": verify::sweep::MAX_GALILEAN_SPEED,
    })
}

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    subcommand: &'a str,
    seed: u64,
    config: &'a RunConfig,
    defaults: Value,
    constants: Value,
    outputs: Vec<OutputDigest>,
}

fn defaults() -> Value {
    json!({
        "smooth": scspace::SmoothConfig::default(),
        "support": kernels::SupportConfig::default(),
        "verify": verify::VerifyConfig::default(),
        "accuracy": scspace::FdAccuracy::default(),
        "interpolation": stcov::warp::Interpolation::default(),
        "out_of_domain": stcov::warp::OutOfDomain::default(),
    })
}

fn digest_outputs(out: &Path, paths: &[PathBuf]) -> Result<Vec<OutputDigest>, Error> {
    let mut digests = paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p)?;
            Ok(OutputDigest {
                path: p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    digests.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(digests)
}

pub fn run(subcommand: &str, cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome, Error> {
    fs::create_dir_all(out)?;
    let (paths, verification_failed) = match cfg {
        RunConfig::KernelGen(c) => (kernel_gen(c, out)?, false),
        RunConfig::Respond(c) => (respond(c, out)?, false),
        RunConfig::Warp(c) => (warp(c, out)?, false),
        RunConfig::Sweep(c) => run_sweep(c, seed, out, subcommand == "verify")?,
    };
    let manifest = Manifest {
        tool: "stcov",
        version: env!("CARGO_PKG_VERSION"),
        library_version: stcov::VERSION,
        subcommand,
        seed,
        config: cfg,
        defaults: defaults(),
        constants: constants(),
        outputs: digest_outputs(out, &paths)?,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(out.join("manifest.json"), text)?;
    Ok(Outcome { verification_failed })
}
