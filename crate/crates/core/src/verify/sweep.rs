//! Batches of covariance checks over Cartesian products of transforms,
//! parameters, kernels, patterns and derivatives.
//!
//! Case order is fixed by the configuration: groups in order, then
//! transforms, parameters, kernels, patterns and derivatives, innermost
//! last. Individual failures are recorded and never abort the sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use super::{
    check_temporal_quantization, config_digest, kernel_identity_error, verify_covariance, CovarianceReport, Source,
    VerifyConfig, KERNEL_FLOOR, KERNEL_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::geom::{rotation, GeoTransform, Mat2, RFParams, Vec2};
use crate::kernels::{SupportConfig, TemporalKernelSpec};
use crate::scspace::{check_eigendirection, DerivativeSpec};
use crate::volume::{write_volume, Grid3};
use crate::warp::{Pattern, PatternSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Full pipeline: warp, smooth, differentiate, compare.
    #[default]
    Response,
    /// Closed-form kernel identity, no sampling of video.
    KernelIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    /// Transformed video by interpolating the sampled input.
    #[default]
    Sampled,
    /// Transformed video sampled from the closed-form pattern.
    Analytic,
}

/// Ranges for randomly drawn composed transforms `Sx, A = R(θ) diag(a) R(ψ), u, St`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTransforms {
    pub count: usize,
    /// Falls back to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
    pub sx: [f64; 2],
    /// Range of the singular values of `A`.
    pub singular_values: [f64; 2],
    pub u_max: f64,
    pub st: [f64; 2],
    /// With the limit kernel, `St = c^j` for `j` drawn from this list.
    #[serde(default = "default_st_exponents")]
    pub st_exponents: Vec<i32>,
}

fn default_st_exponents() -> Vec<i32> {
    vec![-1, 0, 1]
}

/// Documented magnitude bounds for transform factors.
pub const SCALE_BOUNDS: [f64; 2] = [1.0 / 3.0, 3.0];
pub const MAX_GALILEAN_SPEED: f64 = 2.0;

impl RandomTransforms {
    fn validate(&self) -> Result<()> {
        let within = |r: [f64; 2]| {
            r[0] > 0.0 && r[0] <= r[1] && r[0] >= SCALE_BOUNDS[0] - 1e-12 && r[1] <= SCALE_BOUNDS[1] + 1e-12
        };
        if !(within(self.sx) && within(self.singular_values) && within(self.st)) {
            return Err(Error::InvalidTransform(format!(
                "random transform ranges must lie within [{}, {}]",
                SCALE_BOUNDS[0], SCALE_BOUNDS[1]
            )));
        }
        if !(self.u_max >= 0.0 && self.u_max <= MAX_GALILEAN_SPEED) {
            return Err(Error::InvalidTransform(format!(
                "u_max must lie in [0, {MAX_GALILEAN_SPEED}], got {}",
                self.u_max
            )));
        }
        if self.st_exponents.is_empty() {
            return Err(Error::InvalidTransform("st_exponents must not be empty".into()));
        }
        Ok(())
    }

    /// Draws the transforms; `c` quantizes `St` for limit kernels.
    pub fn generate(&self, seed: u64, c: Option<f64>) -> Result<Vec<GeoTransform>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(seed));
        let log_uniform =
            |rng: &mut ChaCha8Rng, r: [f64; 2]| (r[0].ln() + rng.random::<f64>() * (r[1] / r[0]).ln()).exp();
        (0..self.count)
            .map(|_| {
                let sx = log_uniform(&mut rng, self.sx);
                let a = [
                    log_uniform(&mut rng, self.singular_values),
                    log_uniform(&mut rng, self.singular_values),
                ];
                let theta = rng.random::<f64>() * TAU - PI;
                let psi = rng.random::<f64>() * TAU - PI;
                let speed = self.u_max * rng.random::<f64>().sqrt();
                let dir = rng.random::<f64>() * TAU;
                let st_free = log_uniform(&mut rng, self.st);
                let pick = rng.random_range(0..self.st_exponents.len());
                let st = match c {
                    Some(c) => c.powi(self.st_exponents[pick]),
                    None => st_free,
                };
                let m = rotation(theta) * Mat2::new(a[0], 0.0, 0.0, a[1]) * rotation(psi);
                GeoTransform::new(sx, m, Vec2::new(speed * dir.cos(), speed * dir.sin()), st)
            })
            .collect()
    }
}

/// Rerun of each case on a grid refined by `factor` with an enlarged support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    #[serde(default = "default_factor")]
    pub factor: usize,
    pub support: SupportConfig,
    /// Upper bound on `error(refined) / error(coarse)`.
    #[serde(default = "default_max_ratio")]
    pub max_ratio: f64,
}

fn default_factor() -> usize {
    2
}

fn default_max_ratio() -> f64 {
    0.7
}

fn default_derivatives() -> Vec<Option<DerivativeSpec>> {
    vec![None]
}

fn default_kernels() -> Vec<TemporalKernelSpec> {
    vec![TemporalKernelSpec::NonCausalGaussian]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGroup {
    pub name: String,
    #[serde(default)]
    pub check: CheckKind,
    pub grid: Grid3,
    #[serde(default)]
    pub transforms: Vec<GeoTransform>,
    #[serde(default)]
    pub random_transforms: Option<RandomTransforms>,
    #[serde(default)]
    pub params: Vec<RFParams>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<TemporalKernelSpec>,
    #[serde(default)]
    pub patterns: Vec<PatternSpec>,
    /// `null` entries select plain smoothing.
    #[serde(default = "default_derivatives")]
    pub derivatives: Vec<Option<DerivativeSpec>>,
    #[serde(default)]
    pub source: SourceMode,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Overrides the pass bound; defaults to `verify.tolerance` for
    /// response checks and the kernel-level bound otherwise.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub refinement: Option<Refinement>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub groups: Vec<SweepGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Pass,
    Fail,
    /// Precondition not met; any error shown is informational.
    Rejected,
    /// The case could not be evaluated.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub refined_max_rel_error: f64,
    pub refined_mean_rel_error: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub group: String,
    pub check: CheckKind,
    pub family: String,
    pub params_digest: String,
    pub transform: GeoTransform,
    pub params: RFParams,
    pub params_transformed: RFParams,
    pub kernel: TemporalKernelSpec,
    pub pattern: Option<PatternSpec>,
    pub derivative: Option<DerivativeSpec>,
    pub status: CaseStatus,
    pub tolerance: f64,
    pub max_rel_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
    pub valid_sample_count: Option<usize>,
    pub convergence: Option<Convergence>,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub report: Option<CovarianceReport>,
}

impl CaseResult {
    /// Cases with a pass/fail verdict.
    pub fn is_graded(&self) -> bool {
        matches!(self.status, CaseStatus::Pass | CaseStatus::Fail | CaseStatus::Error)
    }
}

/// Short label of the non-identity factors of a transform.
pub fn transform_family(g: &GeoTransform) -> &'static str {
    let tol = 1e-12;
    let scaling = (g.sx() - 1.0).abs() > tol;
    let affine = (g.a() - Mat2::identity()).amax() > tol;
    let galilean = g.u().amax() > tol;
    let temporal = (g.st() - 1.0).abs() > tol;
    match (scaling, affine, galilean, temporal) {
        (false, false, false, false) => "identity",
        (true, false, false, false) => "spatial_scaling",
        (false, true, false, false) => {
            if (g.a().transpose() * g.a() - Mat2::identity()).amax() <= 1e-12 {
                "rotation"
            } else {
                "affine"
            }
        }
        (false, false, true, false) => "galilean",
        (false, false, false, true) => "temporal_scaling",
        _ => "composed",
    }
}

#[derive(Serialize)]
struct CaseKey<'a> {
    transform: &'a GeoTransform,
    params: &'a RFParams,
    kernel: &'a TemporalKernelSpec,
    pattern: Option<&'a PatternSpec>,
    derivative: Option<&'a DerivativeSpec>,
    check: CheckKind,
}

fn check_derivative_coupling(d: &DerivativeSpec, p: &RFParams) -> Result<()> {
    if let DerivativeSpec::SimpleCell { phi, v, .. } = d {
        check_eigendirection(&p.sigma, *phi)?;
        if (Vec2::new(v[0], v[1]) - p.v).amax() > 1e-12 {
            return Err(Error::InvalidDerivative(format!(
                "simple-cell velocity {v:?} differs from the receptive-field velocity {:?}",
                [p.v.x, p.v.y]
            )));
        }
    }
    Ok(())
}

const COARSE_FLOOR: f64 = 1e-13;

/// Runs every case of the configuration.
pub fn sweep(config: &SweepConfig, seed: u64) -> Result<Vec<CaseResult>> {
    let mut results = Vec::new();
    for (gi, group) in config.groups.iter().enumerate() {
        group.grid.validate()?;
        let patterns: Vec<Option<&PatternSpec>> = match group.check {
            CheckKind::KernelIdentity => vec![None],
            CheckKind::Response => group.patterns.iter().map(Some).collect(),
        };
        let derivatives: Vec<Option<&DerivativeSpec>> = match group.check {
            CheckKind::KernelIdentity => vec![None],
            CheckKind::Response => group.derivatives.iter().map(|d| d.as_ref()).collect(),
        };
        for d in derivatives.iter().flatten() {
            d.validate()?;
        }
        for spec in patterns.iter().flatten() {
            Pattern::new(spec)?.check_grid(&group.grid)?;
        }
        let tolerance = group.tolerance.unwrap_or(match group.check {
            CheckKind::Response => group.verify.tolerance,
            CheckKind::KernelIdentity => KERNEL_TOLERANCE,
        });
        for kernel in &group.kernels {
            let c = match kernel {
                TemporalKernelSpec::TimeCausalLimit { c, .. } => Some(*c),
                TemporalKernelSpec::NonCausalGaussian => None,
            };
            let mut transforms = group.transforms.clone();
            if let Some(rt) = &group.random_transforms {
                transforms.extend(rt.generate(seed.wrapping_add(gi as u64), c)?);
            }
            for g in &transforms {
                for p in &group.params {
                    for pattern in &patterns {
                        for d in &derivatives {
                            let case_id = format!("c{:04}", results.len());
                            log::info!("{case_id}: group {} {}", group.name, transform_family(g));
                            results.push(run_case(case_id, group, tolerance, g, p, kernel, *pattern, *d));
                        }
                    }
                }
            }
        }
    }
    Ok(results)
}

#[allow(clippy::too_many_arguments)]
fn run_case(
    case_id: String,
    group: &SweepGroup,
    tolerance: f64,
    g: &GeoTransform,
    p: &RFParams,
    kernel: &TemporalKernelSpec,
    pattern: Option<&PatternSpec>,
    d: Option<&DerivativeSpec>,
) -> CaseResult {
    let key = CaseKey {
        transform: g,
        params: p,
        kernel,
        pattern,
        derivative: d,
        check: group.check,
    };
    let mut result = CaseResult {
        case_id,
        group: group.name.clone(),
        check: group.check,
        family: transform_family(g).to_string(),
        params_digest: config_digest(&key)[..16].to_string(),
        transform: *g,
        params: *p,
        params_transformed: crate::geom::transform_params(p, g),
        kernel: *kernel,
        pattern: pattern.cloned(),
        derivative: d.cloned(),
        status: CaseStatus::Error,
        tolerance,
        max_rel_error: None,
        mean_rel_error: None,
        valid_sample_count: None,
        convergence: None,
        diagnostic: None,
        report: None,
    };

    let precondition = check_temporal_quantization(g, kernel).and_then(|_| match d {
        Some(d) => check_derivative_coupling(d, p),
        None => Ok(()),
    });
    let rejected = precondition.err();
    let mut verify = group.verify;
    if rejected.is_some() {
        verify.enforce_quantized_st = false;
    }

    let outcome = match group.check {
        CheckKind::KernelIdentity => kernel_identity_error(g, p, kernel, 0.5, KERNEL_FLOOR).map(|e| (e, None)),
        CheckKind::Response => {
            let pattern = pattern.expect("response cases carry a pattern");
            run_response(group, &verify, g, p, kernel, pattern, d, group.grid)
                .and_then(|coarse| {
                    let convergence = match &group.refinement {
                        Some(r) if rejected.is_none() => {
                            let mut fine_cfg = verify;
                            fine_cfg.smooth.support = r.support;
                            fine_cfg.compare_shrink *= r.factor;
                            let fine =
                                run_response(group, &fine_cfg, g, p, kernel, pattern, d, group.grid.refined(r.factor))?;
                            Some(Convergence {
                                refined_max_rel_error: fine.max_rel_error,
                                refined_mean_rel_error: fine.mean_rel_error,
                                ratio: fine.max_rel_error / coarse.max_rel_error.max(COARSE_FLOOR),
                            })
                        }
                        _ => None,
                    };
                    Ok((coarse, convergence))
                })
                .map(|(report, conv)| {
                    result.mean_rel_error = Some(report.mean_rel_error);
                    result.valid_sample_count = Some(report.valid_sample_count);
                    let e = report.max_rel_error;
                    result.report = Some(report);
                    (e, conv)
                })
        }
    };

    match outcome {
        Ok((err, convergence)) => {
            result.max_rel_error = Some(err);
            let mut pass = err < tolerance;
            if let (Some(c), Some(r)) = (&convergence, &group.refinement) {
                pass &= c.ratio < r.max_ratio;
            }
            result.convergence = convergence;
            result.status = if pass { CaseStatus::Pass } else { CaseStatus::Fail };
        }
        Err(e) => {
            result.diagnostic = Some(e.to_string());
            result.status = CaseStatus::Error;
        }
    }
    if let Some(e) = rejected {
        result.status = CaseStatus::Rejected;
        let note = result
            .diagnostic
            .take()
            .map(|d| format!("; evaluation: {d}"))
            .unwrap_or_default();
        result.diagnostic = Some(format!("{e}{note}"));
        result.convergence = None;
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn run_response(
    group: &SweepGroup,
    cfg: &VerifyConfig,
    g: &GeoTransform,
    p: &RFParams,
    kernel: &TemporalKernelSpec,
    pattern: &PatternSpec,
    d: Option<&DerivativeSpec>,
    grid: Grid3,
) -> Result<CovarianceReport> {
    let pat = Pattern::new(pattern)?;
    match group.source {
        SourceMode::Sampled => {
            let f = crate::volume::VideoVolume::from_fn(grid, |x| pat.eval(x))?;
            verify_covariance(Source::Sampled(&f), g, p, d, kernel, cfg)
        }
        SourceMode::Analytic => verify_covariance(Source::Analytic { pattern: &pat, grid }, g, p, d, kernel, cfg),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6e}"))
}

/// CSV with columns `case_id, family, params_digest, max_rel_error,
/// mean_rel_error, pass`; `pass` is `n/a` for rejected cases.
pub fn summary_csv(results: &[CaseResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "case_id",
        "family",
        "params_digest",
        "max_rel_error",
        "mean_rel_error",
        "pass",
    ])?;
    for r in results {
        let pass = match r.status {
            CaseStatus::Pass => "true",
            CaseStatus::Fail | CaseStatus::Error => "false",
            CaseStatus::Rejected => "n/a",
        };
        w.write_record([
            r.case_id.as_str(),
            r.family.as_str(),
            r.params_digest.as_str(),
            &fmt_opt(r.max_rel_error),
            &fmt_opt(r.mean_rel_error),
            pass,
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes `summary.csv`, `cases.json` and `error_maps/<case_id>.{json,f32}`
/// under `dir`; returns the written paths in a fixed order.
pub fn write_sweep_outputs(dir: &Path, results: &[CaseResult]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let csv_path = dir.join("summary.csv");
    fs::write(&csv_path, summary_csv(results)?)?;
    paths.push(csv_path);
    let json_path = dir.join("cases.json");
    let mut json = serde_json::to_vec_pretty(results)?;
    json.push(b'\n');
    fs::write(&json_path, json)?;
    paths.push(json_path);
    let maps = dir.join("error_maps");
    for r in results {
        if let Some(rep) = &r.report {
            fs::create_dir_all(&maps)?;
            let meta = serde_json::to_value(rep.summary())?;
            let (h, d) = write_volume(&maps, &r.case_id, &rep.error_map, meta)?;
            paths.push(h);
            paths.push(d);
        }
    }
    Ok(paths)
}

/// True when every graded case passed.
pub fn all_passed(results: &[CaseResult]) -> bool {
    results
        .iter()
        .filter(|r| r.is_graded())
        .all(|r| r.status == CaseStatus::Pass)
}

impl SweepConfig {
    /// The grid exercised by the acceptance run: kernel-level identities,
    /// full-pipeline smoothing covariance with refinement, the four single
    /// transforms, and derivative covariance.
    pub fn acceptance() -> Self {
        acceptance_config()
    }
}

fn acceptance_config() -> SweepConfig {
    let gauss = TemporalKernelSpec::NonCausalGaussian;
    let lim = |c: f64| TemporalKernelSpec::TimeCausalLimit { c, k: 10 };
    let kernel_params = vec![
        RFParams::new(2.0, Mat2::new(1.3, 0.25, 0.25, 0.8), 4.0, Vec2::new(0.4, -0.2)).unwrap(),
        RFParams::new(4.0, Mat2::identity(), 9.0, Vec2::zeros()).unwrap(),
    ];
    let full_bounds = RandomTransforms {
        count: 20,
        seed: Some(20),
        sx: SCALE_BOUNDS,
        singular_values: SCALE_BOUNDS,
        u_max: MAX_GALILEAN_SPEED,
        st: SCALE_BOUNDS,
        st_exponents: default_st_exponents(),
    };
    let limit_bounds = RandomTransforms {
        count: 6,
        seed: Some(21),
        ..full_bounds.clone()
    };

    let grid = Grid3::new([64, 64, 32], [-31.5, -31.5, -15.5], [1.0; 3]).unwrap();
    let smooth_params = vec![RFParams::new(2.0, Mat2::new(1.2, 0.2, 0.2, 0.9), 1.0, Vec2::new(0.2, -0.1)).unwrap()];
    let patterns = vec![
        PatternSpec::GaussianBlob {
            center: [0.0, 0.0],
            s0: 9.0,
            tau0: Some(16.0),
            t0: 0.0,
        },
        PatternSpec::MovingBlob {
            center: [0.0, 0.0],
            s0: 9.0,
            velocity: [0.5, -0.25],
            tau0: Some(16.0),
            t0: 0.0,
        },
        PatternSpec::Grating {
            frequency: 0.08,
            direction: 0.5,
            phase: 0.3,
            velocity: [0.2, 0.1],
            envelope: Some(200.0),
        },
    ];
    let pipeline_bounds = RandomTransforms {
        count: 12,
        seed: Some(22),
        sx: [0.8, 1.25],
        singular_values: [0.85, 1.2],
        u_max: 0.5,
        st: [0.8, 1.25],
        st_exponents: default_st_exponents(),
    };
    let refinement = Some(Refinement {
        factor: 2,
        support: SupportConfig {
            spatial_sigmas: 6.0,
            temporal_sigmas: 6.0,
            causal_tail: 1e-5,
        },
        max_ratio: 0.7,
    });
    let singles = vec![
        GeoTransform::spatial_scaling(1.25).unwrap(),
        GeoTransform::affine(rotation(0.6) * Mat2::new(1.2, 0.0, 0.0, 0.85) * rotation(-0.2)).unwrap(),
        GeoTransform::temporal_scaling(1.25).unwrap(),
        GeoTransform::galilean(Vec2::new(0.6, -0.3)).unwrap(),
    ];
    let deriv_params = vec![RFParams::new(2.0, Mat2::new(1.3, 0.0, 0.0, 0.8), 1.0, Vec2::new(0.2, 0.0)).unwrap()];
    let derivatives = vec![
        Some(DerivativeSpec::Partial { alpha: [1, 0], n: 0 }),
        Some(DerivativeSpec::Partial { alpha: [0, 2], n: 0 }),
        Some(DerivativeSpec::Partial { alpha: [1, 1], n: 0 }),
        Some(DerivativeSpec::Directional { phi: 0.7, m: 1, n: 0 }),
        Some(DerivativeSpec::VelocityAdapted {
            v: [0.2, 0.0],
            n: 1,
            alpha: [0, 0],
        }),
        Some(DerivativeSpec::Lgn { sign: 1, n: 0 }),
        Some(DerivativeSpec::SimpleCell {
            phi: 0.0,
            m1: 1,
            m2: 0,
            v: [0.2, 0.0],
            n: 1,
        }),
    ];
    let deriv_transforms = vec![
        GeoTransform::affine(rotation(0.6)).unwrap(),
        GeoTransform::new(
            1.15,
            rotation(-0.4) * Mat2::new(1.1, 0.0, 0.0, 0.9),
            Vec2::new(0.3, 0.2),
            1.15,
        )
        .unwrap(),
        GeoTransform::galilean(Vec2::new(0.5, -0.25)).unwrap(),
        GeoTransform::temporal_scaling(1.25).unwrap(),
    ];
    let blob_pattern = vec![PatternSpec::GaussianBlob {
        center: [0.0, 0.0],
        s0: 9.0,
        tau0: Some(16.0),
        t0: 0.0,
    }];
    // Finite-difference error dominates derivative checks; a smoother input
    // and a longer time axis keep it well inside the bound.
    let deriv_grid = Grid3::new([64, 64, 40], [-31.5, -31.5, -19.5], [1.0; 3]).unwrap();
    let deriv_pattern = vec![PatternSpec::GaussianBlob {
        center: [0.0, 0.0],
        s0: 25.0,
        tau0: Some(25.0),
        t0: 0.0,
    }];

    SweepConfig {
        name: "acceptance".into(),
        groups: vec![
            SweepGroup {
                name: "kernel_identity_gaussian".into(),
                check: CheckKind::KernelIdentity,
                grid,
                transforms: vec![],
                random_transforms: Some(full_bounds),
                params: kernel_params.clone(),
                kernels: vec![gauss],
                patterns: vec![],
                derivatives: default_derivatives(),
                source: SourceMode::Sampled,
                verify: VerifyConfig::default(),
                tolerance: None,
                refinement: None,
            },
            SweepGroup {
                name: "kernel_identity_limit".into(),
                check: CheckKind::KernelIdentity,
                grid,
                transforms: vec![GeoTransform::temporal_scaling(1.5).unwrap()],
                random_transforms: Some(limit_bounds),
                params: kernel_params,
                kernels: vec![lim(SQRT_2), lim(2.0)],
                patterns: vec![],
                derivatives: default_derivatives(),
                source: SourceMode::Sampled,
                verify: VerifyConfig::default(),
                tolerance: None,
                refinement: None,
            },
            SweepGroup {
                name: "joint_smoothing".into(),
                check: CheckKind::Response,
                grid,
                transforms: vec![],
                random_transforms: Some(pipeline_bounds.clone()),
                params: smooth_params.clone(),
                kernels: vec![gauss],
                patterns,
                derivatives: default_derivatives(),
                source: SourceMode::Sampled,
                verify: VerifyConfig::default(),
                tolerance: None,
                refinement,
            },
            SweepGroup {
                name: "single_transforms".into(),
                check: CheckKind::Response,
                grid,
                transforms: singles,
                random_transforms: None,
                params: smooth_params,
                kernels: vec![gauss],
                patterns: blob_pattern,
                derivatives: default_derivatives(),
                source: SourceMode::Sampled,
                verify: VerifyConfig::default(),
                tolerance: None,
                refinement: None,
            },
            SweepGroup {
                name: "derivatives".into(),
                check: CheckKind::Response,
                grid: deriv_grid,
                transforms: deriv_transforms,
                random_transforms: Some(pipeline_bounds.clone()),
                params: deriv_params,
                kernels: vec![gauss],
                patterns: deriv_pattern,
                derivatives,
                source: SourceMode::Sampled,
                verify: VerifyConfig::default(),
                tolerance: None,
                refinement: None,
            },
        ],
    }
}
