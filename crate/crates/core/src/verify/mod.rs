//! Numerical certification of joint covariance: a receptive-field response
//! computed on a video and the response with transformed parameters
//! computed on the transformed video must agree at corresponding points.
//!
//! Comparison points are the grid points of the original response;
//! the transformed response is interpolated at their images. The
//! transformed domain is an axis-aligned box on the input lattice that
//! just covers the images plus every filter footprint.

pub mod algebra;
pub mod sweep;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::conv::convolve_fft;
use crate::error::{Error, Result};
use crate::geom::{transform_params, GeoTransform, RFParams, Vec2, Vec3};
use crate::kernels::{
    limit_kernel_time_constants, sample_cascade, spatiotemporal_kernel, ExponentialCascade, SampledKernel3D,
    SpatioTemporalKernel, TemporalKernel, TemporalKernelSpec,
};
use crate::scspace::{
    apply_operator, convolve_kernel, stencil_radius, DerivativeSpec, DifferentialOperator, FdAccuracy, SmoothConfig,
};
use crate::volume::{encode_samples, Grid3, IndexBox, VideoVolume};
use crate::warp::{warp_pattern, warp_video, Interpolation, OutOfDomain, Pattern, VolumeInterpolator, WarpConfig};

/// Default bound for full-pipeline checks.
pub const PIPELINE_TOLERANCE: f64 = 1e-2;
/// Default bound for kernel-level checks.
pub const KERNEL_TOLERANCE: f64 = 1e-3;
/// Kernel samples below this fraction of the peak are not compared.
pub const KERNEL_FLOOR: f64 = 1e-6;
/// Slack on `log_c(St)` when deciding that `St = c^j`.
pub const QUANTIZATION_TOL: f64 = 1e-9;
/// Transformed-kernel samples at or above this fraction of the peak must
/// see valid transformed video for a point to be compared.
pub const FOOTPRINT_LEVEL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub smooth: SmoothConfig,
    /// Interpolation used for warping the input and reading the
    /// transformed response.
    pub interpolation: Interpolation,
    pub accuracy: FdAccuracy,
    /// Extra samples kept clear of valid-box edges around every spline
    /// read, so the mirrored prefilter does not leak boundary data.
    pub spline_margin: usize,
    /// Samples trimmed from each side of the original valid box.
    pub compare_shrink: usize,
    pub tolerance: f64,
    /// Upper bound on the size of the transformed domain.
    pub max_domain_samples: usize,
    /// Reject limit-kernel checks whose temporal scaling is not `c^j`.
    pub enforce_quantized_st: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            smooth: SmoothConfig::default(),
            interpolation: Interpolation::TricubicSpline,
            accuracy: FdAccuracy::Fourth,
            spline_margin: 3,
            compare_shrink: 0,
            tolerance: PIPELINE_TOLERANCE,
            max_domain_samples: 40_000_000,
            enforce_quantized_st: true,
        }
    }
}

impl VerifyConfig {
    fn margin(&self) -> usize {
        match self.interpolation {
            Interpolation::Trilinear => 0,
            Interpolation::TricubicSpline => self.spline_margin,
        }
    }
}

/// Where the input video comes from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// A sampled volume; the transformed video is obtained by warping it.
    Sampled(&'a VideoVolume),
    /// A closed-form pattern sampled on `grid`; the transformed video is
    /// sampled from the pattern directly.
    Analytic { pattern: &'a Pattern, grid: Grid3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub transform: GeoTransform,
    pub params: RFParams,
    pub params_transformed: RFParams,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub valid_sample_count: usize,
    /// `|R'(g(p)) − R(p)| / max|R|` on the compared box, zero where no
    /// comparison was possible.
    pub error_map: VideoVolume,
    pub config_digest: String,
    /// `max|R|` over the compared samples.
    pub reference_scale: f64,
}

impl CovarianceReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            transform: self.transform,
            params: self.params,
            params_transformed: self.params_transformed,
            max_rel_error: self.max_rel_error,
            mean_rel_error: self.mean_rel_error,
            valid_sample_count: self.valid_sample_count,
            reference_scale: self.reference_scale,
            config_digest: self.config_digest.clone(),
        }
    }
}

/// A report without its error map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub transform: GeoTransform,
    pub params: RFParams,
    pub params_transformed: RFParams,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub valid_sample_count: usize,
    pub reference_scale: f64,
    pub config_digest: String,
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration types serialise");
    hex::encode(Sha256::digest(&bytes))
}

/// Fails unless the temporal scaling is an integer power of `c` when the
/// limit kernel is in use.
pub fn check_temporal_quantization(g: &GeoTransform, spec: &TemporalKernelSpec) -> Result<()> {
    if let TemporalKernelSpec::TimeCausalLimit { c, .. } = *spec {
        let j = g.st().ln() / c.ln();
        if (j - j.round()).abs() > QUANTIZATION_TOL {
            return Err(Error::NonQuantizedTemporalScaling { st: g.st(), c });
        }
    }
    Ok(())
}

/// Largest pointwise relative deviation between `J · T(g(p); p')` and
/// `T(p; p)`, `J = Sx²|det A|St`, over a half-sample lattice covering the
/// kernel support, at points where `T ≥ 1e-6 · peak`.
pub fn verify_kernel_transform_identity(g: &GeoTransform, p: &RFParams, spec: &TemporalKernelSpec) -> Result<f64> {
    check_temporal_quantization(g, spec)?;
    kernel_identity_error(g, p, spec, 0.5, KERNEL_FLOOR)
}

/// The kernel-level check without the quantization precondition, on a
/// lattice of the given spacing.
pub fn kernel_identity_error(
    g: &GeoTransform,
    p: &RFParams,
    spec: &TemporalKernelSpec,
    spacing: f64,
    floor: f64,
) -> Result<f64> {
    let pp = transform_params(p, g);
    let k = SpatioTemporalKernel::new(p, spec)?;
    let kp = SpatioTemporalKernel::new(&pp, spec)?;
    let sampled = k.sample([spacing; 3], &Default::default())?;
    let peak = sampled.values.iter().fold(0.0f64, |m, v| m.max(*v));
    let j = g.jacobian();
    let [n1, n2, nt] = sampled.shape;
    let mut worst: f64 = 0.0;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for it in 0..nt {
                let t0 = sampled.values[(i1 * n2 + i2) * nt + it];
                if t0 < floor * peak {
                    continue;
                }
                let x = Vec2::new(
                    (i1 as f64 - sampled.origin[0] as f64) * spacing,
                    (i2 as f64 - sampled.origin[1] as f64) * spacing,
                );
                let t = (it as f64 - sampled.origin[2] as f64) * spacing;
                let (xp, tp) = g.apply_point(x, t);
                let t1 = j * kp.eval(xp, tp);
                worst = worst.max((t1 - t0).abs() / t0);
            }
        }
    }
    Ok(worst)
}

/// Largest relative deviation of the DTFT of the sampled `K`-stage cascade
/// from the truncated product `Π 1/(1 + i μ_k ω)`, over `0 ≤ ω ≤ π/(2Δ)`.
pub fn limit_kernel_dft_error(tau: f64, c: f64, k: usize, spacing: f64) -> Result<f64> {
    let cascade = ExponentialCascade::limit(tau, c, k)?;
    let n = cascade.required_samples(spacing, 1e-13);
    let sampled = sample_cascade(&cascade, n, spacing, 1e-13)?;
    let omega_max = PI / (2.0 * spacing);
    let steps = 512;
    let mut worst: f64 = 0.0;
    for j in 0..=steps {
        let w = omega_max * j as f64 / steps as f64;
        let exact = cascade.transfer(w);
        worst = worst.max((sampled.dtft(w) - exact).norm() / exact.norm());
    }
    Ok(worst)
}

/// `|Σ μ_k² − τ| / τ` for the truncated cascade.
pub fn cascade_variance_error(tau: f64, c: f64, k: usize) -> f64 {
    let sum: f64 = limit_kernel_time_constants(tau, c, k).iter().map(|m| m * m).sum();
    (sum - tau).abs() / tau
}

/// Largest relative deviation of `St · h(St t; St² τ)` from `h(t; τ)` on
/// a lattice of the given spacing, at points where `h ≥ floor · peak`.
pub fn temporal_scaling_error(tau: f64, st: f64, spec: &TemporalKernelSpec, spacing: f64, floor: f64) -> Result<f64> {
    let h = TemporalKernel::new(tau, spec)?;
    let hs = TemporalKernel::new(st * st * tau, spec)?;
    let sampled = h.sample(spacing, &Default::default())?;
    let peak = sampled.peak();
    let mut worst: f64 = 0.0;
    for (i, &v) in sampled.values.iter().enumerate() {
        if v < floor * peak {
            continue;
        }
        let t = sampled.time(i);
        worst = worst.max((st * hs.eval(st * t) - v).abs() / v);
    }
    Ok(worst)
}

/// `L'(g(p)) = L(p)` for smoothing alone.
pub fn verify_smoothing_covariance(
    f: &VideoVolume,
    g: &GeoTransform,
    p: &RFParams,
    spec: &TemporalKernelSpec,
    cfg: &VerifyConfig,
) -> Result<CovarianceReport> {
    verify_covariance(Source::Sampled(f), g, p, None, spec, cfg)
}

/// `(D' L')(g(p)) = (D L)(p)` where `D'` is `D` with the gradient law of
/// `g` substituted.
pub fn verify_derivative_covariance(
    f: &VideoVolume,
    g: &GeoTransform,
    p: &RFParams,
    d: &DerivativeSpec,
    spec: &TemporalKernelSpec,
    cfg: &VerifyConfig,
) -> Result<CovarianceReport> {
    verify_covariance(Source::Sampled(f), g, p, Some(d), spec, cfg)
}

/// Summed-volume table over a boolean mask for constant-time box queries.
struct MaskTable {
    shape: [usize; 3],
    sums: Vec<u32>,
}

impl MaskTable {
    fn new(mask: &[bool], shape: [usize; 3]) -> Self {
        let s = [shape[0] + 1, shape[1] + 1, shape[2] + 1];
        let mut sums = vec![0u32; s[0] * s[1] * s[2]];
        let at = |i: usize, j: usize, k: usize| (i * s[1] + j) * s[2] + k;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let m = mask[(i * shape[1] + j) * shape[2] + k] as u32;
                    sums[at(i + 1, j + 1, k + 1)] =
                        m + sums[at(i, j + 1, k + 1)] + sums[at(i + 1, j, k + 1)] + sums[at(i + 1, j + 1, k)]
                            - sums[at(i, j, k + 1)]
                            - sums[at(i, j + 1, k)]
                            - sums[at(i + 1, j, k)]
                            + sums[at(i, j, k)];
                }
            }
        }
        Self { shape, sums }
    }

    /// Whether every sample of the inclusive box `[lo, hi]` is set.
    fn all(&self, lo: [isize; 3], hi: [isize; 3]) -> bool {
        if (0..3).any(|a| lo[a] < 0 || hi[a] >= self.shape[a] as isize || hi[a] < lo[a]) {
            return false;
        }
        let s = [self.shape[0] + 1, self.shape[1] + 1, self.shape[2] + 1];
        let at = |i: isize, j: isize, k: isize| self.sums[((i as usize) * s[1] + j as usize) * s[2] + k as usize];
        let (a, b) = (lo, [hi[0] + 1, hi[1] + 1, hi[2] + 1]);
        let count = at(b[0], b[1], b[2]) as i64
            - at(a[0], b[1], b[2]) as i64
            - at(b[0], a[1], b[2]) as i64
            - at(b[0], b[1], a[2]) as i64
            + at(a[0], a[1], b[2]) as i64
            + at(a[0], b[1], a[2]) as i64
            + at(b[0], a[1], a[2]) as i64
            - at(a[0], a[1], a[2]) as i64;
        count == (0..3).map(|ax| (b[ax] - a[ax]) as i64).product::<i64>()
    }
}

#[derive(Serialize)]
struct DigestInput<'a> {
    transform: &'a GeoTransform,
    params: &'a RFParams,
    kernel: &'a TemporalKernelSpec,
    derivative: Option<&'a DerivativeSpec>,
    config: &'a VerifyConfig,
    grid: &'a Grid3,
    source: String,
}

/// The general check behind the smoothing and derivative variants.
pub fn verify_covariance(
    source: Source,
    g: &GeoTransform,
    p: &RFParams,
    d: Option<&DerivativeSpec>,
    spec: &TemporalKernelSpec,
    cfg: &VerifyConfig,
) -> Result<CovarianceReport> {
    if cfg.enforce_quantized_st {
        check_temporal_quantization(g, spec)?;
    }
    let op = match d {
        Some(d) => d.operator()?,
        None => DifferentialOperator::identity(),
    };
    let sampled;
    let (f, source_tag) = match source {
        Source::Sampled(f) => (
            f,
            format!("sampled:{}", hex::encode(Sha256::digest(encode_samples(f.data())))),
        ),
        Source::Analytic { pattern, grid } => {
            sampled = VideoVolume::from_fn(grid, |x| pattern.eval(x))?;
            (&sampled, format!("analytic:{}", config_digest(pattern.spec())))
        }
    };
    let grid = *f.grid();
    let h = grid.spacing;

    // Reference response.
    let k = spatiotemporal_kernel(p, spec, &cfg.smooth.support, h)?;
    check_kernel_size(k.len(), &cfg.smooth)?;
    let l = convolve_kernel(f, &k, cfg.smooth.method)?;
    let r = apply_operator(&l, &op, cfg.accuracy)?;
    let compare = r.valid().shrink([cfg.compare_shrink; 3], [cfg.compare_shrink; 3]);
    if compare.is_empty() {
        return Err(Error::EmptyComparison(format!(
            "the response valid box {:?} of a {:?} input leaves nothing after trimming {} samples",
            r.valid(),
            grid.shape,
            cfg.compare_shrink
        )));
    }

    // Transformed operator and its footprint in the transformed domain.
    let pp = transform_params(p, g);
    let opp = op.transformed(g);
    let kp = spatiotemporal_kernel(&pp, spec, &cfg.smooth.support, h)?;
    check_kernel_size(kp.len(), &cfg.smooth)?;
    let off = kp.offsets();
    let mut stencil = [0usize; 3];
    for (e, _) in opp.terms() {
        for a in 0..3 {
            stencil[a] = stencil[a].max(stencil_radius(e[a], cfg.accuracy));
        }
    }
    let m = cfg.margin() as isize;
    // Smoothed samples needed around floor(q) for a read at continuous index q.
    let below: [isize; 3] = std::array::from_fn(|a| 1 + m + stencil[a] as isize);
    let above: [isize; 3] = std::array::from_fn(|a| 2 + m + stencil[a] as isize);

    let qg = g.to_homogeneous();
    let mut pmin = [f64::INFINITY; 3];
    let mut pmax = [f64::NEG_INFINITY; 3];
    for corner in 0..8 {
        let i: [usize; 3] = std::array::from_fn(|a| {
            if corner >> a & 1 == 0 {
                compare.lo[a]
            } else {
                compare.hi[a] - 1
            }
        });
        let x = grid.position(i);
        let y = qg.apply(Vec3::new(x[0], x[1], x[2]));
        for a in 0..3 {
            pmin[a] = pmin[a].min(y[a]);
            pmax[a] = pmax[a].max(y[a]);
        }
    }
    let mut origin = [0.0; 3];
    let mut shape = [0usize; 3];
    for a in 0..3 {
        let first = ((pmin[a] - grid.origin[a]) / h[a]).floor() as isize - below[a] - off[a].1 - 1;
        let last = ((pmax[a] - grid.origin[a]) / h[a]).ceil() as isize + above[a] - off[a].0 + 1;
        origin[a] = grid.origin[a] + first as f64 * h[a];
        shape[a] = (last - first + 1) as usize;
    }
    let gp = Grid3::new(shape, origin, h)?;
    if gp.len() > cfg.max_domain_samples {
        return Err(Error::DomainTooLarge {
            samples: gp.len(),
            limit: cfg.max_domain_samples,
        });
    }

    // Transformed video and its validity mask.
    let (fp, mask) = match source {
        Source::Sampled(f) => {
            let domain = f.valid().shrink([cfg.margin(); 3], [cfg.margin(); 3]);
            let shrunk = f.clone().with_valid(domain);
            let wcfg = WarpConfig::new(gp)
                .with_interpolation(cfg.interpolation)
                .with_out_of_domain(OutOfDomain::Zero);
            let w = warp_video(&shrunk, g, &wcfg)?;
            (w.volume, w.mask)
        }
        Source::Analytic { pattern, .. } => (warp_pattern(pattern, g, &gp)?, vec![true; gp.len()]),
    };
    let table = MaskTable::new(&smoothed_validity(&mask, gp.shape, &kp), gp.shape);
    let lp = convolve_kernel(&fp, &kp, cfg.smooth.method)?;
    let rp = apply_operator(&lp, &opp, cfg.accuracy)?;
    let reader = VolumeInterpolator::new(&rp, cfg.interpolation);

    // Pointwise comparison.
    let map_grid = grid.sub_grid(&compare);
    let mut diffs = vec![f64::NAN; map_grid.len()];
    let mut scale: f64 = 0.0;
    for (n, i) in compare.iter().enumerate() {
        let x = grid.position(i);
        let y = qg.apply(Vec3::new(x[0], x[1], x[2]));
        let q = gp.to_index([y.x, y.y, y.z]);
        let fl: [isize; 3] = std::array::from_fn(|a| (q[a] + 1e-10).floor() as isize);
        let lo = std::array::from_fn(|a| fl[a] - below[a]);
        let hi = std::array::from_fn(|a| fl[a] + above[a]);
        if !table.all(lo, hi) {
            continue;
        }
        let Some(v) = reader.eval_index(q) else { continue };
        let v0 = r.get(i);
        scale = scale.max(v0.abs());
        diffs[n] = (v - v0).abs();
    }
    let count = diffs.iter().filter(|d| !d.is_nan()).count();
    if count == 0 {
        return Err(Error::EmptyComparison(format!(
            "no sample of the {:?} input has its transformed footprint inside the data; the transformed \
             kernel spans {:?} samples and the original {:?}, so each axis needs roughly the larger span plus {} samples",
            grid.shape,
            kp.shape,
            k.shape,
            4 * m as usize + 3 + 2 * stencil.iter().max().copied().unwrap_or(0)
        )));
    }
    let norm = if scale > 0.0 { 1.0 / scale } else { 1.0 };
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let errors: Vec<f64> = diffs
        .iter()
        .map(|d| {
            if d.is_nan() {
                0.0
            } else {
                let e = d * norm;
                sum += e;
                max = max.max(e);
                e
            }
        })
        .collect();
    let error_map = VideoVolume::new(map_grid, errors)?;

    let config_digest = config_digest(&DigestInput {
        transform: g,
        params: p,
        kernel: spec,
        derivative: d,
        config: cfg,
        grid: &grid,
        source: source_tag,
    });
    Ok(CovarianceReport {
        transform: *g,
        params: *p,
        params_transformed: pp,
        max_rel_error: max,
        mean_rel_error: sum / count as f64,
        valid_sample_count: count,
        error_map,
        config_digest,
        reference_scale: scale,
    })
}

/// Samples whose smoothed value only draws on valid input: the mask eroded
/// by the kernel's significant footprint rather than its bounding box.
fn smoothed_validity(mask: &[bool], shape: [usize; 3], k: &SampledKernel3D) -> Vec<bool> {
    let peak = k.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cell: f64 = k.spacing.iter().product();
    let footprint = SampledKernel3D {
        values: k
            .values
            .iter()
            .map(|v| {
                if v.abs() >= FOOTPRINT_LEVEL * peak {
                    1.0 / cell
                } else {
                    0.0
                }
            })
            .collect(),
        ..k.clone()
    };
    let invalid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect();
    let hits = convolve_fft(&invalid, shape, &footprint);
    let off = k.offsets();
    let n = shape;
    let mut out = vec![false; mask.len()];
    for i0 in 0..n[0] {
        for i1 in 0..n[1] {
            for i2 in 0..n[2] {
                let i = [i0 as isize, i1 as isize, i2 as isize];
                // The footprint must also lie inside the domain.
                let inside = (0..3).all(|a| i[a] - off[a].1 >= 0 && i[a] - off[a].0 < n[a] as isize);
                let idx = (i0 * n[1] + i1) * n[2] + i2;
                out[idx] = inside && hits[idx] < 0.5;
            }
        }
    }
    out
}

fn check_kernel_size(samples: usize, cfg: &SmoothConfig) -> Result<()> {
    if samples > cfg.max_kernel_samples {
        return Err(Error::SupportTooLarge {
            samples,
            limit: cfg.max_kernel_samples,
        });
    }
    Ok(())
}

/// The compare box of a volume after smoothing with `p` and applying `d`,
/// useful for sizing inputs.
pub fn response_valid_box(
    grid: &Grid3,
    p: &RFParams,
    spec: &TemporalKernelSpec,
    cfg: &VerifyConfig,
) -> Result<IndexBox> {
    let k = spatiotemporal_kernel(p, spec, &cfg.smooth.support, grid.spacing)?;
    let off = k.offsets();
    Ok(IndexBox {
        lo: std::array::from_fn(|a| off[a].1.max(0) as usize),
        hi: std::array::from_fn(|a| (grid.shape[a] as isize + off[a].0.min(0)).max(0) as usize),
    })
}
