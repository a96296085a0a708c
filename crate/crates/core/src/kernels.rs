//! Sampled smoothing kernels: the 2-D affine Gaussian, the 1-D temporal
//! Gaussian and the time-causal limit kernel, plus their space-time product
//! `T(x, t) = g(x − v t; s, Σ) h(t; τ)`.
//!
//! Kernels are sampled at grid points (not integrated over cells) and are
//! not renormalised after truncation, so that sampled values stay equal to
//! the continuous kernel at those points.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{check_spd, sym_eigen, Mat2, RFParams, Vec2};

/// Choice of temporal smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemporalKernelRepr", into = "TemporalKernelRepr")]
pub enum TemporalKernelSpec {
    NonCausalGaussian,
    /// Cascade of `k` truncated exponentials approximating the limit kernel
    /// with distribution parameter `c`.
    TimeCausalLimit {
        c: f64,
        k: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family")]
enum TemporalKernelRepr {
    NonCausalGaussian,
    TimeCausalLimit {
        c: f64,
        #[serde(rename = "K")]
        k: usize,
    },
}

impl TryFrom<TemporalKernelRepr> for TemporalKernelSpec {
    type Error = Error;

    fn try_from(r: TemporalKernelRepr) -> Result<Self> {
        match r {
            TemporalKernelRepr::NonCausalGaussian => Ok(Self::NonCausalGaussian),
            TemporalKernelRepr::TimeCausalLimit { c, k } => Self::limit(c, k),
        }
    }
}

impl From<TemporalKernelSpec> for TemporalKernelRepr {
    fn from(s: TemporalKernelSpec) -> Self {
        match s {
            TemporalKernelSpec::NonCausalGaussian => Self::NonCausalGaussian,
            TemporalKernelSpec::TimeCausalLimit { c, k } => Self::TimeCausalLimit { c, k },
        }
    }
}

/// Smallest accepted truncation depth of the limit-kernel cascade.
pub const MIN_CASCADE_DEPTH: usize = 4;
/// Default truncation depth.
pub const DEFAULT_CASCADE_DEPTH: usize = 8;

impl TemporalKernelSpec {
    pub fn limit(c: f64, k: usize) -> Result<Self> {
        if !(c.is_finite() && c > 1.0) {
            return Err(Error::InvalidKernel(format!(
                "distribution parameter c must exceed 1, got {c}"
            )));
        }
        if k < MIN_CASCADE_DEPTH {
            return Err(Error::InvalidKernel(format!(
                "truncation depth K must be at least {MIN_CASCADE_DEPTH}, got {k}"
            )));
        }
        Ok(Self::TimeCausalLimit { c, k })
    }

    pub fn is_causal(&self) -> bool {
        matches!(self, Self::TimeCausalLimit { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NonCausalGaussian => "gaussian",
            Self::TimeCausalLimit { .. } => "limit",
        }
    }
}

/// Truncation of kernel supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportConfig {
    /// Spatial half-width in units of `sqrt(s · λ_max(Σ))`.
    pub spatial_sigmas: f64,
    /// Temporal half-width of the Gaussian in units of `sqrt(τ)`.
    pub temporal_sigmas: f64,
    /// Kernel mass allowed beyond the end of a causal kernel.
    pub causal_tail: f64,
}

impl Default for SupportConfig {
    fn default() -> Self {
        Self {
            spatial_sigmas: 5.0,
            temporal_sigmas: 5.0,
            causal_tail: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel2D {
    /// Row-major over `(x1, x2)`, `x2` fastest.
    pub values: Vec<f64>,
    pub shape: [usize; 2],
    /// Index of the sample at `x = 0`.
    pub origin: [usize; 2],
    pub spacing: f64,
}

impl SampledKernel2D {
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.shape[1] + i2]
    }

    fn positions(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        let [_, n2] = self.shape;
        self.values.iter().enumerate().map(move |(idx, &v)| {
            let x1 = (idx / n2) as f64 - self.origin[0] as f64;
            let x2 = (idx % n2) as f64 - self.origin[1] as f64;
            (Vec2::new(x1, x2) * self.spacing, v)
        })
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing * self.spacing
    }

    pub fn centroid(&self) -> Vec2 {
        let m: f64 = self.values.iter().sum();
        self.positions().fold(Vec2::zeros(), |acc, (x, v)| acc + x * v) / m
    }

    /// Central second-moment matrix of the samples.
    pub fn second_moment(&self) -> Mat2 {
        let m: f64 = self.values.iter().sum();
        let c = self.centroid();
        self.positions().fold(Mat2::zeros(), |acc, (x, v)| {
            let d = x - c;
            acc + d * d.transpose() * v
        }) / m
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel1D {
    pub values: Vec<f64>,
    /// Index of the sample at `t = 0`.
    pub origin: usize,
    pub spacing: f64,
    pub causal: bool,
}

impl SampledKernel1D {
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.origin as f64) * self.spacing
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing
    }

    pub fn mean(&self) -> f64 {
        let m: f64 = self.values.iter().sum();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.time(i) * v)
            .sum::<f64>()
            / m
    }

    pub fn variance(&self) -> f64 {
        let m: f64 = self.values.iter().sum();
        let mu = self.mean();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.time(i) - mu).powi(2) * v)
            .sum::<f64>()
            / m
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Discrete-time Fourier transform `Δ Σ h(t_j) e^{-iωt_j}` at angular
    /// frequency `omega` (radians per unit time).
    pub fn dtft(&self, omega: f64) -> Complex64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| Complex64::from_polar(v, -omega * self.time(i)))
            .sum::<Complex64>()
            * self.spacing
    }
}

/// Continuous 2-D affine Gaussian `g(x; s, Σ)` with covariance `s·Σ`.
#[derive(Debug, Clone, Copy)]
pub struct AffineGaussian {
    precision: Mat2,
    norm: f64,
}

impl AffineGaussian {
    pub fn new(s: f64, sigma: &Mat2) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidKernel(format!("spatial scale must be positive, got {s}")));
        }
        check_spd(sigma).map_err(Error::InvalidKernel)?;
        let cov = sigma * s;
        let precision = cov
            .try_inverse()
            .ok_or_else(|| Error::InvalidKernel("singular spatial covariance".into()))?;
        Ok(Self {
            precision,
            norm: 1.0 / (2.0 * PI * s * sigma.determinant().sqrt()),
        })
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        let q = x.dot(&(self.precision * x));
        self.norm * (-0.5 * q).exp()
    }

    pub fn peak(&self) -> f64 {
        self.norm
    }
}

/// Half-width of the spatial support in physical units.
fn spatial_radius(s: f64, sigma: &Mat2, sigmas: f64) -> f64 {
    let (lmax, _, _) = sym_eigen(sigma);
    sigmas * (s * lmax).sqrt()
}

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing.is_finite() && spacing > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("spacing must be positive, got {spacing}")))
    }
}

pub fn affine_gaussian_2d(s: f64, sigma: &Mat2, support_radius_sigmas: f64, spacing: f64) -> Result<SampledKernel2D> {
    check_spacing(spacing)?;
    let g = AffineGaussian::new(s, sigma)?;
    let r = (spatial_radius(s, sigma, support_radius_sigmas) / spacing).ceil() as usize;
    let n = 2 * r + 1;
    let mut values = Vec::with_capacity(n * n);
    for i1 in 0..n {
        for i2 in 0..n {
            let x = Vec2::new(i1 as f64 - r as f64, i2 as f64 - r as f64) * spacing;
            values.push(g.eval(x));
        }
    }
    Ok(SampledKernel2D {
        values,
        shape: [n, n],
        origin: [r, r],
        spacing,
    })
}

pub fn gaussian_1d(t: f64, tau: f64) -> f64 {
    (-t * t / (2.0 * tau)).exp() / (2.0 * PI * tau).sqrt()
}

pub fn temporal_gaussian(tau: f64, support_radius_sigmas: f64, spacing: f64) -> Result<SampledKernel1D> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidKernel(format!("tau must be positive, got {tau}")));
    }
    check_spacing(spacing)?;
    let r = (support_radius_sigmas * tau.sqrt() / spacing).ceil() as usize;
    let half: Vec<f64> = (0..=r).map(|j| gaussian_1d(j as f64 * spacing, tau)).collect();
    let values = (0..=2 * r)
        .map(|i| half[(i as isize - r as isize).unsigned_abs()])
        .collect();
    Ok(SampledKernel1D {
        values,
        origin: r,
        spacing,
        causal: false,
    })
}

/// Time constants `μ_k = c^{-k} sqrt(c² − 1) sqrt(τ)`, `k = 1..=K`, of the
/// truncated-exponential factors `1 / (1 + i μ_k ω)` of the limit kernel.
pub fn limit_kernel_time_constants(tau: f64, c: f64, k: usize) -> Vec<f64> {
    let base = (c * c - 1.0).sqrt() * tau.sqrt();
    (1..=k).map(|i| base * c.powi(-(i as i32))).collect()
}

/// A cascade of first-order integrators `(1/μ) e^{-t/μ} [t ≥ 0]`.
///
/// The kernel is the output of a linear chain of leaky stages driven by an
/// impulse; its value at time `t` is read off the state `exp(M t) e₁`,
/// where `M` is the lower-bidiagonal generator of the chain. Sampling on a
/// regular grid steps the state with the one-step propagator.
#[derive(Debug, Clone)]
pub struct ExponentialCascade {
    mu: Vec<f64>,
    generator: DMatrix<f64>,
}

impl ExponentialCascade {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidKernel(format!(
                "time constants must be positive, got {mu:?}"
            )));
        }
        let k = mu.len();
        let mut generator = DMatrix::zeros(k, k);
        for (i, m) in mu.iter().enumerate() {
            generator[(i, i)] = -1.0 / m;
            if i > 0 {
                generator[(i, i - 1)] = 1.0 / mu[i - 1];
            }
        }
        Ok(Self { mu, generator })
    }

    pub fn limit(tau: f64, c: f64, k: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidKernel(format!("tau must be positive, got {tau}")));
        }
        Self::new(limit_kernel_time_constants(tau, c, k))
    }

    pub fn time_constants(&self) -> &[f64] {
        &self.mu
    }

    pub fn mean(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.mu.iter().map(|m| m * m).sum()
    }

    /// `Π_k 1 / (1 + i μ_k ω)`.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        self.mu.iter().map(|m| Complex64::new(1.0, m * omega).inv()).product()
    }

    fn initial_state(&self) -> nalgebra::DVector<f64> {
        let mut p = nalgebra::DVector::zeros(self.mu.len());
        p[0] = 1.0;
        p
    }

    fn output(&self, state: &nalgebra::DVector<f64>) -> f64 {
        let last = self.mu.len() - 1;
        state[last] / self.mu[last]
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let state = (&self.generator * t).exp() * self.initial_state();
        self.output(&state)
    }

    /// Mass of the kernel beyond `t`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        ((&self.generator * t).exp() * self.initial_state()).sum()
    }

    /// Samples at `t_j = j·spacing` for `j = 0..n`.
    pub fn sample(&self, spacing: f64, n: usize) -> Vec<f64> {
        let step = (&self.generator * spacing).exp();
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.output(&state));
            state = &step * state;
        }
        out
    }

    /// Smallest number of samples `n` such that the mass beyond
    /// `(n − 1)·spacing` is at most `tail`.
    pub fn required_samples(&self, spacing: f64, tail: f64) -> usize {
        let step = (&self.generator * spacing).exp();
        let mut state = self.initial_state();
        let mut n = 1;
        // The survival function decays at least like e^{-t/μ_max}.
        let cap = 1 + (self.mean() * 1e3 / spacing) as usize;
        while state.sum() > tail && n < cap {
            state = &step * state;
            n += 1;
        }
        n
    }
}

/// Time-causal limit kernel sampled on `duration_frames` samples starting
/// at `t = 0`.
pub fn time_causal_limit_kernel(
    tau: f64,
    spec: &TemporalKernelSpec,
    duration_frames: usize,
    spacing: f64,
) -> Result<SampledKernel1D> {
    let TemporalKernelSpec::TimeCausalLimit { c, k } = *spec else {
        return Err(Error::InvalidKernel(
            "time-causal kernel requested for a non-causal family".into(),
        ));
    };
    check_spacing(spacing)?;
    let cascade = ExponentialCascade::limit(tau, c, k)?;
    sample_cascade(&cascade, duration_frames, spacing, 1e-3)
}

/// Samples an arbitrary cascade, rejecting durations that leave more than
/// `tail` of the mass uncovered.
pub fn sample_cascade(
    cascade: &ExponentialCascade,
    duration_frames: usize,
    spacing: f64,
    tail: f64,
) -> Result<SampledKernel1D> {
    let required = cascade.required_samples(spacing, tail);
    if duration_frames < required {
        return Err(Error::DurationTooShort {
            given: duration_frames,
            required,
        });
    }
    Ok(SampledKernel1D {
        values: cascade.sample(spacing, duration_frames),
        origin: 0,
        spacing,
        causal: true,
    })
}

/// Continuous temporal smoothing kernel `h(t; τ)`.
#[derive(Debug, Clone)]
pub enum TemporalKernel {
    Gaussian { tau: f64 },
    Cascade(ExponentialCascade),
}

impl TemporalKernel {
    pub fn new(tau: f64, spec: &TemporalKernelSpec) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidKernel(format!("tau must be positive, got {tau}")));
        }
        match *spec {
            TemporalKernelSpec::NonCausalGaussian => Ok(Self::Gaussian { tau }),
            TemporalKernelSpec::TimeCausalLimit { c, k } => Ok(Self::Cascade(ExponentialCascade::limit(tau, c, k)?)),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Gaussian { tau } => gaussian_1d(t, *tau),
            Self::Cascade(c) => c.density(t),
        }
    }

    /// Sampled kernel on the support selected by `support`.
    pub fn sample(&self, spacing: f64, support: &SupportConfig) -> Result<SampledKernel1D> {
        match self {
            Self::Gaussian { tau } => temporal_gaussian(*tau, support.temporal_sigmas, spacing),
            Self::Cascade(c) => {
                check_spacing(spacing)?;
                let n = c.required_samples(spacing, support.causal_tail);
                sample_cascade(c, n, spacing, support.causal_tail)
            }
        }
    }
}

/// Sampled space-time kernel on a common box; `values` is C-ordered over
/// `(x1, x2, t)` with `t` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel3D {
    pub values: Vec<f64>,
    pub shape: [usize; 3],
    /// Index of the sample at `(x, t) = (0, 0)`.
    pub origin: [usize; 3],
    pub spacing: [f64; 3],
}

impl SampledKernel3D {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inclusive offset range `(lo, hi)` per axis, relative to the origin.
    pub fn offsets(&self) -> [(isize, isize); 3] {
        std::array::from_fn(|a| {
            let o = self.origin[a] as isize;
            (-o, self.shape[a] as isize - 1 - o)
        })
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing.iter().product::<f64>()
    }

    /// Spatial slices, one per temporal sample, paired with their times.
    pub fn frames(&self) -> Vec<(f64, SampledKernel2D)> {
        let [n1, n2, nt] = self.shape;
        if (self.spacing[0] - self.spacing[1]).abs() > 1e-12 * self.spacing[0] {
            log::warn!("anisotropic spatial spacing; frames report the x1 spacing");
        }
        (0..nt)
            .map(|j| {
                let values = (0..n1 * n2).map(|ij| self.values[ij * nt + j]).collect();
                let t = (j as f64 - self.origin[2] as f64) * self.spacing[2];
                (
                    t,
                    SampledKernel2D {
                        values,
                        shape: [n1, n2],
                        origin: [self.origin[0], self.origin[1]],
                        spacing: self.spacing[0],
                    },
                )
            })
            .collect()
    }
}

/// The continuous space-time kernel of a receptive field.
#[derive(Debug, Clone)]
pub struct SpatioTemporalKernel {
    params: RFParams,
    spatial: AffineGaussian,
    temporal: TemporalKernel,
}

impl SpatioTemporalKernel {
    pub fn new(params: &RFParams, spec: &TemporalKernelSpec) -> Result<Self> {
        Ok(Self {
            params: *params,
            spatial: AffineGaussian::new(params.s, &params.sigma)?,
            temporal: TemporalKernel::new(params.tau, spec)?,
        })
    }

    pub fn params(&self) -> &RFParams {
        &self.params
    }

    pub fn temporal(&self) -> &TemporalKernel {
        &self.temporal
    }

    pub fn spatial(&self) -> &AffineGaussian {
        &self.spatial
    }

    pub fn eval(&self, x: Vec2, t: f64) -> f64 {
        let h = self.temporal.eval(t);
        if h == 0.0 {
            return 0.0;
        }
        self.spatial.eval(x - self.params.v * t) * h
    }

    pub fn sample(&self, spacing: [f64; 3], support: &SupportConfig) -> Result<SampledKernel3D> {
        for h in spacing {
            check_spacing(h)?;
        }
        let h = self.temporal.sample(spacing[2], support)?;
        let p = &self.params;
        let radius = spatial_radius(p.s, &p.sigma, support.spatial_sigmas);
        let t_first = h.time(0);
        let t_last = h.time(h.values.len() - 1);
        let mut lo = [0isize; 2];
        let mut hi = [0isize; 2];
        for a in 0..2 {
            let c0 = p.v[a] * t_first;
            let c1 = p.v[a] * t_last;
            lo[a] = ((c0.min(c1) - radius) / spacing[a]).floor() as isize;
            hi[a] = ((c0.max(c1) + radius) / spacing[a]).ceil() as isize;
        }
        let shape = [
            (hi[0] - lo[0] + 1) as usize,
            (hi[1] - lo[1] + 1) as usize,
            h.values.len(),
        ];
        let nt = shape[2];
        let mut values = vec![0.0; shape[0] * shape[1] * nt];
        for (j, &hv) in h.values.iter().enumerate() {
            if hv == 0.0 {
                continue;
            }
            let t = h.time(j);
            let centre = p.v * t;
            for i1 in 0..shape[0] {
                let x1 = (lo[0] + i1 as isize) as f64 * spacing[0];
                for i2 in 0..shape[1] {
                    let x2 = (lo[1] + i2 as isize) as f64 * spacing[1];
                    let x = Vec2::new(x1, x2) - centre;
                    values[(i1 * shape[1] + i2) * nt + j] = self.spatial.eval(x) * hv;
                }
            }
        }
        Ok(SampledKernel3D {
            values,
            shape,
            origin: [(-lo[0]) as usize, (-lo[1]) as usize, h.origin],
            spacing,
        })
    }
}

pub fn spatiotemporal_kernel(
    params: &RFParams,
    spec: &TemporalKernelSpec,
    support: &SupportConfig,
    spacing: [f64; 3],
) -> Result<SampledKernel3D> {
    SpatioTemporalKernel::new(params, spec)?.sample(spacing, support)
}
