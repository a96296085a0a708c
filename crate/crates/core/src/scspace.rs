//! Spatio-temporal smoothing of video volumes and the derivative layer on
//! top of it.
//!
//! Derivative operators are polynomials in `(∂x1, ∂x2, ∂t)` with real
//! coefficients. Every [`DerivativeSpec`] expands into such a polynomial,
//! which is then evaluated on the smoothed volume by central finite
//! differences. Substituting the gradient law of a transform into the
//! polynomial yields the matching operator in the transformed domain.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use crate::conv;
use crate::error::{Error, Result};
use crate::geom::{sym_eigen, GeoTransform, HomogeneousTransform, Mat3, RFParams, Vec2};
use crate::kernels::{spatiotemporal_kernel, SampledKernel3D, SpatioTemporalKernel, SupportConfig, TemporalKernelSpec};
use crate::volume::{IndexBox, VideoVolume};

/// Highest total differentiation order accepted by [`DerivativeSpec`].
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// Tolerance on the eigendirection coupling of simple cells.
pub const EIGENDIRECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Direct sum for small problems, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothConfig {
    pub support: SupportConfig,
    /// Upper bound on the number of kernel samples.
    pub max_kernel_samples: usize,
    pub method: ConvolutionMethod,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            support: SupportConfig::default(),
            max_kernel_samples: 8_000_000,
            method: ConvolutionMethod::Auto,
        }
    }
}

const DIRECT_WORK_LIMIT: usize = 20_000_000;

/// `T(·; p) * f` with the default configuration.
pub fn smooth(f: &VideoVolume, p: &RFParams, spec: &TemporalKernelSpec) -> Result<VideoVolume> {
    smooth_with(f, p, spec, &SmoothConfig::default())
}

pub fn smooth_with(
    f: &VideoVolume,
    p: &RFParams,
    spec: &TemporalKernelSpec,
    cfg: &SmoothConfig,
) -> Result<VideoVolume> {
    let k = spatiotemporal_kernel(p, spec, &cfg.support, f.grid().spacing)?;
    if k.len() > cfg.max_kernel_samples {
        return Err(Error::SupportTooLarge {
            samples: k.len(),
            limit: cfg.max_kernel_samples,
        });
    }
    convolve_kernel(f, &k, cfg.method)
}

/// Convolves `f` with a sampled kernel whose spacing matches the grid.
///
/// The output valid box is the set of samples whose whole kernel footprint
/// falls inside the valid box of `f`; values elsewhere use zero padding.
pub fn convolve_kernel(f: &VideoVolume, k: &SampledKernel3D, method: ConvolutionMethod) -> Result<VideoVolume> {
    let grid = *f.grid();
    for a in 0..3 {
        if (k.spacing[a] - grid.spacing[a]).abs() > 1e-12 * grid.spacing[a] {
            return Err(Error::InvalidGrid(format!(
                "kernel spacing {:?} does not match volume spacing {:?}",
                k.spacing, grid.spacing
            )));
        }
    }
    let off = k.offsets();
    let fv = f.valid();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let n = grid.shape[a] as isize;
        lo[a] = (fv.lo[a] as isize + off[a].1).clamp(0, n) as usize;
        hi[a] = (fv.hi[a] as isize + off[a].0).clamp(0, n) as usize;
    }
    let valid = IndexBox { lo, hi };
    if valid.is_empty() {
        let required = std::array::from_fn(|a| k.shape[a] + grid.shape[a] - fv.shape()[a]);
        return Err(Error::VolumeTooSmall {
            actual: grid.shape,
            required,
        });
    }
    let direct = match method {
        ConvolutionMethod::Direct => true,
        ConvolutionMethod::Fft => false,
        ConvolutionMethod::Auto => k.len().saturating_mul(grid.len()) <= DIRECT_WORK_LIMIT,
    };
    let data = if direct {
        conv::convolve_direct(f.data(), grid.shape, k)
    } else {
        conv::convolve_fft(f.data(), grid.shape, k)
    };
    Ok(VideoVolume::from_parts(grid, data, valid))
}

/// Real polynomial in three variables, keyed by exponent triples.
#[derive(Debug, Clone, PartialEq, Default)]
struct Poly3 {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert([0, 0, 0], c);
        }
        Self { terms }
    }

    fn linear(c: [f64; 3]) -> Self {
        let mut terms = BTreeMap::new();
        for (a, &ca) in c.iter().enumerate() {
            if ca != 0.0 {
                let mut e = [0; 3];
                e[a] = 1;
                terms.insert(e, ca);
            }
        }
        Self { terms }
    }

    fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(*e).or_insert(0.0) += c;
        }
        Self { terms }.pruned()
    }

    fn scale(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, c * k)).collect(),
        }
        .pruned()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        Self { terms }.pruned()
    }

    fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    fn partial(&self, axis: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut d = *e;
                d[axis] -= 1;
                *terms.entry(d).or_insert(0.0) += c * e[axis] as f64;
            }
        }
        Self { terms }
    }

    fn eval(&self, p: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32))
            .sum()
    }

    /// Drops coefficients that are round-off relative to the largest one.
    fn pruned(mut self) -> Self {
        let max = self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        self.terms.retain(|_, c| c.abs() > 1e-14 * max);
        self
    }
}

/// Linear differential operator `Σ c_α ∂x1^α1 ∂x2^α2 ∂t^α3` with constant
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialOperator {
    poly: Poly3,
}

impl DifferentialOperator {
    pub fn identity() -> Self {
        Self {
            poly: Poly3::constant(1.0),
        }
    }

    pub fn zero() -> Self {
        Self { poly: Poly3::default() }
    }

    pub fn monomial(exponents: [u32; 3], coefficient: f64) -> Self {
        let mut poly = Poly3::default();
        if coefficient != 0.0 {
            poly.terms.insert(exponents, coefficient);
        }
        Self { poly }
    }

    /// `c0 ∂x1 + c1 ∂x2 + c2 ∂t`.
    pub fn linear(c: [f64; 3]) -> Self {
        Self { poly: Poly3::linear(c) }
    }

    /// Directional derivative `cos φ ∂x1 + sin φ ∂x2`.
    pub fn direction(phi: f64) -> Self {
        Self::linear([phi.cos(), phi.sin(), 0.0])
    }

    /// Velocity-adapted temporal derivative `v1 ∂x1 + v2 ∂x2 + ∂t`.
    pub fn velocity_adapted(v: Vec2) -> Self {
        Self::linear([v.x, v.y, 1.0])
    }

    pub fn laplacian() -> Self {
        Self::monomial([2, 0, 0], 1.0).add(&Self::monomial([0, 2, 0], 1.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            poly: self.poly.add(&other.poly),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            poly: self.poly.scale(k),
        }
    }

    /// Composition (operators commute, so this is the polynomial product).
    pub fn then(&self, other: &Self) -> Self {
        Self {
            poly: self.poly.mul(&other.poly),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        Self { poly: self.poly.pow(n) }
    }

    pub fn terms(&self) -> impl Iterator<Item = ([u32; 3], f64)> + '_ {
        self.poly.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn coefficient(&self, exponents: [u32; 3]) -> f64 {
        self.poly.terms.get(&exponents).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.terms.is_empty()
    }

    /// Highest total order among the terms.
    pub fn order(&self) -> u32 {
        self.poly.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Replaces `∂_i` by `Σ_j m[i][j] ∂_j`.
    pub fn substitute(&self, m: &Mat3) -> Self {
        let lin: [Poly3; 3] = std::array::from_fn(|i| Poly3::linear([m[(i, 0)], m[(i, 1)], m[(i, 2)]]));
        let mut out = Poly3::default();
        for (e, c) in &self.poly.terms {
            let term = lin[0].pow(e[0]).mul(&lin[1].pow(e[1])).mul(&lin[2].pow(e[2])).scale(*c);
            out = out.add(&term);
        }
        Self { poly: out }
    }

    /// Operator on the transformed domain that reproduces `self`: if
    /// `L'(g(p)) = L(p)` then `(D' L')(g(p)) = (D L)(p)` with `D' = self.transformed(g)`.
    pub fn transformed(&self, g: &GeoTransform) -> Self {
        let (qt, _) = HomogeneousTransform::gradient_transform_matrices(g);
        self.substitute(&qt)
    }

    /// Largest coefficient difference, for comparisons.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).poly.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Derivative requested on top of smoothing. Spatial directions are
/// measured counter-clockwise from the `x1` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DerivativeSpec {
    /// `∂x1^α1 ∂x2^α2 ∂t^n`.
    Partial { alpha: [u32; 2], n: u32 },
    /// `(cos φ ∂x1 + sin φ ∂x2)^m ∂t^n`.
    Directional {
        phi: f64,
        m: u32,
        #[serde(default)]
        n: u32,
    },
    /// `∂x1^α1 ∂x2^α2 (v·∇ + ∂t)^n`.
    VelocityAdapted {
        v: [f64; 2],
        n: u32,
        #[serde(default)]
        alpha: [u32; 2],
    },
    /// `∂x1² + ∂x2²`.
    Laplacian {},
    /// `∂φ^m1 ∂⊥φ^m2 (v·∇ + ∂t)^n`.
    SimpleCell {
        phi: f64,
        m1: u32,
        m2: u32,
        v: [f64; 2],
        n: u32,
    },
    /// `±(∂x1² + ∂x2²) ∂t^n`.
    Lgn {
        sign: i8,
        #[serde(default)]
        n: u32,
    },
}

impl DerivativeSpec {
    pub fn total_order(&self) -> u32 {
        match *self {
            Self::Partial { alpha, n } => alpha[0] + alpha[1] + n,
            Self::Directional { m, n, .. } => m + n,
            Self::VelocityAdapted { n, alpha, .. } => alpha[0] + alpha[1] + n,
            Self::Laplacian {} => 2,
            Self::SimpleCell { m1, m2, n, .. } => m1 + m2 + n,
            Self::Lgn { n, .. } => 2 + n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let order = self.total_order();
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::InvalidDerivative(format!(
                "total order {order} exceeds the maximum of {MAX_DERIVATIVE_ORDER}"
            )));
        }
        let finite = match self {
            Self::Directional { phi, .. } => phi.is_finite(),
            Self::VelocityAdapted { v, .. } => v.iter().all(|c| c.is_finite()),
            Self::SimpleCell { phi, v, .. } => phi.is_finite() && v.iter().all(|c| c.is_finite()),
            _ => true,
        };
        if !finite {
            return Err(Error::InvalidDerivative("non-finite direction or velocity".into()));
        }
        if let Self::Lgn { sign, .. } = self {
            if sign.abs() != 1 {
                return Err(Error::InvalidDerivative(format!(
                    "LGN sign must be +1 or -1, got {sign}"
                )));
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<DifferentialOperator> {
        self.validate()?;
        let dt = |n: u32| DifferentialOperator::monomial([0, 0, n], 1.0);
        let op = match *self {
            Self::Partial { alpha, n } => DifferentialOperator::monomial([alpha[0], alpha[1], n], 1.0),
            Self::Directional { phi, m, n } => DifferentialOperator::direction(phi).pow(m).then(&dt(n)),
            Self::VelocityAdapted { v, n, alpha } => DifferentialOperator::monomial([alpha[0], alpha[1], 0], 1.0)
                .then(&DifferentialOperator::velocity_adapted(Vec2::new(v[0], v[1])).pow(n)),
            Self::Laplacian {} => DifferentialOperator::laplacian(),
            Self::SimpleCell { phi, m1, m2, v, n } => DifferentialOperator::direction(phi)
                .pow(m1)
                .then(&DifferentialOperator::direction(phi + std::f64::consts::FRAC_PI_2).pow(m2))
                .then(&DifferentialOperator::velocity_adapted(Vec2::new(v[0], v[1])).pow(n)),
            Self::Lgn { sign, n } => DifferentialOperator::laplacian().then(&dt(n)).scale(sign as f64),
        };
        Ok(op)
    }
}

/// Accuracy order of the central difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdAccuracy {
    Second,
    #[default]
    Fourth,
}

#[rustfmt::skip]
fn stencil(order: u32, acc: FdAccuracy) -> &'static [f64] {
    match (acc, order) {
        (_, 0) => &[1.0],
        (FdAccuracy::Second, 1) => &[-0.5, 0.0, 0.5],
        (FdAccuracy::Second, 2) => &[1.0, -2.0, 1.0],
        (FdAccuracy::Second, 3) => &[-0.5, 1.0, 0.0, -1.0, 0.5],
        (FdAccuracy::Second, 4) => &[1.0, -4.0, 6.0, -4.0, 1.0],
        (FdAccuracy::Fourth, 1) => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        (FdAccuracy::Fourth, 2) => &[-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
        (FdAccuracy::Fourth, 3) => &[0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125],
        (FdAccuracy::Fourth, 4) => &[-1.0 / 6.0, 2.0, -6.5, 28.0 / 3.0, -6.5, 2.0, -1.0 / 6.0],
        _ => unreachable!("derivative order is bounded by validation"),
    }
}

/// Half-width of the stencil used for an order along one axis.
pub fn stencil_radius(order: u32, acc: FdAccuracy) -> usize {
    (stencil(order, acc).len() - 1) / 2
}

fn diff_axis(data: &[f64], shape: [usize; 3], axis: usize, order: u32, h: f64, acc: FdAccuracy) -> Vec<f64> {
    let c = stencil(order, acc);
    let r = (c.len() / 2) as isize;
    let strides = [shape[1] * shape[2], shape[2], 1];
    let st = strides[axis] as isize;
    let n = shape[axis] as isize;
    let scale = h.powi(-(order as i32));
    let mut out = vec![0.0; data.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = ((idx / strides[axis]) % shape[axis]) as isize;
        let mut acc = 0.0;
        for (k, ck) in c.iter().enumerate() {
            let off = k as isize - r;
            let j = i + off;
            if *ck == 0.0 || j < 0 || j >= n {
                continue;
            }
            acc += ck * data[(idx as isize + off * st) as usize];
        }
        *o = acc * scale;
    }
    out
}

/// Applies `op` by central differences; the valid box shrinks by the
/// stencil radius on every differentiated axis.
pub fn apply_operator(l: &VideoVolume, op: &DifferentialOperator, acc: FdAccuracy) -> Result<VideoVolume> {
    if op.order() > MAX_DERIVATIVE_ORDER {
        return Err(Error::InvalidDerivative(format!(
            "operator order {} exceeds the maximum of {MAX_DERIVATIVE_ORDER}",
            op.order()
        )));
    }
    let grid = *l.grid();
    let mut radius = [0usize; 3];
    for (e, _) in op.terms() {
        for a in 0..3 {
            radius[a] = radius[a].max(stencil_radius(e[a], acc));
        }
    }
    let valid = l.valid().shrink(radius, radius);
    if valid.is_empty() {
        let vs = l.valid().shape();
        return Err(Error::VolumeTooSmall {
            actual: vs,
            required: std::array::from_fn(|a| 2 * radius[a] + 1),
        });
    }

    let mut by_time: HashMap<u32, Vec<f64>> = HashMap::new();
    let mut by_space: HashMap<[u32; 2], Vec<f64>> = HashMap::new();
    let mut out = vec![0.0; grid.len()];
    for (e, c) in op.terms() {
        let t = by_time
            .entry(e[2])
            .or_insert_with(|| diff_axis(l.data(), grid.shape, 2, e[2], grid.spacing[2], acc));
        let y = by_space
            .entry([e[1], e[2]])
            .or_insert_with(|| diff_axis(t, grid.shape, 1, e[1], grid.spacing[1], acc));
        if e[0] == 0 {
            out.iter_mut().zip(y.iter()).for_each(|(o, v)| *o += c * v);
        } else {
            let z = diff_axis(y, grid.shape, 0, e[0], grid.spacing[0], acc);
            out.iter_mut().zip(&z).for_each(|(o, v)| *o += c * v);
        }
    }
    Ok(VideoVolume::from_parts(grid, out, valid))
}

/// Finite-difference derivative with fourth-order stencils.
pub fn derivative(l: &VideoVolume, d: &DerivativeSpec) -> Result<VideoVolume> {
    derivative_with(l, d, FdAccuracy::Fourth)
}

pub fn derivative_with(l: &VideoVolume, d: &DerivativeSpec, acc: FdAccuracy) -> Result<VideoVolume> {
    apply_operator(l, &d.operator()?, acc)
}

/// `sign · ∇² ∂t^n` of the volume smoothed with `(s, I, τ, 0)`.
pub fn lgn_response(
    f: &VideoVolume,
    s: f64,
    tau: f64,
    n: u32,
    sign: i8,
    spec: &TemporalKernelSpec,
) -> Result<VideoVolume> {
    lgn_response_with(f, s, tau, n, sign, spec, &SmoothConfig::default())
}

pub fn lgn_response_with(
    f: &VideoVolume,
    s: f64,
    tau: f64,
    n: u32,
    sign: i8,
    spec: &TemporalKernelSpec,
    cfg: &SmoothConfig,
) -> Result<VideoVolume> {
    let d = DerivativeSpec::Lgn { sign, n };
    d.validate()?;
    let p = RFParams::isotropic(s, tau)?;
    derivative(&smooth_with(f, &p, spec, cfg)?, &d)
}

/// Checks that `phi` is an eigendirection of `sigma`. Any direction is
/// accepted when the eigenvalues coincide.
pub fn check_eigendirection(sigma: &crate::geom::Mat2, phi: f64) -> Result<()> {
    let (l1, l2, major) = sym_eigen(sigma);
    if l1 - l2 <= 1e-12 * l1 {
        return Ok(());
    }
    let misalignment = 0.5 * (2.0 * (phi - major)).sin().abs();
    if misalignment > EIGENDIRECTION_TOL {
        return Err(Error::NotEigendirection { phi, misalignment });
    }
    Ok(())
}

/// `∂φ^m1 ∂⊥φ^m2 ∂t̄^n` of `smooth(f, p)`, with `∂t̄` following `p.v`.
pub fn simple_cell_response(
    f: &VideoVolume,
    p: &RFParams,
    phi: f64,
    m1: u32,
    m2: u32,
    n: u32,
    spec: &TemporalKernelSpec,
) -> Result<VideoVolume> {
    simple_cell_response_with(f, p, phi, m1, m2, n, spec, &SmoothConfig::default())
}

#[allow(clippy::too_many_arguments)]
pub fn simple_cell_response_with(
    f: &VideoVolume,
    p: &RFParams,
    phi: f64,
    m1: u32,
    m2: u32,
    n: u32,
    spec: &TemporalKernelSpec,
    cfg: &SmoothConfig,
) -> Result<VideoVolume> {
    let d = DerivativeSpec::SimpleCell {
        phi,
        m1,
        m2,
        v: [p.v.x, p.v.y],
        n,
    };
    d.validate()?;
    check_eigendirection(&p.sigma, phi)?;
    derivative(&smooth_with(f, p, spec, cfg)?, &d)
}

/// Samples `op` applied analytically to the kernel of `p` with a Gaussian
/// temporal kernel. The kernel is then the 3-D Gaussian with covariance
/// `[[sΣ + τvvᵀ, τv], [τvᵀ, τ]]`, so each derivative is a polynomial times
/// the kernel itself. The box is one standard deviation wider than the
/// smoothing kernel's.
pub fn gaussian_derivative_kernel(
    p: &RFParams,
    op: &DifferentialOperator,
    support: &SupportConfig,
    spacing: [f64; 3],
) -> Result<SampledKernel3D> {
    let wide = SupportConfig {
        spatial_sigmas: support.spatial_sigmas + 1.0,
        temporal_sigmas: support.temporal_sigmas + 1.0,
        ..*support
    };
    let base = SpatioTemporalKernel::new(p, &TemporalKernelSpec::NonCausalGaussian)?;
    let mut k = base.sample(spacing, &wide)?;

    let cx = p.spatial_covariance() + p.v * p.v.transpose() * p.tau;
    let tv = p.v * p.tau;
    #[rustfmt::skip]
    let cov = Mat3::new(
        cx[(0, 0)], cx[(0, 1)], tv.x,
        cx[(1, 0)], cx[(1, 1)], tv.y,
        tv.x,       tv.y,       p.tau,
    );
    let prec = cov
        .try_inverse()
        .ok_or_else(|| Error::InvalidParams("singular space-time covariance".into()))?;
    // ∂_i (q G) = (∂_i q − q·(P p)_i) G
    let grad: [Poly3; 3] = std::array::from_fn(|i| Poly3::linear([-prec[(i, 0)], -prec[(i, 1)], -prec[(i, 2)]]));
    let mut total = Poly3::default();
    for (e, c) in op.terms() {
        let mut q = Poly3::constant(1.0);
        for (axis, g) in grad.iter().enumerate() {
            for _ in 0..e[axis] {
                q = q.partial(axis).add(&q.mul(g));
            }
        }
        total = total.add(&q.scale(c));
    }

    let [n1, n2, nt] = k.shape;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for j in 0..nt {
                let idx = (i1 * n2 + i2) * nt + j;
                if k.values[idx] == 0.0 {
                    continue;
                }
                let pos = [
                    (i1 as f64 - k.origin[0] as f64) * spacing[0],
                    (i2 as f64 - k.origin[1] as f64) * spacing[1],
                    (j as f64 - k.origin[2] as f64) * spacing[2],
                ];
                k.values[idx] *= total.eval(pos);
            }
        }
    }
    Ok(k)
}

/// `op(T(·; p)) * f` through an analytically differentiated kernel
/// (Gaussian temporal kernel only).
pub fn smooth_derivative_via_kernel(
    f: &VideoVolume,
    p: &RFParams,
    op: &DifferentialOperator,
    cfg: &SmoothConfig,
) -> Result<VideoVolume> {
    let k = gaussian_derivative_kernel(p, op, &cfg.support, f.grid().spacing)?;
    if k.len() > cfg.max_kernel_samples {
        return Err(Error::SupportTooLarge {
            samples: k.len(),
            limit: cfg.max_kernel_samples,
        });
    }
    convolve_kernel(f, &k, cfg.method)
}
