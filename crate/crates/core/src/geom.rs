//! Composed geometric transformations of space-time and the induced
//! transformation of receptive-field parameters.
//!
//! A [`GeoTransform`] maps `(x, t)` to
//!
//! ```text
//! x' = Sx · A · (x + u·t)
//! t' = St · t
//! ```
//!
//! i.e. a Galilean shear by `u`, followed by the affine map `A`, a uniform
//! spatial scaling `Sx` and a temporal scaling `St`. In homogeneous form this
//! is `p' = Q p` for `p = (x1, x2, t)`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Default lower bound on `|det A|`.
pub const DET_EPS: f64 = 1e-12;
/// Structural tolerance used when re-factoring homogeneous matrices.
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Counter-clockwise rotation by `theta` radians.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeoTransformRepr", into = "GeoTransformRepr")]
pub struct GeoTransform {
    sx: f64,
    a: Mat2,
    u: Vec2,
    st: f64,
}

#[derive(Serialize, Deserialize)]
struct GeoTransformRepr {
    #[serde(rename = "Sx")]
    sx: f64,
    #[serde(rename = "A")]
    a: [[f64; 2]; 2],
    u: [f64; 2],
    #[serde(rename = "St")]
    st: f64,
}

impl TryFrom<GeoTransformRepr> for GeoTransform {
    type Error = Error;

    fn try_from(r: GeoTransformRepr) -> Result<Self> {
        GeoTransform::new(r.sx, mat2_from_rows(r.a), Vec2::new(r.u[0], r.u[1]), r.st)
    }
}

impl From<GeoTransform> for GeoTransformRepr {
    fn from(g: GeoTransform) -> Self {
        GeoTransformRepr {
            sx: g.sx,
            a: mat2_rows(&g.a),
            u: [g.u.x, g.u.y],
            st: g.st,
        }
    }
}

pub(crate) fn mat2_from_rows(r: [[f64; 2]; 2]) -> Mat2 {
    Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1])
}

pub(crate) fn mat2_rows(m: &Mat2) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

impl GeoTransform {
    pub fn new(sx: f64, a: Mat2, u: Vec2, st: f64) -> Result<Self> {
        Self::with_det_eps(sx, a, u, st, DET_EPS)
    }

    pub fn with_det_eps(sx: f64, a: Mat2, u: Vec2, st: f64, det_eps: f64) -> Result<Self> {
        if !(sx.is_finite() && sx > 0.0) {
            return Err(Error::InvalidTransform(format!("Sx must be positive, got {sx}")));
        }
        if !(st.is_finite() && st > 0.0) {
            return Err(Error::InvalidTransform(format!("St must be positive, got {st}")));
        }
        if a.iter().chain(u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry in A or u".into()));
        }
        let det = a.determinant();
        if det.abs() <= det_eps {
            return Err(Error::InvalidTransform(format!("A is singular (det = {det:e})")));
        }
        Ok(Self { sx, a, u, st })
    }

    pub fn identity() -> Self {
        Self {
            sx: 1.0,
            a: Mat2::identity(),
            u: Vec2::zeros(),
            st: 1.0,
        }
    }

    pub fn spatial_scaling(sx: f64) -> Result<Self> {
        Self::new(sx, Mat2::identity(), Vec2::zeros(), 1.0)
    }

    pub fn affine(a: Mat2) -> Result<Self> {
        Self::new(1.0, a, Vec2::zeros(), 1.0)
    }

    pub fn galilean(u: Vec2) -> Result<Self> {
        Self::new(1.0, Mat2::identity(), u, 1.0)
    }

    pub fn temporal_scaling(st: f64) -> Result<Self> {
        Self::new(1.0, Mat2::identity(), Vec2::zeros(), st)
    }

    pub fn sx(&self) -> f64 {
        self.sx
    }

    pub fn a(&self) -> &Mat2 {
        &self.a
    }

    pub fn u(&self) -> &Vec2 {
        &self.u
    }

    pub fn st(&self) -> f64 {
        self.st
    }

    /// Volume element ratio `dξ' dη' / dξ dη = Sx² |det A| St`.
    pub fn jacobian(&self) -> f64 {
        self.sx * self.sx * self.a.determinant().abs() * self.st
    }

    pub fn apply_point(&self, x: Vec2, t: f64) -> (Vec2, f64) {
        (self.a * (x + self.u * t) * self.sx, self.st * t)
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let (x, t) = self.apply_point(Vec2::new(p.x, p.y), p.z);
        Vec3::new(x.x, x.y, t)
    }

    pub fn to_homogeneous(&self) -> HomogeneousTransform {
        let m = self.a * self.sx;
        let b = m * self.u;
        #[rustfmt::skip]
        let q = Mat3::new(
            m[(0, 0)], m[(0, 1)], b.x,
            m[(1, 0)], m[(1, 1)], b.y,
            0.0, 0.0, self.st,
        );
        HomogeneousTransform { q }
    }

    /// Re-factors a homogeneous matrix into `(Sx, A, u, St)` given the spatial
    /// scaling factor to attribute to `Sx`; the remainder goes into `A`.
    pub fn from_homogeneous(h: &HomogeneousTransform, sx: f64) -> Result<Self> {
        let q = &h.q;
        let scale = q.amax().max(1.0);
        if q[(2, 0)].abs() > STRUCTURAL_TOL * scale || q[(2, 1)].abs() > STRUCTURAL_TOL * scale {
            return Err(Error::InvalidTransform(format!(
                "homogeneous matrix bottom row ({}, {}, {}) is not of the form (0, 0, St)",
                q[(2, 0)],
                q[(2, 1)],
                q[(2, 2)]
            )));
        }
        let m = Mat2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]);
        let m_inv = m
            .try_inverse()
            .ok_or_else(|| Error::InvalidTransform("spatial block is singular".into()))?;
        let u = m_inv * Vec2::new(q[(0, 2)], q[(1, 2)]);
        Self::new(sx, m / sx, u, q[(2, 2)])
    }

    pub fn inverse(&self) -> Self {
        let q_inv = self
            .to_homogeneous()
            .q
            .try_inverse()
            .expect("homogeneous matrix of a valid transform is invertible");
        Self::from_homogeneous(&HomogeneousTransform { q: q_inv }, 1.0 / self.sx)
            .expect("inverse of a valid transform is a valid transform")
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.sx - 1.0).abs() <= tol
            && (self.st - 1.0).abs() <= tol
            && (self.a - Mat2::identity()).amax() <= tol
            && self.u.amax() <= tol
    }
}

/// Returns `g` with `apply_point(g, ·) = apply_point(outer, apply_point(inner, ·))`.
pub fn compose(outer: &GeoTransform, inner: &GeoTransform) -> Result<GeoTransform> {
    let q = outer.to_homogeneous().q * inner.to_homogeneous().q;
    GeoTransform::from_homogeneous(&HomogeneousTransform { q }, outer.sx * inner.sx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform {
    pub q: Mat3,
}

impl HomogeneousTransform {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.q * p
    }

    /// `(Qᵀ, Q⁻ᵀ)`, so that `∇_p = Qᵀ ∇_p'` and `∇_p' = Q⁻ᵀ ∇_p`.
    ///
    /// `Q⁻ᵀ` is evaluated from its closed form in terms of the transform
    /// factors, not by numerical inversion.
    pub fn gradient_transform_matrices(g: &GeoTransform) -> (Mat3, Mat3) {
        let qt = g.to_homogeneous().q.transpose();
        let a = &g.a;
        let det = a.determinant();
        let k = 1.0 / (g.sx * det);
        let sd = g.sx * det;
        #[rustfmt::skip]
        let qinvt = Mat3::new(
            a[(1, 1)], -a[(1, 0)], 0.0,
            -a[(0, 1)], a[(0, 0)], 0.0,
            -sd * g.u.x / g.st, -sd * g.u.y / g.st, sd / g.st,
        ) * k;
        (qt, qinvt)
    }
}

/// Receptive-field parameters `(s, Σ, τ, v)`: spatial variance, spatial
/// shape matrix, temporal variance and image velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RfParamsRepr", into = "RfParamsRepr")]
pub struct RFParams {
    pub s: f64,
    pub sigma: Mat2,
    pub tau: f64,
    pub v: Vec2,
}

#[derive(Serialize, Deserialize)]
struct RfParamsRepr {
    s: f64,
    #[serde(rename = "Sigma")]
    sigma: [[f64; 2]; 2],
    tau: f64,
    v: [f64; 2],
}

impl TryFrom<RfParamsRepr> for RFParams {
    type Error = Error;

    fn try_from(r: RfParamsRepr) -> Result<Self> {
        RFParams::new(r.s, mat2_from_rows(r.sigma), r.tau, Vec2::new(r.v[0], r.v[1]))
    }
}

impl From<RFParams> for RfParamsRepr {
    fn from(p: RFParams) -> Self {
        RfParamsRepr {
            s: p.s,
            sigma: mat2_rows(&p.sigma),
            tau: p.tau,
            v: [p.v.x, p.v.y],
        }
    }
}

impl RFParams {
    pub fn new(s: f64, sigma: Mat2, tau: f64, v: Vec2) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParams(format!("s must be positive, got {s}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau must be positive, got {tau}")));
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParams("non-finite velocity".into()));
        }
        check_spd(&sigma).map_err(Error::InvalidParams)?;
        Ok(Self { s, sigma, tau, v })
    }

    /// Isotropic, non-moving parameters.
    pub fn isotropic(s: f64, tau: f64) -> Result<Self> {
        Self::new(s, Mat2::identity(), tau, Vec2::zeros())
    }

    pub fn with_velocity(mut self, v: Vec2) -> Self {
        self.v = v;
        self
    }

    /// Effective spatial covariance `s·Σ`.
    pub fn spatial_covariance(&self) -> Mat2 {
        self.sigma * self.s
    }
}

pub(crate) fn check_spd(m: &Mat2) -> std::result::Result<(), String> {
    if !m.iter().all(|c| c.is_finite()) {
        return Err("non-finite entry in Sigma".into());
    }
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(format!("Sigma is not symmetric (|Σ12 − Σ21| = {asym:e})"));
    }
    let (l1, l2, _) = sym_eigen(m);
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(format!("Sigma is not positive definite (eigenvalues {l1}, {l2})"));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric 2×2 matrix: `(λ_max, λ_min, φ)` where
/// `φ ∈ [0, π)` is the angle of the eigenvector belonging to `λ_max`.
pub fn sym_eigen(m: &Mat2) -> (f64, f64, f64) {
    let a = m[(0, 0)];
    let c = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let mut phi = 0.5 * (2.0 * b).atan2(a - c);
    if phi < 0.0 {
        phi += std::f64::consts::PI;
    }
    (mean + r, mean - r, phi)
}

/// Transformed receptive-field parameters matching a transformed input:
///
/// ```text
/// s' = Sx² s,   Σ' = A Σ Aᵀ,   τ' = St² τ,   v' = Sx A (v + u) / St
/// ```
///
/// The velocity law follows from requiring `x' − v' t' = Sx A (x − v t)`
/// under `x' = Sx A (x + u t)`, `t' = St t`.
pub fn transform_params(p: &RFParams, g: &GeoTransform) -> RFParams {
    let sigma = g.a * p.sigma * g.a.transpose();
    RFParams {
        s: g.sx * g.sx * p.s,
        sigma: 0.5 * (sigma + sigma.transpose()),
        tau: g.st * g.st * p.tau,
        v: g.a * (p.v + g.u) * (g.sx / g.st),
    }
}

/// Maps a direction angle under a rotation of the image plane by `theta`,
/// normalised to `[0, 2π)`.
pub fn transform_direction_rotation(phi: f64, theta: f64) -> f64 {
    normalize_angle(phi + theta)
}

pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}
