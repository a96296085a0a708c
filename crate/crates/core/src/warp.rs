//! Resampling of video volumes under a [`GeoTransform`] and the analytic
//! test patterns used to probe covariance.
//!
//! Warping pulls back: the output sample at `p'` reads the input at
//! `g⁻¹(p')`. Patterns can be evaluated at arbitrary continuous points, so
//! a warped pattern can also be produced without any interpolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::{GeoTransform, Vec3};
use crate::volume::{Grid3, IndexBox, VideoVolume};

/// Continuous indices within this distance of an integer read the sample
/// directly.
const SNAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Trilinear,
    #[default]
    TricubicSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfDomain {
    #[default]
    Zero,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpConfig {
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub out_of_domain: OutOfDomain,
    pub output_grid: Grid3,
}

impl WarpConfig {
    pub fn new(output_grid: Grid3) -> Self {
        Self {
            interpolation: Interpolation::default(),
            out_of_domain: OutOfDomain::default(),
            output_grid,
        }
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn with_out_of_domain(mut self, policy: OutOfDomain) -> Self {
        self.out_of_domain = policy;
        self
    }
}

/// Cubic B-spline prefilter along one line, mirror boundary.
fn prefilter_line(c: &mut [f64]) {
    let n = c.len();
    if n < 2 {
        return;
    }
    let z = 3f64.sqrt() - 2.0;
    for v in c.iter_mut() {
        *v *= 6.0;
    }
    // Causal initialisation over the mirrored sequence.
    let iz = 1.0 / z;
    let mut zn = z;
    let mut z2n = z.powi(n as i32 - 1);
    let mut sum = c[0] + z2n * c[n - 1];
    z2n = z2n * z2n * iz;
    for v in c.iter().take(n - 1).skip(1) {
        sum += (zn + z2n) * v;
        zn *= z;
        z2n *= iz;
    }
    c[0] = sum / (1.0 - zn * zn);
    for k in 1..n {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

fn spline_coefficients(data: &[f64], shape: [usize; 3]) -> Vec<f64> {
    let mut c = data.to_vec();
    let strides = [shape[1] * shape[2], shape[2], 1];
    let mut line = Vec::new();
    for axis in 0..3 {
        let n = shape[axis];
        if n < 2 {
            continue;
        }
        let st = strides[axis];
        for start in 0..c.len() {
            if !(start / st).is_multiple_of(n) {
                continue;
            }
            line.clear();
            line.extend((0..n).map(|k| c[start + k * st]));
            prefilter_line(&mut line);
            for (k, v) in line.iter().enumerate() {
                c[start + k * st] = *v;
            }
        }
    }
    c
}

fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        s * s * s / 6.0,
        (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0,
        (1.0 + 3.0 * (t + t2 - t3)) / 6.0,
        t3 / 6.0,
    ]
}

fn mirror(j: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let r = j.rem_euclid(period);
    (if r >= n as isize { period - r } else { r }) as usize
}

/// Continuous-point reader over a volume's valid box.
pub struct VolumeInterpolator<'a> {
    grid: Grid3,
    domain: IndexBox,
    method: Interpolation,
    samples: &'a [f64],
    coeffs: Cow<'a, [f64]>,
}

impl<'a> VolumeInterpolator<'a> {
    pub fn new(f: &'a VideoVolume, method: Interpolation) -> Self {
        let coeffs = match method {
            Interpolation::Trilinear => Cow::Borrowed(f.data()),
            Interpolation::TricubicSpline => Cow::Owned(spline_coefficients(f.data(), f.shape())),
        };
        Self {
            grid: *f.grid(),
            domain: *f.valid(),
            method,
            samples: f.data(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    /// Whether the continuous index lies in the closed valid box.
    pub fn contains_index(&self, q: [f64; 3]) -> bool {
        (0..3).all(|a| q[a] >= self.domain.lo[a] as f64 - SNAP_TOL && q[a] <= (self.domain.hi[a] - 1) as f64 + SNAP_TOL)
    }

    /// Value at a continuous index, `None` outside the valid box.
    pub fn eval_index(&self, q: [f64; 3]) -> Option<f64> {
        if self.domain.is_empty() || !self.contains_index(q) {
            return None;
        }
        let shape = self.grid.shape;
        let r: [f64; 3] = std::array::from_fn(|a| q[a].round());
        if (0..3).all(|a| (q[a] - r[a]).abs() < SNAP_TOL) {
            let i: [usize; 3] = std::array::from_fn(|a| r[a] as usize);
            return Some(self.samples[self.grid.index(i)]);
        }
        let v = match self.method {
            Interpolation::Trilinear => {
                let mut base = [0usize; 3];
                let mut w = [0.0; 3];
                for a in 0..3 {
                    if shape[a] == 1 {
                        continue;
                    }
                    let qa = q[a].clamp(0.0, (shape[a] - 1) as f64);
                    let b = (qa.floor() as usize).min(shape[a] - 2);
                    base[a] = b;
                    w[a] = qa - b as f64;
                }
                let mut acc = 0.0;
                for d0 in 0..2 {
                    for d1 in 0..2 {
                        for d2 in 0..2 {
                            let d = [d0, d1, d2];
                            let mut wt = 1.0;
                            let mut i = [0usize; 3];
                            for a in 0..3 {
                                if shape[a] == 1 {
                                    if d[a] == 1 {
                                        wt = 0.0;
                                    }
                                    continue;
                                }
                                wt *= if d[a] == 1 { w[a] } else { 1.0 - w[a] };
                                i[a] = base[a] + d[a];
                            }
                            if wt != 0.0 {
                                acc += wt * self.coeffs[self.grid.index(i)];
                            }
                        }
                    }
                }
                acc
            }
            Interpolation::TricubicSpline => {
                let mut idx = [[0usize; 4]; 3];
                let mut w = [[0.0; 4]; 3];
                for a in 0..3 {
                    let fl = q[a].floor();
                    w[a] = bspline_weights(q[a] - fl);
                    idx[a] = std::array::from_fn(|k| mirror(fl as isize - 1 + k as isize, shape[a]));
                }
                let strides = self.grid.strides();
                let mut acc = 0.0;
                for k0 in 0..4 {
                    for k1 in 0..4 {
                        let row = idx[0][k0] * strides[0] + idx[1][k1] * strides[1];
                        let w01 = w[0][k0] * w[1][k1];
                        let mut s = 0.0;
                        for k2 in 0..4 {
                            s += w[2][k2] * self.coeffs[row + idx[2][k2]];
                        }
                        acc += w01 * s;
                    }
                }
                acc
            }
        };
        Some(v)
    }

    pub fn eval(&self, p: [f64; 3]) -> Option<f64> {
        self.eval_index(self.grid.to_index(p))
    }
}

/// Warped volume plus a per-sample flag telling whether the preimage fell
/// inside the input's valid box.
#[derive(Debug, Clone, PartialEq)]
pub struct Warped {
    pub volume: VideoVolume,
    pub mask: Vec<bool>,
}

impl Warped {
    /// The mask as a 0/1 volume on the output grid.
    pub fn mask_volume(&self) -> VideoVolume {
        let data = self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        VideoVolume::new(*self.volume.grid(), data).expect("mask volume shares a validated grid")
    }

    pub fn valid_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

/// `f'(p') = f(g⁻¹(p'))` on `cfg.output_grid`.
pub fn warp_video(f: &VideoVolume, g: &GeoTransform, cfg: &WarpConfig) -> Result<Warped> {
    let out = cfg.output_grid;
    out.validate()?;
    let interp = VolumeInterpolator::new(f, cfg.interpolation);
    let qinv = g.inverse().to_homogeneous();
    let mut data = Vec::with_capacity(out.len());
    let mut mask = Vec::with_capacity(out.len());
    for idx in 0..out.len() {
        let pp = out.position(out.unravel(idx));
        let p = qinv.apply(Vec3::new(pp[0], pp[1], pp[2]));
        match interp.eval([p.x, p.y, p.z]) {
            Some(v) => {
                data.push(v);
                mask.push(true);
            }
            None => {
                if cfg.out_of_domain == OutOfDomain::Error {
                    return Err(Error::OutOfDomain([p.x, p.y, p.z]));
                }
                data.push(0.0);
                mask.push(false);
            }
        }
    }
    Ok(Warped {
        volume: VideoVolume::from_parts(out, data, out.full_box()),
        mask,
    })
}

/// Samples `pattern ∘ g⁻¹` on `grid`, bypassing interpolation.
pub fn warp_pattern(pattern: &Pattern, g: &GeoTransform, grid: &Grid3) -> Result<VideoVolume> {
    let qinv = g.inverse().to_homogeneous();
    VideoVolume::from_fn(*grid, |pp| {
        let p = qinv.apply(Vec3::new(pp[0], pp[1], pp[2]));
        pattern.eval([p.x, p.y, p.z])
    })
}

fn default_modes() -> usize {
    48
}

/// Analytic test patterns. Blob variances are in squared physical units,
/// frequencies in cycles per unit length, directions in radians from `x1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PatternSpec {
    /// `exp(−|x − c|²/2s0)`, optionally times `exp(−(t − t0)²/2τ0)`.
    GaussianBlob {
        center: [f64; 2],
        s0: f64,
        #[serde(default)]
        tau0: Option<f64>,
        #[serde(default)]
        t0: f64,
    },
    /// Blob whose centre sits at `center + velocity·t`.
    MovingBlob {
        center: [f64; 2],
        s0: f64,
        velocity: [f64; 2],
        #[serde(default)]
        tau0: Option<f64>,
        #[serde(default)]
        t0: f64,
    },
    /// `cos(2π ν e·(x − v t) + phase)` with optional Gaussian envelope of
    /// variance `envelope` around the origin.
    Grating {
        frequency: f64,
        direction: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        velocity: [f64; 2],
        #[serde(default)]
        envelope: Option<f64>,
    },
    /// Local frequency `ν + κ r` along `e`, `r = e·x`.
    ChirpedGrating {
        frequency: f64,
        chirp: f64,
        direction: f64,
        #[serde(default)]
        envelope: Option<f64>,
    },
    /// Random-phase superposition of plane waves whose wave vectors follow
    /// the spectrum of white noise smoothed at `(s0, τ0)`.
    FilteredNoise {
        seed: u64,
        s0: f64,
        tau0: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    k: [f64; 3],
    phase: f64,
}

/// A pattern ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    spec: PatternSpec,
    modes: Vec<Mode>,
    amplitude: f64,
}

/// Spatial frequencies above this many cycles per unit are rejected
/// outright for noise modes.
const NOISE_BAND_LIMIT: f64 = 1.0 / 6.0;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPattern(format!("{name} must be positive, got {v}")))
    }
}

impl Pattern {
    pub fn new(spec: &PatternSpec) -> Result<Self> {
        let mut modes = Vec::new();
        let mut amplitude = 1.0;
        match *spec {
            PatternSpec::GaussianBlob { s0, tau0, .. } | PatternSpec::MovingBlob { s0, tau0, .. } => {
                positive("s0", s0)?;
                if let Some(t) = tau0 {
                    positive("tau0", t)?;
                }
            }
            PatternSpec::Grating {
                frequency, envelope, ..
            } => {
                if !(frequency.is_finite() && frequency != 0.0) {
                    return Err(Error::InvalidPattern(format!(
                        "grating frequency must be non-zero, got {frequency}"
                    )));
                }
                if let Some(e) = envelope {
                    positive("envelope", e)?;
                }
            }
            PatternSpec::ChirpedGrating {
                frequency,
                chirp,
                envelope,
                ..
            } => {
                if !(frequency.is_finite() && frequency != 0.0) {
                    return Err(Error::InvalidPattern(format!(
                        "chirp base frequency must be non-zero, got {frequency}"
                    )));
                }
                if !(chirp.is_finite() && chirp != 0.0) {
                    return Err(Error::InvalidPattern(format!(
                        "chirp rate must be non-zero, got {chirp}"
                    )));
                }
                if let Some(e) = envelope {
                    positive("envelope", e)?;
                }
            }
            PatternSpec::FilteredNoise {
                seed,
                s0,
                tau0,
                modes: m,
            } => {
                positive("s0", s0)?;
                positive("tau0", tau0)?;
                if m == 0 {
                    return Err(Error::InvalidPattern("filtered noise needs at least one mode".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = |rng: &mut ChaCha8Rng| {
                    // Box–Muller; keeps the dependency surface to `rand` core.
                    let u1: f64 = 1.0 - rng.random::<f64>();
                    let u2: f64 = rng.random();
                    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
                };
                let (sx, st) = ((2.0 * s0).sqrt().recip(), (2.0 * tau0).sqrt().recip());
                while modes.len() < m {
                    let k = [normal(&mut rng) * sx, normal(&mut rng) * sx, normal(&mut rng) * st];
                    let phase = rng.random::<f64>() * TAU;
                    if (k[0] * k[0] + k[1] * k[1]).sqrt() > TAU * NOISE_BAND_LIMIT {
                        continue;
                    }
                    modes.push(Mode { k, phase });
                }
                amplitude = (2.0 / m as f64).sqrt();
            }
        }
        Ok(Self {
            spec: spec.clone(),
            modes,
            amplitude,
        })
    }

    pub fn spec(&self) -> &PatternSpec {
        &self.spec
    }

    /// Closed-form value at a physical point `(x1, x2, t)`.
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let envelope = |e: Option<f64>| e.map_or(1.0, |s| (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s)).exp());
        match self.spec {
            PatternSpec::GaussianBlob { center, s0, tau0, t0 } => {
                blob(p, center, [0.0, 0.0], s0) * temporal_envelope(p[2], t0, tau0)
            }
            PatternSpec::MovingBlob {
                center,
                s0,
                velocity,
                tau0,
                t0,
            } => blob(p, center, velocity, s0) * temporal_envelope(p[2], t0, tau0),
            PatternSpec::Grating {
                frequency,
                direction,
                phase,
                velocity,
                envelope: e,
            } => {
                let r = direction.cos() * (p[0] - velocity[0] * p[2]) + direction.sin() * (p[1] - velocity[1] * p[2]);
                (TAU * frequency * r + phase).cos() * envelope(e)
            }
            PatternSpec::ChirpedGrating {
                frequency,
                chirp,
                direction,
                envelope: e,
            } => {
                let r = direction.cos() * p[0] + direction.sin() * p[1];
                (TAU * (frequency * r + 0.5 * chirp * r * r)).cos() * envelope(e)
            }
            PatternSpec::FilteredNoise { .. } => {
                self.amplitude
                    * self
                        .modes
                        .iter()
                        .map(|m| (m.k[0] * p[0] + m.k[1] * p[1] + m.k[2] * p[2] + m.phase).cos())
                        .sum::<f64>()
            }
        }
    }

    /// Checks that the pattern is resolvable and placed on `grid`.
    pub fn check_grid(&self, grid: &Grid3) -> Result<()> {
        grid.validate()?;
        let lo = grid.origin;
        let hi: [f64; 3] = std::array::from_fn(|a| grid.origin[a] + (grid.shape[a] - 1) as f64 * grid.spacing[a]);
        let nyquist = 0.5 / grid.spacing[0].max(grid.spacing[1]);
        let inside = |c: [f64; 2]| (0..2).all(|a| c[a] >= lo[a] && c[a] <= hi[a]);
        match self.spec {
            PatternSpec::GaussianBlob { center, .. } | PatternSpec::MovingBlob { center, .. } => {
                if !inside(center) {
                    return Err(Error::InvalidPattern(format!(
                        "blob centre {center:?} lies outside the grid extent {:?}..{:?}",
                        [lo[0], lo[1]],
                        [hi[0], hi[1]]
                    )));
                }
            }
            PatternSpec::Grating { frequency, .. } => {
                if frequency.abs() >= nyquist {
                    return Err(Error::InvalidPattern(format!(
                        "grating frequency {frequency} is not below the Nyquist limit {nyquist}"
                    )));
                }
            }
            PatternSpec::ChirpedGrating {
                frequency,
                chirp,
                direction,
                ..
            } => {
                let e = [direction.cos(), direction.sin()];
                let mut max_freq: f64 = 0.0;
                for c0 in [lo[0], hi[0]] {
                    for c1 in [lo[1], hi[1]] {
                        let r = e[0] * c0 + e[1] * c1;
                        max_freq = max_freq.max((frequency + chirp * r).abs());
                    }
                }
                if max_freq >= nyquist {
                    return Err(Error::InvalidPattern(format!(
                        "chirp reaches {max_freq} cycles per unit on the grid, Nyquist limit is {nyquist}"
                    )));
                }
            }
            PatternSpec::FilteredNoise { .. } => {
                if NOISE_BAND_LIMIT >= nyquist {
                    return Err(Error::InvalidPattern(format!(
                        "grid spacing too coarse for the noise band limit {NOISE_BAND_LIMIT}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn blob(p: [f64; 3], center: [f64; 2], v: [f64; 2], s0: f64) -> f64 {
    let d0 = p[0] - center[0] - v[0] * p[2];
    let d1 = p[1] - center[1] - v[1] * p[2];
    (-(d0 * d0 + d1 * d1) / (2.0 * s0)).exp()
}

fn temporal_envelope(t: f64, t0: f64, tau0: Option<f64>) -> f64 {
    tau0.map_or(1.0, |tau| (-(t - t0) * (t - t0) / (2.0 * tau)).exp())
}

/// Samples a pattern on a grid.
pub fn synthesize_test_pattern(spec: &PatternSpec, grid: &Grid3) -> Result<VideoVolume> {
    let pattern = Pattern::new(spec)?;
    pattern.check_grid(grid)?;
    VideoVolume::from_fn(*grid, |p| pattern.eval(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rotation, Mat2, Vec2};
    use approx::assert_relative_eq;

    fn grid(shape: [usize; 3]) -> Grid3 {
        Grid3::centered(shape).unwrap()
    }

    fn moments(f: &VideoVolume, t: usize) -> (f64, [f64; 2], f64) {
        let [n0, n1, _] = f.shape();
        let (mut m0, mut c) = (0.0, [0.0; 2]);
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let x = f.grid().position([i0, i1, t]);
                let v = f.get([i0, i1, t]);
                m0 += v;
                c[0] += v * x[0];
                c[1] += v * x[1];
            }
        }
        c = [c[0] / m0, c[1] / m0];
        let mut var = 0.0;
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let x = f.grid().position([i0, i1, t]);
                var += f.get([i0, i1, t]) * (x[0] - c[0]).powi(2);
            }
        }
        (m0, c, var / m0)
    }

    #[test]
    fn prefilter_interpolates_samples() {
        let data: Vec<f64> = (0..11).map(|k| ((k as f64) * 0.7).sin() + 0.1 * k as f64).collect();
        let mut c = data.clone();
        prefilter_line(&mut c);
        for k in 0..11 {
            let v = (c[mirror(k as isize - 1, 11)] + 4.0 * c[k] + c[mirror(k as isize + 1, 11)]) / 6.0;
            assert!((v - data[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_warp_is_exact() {
        let g = grid([17, 15, 9]);
        let spec = PatternSpec::FilteredNoise {
            seed: 1,
            s0: 4.0,
            tau0: 4.0,
            modes: 16,
        };
        let f = synthesize_test_pattern(&spec, &g).unwrap();
        for interpolation in [Interpolation::Trilinear, Interpolation::TricubicSpline] {
            let w = warp_video(
                &f,
                &GeoTransform::identity(),
                &WarpConfig::new(g).with_interpolation(interpolation),
            )
            .unwrap();
            assert_eq!(w.volume.data(), f.data());
            assert!(w.mask.iter().all(|&m| m));
        }
    }

    #[test]
    fn spatial_scaling_scales_variance() {
        let s0 = 3.0;
        let g = grid([41, 41, 3]);
        let f = synthesize_test_pattern(
            &PatternSpec::GaussianBlob {
                center: [0.0, 0.0],
                s0,
                tau0: None,
                t0: 0.0,
            },
            &g,
        )
        .unwrap();
        let w = warp_video(&f, &GeoTransform::spatial_scaling(2.0).unwrap(), &WarpConfig::new(g)).unwrap();
        let (_, _, var) = moments(&w.volume, 1);
        assert_relative_eq!(var, 4.0 * s0, max_relative = 1e-2);
    }

    #[test]
    fn galilean_centroid_tracks() {
        let u = Vec2::new(1.0, -0.5);
        let x0 = [2.0, 1.0];
        let g = grid([41, 41, 11]);
        let f = synthesize_test_pattern(
            &PatternSpec::GaussianBlob {
                center: x0,
                s0: 4.0,
                tau0: None,
                t0: 0.0,
            },
            &g,
        )
        .unwrap();
        let gt = GeoTransform::galilean(u).unwrap();
        let w = warp_video(&f, &gt, &WarpConfig::new(g)).unwrap();
        for t in 0..11 {
            let tp = g.position([0, 0, t])[2];
            let (_, c, _) = moments(&w.volume, t);
            let want = gt.apply_point(Vec2::new(x0[0], x0[1]), tp).0;
            assert!((c[0] - want.x).abs() < 0.5 && (c[1] - want.y).abs() < 0.5);
            assert!((c[0] - (x0[0] + u.x * tp)).abs() < 0.5);
        }
    }

    #[test]
    fn out_of_domain_policies() {
        let g = grid([11, 11, 5]);
        let f = VideoVolume::from_fn(g, |p| p[0]).unwrap();
        let shift = GeoTransform::galilean(Vec2::new(3.0, 0.0)).unwrap();
        let w = warp_video(&f, &shift, &WarpConfig::new(g)).unwrap();
        assert!(w.valid_fraction() < 1.0 && w.valid_fraction() > 0.0);
        let m = w.mask_volume();
        for (k, &mk) in w.mask.iter().enumerate() {
            assert_eq!(m.data()[k], if mk { 1.0 } else { 0.0 });
            if !mk {
                assert_eq!(w.volume.data()[k], 0.0);
            }
        }
        let err = warp_video(&f, &shift, &WarpConfig::new(g).with_out_of_domain(OutOfDomain::Error)).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain(_)));
    }

    #[test]
    fn linear_fields_are_reproduced() {
        // The spline reproduces ramps away from the mirrored boundary only.
        let g = grid([27, 27, 27]);
        let f = VideoVolume::from_fn(g, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2]).unwrap();
        let gt = GeoTransform::new(1.1, rotation(0.3), Vec2::new(0.2, 0.1), 0.9).unwrap();
        let inv = gt.inverse();
        for (interpolation, margin, tol) in [
            (Interpolation::Trilinear, 0.0, 1e-9),
            (Interpolation::TricubicSpline, 8.0, 1e-3),
        ] {
            let w = warp_video(&f, &gt, &WarpConfig::new(g).with_interpolation(interpolation)).unwrap();
            let mut checked = 0;
            for idx in 0..g.len() {
                let pp = g.position(g.unravel(idx));
                let p = inv.apply(Vec3::new(pp[0], pp[1], pp[2]));
                let q = g.to_index([p.x, p.y, p.z]);
                if !w.mask[idx] || q.iter().any(|&c| c < margin || c > 26.0 - margin) {
                    continue;
                }
                let want = 1.0 + 2.0 * p.x - p.y + 0.5 * p.z;
                assert!((w.volume.data()[idx] - want).abs() < tol, "{interpolation:?}");
                checked += 1;
            }
            assert!(checked > 100);
        }
    }

    #[test]
    fn pattern_examples() {
        let g = grid([21, 21, 11]);
        let f = synthesize_test_pattern(
            &PatternSpec::GaussianBlob {
                center: [0.0, 0.0],
                s0: 2.0,
                tau0: None,
                t0: 0.0,
            },
            &g,
        )
        .unwrap();
        assert_eq!(f.get([10, 10, 5]), 1.0);

        let v0 = [0.7, -0.4];
        let f = synthesize_test_pattern(
            &PatternSpec::MovingBlob {
                center: [0.0, 0.0],
                s0: 2.0,
                velocity: v0,
                tau0: None,
                t0: 0.0,
            },
            &g,
        )
        .unwrap();
        for t in 0..11 {
            let tp = g.position([0, 0, t])[2];
            let (_, c, _) = moments(&f, t);
            assert!((c[0] - v0[0] * tp).abs() < 0.5 && (c[1] - v0[1] * tp).abs() < 0.5);
        }

        let spec = PatternSpec::FilteredNoise {
            seed: 99,
            s0: 3.0,
            tau0: 2.0,
            modes: 48,
        };
        let a = synthesize_test_pattern(&spec, &g).unwrap();
        let b = synthesize_test_pattern(&spec, &g).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = synthesize_test_pattern(
            &PatternSpec::FilteredNoise {
                seed: 100,
                s0: 3.0,
                tau0: 2.0,
                modes: 48,
            },
            &g,
        )
        .unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn degenerate_patterns_rejected() {
        let g = grid([21, 21, 5]);
        let bad = [
            PatternSpec::GaussianBlob {
                center: [0.0, 0.0],
                s0: 0.0,
                tau0: None,
                t0: 0.0,
            },
            PatternSpec::Grating {
                frequency: 0.0,
                direction: 0.0,
                phase: 0.0,
                velocity: [0.0, 0.0],
                envelope: None,
            },
            PatternSpec::Grating {
                frequency: 0.6,
                direction: 0.0,
                phase: 0.0,
                velocity: [0.0, 0.0],
                envelope: None,
            },
            PatternSpec::ChirpedGrating {
                frequency: 0.1,
                chirp: 0.05,
                direction: 0.0,
                envelope: None,
            },
            PatternSpec::GaussianBlob {
                center: [50.0, 0.0],
                s0: 1.0,
                tau0: None,
                t0: 0.0,
            },
        ];
        for spec in bad {
            assert!(
                matches!(synthesize_test_pattern(&spec, &g), Err(Error::InvalidPattern(_))),
                "{spec:?}"
            );
        }
    }

    fn smooth_pattern() -> PatternSpec {
        PatternSpec::FilteredNoise {
            seed: 5,
            s0: 16.0,
            tau0: 16.0,
            modes: 24,
        }
    }

    #[test]
    fn round_trip_and_composition() {
        let g = grid([41, 41, 21]);
        let f = synthesize_test_pattern(&smooth_pattern(), &g).unwrap();
        let g1 = GeoTransform::new(
            1.1,
            rotation(0.4) * Mat2::new(1.1, 0.0, 0.0, 0.9),
            Vec2::new(0.3, 0.2),
            1.2,
        )
        .unwrap();
        let g2 = GeoTransform::new(0.9, rotation(-0.2), Vec2::new(-0.2, 0.1), 0.9).unwrap();
        let cfg = WarpConfig::new(g);
        let interior = IndexBox {
            lo: [12, 12, 6],
            hi: [29, 29, 15],
        };
        let scale = f.max_abs_in(&interior);

        let back = warp_video(&warp_video(&f, &g1, &cfg).unwrap().volume, &g1.inverse(), &cfg).unwrap();
        let rt = interior
            .iter()
            .map(|i| (back.volume.get(i) - f.get(i)).abs())
            .fold(0.0, f64::max);
        assert!(rt < 1e-3 * scale, "round trip {rt}");

        let once = warp_video(&f, &crate::geom::compose(&g2, &g1).unwrap(), &cfg).unwrap();
        let twice = warp_video(&warp_video(&f, &g1, &cfg).unwrap().volume, &g2, &cfg).unwrap();
        let e = interior
            .iter()
            .map(|i| (once.volume.get(i) - twice.volume.get(i)).abs())
            .fold(0.0, f64::max);
        assert!(e < 2e-3 * scale, "composition {e}");
    }

    #[test]
    fn analytic_bypass_bounds_interpolation_error() {
        let g = grid([41, 41, 21]);
        let pattern = Pattern::new(&smooth_pattern()).unwrap();
        let f = synthesize_test_pattern(&smooth_pattern(), &g).unwrap();
        let gt = GeoTransform::new(1.2, rotation(0.5), Vec2::new(0.4, -0.3), 0.8).unwrap();
        let exact = warp_pattern(&pattern, &gt, &g).unwrap();
        let interior = IndexBox {
            lo: [10, 10, 5],
            hi: [31, 31, 16],
        };
        let scale = exact.max_abs_in(&interior);
        let mut errs = Vec::new();
        for interpolation in [Interpolation::Trilinear, Interpolation::TricubicSpline] {
            let w = warp_video(&f, &gt, &WarpConfig::new(g).with_interpolation(interpolation)).unwrap();
            let e = interior
                .iter()
                .filter(|i| w.mask[g.index(*i)])
                .map(|i| (w.volume.get(i) - exact.get(i)).abs())
                .fold(0.0, f64::max);
            errs.push(e / scale);
        }
        assert!(errs[1] < 1e-3, "spline {errs:?}");
        assert!(errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn warp_config_json() {
        let cfg = WarpConfig::new(grid([4, 5, 6]));
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<WarpConfig>(&s).unwrap(), cfg);
        let v: WarpConfig =
            serde_json::from_str(r#"{"output_grid":{"shape":[2,2,2],"origin":[0,0,0],"spacing":[1,1,1]}}"#).unwrap();
        assert_eq!(v.interpolation, Interpolation::TricubicSpline);
        assert_eq!(v.out_of_domain, OutOfDomain::Zero);
    }
}
