//! Browser front end for the kernel family: spatial slices of a kernel,
//! temporal profiles, and a check of the transformation law for a
//! transform chosen on the page.
//!
//! Every export takes and returns JSON text, except [`kernel_slice`] which
//! returns the image as a `Float32Array`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use stcov::geom::{transform_params, GeoTransform, RFParams, Vec2};
use stcov::kernels::{SpatioTemporalKernel, TemporalKernel, TemporalKernelSpec};
use stcov::verify::{check_temporal_quantization, kernel_identity_error, KERNEL_FLOOR};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceRequest {
    pub params: RFParams,
    pub kernel: TemporalKernelSpec,
    pub t: f64,
    /// Pixels per side.
    pub size: usize,
    /// Half-width of the square shown, in spatial units.
    pub extent: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRequest {
    pub tau: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Serialize)]
pub struct Profiles {
    pub t: Vec<f64>,
    pub gaussian: Vec<f64>,
    pub limit: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub params: RFParams,
    pub kernel: TemporalKernelSpec,
    pub transform: GeoTransform,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub params_transformed: RFParams,
    pub jacobian: f64,
    /// `None` when the temporal scaling is not a power of `c`.
    pub max_rel_error: Option<f64>,
    pub note: Option<String>,
}

const MAX_SLICE_SIZE: usize = 512;
const MAX_PROFILE_SAMPLES: usize = 4096;

/// Row-major `size × size` image of `T(x, t)` at fixed `t`, rows running
/// along `x₂` from `+extent` down to `−extent`.
pub fn slice(req: &SliceRequest) -> Result<Vec<f32>, String> {
    if req.size == 0 || req.size > MAX_SLICE_SIZE {
        return Err(format!("size must be in 1..={MAX_SLICE_SIZE}"));
    }
    if !(req.extent.is_finite() && req.extent > 0.0) || !req.t.is_finite() {
        return Err("extent must be positive and t finite".into());
    }
    let k = SpatioTemporalKernel::new(&req.params, &req.kernel).map_err(|e| e.to_string())?;
    let n = req.size;
    let step = 2.0 * req.extent / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let x2 = req.extent - (row as f64 + 0.5) * step;
        for col in 0..n {
            let x1 = -req.extent + (col as f64 + 0.5) * step;
            out.push(k.eval(Vec2::new(x1, x2), req.t) as f32);
        }
    }
    Ok(out)
}

pub fn profiles(req: &ProfileRequest) -> Result<Profiles, String> {
    if req.samples < 2 || req.samples > MAX_PROFILE_SAMPLES {
        return Err(format!("samples must be in 2..={MAX_PROFILE_SAMPLES}"));
    }
    if !(req.t_max.is_finite() && req.t_max > 0.0) {
        return Err("t_max must be positive".into());
    }
    let gauss = TemporalKernel::new(req.tau, &TemporalKernelSpec::NonCausalGaussian).map_err(|e| e.to_string())?;
    let spec = TemporalKernelSpec::limit(req.c, req.k).map_err(|e| e.to_string())?;
    let limit = TemporalKernel::new(req.tau, &spec).map_err(|e| e.to_string())?;
    let t: Vec<f64> = (0..req.samples)
        .map(|i| -0.25 * req.t_max + 1.25 * req.t_max * i as f64 / (req.samples - 1) as f64)
        .collect();
    Ok(Profiles {
        gaussian: t.iter().map(|&t| gauss.eval(t)).collect(),
        limit: t.iter().map(|&t| limit.eval(t)).collect(),
        t,
    })
}

pub fn check(req: &CheckRequest) -> Result<CheckReport, String> {
    let params_transformed = transform_params(&req.params, &req.transform);
    let jacobian = req.transform.jacobian();
    if let Err(e) = check_temporal_quantization(&req.transform, &req.kernel) {
        return Ok(CheckReport {
            params_transformed,
            jacobian,
            max_rel_error: None,
            note: Some(e.to_string()),
        });
    }
    let err = kernel_identity_error(&req.transform, &req.params, &req.kernel, 0.5, KERNEL_FLOOR)
        .map_err(|e| e.to_string())?;
    Ok(CheckReport {
        params_transformed,
        jacobian,
        max_rel_error: Some(err),
        note: None,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T, JsError> {
    serde_json::from_str(json).map_err(|e| JsError::new(&e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn kernel_slice(request: &str) -> Result<Vec<f32>, JsError> {
    slice(&parse(request)?).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn temporal_profiles(request: &str) -> Result<String, JsError> {
    to_json(&profiles(&parse(request)?).map_err(|e| JsError::new(&e))?)
}

#[wasm_bindgen]
pub fn covariance_check(request: &str) -> Result<String, JsError> {
    to_json(&check(&parse(request)?).map_err(|e| JsError::new(&e))?)
}
