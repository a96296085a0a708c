//! Randomized consistency checks of the transform algebra: composition,
//! inversion and the parameter law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::sweep::{RandomTransforms, MAX_GALILEAN_SPEED, SCALE_BOUNDS};
use crate::error::Result;
use crate::geom::{
    compose, rotation, transform_params, GeoTransform, HomogeneousTransform, Mat2, Mat3, RFParams, Vec2, Vec3,
};

pub const ALGEBRA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub passed: bool,
}

fn bounds(count: usize, seed: u64) -> RandomTransforms {
    RandomTransforms {
        count,
        seed: Some(seed),
        sx: SCALE_BOUNDS,
        singular_values: SCALE_BOUNDS,
        u_max: MAX_GALILEAN_SPEED,
        st: SCALE_BOUNDS,
        st_exponents: vec![0],
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> RFParams {
    let l1 = rng.random_range(0.3..3.0);
    let l2 = rng.random_range(0.3..3.0);
    let r = rotation(rng.random_range(-PI..PI));
    let sigma = r * Mat2::new(l1, 0.0, 0.0, l2) * r.transpose();
    let sigma = 0.5 * (sigma + sigma.transpose());
    let v = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    RFParams::new(rng.random_range(0.5..8.0), sigma, rng.random_range(0.5..16.0), v)
        .expect("drawn parameters are valid")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn mat_rel(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn params_rel(a: &RFParams, b: &RFParams) -> f64 {
    let sig = (a.sigma - b.sigma).amax() / b.sigma.amax().max(1.0);
    let v = (a.v - b.v).amax() / b.v.amax().max(1.0);
    rel(a.s, b.s).max(sig).max(rel(a.tau, b.tau)).max(v)
}

fn transform_rel(a: &GeoTransform, b: &GeoTransform) -> f64 {
    mat_rel(&a.to_homogeneous().q, &b.to_homogeneous().q).max(rel(a.sx(), b.sx()))
}

/// Runs every property on `cases` random draws.
pub fn algebraic_suite(cases: usize, seed: u64) -> Result<Vec<PropertyResult>> {
    let g1 = bounds(cases, seed).generate(seed, None)?;
    let g2 = bounds(cases, seed.wrapping_add(1)).generate(seed, None)?;
    let g3 = bounds(cases, seed.wrapping_add(2)).generate(seed, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let params: Vec<RFParams> = (0..cases).map(|_| random_params(&mut rng)).collect();
    let points: Vec<Vec3> = (0..cases)
        .map(|_| {
            Vec3::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            )
        })
        .collect();

    let mut out = Vec::new();
    let mut record = |name: &str, errors: Vec<f64>| {
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        out.push(PropertyResult {
            name: name.into(),
            cases: errors.len(),
            max_error,
            passed: max_error < ALGEBRA_TOLERANCE && errors.iter().all(|e| e.is_finite()),
        });
    };

    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        let c = compose(&g2[i], &g1[i])?;
        let direct = g2[i].apply(g1[i].apply(points[i]));
        let e_point = (c.apply(points[i]) - direct).amax() / direct.amax().max(1.0);
        let e_mat = mat_rel(
            &c.to_homogeneous().q,
            &(g2[i].to_homogeneous().q * g1[i].to_homogeneous().q),
        );
        errors.push(
            e_point
                .max(e_mat)
                .max(rel(c.jacobian(), g1[i].jacobian() * g2[i].jacobian())),
        );
    }
    record("composition", errors);

    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        let left = compose(&g3[i], &compose(&g2[i], &g1[i])?)?;
        let right = compose(&compose(&g3[i], &g2[i])?, &g1[i])?;
        errors.push(transform_rel(&left, &right));
    }
    record("associativity", errors);

    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        let inv = g1[i].inverse();
        let e_id = transform_rel(&compose(&inv, &g1[i])?, &GeoTransform::identity())
            .max(transform_rel(&compose(&g1[i], &inv)?, &GeoTransform::identity()));
        let back = inv.apply(g1[i].apply(points[i]));
        let e_pt = (back - points[i]).amax() / points[i].amax().max(1.0);
        errors.push(e_id.max(e_pt).max(transform_rel(&inv.inverse(), &g1[i])));
    }
    record("inverse", errors);

    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        let p = &params[i];
        let chained = transform_params(&transform_params(p, &g1[i]), &g2[i]);
        let direct = transform_params(p, &compose(&g2[i], &g1[i])?);
        let round = transform_params(&transform_params(p, &g1[i]), &g1[i].inverse());
        errors.push(params_rel(&chained, &direct).max(params_rel(&round, p)));
    }
    record("parameter_law", errors);

    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        // A point moving with the receptive-field velocity maps to one moving
        // with the transformed velocity.
        let p = &params[i];
        let pp = transform_params(p, &g1[i]);
        let x0 = Vec2::new(points[i].x, points[i].y);
        let t = points[i].z;
        let (a, ta) = g1[i].apply_point(x0, 0.0);
        let (b, tb) = g1[i].apply_point(x0 + p.v * t, t);
        let expected = a + pp.v * (tb - ta);
        errors.push((b - expected).amax() / expected.amax().max(1.0));
    }
    record("velocity_law", errors);

    let mut errors = Vec::with_capacity(cases);
    for g in &g1 {
        let (qt, qinvt) = HomogeneousTransform::gradient_transform_matrices(g);
        errors.push(mat_rel(&(qt * qinvt), &Mat3::identity()));
    }
    record("gradient_transport", errors);

    Ok(out)
}
