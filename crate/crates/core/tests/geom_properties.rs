use proptest::prelude::*;
use stcov::geom::{
    compose, rotation, transform_params, GeoTransform, HomogeneousTransform, Mat2, Mat3, RFParams, Vec2, Vec3,
};

fn transform() -> impl Strategy<Value = GeoTransform> {
    (
        (1.0f64 / 3.0)..3.0,
        (1.0f64 / 3.0)..3.0,
        (1.0f64 / 3.0)..3.0,
        -3.2f64..3.2,
        -3.2f64..3.2,
        (0.0f64..2.0, -3.2f64..3.2),
        (1.0f64 / 3.0)..3.0,
    )
        .prop_map(|(sx, a1, a2, th, ps, (speed, dir), st)| {
            let a = rotation(th) * Mat2::new(a1, 0.0, 0.0, a2) * rotation(ps);
            GeoTransform::new(sx, a, Vec2::new(speed * dir.cos(), speed * dir.sin()), st).unwrap()
        })
}

fn params() -> impl Strategy<Value = RFParams> {
    (
        0.5f64..8.0,
        0.3f64..3.0,
        0.3f64..3.0,
        -3.2f64..3.2,
        0.5f64..16.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_map(|(s, l1, l2, th, tau, v1, v2)| {
            let r = rotation(th);
            let sigma = r * Mat2::new(l1, 0.0, 0.0, l2) * r.transpose();
            RFParams::new(s, 0.5 * (sigma + sigma.transpose()), tau, Vec2::new(v1, v2)).unwrap()
        })
}

fn point() -> impl Strategy<Value = Vec3> {
    (-20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn composition_applies_inner_first(g1 in transform(), g2 in transform(), p in point()) {
        let c = compose(&g2, &g1).unwrap();
        let direct = g2.apply(g1.apply(p));
        prop_assert!((c.apply(p) - direct).amax() <= 1e-10 * direct.amax().max(1.0));
        prop_assert!(close(c.jacobian(), g1.jacobian() * g2.jacobian()));
        prop_assert!(close(c.sx(), g1.sx() * g2.sx()));
        prop_assert!(close(c.st(), g1.st() * g2.st()));
    }

    #[test]
    fn inverse_undoes_transform(g in transform(), p in point()) {
        let inv = g.inverse();
        let back = inv.apply(g.apply(p));
        prop_assert!((back - p).amax() <= 1e-10 * p.amax().max(1.0));
        prop_assert!(compose(&inv, &g).unwrap().is_identity(1e-10));
        prop_assert!(close(inv.jacobian() * g.jacobian(), 1.0));
    }

    #[test]
    fn parameter_law_is_a_group_action(g1 in transform(), g2 in transform(), p in params()) {
        let chained = transform_params(&transform_params(&p, &g1), &g2);
        let direct = transform_params(&p, &compose(&g2, &g1).unwrap());
        prop_assert!(close(chained.s, direct.s) && close(chained.tau, direct.tau));
        prop_assert!((chained.sigma - direct.sigma).amax() <= 1e-10 * direct.sigma.amax().max(1.0));
        prop_assert!((chained.v - direct.v).amax() <= 1e-10 * direct.v.amax().max(1.0));
    }

    #[test]
    fn transformed_covariance_stays_spd(g in transform(), p in params()) {
        let q = transform_params(&p, &g);
        prop_assert!(RFParams::new(q.s, q.sigma, q.tau, q.v).is_ok());
        let det = q.sigma.determinant();
        let expected = p.sigma.determinant() * g.a().determinant().powi(2);
        prop_assert!(close(det, expected));
    }

    #[test]
    fn closed_form_gradient_matrix_inverts(g in transform()) {
        let (qt, qinvt) = HomogeneousTransform::gradient_transform_matrices(&g);
        prop_assert!((qt * qinvt - Mat3::identity()).amax() <= 1e-10);
    }

    #[test]
    fn serde_round_trip_is_exact(g in transform(), p in params()) {
        let gs = serde_json::to_string(&g).unwrap();
        let back: GeoTransform = serde_json::from_str(&gs).unwrap();
        prop_assert_eq!(back, g);
        let ps = serde_json::to_string(&p).unwrap();
        let back: RFParams = serde_json::from_str(&ps).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn special_case_parameter_laws() {
    let p = RFParams::new(2.0, Mat2::new(1.5, 0.3, 0.3, 0.7), 3.0, Vec2::new(0.4, -0.2)).unwrap();
    let q = transform_params(&p, &GeoTransform::spatial_scaling(2.0).unwrap());
    assert_eq!(q.s, 8.0);
    assert!((q.v - p.v * 2.0).amax() < 1e-15);
    let q = transform_params(&p, &GeoTransform::temporal_scaling(2.0).unwrap());
    assert_eq!(q.tau, 12.0);
    assert!((q.v - p.v / 2.0).amax() < 1e-15);
    let u = Vec2::new(1.0, 0.5);
    let q = transform_params(&p, &GeoTransform::galilean(u).unwrap());
    assert!((q.v - (p.v + u)).amax() < 1e-15);
    let a = rotation(0.4) * Mat2::new(2.0, 0.0, 0.0, 1.0);
    let q = transform_params(&p, &GeoTransform::affine(a).unwrap());
    assert!((q.sigma - a * p.sigma * a.transpose()).amax() < 1e-14);
}

#[test]
fn singular_affine_is_rejected() {
    assert!(GeoTransform::affine(Mat2::new(1.0, 2.0, 2.0, 4.0)).is_err());
    assert!(GeoTransform::spatial_scaling(0.0).is_err());
    assert!(GeoTransform::temporal_scaling(-1.0).is_err());
}
