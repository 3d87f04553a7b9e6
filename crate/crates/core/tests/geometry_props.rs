mod common;

use std::sync::Arc;

use common::*;
use curvquot::geometry::{
    beta_limit, check_f_convexity_condition, convexity_report, duality_product, embed, estimate_diagnostics,
    export_surface, minkowski_identity_check, verify_curvature_equation, write_obj, write_profile,
};
use curvquot::pde::ProblemSpec;
use curvquot::sphere::{ScalarField, SphereGrid};
use curvquot::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn full(nt: usize) -> Arc<SphereGrid> {
    SphereGrid::full2d(nt, 2 * nt).unwrap()
}

fn axi(n: usize, m: usize) -> Arc<SphereGrid> {
    SphereGrid::axisymmetric(n, m).unwrap()
}

fn ellipsoid_error(nt: usize, axes: &[f64]) -> (f64, f64) {
    let grid = full(nt);
    let u = ScalarField::from_point_fn(&grid, ellipsoid_support(axes));
    let s = embed(&u).unwrap();
    let mut implicit = 0.0_f64;
    let mut position = 0.0_f64;
    for (node, pt) in s.points.iter().enumerate() {
        let x = grid.point(node);
        let h = ellipsoid_support(axes)(&x);
        implicit = implicit.max(ellipsoid_implicit(axes, &pt.position).abs());
        for c in 0..3 {
            position = position.max((pt.position[c] - axes[c] * axes[c] * x[c] / h).abs());
        }
    }
    (implicit, position)
}

#[test]
fn ellipsoid_embedding_is_second_order() {
    let axes = [1.3, 1.0, 0.8];
    let (i1, p1) = ellipsoid_error(32, &axes);
    let (i2, p2) = ellipsoid_error(64, &axes);
    // Tangential position errors cancel to first order in the implicit residual.
    assert!((i1 / i2).log2() >= 1.7, "{i1:.3e} -> {i2:.3e}");
    let order = (p1 / p2).log2();
    assert!((1.7..2.3).contains(&order), "{p1:.3e} -> {p2:.3e}");
    let h = full(64).spacing();
    assert!(p2 < h * h, "{p2:e}");
}

#[test]
fn sphere_embedding_and_obj_export() {
    for r in [1.0, 2.5] {
        let grid = full(4);
        let u = ScalarField::constant(&grid, r);
        let s = embed(&u).unwrap();
        let mut buf = Vec::new();
        write_obj(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let verts: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| l.starts_with("v "))
            .map(|l| l[2..].split_whitespace().map(|t| t.parse().unwrap()).collect())
            .collect();
        let faces: Vec<Vec<usize>> = text
            .lines()
            .filter(|l| l.starts_with("f "))
            .map(|l| l[2..].split_whitespace().map(|t| t.parse().unwrap()).collect())
            .collect();
        assert_eq!(verts.len(), 34);
        assert_eq!(faces.len(), 40);
        for v in &verts {
            let d = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((d - r).abs() < 1e-12 * r, "{v:?}");
        }
        // Outward orientation: the face normal points away from the origin.
        for f in &faces {
            let p: Vec<&Vec<f64>> = f.iter().map(|&i| &verts[i - 1]).collect();
            let e1: Vec<f64> = (0..3).map(|c| p[1][c] - p[0][c]).collect();
            let e2: Vec<f64> = (0..3).map(|c| p[2][c] - p[0][c]).collect();
            let n = [
                e1[1] * e2[2] - e1[2] * e2[1],
                e1[2] * e2[0] - e1[0] * e2[2],
                e1[0] * e2[1] - e1[1] * e2[0],
            ];
            let centroid: Vec<f64> = (0..3).map(|c| p.iter().map(|q| q[c]).sum::<f64>()).collect();
            assert!(n.iter().zip(&centroid).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        }
        for pt in &s.points {
            assert!(pt.curvatures.iter().all(|k| (k - 1.0 / r).abs() < 1e-12));
            assert!((pt.support - r).abs() < 1e-12);
        }
    }
}

#[test]
fn translation_moves_surface_rigidly() {
    let grid = full(24);
    let shift = [0.2, -0.1, 0.3];
    let u = ScalarField::from_point_fn(&grid, |x| 1.0 + 0.2 * x[0] * x[0] + 0.1 * x[1] * x[2]);
    let v = ScalarField::from_point_fn(&grid, |x| {
        1.0 + 0.2 * x[0] * x[0] + 0.1 * x[1] * x[2] + x.iter().zip(&shift).map(|(a, b)| a * b).sum::<f64>()
    });
    let (su, sv) = (embed(&u).unwrap(), embed(&v).unwrap());
    for (a, b) in su.points.iter().zip(&sv.points) {
        for c in 0..3 {
            assert!((b.position[c] - a.position[c] - shift[c]).abs() < 1e-12);
        }
        for (ka, kb) in a.curvatures.iter().zip(&b.curvatures) {
            assert!((ka - kb).abs() < 1e-10);
        }
    }
    let (pu, pv) = (su.poles.unwrap(), sv.poles.unwrap());
    for c in 0..3 {
        assert!((pv.0[c] - pu.0[c] - shift[c]).abs() < 1e-12);
        assert!((pv.1[c] - pu.1[c] - shift[c]).abs() < 1e-12);
    }
}

#[test]
fn support_is_consistent_with_position() {
    let grid = axi(3, 128);
    let u = zonal(&grid, |t| 1.0 + 0.3 * t.cos().powi(2));
    let s = embed(&u).unwrap();
    for (pt, uv) in s.points.iter().zip(u.values()) {
        assert!((pt.support - uv).abs() < 1e-13);
    }
    let mut buf = Vec::new();
    write_profile(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("theta,X_r,X_z\n"));
    assert_eq!(text.lines().count(), 129);
}

#[test]
fn sphere_satisfies_curvature_equation() {
    for (n, k, l, p, grid) in [(2, 2, 1, 4.0, full(16)), (4, 3, 1, 3.5, axi(4, 32))] {
        let spec = ProblemSpec::new(n, k, l, p).unwrap();
        let r: f64 = 1.7;
        let u = ScalarField::constant(&grid, r);
        let f = ScalarField::constant(&grid, r.powf(p - 1.0 - (k - l) as f64));
        let s = embed(&u).unwrap();
        assert!(verify_curvature_equation(&spec, &s, &f).unwrap() < 1e-13);
    }
}

#[test]
fn nonconvex_support_is_rejected() {
    let grid = axi(2, 64);
    let u = zonal(&grid, |t| 0.2 + 2.0 * t.cos().powi(2));
    assert!(matches!(embed(&u), Err(Error::NotConvex { .. })));
    let r = convexity_report(&u);
    assert!(!r.strictly_convex && r.min_eigenvalue < 0.0);
}

#[test]
fn data_condition_matches_analytic_margin() {
    // g = 1 + 0.2 x1² gives ∇²g + gσ with smallest eigenvalue 1 − 0.2 x1², minimum 0.8.
    let (p, k, l) = (3.0, 2, 1);
    let power = p + (k - l) as f64 - 1.0;
    for grid in [axi(3, 256), full(64)] {
        let f = ScalarField::from_point_fn(&grid, |x| (1.0 + 0.2 * x[0] * x[0]).powf(power));
        let c = check_f_convexity_condition(&f, p, k, l).unwrap();
        assert!(c.holds);
        assert!((c.exponent - power).abs() < 1e-15);
        assert!((c.margin - 0.8).abs() < 1e-3, "{}", c.margin);
    }
}

#[test]
fn data_condition_negative_control() {
    let grid = axi(2, 256);
    let f = ScalarField::from_point_fn(&grid, |x| (10.0 * x[0] * x[0] - 5.0).exp());
    let c = check_f_convexity_condition(&f, 1.2, 2, 1).unwrap();
    assert!(!c.holds && c.margin < -1.0, "{c:?}");
}

#[test]
fn minkowski_identities_at_default_resolution() {
    let grid = axi(2, 256);
    let u = zonal(&grid, |t| 1.0 + 0.3 * t.cos().powi(2));
    for m in 0..2 {
        let c = minkowski_identity_check(&u, m).unwrap();
        assert!(c.gap <= 1e-4, "m={m}: {c:?}");
    }
    assert!(minkowski_identity_check(&u, 2).is_err());
    let grid = axi(4, 256);
    let u = zonal(&grid, |t| (0.2 * t.cos()).exp());
    for m in 0..4 {
        assert!(minkowski_identity_check(&u, m).unwrap().gap <= 1e-4);
    }
}

#[test]
fn estimates_are_stable_under_refinement() {
    let spec = ProblemSpec::new(3, 2, 0, 2.0).unwrap();
    let profile = |t: f64| 1.0 + 0.3 * t.cos().powi(2);
    let a = estimate_diagnostics(&zonal(&axi(3, 128), profile), &spec, None).unwrap();
    let b = estimate_diagnostics(&zonal(&axi(3, 256), profile), &spec, None).unwrap();
    assert!((a.noncollapse_ratio - b.noncollapse_ratio).abs() < 0.01 * b.noncollapse_ratio);
    assert!((a.weighted_n.unwrap() - b.weighted_n.unwrap()).abs() < 0.01 * b.weighted_n.unwrap());
    assert!((a.max_grad_log_u - b.max_grad_log_u).abs() < 0.01 * b.max_grad_log_u);
    assert_eq!(a.beta, Some(0.5 * beta_limit(&spec)));
    let u = zonal(&axi(3, 64), profile);
    assert!(estimate_diagnostics(&u, &spec, Some(beta_limit(&spec))).is_err());
    let sup = ProblemSpec::new(3, 2, 1, 4.0).unwrap();
    assert!(estimate_diagnostics(&u, &sup, None).unwrap().weighted_n.is_none());
}

#[test]
fn export_writes_expected_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = embed(&ScalarField::constant(&full(8), 1.0)).unwrap();
    assert!(export_surface(&s, dir.path()).unwrap().ends_with("surface.obj"));
    let s = embed(&ScalarField::constant(&axi(3, 16), 1.0)).unwrap();
    assert!(export_surface(&s, dir.path()).unwrap().ends_with("profile.csv"));
}

proptest! {
    #[test]
    fn duality_matches_enumeration(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.1..5.0)).collect();
        let kappa: Vec<f64> = lambda.iter().map(|v| 1.0 / v).collect();
        for k in 1..=n {
            for l in 0..k {
                let brute = brute_h(&kappa, k) / brute_h(&kappa, l) * brute_h(&lambda, n - l) / brute_h(&lambda, n - k);
                prop_assert!((brute - 1.0).abs() < 1e-11);
                prop_assert!((duality_product(&lambda, k, l) - 1.0).abs() < 1e-11);
            }
        }
    }
}
