mod common;

use common::*;
use kavd::geom::{cells_intersecting_ball, euclid_norm, lifted_dist, product_norm, Ball, CanonicalCube, LiftedPoint};
use kavd::PointSet;
use proptest::prelude::*;

proptest! {
    #[test]
    fn product_norm_sandwich(u in prop::collection::vec(-1e3f64..1e3, 2..6)) {
        let e = euclid_norm(&u);
        let p = product_norm(&u).unwrap();
        prop_assert!(e <= p * (1.0 + SLACK));
        prop_assert!(p <= std::f64::consts::SQRT_2 * e * (1.0 + SLACK));
    }

    #[test]
    fn lifted_distance_bounds(q in prop::collection::vec(0.0f64..1.0, 2), c in prop::collection::vec(0.0f64..1.0, 2), r in 0.0f64..0.5) {
        // dist to the ball's far side dominates the lifted distance up to sqrt(2).
        let l = lifted_dist(&q, &c, r);
        let base = euclid(&q, &c);
        prop_assert!(l >= base.max(r) * (1.0 - SLACK));
        prop_assert!(l <= (base + r) * (1.0 + SLACK));
        let lp = Ball::new(c.clone(), r).unwrap().lift();
        prop_assert!((lp.product_dist(&LiftedPoint::query(&q)) - l).abs() <= 1e-12 * l.max(1.0));
    }

    #[test]
    fn normalize_round_trip(pts in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..50)) {
        let ps = PointSet::normalize(&pts, None).unwrap();
        let n = pts.len() as f64;
        let t = ps.transform();
        for (i, p) in pts.iter().enumerate() {
            let x = ps.point(i);
            for &c in x {
                prop_assert!(c >= 0.5 && c <= 0.5 + 1.0 / n);
            }
            let back = t.to_input(x);
            for (a, b) in back.iter().zip(p) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
        // distances scale by a single factor
        if pts.len() >= 2 {
            let raw = euclid(&pts[0], &pts[1]);
            let norm = euclid(ps.point(0), ps.point(1));
            prop_assert!((t.distance_to_input(norm) - raw).abs() <= 1e-9 * (1.0 + raw));
        }
    }

    #[test]
    fn cube_children_partition(level in -20i32..0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let p = [x, y];
        let c = CanonicalCube::containing_point(&p, level).unwrap();
        prop_assert!(c.min_dist(&p) == 0.0);
        let hits = (0..4).filter(|&o| c.child(o).min_dist(&p) == 0.0).count();
        prop_assert!(hits >= 1);
        let inner = CanonicalCube::containing_point(&p, level - 1).unwrap();
        prop_assert!(c.contains(&inner));
        prop_assert_eq!(inner.parent().unwrap(), c.clone());
        prop_assert!(c.max_dist(&p) <= c.diameter() * (1.0 + SLACK));
    }

    #[test]
    fn ball_cells_cover_the_ball(cx in 0.2f64..0.8, cy in 0.2f64..0.8, r in 0.001f64..0.1, ax in -1.0f64..1.0, ay in -1.0f64..1.0) {
        let b = Ball::new(vec![cx, cy], r).unwrap();
        let cells = cells_intersecting_ball(&b, r / 4.0, -40).unwrap();
        prop_assert!(!cells.is_empty());
        let norm = (ax * ax + ay * ay).sqrt().max(1.0);
        let p = [cx + r * ax / norm, cy + r * ay / norm];
        prop_assert!(cells.iter().any(|c| c.min_dist(&p) == 0.0));
        for c in &cells {
            prop_assert!(c.intersects_ball(&[cx, cy], r));
            prop_assert!(c.side() <= r / 4.0);
        }
    }
}

#[test]
fn coincident_points_normalize() {
    let ps = PointSet::normalize(&[vec![2.0, 2.0], vec![2.0, 2.0]], None).unwrap();
    assert_eq!(ps.point(0), ps.point(1));
    assert_eq!(ps.transform().scale, 1.0);
}

#[test]
fn non_finite_rejected() {
    assert!(PointSet::normalize(&[vec![f64::NAN, 0.0]], None).is_err());
    assert!(PointSet::normalize(&[vec![0.0, 1.0], vec![0.0]], None).is_err());
    assert!(PointSet::normalize(&[], None).is_err());
}
