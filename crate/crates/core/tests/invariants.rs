use std::path::Path;

use proptest::prelude::*;
use rhm_core::io;
use rhm_core::map::{BarycentricPoint, PreciseMap};
use rhm_core::metrics::{conformal_excess, CumulativeCurve};
use rhm_core::projection::{closest_point_on_triangle, EmbeddedSurface};
use rhm_core::{shapes, RowMatrix};

fn weights() -> impl Strategy<Value = [f64; 3]> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let b = b * (1.0 - a);
        [a, b, 1.0 - a - b]
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_text_round_trips(rows in prop::collection::vec((0usize..80, weights()), 42)) {
        let m = shapes::icosphere(1);
        let rows = rows.into_iter().map(|(f, w)| BarycentricPoint::new(f, w)).collect();
        let p = PreciseMap::new(&m, rows).unwrap();
        let back = PreciseMap::parse(&p.to_text(), Path::new("mem"), &m, &m).unwrap();
        for (a, b) in p.rows().iter().zip(back.rows()) {
            prop_assert_eq!(a.face, b.face);
            prop_assert!((0..3).all(|k| (a.weights[k] - b.weights[k]).abs() < 1e-15));
        }
    }

    #[test]
    fn landmarks_round_trip(pairs in prop::collection::vec((0usize..30, 0usize..50), 1..20)) {
        let text: String = pairs.iter().map(|(p, q)| format!("{} {}\n", p + 1, q + 1)).collect();
        let set = io::parse_landmarks(&text, Path::new("mem"), 30, 50).unwrap();
        prop_assert_eq!(set.pairs, pairs);
    }

    #[test]
    fn curves_are_monotone_and_end_at_one(
        values in prop::collection::vec(prop_oneof![9 => 0.0..10.0f64, 1 => Just(f64::INFINITY)], 1..300),
        area in prop::collection::vec(0.01..1.0f64, 300),
    ) {
        for w in [None, Some(&area[..values.len()])] {
            let c = CumulativeCurve::from_values(&values, w).unwrap();
            prop_assert!(c.thresholds.windows(2).all(|t| t[0] <= t[1]));
            prop_assert!(c.fractions.windows(2).all(|f| f[0] <= f[1] + 1e-15));
            prop_assert!((c.fractions.last().unwrap() - 1.0).abs() < 1e-12);
            prop_assert!(c.fractions.iter().all(|&f| (0.0..=1.0 + 1e-12).contains(&f)));
        }
    }

    #[test]
    fn conformal_excess_is_scale_free(s in 0.01..10.0f64, r in 1.0..5.0f64, k in 0.1..10.0f64) {
        let (s1, s2) = (r * s, s);
        let e = conformal_excess(s1, s2);
        prop_assert!(e >= 0.0);
        prop_assert!((conformal_excess(k * s1, k * s2) - e).abs() <= 1e-9 * (1.0 + e));
        prop_assert!((e - (r - 1.0) * (r - 1.0) / r).abs() <= 1e-9 * (1.0 + e));
    }

    #[test]
    fn closest_point_beats_corners(
        tri in prop::collection::vec(-1.0..1.0f64, 9),
        q in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        let (a, b, c) = (&tri[0..3], &tri[3..6], &tri[6..9]);
        let (w, d) = closest_point_on_triangle(&q, a, b, c);
        prop_assert!(w.iter().all(|&x| x >= -1e-12));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p: Vec<f64> = (0..3).map(|k| w[0] * a[k] + w[1] * b[k] + w[2] * c[k]).collect();
        prop_assert!((dist(&p, &q) - d).abs() < 1e-9);
        for corner in [a, b, c] {
            prop_assert!(d <= dist(corner, &q) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_and_brute_force_agree(qs in prop::collection::vec(prop::collection::vec(-1.5..1.5f64, 3), 20)) {
        let m = shapes::icosphere(3);
        let surface = EmbeddedSurface::new(RowMatrix::from_rows(m.vertices()), m.faces()).unwrap();
        for q in &qs {
            let (t, b) = (surface.project(q), surface.project_brute(q));
            prop_assert_eq!(t.face, b.face);
            prop_assert!((t.distance - b.distance).abs() < 1e-12);
        }
    }
}
