use lozi::observables::{Observable, VectorField};
use lozi::output::{fmt_f64, CsvTable};
use lozi::polygon::ConvexPolygon;
use lozi::segments::{descendants, DirectedSegment};
use lozi::stats::Moments;
use lozi::{DDReal, LoziParams, Point2, Side};
use proptest::prelude::*;

fn pt() -> impl Strategy<Value = Point2<DDReal>> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y)| Point2::dd(x, y))
}

fn cloud() -> impl Strategy<Value = ConvexPolygon<DDReal>> {
    prop::collection::vec(pt(), 3..16).prop_map(|v| ConvexPolygon::hull(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hull_is_convex_and_holds_its_points(pts in prop::collection::vec(pt(), 3..20)) {
        let h = ConvexPolygon::hull(&pts);
        prop_assume!(!h.is_empty());
        prop_assert!(h.is_convex());
        for &p in &pts {
            prop_assert!(h.contains_closed(p));
        }
    }

    #[test]
    fn side_clips_split_the_area(h in cloud()) {
        prop_assume!(!h.is_empty());
        let (m, p) = (h.clip_side(Side::Minus), h.clip_side(Side::Plus));
        prop_assert!(m.is_convex() && p.is_convex());
        let total = h.area();
        let gap = (total - (m.area() + p.area())).abs().to_f64();
        prop_assert!(gap <= 1e-25 * (1.0 + total.to_f64()), "{gap:e}");
    }

    #[test]
    fn affine_branch_scales_area_by_b(h in cloud(), side in prop::bool::ANY) {
        let side = if side { Side::Plus } else { Side::Minus };
        let f = LoziParams::from_decimal(1.8, 0.35).unwrap().map::<DDReal>();
        let piece = h.clip_side(side);
        prop_assume!(!piece.is_empty() && piece.area().to_f64() > 1e-6);
        let img = piece.map_affine(|q| f.apply_side(side, q), true);
        prop_assert!(img.is_convex());
        let ratio = img.area() / piece.area();
        prop_assert!((ratio.to_f64() - 0.35).abs() < 1e-25);
    }

    #[test]
    fn crossing_lands_exactly_on_the_critical_line(
        xp in -2.0f64..-1e-9, xq in 1e-9f64..2.0, yp in -2.0f64..2.0, yq in -2.0f64..2.0, flip in prop::bool::ANY,
    ) {
        let mut s = DirectedSegment::new(Point2::dd(xp, yp), Point2::dd(xq, yq));
        if flip {
            s = s.reversed();
        }
        let (t, c) = s.crossing().unwrap();
        prop_assert_eq!(c.x.to_f64(), 0.0);
        prop_assert!(t.to_f64() > 0.0 && t.to_f64() < 1.0);
        let on = s.at(t);
        prop_assert!((on.y - c.y).abs().to_f64() < 1e-28);

        let f = LoziParams::from_decimal(1.8, 0.35).unwrap().map::<DDReal>();
        let d = descendants(&f, &s);
        prop_assert_eq!(d.len(), 2);
        prop_assert_eq!(d[0].segment.q, d[1].segment.p);
        prop_assert_eq!(d[0].segment.p, f.apply(s.p));
        prop_assert_eq!(d[1].segment.q, f.apply(s.q));
        prop_assert_ne!(d[0].side, d[1].side);
    }

    #[test]
    fn moments_merge_like_one_stream(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let whole: Moments = xs.iter().copied().collect();
        let mut a: Moments = xs[..cut].iter().copied().collect();
        let b: Moments = xs[cut..].iter().copied().collect();
        a.merge(&b);
        prop_assert_eq!(a.n, whole.n);
        prop_assert!((a.mean - whole.mean).abs() <= 1e-9 * (1.0 + whole.mean.abs()));
        prop_assert!((a.variance() - whole.variance()).abs() <= 1e-9 * (1.0 + whole.variance()));
    }

    #[test]
    fn csv_cells_round_trip_doubles(rows in prop::collection::vec(prop::array::uniform3(any::<f64>().prop_filter("finite", |x| x.is_finite())), 0..30)) {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        for r in &rows {
            t.push_f64(r);
        }
        let back = CsvTable::from_bytes(&t.to_bytes()).unwrap();
        prop_assert_eq!(&back, &t);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                let y: f64 = back.rows()[i][j].parse().unwrap();
                prop_assert_eq!(y.to_bits(), x.to_bits());
                prop_assert_eq!(&back.rows()[i][j], &fmt_f64(x));
            }
        }
    }

    #[test]
    fn field_jacobians_match_finite_differences(x in -1.5f64..1.5, y in -0.6f64..0.6) {
        let h = 1e-6;
        let fields = [VectorField::b_scale(), VectorField::x_axis(), VectorField::conjugacy(0.35)];
        for f in &fields {
            let j = f.jacobian([x, y]);
            for (k, d) in [[h, 0.0], [0.0, h]].iter().enumerate() {
                let up = f.value([x + d[0], y + d[1]]);
                let dn = f.value([x - d[0], y - d[1]]);
                for i in 0..2 {
                    let fd = (up[i] - dn[i]) / (2.0 * h);
                    prop_assert!((fd - j[i][k]).abs() < 1e-6, "{} J[{}][{}]", f.name(), i, k);
                }
            }
        }
    }

    #[test]
    fn observable_gradients_match_finite_differences(x in -1.5f64..1.5, y in -0.6f64..0.6) {
        let h = 1e-6;
        for a in [Observable::x(), Observable::y(), Observable::x_squared(), Observable::bump()] {
            let g = a.gradient([x, y]);
            let gx = (a.value([x + h, y]) - a.value([x - h, y])) / (2.0 * h);
            let gy = (a.value([x, y + h]) - a.value([x, y - h])) / (2.0 * h);
            prop_assert!((gx - g[0]).abs() < 1e-5 && (gy - g[1]).abs() < 1e-5, "{}", a.name());
        }
    }
}
