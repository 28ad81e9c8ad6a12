use proptest::prelude::*;
use srlab_core::models::{heisenberg_distance, parse_expr, wrap_angle};
use srlab_core::{make_model, ModelParams};

fn coord() -> impl Strategy<Value = f64> {
    -3.0f64..3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ambient_distance_is_a_metric(
        a in prop::array::uniform2(-10.0f64..10.0),
        b in prop::array::uniform2(-10.0f64..10.0),
        c in prop::array::uniform2(-10.0f64..10.0),
    ) {
        let t = make_model("torus_hypo", &ModelParams::new()).unwrap();
        let (ab, ba, bc, ac) = (t.ambient_distance(&a, &b), t.ambient_distance(&b, &a), t.ambient_distance(&b, &c), t.ambient_distance(&a, &c));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(ab <= std::f64::consts::PI * 2f64.sqrt() + 1e-12);
        prop_assert!(t.ambient_distance(&a, &a) == 0.0);
    }

    #[test]
    fn wrapped_angles_land_in_half_open_interval(d in -100.0f64..100.0) {
        let w = wrap_angle(d);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        let k = (d - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn heisenberg_oracle_is_left_invariant(
        p in prop::array::uniform3(coord()),
        q in prop::array::uniform3(coord()),
        g in prop::array::uniform3(coord()),
    ) {
        let h = make_model("heisenberg", &ModelParams::new()).unwrap();
        let mul = |a: &[f64; 3], b: &[f64; 3]| [a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])];
        let d = h.distance_oracle(&p, &q).unwrap();
        let dt = h.distance_oracle(&mul(&g, &p), &mul(&g, &q)).unwrap();
        prop_assert!((d - dt).abs() <= 1e-8 * (1.0 + d));
        prop_assert!((d - h.distance_oracle(&q, &p).unwrap()).abs() <= 1e-8 * (1.0 + d));
        // Never shorter than the planar projection.
        prop_assert!(d + 1e-12 >= ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt());
    }

    #[test]
    fn heisenberg_oracle_dilates(g in prop::array::uniform3(coord()), lam in 0.1f64..4.0) {
        let d = heisenberg_distance(&g);
        let dl = heisenberg_distance(&[lam * g[0], lam * g[1], lam * lam * g[2]]);
        prop_assert!((dl - lam * d).abs() <= 1e-8 * (1.0 + dl));
    }

    #[test]
    fn parsed_polynomials_evaluate_like_rust(
        a in -5.0f64..5.0, b in -5.0f64..5.0, x in -2.0f64..2.0, y in -2.0f64..2.0,
    ) {
        let e = parse_expr(&format!("({a})*x0^2 - ({b})*x0*x1 + sin(x1)/2")).unwrap();
        let want = a * x * x - b * x * y + y.sin() / 2.0;
        prop_assert!((e.eval(&[x, y]) - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn heisenberg_brackets_span_everywhere(p in prop::array::uniform3(-50.0f64..50.0)) {
        let h = make_model("heisenberg", &ModelParams::new()).unwrap();
        prop_assert_eq!(h.bracket_span_rank(&p), 3);
        let br = h.lie_bracket(0, 1, &p);
        prop_assert!((br[2] - 1.0).abs() < 1e-12 && br[0].abs() < 1e-12 && br[1].abs() < 1e-12);
    }
}

#[test]
fn unknown_models_and_parameters_are_rejected() {
    assert!(make_model("sphere", &ModelParams::new()).is_err());
    let mut p = ModelParams::new();
    p.insert("scale".into(), "2".into());
    assert!(make_model("heisenberg", &p).is_err());
    let mut c = ModelParams::new();
    c.insert("fields".into(), "V1=(1, 0); V3=(0, 1)".into());
    assert!(make_model("custom", &c).is_err());
    c.insert("fields".into(), "V1=(1, 0); V2=(0, ln(x0))".into());
    assert!(make_model("custom", &c).is_err());
}
