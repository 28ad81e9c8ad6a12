use core::f64::consts::PI;
use std::time::Instant;

use srlab_core::models::heisenberg_distance;
use srlab_core::srgeom::constant_speed;
use srlab_core::{
    h1_norm_sq, integrate, make_model, minimize_energy, path_energy, rate_function, Control, GeodesicOptions,
    ModelParams, Sequential, VectorFieldModel,
};

fn heis() -> VectorFieldModel {
    make_model("heisenberg", &ModelParams::new()).unwrap()
}

fn torus() -> VectorFieldModel {
    make_model("torus_hypo", &ModelParams::new()).unwrap()
}

fn distance(model: &VectorFieldModel, x: &[f64], y: &[f64]) -> f64 {
    let r = minimize_energy(model, x, y, &GeodesicOptions::default(), &Sequential).unwrap();
    assert!(r.converged, "gap {}", r.endpoint_gap);
    r.distance_estimate
}

#[test]
fn horizontal_unit_step() {
    let t = Instant::now();
    let d = distance(&heis(), &[0.0; 3], &[1.0, 0.0, 0.0]);
    assert!((d - 1.0).abs() < 0.01, "{d}");
    eprintln!("d(0,(1,0,0)) = {d} in {:?}", t.elapsed());
}

#[test]
fn dido_vertical_point() {
    let t = Instant::now();
    let d = distance(&heis(), &[0.0; 3], &[0.0, 0.0, 1.0 / PI]);
    assert!((d - 2.0).abs() < 0.04, "{d}");
    eprintln!("d(0,(0,0,1/π)) = {d} in {:?}", t.elapsed());
}

#[test]
fn generic_points_match_oracle() {
    let h = heis();
    for q in [[0.5, 0.3, 0.2], [-0.4, 0.8, -0.3], [1.0, 1.0, 0.5]] {
        let d = distance(&h, &[0.0; 3], &q);
        let exact = heisenberg_distance(&q);
        assert!((d - exact).abs() < 0.01 * exact, "{q:?}: {d} vs {exact}");
    }
}

#[test]
fn left_translation_and_symmetry() {
    let h = heis();
    let x = [0.3, -0.2, 0.1];
    let y = [1.0, 0.4, -0.2];
    let dxy = distance(&h, &x, &y);
    let dyx = distance(&h, &y, &x);
    let exact = h.distance_oracle(&x, &y).unwrap();
    assert!((dxy - exact).abs() < 0.01 * exact, "{dxy} vs {exact}");
    assert!((dxy - dyx).abs() < 0.01 * exact);
}

#[test]
fn dilation_scales_distance() {
    let h = heis();
    let q = [0.4, 0.2, 0.15];
    let d1 = distance(&h, &[0.0; 3], &q);
    let d2 = distance(&h, &[0.0; 3], &[2.0 * q[0], 2.0 * q[1], 4.0 * q[2]]);
    assert!((d2 - 2.0 * d1).abs() < 0.02 * d2, "{d1} {d2}");
}

#[test]
fn triangle_inequality() {
    let h = heis();
    let (a, b, c) = ([0.0; 3], [0.6, 0.1, 0.2], [0.2, 0.7, -0.1]);
    let (ab, bc, ac) = (distance(&h, &a, &b), distance(&h, &b, &c), distance(&h, &a, &c));
    assert!(ac <= (ab + bc) * 1.01);
}

#[test]
fn torus_distances() {
    let t = torus();
    // Along the first field the distance is Euclidean.
    let d = distance(&t, &[0.0, 0.0], &[1.0, 0.0]);
    assert!((d - 1.0).abs() < 0.01, "{d}");
    // Wrap-around: going the short way round.
    let d = distance(&t, &[3.0, 0.0], &[-3.0, 0.0]);
    assert!((d - (2.0 * PI - 6.0)).abs() < 0.01, "{d}");
    let d = distance(&t, &[0.0, 0.0], &[1.0, 1.0]);
    assert!(d > 1.0 && d < 3.0, "{d}");
}

#[test]
fn rate_function_of_minimizer_and_detour() {
    let h = heis();
    let (x, y) = ([0.0; 3], [1.0, 0.0, 0.0]);
    let opts = GeodesicOptions::default();
    let r = minimize_energy(&h, &x, &y, &opts, &Sequential).unwrap();
    let j = rate_function(&h, &x, &y, &r.path, r.distance_estimate, &opts);
    assert!(j.abs() < 1e-3, "{j}");

    let b = 0.1;
    let detour = Control::from_fn(2, 256, |t, o| {
        o[0] = t;
        o[1] = b * (2.0 * PI * t).sin();
    });
    let gamma = integrate(&h, &x, &detour, false, 0.0).unwrap();
    assert!(h.ambient_distance(gamma.end(), &y) < 1e-12);
    let independent = 0.5 * (h1_norm_sq(&detour) - 1.0);
    let j = rate_function(&h, &x, &y, &gamma, 1.0, &opts);
    assert!(rate_function(&h, &x, &[0.5, 0.0, 0.0], &gamma, 0.5, &opts).is_infinite());
    assert!((j - independent).abs() < 0.01 * independent, "{j} vs {independent}");
    assert!((independent - PI * PI * b * b).abs() < 0.01 * independent);
    assert!((path_energy(&h, &gamma, &opts) - h1_norm_sq(&detour)).abs() < 1e-6);
}

#[test]
fn constant_speed_preserves_endpoint_up_to_grid() {
    let h = heis();
    let c = Control::from_fn(2, 128, |t, o| {
        o[0] = t * t;
        o[1] = 0.3 * t;
    });
    let cs = constant_speed(&c);
    assert!(h1_norm_sq(&cs) <= h1_norm_sq(&c) + 1e-9);
    let a = integrate(&h, &[0.0; 3], &c, false, 0.0).unwrap();
    let b = integrate(&h, &[0.0; 3], &cs, false, 0.0).unwrap();
    assert!(h.ambient_distance(a.end(), b.end()) < 1e-3);
}
