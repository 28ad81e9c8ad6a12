use srlab_core::models::heisenberg_heat_kernel;
use srlab_core::sde::{kde_at, resolve_bandwidth, simulate_endpoints};
use srlab_core::stats::{batch_mean_se, ks_two_sample, mean};
use srlab_core::{
    estimate_heat_kernel, make_model, reverse_ensemble, sample_bridge, Bandwidth, Control, ModelParams, Sequential,
    SimConfig, VectorFieldModel,
};

fn heis() -> VectorFieldModel {
    make_model("heisenberg", &ModelParams::new()).unwrap()
}

fn column(ends: &[f64], m: usize, r: usize) -> Vec<f64> {
    ends.chunks(m).map(|p| p[r]).collect()
}

#[test]
fn endpoint_area_has_zero_mean() {
    let cfg = SimConfig::new(1.0, 64, 101);
    let (ends, _) = simulate_endpoints(&heis(), &[0.0; 3], &cfg, 100_000, None, &Sequential).unwrap();
    let (m, se) = batch_mean_se(&column(&ends, 3, 2), 20);
    assert!(m.abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn weak_order_consistency_in_steps() {
    let second_moment = |steps, seed| {
        let cfg = SimConfig::new(1.0, steps, seed);
        let (ends, _) = simulate_endpoints(&heis(), &[0.0; 3], &cfg, 40_000, None, &Sequential).unwrap();
        let sq: Vec<f64> = column(&ends, 3, 2).iter().map(|z| z * z).collect();
        batch_mean_se(&sq, 20)
    };
    let (a, sa) = second_moment(64, 1);
    let (b, sb) = second_moment(512, 2);
    assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
    // E[A²] = t²/4 for the Lévy area of planar Brownian motion, minus the
    // (1 − 1/N) polygon factor: E[A_N²] = (1 − 1/N)/4 at t = 1... up to O(1/N).
    assert!((b - 0.25).abs() < 3.0 * sb + 0.01, "{b}");
}

#[test]
fn kde_matches_exact_kernel() {
    let h = heis();
    for (eps, y) in [(0.5, [0.5, 0.0, 0.0]), (0.5, [0.0, 0.0, 0.0]), (1.0, [0.3, -0.4, 0.2])] {
        let cfg = SimConfig::new(eps, 64, 17);
        let est =
            estimate_heat_kernel(&h, &[0.0; 3], &y, &cfg, &Bandwidth::Silverman, 100_000, None, &Sequential).unwrap();
        let exact = heisenberg_heat_kernel(eps, &y);
        assert!((est.value - exact).abs() < 0.1 * exact, "ε={eps} {y:?}: {} vs {exact}", est.value);
        assert!(!est.underflow);
    }
}

#[test]
fn tilted_estimator_is_unbiased() {
    let h = heis();
    let (eps, y) = (0.2, [1.0, 0.0, 0.0]);
    let tilt = Control::from_fn(2, 64, |t, o| {
        o[0] = t;
        o[1] = 0.0;
    });
    let cfg = SimConfig::new(eps, 64, 23);
    let est = estimate_heat_kernel(&h, &[0.0; 3], &y, &cfg, &Bandwidth::Silverman, 100_000, Some(&tilt), &Sequential)
        .unwrap();
    let exact = heisenberg_heat_kernel(eps, &y);
    assert!(est.tilted);
    assert!((est.value - exact).abs() < 0.1 * exact, "{} vs {exact}", est.value);
}

#[test]
fn heat_kernel_symmetry() {
    let h = heis();
    let (x, y) = ([0.0; 3], [0.4, 0.2, 0.1]);
    let a = estimate_heat_kernel(
        &h,
        &x,
        &y,
        &SimConfig::new(0.5, 64, 1),
        &Bandwidth::Silverman,
        100_000,
        None,
        &Sequential,
    )
    .unwrap();
    let b = estimate_heat_kernel(
        &h,
        &y,
        &x,
        &SimConfig::new(0.5, 64, 2),
        &Bandwidth::Silverman,
        100_000,
        None,
        &Sequential,
    )
    .unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 3.0 * se, "{} vs {} (se {se})", a.value, b.value);
}

#[test]
fn kde_integrates_to_one() {
    let h = heis();
    let cfg = SimConfig::new(0.5, 64, 3);
    let (ends, _) = simulate_endpoints(&h, &[0.0; 3], &cfg, 20_000, None, &Sequential).unwrap();
    let bw = resolve_bandwidth(&h, &ends, &Bandwidth::Silverman).unwrap();
    let (n, half) = (24usize, [3.0, 3.0, 1.5]);
    let cell: f64 = half.iter().map(|w| 2.0 * w / n as f64).product();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = |a: usize, w: f64| -w + (a as f64 + 0.5) * 2.0 * w / n as f64;
                let y = [c(i, half[0]), c(j, half[1]), c(k, half[2])];
                let (contrib, _) = kde_at(&h, &ends, None, &y, &bw);
                total += mean(&contrib) * cell;
            }
        }
    }
    assert!((total - 1.0).abs() < 0.1, "{total}");
}

#[test]
fn standard_error_shrinks_like_root_n() {
    let h = heis();
    let y = [0.3, 0.0, 0.0];
    let se = |n| {
        estimate_heat_kernel(
            &h,
            &[0.0; 3],
            &y,
            &SimConfig::new(0.5, 32, 4),
            &Bandwidth::Fixed(0.15),
            n,
            None,
            &Sequential,
        )
        .unwrap()
        .std_error
    };
    let ratio = se(40_000) / se(80_000);
    assert!((ratio - 2f64.sqrt()).abs() < 0.35, "{ratio}");
}

#[test]
fn staying_put_is_typical() {
    let cfg = SimConfig::new(0.001, 32, 5);
    let e = sample_bridge(&heis(), &[0.0; 3], &[0.0; 3], &cfg, 0.1, 500, 10_000, &Sequential).unwrap();
    assert!(e.acceptance_rate > 0.9, "{}", e.acceptance_rate);
    for p in &e.paths {
        for k in 0..p.len() {
            assert!(p.point(k).iter().map(|v| v * v).sum::<f64>().sqrt() < 0.3);
        }
    }
}

#[test]
fn bridge_endpoint_invariant() {
    let y = [1.0, 0.0, 0.0];
    let e = sample_bridge(&heis(), &[0.0; 3], &y, &SimConfig::new(0.2, 64, 6), 0.15, 10_000, 10_000_000, &Sequential)
        .unwrap();
    assert_eq!(e.len(), 10_000);
    let worst = e.paths.iter().map(|p| heis().ambient_distance(p.end(), &y)).fold(0.0, f64::max);
    assert!(worst <= 0.15);
}

#[test]
fn acceptance_decays_with_epsilon() {
    let y = [1.0, 0.0, 0.0];
    let rates: Vec<f64> = [0.5, 0.2, 0.1]
        .iter()
        .map(|&eps| {
            sample_bridge(&heis(), &[0.0; 3], &y, &SimConfig::new(eps, 32, 7), 0.3, usize::MAX, 200_000, &Sequential)
                .unwrap()
                .acceptance_rate
        })
        .collect();
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
}

#[test]
fn reversed_bridge_matches_direct_bridge() {
    let h = heis();
    let (x, y) = ([0.0; 3], [1.0, 0.0, 0.0]);
    let eps: f64 = 0.2;
    // Euclidean balls are not left-invariant, so the acceptance radius has to
    // be small against the ε-scale of the bracket direction.
    let r = 0.1 * eps.sqrt();
    let fwd = sample_bridge(&h, &x, &y, &SimConfig::new(eps, 32, 8), r, 1000, 100_000_000, &Sequential).unwrap();
    let bwd = sample_bridge(&h, &y, &x, &SimConfig::new(eps, 32, 9), r, 1000, 100_000_000, &Sequential).unwrap();
    let rev = reverse_ensemble(&fwd);
    for c in 0..3 {
        let mid = |e: &srlab_core::BridgeEnsemble| column(&e.marginal(16), 3, c);
        let ks = ks_two_sample(&mid(&rev), &mid(&bwd));
        assert!(ks.p_value > 0.01 / 3.0, "coordinate {c}: {ks:?}");
    }
    assert_eq!(rev.paths[0].start(), fwd.paths[0].end());
}

#[test]
fn diagonal_kernel_scaling_stays_bounded() {
    // p_ε(x, x)·ε^{Q/2} with homogeneous dimension Q = 4 is constant (1/4).
    let h = heis();
    for eps in [1.0, 0.5, 0.2, 0.1] {
        let est = estimate_heat_kernel(
            &h,
            &[0.0; 3],
            &[0.0; 3],
            &SimConfig::new(eps, 64, 10),
            &Bandwidth::Silverman,
            50_000,
            None,
            &Sequential,
        )
        .unwrap();
        let scaled = est.value * eps * eps;
        assert!(scaled > 0.15 && scaled < 0.35, "ε={eps}: {scaled}");
    }
}
