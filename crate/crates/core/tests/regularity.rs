use gcf_core::minkowski::{model_h, solve_profile_with, OdeParams};
use gcf_core::regularity::{
    build_glued_body, chou_wang_example, flat_part_measure_check, holder_exponent, RegularityError,
};
use proptest::prelude::*;

fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

#[test]
fn glued_bodies_over_p() {
    for p in [-0.5, 0.0, 0.5] {
        let params = OdeParams::new(2, p).unwrap();
        let (profile, _) = solve_profile_with(&params, 0.5, 1e-12, 1024).unwrap();
        let body = build_glued_body(&profile).unwrap();
        assert!(body.normal_angle_monotone(), "p={p}");
        let graph = body.rho.len();
        let density = body.recovered_density(p);
        for (_, f) in density.iter().take(graph) {
            assert!((f - 1.0).abs() < 1e-6, "p={p} f={f}");
        }
        // for small m the graph turns by very little, so caps are measured
        // against the largest normal angle it reaches
        let top = density[graph - 1].0;
        let angles: Vec<f64> = (0..16).map(|k| top * 0.5f64.powi(k)).collect();
        let rep = flat_part_measure_check(&body, p, &angles).unwrap();
        assert!(rep.decreasing && rep.final_fraction < 1e-5, "p={p} {rep:?}");
    }
}

#[test]
fn flat_part_check_rejects_p_at_least_one() {
    let params = OdeParams::new(2, 0.5).unwrap();
    let (profile, _) = solve_profile_with(&params, 0.5, 1e-12, 512).unwrap();
    let body = build_glued_body(&profile).unwrap();
    assert!(matches!(
        flat_part_measure_check(&body, 1.0, &[0.1]),
        Err(RegularityError::InvalidInput(_))
    ));
}

#[test]
fn chou_wang_cap_residual_is_second_order() {
    let cw = chou_wang_example(2, 2.0).unwrap();
    let errs: Vec<f64> = [257, 513, 1025]
        .iter()
        .map(|&k| cw.cap_measure_residual(k, 4, 0.1, |z| cw.density(z)).unwrap().max_abs)
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
    }
}

#[test]
fn short_windows_are_rejected() {
    let r = log_samples(1e-2, 5e-1, 50);
    let v: Vec<f64> = r.iter().map(|x| x.sqrt()).collect();
    assert!(matches!(
        holder_exponent(&r, &v),
        Err(RegularityError::InsufficientDecades { .. })
    ));
}

proptest! {
    #[test]
    fn model_slope_is_inverse_m(m in 0.3f64..4.0) {
        let r = log_samples(1e-6, 1e-1, 120);
        let v_r: Vec<f64> = r.iter().map(|&x| model_h(x, m).1).collect();
        let est = holder_exponent(&r, &v_r).unwrap();
        prop_assert!((est.slope - 1.0 / m).abs() < 1e-9);
        prop_assert!(f64::from(est.k) + est.gamma - (1.0 + est.slope) < 0.03 + 1e-12);
    }

    #[test]
    fn chou_wang_slope_matches_exponent(p in 1.05f64..2.95) {
        let cw = chou_wang_example(2, p).unwrap();
        let r = log_samples(1e-4, 1e-1, 80);
        let v_r: Vec<f64> = r.iter().map(|&x| cw.v_bar(x).1).collect();
        let est = holder_exponent(&r, &v_r).unwrap();
        prop_assert!((est.slope - (3.0 - p) / (1.0 + p)).abs() < 1e-9);
    }
}
