use gcf_core::minkowski::{jensen_check, ode_residual, solve_profile_with, OdeParams, RadialProfile};
use proptest::prelude::*;

/// Largest trapezoid mismatch between y and ∫y' between consecutive nodes,
/// relative to the local increment scale.
fn integration_mismatch(r: &[f64], y: &[f64], dy: &[f64]) -> f64 {
    (1..r.len())
        .map(|j| {
            let step = r[j] - r[j - 1];
            let trap = 0.5 * step * (dy[j] + dy[j - 1]);
            let scale = step * dy[j].abs().max(dy[j - 1].abs()).max(1e-300);
            (y[j] - y[j - 1] - trap).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn solved(n: usize, p: f64) -> RadialProfile {
    let params = OdeParams::new(n, p).unwrap();
    solve_profile_with(&params, 1.0, 1e-10, 1024).unwrap().0
}

#[test]
fn derivatives_are_consistent() {
    for (n, p) in [(2, 0.0), (2, 0.5), (3, 0.0)] {
        let w = solved(n, p);
        let v: Vec<f64> = (0..w.len()).map(|j| w.mesh.h[j] + w.w[j]).collect();
        let v_r: Vec<f64> = (0..w.len()).map(|j| w.mesh.h_r[j] + w.w_r[j]).collect();
        let v_rr: Vec<f64> = (0..w.len()).map(|j| w.mesh.h_rr[j] + w.w_rr[j]).collect();
        // the trapezoid rule itself is poor in the first graded cells, where
        // v_rr ~ r^{1/m - 1} is singular for m > 1
        let k = 32;
        let r = &w.r()[k..];
        assert!(integration_mismatch(r, &v[k..], &v_r[k..]) < 1e-3, "({n},{p})");
        assert!(integration_mismatch(r, &v_r[k..], &v_rr[k..]) < 1e-3, "({n},{p})");
    }
}

#[test]
fn correction_is_small_near_origin() {
    let w = solved(2, 0.5);
    let delta = w.params.delta;
    // |w_r| / h_r = O(r^δ)
    let rel: Vec<f64> = (0..w.len()).map(|j| w.w_r[j].abs() / w.mesh.h_r[j]).collect();
    let j = w.len() / 100;
    assert!(rel[j] < 10.0 * w.r()[j].powf(delta));
    assert!(rel[0] < rel[w.len() - 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solved_profiles_satisfy_the_ode(m in 0.5f64..2.0) {
        let params = OdeParams::from_m(2, m).unwrap();
        let (w, log) = solve_profile_with(&params, 1.0, 1e-10, 1024).unwrap();
        prop_assert!(ode_residual(&w) <= 1e-6);
        prop_assert!((ode_residual(&w) - log.ode_residual).abs() <= 1e-15);
        prop_assert!(log.certificate <= log.certificate_bound);
        prop_assert!(log.max_ratio_after_second().unwrap_or(0.0) <= 0.6);
    }

    #[test]
    fn jensen_holds_on_near_diagonal(a in 1e-3f64..1e3, t in -1e-6f64..1e-6, q in -3.0f64..3.0) {
        prop_assert!(jensen_check(a, a * (1.0 + t), q, 1e-12));
    }
}
