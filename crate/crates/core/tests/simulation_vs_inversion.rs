use ps_sojourn::model::ModelParams;
use ps_sojourn::simulator::{simulate_conditional, simulate_stationary};
use ps_sojourn::time_domain::invert_survival;
use ps_sojourn::transform::{conditional_moments, resolvent_solve};
use num_complex::Complex64;

#[test]
fn empirical_cdf_matches_inverted_survival() {
    let params = ModelParams::new(1.0, 5).unwrap();
    let n = 2;
    let count = 50_000;
    let s = simulate_conditional(&params, n, count, 99).unwrap();
    let ks = s.ks_statistic(|t| {
        if t <= 0.0 {
            0.0
        } else {
            1.0 - invert_survival(&params, n, &[t]).unwrap()[0]
        }
    });
    let critical = 1.628 / (count as f64).sqrt();
    assert!(ks < critical, "KS {ks} vs {critical}");
}

#[test]
fn stationary_laplace_functional_is_weighted_transform() {
    let params = ModelParams::new(0.7, 6).unwrap();
    let s = simulate_stationary(&params, 200_000, 3).unwrap();
    let weights: Vec<f64> = (0..6).map(|n| 0.7f64.powi(n)).collect();
    let total: f64 = weights.iter().sum();
    let r = resolvent_solve(&params, Complex64::new(0.5, 0.0)).unwrap();
    let exact: f64 = r.values.iter().zip(&weights).map(|(v, w)| v.re * w / total).sum();
    let lf = s.laplace_functional(0.5);
    assert!((lf.mean - exact).abs() < 3.0 * lf.std_error());

    let m = conditional_moments(&params, 1).unwrap();
    let mean: f64 = m.iter().zip(&weights).map(|(a, w)| a * w / total).sum();
    let st = s.stats();
    assert!((st.mean - mean).abs() < 3.0 * st.std_error());
}
