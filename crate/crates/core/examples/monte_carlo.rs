//! Event-driven simulation of the tagged sojourn, compared with exact
//! means, Laplace functionals and the decay rate.

use num_complex::Complex64;
use ps_sojourn::simulator::{admission_weights, simulate_conditional, simulate_stationary};
use ps_sojourn::spectrum::theta_s_exact;
use ps_sojourn::transform::{conditional_moments, resolvent_solve};
use ps_sojourn::ModelParams;

pub fn main() -> ps_sojourn::Result<()> {
    let params = ModelParams::new(0.9, 10)?;
    let n = 3;
    let s = simulate_conditional(&params, n, 200_000, 1)?;
    let st = s.stats();
    let mean = conditional_moments(&params, 1)?[n];
    println!("conditional on n = {n}: mean {:.5} ± {:.5} (exact {mean:.5})", st.mean, st.std_error());
    for theta in [0.25, 1.0] {
        let lf = s.laplace_functional(theta);
        let exact = resolvent_solve(&params, Complex64::new(theta, 0.0))?.values[n].re;
        println!("E[exp(-{theta} S)] = {:.5} ± {:.5} (exact {exact:.5})", lf.mean, lf.std_error());
    }
    let times: Vec<f64> = (15..=45).map(f64::from).collect();
    println!("tail slope {:.5}, theta_s {:.5}", s.empirical_tail_slope(&times)?, theta_s_exact(&params));

    let u = simulate_stationary(&params, 200_000, 2)?;
    let total: u64 = u.occupancy_histogram.iter().sum();
    println!("arrival occupancy seen by admitted customers vs rho^n weights:");
    for (k, (c, w)) in u.occupancy_histogram.iter().zip(admission_weights(&params)).enumerate() {
        println!("  {k:>2}: {:.4} {:.4}", *c as f64 / total as f64, w);
    }
    println!("blocked arrivals: {}", u.blocked_count);
    Ok(())
}
