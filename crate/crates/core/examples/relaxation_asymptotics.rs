//! Relaxation rate θ_s against its large-K expansions in all three regimes.

use ps_sojourn::spectrum::{asymp_critical, asymp_subcritical, asymp_supercritical, theta_s_exact, AsymptoticEstimate};
use ps_sojourn::ModelParams;

fn row(k: usize, exact: f64, est: &AsymptoticEstimate) {
    println!(
        "{k:>6} {exact:>20.14} {:>20.14} {:>10.2e}",
        est.theta_s_estimate,
        (exact - est.theta_s_estimate).abs()
    );
}

pub fn main() -> ps_sojourn::Result<()> {
    println!("{:>6} {:>20} {:>20} {:>10}", "K", "exact", "asymptotic", "abs err");
    println!("sub-critical, rho = 0.5");
    for k in [100, 200, 400, 800, 1600] {
        let p = ModelParams::new(0.5, k)?;
        row(k, theta_s_exact(&p), &asymp_subcritical(&p)?);
    }
    println!("critical, rho = 1");
    for k in [250, 1000, 4000] {
        let p = ModelParams::new(1.0, k)?;
        row(k, theta_s_exact(&p), &asymp_critical(&p)?);
    }
    println!("super-critical, rho = 2");
    for k in [20, 25, 50, 100, 200] {
        let p = ModelParams::new(2.0, k)?;
        row(k, theta_s_exact(&p), &asymp_supercritical(&p)?);
    }
    Ok(())
}
