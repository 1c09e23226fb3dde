//! Density and survival by three routes (ODE, modal expansion, Talbot
//! inversion) and a tail fit of the decay rate.

use ps_sojourn::spectrum::theta_s_exact;
use ps_sojourn::time_domain::{invert_solution, ode_evolve, spectral_expand, tail_fit, Quantity};
use ps_sojourn::ModelParams;

pub fn main() -> ps_sojourn::Result<()> {
    let params = ModelParams::new(1.2, 12)?;
    let grid: Vec<f64> = (0..=40).map(|j| 0.5 * j as f64).collect();
    let ode = ode_evolve(&params, &grid, Quantity::Both)?;
    let modal = spectral_expand(&params, &grid)?;
    let inv = invert_solution(&params, &grid)?;
    let n = 4;
    println!("rho = 1.2, K = 12, n = {n}");
    println!("{:>6} {:>18} {:>18} {:>18} {:>14}", "t", "p ode", "p modal", "p inverted", "q ode");
    for j in (0..grid.len()).step_by(4) {
        println!(
            "{:>6.2} {:>18.12e} {:>18.12e} {:>18.12e} {:>14.8e}",
            grid[j], ode.density[j][n], modal.density[j][n], inv.density[j][n], ode.survival[j][n]
        );
    }

    let long: Vec<f64> = (0..=60).map(|j| 2.0 * j as f64).collect();
    let sol = ode_evolve(&params, &long, Quantity::Survival)?;
    let (slope, _) = tail_fit(&sol, n, (60.0, 120.0))?;
    println!("tail slope {slope:.8}, theta_s {:.8}", theta_s_exact(&params));
    Ok(())
}
