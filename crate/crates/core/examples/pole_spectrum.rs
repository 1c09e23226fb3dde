//! Poles of the transform: all K eigenvalues of the generator by Sturm
//! bisection, and the same set as zeros of ΔH_K(θ).

use ps_sojourn::spectrum::{delta_h_spectrum, eigen_spectrum};
use ps_sojourn::ModelParams;

pub fn main() -> ps_sojourn::Result<()> {
    let params = ModelParams::new(0.8, 15)?;
    let eig = eigen_spectrum(&params);
    let dh = delta_h_spectrum(&params)?;
    println!("rho = 0.8, K = 15, coalescence point {:.6}", params.coalescence());
    println!("{:>3} {:>20} {:>20} {:>9}", "j", "eigenvalue", "root of ΔH_K", "diff");
    for (j, (a, b)) in eig.eigenvalues.iter().zip(&dh.eigenvalues).enumerate() {
        println!("{j:>3} {a:>20.14} {b:>20.14} {:>9.1e}", (a - b).abs());
    }
    println!("theta_s = {:.14}", eig.theta_s);
    Ok(())
}
