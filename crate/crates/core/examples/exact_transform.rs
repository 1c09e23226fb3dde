//! Transform vector p̂_n(θ) from the Green-function closed form, checked
//! against a direct solve of (θI - A) x = p(0), plus the first two moments.

use num_complex::Complex64;
use ps_sojourn::transform::{conditional_moments, resolvent_solve, transform_theorem21};
use ps_sojourn::ModelParams;

pub fn main() -> ps_sojourn::Result<()> {
    let params = ModelParams::new(0.8, 10)?;
    let theta = 0.3;
    let closed = transform_theorem21(&params, theta)?;
    let direct = resolvent_solve(&params, Complex64::new(theta, 0.0))?;
    let m1 = conditional_moments(&params, 1)?;
    let m2 = conditional_moments(&params, 2)?;

    println!("rho = 0.8, K = 10, theta = {theta}");
    println!("{:>3} {:>22} {:>22} {:>10} {:>10} {:>10}", "n", "closed form", "resolvent", "rel diff", "E[S]", "Var[S]");
    for n in 0..params.capacity() {
        let a = closed.values[n].re;
        let b = direct.values[n].re;
        println!(
            "{n:>3} {a:>22.16} {b:>22.16} {:>10.1e} {:>10.4} {:>10.4}",
            (a - b).abs() / b,
            m1[n],
            m2[n] - m1[n] * m1[n]
        );
    }

    // complex argument: only the resolvent route
    let z = resolvent_solve(&params, Complex64::new(0.3, 2.0))?;
    println!("p̂_0(0.3 + 2i) = {:.12}", z.values[0]);
    Ok(())
}
