//! The pair G_n, H_n at one real θ, kept in log-scaled form, with the
//! discrete Wronskian residual.

use ps_sojourn::green::{delta_h, green_pair, wronskian_check};
use ps_sojourn::model::root_data_real;
use ps_sojourn::ModelParams;

pub fn main() -> ps_sojourn::Result<()> {
    let params = ModelParams::new(0.8, 40)?;
    let rd = root_data_real(&params, 0.25)?;
    println!("z- = {:.12}, z+ = {:.12}, alpha = {:.12}", rd.z_minus.re, rd.z_plus.re, rd.alpha.re);
    for n in [0, 1, 5, 20, 100, 1000] {
        let gp = green_pair(&rd, n)?;
        println!(
            "n = {n:>5}  ln|G| = {:>14.8}  ln|H| = {:>14.8}  Wronskian residual {:.1e}",
            gp.g().ln_abs(),
            gp.h().ln_abs(),
            wronskian_check(&rd, n)?
        );
    }
    println!("ΔH_40(0.25) = {:.12e}", delta_h(&rd, 40)?.to_f64());
    Ok(())
}
