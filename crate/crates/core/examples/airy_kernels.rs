//! Airy function, its largest zeros and the critical-window root r1(η).

use ps_sojourn::special::{airy, airy_max_root, airy_prime_max_root, solve_r1};

pub fn main() -> ps_sojourn::Result<()> {
    for x in [-5.0, -2.0, 0.0, 1.0, 5.0] {
        let v = airy(x);
        println!("Ai({x:>4}) = {:>22.15e}   Ai'({x:>4}) = {:>22.15e}", v.ai, v.ai_prime);
    }
    println!("largest zero of Ai  : {:.15}", airy_max_root());
    println!("largest zero of Ai' : {:.15}", airy_prime_max_root());
    for eta in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!("r1({eta:>4}) = {:.15}", solve_r1(eta)?);
    }
    Ok(())
}
