//! Roots of the limiting quantization condition and their geometric ratio.

use ym_blowup::spectrum::{asymptotic_ratio, gamma_shift_ratio, quantization_roots, rising_product};

fn main() {
    let k_max = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let roots = quantization_roots(k_max).expect("roots");
    for (k, a) in roots.iter().enumerate() {
        let ratio = if k > 0 { format!("{:.6}", a / roots[k - 1]) } else { String::new() };
        println!("{:>2} {a:>20.8} {ratio}", k + 1);
    }
    println!("e^(2 pi/sqrt 11) = {:.6}", asymptotic_ratio());
    println!("Gamma(z + 4)/Gamma(z) = {:.3e}, z (z+1) (z+2) (z+3) = {:.3e}", gamma_shift_ratio(4), rising_product(4));
}
