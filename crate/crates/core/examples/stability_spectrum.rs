//! Unstable modes of `W_1`, `W_2`, `W_3` and the gauge zero modes.

use ym_blowup::selfsim::{build_profile, ShootingConfig};
use ym_blowup::spectrum::{eig_solve, quantization_roots, table_report, zero_mode, zero_mode_grid, EigenConfig};

fn main() {
    let mut rows = Vec::new();
    for n in 1..=3 {
        let p = build_profile(n, &ShootingConfig::default()).expect("profile");
        let modes = eig_solve(&p, &EigenConfig::default()).expect("spectrum");
        for m in &modes {
            println!("n = {n}, k = {}: alpha = {:.6}, nodes = {}, residual = {:.1e}", m.k, m.alpha, m.nodes, m.residual);
        }
        let z = zero_mode(&p, &zero_mode_grid(&p));
        println!("n = {n}: zero mode with {} nodes, residual {:.1e}", z.nodes, z.residual);
        rows.push((n, modes.iter().map(|m| m.alpha).collect()));
    }
    println!();
    print!("{}", table_report(&rows, &quantization_roots(3).expect("roots")));
}
