//! Shooting parameters `a_n` of the first self-similar profiles, and the
//! closed-form check for `W_0`.

use ym_blowup::selfsim::{build_profile, closed_form_w0, ShootingConfig};

fn main() {
    let cfg = ShootingConfig::default();
    println!("{:>2} {:>14} {:>6} {:>12}", "n", "a_n", "zeros", "x_join");
    for n in 0..=5 {
        let p = build_profile(n, &cfg).expect("profile");
        println!("{n:>2} {:>14.10} {:>6} {:>12.4}", p.a, p.zeros.len(), p.x_join);
        if n == 0 {
            let sup = (0..=490).map(|i| 1.0 + i as f64 / 10.0).map(|x| (p.w(x) - closed_form_w0(x)).abs()).fold(0.0, f64::max);
            println!("   sup |W_0 - (x^2 - 1)/(x^2 + 3/5)| on [1, 50] = {sup:.2e}");
        }
    }
}
