//! Samples `W_n(x)` and `W_n(eta)`, `eta = 1/x`, for n = 0..3 as columns of
//! plain text, together with the future-cone extension past `eta = 1`.

use ym_blowup::selfsim::{build_profile, ShootingConfig};

fn main() {
    let profiles: Vec<_> = (0..4).map(|n| build_profile(n, &ShootingConfig::default()).expect("profile")).collect();
    println!("# eta W0 W1 W2 W3");
    for i in 0..=60 {
        let eta = 1.2 * i as f64 / 60.0;
        let row: Vec<String> =
            profiles.iter().map(|p| p.w_eta(eta).map_or("nan".into(), |w| format!("{w:.8}"))).collect();
        println!("{eta:.3} {}", row.join(" "));
    }
    for p in &profiles {
        if let Some(fc) = &p.future_cone {
            println!("# n = {}: c = {:.6}, log coefficient = {:.6} (expected {:.6})", p.n, fc.c, fc.log_coefficient, fc.predicted_log_coefficient);
        }
    }
}
