//! The scale-factor ODE `lambda lambda'' = (3/4) lambda'^4` against its
//! asymptote `sqrt(2/3) (T - t)/sqrt(-ln(T - t))`.

use ym_blowup::modulation::{integrate_modulation, ModulationConfig};

fn main() {
    let cfg = ModulationConfig { log_floor: Some(-1e5), samples: 12, ..ModulationConfig::default() };
    let tr = integrate_modulation(1.0, -0.05, &cfg).expect("trajectory");
    println!("T = {:.8}, I = {:.4}", tr.collapse_time.unwrap(), tr.first_integral.unwrap());
    for (tau, ratio) in tr.asymptote_ratios() {
        println!("T - t = {tau:>10.3e}  lambda/asymptote = {ratio:.4}");
    }
    for p in &tr.tail {
        println!("ln lambda = {:>10.1}  ln(T - t) = {:>10.1}  ratio = {:.4}", p.ln_lambda, p.ln_tau, p.ratio);
    }
}
