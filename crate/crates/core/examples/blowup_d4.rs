//! Blowup in four dimensions by adiabatic shrinking of the instanton.

use std::f64::consts::PI;
use ym_blowup::evolve::{
    advance_with, cone_energies, diagnose, extract_scale_lambda, init_gaussian, rescaled_profile_residual, Control,
    EvolveConfig, GaussianData, Reference,
};
use ym_blowup::modulation::lambda_asymptote;

fn main() {
    let cfg = EvolveConfig::default();
    let f = init_gaussian(4, &GaussianData::symmetric(0.5, 10.0, 2.0), cfg.base_grid()).expect("data");
    let mut snaps = Vec::new();
    let mut next = 1e4;
    let run = advance_with(f, &cfg, |f, s| {
        if s.curvature.abs() >= next {
            snaps.push(f.clone());
            next *= 100.0;
        }
        Control::Continue
    })
    .expect("evolution");
    let d = diagnose(&run, &cfg);
    let Some(fit) = d.fit else { return println!("{:?}", d.outcome) };
    let t_b = fit.blowup_time;
    println!("T = {t_b:.10}, |w_rr|^(-1/2) ~ (T - t)^{:.3}", fit.exponent);
    println!("{:>10} {:>10} {:>8} {:>8} {:>9} {:>8} {:>10}", "T - t", "lambda", "l/(T-t)", "l/asym", "residual", "E_K", "E_P/16pi2");
    for f in &snaps {
        let tau = t_b - f.time();
        let l = extract_scale_lambda(f).expect("zero of w");
        let res = rescaled_profile_residual(f, t_b, Reference::Instanton { lambda: l, rho_max: tau / l }).expect("residual");
        let (ek, ep) = cone_energies(f, t_b).expect("energies");
        let asym = lambda_asymptote(f.time(), t_b).expect("tau < 1");
        println!(
            "{tau:>10.3e} {l:>10.3e} {:>8.4} {:>8.4} {:>9.4} {ek:>8.3} {:>10.5}",
            l / tau,
            l / asym,
            res.sup,
            ep / (16.0 * PI * PI)
        );
    }
}
