//! Self-similar blowup in five dimensions: the field collapses onto `W_0`
//! and `|w_rr(t, 0)| (T - t)^2` approaches 16/5.

use ym_blowup::evolve::{advance_with, diagnose, init_gaussian, rescaled_profile_residual, Control, EvolveConfig, GaussianData, Reference};

fn main() {
    let amp = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let cfg = EvolveConfig::default();
    let f = init_gaussian(5, &GaussianData::symmetric(amp, 10.0, 2.0), cfg.base_grid()).expect("data");
    let mut snaps = Vec::new();
    let mut next = 1e2;
    let run = advance_with(f, &cfg, |f, s| {
        if s.curvature.abs() >= next {
            snaps.push(f.clone());
            next *= 100.0;
        }
        Control::Continue
    })
    .expect("evolution");
    let d = diagnose(&run, &cfg);
    println!("{:?} after {} steps, {} levels", d.outcome, run.steps, d.depth);
    let Some(fit) = d.fit else { return };
    println!("T = {:.12} +- {:.1e}, |w_rr| (T - t)^2 -> {:.5}", fit.blowup_time, fit.uncertainty, fit.curvature_coefficient);
    for f in &snaps {
        let res = rescaled_profile_residual(f, fit.blowup_time, Reference::W0).expect("residual");
        println!("T - t = {:.3e}: sup |w - W_0| = {:.2e}", fit.blowup_time - f.time(), res.sup);
    }
}
