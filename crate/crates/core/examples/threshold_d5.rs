//! Threshold between dispersal and blowup for Gaussian data in five
//! dimensions, the approach to `W_1` and the near-critical scaling laws.
//!
//! `cargo run --release --example threshold_d5 -- 1e-4` stops at a coarse
//! bracket. The scaling fits need the default width 1e-6, since the
//! ladder goes down to `1e-5 A*`.

use ym_blowup::critical::{run_campaign, CampaignConfig};

fn main() {
    let width = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cfg = CampaignConfig { width, jobs, ..CampaignConfig::default() };
    let c = run_campaign(&cfg).expect("campaign");
    let (lo, hi) = c.threshold.final_bracket();
    println!("A* in [{lo:.9}, {hi:.9}] after {} runs", c.threshold.runs.len());
    for t in c.marginal.iter().chain([&c.far]) {
        let m = t.minimum().expect("track");
        println!("A = {:.9} ({:?}): closest to W_1 at t = {:.4}, residual {:.4}", t.run.amplitude, t.run.outcome, m.t, m.residual);
    }
    println!("T = {:.5}", c.blowup_time);
    for l in &c.ladder {
        println!(
            "eps = {:.1e} {:+}: t* = {}, peak density {:.3e}",
            l.epsilon,
            l.side,
            l.departure.map_or("-".into(), |d| format!("{d:.5}")),
            l.track.run.peak_density.1
        );
    }
    match &c.departure_fit {
        Ok(f) => println!("T - t* ~ eps^{:.3} (+- {:.3})", f.exponent, f.exponent_err),
        Err(e) => println!("departure fit: {e}"),
    }
    match &c.density_fit {
        Ok(f) => println!("peak density ~ eps^{:.3} (+- {:.3})", f.exponent, f.exponent_err),
        Err(e) => println!("density fit: {e}"),
    }
}
