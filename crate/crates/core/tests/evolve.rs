use ym_blowup::evolve::*;

fn gaussian(dim: u32, amp: f64, cfg: &EvolveConfig) -> RadialField {
    init_gaussian(dim, &GaussianData::symmetric(amp, 10.0, 2.0), cfg.base_grid()).unwrap()
}

#[test]
fn vacuum_is_preserved() {
    let cfg = EvolveConfig { t_max: 2.0, base_cells: 800, ..Default::default() };
    for dim in [4, 5] {
        let run = advance(gaussian(dim, 0.0, &cfg), &cfg).unwrap();
        assert!(run.field.vacuum_deviation() < 1e-12);
        let neg = RadialField::from_fn(dim, cfg.base_grid(), |_| -1.0, |_| 0.0).unwrap();
        let cfg_t = EvolveConfig { dispersal_window: 10.0, ..cfg };
        let run = advance(neg, &cfg_t).unwrap();
        assert_eq!(run.termination, Termination::TimeLimit);
        assert!(run.field.vacuum_deviation() < 1e-12);
        assert!(run.field.w_values().iter().all(|w| (w + 1.0).abs() < 1e-12));
    }
}

#[test]
fn small_data_disperses_and_conserves_energy() {
    // run to t = 10, before the outgoing pulse reaches the boundary
    let cfg = EvolveConfig { t_max: 10.0, dispersal_window: 100.0, ..Default::default() };
    let run = advance(gaussian(5, 0.01, &cfg), &cfg).unwrap();
    assert_eq!(run.termination, Termination::TimeLimit);
    let (_, peak) = run.peak_density();
    let last = run.history.last().unwrap();
    assert!(last.central_density < 1e-6 * peak, "{} vs {peak}", last.central_density);
    let es: Vec<f64> = run.history.iter().filter_map(|s| s.energy).collect();
    let e0 = es[0];
    let drift = es.iter().map(|e| (e / e0 - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-3, "drift {drift}");
    assert!(estimate_blowup_time(&run.history, cfg.fit_decades).is_err());

    let quick = advance(gaussian(5, 0.01, &EvolveConfig::default()), &EvolveConfig::default()).unwrap();
    let d = diagnose(&quick, &EvolveConfig::default());
    assert_eq!(d.outcome, Outcome::Dispersal);
    assert!(d.fit.is_none());
}

#[test]
fn refinement_preserves_energy() {
    let cfg = EvolveConfig { blowup_curvature: 1e8, ..Default::default() };
    let run = advance(gaussian(5, 0.2, &cfg), &cfg).unwrap();
    assert!(run.field.refinements().len() >= 3);
    for r in run.field.refinements() {
        assert!((r.energy_after / r.energy_before - 1.0).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn refine_copies_existing_nodes() {
    let cfg = EvolveConfig { base_cells: 400, ..Default::default() };
    let f = gaussian(5, 0.3, &cfg);
    let g = refine(&f, &cfg).unwrap();
    assert_eq!(g.grid().depth(), 2);
    let (u0, _) = f.regular();
    let (u1, _) = g.regular();
    for (i, x) in f.grid().nodes().iter().enumerate() {
        let j = g.grid().locate(*x);
        assert_eq!(g.grid().nodes()[j], *x);
        assert_eq!(u1[j], u0[i]);
    }
    let capped = EvolveConfig { max_levels: 1, ..cfg };
    assert!(matches!(refine(&f, &capped), Err(EvolveError::DepthExhausted { .. })));
}

#[test]
fn second_order_convergence() {
    // smooth sub-threshold data, no refinement; compare on the coarse nodes
    let solve = |cells: usize| {
        let cfg = EvolveConfig { base_cells: cells, t_max: 1.0, outer_radius: 8.0, refine_points: 1.0, ..Default::default() };
        let run = advance(gaussian(5, 0.1, &cfg), &cfg).unwrap();
        assert_eq!(run.field.grid().depth(), 1);
        let step = cells / 400;
        run.field.w_values().into_iter().step_by(step).collect::<Vec<_>>()
    };
    let (a, b, c) = (solve(400), solve(800), solve(1600));
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn reflection_symmetry() {
    let cfg = EvolveConfig { t_max: 1.0, base_cells: 800, ..Default::default() };
    let d = GaussianData::symmetric(0.3, 10.0, 2.0);
    let plus = advance(RadialField::from_fn(5, cfg.base_grid(), |r| d.w(r), |_| 0.0).unwrap(), &cfg).unwrap();
    let minus = advance(RadialField::from_fn(5, cfg.base_grid(), |r| -d.w(r), |_| 0.0).unwrap(), &cfg).unwrap();
    assert_eq!(minus.field.sign(), -1.0);
    for (p, m) in plus.field.w_values().iter().zip(minus.field.w_values()) {
        assert!((p + m).abs() < 1e-12);
    }
}

#[test]
fn finite_propagation_speed() {
    // narrow pulse at r = 4; after t = 1 nothing has reached r < 2
    let cfg = EvolveConfig { t_max: 1.0, ..Default::default() };
    let d = GaussianData::symmetric(0.05, 60.0, 4.0);
    let f = init_gaussian(5, &d, cfg.base_grid()).unwrap();
    let run = advance(f, &cfg).unwrap();
    let r = run.field.grid().nodes();
    let w = run.field.w_values();
    let inside = r.iter().zip(&w).filter(|(x, _)| **x < 2.0).map(|(_, w)| (w - 1.0).abs()).fold(0.0, f64::max);
    let outside = w.iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max);
    assert!(outside > 0.1);
    assert!(inside < 1e-8 * outside, "{inside}");
}

#[test]
fn invalid_inputs_are_rejected() {
    let cfg = EvolveConfig::default();
    assert!(matches!(init_gaussian(3, &GaussianData::symmetric(0.1, 10.0, 2.0), cfg.base_grid()), Err(EvolveError::Dimension(3))));
    assert!(EvolveConfig { cfl: 1.5, ..cfg }.validate().is_err());
    assert!(EvolveConfig { base_cells: 2, ..cfg }.validate().is_err());
    let coarse = EvolveConfig { base_cells: 16, ..cfg };
    assert!(matches!(
        init_gaussian(5, &GaussianData::symmetric(0.1, 10.0, 2.0), coarse.base_grid()),
        Err(EvolveError::Unresolved { .. })
    ));
}

#[test]
fn observer_can_stop_the_run() {
    let cfg = EvolveConfig { base_cells: 800, ..Default::default() };
    let run = advance_with(gaussian(5, 0.1, &cfg), &cfg, |f, _| if f.time() > 0.25 { Control::Stop } else { Control::Continue }).unwrap();
    assert_eq!(run.termination, Termination::Observer);
    assert!(run.field.time() > 0.25 && run.field.time() < 0.26);
}
