//! The D=4 instanton `W_S(r) = (1 - r^2)/(1 + r^2)`, its linearization, and
//! the modulation equation `lambda lambda'' = (3/4) lambda'^4` for the scale of
//! a shrinking instanton.
//!
//! The modulation equation has the first integral
//! `I = 1/lambda'^2 + (3/2) ln lambda`, so along a collapsing orbit
//! `lambda' = -(I - 1.5 ln lambda)^{-1/2}`. The asymptotic law
//! `lambda ~ sqrt(2/3) (T - t)/sqrt(-ln(T - t))` only takes over once
//! `1.5 |ln lambda|` dominates `I`; for moderate initial speeds that is far
//! below any representable `lambda`, so the collapse can be continued in the
//! variable `sigma = -ln lambda`, where `q = -lambda'` obeys
//! `dq/dsigma = -(3/4) q^3`.

use crate::odeint::{integrate_with_events, Direction, Event, IntegratorConfig, OdeError};
use crate::stencil::fornberg_weights;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid too coarse or malformed: {0}")]
    Grid(String),
    #[error("T - t = {0} is outside (0, 1)")]
    OutsideAsymptoticRange(f64),
    #[error("lambda' = {0} > 0 does not collapse")]
    NotCollapsing(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// `W_S(r / lambda)`.
pub fn instanton(r: f64, lambda: f64) -> f64 {
    let s = r / lambda;
    if s > 1e8 {
        // avoid (1 - s^2)/(1 + s^2) rounding when s^2 overflows precision
        return -1.0 + 2.0 / (1.0 + s * s);
    }
    let s2 = s * s;
    (1.0 - s2) / (1.0 + s2)
}

/// `W_S'(r)`.
pub fn instanton_derivative(r: f64) -> f64 {
    let d = 1.0 + r * r;
    -4.0 * r / (d * d)
}

/// `W_S''(r)`.
pub fn instanton_second_derivative(r: f64) -> f64 {
    let d = 1.0 + r * r;
    (12.0 * r * r - 4.0) / (d * d * d)
}

/// Scaling zero mode `v0 = 4 r^2/(1 + r^2)^2 = -r W_S'(r)`, the derivative of
/// `W_S(r/lambda)` in `lambda` at `lambda = 1`.
pub fn instanton_zero_mode(r: f64) -> f64 {
    let d = 1.0 + r * r;
    4.0 * r * r / (d * d)
}

/// Potential of the linearized operator, `-2 (1 - 3 W_S^2)/r^2`.
pub fn instanton_potential(r: f64) -> f64 {
    let w = instanton(r, 1.0);
    -2.0 * (1.0 - 3.0 * w * w) / (r * r)
}

/// Static residual of the D=4 wave equation, `w'' + w'/r + 2 w (1 - w^2)/r^2`,
/// for `W_S(r/lambda)`.
pub fn static_residual(r: f64, lambda: f64) -> f64 {
    let s = r / lambda;
    let w = instanton(r, lambda);
    let wp = instanton_derivative(s) / lambda;
    let wpp = instanton_second_derivative(s) / (lambda * lambda);
    wpp + wp / r + 2.0 * w * (1.0 - w * w) / (r * r)
}

fn check_grid(r: &[f64], v: &[f64]) -> Result<(), ModulationError> {
    if r.len() != v.len() {
        return Err(ModulationError::Grid("length mismatch".into()));
    }
    if r.len() < 5 {
        return Err(ModulationError::Grid(format!("need at least 5 nodes, got {}", r.len())));
    }
    if !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModulationError::Grid("nodes must be positive and increasing".into()));
    }
    Ok(())
}

/// `L v = -v'' - v'/r + V v` at the interior nodes `r[2..n-2]`, using
/// five-point stencils (fourth order on smooth grids).
///
/// The returned vector has `r.len() - 4` entries.
pub fn apply_linear_operator(r: &[f64], v: &[f64]) -> Result<Vec<f64>, ModulationError> {
    check_grid(r, v)?;
    Ok((2..r.len() - 2)
        .map(|i| {
            let w = fornberg_weights(r[i], &r[i - 2..=i + 2], 2);
            let d1: f64 = w[1].iter().zip(&v[i - 2..=i + 2]).map(|(c, f)| c * f).sum();
            let d2: f64 = w[2].iter().zip(&v[i - 2..=i + 2]).map(|(c, f)| c * f).sum();
            -d2 - d1 / r[i] + instanton_potential(r[i]) * v[i]
        })
        .collect())
}

/// `N(v) = 6 W_S v^2/eta^2 + 2 v^3/eta^2`, pointwise.
pub fn nonlinear_term(eta: &[f64], v: &[f64]) -> Result<Vec<f64>, ModulationError> {
    if eta.len() != v.len() {
        return Err(ModulationError::Grid("length mismatch".into()));
    }
    Ok(eta
        .iter()
        .zip(v)
        .map(|(&e, &v)| (6.0 * instanton(e, 1.0) * v * v + 2.0 * v * v * v) / (e * e))
        .collect())
}

/// `sqrt(2/3) (T - t)/sqrt(-ln(T - t))`, defined for `0 < T - t < 1`.
pub fn lambda_asymptote(t: f64, collapse_time: f64) -> Result<f64, ModulationError> {
    let tau = collapse_time - t;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ModulationError::OutsideAsymptoticRange(tau));
    }
    Ok(log_lambda_asymptote(tau.ln())?.exp())
}

/// Logarithm of the asymptote in terms of `ln(T - t) < 0`.
pub fn log_lambda_asymptote(ln_tau: f64) -> Result<f64, ModulationError> {
    if !(ln_tau < 0.0) {
        return Err(ModulationError::OutsideAsymptoticRange(ln_tau.exp()));
    }
    Ok(0.5 * (2.0f64 / 3.0).ln() + ln_tau - 0.5 * (-ln_tau).ln())
}

/// `1/lambda'^2 + 1.5 ln lambda`, conserved by the modulation equation.
pub fn first_integral(lambda: f64, lambda_dot: f64) -> f64 {
    1.0 / (lambda_dot * lambda_dot) + 1.5 * lambda.ln()
}

/// Remaining collapse time divided by `lambda`, given `c = 1/lambda'^2`:
/// `int_0^inf e^{-u} sqrt(c + 1.5 u) du`.
fn scaled_time_to_collapse(c: f64) -> f64 {
    // after u = s^2 the integrand is smooth; truncate where e^{-u} < 1e-20
    let s_max = 46f64.sqrt();
    let n = 4000;
    let h = s_max / n as f64;
    let f = |s: f64| 2.0 * s * (-s * s).exp() * (c + 1.5 * s * s).sqrt();
    let mut acc = f(0.0) + f(s_max);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationState {
    pub t: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
}

/// A point of the collapse continued in `sigma = -ln lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTailPoint {
    pub ln_lambda: f64,
    pub lambda_dot: f64,
    /// `ln(T - t)`.
    pub ln_tau: f64,
    /// `lambda / asymptote`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationConfig {
    /// Stop the time integration once `lambda < floor * lambda0`.
    pub floor: f64,
    /// Stop at this time if the floor is not reached.
    pub horizon: f64,
    /// Continue in `ln lambda` down to this value; `None` skips the tail.
    pub log_floor: Option<f64>,
    pub samples: usize,
    pub rtol: f64,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self { floor: 1e-8, horizon: 1e6, log_floor: None, samples: 400, rtol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationTrajectory {
    pub initial: ModulationState,
    /// Samples in time, ending at the floor (or horizon).
    pub states: Vec<ModulationState>,
    /// `None` for the static case and for runs stopped by the horizon.
    pub collapse_time: Option<f64>,
    pub first_integral: Option<f64>,
    pub tail: Vec<LogTailPoint>,
}

impl ModulationTrajectory {
    pub fn last(&self) -> &ModulationState {
        self.states.last().expect("trajectory is never empty")
    }

    /// `lambda / asymptote` at every sample with `0 < T - t < 1`.
    pub fn asymptote_ratios(&self) -> Vec<(f64, f64)> {
        let Some(big_t) = self.collapse_time else { return Vec::new() };
        self.states
            .iter()
            .filter_map(|s| lambda_asymptote(s.t, big_t).ok().map(|a| (big_t - s.t, s.lambda / a)))
            .collect()
    }

    /// Ratio at the deepest point reached, the log tail if present.
    pub fn terminal_ratio(&self) -> Option<f64> {
        if let Some(p) = self.tail.last() {
            return Some(p.ratio);
        }
        self.asymptote_ratios().last().map(|r| r.1)
    }
}

/// Integrates the modulation equation from `(lambda0, lambda_dot0)`.
///
/// `lambda_dot0 = 0` is the static orbit; positive speeds are rejected.
pub fn integrate_modulation(
    lambda0: f64,
    lambda_dot0: f64,
    cfg: &ModulationConfig,
) -> Result<ModulationTrajectory, ModulationError> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(ModulationError::InvalidArgument(format!("lambda0 = {lambda0}")));
    }
    if !(cfg.floor > 0.0 && cfg.floor < 1.0 && cfg.horizon > 0.0 && cfg.samples >= 2) {
        return Err(ModulationError::InvalidArgument("bad modulation config".into()));
    }
    if lambda_dot0 > 0.0 || !lambda_dot0.is_finite() {
        return Err(ModulationError::NotCollapsing(lambda_dot0));
    }
    let initial = ModulationState { t: 0.0, lambda: lambda0, lambda_dot: lambda_dot0 };
    if lambda_dot0 == 0.0 {
        let states = (0..cfg.samples)
            .map(|i| ModulationState { t: cfg.horizon * i as f64 / (cfg.samples - 1) as f64, ..initial })
            .collect();
        return Ok(ModulationTrajectory { initial, states, collapse_time: None, first_integral: None, tail: vec![] });
    }

    let floor = cfg.floor * lambda0;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = 0.75 * y[1].powi(4) / y[0];
    };
    let events = [Event::new(move |_t, y: &[f64]| y[0] - floor).terminal().direction(Direction::Falling)];
    let icfg = IntegratorConfig {
        rtol: cfg.rtol,
        // lambda spans many decades; keep the control relative
        atol: 1e-6 * cfg.rtol * floor.min(lambda_dot0.abs()),
        min_step: 1e-30,
        ..IntegratorConfig::default()
    };
    let sol = integrate_with_events(rhs, &[lambda0, lambda_dot0], (0.0, cfg.horizon), &events, &icfg)?;
    let t_end = sol.t_end();
    // geometric sampling in the remaining time, laid out from the first
    // integral of the initial state so that it scales exactly with lambda0
    let mut times: Vec<f64> = Vec::with_capacity(cfg.samples);
    let reached_floor = !sol.events.is_empty();
    if reached_floor {
        let big_t = lambda0 * scaled_time_to_collapse(1.0 / (lambda_dot0 * lambda_dot0));
        let q_floor2 = 1.0 / (first_integral(lambda0, lambda_dot0) - 1.5 * floor.ln());
        let tau_end = floor * scaled_time_to_collapse(1.0 / q_floor2);
        let (a, b) = (big_t.ln(), tau_end.ln());
        for i in 0..cfg.samples {
            let tau = (a + (b - a) * i as f64 / (cfg.samples - 1) as f64).exp();
            times.push((big_t - tau).clamp(0.0, t_end));
        }
        times[0] = 0.0;
    } else {
        times = (0..cfg.samples).map(|i| t_end * i as f64 / (cfg.samples - 1) as f64).collect();
    }
    *times.last_mut().unwrap() = t_end;
    times.dedup();
    let states: Vec<ModulationState> = times
        .iter()
        .map(|&t| {
            let y = sol.eval(t).expect("sample inside the solution");
            ModulationState { t, lambda: y[0], lambda_dot: y[1] }
        })
        .collect();
    let first = first_integral(lambda0, lambda_dot0);
    if !reached_floor {
        return Ok(ModulationTrajectory { initial, states, collapse_time: None, first_integral: Some(first), tail: vec![] });
    }
    let last = *states.last().unwrap();
    let collapse_time = last.t + last.lambda * scaled_time_to_collapse(1.0 / (last.lambda_dot * last.lambda_dot));
    let tail = match cfg.log_floor {
        Some(lf) if lf < last.lambda.ln() => log_tail(last.lambda.ln(), -last.lambda_dot, lf, cfg)?,
        _ => Vec::new(),
    };
    Ok(ModulationTrajectory { initial, states, collapse_time: Some(collapse_time), first_integral: Some(first), tail })
}

fn log_tail(ln_start: f64, q0: f64, ln_end: f64, cfg: &ModulationConfig) -> Result<Vec<LogTailPoint>, ModulationError> {
    let (s0, s1) = (-ln_start, -ln_end);
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| dy[0] = -0.75 * y[0].powi(3);
    let icfg = IntegratorConfig { rtol: cfg.rtol, atol: 1e-6 * cfg.rtol * q0, ..IntegratorConfig::default() };
    let sol = integrate_with_events(rhs, &[q0], (s0, s1), &[], &icfg)?;
    let (a, b) = (s0.ln(), s1.ln());
    let mut out = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let s = if i + 1 == cfg.samples { s1 } else { (a + (b - a) * i as f64 / (cfg.samples - 1) as f64).exp() };
        let q = sol.eval(s.clamp(s0, s1)).expect("inside the tail")[0];
        let ln_tau = -s + scaled_time_to_collapse(1.0 / (q * q)).ln();
        let ratio = (-s - log_lambda_asymptote(ln_tau)?).exp();
        out.push(LogTailPoint { ln_lambda: -s, lambda_dot: -q, ln_tau, ratio });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instanton_endpoints() {
        assert_eq!(instanton(0.0, 1.0), 1.0);
        assert_eq!(instanton(1.0, 1.0), 0.0);
        assert!((instanton(1e8, 1.0) + 1.0).abs() < 1e-15);
        assert!((instanton(1e12, 1.0) + 1.0).abs() < 1e-15);
        assert_eq!(instanton(3.0, 3.0), 0.0);
    }

    #[test]
    fn static_residual_vanishes_on_orbit() {
        for lambda in [1.0, 3.0] {
            for r in [0.5, 1.0, 2.0] {
                assert!(static_residual(r, lambda).abs() < 1e-12, "r={r} lambda={lambda}");
            }
        }
    }

    #[test]
    fn zero_mode_is_scaling_derivative() {
        let h: f64 = 1e-3;
        let fd = (instanton(1.0, 1.0 + h) - instanton(1.0, 1.0 - h)) / (2.0 * h);
        assert!((fd - instanton_zero_mode(1.0)).abs() < h * h);
        for i in 1..1000 {
            let r = i as f64 * 0.05;
            assert!(instanton_zero_mode(r) > 0.0);
            assert!((instanton_zero_mode(r) - r * instanton_derivative(r).abs()).abs() < 1e-15);
        }
        assert_eq!(instanton_zero_mode(0.0), 0.0);
        assert!(instanton_zero_mode(1e6) < 1e-11);
    }

    #[test]
    fn potential_values() {
        assert!((instanton_potential(1.0) + 2.0).abs() < 1e-15);
        // V sees W_S only through W_S^2
        for r in [0.3, 0.7, 2.5] {
            let w = instanton(r, 1.0);
            let flipped = -2.0 * (1.0 - 3.0 * (-w) * (-w)) / (r * r);
            assert_eq!(instanton_potential(r), flipped);
        }
    }

    #[test]
    fn zero_mode_in_kernel() {
        let r: Vec<f64> = (1..=4000).map(|i| i as f64 * 2.5e-3).collect();
        let v: Vec<f64> = r.iter().map(|&x| instanton_zero_mode(x)).collect();
        let lv = apply_linear_operator(&r, &v).unwrap();
        let sup = lv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(sup < 1e-6, "sup |L v0| = {sup:e}");
        assert!(apply_linear_operator(&r[..4], &v[..4]).is_err());
        assert!(apply_linear_operator(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0; 5]).is_err());
    }

    #[test]
    fn nonlinear_term_limits() {
        let eta = [0.3, 1.0, 2.0];
        assert!(nonlinear_term(&eta, &[0.0; 3]).unwrap().iter().all(|x| *x == 0.0));
        let v = [0.7, -0.2, 1.3];
        let eps = 1e-4;
        let small: Vec<f64> = v.iter().map(|x| eps * x).collect();
        let n = nonlinear_term(&eta, &small).unwrap();
        for i in 0..3 {
            if eta[i] == 1.0 {
                continue; // W_S(1) = 0, leading term vanishes
            }
            let lead = 6.0 * instanton(eta[i], 1.0) * v[i] * v[i] / (eta[i] * eta[i]);
            assert!((n[i] / (eps * eps) / lead - 1.0).abs() < 1e-3);
        }
    }

    // w = W_S + v with v = c r^2 exp(-k r^2): the right side of the wave
    // equation evaluated directly equals -(L v + N(v)).
    #[test]
    fn decomposition_consistency() {
        for (c, k) in [(0.3f64, 1.0f64), (-0.8, 0.4), (1.5, 2.2)] {
            for r in [0.2f64, 0.9, 1.7, 3.0] {
                let e = (-k * r * r).exp();
                let v = c * r * r * e;
                let vp = c * e * (2.0 * r - 2.0 * k * r.powi(3));
                let vpp = c * e * (2.0 - 10.0 * k * r * r + 4.0 * k * k * r.powi(4));
                let w = instanton(r, 1.0) + v;
                let wp = instanton_derivative(r) + vp;
                let wpp = instanton_second_derivative(r) + vpp;
                let full = wpp + wp / r + 2.0 * w * (1.0 - w * w) / (r * r);
                let lv = -vpp - vp / r + instanton_potential(r) * v;
                let nv = nonlinear_term(&[r], &[v]).unwrap()[0];
                assert!((full + lv + nv).abs() < 1e-12 * (1.0 + full.abs()), "{full} {lv} {nv}");
            }
        }
    }

    #[test]
    fn asymptote_values() {
        let v = lambda_asymptote(1.0 - 1e-6, 1.0).unwrap() / 1e-6;
        let oracle = (2.0f64 / 3.0).sqrt() / (6.0 * 10f64.ln()).sqrt();
        assert!((v - oracle).abs() < 1e-9 && (v - 0.2196).abs() < 1e-4);
        let e1 = (-1.0f64).exp();
        let v = lambda_asymptote(0.0, e1).unwrap();
        assert!((v - (2.0f64 / 3.0).sqrt() * e1).abs() < 1e-15);
        assert!(lambda_asymptote(0.0, 1.0).is_err());
        assert!(lambda_asymptote(1.0, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let a = lambda_asymptote(i as f64 * 0.01, 1.0 + 1e-9).unwrap();
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn quadrature_matches_closed_cases() {
        // c large: sqrt(c + 1.5u) ~ sqrt(c) (1 + 0.75 u/c), integral sqrt(c) + 0.75/sqrt(c)
        let c = 1e8;
        assert!((scaled_time_to_collapse(c) / (c.sqrt() + 0.75 / c.sqrt()) - 1.0).abs() < 1e-12);
        // c = 0: 1.5^{1/2} Gamma(3/2)
        let exact = 1.5f64.sqrt() * std::f64::consts::PI.sqrt() / 2.0;
        assert!((scaled_time_to_collapse(0.0) - exact).abs() < 1e-6);
    }

    #[test]
    fn static_orbit() {
        let tr = integrate_modulation(2.0, 0.0, &ModulationConfig { horizon: 10.0, ..Default::default() }).unwrap();
        assert!(tr.states.iter().all(|s| s.lambda == 2.0 && s.lambda_dot == 0.0));
        assert!(tr.collapse_time.is_none());
        assert!(matches!(integrate_modulation(1.0, 0.1, &Default::default()), Err(ModulationError::NotCollapsing(_))));
    }

    #[test]
    fn collapse_conserves_first_integral() {
        let tr = integrate_modulation(1.0, -0.05, &ModulationConfig::default()).unwrap();
        let i0 = tr.first_integral.unwrap();
        for s in &tr.states {
            assert!((first_integral(s.lambda, s.lambda_dot) / i0 - 1.0).abs() < 1e-9);
        }
        assert!((tr.last().lambda / 1e-8 - 1.0).abs() < 1e-5);
        // lambda' increases toward 0- along the collapse
        assert!(tr.states.windows(2).all(|w| w[1].lambda_dot >= w[0].lambda_dot && w[1].lambda_dot < 0.0));
        let big_t = tr.collapse_time.unwrap();
        assert!(big_t > tr.last().t && big_t < 21.0);
    }

    #[test]
    fn homogeneity() {
        let cfg = ModulationConfig::default();
        let a = integrate_modulation(1.0, -0.3, &cfg).unwrap();
        let c = 3.0;
        let b = integrate_modulation(c, -0.3, &cfg).unwrap();
        assert!((b.collapse_time.unwrap() / (c * a.collapse_time.unwrap()) - 1.0).abs() < 1e-9);
        let n = a.states.len() - 1;
        assert_eq!(n, b.states.len() - 1);
        for (sa, sb) in a.states[..n].iter().zip(&b.states[..n]) {
            assert!((sb.t - c * sa.t).abs() <= 1e-12 * sb.t.max(1.0));
            // absolute in units of lambda0: near the floor lambda is a small
            // difference of order-one quantities
            assert!((sb.lambda - c * sa.lambda).abs() < 1e-10 * c, "{sa:?} {sb:?}");
            assert!((sb.lambda_dot / sa.lambda_dot - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn log_tail_reaches_asymptote() {
        let cfg = ModulationConfig { log_floor: Some(-1e5), ..Default::default() };
        let tr = integrate_modulation(1.0, -0.05, &cfg).unwrap();
        let r = tr.terminal_ratio().unwrap();
        assert!((r - 1.0).abs() < 0.02, "ratio {r}");
        // the tail continues the time-domain trajectory without a jump
        let last = tr.last();
        let first = tr.tail[0];
        assert!((first.lambda_dot - last.lambda_dot).abs() < 1e-12);
        assert!((first.ln_tau - (tr.collapse_time.unwrap() - last.t).ln()).abs() < 1e-6);
        // at the time-domain floor the asymptote is still far off
        let ratios = tr.asymptote_ratios();
        assert!(ratios.last().unwrap().1 < 0.5);
    }
}
