//! Linear stability of the self-similar profiles.
//!
//! Perturbations `e^{alpha tau} u(rho) / sinh(rho)` of `W_n` in the similarity
//! frame satisfy the radial Schrodinger problem
//! `-u'' + V_n u = -alpha^2 u` on `rho in (0, inf)`, with `coth(rho) = x` and
//! `V_n = -3 (1 - 3 W_n^2) / sinh^2(rho)`. Admissible solutions behave like
//! `rho^3` at the origin and `e^{-alpha rho}` at infinity. Eigenvalues are
//! found by double shooting on the sign of the matching Wronskian.

pub mod lgamma;
pub mod quantization;

pub use lgamma::{log_gamma_complex, PoleError};
pub use quantization::{
    asymptotic_ratio, gamma_shift_ratio, quantization_condition, quantization_roots, rising_product, RootError,
};

use crate::odeint::{integrate_adaptive, IntegratorConfig, OdeError, OdeSolution, StateBound, Termination};
use crate::selfsim::SimilarityProfile;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("degenerate matching Wronskian at alpha = {0}")]
    DegenerateWronskian(f64),
    #[error("bisection for mode near alpha = {0} did not converge")]
    Bracket(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// `rho` with `coth(rho) = x`, for `x > 1`.
pub fn rho_of_x(x: f64) -> Result<f64, SpectrumError> {
    if !(x > 1.0) {
        return Err(SpectrumError::Domain(format!("x = {x} must exceed 1")));
    }
    Ok((1.0 / x).atanh())
}

/// `x = coth(rho)`, for `rho > 0`.
pub fn x_of_rho(rho: f64) -> Result<f64, SpectrumError> {
    Ok(1.0 + x_minus_one(rho)?)
}

/// `coth(rho) - 1` without cancellation at large `rho`.
pub fn x_minus_one(rho: f64) -> Result<f64, SpectrumError> {
    if !(rho > 0.0) {
        return Err(SpectrumError::Domain(format!("rho = {rho} must be positive")));
    }
    Ok(2.0 / (2.0 * rho).exp_m1())
}

/// Which potential to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Profile(&'a SimilarityProfile),
    /// The `n -> inf` limit `-3 / sinh^2(rho)`.
    Limiting,
}

fn profile_potential(p: &SimilarityProfile, rho: f64) -> f64 {
    let y = 2.0 / (2.0 * rho).exp_m1();
    let w = p.eval_offset(y).0;
    let s = rho.sinh();
    -3.0 * (1.0 - 3.0 * w * w) / (s * s)
}

pub fn potential(source: Source<'_>, rho: f64) -> Result<f64, SpectrumError> {
    if !(rho > 0.0) {
        return Err(SpectrumError::Domain(format!("rho = {rho} must be positive")));
    }
    Ok(match source {
        Source::Limiting => -3.0 / rho.sinh().powi(2),
        Source::Profile(p) => profile_potential(p, rho),
    })
}

/// Grid uniform in `ln(rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self, SpectrumError> {
        if !(lo > 0.0 && hi > lo && count >= 5) {
            return Err(SpectrumError::Domain("need 0 < lo < hi and at least 5 points".into()));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn step(&self) -> f64 {
        (self.hi / self.lo).ln() / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        let l = self.lo.ln();
        (0..self.count).map(|i| (l + h * i as f64).exp()).collect()
    }
}

fn sign_changes(u: &[f64]) -> usize {
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in u {
        if v.abs() <= 1e-10 * scale {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            count += 1;
        }
        last = v.signum();
    }
    count
}

/// `-u'' + V u` at the interior nodes of a log grid (fourth-order stencils),
/// returned as `sup |residual| / sup |V u|`.
pub fn schrodinger_residual(grid: &LogGrid, u: &[f64], v: &[f64], alpha: f64) -> f64 {
    let h = grid.step();
    let rho = grid.points();
    let mut sup_r = 0.0f64;
    let mut sup_vu = 0.0f64;
    for i in 2..u.len() - 2 {
        let us = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
        let uss = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h * h);
        let urr = (uss - us) / (rho[i] * rho[i]);
        let vu = (v[i] + alpha * alpha) * u[i];
        sup_r = sup_r.max((vu - urr).abs());
        sup_vu = sup_vu.max(vu.abs());
    }
    if sup_vu == 0.0 {
        sup_r
    } else {
        sup_r / sup_vu
    }
}

/// The time-translation zero mode `u_0 = sinh^2(rho) dW/drho = -W'(x)`.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    pub n: usize,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub nodes: usize,
    /// Relative residual of `-u'' + V u` on the grid.
    pub residual: f64,
    /// Limit of `u_0` as `rho -> inf`, equal to `-a_n`.
    pub limit: f64,
}

/// Samples the zero mode of `p` on `grid` and measures its residual.
pub fn zero_mode(p: &SimilarityProfile, grid: &LogGrid) -> ZeroMode {
    let rho = grid.points();
    let u: Vec<f64> = rho.iter().map(|&r| -p.eval_offset(2.0 / (2.0 * r).exp_m1()).1).collect();
    let v: Vec<f64> = rho.iter().map(|&r| profile_potential(p, r)).collect();
    let residual = schrodinger_residual(grid, &u, &v, 0.0);
    ZeroMode { n: p.n, nodes: sign_changes(&u), residual, limit: -p.a, rho, u }
}

/// Default grid for zero modes: from `1/x_max` of the profile to `rho = 20`.
///
/// The spacing is kept coarse enough that the second differences are not
/// dominated by the integrator's dense-output noise.
pub fn zero_mode_grid(p: &SimilarityProfile) -> LogGrid {
    let lo = 1.0 / p.x_max;
    let count = ((20.0 / lo).ln() / 0.01).ceil() as usize + 1;
    LogGrid { lo, hi: 20.0, count }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub alpha_min: f64,
    /// Upper end of the search in alpha.
    pub alpha_cap: f64,
    pub scan_per_decade: usize,
    /// Upper bound for the inner shooting point.
    pub rho_min_cap: f64,
    pub rho_max: f64,
    pub rtol: f64,
    pub k_max: Option<usize>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            alpha_min: 0.5,
            alpha_cap: 2000.0,
            scan_per_decade: 40,
            rho_min_cap: 1e-3,
            rho_max: 20.0,
            rtol: 1e-11,
            k_max: None,
        }
    }
}

/// One bound state.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectralMode {
    pub n: usize,
    /// Position in ascending alpha, starting at 1.
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub nodes: usize,
    /// Normalised matching Wronskian at the converged alpha.
    pub residual: f64,
    pub rho_min: f64,
    pub rho_fit: f64,
    pub rho_max: f64,
    /// Unit-norm eigenfunction on `grid`.
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub grid: Option<LogGrid>,
}

#[derive(Debug, Clone, Copy)]
struct Setup {
    rho_min: f64,
    rho_fit: f64,
    rho_max: f64,
}

struct Shooter<'a> {
    p: &'a SimilarityProfile,
    cfg: EigenConfig,
}

struct Shot {
    left: Piecewise,
    right: Piecewise,
    wronskian: f64,
}

/// A solution integrated in pieces; piece `i` holds the true solution
/// divided by `exp(log_scale[i])`.
struct Piecewise {
    pieces: Vec<OdeSolution>,
    log_scale: Vec<f64>,
}

const RESCALE_AT: f64 = 1e150;

impl Piecewise {
    fn integrate<F>(rhs: F, y0: &[f64], span: (f64, f64), ic: &IntegratorConfig) -> Result<Self, OdeError>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let mut ic = *ic;
        ic.state_bound = Some(StateBound { component: 0, limit: RESCALE_AT });
        let mut pieces = Vec::new();
        let mut log_scale = Vec::new();
        let mut y = y0.to_vec();
        let mut t = span.0;
        let mut ls = 0.0;
        loop {
            let sol = integrate_adaptive(&rhs, &y, (t, span.1), &ic)?;
            let term = sol.termination;
            t = sol.t_end();
            let last = sol.last_state().to_vec();
            pieces.push(sol);
            log_scale.push(ls);
            match term {
                Termination::StateBound if t != span.1 => {
                    let norm = last[0].hypot(last[1]);
                    y = last.iter().map(|v| v / norm).collect();
                    ls += norm.ln();
                }
                Termination::ReachedEnd | Termination::StateBound => break,
                _ => return Err(OdeError::StepSizeUnderflow { t, h: 0.0 }),
            }
        }
        Ok(Self { pieces, log_scale })
    }

    fn last_state(&self) -> &[f64] {
        self.pieces.last().unwrap().last_state()
    }

    fn first_state(&self) -> &[f64] {
        &self.pieces[0].ys[0]
    }

    fn final_log_scale(&self) -> f64 {
        *self.log_scale.last().unwrap()
    }

    /// Value at `t` in units of the final piece.
    fn eval(&self, t: f64) -> f64 {
        let last = self.final_log_scale();
        for (p, ls) in self.pieces.iter().zip(&self.log_scale) {
            if let Some(y) = p.eval(t) {
                return y[0] * (ls - last).exp();
            }
        }
        f64::NAN
    }
}

impl<'a> Shooter<'a> {
    fn v(&self, rho: f64) -> f64 {
        profile_potential(self.p, rho)
    }

    fn setup(&self, alpha: f64) -> Setup {
        // keep the rho^2 correction of the inner series below 1e-4
        let depth = 2.0 + 18.0 * self.p.b + alpha * alpha;
        let rho_min = self.cfg.rho_min_cap.min(0.01 / depth.sqrt());
        // outermost classical turning point
        let m = 800;
        let (lo, hi) = (rho_min.ln(), 10f64.ln());
        let mut rho_fit = None;
        let mut vmin = (f64::INFINITY, 1.0);
        for i in (0..=m).rev() {
            let r = (lo + (hi - lo) * i as f64 / m as f64).exp();
            let v = self.v(r);
            if v < vmin.0 {
                vmin = (v, r);
            }
            if rho_fit.is_none() && v + alpha * alpha < 0.0 {
                rho_fit = Some(r);
            }
        }
        let rho_fit = rho_fit.unwrap_or(vmin.1);
        let rho_max = self.cfg.rho_max.min(rho_fit + 40.0 / alpha);
        Setup { rho_min, rho_fit, rho_max }
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rtol: self.cfg.rtol,
            atol: 1e-300,
            min_step: 1e-18,
            max_steps: 1_000_000,
            ..IntegratorConfig::default()
        }
    }

    fn shoot(&self, alpha: f64, s: &Setup) -> Result<Shot, SpectrumError> {
        let a2 = alpha * alpha;
        let rhs = |rho: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = (self.v(rho) + a2) * y[0];
        };
        let r0 = s.rho_min;
        let v0 = self.v(r0) - 6.0 / (r0 * r0);
        let c = (v0 + a2) / 14.0;
        // rho^3 (1 + c rho^2), divided by rho_min^3
        let yl = [1.0 + c * r0 * r0, (3.0 + 5.0 * c * r0 * r0) / r0];
        let ic = self.integrator();
        let left = Piecewise::integrate(rhs, &yl, (r0, s.rho_fit), &ic)?;
        let right = Piecewise::integrate(rhs, &[1.0, -alpha], (s.rho_max, s.rho_fit), &ic)?;
        let l = left.last_state();
        let r = right.last_state();
        let nl = l[0].hypot(l[1]);
        let nr = r[0].hypot(r[1]);
        let w = (l[0] * r[1] - l[1] * r[0]) / (nl * nr);
        if !w.is_finite() || nl == 0.0 || nr == 0.0 {
            return Err(SpectrumError::DegenerateWronskian(alpha));
        }
        Ok(Shot { left, right, wronskian: w })
    }

    fn wronskian(&self, alpha: f64) -> Result<f64, SpectrumError> {
        let s = self.setup(alpha);
        Ok(self.shoot(alpha, &s)?.wronskian)
    }
}

fn eigenfunction(shot: &Shot, s: &Setup, alpha: f64, grid: &LogGrid) -> Vec<f64> {
    let l = shot.left.last_state();
    let r = shot.right.last_state();
    // match values, or slopes when the value sits on a node
    let (scale_l, scale_r) = if l[0].abs() >= l[1].abs() * 1e-6 { (r[0] / l[0], 1.0) } else { (r[1] / l[1], 1.0) };
    let left_start = shot.left.first_state()[0] * (-shot.left.final_log_scale()).exp() * scale_l;
    let right_end = shot.right.first_state()[0] * (-shot.right.final_log_scale()).exp() * scale_r;
    let mut u: Vec<f64> = grid
        .points()
        .into_iter()
        .map(|rho| {
            if rho < s.rho_min {
                left_start * (rho / s.rho_min).powi(3)
            } else if rho <= s.rho_fit {
                shot.left.eval(rho) * scale_l
            } else if rho <= s.rho_max {
                shot.right.eval(rho) * scale_r
            } else {
                right_end * (-alpha * (rho - s.rho_max)).exp()
            }
        })
        .collect();
    let norm = log_grid_integral(grid, &u.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    // positive near the origin
    let sign = u.iter().find(|v| v.abs() > 1e-8 * norm).map_or(1.0, |v| v.signum());
    for v in &mut u {
        *v *= sign / norm;
    }
    u
}

/// Trapezoid rule for `int f drho` on a log grid.
pub fn log_grid_integral(grid: &LogGrid, f: &[f64]) -> f64 {
    let h = grid.step();
    let rho = grid.points();
    let g: Vec<f64> = f.iter().zip(&rho).map(|(a, r)| a * r).collect();
    let n = g.len();
    h * (0.5 * (g[0] + g[n - 1]) + g[1..n - 1].iter().sum::<f64>())
}

/// Bound states of `V_n` with `alpha` in `[alpha_min, alpha_cap]`, sorted by
/// ascending alpha.
pub fn eig_solve(p: &SimilarityProfile, cfg: &EigenConfig) -> Result<Vec<SpectralMode>, SpectrumError> {
    if !(cfg.alpha_min > 0.0 && cfg.alpha_cap > cfg.alpha_min && cfg.scan_per_decade > 0) {
        return Err(SpectrumError::Domain("bad alpha scan range".into()));
    }
    let sh = Shooter { p, cfg: *cfg };
    let decades = (cfg.alpha_cap / cfg.alpha_min).log10();
    let m = (decades * cfg.scan_per_decade as f64).ceil() as usize;
    let alphas: Vec<f64> =
        (0..=m).map(|i| cfg.alpha_min * (cfg.alpha_cap / cfg.alpha_min).powf(i as f64 / m as f64)).collect();
    let mut values = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        values.push(sh.wronskian(a)?);
    }
    let grid = LogGrid { lo: 1e-7, hi: 25.0, count: 12000 };
    let mut modes = Vec::new();
    for i in 0..m {
        if values[i].signum() == values[i + 1].signum() {
            continue;
        }
        let (mut lo, mut hi) = (alphas[i], alphas[i + 1]);
        let mut flo = values[i];
        let mut iter = 0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            let fm = sh.wronskian(mid)?;
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            iter += 1;
            if iter > 200 {
                return Err(SpectrumError::Bracket(mid));
            }
        }
        let alpha = 0.5 * (lo + hi);
        let setup = sh.setup(alpha);
        let shot = sh.shoot(alpha, &setup)?;
        let u = eigenfunction(&shot, &setup, alpha, &grid);
        modes.push(SpectralMode {
            n: p.n,
            k: 0,
            alpha,
            lambda: -alpha * alpha,
            nodes: sign_changes(&u),
            residual: shot.wronskian.abs(),
            rho_min: setup.rho_min,
            rho_fit: setup.rho_fit,
            rho_max: setup.rho_max,
            u,
            grid: Some(grid),
        });
    }
    for (i, m) in modes.iter_mut().enumerate() {
        m.k = i + 1;
    }
    if let Some(k) = cfg.k_max {
        modes.truncate(k);
    }
    Ok(modes)
}

/// Plain-text table of growth rates, one row per profile index and a final
/// row for the limiting potential.
pub fn table_report(rows: &[(usize, Vec<f64>)], limiting: &[f64]) -> String {
    let cols = rows.iter().map(|r| r.1.len()).chain([limiting.len()]).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{:>6}", "n"));
    for k in 1..=cols {
        out.push_str(&format!("  {:>14}", format!("alpha_{k}")));
    }
    out.push('\n');
    let mut line = |label: String, vals: &[f64]| {
        out.push_str(&format!("{label:>6}"));
        for v in vals {
            out.push_str(&format!("  {v:>14.6}"));
        }
        out.push('\n');
    };
    for (n, vals) in rows {
        line(n.to_string(), vals);
    }
    if !limiting.is_empty() {
        line("inf".into(), limiting);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{build_profile, ShootingConfig};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn profile(n: usize) -> &'static SimilarityProfile {
        static P: OnceLock<Vec<SimilarityProfile>> = OnceLock::new();
        &P.get_or_init(|| (0..4).map(|n| build_profile(n, &ShootingConfig::default()).unwrap()).collect())[n]
    }

    #[test]
    fn coordinates() {
        let x = 1f64.tanh().recip();
        assert!((x - 1.313035).abs() < 1e-6);
        assert!((rho_of_x(x).unwrap() - 1.0).abs() < 1e-14);
        assert!(rho_of_x(1e12).unwrap() < 1e-11);
        assert!(rho_of_x(1.0 + 1e-12).unwrap() > 13.0);
        assert!(rho_of_x(1.0).is_err() && x_of_rho(0.0).is_err());
        assert!(x_minus_one(20.0).unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn coordinate_round_trip(x in 1.0001f64..1e6, rho in 0.01f64..3.0) {
            let back = x_of_rho(rho_of_x(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-14 * x);
            let again = rho_of_x(x_of_rho(rho).unwrap()).unwrap();
            prop_assert!((again - rho).abs() <= 1e-14 * rho.max(1.0) * (2.0 * rho).exp());
        }
    }

    #[test]
    fn potential_values_and_tails() {
        let v = potential(Source::Limiting, 1.0).unwrap();
        let e = 1f64.exp();
        let oracle = -12.0 / (e - 1.0 / e).powi(2);
        assert!((v - oracle).abs() < 1e-14);
        assert!((v + 2.172185).abs() < 1e-6);
        assert!(potential(Source::Limiting, 0.0).is_err());
        for n in 0..4 {
            let p = profile(n);
            let near = potential(Source::Profile(p), 1e-3).unwrap() * 1e-6;
            // the approach to 6/rho^2 is slow for large n
            if n <= 1 {
                assert!((near - 6.0).abs() < 0.06, "n={n} {near}");
            }
            let far = potential(Source::Profile(p), 10.0).unwrap() * 20f64.exp();
            assert!((far + 12.0).abs() < 0.12, "n={n} {far}");
        }
    }

    #[test]
    fn zero_modes() {
        for n in 0..4 {
            let p = profile(n);
            let z = zero_mode(p, &zero_mode_grid(p));
            assert_eq!(z.nodes, n, "n={n}");
            assert!(z.residual < 1e-6, "n={n} residual={}", z.residual);
            // bounded at infinity, tending to -a_n
            let last = *z.u.last().unwrap();
            assert!((last - z.limit).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_profile_is_stable() {
        let modes = eig_solve(profile(0), &EigenConfig::default()).unwrap();
        assert!(modes.is_empty(), "{:?}", modes.iter().map(|m| m.alpha).collect::<Vec<_>>());
    }

    #[test]
    fn spectra_n1_to_n3() {
        let expect: [&[(f64, f64)]; 3] = [
            &[(4.0, 1e-3)],
            &[(4.0, 1e-3), (27.407, 0.05)],
            &[(4.0, 1e-3), (27.379, 0.05), (182.49, 0.5)],
        ];
        for n in 1..=3 {
            let modes = eig_solve(profile(n), &EigenConfig::default()).unwrap();
            let alphas: Vec<f64> = modes.iter().map(|m| m.alpha).collect();
            assert_eq!(modes.len(), n, "n={n} {alphas:?}");
            for (m, (a, tol)) in modes.iter().zip(expect[n - 1]) {
                assert!((m.alpha - a).abs() < *tol, "n={n} {alphas:?}");
                assert_eq!(m.nodes, n - m.k, "n={n} k={}", m.k);
                assert!(m.residual < 1e-8);
            }
            let g = modes[0].grid.unwrap();
            for i in 0..modes.len() {
                for j in 0..i {
                    let prod: Vec<f64> = modes[i].u.iter().zip(&modes[j].u).map(|(a, b)| a * b).collect();
                    assert!(log_grid_integral(&g, &prod).abs() < 1e-4, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn bound_state_norm_converges() {
        let modes = eig_solve(profile(1), &EigenConfig::default()).unwrap();
        let m = &modes[0];
        let g = m.grid.unwrap();
        let rho = g.points();
        let partial = |cut: f64| {
            let f: Vec<f64> = m.u.iter().zip(&rho).map(|(u, r)| if *r <= cut { u * u } else { 0.0 }).collect();
            log_grid_integral(&g, &f)
        };
        let (a, b, c): (f64, f64, f64) = (partial(10.0), partial(15.0), partial(20.0));
        assert!((c - b).abs() < (b - a).abs() + 1e-14 && (c - b).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn report_layout() {
        let t = table_report(&[(1, vec![4.0]), (2, vec![4.0, 27.4])], &[4.0, 27.37319]);
        assert_eq!(t.lines().count(), 4);
        assert!(t.lines().last().unwrap().trim_start().starts_with("inf"));
    }
}
