//! Energies, blowup-time estimation and comparisons with the self-similar
//! and instanton profiles.

use super::field::RadialField;
use super::scheme::{EvolveConfig, Evolution, Sample, Termination};
use super::EvolveError;
use crate::fit::{line_fit, LineFit};
use crate::modulation::instanton;
use crate::selfsim::SimilarityProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Angular prefactor `(D - 1) vol(S^{D-1})` of the energy.
pub fn energy_prefactor(dim: u32) -> f64 {
    match dim {
        4 => 6.0 * PI * PI,
        5 => 32.0 * PI * PI / 3.0,
        _ => panic!("energy prefactor defined for D = 4, 5"),
    }
}

// Integrands in the regular variable, with w_r = s (2 r u + r^2 u_r) and
// 1 - w^2 = -r^2 u (2 + r^2 u).
fn kinetic(r: f64, p: f64) -> f64 {
    r.powi(4) * p * p
}

fn gradient(r: f64, u: f64, ur: f64) -> f64 {
    let wr = 2.0 * r * u + r * r * ur;
    wr * wr
}

fn potential_over_r2(u: f64, r: f64) -> f64 {
    // (1 - w^2)^2 / r^2
    let a = u * (2.0 + r * r * u);
    r * r * a * a
}

/// Total energy `c(D) int (w_t^2 + w_r^2 + (D-2)(1-w^2)^2/(2r^2)) r^{D-3} dr`.
pub fn total_energy(field: &RadialField) -> f64 {
    let r = field.grid.nodes();
    let ur = field.grid.derivative_even(&field.u);
    let dm2 = field.dim as f64 - 2.0;
    let pw = field.dim as i32 - 3;
    let f: Vec<f64> = (0..r.len())
        .map(|i| {
            let x = r[i];
            (kinetic(x, field.p[i]) + gradient(x, field.u[i], ur[i]) + 0.5 * dm2 * potential_over_r2(field.u[i], x))
                * x.powi(pw)
        })
        .collect();
    energy_prefactor(field.dim) * field.grid.integrate(&f, f64::INFINITY)
}

/// `e(t, r) = w_t^2/r^2 + w_r^2/r^2 + 3 (1 - w^2)^2/(2 r^4)`, with the
/// centre value `10 u(0)^2`.
pub fn energy_density(field: &RadialField, r: f64) -> f64 {
    let (u, ur) = field.grid.interpolate_even_with_derivative(&field.u, r);
    let p = field.grid.interpolate_even(&field.p, r);
    let a = 2.0 * u + r * ur;
    let b = u * (2.0 + r * r * u);
    r * r * p * p + a * a + 1.5 * b * b
}

pub fn central_energy_density(field: &RadialField) -> f64 {
    10.0 * field.u[0] * field.u[0]
}

/// Kinetic and potential energy inside the past light cone `r < T - t`
/// (D = 4, prefactor `6 pi^2`).
pub fn cone_energies(field: &RadialField, blowup_time: f64) -> Result<(f64, f64), EvolveError> {
    if field.dim != 4 {
        return Err(EvolveError::Dimension(field.dim));
    }
    let tau = blowup_time - field.t;
    if !(tau > 0.0) {
        return Err(EvolveError::InvalidConfig(format!("T = {blowup_time} is not after t = {}", field.t)));
    }
    let r = field.grid.nodes();
    let ur = field.grid.derivative_even(&field.u);
    let ek: Vec<f64> = (0..r.len()).map(|i| kinetic(r[i], field.p[i]) * r[i]).collect();
    let ep: Vec<f64> = (0..r.len())
        .map(|i| (gradient(r[i], field.u[i], ur[i]) + potential_over_r2(field.u[i], r[i])) * r[i])
        .collect();
    let c = energy_prefactor(4);
    Ok((c * field.grid.integrate(&ek, tau), c * field.grid.integrate(&ep, tau)))
}

/// Smallest `r` with `w(t, r) = 0`; `None` without a crossing.
pub fn extract_scale_lambda(field: &RadialField) -> Option<f64> {
    let r = field.grid.nodes();
    let g = |i: usize| 1.0 + r[i] * r[i] * field.u[i];
    let i = (1..r.len()).find(|&i| g(i) <= 0.0)?;
    let f = |x: f64| 1.0 + x * x * field.grid.interpolate_even(&field.u, x);
    let (mut lo, mut hi) = (r[i - 1], r[i]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// How `|w_rr(t, 0)|^{-1/2}` is extrapolated to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// Straight line, exact for self-similar blowup.
    #[default]
    Linear,
    /// `a (T - t)^p` with free exponent, which absorbs logarithmic
    /// corrections when the scale shrinks slightly faster than linearly.
    PowerLaw,
}

/// Fit of `|w_rr(t, 0)|^{-1/2}` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub model: RateModel,
    pub blowup_time: f64,
    pub uncertainty: f64,
    /// `p` in `|w_rr|^{-1/2} ~ (T - t)^p`; 1 for the linear model.
    pub exponent: f64,
    /// `d/dt |w_rr(t,0)|^{-1/2}` of the straight-line fit.
    pub slope: f64,
    /// `|W''(0)|` in the similarity variable, `1/slope^2`.
    pub curvature_coefficient: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub line: LineFit,
}

/// Fits the blowup time over the final growth window of the central
/// curvature (samples after the last one with `|w_rr(0)|` below
/// `max / 10^decades`) with a straight line.
pub fn estimate_blowup_time(history: &[Sample], decades: f64) -> Result<BlowupFit, EvolveError> {
    estimate_blowup_time_with(history, decades, RateModel::Linear)
}

fn scale_series(s: &[Sample]) -> (Vec<f64>, Vec<f64>) {
    (s.iter().map(|s| s.t).collect(), s.iter().map(|s| s.curvature.abs().powf(-0.5)).collect())
}

// Residual of the log-log line fit of y against T - t, and the exponent.
fn power_law_at(ts: &[f64], ys: &[f64], blowup: f64) -> Option<(f64, f64)> {
    let lx: Vec<f64> = ts.iter().map(|t| (blowup - t).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let f = line_fit(&lx, &ly).ok()?;
    let ss = lx.iter().zip(&ly).map(|(x, y)| (f.eval(*x) - y).powi(2)).sum();
    Some((ss, f.slope))
}

// Blowup time and exponent of `y = a (T - t)^p`, minimising the residual
// over `ln(T - t_last)` by a scan followed by golden-section refinement.
fn power_law_fit(s: &[Sample]) -> Result<(f64, f64), EvolveError> {
    let (ts, ys) = scale_series(s);
    let t_last = *ts.last().unwrap();
    let span = t_last - ts[0];
    if !(span > 0.0) {
        return Err(EvolveError::NoFit("fit window has zero length".into()));
    }
    let cost = |z: f64| power_law_at(&ts, &ys, t_last + z.exp()).map_or(f64::INFINITY, |v| v.0);
    let (lo, hi) = ((1e-4 * span).ln(), (10.0 * span).ln());
    let n = 200;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let best = (0..=n).min_by(|&i, &j| cost(grid[i]).total_cmp(&cost(grid[j]))).unwrap();
    if best == 0 || best == n {
        return Err(EvolveError::NoFit("power-law blowup time at the edge of the search range".into()));
    }
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (cost(c), cost(d));
    while b - a > 1e-12 {
        if fc < fd {
            (b, d, fd) = (d, c, fc);
            c = b - g * (b - a);
            fc = cost(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + g * (b - a);
            fd = cost(d);
        }
    }
    let blowup = t_last + (0.5 * (a + b)).exp();
    let (_, p) = power_law_at(&ts, &ys, blowup).ok_or_else(|| EvolveError::NoFit("degenerate power-law fit".into()))?;
    Ok((blowup, p))
}

/// [`estimate_blowup_time`] with a choice of extrapolation. The uncertainty
/// combines the statistical root error with the change on refitting the
/// second half of the window.
pub fn estimate_blowup_time_with(history: &[Sample], decades: f64, model: RateModel) -> Result<BlowupFit, EvolveError> {
    let last = history.last().ok_or_else(|| EvolveError::NoFit("empty history".into()))?;
    let top = last.curvature.abs();
    if !(top > 0.0) {
        return Err(EvolveError::NoFit("vanishing central curvature".into()));
    }
    let floor = top / 10f64.powf(decades);
    let start = history.iter().rposition(|s| s.curvature.abs() < floor).map(|i| i + 1).unwrap_or(0);
    let window = &history[start..];
    if window.len() < 8 {
        return Err(EvolveError::NoFit(format!("only {} samples in the fit window", window.len())));
    }
    if window.windows(2).any(|w| w[1].curvature.abs() < w[0].curvature.abs()) {
        return Err(EvolveError::NoFit("central curvature not monotone over the fit window".into()));
    }
    let fit = |s: &[Sample]| -> Result<LineFit, EvolveError> {
        let (ts, ys) = scale_series(s);
        line_fit(&ts, &ys).map_err(|e| EvolveError::NoFit(e.to_string()))
    };
    let line = fit(window)?;
    if !(line.slope < 0.0) {
        return Err(EvolveError::NoFit("curvature scale not shrinking".into()));
    }
    let second_half = &window[window.len() / 2..];
    let mut exponent = 1.0;
    let (blowup_time, uncertainty) = match model {
        RateModel::Linear => {
            let t_fit = line.root();
            (t_fit, line.root_err().max((fit(second_half)?.root() - t_fit).abs()))
        }
        RateModel::PowerLaw => {
            let (t_fit, p) = power_law_fit(window)?;
            exponent = p;
            (t_fit, (power_law_fit(second_half)?.0 - t_fit).abs())
        }
    };
    Ok(BlowupFit {
        model,
        blowup_time,
        uncertainty,
        exponent,
        slope: line.slope,
        curvature_coefficient: 1.0 / (line.slope * line.slope),
        window: (window[0].t, window.last().unwrap().t),
        points: window.len(),
        line,
    })
}

/// Comparison profile for [`rescaled_profile_residual`].
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// `(1 - eta^2)/(1 + 3 eta^2/5)`.
    W0,
    Profile(&'a SimilarityProfile),
    /// `W_S(r/lambda)` compared on `r/lambda in [0, rho_max]`.
    Instanton { lambda: f64, rho_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileResidual {
    pub sup: f64,
    pub l2: f64,
    pub points: usize,
    /// The comparison range was cut at the outer boundary.
    pub truncated: bool,
}

const RESIDUAL_POINTS: usize = 401;

/// Residual of the rescaled field against a reference profile: `w(t, (T-t) eta)`
/// on `eta in [0, 1]` for self-similar references, `w(t, lambda rho)` for the
/// instanton. The reference branch is flipped to match `w(t, 0)`.
pub fn rescaled_profile_residual(
    field: &RadialField,
    blowup_time: f64,
    reference: Reference<'_>,
) -> Result<ProfileResidual, EvolveError> {
    let (scale, upper): (f64, f64) = match reference {
        Reference::Instanton { lambda, rho_max } => (lambda, rho_max),
        _ => {
            let tau = blowup_time - field.t;
            if !(tau > 0.0) {
                return Err(EvolveError::InvalidConfig(format!("T = {blowup_time} is not after t = {}", field.t)));
            }
            (tau, 1.0)
        }
    };
    let s = field.sign;
    let reference_at = |x: f64| -> f64 {
        match reference {
            Reference::W0 => s * (1.0 - x * x) / (1.0 + 0.6 * x * x),
            Reference::Profile(p) => s * p.sign * p.w_eta(x).expect("eta in [0, 1]"),
            Reference::Instanton { .. } => s * instanton(x, 1.0),
        }
    };
    let outer = field.grid.outer();
    let truncated = scale * upper > outer;
    let top = if truncated { outer / scale } else { upper };
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    for i in 0..RESIDUAL_POINTS {
        let x = top * i as f64 / (RESIDUAL_POINTS - 1) as f64;
        let d = field.w_at(scale * x) - reference_at(x);
        sup = sup.max(d.abs());
        sum += d * d;
    }
    Ok(ProfileResidual { sup, l2: (sum / RESIDUAL_POINTS as f64).sqrt(), points: RESIDUAL_POINTS, truncated })
}

/// `K(w) = int_0^{1-eps} (eta^2 w_eta^2 + 1.5 (1 - w^2)^2/(1 - eta^2)) d eta`
/// for `w` given as `eta -> (w, w_eta)`.
pub fn k_functional_of(w: impl Fn(f64) -> (f64, f64), eps: f64) -> f64 {
    assert!(eps > 0.0 && eps < 1.0);
    // xi = -ln(1 - eta) clusters nodes at the light cone
    let xi_max = -eps.ln();
    let n = 4000;
    let h = xi_max / n as f64;
    let f = |xi: f64| {
        let q = (-xi).exp();
        let eta = 1.0 - q;
        let (v, dv) = w(eta);
        let a = 1.0 - v * v;
        (eta * eta * dv * dv + 1.5 * a * a / (q * (2.0 - q))) * q
    };
    let mut acc = f(0.0) + f(xi_max);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// [`k_functional_of`] applied to `w(t, (T - t) eta)`.
pub fn k_functional(field: &RadialField, blowup_time: f64, eps: f64) -> Result<f64, EvolveError> {
    let tau = blowup_time - field.t;
    if !(tau > 0.0) {
        return Err(EvolveError::InvalidConfig(format!("T = {blowup_time} is not after t = {}", field.t)));
    }
    Ok(k_functional_of(
        |eta| {
            let (w, wr) = field.w_and_wr_at(tau * eta);
            (w, tau * wr)
        },
        eps,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Dispersal,
    Blowup,
    Undecided,
}

/// Blowup iff the curvature stop fired and the blowup time could be fitted;
/// Dispersal iff the central density stayed below threshold for the window.
pub fn classify_outcome(run: &Evolution, config: &EvolveConfig) -> Outcome {
    match run.termination {
        Termination::CurvatureLimit if estimate_blowup_time(&run.history, config.fit_decades).is_ok() => Outcome::Blowup,
        Termination::Dispersed => Outcome::Dispersal,
        _ => Outcome::Undecided,
    }
}

/// Everything derived from one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupDiagnostics {
    pub outcome: Outcome,
    pub termination: Termination,
    pub fit: Option<BlowupFit>,
    /// `(t, w_rr(t, 0))`, thinned.
    pub curvature: Vec<(f64, f64)>,
    /// `(t, lambda(t))` for D = 4, thinned.
    pub lambda: Vec<(f64, f64)>,
    /// Residual against `W0` (D = 5) or the instanton (D = 4) at the final time.
    pub final_residual: Option<ProfileResidual>,
    pub peak_central_density: (f64, f64),
    pub final_time: f64,
    pub depth: usize,
}

fn thin(h: &[Sample], max: usize) -> Vec<&Sample> {
    let step = (h.len() / max).max(1);
    let mut v: Vec<&Sample> = h.iter().step_by(step).collect();
    if let Some(l) = h.last() {
        if !std::ptr::eq(*v.last().unwrap(), l) {
            v.push(l);
        }
    }
    v
}

pub fn diagnose(run: &Evolution, config: &EvolveConfig) -> BlowupDiagnostics {
    let outcome = classify_outcome(run, config);
    let model = if run.field.dim == 4 { RateModel::PowerLaw } else { RateModel::Linear };
    let fit = match outcome {
        Outcome::Blowup => estimate_blowup_time_with(&run.history, config.fit_decades, model).ok(),
        _ => None,
    };
    let final_residual = fit.and_then(|f| match run.field.dim {
        5 => rescaled_profile_residual(&run.field, f.blowup_time, Reference::W0).ok(),
        _ => extract_scale_lambda(&run.field).and_then(|lambda| {
            let rho_max = ((f.blowup_time - run.field.t) / lambda).min(10.0);
            rescaled_profile_residual(&run.field, f.blowup_time, Reference::Instanton { lambda, rho_max }).ok()
        }),
    });
    let thinned = thin(&run.history, 2000);
    BlowupDiagnostics {
        outcome,
        termination: run.termination,
        fit,
        curvature: thinned.iter().map(|s| (s.t, s.curvature)).collect(),
        lambda: thinned.iter().filter_map(|s| s.lambda.map(|l| (s.t, l))).collect(),
        final_residual,
        peak_central_density: run.peak_density(),
        final_time: run.field.t,
        depth: run.field.grid.depth(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::grid::CompositeGrid;
    use crate::selfsim::{build_profile, ShootingConfig};

    fn w0_eta(eta: f64) -> (f64, f64) {
        let d = 1.0 + 0.6 * eta * eta;
        ((1.0 - eta * eta) / d, -3.2 * eta / (d * d))
    }

    fn history(times: &[f64], curvature: impl Fn(f64) -> f64) -> Vec<Sample> {
        times
            .iter()
            .map(|&t| Sample { t, curvature: curvature(t), central_density: 0.0, energy: None, depth: 1, lambda: None })
            .collect()
    }

    #[test]
    fn linear_fit_recovers_self_similar_blowup_time() {
        let ts: Vec<f64> = (0..2000).map(|i| 0.999 * i as f64 / 1999.0).collect();
        let h = history(&ts, |t| -3.2 / (1.0 - t).powi(2));
        let fit = estimate_blowup_time(&h, 2.0).unwrap();
        assert!((fit.blowup_time - 1.0).abs() < 1e-3);
        assert!((fit.curvature_coefficient - 3.2).abs() < 1e-6 * 3.2);
        assert!(fit.uncertainty < 1e-9);
    }

    #[test]
    fn power_law_fit_tracks_log_corrected_rate() {
        // |w_rr|^{-1/2} = (T - t)/sqrt(ln(1/(T - t))), T = 0.7
        let ts: Vec<f64> = (0..3000).map(|i| 0.7 - 1e-6f64.powf(i as f64 / 2999.0) * 0.1).collect();
        let h = history(&ts, |t| {
            let tau: f64 = 0.7 - t;
            let y = tau / (-tau.ln()).sqrt();
            -1.0 / (y * y)
        });
        let tau_end = 0.7 - ts.last().unwrap();
        let lin = estimate_blowup_time(&h, 2.0).unwrap();
        let pow = estimate_blowup_time_with(&h, 2.0, RateModel::PowerLaw).unwrap();
        assert!((pow.blowup_time - 0.7).abs() < 0.05 * tau_end, "{pow:?}");
        assert!((pow.blowup_time - 0.7).abs() < 0.2 * (lin.blowup_time - 0.7).abs());
        assert!(pow.exponent > 1.0 && pow.exponent < 1.2);
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let decaying = history(&ts, |t| -(-t).exp());
        assert!(estimate_blowup_time(&decaying, 2.0).is_err());
        let wiggly = history(&ts, |t| -1.0 / (1.5 - t).powi(2) * (1.0 + 0.3 * (40.0 * t).sin()));
        assert!(estimate_blowup_time(&wiggly, 2.0).is_err());
        assert!(estimate_blowup_time(&[], 2.0).is_err());
    }

    #[test]
    fn self_similar_data_matches_w0() {
        let tau = 0.1;
        let g = CompositeGrid::uniform(1.0, 10000);
        let f = RadialField::from_fn(5, g, |r| w0_eta(r / tau).0, |_| 0.0).unwrap();
        let res = rescaled_profile_residual(&f, tau, Reference::W0).unwrap();
        assert!(res.sup < 1e-8, "{res:?}");
        assert!(!res.truncated);
        let far = rescaled_profile_residual(&f, 2.0, Reference::W0).unwrap();
        assert!(far.truncated);
    }

    #[test]
    fn lambda_of_scaled_instanton() {
        let g = CompositeGrid::uniform(8.0, 4000).refined(2, 1.0);
        for lam in [0.37, 1.3] {
            let f = RadialField::from_fn(4, g.clone(), |r| instanton(r, lam), |_| 0.0).unwrap();
            let got = extract_scale_lambda(&f).unwrap();
            assert!((got - lam).abs() < 1e-8, "{got} vs {lam}");
            let res = rescaled_profile_residual(&f, 0.0, Reference::Instanton { lambda: got, rho_max: 5.0 }).unwrap();
            assert!(res.sup < 1e-6);
        }
        let flat = RadialField::from_fn(4, g, |_| 1.0, |_| 0.0).unwrap();
        assert!(extract_scale_lambda(&flat).is_none());
    }

    #[test]
    fn instanton_energy_is_sixteen_pi_squared() {
        // oracle: Simpson on the closed form, t = atan(r) to map [0, inf) onto [0, pi/2)
        let integrand = |r: f64| {
            let w = (1.0 - r * r) / (1.0 + r * r);
            let wr = -4.0 * r / (1.0 + r * r).powi(2);
            (wr * wr + (1.0 - w * w).powi(2) / (r * r)) * r
        };
        let n = 20000;
        let hh = 0.5 * PI / n as f64;
        let g = |t: f64| if t <= 0.0 || t >= 0.5 * PI { 0.0 } else { integrand(t.tan()) / t.cos().powi(2) };
        let simpson: f64 = (0..=n)
            .map(|i| g(i as f64 * hh) * if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 })
            .sum::<f64>()
            * hh
            / 3.0;
        assert!((simpson - 8.0 / 3.0).abs() < 1e-8);

        let grid = CompositeGrid::uniform(40.0, 8000).refined(2, 2.0);
        let f = RadialField::from_fn(4, grid, |r| instanton(r, 1.0), |_| 0.0).unwrap();
        let target = 16.0 * PI * PI;
        assert!((total_energy(&f) / target - 1.0).abs() < 5e-3);
        let (ek, ep) = cone_energies(&f, 1e6).unwrap();
        assert_eq!(ek, 0.0);
        assert!((ep / target - 1.0).abs() < 5e-3);
        // inside radius 1 the instanton holds half its energy
        let (_, ep1) = cone_energies(&f, 1.0).unwrap();
        assert!((ep1 / target - 0.5).abs() < 1e-4);
    }

    #[test]
    fn energy_scales_with_dilations() {
        let grid = CompositeGrid::uniform(12.0, 6000);
        let shape = |r: f64| 1.0 - 0.8 * r * r * (-r * r).exp();
        let e1 = total_energy(&RadialField::from_fn(5, grid.clone(), shape, |_| 0.0).unwrap());
        let e2 = total_energy(&RadialField::from_fn(5, grid.clone(), |r| shape(r / 0.5), |_| 0.0).unwrap());
        assert!((e2 / e1 - 0.5).abs() < 1e-6, "{}", e2 / e1);
        let e4a = total_energy(&RadialField::from_fn(4, grid.clone(), shape, |_| 0.0).unwrap());
        let e4b = total_energy(&RadialField::from_fn(4, grid, |r| shape(r / 0.5), |_| 0.0).unwrap());
        assert!((e4b / e4a - 1.0).abs() < 1e-6);
    }

    #[test]
    fn k_is_stationary_at_w0_and_larger_at_w1() {
        let eps = 1e-7;
        let k = |d: f64| {
            k_functional_of(
                |eta| {
                    let (w, dw) = w0_eta(eta);
                    // perturbation vanishing at both ends
                    (w + d * eta * eta * (1.0 - eta), dw + d * (2.0 * eta - 3.0 * eta * eta))
                },
                eps,
            )
        };
        let k0 = k(0.0);
        let (d1, d2) = (k(1e-2) - k0, k(5e-3) - k0);
        assert!(d1 > 0.0 && d2 > 0.0);
        assert!((d1 / d2 - 4.0).abs() < 0.1, "{}", d1 / d2);

        let p = build_profile(1, &ShootingConfig::default()).unwrap();
        let k1 = k_functional_of(
            |eta| {
                if eta == 0.0 {
                    return (p.sign, 0.0);
                }
                let x = 1.0 / eta;
                let (w, wp) = p.eval(x);
                (w, -x * x * wp)
            },
            eps,
        );
        assert!(k1 > k0, "K(W1) = {k1}, K(W0) = {k0}");
    }
}
