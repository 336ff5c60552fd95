//! Threshold of blowup in D = 5: bisection on the amplitude of a Gaussian
//! family, closeness of near-threshold runs to the one-mode-unstable
//! self-similar profile `W1`, and the scaling of departure time and peak
//! central energy density with the distance to threshold.

use crate::evolve::{
    advance_with, diagnose, init_gaussian, Control, EvolveConfig, EvolveError, GaussianData, Outcome, PulseMode,
    RadialField, Termination,
};
use crate::fit::{loglog_fit, LineFit};
use crate::selfsim::{build_profile, SelfSimError, ShootingConfig, SimilarityProfile};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Profile(#[from] SelfSimError),
    #[error("invalid bracket: {0}")]
    Bracket(String),
    #[error("outcome undecided at A = {amplitude} after escalation")]
    Undecided { amplitude: f64, record: Box<ThresholdRecord> },
    #[error("scaling fit refused: {0}")]
    Fit(String),
}

/// Gaussian family `1 - A r^2 exp(-sigma (r - R)^2)` with the amplitude free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Family {
    pub sigma: f64,
    pub radius: f64,
    pub mode: PulseMode,
}

impl Default for Family {
    fn default() -> Self {
        Self { sigma: 10.0, radius: 2.0, mode: PulseMode::Symmetric }
    }
}

impl Family {
    pub fn data(&self, amplitude: f64) -> GaussianData {
        GaussianData { amplitude, sigma: self.sigma, radius: self.radius, mode: self.mode }
    }
}

/// Summary of one D = 5 evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub amplitude: f64,
    pub outcome: Outcome,
    pub termination: Termination,
    pub final_time: f64,
    pub steps: usize,
    pub depth: usize,
    /// `(t, max e(t, 0))`.
    pub peak_density: (f64, f64),
    pub blowup_time: Option<f64>,
    /// The run was repeated at higher resolution after an undecided outcome.
    pub escalated: bool,
}

/// History of a bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub family: Family,
    /// `(A_low, A_high)` after each step, the initial bracket first.
    pub brackets: Vec<(f64, f64)>,
    pub runs: Vec<RunSummary>,
    pub target_width: f64,
}

impl ThresholdRecord {
    pub fn final_bracket(&self) -> (f64, f64) {
        *self.brackets.last().expect("bracket history is never empty")
    }

    /// Midpoint of the final bracket.
    pub fn critical_amplitude(&self) -> f64 {
        let (lo, hi) = self.final_bracket();
        0.5 * (lo + hi)
    }

    pub fn converged(&self) -> bool {
        let (lo, hi) = self.final_bracket();
        hi - lo <= self.target_width
    }
}

/// Configuration with doubled base resolution, eight more levels and twice
/// the time budget.
pub fn escalate(cfg: &EvolveConfig) -> EvolveConfig {
    EvolveConfig { base_cells: 2 * cfg.base_cells, max_levels: cfg.max_levels + 8, t_max: 2.0 * cfg.t_max, ..*cfg }
}

fn summarize(amplitude: f64, cfg: &EvolveConfig, run: &crate::evolve::Evolution, escalated: bool) -> RunSummary {
    let d = diagnose(run, cfg);
    RunSummary {
        amplitude,
        outcome: d.outcome,
        termination: d.termination,
        final_time: d.final_time,
        steps: run.steps,
        depth: d.depth,
        peak_density: d.peak_central_density,
        blowup_time: d.fit.map(|f| f.blowup_time),
        escalated,
    }
}

// One run, with an observer; an undecided outcome is retried once with the
// escalated configuration.
fn evolve_member<F>(family: &Family, amplitude: f64, cfg: &EvolveConfig, mut observe: F) -> Result<RunSummary, CriticalError>
where
    F: FnMut(&RadialField, bool),
{
    let mut attempt = |cfg: &EvolveConfig, escalated: bool| -> Result<RunSummary, CriticalError> {
        let field = init_gaussian(5, &family.data(amplitude), cfg.base_grid())?;
        let run = advance_with(field, cfg, |f, _| {
            observe(f, escalated);
            Control::Continue
        })?;
        Ok(summarize(amplitude, cfg, &run, escalated))
    };
    let first = attempt(cfg, false)?;
    if first.outcome != Outcome::Undecided {
        return Ok(first);
    }
    attempt(&escalate(cfg), true)
}

/// Evolves one member of the family and labels the outcome.
pub fn classify_amplitude(family: &Family, amplitude: f64, cfg: &EvolveConfig) -> Result<RunSummary, CriticalError> {
    evolve_member(family, amplitude, cfg, |_, _| {})
}

/// Bisects `[lo, hi]` (dispersal at `lo`, blowup at `hi`) until the bracket
/// is at most `width` wide. Both ends are evolved first to confirm the labels.
pub fn bisect_threshold(
    family: &Family,
    lo: f64,
    hi: f64,
    width: f64,
    cfg: &EvolveConfig,
) -> Result<ThresholdRecord, CriticalError> {
    if !(lo < hi && width > 0.0) {
        return Err(CriticalError::Bracket(format!("need lo < hi and width > 0, got [{lo}, {hi}], {width}")));
    }
    let mut rec = ThresholdRecord { family: *family, brackets: vec![(lo, hi)], runs: Vec::new(), target_width: width };
    for (a, want) in [(lo, Outcome::Dispersal), (hi, Outcome::Blowup)] {
        let s = classify_amplitude(family, a, cfg)?;
        let got = s.outcome;
        rec.runs.push(s);
        if got != want {
            return Err(CriticalError::Bracket(format!("A = {a} gives {got:?}, expected {want:?}")));
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let s = classify_amplitude(family, mid, cfg)?;
        let outcome = s.outcome;
        rec.runs.push(s);
        match outcome {
            Outcome::Dispersal => lo = mid,
            Outcome::Blowup => hi = mid,
            Outcome::Undecided => return Err(CriticalError::Undecided { amplitude: mid, record: Box::new(rec) }),
        }
        rec.brackets.push((lo, hi));
    }
    Ok(rec)
}

/// `W1` sampled on `eta in [0, 1]`, with the tail coefficient `b` of
/// `W ~ s (1 - b eta^2)` near the centre.
#[derive(Debug, Clone)]
pub struct AttractorTable {
    pub eta: Vec<f64>,
    /// Values normalised to `+1` at the centre.
    pub w: Vec<f64>,
    pub b: f64,
}

impl AttractorTable {
    pub fn new(profile: &SimilarityProfile, points: usize) -> Self {
        assert!(points >= 2);
        let eta: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        let w = eta.iter().map(|&e| profile.sign * profile.w_eta(e).expect("eta in [0, 1]")).collect();
        Self { eta, w, b: profile.b }
    }

    /// Builds `W1` with the default shooting configuration.
    pub fn w1(points: usize) -> Result<Self, CriticalError> {
        Ok(Self::new(&build_profile(1, &ShootingConfig::default())?, points))
    }
}

/// Time to the self-similar collapse implied by the centre,
/// `T - t = sqrt(b / |u(t, 0)|)`; `None` for the vacuum.
pub fn local_collapse_time(field: &RadialField, b: f64) -> Option<f64> {
    let u0 = field.regular().0[0].abs();
    (u0 > 0.0).then(|| (b / u0).sqrt())
}

/// `sup_eta |w(t, tau eta) - W1(eta)|` with the reference flipped to the
/// branch of the field.
pub fn attractor_residual(field: &RadialField, tau: f64, table: &AttractorTable) -> f64 {
    let s = field.sign();
    table.eta.iter().zip(&table.w).map(|(&e, &w)| (field.w_at(tau * e) - s * w).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorPoint {
    pub t: f64,
    /// Local `T - t` from the centre.
    pub tau: f64,
    pub residual: f64,
}

/// `w(t, tau eta)` on a logarithmic `eta` grid at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSnapshot {
    pub t: f64,
    pub tau: f64,
    pub eta: Vec<f64>,
    pub w: Vec<f64>,
}

/// Distance to `W1` along one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorTrack {
    pub run: RunSummary,
    pub points: Vec<AttractorPoint>,
    /// Taken each time the local `T - t` drops by a factor `SNAPSHOT_RATIO`.
    pub snapshots: Vec<RescaledSnapshot>,
}

const SNAPSHOT_RATIO: f64 = 0.7;
const SNAPSHOT_ETA: (f64, f64, usize) = (1e-2, 20.0, 200);

fn rescaled_snapshot(field: &RadialField, tau: f64) -> RescaledSnapshot {
    let (lo, hi, n) = SNAPSHOT_ETA;
    let eta: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
    let outer = field.grid().outer();
    let w = eta.iter().map(|&e| if tau * e <= outer { field.w_at(tau * e) } else { f64::NAN }).collect();
    RescaledSnapshot { t: field.time(), tau, eta, w }
}

impl AttractorTrack {
    /// Sample of smallest residual.
    pub fn minimum(&self) -> Option<AttractorPoint> {
        self.points.iter().copied().min_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    /// First time after the minimum at which the residual reaches
    /// `threshold`, linearly interpolated; `None` if the minimum is not
    /// below the threshold or it is never recrossed.
    pub fn departure_time(&self, threshold: f64) -> Option<f64> {
        let k = self.points.iter().enumerate().min_by(|a, b| a.1.residual.total_cmp(&b.1.residual))?.0;
        if self.points[k].residual >= threshold {
            return None;
        }
        let w = self.points[k..].windows(2).find(|w| w[1].residual >= threshold)?;
        let (a, b) = (w[0], w[1]);
        Some(a.t + (threshold - a.residual) / (b.residual - a.residual) * (b.t - a.t))
    }

    /// Median of the local `T` over the samples up to departure whose
    /// residual is below `level`.
    pub fn attractor_blowup_time(&self, level: f64) -> Option<f64> {
        let end = self.departure_time(2.0 * level).unwrap_or(f64::INFINITY);
        let mut ts: Vec<f64> =
            self.points.iter().filter(|p| p.residual < level && p.t <= end).map(|p| p.t + p.tau).collect();
        if ts.is_empty() {
            return None;
        }
        ts.sort_by(f64::total_cmp);
        Some(ts[ts.len() / 2])
    }
}

/// Evolves one member and samples the distance to `W1` every `every` steps.
pub fn track_attractor(
    family: &Family,
    amplitude: f64,
    cfg: &EvolveConfig,
    table: &AttractorTable,
    every: usize,
) -> Result<AttractorTrack, CriticalError> {
    let every = every.max(1);
    let mut points = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_snapshot = f64::INFINITY;
    let mut count = 0usize;
    let mut current_escalated = false;
    let run = evolve_member(family, amplitude, cfg, |f, escalated| {
        if escalated != current_escalated {
            current_escalated = escalated;
            points.clear();
            snapshots.clear();
            next_snapshot = f64::INFINITY;
            count = 0;
        }
        count += 1;
        if count % every != 0 {
            return;
        }
        if let Some(tau) = local_collapse_time(f, table.b) {
            points.push(AttractorPoint { t: f.time(), tau, residual: attractor_residual(f, tau, table) });
            if tau < next_snapshot && tau < f.grid().outer() {
                snapshots.push(rescaled_snapshot(f, tau));
                next_snapshot = tau * SNAPSHOT_RATIO;
            }
        }
    })?;
    Ok(AttractorTrack { run, points, snapshots })
}

/// Power law `observable ~ C epsilon^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub exponent_err: f64,
    pub intercept: f64,
    /// RMS residual in natural-log units.
    pub residual: f64,
    /// `(ln epsilon, ln observable)`.
    pub points: Vec<(f64, f64)>,
    pub line: LineFit,
}

/// Log-log fit requiring at least four points over at least two decades
/// of `epsilon`.
pub fn fit_scaling(epsilon: &[f64], observable: &[f64]) -> Result<ScalingFit, CriticalError> {
    if epsilon.len() != observable.len() {
        return Err(CriticalError::Fit("input lengths differ".into()));
    }
    if epsilon.len() < 4 {
        return Err(CriticalError::Fit(format!("need at least 4 points, got {}", epsilon.len())));
    }
    if epsilon.iter().chain(observable).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CriticalError::Fit("values must be positive and finite".into()));
    }
    let (mn, mx) = epsilon.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if (mx / mn).log10() < 2.0 - 1e-9 {
        return Err(CriticalError::Fit(format!("epsilon spans only {:.2} decades", (mx / mn).log10())));
    }
    let line = loglog_fit(epsilon, observable).map_err(|e| CriticalError::Fit(e.to_string()))?;
    Ok(ScalingFit {
        exponent: line.slope,
        exponent_err: line.slope_err,
        intercept: line.intercept,
        residual: line.rms,
        points: epsilon.iter().zip(observable).map(|(e, o)| (e.ln(), o.ln())).collect(),
        line,
    })
}

/// A run at `A* +- epsilon` with its departure time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRun {
    pub epsilon: f64,
    /// `+1` above threshold, `-1` below.
    pub side: i8,
    pub track: AttractorTrack,
    pub departure: Option<f64>,
}

/// `T - t*` against `epsilon` for all ladder runs with a departure time.
pub fn fit_departure_scaling(runs: &[LadderRun], blowup_time: f64) -> Result<ScalingFit, CriticalError> {
    let (eps, obs): (Vec<f64>, Vec<f64>) =
        runs.iter().filter_map(|r| r.departure.map(|t| (r.epsilon, blowup_time - t))).unzip();
    fit_scaling(&eps, &obs)
}

/// Peak of `e(t, 0)` against `epsilon` for the dispersing ladder runs.
pub fn fit_density_scaling(runs: &[LadderRun]) -> Result<ScalingFit, CriticalError> {
    let (eps, obs): (Vec<f64>, Vec<f64>) = runs
        .iter()
        .filter(|r| r.side < 0 && r.track.run.outcome == Outcome::Dispersal)
        .map(|r| (r.epsilon, r.track.run.peak_density.1))
        .unzip();
    fit_scaling(&eps, &obs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub evolve: EvolveConfig,
    pub family: Family,
    pub bracket: (f64, f64),
    pub width: f64,
    /// `epsilon_j = 10^{-j} A*`.
    pub ladder: Vec<i32>,
    /// Residual level that marks departure from `W1`.
    pub departure_threshold: f64,
    /// Residual sampling interval in steps.
    pub residual_every: usize,
    pub residual_points: usize,
    /// Worker threads for the independent runs after the bisection.
    pub jobs: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            evolve: EvolveConfig::default(),
            family: Family::default(),
            bracket: (0.1, 0.2),
            width: 1e-6,
            ladder: vec![2, 3, 4, 5],
            departure_threshold: 0.15,
            residual_every: 4,
            residual_points: 201,
            jobs: 1,
        }
    }
}

/// Everything produced by [`run_campaign`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub threshold: ThresholdRecord,
    pub critical_amplitude: f64,
    /// Runs at the final bracket ends, below then above.
    pub marginal: [AttractorTrack; 2],
    /// Run at twice the critical amplitude.
    pub far: AttractorTrack,
    pub ladder: Vec<LadderRun>,
    /// Median local `T` over the attractor phase of the closer marginal run.
    pub blowup_time: f64,
    pub departure_fit: Result<ScalingFit, String>,
    pub density_fit: Result<ScalingFit, String>,
}

/// Runs `f` on every item with up to `jobs` threads; results keep the
/// input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_inner().unwrap().into_iter().map(|r| r.expect("every item processed")).collect()
}

/// Bisection, attractor tracks for the marginal pair and a far run, and the
/// epsilon ladder with both scaling fits.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign, CriticalError> {
    let threshold = bisect_threshold(&cfg.family, cfg.bracket.0, cfg.bracket.1, cfg.width, &cfg.evolve)?;
    let table = AttractorTable::w1(cfg.residual_points)?;
    let a_star = threshold.critical_amplitude();
    let (lo, hi) = threshold.final_bracket();

    let mut amplitudes = vec![(lo, 0.0, 0i8), (hi, 0.0, 0), (2.0 * a_star, 0.0, 0)];
    for &j in &cfg.ladder {
        let eps = 10f64.powi(-j) * a_star;
        amplitudes.push((a_star - eps, eps, -1));
        amplitudes.push((a_star + eps, eps, 1));
    }
    let tracks = parallel_map(&amplitudes, cfg.jobs, |&(a, _, _)| {
        track_attractor(&cfg.family, a, &cfg.evolve, &table, cfg.residual_every)
    });
    let mut tracks = tracks.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter();
    let marginal = [tracks.next().unwrap(), tracks.next().unwrap()];
    let far = tracks.next().unwrap();
    let ladder: Vec<LadderRun> = amplitudes[3..]
        .iter()
        .zip(tracks)
        .map(|(&(_, epsilon, side), track)| {
            let departure = track.departure_time(cfg.departure_threshold);
            LadderRun { epsilon, side, track, departure }
        })
        .collect();

    let closer = marginal
        .iter()
        .filter_map(|t| t.minimum().map(|m| (m.residual, t)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, t)| t)
        .ok_or_else(|| CriticalError::Fit("marginal runs produced no attractor samples".into()))?;
    let blowup_time = closer
        .attractor_blowup_time(0.5 * cfg.departure_threshold)
        .ok_or_else(|| CriticalError::Fit("closer marginal run never approached W1".into()))?;
    let departure_fit = fit_departure_scaling(&ladder, blowup_time).map_err(|e| e.to_string());
    let density_fit = fit_density_scaling(&ladder).map_err(|e| e.to_string());
    Ok(Campaign {
        threshold,
        critical_amplitude: a_star,
        marginal,
        far,
        ladder,
        blowup_time,
        departure_fit,
        density_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::CompositeGrid;

    #[test]
    fn scaling_fit_recovers_injected_exponents() {
        let eps: Vec<f64> = (2..=5).map(|j| 0.1443 * 10f64.powi(-j)).collect();
        for p in [0.2, -0.8] {
            let obs: Vec<f64> = eps.iter().map(|e| 3.7 * e.powf(p)).collect();
            let f = fit_scaling(&eps, &obs).unwrap();
            assert!((f.exponent - p).abs() < 1e-3);
            assert!(f.residual < 0.1);
            assert_eq!(f.points.len(), 4);
        }
        let noisy: Vec<f64> = eps.iter().enumerate().map(|(i, e)| e.powf(0.2) * (1.0 + 0.05 * (-1f64).powi(i as i32))).collect();
        let f = fit_scaling(&eps, &noisy).unwrap();
        assert!(f.residual > 0.0 && (f.exponent - 0.2).abs() < 0.02);
    }

    #[test]
    fn scaling_fit_refuses_thin_data() {
        assert!(fit_scaling(&[1e-2, 1e-3, 1e-4], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_scaling(&[1e-2, 5e-3, 2e-3, 1.5e-3], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_scaling(&[1e-2, 1e-3, 1e-4, 1e-5], &[1.0, -2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn departure_time_interpolates_recrossing() {
        let res = [0.5, 0.2, 0.05, 0.01, 0.05, 0.1, 0.2, 0.4];
        let track = AttractorTrack {
            run: RunSummary {
                amplitude: 0.0,
                outcome: Outcome::Dispersal,
                termination: Termination::Dispersed,
                final_time: 1.0,
                steps: 0,
                depth: 1,
                peak_density: (0.0, 0.0),
                blowup_time: None,
                escalated: false,
            },
            points: res
                .iter()
                .enumerate()
                .map(|(i, &r)| AttractorPoint { t: i as f64, tau: 10.0 - i as f64, residual: r })
                .collect(),
            snapshots: Vec::new(),
        };
        assert_eq!(track.minimum().unwrap().t, 3.0);
        assert!((track.departure_time(0.15).unwrap() - 5.5).abs() < 1e-12);
        assert!(track.departure_time(0.005).is_none());
        assert!(track.departure_time(1.0).is_none());
        // samples at t = 2, 3, 4 all have local T = 10
        assert_eq!(track.attractor_blowup_time(0.075), Some(10.0));
    }

    #[test]
    fn w1_data_has_zero_residual() {
        let p = build_profile(1, &ShootingConfig::default()).unwrap();
        let table = AttractorTable::new(&p, 101);
        assert_eq!(table.w[0], 1.0);
        let tau = 0.3;
        let grid = CompositeGrid::uniform(2.0, 20000);
        // both branches
        for s in [1.0, -1.0] {
            let f = RadialField::from_fn(5, grid.clone(), |r| s * p.sign * p.w_eta(r / tau).unwrap_or(p.sign), |_| 0.0)
                .unwrap();
            let est = local_collapse_time(&f, table.b).unwrap();
            assert!((est - tau).abs() < 1e-6 * tau, "{est}");
            assert!(attractor_residual(&f, tau, &table) < 1e-6);
        }
        let w0 = RadialField::from_fn(5, grid, |r| {
            let e = r / tau;
            (1.0 - e * e) / (1.0 + 0.6 * e * e)
        }, |_| 0.0)
        .unwrap();
        assert!(attractor_residual(&w0, tau, &table) > 0.3);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        let serial = parallel_map(&items, 1, |x| x * x);
        let threaded = parallel_map(&items, 4, |x| x * x);
        assert_eq!(serial, threaded);
        assert!(parallel_map(&Vec::<u64>::new(), 3, |x| *x).is_empty());
    }

    #[test]
    fn coarse_bisection_keeps_labels() {
        let cfg = EvolveConfig { base_cells: 800, ..Default::default() };
        let rec = bisect_threshold(&Family::default(), 0.1, 0.2, 0.02, &cfg).unwrap();
        assert!(rec.converged());
        for w in rec.brackets.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!(b.0 >= a.0 && b.1 <= a.1);
            assert!(((b.1 - b.0) - 0.5 * (a.1 - a.0)).abs() < 1e-15);
        }
        let (lo, hi) = rec.final_bracket();
        for r in &rec.runs {
            if r.amplitude <= lo {
                assert_eq!(r.outcome, Outcome::Dispersal);
            }
            if r.amplitude >= hi {
                assert_eq!(r.outcome, Outcome::Blowup);
            }
        }
        assert!(lo < 0.1443 && hi > 0.1443);
        assert!(matches!(bisect_threshold(&Family::default(), 0.2, 0.3, 0.01, &cfg), Err(CriticalError::Bracket(_))));
    }
}
