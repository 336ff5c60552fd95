//! Explicit Runge-Kutta integration.
//!
//! [`integrate_adaptive`] runs the Dormand-Prince 5(4) pair with standard
//! embedded error control and keeps the continuous extension of every accepted
//! step, so the returned [`OdeSolution`] can be evaluated anywhere on the
//! covered interval. Event functions are monitored at step ends and refined by
//! bisection on the dense output to machine resolution.
//!
//! [`Rk4Stepper`] is a fixed-step classical RK4 used by the method-of-lines
//! evolution, where the spectrum of the semi-discrete operator sits on the
//! imaginary axis.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate integration span [{0}, {1}]")]
    DegenerateSpan(f64, f64),
    #[error("right-hand side is not finite at t = {0}")]
    NonFiniteRhs(f64),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
}

/// Tolerances and step limits for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `None` picks one from the initial slope.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Terminates the integration once `|y[component]| > limit`.
    pub state_bound: Option<StateBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StateBound {
    pub component: usize,
    pub limit: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            min_step: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            state_bound: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(OdeError::InvalidConfig("need 0 < min_step <= max_step".into()));
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidConfig("max_steps must be positive".into()));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return Err(OdeError::InvalidConfig("initial_step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    ReachedEnd,
    Event,
    StepLimit,
    StateBound,
}

/// Which sign changes of an event function count as hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

/// An event function `g(t, y)` together with its handling rules.
pub struct Event<'a> {
    pub func: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub terminal: bool,
    pub direction: Direction,
}

impl<'a> Event<'a> {
    pub fn new(func: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Self { func: Box::new(func), terminal: false, direction: Direction::Either }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit {
    /// Index into the event list passed to the integrator.
    pub index: usize,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Continuous extension of one accepted step: y(t0 + θh) as a quartic in θ.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    rc: Vec<f64>,
}

impl Segment {
    fn eval_into(&self, theta: f64, n: usize, out: &mut [f64]) {
        let t1 = 1.0 - theta;
        for i in 0..n {
            let r = &self.rc;
            out[i] = r[i]
                + theta
                    * (r[n + i]
                        + t1 * (r[2 * n + i] + theta * (r[3 * n + i] + t1 * r[4 * n + i])));
        }
    }
}

/// Accepted steps of an integration with their dense output.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub termination: Termination,
    pub events: Vec<EventHit>,
    pub stats: Stats,
    segments: Vec<Segment>,
    dim: usize,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn last_state(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start()
    }

    /// True if `t` lies in the covered interval.
    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = (self.t_start(), self.t_end());
        t >= a.min(b) && t <= a.max(b)
    }

    /// Dense-output evaluation; `None` outside the covered interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out).then_some(out)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> bool {
        if !self.covers(t) {
            return false;
        }
        let fwd = self.forward();
        // first sample abscissa not before t in the direction of integration
        let idx = self
            .ts
            .partition_point(|&s| if fwd { s < t } else { s > t });
        if idx < self.ts.len() && self.ts[idx] == t {
            out.copy_from_slice(&self.ys[idx]);
            return true;
        }
        let seg = &self.segments[idx.saturating_sub(1).min(self.segments.len() - 1)];
        seg.eval_into((t - seg.t0) / seg.h, self.dim, out);
        true
    }

    /// Samples of one component at the stored abscissae.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.ys.iter().map(|y| y[k]).collect()
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Work {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    err: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

// One DP5 step from (t, y) with k[0] = f(t, y) already filled; leaves the
// 5th-order result in w.ynew, f(t+h, ynew) in k[6], and returns the scaled
// error norm.
fn dp5_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, w: &mut Work, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let Work { k, ytmp, ynew, err } = w;
    for i in 0..n {
        ytmp[i] = y[i] + h * A21 * k[0][i];
    }
    f(t + C2 * h, ytmp, &mut k[1]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    f(t + C3 * h, ytmp, &mut k[2]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    f(t + C4 * h, ytmp, &mut k[3]);
    for i in 0..n {
        ytmp[i] =
            y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    f(t + C5 * h, ytmp, &mut k[4]);
    for i in 0..n {
        ytmp[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    f(t + h, ytmp, &mut k[5]);
    for i in 0..n {
        ynew[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    let (head, tail) = k.split_at_mut(6);
    f(t + h, ynew, &mut tail[0]);
    let k7 = &tail[0];
    let mut acc = 0.0;
    for i in 0..n {
        err[i] = h
            * (E1 * head[0][i] + E3 * head[2][i] + E4 * head[3][i] + E5 * head[4][i]
                + E6 * head[5][i]
                + E7 * k7[i]);
        let sk = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
        acc += (err[i] / sk).powi(2);
    }
    (acc / n as f64).sqrt()
}

fn dense_coefficients(y: &[f64], h: f64, w: &Work) -> Vec<f64> {
    let n = y.len();
    let mut rc = vec![0.0; 5 * n];
    let k = &w.k;
    for i in 0..n {
        let ydiff = w.ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        rc[i] = y[i];
        rc[n + i] = ydiff;
        rc[2 * n + i] = bspl;
        rc[3 * n + i] = ydiff - h * k[6][i] - bspl;
        rc[4 * n + i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                + D7 * k[6][i]);
    }
    rc
}

fn rms_scaled(v: &[f64], y: &[f64], cfg: &IntegratorConfig) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (cfg.atol + cfg.rtol * b.abs())).powi(2))
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], cfg: &IntegratorConfig, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let d0 = rms_scaled(y0, y0, cfg);
    let d1 = rms_scaled(f0, y0, cfg);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs()).min(cfg.max_step);
    let dir = span.signum();
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + dir * h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y0, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span.abs()).min(cfg.max_step).max(cfg.min_step)
}

/// Adaptive DP5 integration of `y' = rhs(t, y)` from `span.0` to `span.1`
/// (either orientation).
pub fn integrate_adaptive<F>(
    rhs: F,
    y0: &[f64],
    span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_with_events(rhs, y0, span, &[], config)
}

/// Adaptive integration that also tracks sign changes of event functions.
///
/// Every root found on an accepted step is refined on the dense output to a
/// bracket of a few ulps in t and recorded in `OdeSolution::events`. The first
/// terminal root stops the integration there.
pub fn integrate_with_events<F>(
    mut rhs: F,
    y0: &[f64],
    span: (f64, f64),
    events: &[Event<'_>],
    config: &IntegratorConfig,
) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    config.validate()?;
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(OdeError::DegenerateSpan(t0, t1));
    }
    let n = y0.len();
    let dir = (t1 - t0).signum();
    let mut w = Work::new(n);
    rhs(t0, y0, &mut w.k[0]);
    let mut stats = Stats { rhs_evals: 1, ..Stats::default() };
    if w.k[0].iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteRhs(t0));
    }
    let mut h = match config.initial_step {
        Some(h) => h.min(config.max_step).min((t1 - t0).abs()),
        None => {
            stats.rhs_evals += 1;
            initial_step(&mut rhs, t0, y0, &w.k[0].clone(), config, t1 - t0)
        }
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.func)(t0, y0)).collect();
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        termination: Termination::ReachedEnd,
        events: Vec::new(),
        stats,
        segments: Vec::new(),
        dim: n,
    };
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if (t1 - t) * dir <= 0.0 {
            break;
        }
        if steps >= config.max_steps {
            sol.termination = Termination::StepLimit;
            break;
        }
        let remaining = (t1 - t).abs();
        let mut hs = h.min(remaining);
        // avoid a sliver step at the end
        if remaining - hs < 1e-12 * remaining.max(1.0) {
            hs = remaining;
        }
        let err = dp5_step(&mut rhs, t, &y, dir * hs, &mut w, config);
        sol.stats.rhs_evals += 6;
        steps += 1;
        let finite = err.is_finite() && w.ynew.iter().all(|v| v.is_finite());
        if finite && err <= 1.0 {
            let t_new = if hs == remaining { t1 } else { t + dir * hs };
            let seg = Segment { t0: t, h: t_new - t, rc: dense_coefficients(&y, t_new - t, &w) };
            sol.stats.accepted += 1;

            // events on this step
            let mut hits: Vec<(f64, usize)> = Vec::new();
            let g_new: Vec<f64> = events.iter().map(|e| (e.func)(t_new, &w.ynew)).collect();
            for (j, ev) in events.iter().enumerate() {
                let (ga, gb) = (g_prev[j], g_new[j]);
                let rising = ga < 0.0 && gb >= 0.0;
                let falling = ga > 0.0 && gb <= 0.0;
                let hit = match ev.direction {
                    Direction::Rising => rising,
                    Direction::Falling => falling,
                    Direction::Either => rising || falling,
                };
                if hit {
                    let te = refine_root(&seg, n, ga, &*ev.func);
                    hits.push((te, j));
                }
            }
            hits.sort_by(|a, b| ((a.0 - t) * dir).partial_cmp(&((b.0 - t) * dir)).unwrap());
            let mut stop_at: Option<f64> = None;
            for &(te, j) in &hits {
                let mut ye = vec![0.0; n];
                seg.eval_into((te - seg.t0) / seg.h, n, &mut ye);
                sol.events.push(EventHit { index: j, t: te, y: ye });
                if events[j].terminal {
                    stop_at = Some(te);
                    break;
                }
            }

            if let Some(te) = stop_at {
                let mut ye = vec![0.0; n];
                seg.eval_into((te - seg.t0) / seg.h, n, &mut ye);
                sol.segments.push(seg);
                sol.ts.push(te);
                sol.ys.push(ye);
                sol.termination = Termination::Event;
                break;
            }

            sol.segments.push(seg);
            t = t_new;
            y.copy_from_slice(&w.ynew);
            sol.ts.push(t);
            sol.ys.push(y.clone());
            g_prev = g_new;
            let (k0, rest) = w.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);

            if let Some(b) = config.state_bound {
                if y[b.component].abs() > b.limit {
                    sol.termination = Termination::StateBound;
                    break;
                }
            }
            let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (hs * fac).min(config.max_step);
            last_rejected = false;
        } else {
            sol.stats.rejected += 1;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.25 };
            h = hs * fac;
            last_rejected = true;
            if h < config.min_step {
                return Err(OdeError::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(sol)
}

fn refine_root(seg: &Segment, n: usize, g_lo: f64, g: &dyn Fn(f64, &[f64]) -> f64) -> f64 {
    let mut buf = vec![0.0; n];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut glo = g_lo;
    let scale = seg.t0.abs().max((seg.t0 + seg.h).abs()).max(1.0);
    while (hi - lo) * seg.h.abs() > 4.0 * f64::EPSILON * scale && hi - lo > f64::EPSILON {
        let mid = 0.5 * (lo + hi);
        seg.eval_into(mid, n, &mut buf);
        let gm = g(seg.t0 + mid * seg.h, &buf);
        if gm == 0.0 {
            return seg.t0 + mid * seg.h;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    seg.t0 + hi * seg.h
}

/// Outcome of [`locate_event`].
#[derive(Debug, Clone, PartialEq)]
pub enum EventOutcome {
    Hit { t: f64, y: Vec<f64> },
    NoEvent,
}

/// Integrates until the first sign change of `event`, if any.
pub fn locate_event<F, G>(
    rhs: F,
    y0: &[f64],
    span: (f64, f64),
    event: G,
    config: &IntegratorConfig,
) -> Result<EventOutcome, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: Fn(f64, &[f64]) -> f64,
{
    let ev = [Event::new(event).terminal()];
    let sol = integrate_with_events(rhs, y0, span, &ev, config)?;
    Ok(match sol.events.into_iter().next() {
        Some(hit) => EventOutcome::Hit { t: hit.t, y: hit.y },
        None => EventOutcome::NoEvent,
    })
}

/// Classical fourth-order Runge-Kutta with caller-chosen steps.
pub struct Rk4Stepper {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Stepper {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        assert_eq!(n, self.k1.len(), "stepper dimension mismatch");
        f(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
